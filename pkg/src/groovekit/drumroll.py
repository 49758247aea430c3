"""Text codec for the drumroll groove representation.

A drumroll document is 16 six-character lines per measure ('o' = hit,
'-' = rest, columns in hihat/crash/ride/bass/snare/tom order), a ``SEP``
line between measures, and an ``END`` line after the last measure. The
full grammar lives in FORMAT.md; this file is its reference
implementation.

``decode_strict`` accepts exactly the grammar and is the exact inverse of
``encode``. ``decode_repair`` accepts anything a generative model might
emit: it collects content lines wherever they are, fixes their length and
alphabet, re-chunks them into measures, and records an anomaly for every
repair it applies. Repair is total (only completely empty input is an
error) and idempotent.

Line endings: output is LF-only; CR is tolerated and stripped on input.
``SEP``/``END`` match whole lines, case-sensitively, after surrounding
whitespace is stripped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator

from .grid import GrooveGrid, LANE_COUNT, Measure, STEPS_PER_MEASURE

SEP = "SEP"
END = "END"

# Anomaly kinds recorded by decode_repair (plus "empty_completion" used by
# the completion ingester for records whose text decodes to nothing).
BAD_CHAR = "bad_char"
BAD_LENGTH = "bad_length"
BLANK_LINE = "blank_line"
MISPLACED_SEP = "misplaced_sep"
PARTIAL_MEASURE = "partial_measure"
MISSING_END = "missing_end"
TRAILING_CONTENT = "trailing_content"
EMPTY_COMPLETION = "empty_completion"


class DrumrollError(ValueError):
    """Base class for drumroll format violations."""

    def __init__(self, message: str, line_no: int | None = None) -> None:
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class BadLineLength(DrumrollError):
    """A content line is not exactly six characters."""


class BadCharacter(DrumrollError):
    """A content line contains characters other than 'o' and '-'."""


class MisplacedSep(DrumrollError):
    """A SEP line does not sit between two complete 16-line measures."""


class MissingEnd(DrumrollError):
    """The document has no END line."""


class PartialMeasure(DrumrollError):
    """END arrived while the final measure had fewer than 16 lines."""


class TrailingContent(DrumrollError):
    """Content continues after the END line."""


class EmptyInput(DrumrollError):
    """The input contains no content lines at all."""


@dataclass(frozen=True)
class Anomaly:
    """One repair applied by the lenient decoder."""

    line_no: int
    kind: str


@dataclass
class DrumrollDoc:
    """A drumroll text plus its provenance: measure count and repair log."""

    text: str
    measure_count: int
    repaired: bool = False
    anomalies: list[Anomaly] = field(default_factory=list)


_LINE_RE = rf"[o\-]{{{LANE_COUNT}}}\n"
_BLOCK_RE = rf"(?:{_LINE_RE}){{{STEPS_PER_MEASURE}}}"
_STRICT_DOC_RE = re.compile(rf"(?:{_BLOCK_RE}{SEP}\n)*{_BLOCK_RE}{END}\n?")

_VALID_CHARS = frozenset("o-")


def encode_fragment(measures: list[Measure], *, terminator: str = END) -> str:
    """Encode measures as drumroll text ending with SEP or END.

    The END terminator closes a complete document; the SEP terminator
    produces a prompt fragment that a completion can be concatenated onto
    so that prompt + completion parses as one strict document.
    """
    if terminator not in (SEP, END):
        raise ValueError(f"terminator must be {SEP!r} or {END!r}")
    parts = ["\n".join(m.lines()) for m in measures]
    if not parts:
        return terminator + "\n"
    return ("\n" + SEP + "\n").join(parts) + "\n" + terminator + "\n"


def encode(grid: GrooveGrid) -> DrumrollDoc:
    """Encode a grid as a complete drumroll document."""
    if not grid.measures:
        raise ValueError("cannot encode a grid with no measures")
    return DrumrollDoc(
        text=encode_fragment(grid.measures),
        measure_count=len(grid.measures),
        repaired=False,
        anomalies=[],
    )


def _grid_from_valid_text(text: str) -> GrooveGrid:
    # Fast path for text already validated against the strict grammar.
    lines = text.split("\n")
    measures: list[Measure] = []
    pos = 0
    while lines[pos] != END:
        measures.append(Measure("".join(lines[pos : pos + STEPS_PER_MEASURE])))
        pos += STEPS_PER_MEASURE
        if lines[pos] == SEP:
            pos += 1
    return GrooveGrid(measures=measures)


def decode_strict(text: str) -> GrooveGrid:
    """Decode a drumroll document, rejecting any deviation from the grammar."""
    if "\r" not in text and _STRICT_DOC_RE.fullmatch(text):
        return _grid_from_valid_text(text)

    raw_lines = text.split("\n")
    if raw_lines and raw_lines[-1] == "":
        raw_lines.pop()
    pending: list[str] = []
    measures: list[Measure] = []
    ended = False
    for line_no, raw in enumerate(raw_lines, start=1):
        line = raw[:-1] if raw.endswith("\r") else raw
        if ended:
            raise TrailingContent(f"content after {END}", line_no)
        token = line.strip()
        if token == SEP:
            if len(pending) != STEPS_PER_MEASURE:
                raise MisplacedSep(
                    f"{SEP} after {len(pending)} lines of a measure", line_no
                )
            measures.append(Measure("".join(pending)))
            pending.clear()
        elif token == END:
            if len(pending) != STEPS_PER_MEASURE:
                raise PartialMeasure(
                    f"{END} after {len(pending)} lines of a measure", line_no
                )
            measures.append(Measure("".join(pending)))
            pending.clear()
            ended = True
        else:
            if len(line) != LANE_COUNT:
                raise BadLineLength(
                    f"expected {LANE_COUNT} characters, got {len(line)}", line_no
                )
            if line.strip("o-"):
                raise BadCharacter(f"characters outside 'o'/'-' in {line!r}", line_no)
            pending.append(line)
    if not ended:
        raise MissingEnd(f"no {END} line", len(raw_lines) if raw_lines else 1)
    return GrooveGrid(measures=measures)


def _repair_content_line(token: str, line_no: int, anomalies: list[Anomaly]) -> str:
    fixed = token
    if not _VALID_CHARS.issuperset(fixed):
        fixed = "".join(c if c in _VALID_CHARS else "-" for c in fixed)
        anomalies.append(Anomaly(line_no, BAD_CHAR))
    if len(fixed) != LANE_COUNT:
        anomalies.append(Anomaly(line_no, BAD_LENGTH))
        fixed = fixed[:LANE_COUNT].ljust(LANE_COUNT, "-")
    return fixed


def decode_repair(text: str) -> tuple[GrooveGrid, DrumrollDoc]:
    """Decode arbitrary text leniently, logging every fix as an anomaly.

    Content lines are collected in order regardless of SEP placement,
    padded/truncated to six characters with foreign characters mapped to
    rests, then re-chunked into 16-line measures; a trailing partial
    measure is padded with rest lines. Parsing stops at END (or the end of
    input, which is itself an anomaly). Raises ``EmptyInput`` when no
    content lines exist at all. Surrounding whitespace and CR line endings
    are tolerance, stripped on every line without an anomaly.

    Returns the decoded grid together with a ``DrumrollDoc`` whose text is
    the canonical re-encoding, so repairing that text again is a no-op.
    """
    if "\r" not in text and _STRICT_DOC_RE.fullmatch(text):
        grid = _grid_from_valid_text(text)
        doc = DrumrollDoc(
            text=encode_fragment(grid.measures),
            measure_count=len(grid.measures),
            repaired=False,
            anomalies=[],
        )
        return grid, doc

    raw_lines = text.split("\n")
    if raw_lines and raw_lines[-1] == "":
        raw_lines.pop()
    collected: list[str] = []
    anomalies: list[Anomaly] = []
    since_sep = 0
    saw_end = False
    last_line_no = 0
    for line_no, raw in enumerate(raw_lines, start=1):
        last_line_no = line_no
        token = raw.strip()
        if saw_end:
            if token:
                anomalies.append(Anomaly(line_no, TRAILING_CONTENT))
                break
            continue
        if token == END:
            saw_end = True
        elif token == SEP:
            if since_sep != STEPS_PER_MEASURE:
                anomalies.append(Anomaly(line_no, MISPLACED_SEP))
            since_sep = 0
        elif not token:
            anomalies.append(Anomaly(line_no, BLANK_LINE))
        else:
            collected.append(_repair_content_line(token, line_no, anomalies))
            since_sep += 1
    if not saw_end:
        anomalies.append(Anomaly(last_line_no, MISSING_END))
    if not collected:
        raise EmptyInput("no content lines in input")
    remainder = len(collected) % STEPS_PER_MEASURE
    if remainder:
        anomalies.append(Anomaly(last_line_no, PARTIAL_MEASURE))
        collected.extend(["-" * LANE_COUNT] * (STEPS_PER_MEASURE - remainder))
    measures = [
        Measure("".join(collected[i : i + STEPS_PER_MEASURE]))
        for i in range(0, len(collected), STEPS_PER_MEASURE)
    ]
    grid = GrooveGrid(measures=measures)
    doc = DrumrollDoc(
        text=encode_fragment(measures),
        measure_count=len(measures),
        repaired=bool(anomalies),
        anomalies=anomalies,
    )
    return grid, doc


def iter_documents(stream: str) -> Iterator[str]:
    """Split a multi-document drumroll stream on END lines.

    Blank lines between documents are skipped. A trailing fragment with
    content but no END is yielded too, so the repair decoder can flag it.
    """
    buffer: list[str] = []
    for raw in stream.split("\n"):
        token = raw.strip()
        if not token and not buffer:
            continue
        buffer.append(raw)
        if token == END:
            yield "\n".join(buffer) + "\n"
            buffer = []
    if any(line.strip() for line in buffer):
        yield "\n".join(buffer) + "\n"
