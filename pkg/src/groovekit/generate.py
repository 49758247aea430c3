"""Groove completion: trivial baselines and ingestion of external model output.

The completion task: given the first 2 measures of a groove, produce up
to 14 more. Two baselines bracket the quality space from below -- a
coin-flip generator with no structure at all, and verbatim repetition of
the second prompt measure with no variation at all. Completions produced
elsewhere (e.g. by a finetuned language model reached over an API) enter
through ``ingest_completions`` as JSONL records and are decoded in repair
mode so that even boundary-mangled output stays evaluable.

Every generator preserves the prompt verbatim as measures 0-1 and is pure
given (request, seed), so batch generation parallelizes freely.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .drumroll import (
    EMPTY_COMPLETION,
    END,
    SEP,
    Anomaly,
    EmptyInput,
    decode_repair,
    encode_fragment,
)
from .grid import CELLS_PER_MEASURE, GrooveGrid, HIT, Measure, REST

log = logging.getLogger(__name__)

PROMPT_MEASURES = 2
DEFAULT_MAX_MEASURES = 14
MAX_TOTAL_MEASURES = 16

_U64_MASK = (1 << 64) - 1
_U64_SPAN = 1 << 64


class SplitMix64:
    """SplitMix64: the 64-bit generator from Steele, Lea & Flood (2014).

    Chosen because it is tiny, fully specified in integer arithmetic, and
    therefore bit-identical across platforms and Python builds -- seeded
    baseline runs must reproduce exactly everywhere. The update
    constants are the reference ones; known-answer vectors are pinned in
    the test suite.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & _U64_MASK

    def next_u64(self) -> int:
        """The next 64-bit output word."""
        self._state = (self._state + 0x9E3779B97F4A7C15) & _U64_MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64_MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64_MASK
        return z ^ (z >> 31)


@dataclass(frozen=True)
class CompletionRequest:
    """A 2-measure prompt plus generation bounds."""

    prompt: GrooveGrid
    max_measures: int = DEFAULT_MAX_MEASURES
    seed: int | None = None

    def __post_init__(self) -> None:
        if len(self.prompt.measures) != PROMPT_MEASURES:
            raise ValueError(
                f"prompt must have exactly {PROMPT_MEASURES} measures, "
                f"got {len(self.prompt.measures)}"
            )
        if not 1 <= self.max_measures <= DEFAULT_MAX_MEASURES:
            raise ValueError(
                f"max_measures must be in 1..{DEFAULT_MAX_MEASURES}, got {self.max_measures}"
            )


@dataclass
class GeneratedGroove:
    """A prompt plus completion, with provenance from the decoder."""

    full: GrooveGrid
    generator_tag: str
    repaired: bool = False
    anomalies: list[Anomaly] = field(default_factory=list)

    @property
    def completion_measures(self) -> list[Measure]:
        return self.full.measures[PROMPT_MEASURES:]


def random_complete(req: CompletionRequest, p_hit: float = 0.5) -> GeneratedGroove:
    """Append measures whose cells are independent coin flips.

    Each of the 96 cells of each appended measure is a hit with
    probability ``p_hit``. Cells are drawn in flat-form order (steps
    outer, lanes inner), measures in sequence, one SplitMix64 word per
    cell, so output is bit-identical for a given seed on any platform.
    """
    if req.seed is None:
        raise ValueError("random completion requires a seed")
    if not 0.0 <= p_hit <= 1.0:
        raise ValueError(f"p_hit must be within [0, 1], got {p_hit}")
    rng = SplitMix64(req.seed)
    threshold = min(int(p_hit * _U64_SPAN), _U64_SPAN)
    measures = list(req.prompt.measures)
    for _ in range(req.max_measures):
        cells = [
            HIT if rng.next_u64() < threshold else REST
            for _ in range(CELLS_PER_MEASURE)
        ]
        measures.append(Measure("".join(cells)))
    return GeneratedGroove(
        full=replace(req.prompt, measures=measures),
        generator_tag="random",
    )


def repeat_complete(req: CompletionRequest) -> GeneratedGroove:
    """Append the second prompt measure verbatim, max_measures times."""
    second = req.prompt.measures[1]
    measures = list(req.prompt.measures) + [second] * req.max_measures
    return GeneratedGroove(
        full=replace(req.prompt, measures=measures),
        generator_tag="repeat",
    )


def _prompts_by_id(prompts: Sequence[GrooveGrid]) -> dict[str, GrooveGrid]:
    by_id: dict[str, GrooveGrid] = {}
    for groove in prompts:
        if len(groove.measures) < PROMPT_MEASURES:
            log.warning("groove %r has fewer than 2 measures; skipped", groove.source_id)
            continue
        if groove.source_id in by_id:
            log.warning("duplicate groove id %r; keeping the first", groove.source_id)
            continue
        by_id[groove.source_id] = groove
    return by_id


def ingest_completions(
    jsonl_path: str | Path,
    prompts: Sequence[GrooveGrid],
    *,
    generator_tag: str = "external",
) -> list[GeneratedGroove]:
    """Read externally generated completions and attach them to their prompts.

    The file holds one JSON record per line with ``id`` and ``completion``
    fields. Records are matched to prompts by id, never by order, so
    partial or shuffled result files are fine; unknown ids are logged and
    skipped. Each completion is decoded in repair mode, prefixed with its
    prompt's first 2 measures, and truncated to 16 measures total. A
    completion that decodes to nothing yields the bare 2-measure prompt
    flagged with an ``empty_completion`` anomaly. Results are sorted by id.
    """
    by_id = _prompts_by_id(prompts)
    seen: set[str] = set()
    out: list[GeneratedGroove] = []
    text = Path(jsonl_path).read_text(encoding="utf-8")
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            groove_id = record["id"]
            completion = record["completion"]
            if not isinstance(groove_id, str) or not isinstance(completion, str):
                raise TypeError("id and completion must be strings")
        except (json.JSONDecodeError, TypeError, KeyError):
            log.warning("%s:%d: malformed completion record; skipped", jsonl_path, line_no)
            continue
        if groove_id not in by_id:
            log.warning("%s:%d: unknown id %r; skipped", jsonl_path, line_no, groove_id)
            continue
        if groove_id in seen:
            log.warning("%s:%d: duplicate id %r; keeping the first", jsonl_path, line_no, groove_id)
            continue
        seen.add(groove_id)
        source = by_id[groove_id]
        prompt_measures = source.measures[:PROMPT_MEASURES]
        try:
            decoded, doc = decode_repair(completion)
            measures = prompt_measures + decoded.measures
            repaired = doc.repaired
            anomalies = list(doc.anomalies)
        except EmptyInput:
            measures = list(prompt_measures)
            repaired = True
            anomalies = [Anomaly(0, EMPTY_COMPLETION)]
        out.append(
            GeneratedGroove(
                full=replace(source, measures=measures[:MAX_TOTAL_MEASURES]),
                generator_tag=generator_tag,
                repaired=repaired,
                anomalies=anomalies,
            )
        )
    out.sort(key=lambda g: g.full.source_id)
    return out


def completion_text(generated: GeneratedGroove) -> str:
    """The drumroll text of a groove's non-prompt measures, END-terminated."""
    return encode_fragment(generated.completion_measures, terminator=END)


def prompt_text(groove: GrooveGrid) -> str:
    """The drumroll text of a groove's first 2 measures, SEP-terminated.

    Concatenating this with a strictly valid completion yields one strict
    drumroll document for the whole groove.
    """
    if len(groove.measures) < PROMPT_MEASURES:
        raise ValueError(f"groove {groove.source_id!r} has fewer than 2 measures")
    return encode_fragment(groove.measures[:PROMPT_MEASURES], terminator=SEP)


def export_prompts(corpus: Sequence[GrooveGrid], out_path: str | Path) -> int:
    """Write {"id", "prompt"} JSONL for external generation; returns the count.

    Grooves are sorted by id; grooves with fewer than 2 measures are
    skipped with a warning.
    """
    from .ioutil import atomic_write_text

    lines: list[str] = []
    for groove in sorted(corpus, key=lambda g: g.source_id):
        if len(groove.measures) < PROMPT_MEASURES:
            log.warning("groove %r has fewer than 2 measures; skipped", groove.source_id)
            continue
        lines.append(
            json.dumps({"id": groove.source_id, "prompt": prompt_text(groove)})
        )
    atomic_write_text(out_path, "".join(line + "\n" for line in lines))
    return len(lines)
