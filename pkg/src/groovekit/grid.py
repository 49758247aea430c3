"""Quantized drum grid model and the corpus preprocessing rules.

Raw note events become a boolean grid of measures x 16 steps x 6 drum
lanes. The preprocessing applies the corpus simplifications: snap every
note to the nearest 16th-note timestamp, discard velocity, reduce all
articulations to six basic drum voices, truncate to the first 16
measures, and drop leading measures whose first quarter note is a rest.
Grooves shorter than 8 measures after that are rejected.

All functions here are pure; batch conversion over many files can run in
parallel without shared state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Iterator, Mapping, Sequence

if TYPE_CHECKING:
    from .smf import NoteEvent

STEPS_PER_MEASURE = 16
LANE_COUNT = 6
CELLS_PER_MEASURE = STEPS_PER_MEASURE * LANE_COUNT

HIT = "o"
REST = "-"

MAX_MEASURES = 16
MIN_MEASURES = 8


class DrumLane(IntEnum):
    """The six drum voices, in drumroll column order."""

    HIHAT = 0
    CRASH = 1
    RIDE = 2
    BASS = 3
    SNARE = 4
    TOM = 5


_LANE_BY_NAME = {lane.name: lane for lane in DrumLane}


def parse_lane_name(name: str) -> DrumLane:
    """Resolve a lane name such as ``hihat`` or ``hi-hat`` (case-insensitive)."""
    key = name.strip().upper().replace("-", "").replace("_", "")
    try:
        return _LANE_BY_NAME[key]
    except KeyError:
        raise ValueError(f"unknown drum lane {name!r}") from None


@dataclass(frozen=True)
class Measure:
    """One measure of the grid, stored as a 96-character 'o'/'-' string.

    ``flat_form`` is row-major with steps outer and lanes inner, so the
    cell (step, lane) lives at index ``step * 6 + lane``. This string is
    the canonical form used for edit distance and duplicate counting.
    """

    flat_form: str = REST * CELLS_PER_MEASURE

    def __post_init__(self) -> None:
        if len(self.flat_form) != CELLS_PER_MEASURE:
            raise ValueError(
                f"flat_form must be {CELLS_PER_MEASURE} characters, got {len(self.flat_form)}"
            )
        if self.flat_form.strip(HIT + REST):
            raise ValueError("flat_form may only contain 'o' and '-'")

    @classmethod
    def empty(cls) -> "Measure":
        return cls()

    @classmethod
    def from_hits(cls, hits: Iterable[tuple[int, int]]) -> "Measure":
        """Build a measure from (step, lane) pairs; everything else rests."""
        cells = [REST] * CELLS_PER_MEASURE
        for step, lane in hits:
            if not 0 <= step < STEPS_PER_MEASURE:
                raise ValueError(f"step {step} out of range")
            if not 0 <= lane < LANE_COUNT:
                raise ValueError(f"lane {lane} out of range")
            cells[step * LANE_COUNT + int(lane)] = HIT
        return cls("".join(cells))

    @classmethod
    def from_lines(cls, lines: Sequence[str]) -> "Measure":
        """Build a measure from 16 six-character drumroll lines."""
        if len(lines) != STEPS_PER_MEASURE:
            raise ValueError(f"expected {STEPS_PER_MEASURE} lines, got {len(lines)}")
        return cls("".join(lines))

    @classmethod
    def from_steps(cls, steps: Sequence[Sequence[bool]]) -> "Measure":
        """Build a measure from a 16x6 boolean matrix."""
        if len(steps) != STEPS_PER_MEASURE:
            raise ValueError(f"expected {STEPS_PER_MEASURE} steps, got {len(steps)}")
        cells: list[str] = []
        for row in steps:
            if len(row) != LANE_COUNT:
                raise ValueError(f"expected {LANE_COUNT} lanes per step, got {len(row)}")
            cells.extend(HIT if on else REST for on in row)
        return cls("".join(cells))

    @property
    def steps(self) -> tuple[tuple[bool, ...], ...]:
        """The 16x6 boolean matrix view of the measure."""
        flat = self.flat_form
        return tuple(
            tuple(flat[s * LANE_COUNT + l] == HIT for l in range(LANE_COUNT))
            for s in range(STEPS_PER_MEASURE)
        )

    def hit(self, step: int, lane: int) -> bool:
        return self.flat_form[step * LANE_COUNT + int(lane)] == HIT

    def line(self, step: int) -> str:
        """The six-character drumroll line for one step."""
        return self.flat_form[step * LANE_COUNT : (step + 1) * LANE_COUNT]

    def lines(self) -> list[str]:
        flat = self.flat_form
        return [flat[i : i + LANE_COUNT] for i in range(0, CELLS_PER_MEASURE, LANE_COUNT)]

    def hit_count(self) -> int:
        return self.flat_form.count(HIT)


@dataclass
class GrooveGrid:
    """A quantized groove: ordered measures plus corpus metadata."""

    measures: list[Measure] = field(default_factory=list)
    style: str = ""
    bpm: float = 120.0
    split: str = ""
    source_id: str = ""

    @property
    def measure_count(self) -> int:
        return len(self.measures)


class DrumMapError(ValueError):
    """Raised for malformed drum map config input."""


@dataclass(frozen=True)
class DrumMap:
    """Total mapping from MIDI pitch to drum lane; unmapped pitches drop."""

    table: Mapping[int, DrumLane]

    def lane_for(self, pitch: int) -> DrumLane | None:
        return self.table.get(pitch)

    def __contains__(self, pitch: int) -> bool:
        return pitch in self.table

    def items(self) -> Iterator[tuple[int, DrumLane]]:
        return iter(sorted(self.table.items()))


# General MIDI percussion pitches reduced to the six basic voices.
_GM_LANES: dict[DrumLane, tuple[int, ...]] = {
    DrumLane.BASS: (35, 36),
    DrumLane.SNARE: (37, 38, 39, 40),
    DrumLane.HIHAT: (42, 44, 46),
    DrumLane.CRASH: (49, 52, 55, 57),
    DrumLane.RIDE: (51, 53, 59),
    DrumLane.TOM: (41, 43, 45, 47, 48, 50, 58),
}


def default_drum_map() -> DrumMap:
    """The shipping default: a General-MIDI-percussion-based reduction."""
    table = {pitch: lane for lane, pitches in _GM_LANES.items() for pitch in pitches}
    return DrumMap(table)


def parse_drum_map(text: str, *, source: str = "<string>") -> DrumMap:
    """Parse drum map config text: '#' comments, lines of '<pitch> <lane>'.

    Later lines override earlier ones for the same pitch.
    """
    table: dict[int, DrumLane] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DrumMapError(f"{source}:{line_no}: expected '<pitch> <lane>', got {raw!r}")
        try:
            pitch = int(parts[0])
        except ValueError:
            raise DrumMapError(f"{source}:{line_no}: bad pitch {parts[0]!r}") from None
        if not 0 <= pitch <= 127:
            raise DrumMapError(f"{source}:{line_no}: pitch {pitch} outside 0..127")
        try:
            lane = parse_lane_name(parts[1])
        except ValueError as exc:
            raise DrumMapError(f"{source}:{line_no}: {exc}") from None
        table[pitch] = lane
    return DrumMap(table)


def load_drum_map(path: str | Path) -> DrumMap:
    """Read a drum map config file (UTF-8)."""
    path = Path(path)
    return parse_drum_map(path.read_text(encoding="utf-8"), source=str(path))


def roland_td11_drum_map() -> DrumMap:
    """The bundled Roland TD-11 kit mapping (the kit the corpus was recorded on)."""
    text = resources.files("groovekit.data").joinpath("roland_td11.map").read_text("utf-8")
    return parse_drum_map(text, source="roland_td11.map")


def grid_index(tick: int, ppq: int, *, tie_round_up: bool = False) -> int:
    """Snap an absolute tick to the nearest 16th-note grid index.

    A 16th note spans ppq/4 ticks. Ties (a tick exactly midway between two
    grid points) round to the earlier index unless ``tie_round_up`` is set.
    Exact integer arithmetic, no floating point.
    """
    if ppq <= 0:
        raise ValueError("ppq must be positive")
    q, r = divmod(4 * tick, ppq)
    if 2 * r > ppq or (2 * r == ppq and tie_round_up):
        return q + 1
    return q


def quantize(
    events: Iterable["NoteEvent"],
    ppq: int,
    drum_map: DrumMap,
    *,
    tie_round_up: bool = False,
    channels: Iterable[int] | None = None,
) -> GrooveGrid:
    """Quantize note events onto the 16th-note grid.

    Velocity-zero events are note-offs and are dropped; any other velocity
    counts as a hit (velocity itself is discarded). Pitches the map does
    not cover are dropped. ``channels`` optionally restricts which MIDI
    channels contribute; by default all channels do. The grid grows to
    hold the last event; nothing is truncated here.
    """
    if ppq <= 0:
        raise ValueError("ppq must be positive")
    allowed = None if channels is None else frozenset(channels)
    hits: list[tuple[int, int]] = []
    last_measure = -1
    for ev in events:
        if ev.tick < 0:
            raise ValueError(f"event tick must be non-negative, got {ev.tick}")
        if ev.velocity < 1:
            continue
        if allowed is not None and ev.channel not in allowed:
            continue
        lane = drum_map.lane_for(ev.pitch)
        if lane is None:
            continue
        idx = grid_index(ev.tick, ppq, tie_round_up=tie_round_up)
        measure, step = divmod(idx, STEPS_PER_MEASURE)
        hits.append((measure, step * LANE_COUNT + int(lane)))
        if measure > last_measure:
            last_measure = measure
    if last_measure < 0:
        return GrooveGrid(measures=[])
    rows = [bytearray(REST.encode() * CELLS_PER_MEASURE) for _ in range(last_measure + 1)]
    hit_byte = ord(HIT)
    for measure, cell in hits:
        rows[measure][cell] = hit_byte
    return GrooveGrid(measures=[Measure(row.decode()) for row in rows])


class Rejected(Exception):
    """A groove excluded from the corpus by the length rules (not a failure)."""

    def __init__(self, reason: str, detail: str = "") -> None:
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


def _first_quarter_has_hit(measure: Measure) -> bool:
    # Steps 0-3 across all lanes are the first 24 characters of flat_form.
    return HIT in measure.flat_form[: 4 * LANE_COUNT]


def trim_and_truncate(
    grid: GrooveGrid,
    *,
    max_measures: int = MAX_MEASURES,
    min_measures: int = MIN_MEASURES,
) -> GrooveGrid:
    """Drop leading measures that start on a rest, then cap the length.

    Leading measures with no hit anywhere in their first quarter note
    (steps 0-3) are removed until the first remaining measure has one.
    The result is truncated to ``max_measures``; if fewer than
    ``min_measures`` remain the groove is excluded via ``Rejected``.
    """
    measures = list(grid.measures)
    while measures and not _first_quarter_has_hit(measures[0]):
        measures.pop(0)
    measures = measures[:max_measures]
    if len(measures) < min_measures:
        raise Rejected(
            "too_short",
            f"{len(measures)} measures after lead-in trim (minimum {min_measures})",
        )
    return replace(grid, measures=measures)
