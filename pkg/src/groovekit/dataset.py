"""Groove corpus ingestion: metadata, filtering, batch conversion, emission.

The corpus ships as a directory of MIDI files plus an ``info.csv``
describing each performance (drummer, session, style, tempo, beat vs.
fill, time signature, split). This module loads that metadata, keeps only
4/4 grooves (fills and other time signatures are out), runs every file
through parse -> quantize -> trim, and emits the artifacts downstream
stages consume: grids, per-style split statistics, a rejection log, and
prompt/completion JSONL records laid out for language-model finetuning.

Per-file conversion failures are logged, never fatal: corpus building
must be auditable and resumable. Output orders are sorted by source id so
reruns are deterministic.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .drumroll import END, SEP, decode_strict, encode_fragment
from .grid import DrumMap, GrooveGrid, Rejected, quantize, trim_and_truncate
from .ioutil import atomic_write_text
from .smf import SmfError, parse_smf

log = logging.getLogger(__name__)

SPLITS = ("train", "dev", "test")
STYLE_BUCKETS = ("rock", "jazz", "latin", "funk", "hiphop", "others")

BEAT = "beat"
FOUR_FOUR = "4-4"
MIN_FINETUNE_MEASURES = 3

# The published corpus calls its development split "validation".
_SPLIT_ALIASES = {"validation": "dev", "valid": "dev", "val": "dev"}
_REQUIRED_COLUMNS = (
    "drummer",
    "session",
    "id",
    "style",
    "bpm",
    "beat_type",
    "time_signature",
    "split",
)
_MIDI_PATH_COLUMNS = ("midi_filename", "midi_path")


class MissingColumn(ValueError):
    """The metadata CSV lacks one of the required columns."""


@dataclass(frozen=True)
class DatasetRecord:
    """One row of the corpus metadata CSV."""

    drummer: str
    session: str
    id: str
    style: str
    bpm: float
    beat_type: str
    time_signature: str
    midi_path: str
    split: str


def load_metadata(csv_path: str | Path) -> list[DatasetRecord]:
    """Read the corpus info CSV; malformed rows are skipped with a warning."""
    csv_path = Path(csv_path)
    records: list[DatasetRecord] = []
    skipped = 0
    with open(csv_path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        columns = reader.fieldnames or []
        missing = [c for c in _REQUIRED_COLUMNS if c not in columns]
        path_column = next((c for c in _MIDI_PATH_COLUMNS if c in columns), None)
        if missing or path_column is None:
            wanted = list(missing)
            if path_column is None:
                wanted.append(" or ".join(_MIDI_PATH_COLUMNS))
            raise MissingColumn(f"{csv_path}: missing columns: {', '.join(wanted)}")
        for row_no, row in enumerate(reader, start=2):
            try:
                record_id = (row["id"] or "").strip()
                midi_path = (row[path_column] or "").strip()
                split = (row["split"] or "").strip().lower()
                split = _SPLIT_ALIASES.get(split, split)
                bpm = float(row["bpm"])
                if not record_id or not midi_path:
                    raise ValueError("empty id or midi path")
                if split not in SPLITS:
                    raise ValueError(f"unknown split {split!r}")
                if bpm <= 0:
                    raise ValueError(f"non-positive bpm {bpm}")
            except (KeyError, TypeError, ValueError) as exc:
                skipped += 1
                log.warning("%s:%d: skipping malformed row (%s)", csv_path, row_no, exc)
                continue
            records.append(
                DatasetRecord(
                    drummer=(row["drummer"] or "").strip(),
                    session=(row["session"] or "").strip(),
                    id=record_id,
                    style=(row["style"] or "").strip(),
                    bpm=bpm,
                    beat_type=(row["beat_type"] or "").strip(),
                    time_signature=(row["time_signature"] or "").strip(),
                    midi_path=midi_path,
                    split=split,
                )
            )
    if skipped:
        log.warning("%s: %d malformed rows skipped", csv_path, skipped)
    return records


def filter_corpus(records: Iterable[DatasetRecord]) -> list[DatasetRecord]:
    """Keep 4/4 grooves only: beat_type 'beat' and time signature '4-4'."""
    return [
        r
        for r in records
        if r.beat_type == BEAT and r.time_signature == FOUR_FOUR
    ]


def style_bucket(style: str) -> str:
    """Bucket a style label; compound labels match on their prefix.

    ``rock/halftime`` buckets as rock; anything outside the five named
    genres lands in ``others``.
    """
    lowered = style.strip().lower()
    for bucket in STYLE_BUCKETS[:-1]:
        if lowered.startswith(bucket):
            return bucket
    return "others"


@dataclass
class CorpusStats:
    """Per-split, per-style-bucket counts of accepted grooves."""

    counts: dict[str, dict[str, int]] = field(
        default_factory=lambda: {
            split: {bucket: 0 for bucket in STYLE_BUCKETS} for split in SPLITS
        }
    )

    def add(self, split: str, style: str) -> None:
        self.counts[split][style_bucket(style)] += 1

    def split_total(self, split: str) -> int:
        return sum(self.counts[split].values())

    def total(self) -> int:
        return sum(self.split_total(split) for split in SPLITS)


@dataclass(frozen=True)
class Rejection:
    """One file excluded during corpus building, with the reason why."""

    source_id: str
    midi_path: str
    reason: str


def build_corpus(
    records: Sequence[DatasetRecord],
    dataset_root: str | Path,
    drum_map: DrumMap,
    *,
    tie_round_up: bool = False,
) -> tuple[list[GrooveGrid], CorpusStats, list[Rejection]]:
    """Convert every record's MIDI file into a grid, collecting stats.

    Files that cannot be read or parsed, and grooves the trim rules
    reject, are logged as rejections and skipped; the batch never aborts.
    Output is sorted by source id.
    """
    root = Path(dataset_root)
    grids: list[GrooveGrid] = []
    stats = CorpusStats()
    rejections: list[Rejection] = []
    for record in sorted(records, key=lambda r: r.id):
        path = root / record.midi_path
        try:
            data = path.read_bytes()
        except OSError as exc:
            rejections.append(
                Rejection(record.id, record.midi_path, f"io_error:{type(exc).__name__}")
            )
            log.warning("%s: unreadable (%s)", path, exc)
            continue
        try:
            header, events, _signatures = parse_smf(data)
            grid = quantize(
                events, header.ticks_per_quarter, drum_map, tie_round_up=tie_round_up
            )
            grid = trim_and_truncate(grid)
        except Rejected as rej:
            rejections.append(Rejection(record.id, record.midi_path, rej.reason))
            continue
        except SmfError as exc:
            rejections.append(
                Rejection(record.id, record.midi_path, f"parse_error:{type(exc).__name__}")
            )
            log.warning("%s: parse failed (%s)", path, exc)
            continue
        grids.append(
            replace(
                grid,
                style=record.style,
                bpm=record.bpm,
                split=record.split,
                source_id=record.id,
            )
        )
        stats.add(record.split, record.style)
    return grids, stats, rejections


def emit_finetune_records(corpus: Sequence[GrooveGrid], out_path: str | Path) -> int:
    """Write prompt/completion JSONL for finetuning; returns records written.

    The prompt is the drumroll of measures 0-1 terminated by SEP, the
    completion the remaining measures terminated by END; concatenating the
    two fields reproduces the groove's full document exactly. Grooves with
    fewer than 3 measures (nothing left to complete) are skipped.
    """
    lines: list[str] = []
    for groove in sorted(corpus, key=lambda g: g.source_id):
        if len(groove.measures) < MIN_FINETUNE_MEASURES:
            log.warning(
                "groove %r has %d measures, need %d; skipped",
                groove.source_id,
                len(groove.measures),
                MIN_FINETUNE_MEASURES,
            )
            continue
        prompt = encode_fragment(groove.measures[:2], terminator=SEP)
        completion = encode_fragment(groove.measures[2:], terminator=END)
        lines.append(json.dumps({"prompt": prompt, "completion": completion}))
    atomic_write_text(out_path, "".join(line + "\n" for line in lines))
    return len(lines)


def write_rejections_csv(rejections: Sequence[Rejection], out_path: str | Path) -> None:
    """Write the rejection log as CSV (id, midi_path, reason)."""
    rows = ["id,midi_path,reason"]
    for rej in sorted(rejections, key=lambda r: r.source_id):
        rows.append(f"{rej.source_id},{rej.midi_path},{rej.reason}")
    atomic_write_text(out_path, "".join(row + "\n" for row in rows))


def load_drumroll_corpus(
    drumroll_path: str | Path,
    *,
    split: str = "",
) -> list[GrooveGrid]:
    """Read a multi-document drumroll file written by the build step.

    Ids come from the sidecar ``<file>.manifest.json`` when present (and
    consistent); otherwise positional ids are synthesized from the file
    name. Documents are decoded strictly -- these are our own outputs.
    """
    from .drumroll import iter_documents

    drumroll_path = Path(drumroll_path)
    text = drumroll_path.read_text(encoding="utf-8")
    documents = list(iter_documents(text))
    ids = sidecar_ids(drumroll_path, len(documents))
    grids: list[GrooveGrid] = []
    for doc_text, groove_id in zip(documents, ids):
        grid = decode_strict(doc_text)
        grids.append(replace(grid, source_id=groove_id, split=split))
    return grids


def sidecar_ids(drumroll_path: Path, count: int) -> list[str]:
    sidecar = drumroll_path.with_name(drumroll_path.name + ".manifest.json")
    if sidecar.is_file():
        try:
            ids = json.loads(sidecar.read_text(encoding="utf-8"))["ids"]
        except (json.JSONDecodeError, KeyError, TypeError):
            ids = None
        if isinstance(ids, list) and len(ids) == count:
            return [str(i) for i in ids]
        log.warning("%s: sidecar ids unusable; synthesizing positional ids", sidecar)
    stem = drumroll_path.stem
    return [f"{stem}-{i:04d}" for i in range(count)]


def write_drumroll_corpus(
    grids: Sequence[GrooveGrid], drumroll_path: str | Path
) -> None:
    """Write grooves as one concatenated drumroll stream plus an id sidecar."""
    drumroll_path = Path(drumroll_path)
    parts = [encode_fragment(g.measures, terminator=END) for g in grids]
    atomic_write_text(drumroll_path, "".join(parts))
    sidecar = drumroll_path.with_name(drumroll_path.name + ".manifest.json")
    payload = {"ids": [g.source_id for g in grids]}
    atomic_write_text(sidecar, json.dumps(payload, indent=2) + "\n")
