"""Serialization of evaluation results: JSON reports, CSV tables, text tables.

The comparison table mirrors the usual presentation of groove statistics:
one column per evaluated set, rows for variation/centroid statistics,
judgment counts, and average length. Tables come in both aligned plain
text (for terminals) and CSV (for downstream analysis). Number formatting
is fixed so reruns are byte-identical.
"""

from __future__ import annotations

import json
from typing import Sequence

from .evaluate import EvalReport, GrooveAnalysis
from .ioutil import atomic_write_text


def report_to_dict(
    report: EvalReport,
    analyses: Sequence[GrooveAnalysis],
    *,
    set_name: str = "",
    distance_unit: str = "char",
    weighting: str = "per_groove",
) -> dict:
    """Flatten a report (plus per-groove rows) into a JSON-ready dict.

    The centroid statistics appear under both their descriptive names and
    their intra-/inter-centroid aliases, because the latter naming is
    easy to invert.
    """
    grooves = []
    for a in analyses:
        grooves.append(
            {
                "id": a.groove_id,
                "length_measures": len(a.groove.measures),
                "mean_interior_variation": a.profile.mean_interior(),
                "centroid_gap": a.cluster.centroid_gap if a.cluster else None,
                "member_distance": a.cluster.mean_member_distance if a.cluster else None,
                "judgment": (
                    "repetitive"
                    if a.judgment.repetitive
                    else "chaotic" if a.judgment.chaotic else "consistent"
                ),
                "has_fill": a.judgment.has_fill,
            }
        )
    duplication = None
    if report.duplication_histogram is not None:
        duplication = {str(k): v for k, v in report.duplication_histogram.items()}
    return {
        "set_name": set_name,
        "distance_unit": distance_unit,
        "weighting": weighting,
        "groove_count": report.groove_count,
        "avg_variation": report.avg_variation,
        "avg_centroid_gap": report.avg_centroid_gap,
        "avg_intra_centroid_distance": report.avg_centroid_gap,
        "avg_member_distance": report.avg_member_distance,
        "avg_inter_centroid_distance": report.avg_member_distance,
        "judgment_counts": report.judgment_counts,
        "has_fill_count": report.has_fill_count,
        "avg_length": report.avg_length,
        "duplication_histogram": duplication,
        "grooves": grooves,
    }


def write_report_json(path, report_dict: dict) -> None:
    atomic_write_text(path, json.dumps(report_dict, indent=2, sort_keys=True) + "\n")


def write_variations_csv(path, analyses: Sequence[GrooveAnalysis]) -> None:
    """Per-measure variation table: groove, measure, value, cluster, boundary."""
    rows = ["groove_id,measure_index,variation,cluster,boundary_flag"]
    for a in analyses:
        interior = set(a.profile.interior_range)
        for index, value in enumerate(a.profile.values):
            boundary = 0 if index in interior else 1
            cluster = ""
            if a.cluster is not None and index in interior:
                cluster = a.cluster.assignment[index - 1]
            rows.append(f"{a.groove_id},{index},{value},{cluster},{boundary}")
    atomic_write_text(path, "".join(row + "\n" for row in rows))


_METRIC_ROWS = (
    ("grooves", "groove_count", "d"),
    ("avg variation", "avg_variation", "f"),
    ("centroid gap (intra-centroid dist.)", "avg_centroid_gap", "f"),
    ("member distance (inter-centroid dist.)", "avg_member_distance", "f"),
    ("repetitive", ("judgment_counts", "repetitive"), "d"),
    ("consistent", ("judgment_counts", "consistent"), "d"),
    ("chaotic", ("judgment_counts", "chaotic"), "d"),
    ("has fill", "has_fill_count", "d"),
    ("avg length", "avg_length", "f"),
)


def _metric_value(report: EvalReport, key) -> float | int:
    if isinstance(key, tuple):
        return report.judgment_counts[key[1]]
    return getattr(report, key)


def _format_cell(value: float | int, kind: str) -> str:
    return f"{value:.2f}" if kind == "f" else str(value)


def comparison_table_text(named_reports: Sequence[tuple[str, EvalReport]]) -> str:
    """Aligned plain-text comparison across sets."""
    label_width = max(len(label) for label, _key, _kind in _METRIC_ROWS)
    col_widths = [max(len(name), 8) for name, _ in named_reports]
    lines = [
        " ".join(
            [" " * label_width]
            + [name.rjust(width) for (name, _), width in zip(named_reports, col_widths)]
        ).rstrip()
    ]
    for label, key, kind in _METRIC_ROWS:
        cells = [
            _format_cell(_metric_value(report, key), kind).rjust(width)
            for (_, report), width in zip(named_reports, col_widths)
        ]
        lines.append(" ".join([label.ljust(label_width)] + cells).rstrip())
    return "".join(line + "\n" for line in lines)


def comparison_table_csv(named_reports: Sequence[tuple[str, EvalReport]]) -> str:
    """The same comparison as CSV."""
    header = ",".join(["metric"] + [name for name, _ in named_reports])
    lines = [header]
    for label, key, kind in _METRIC_ROWS:
        cells = [_format_cell(_metric_value(report, key), kind) for _, report in named_reports]
        lines.append(",".join([f'"{label}"'] + cells))
    return "".join(line + "\n" for line in lines)


def stats_table_text(counts: dict[str, dict[str, int]], splits, buckets) -> str:
    """Corpus statistics: rows total + per style bucket, columns per split."""
    label_width = max(len("total"), max(len(b) for b in buckets))
    col_widths = [max(len(s), 5) for s in splits]
    lines = [
        " ".join(
            [" " * label_width] + [s.rjust(w) for s, w in zip(splits, col_widths)]
        ).rstrip()
    ]
    totals = [sum(counts[s].values()) for s in splits]
    lines.append(
        " ".join(
            ["total".ljust(label_width)]
            + [str(t).rjust(w) for t, w in zip(totals, col_widths)]
        ).rstrip()
    )
    for bucket in buckets:
        row = [str(counts[s][bucket]).rjust(w) for s, w in zip(splits, col_widths)]
        lines.append(" ".join([bucket.ljust(label_width)] + row).rstrip())
    return "".join(line + "\n" for line in lines)


def stats_table_csv(counts: dict[str, dict[str, int]], splits, buckets) -> str:
    lines = [",".join(["style"] + list(splits))]
    totals = [str(sum(counts[s].values())) for s in splits]
    lines.append(",".join(["total"] + totals))
    for bucket in buckets:
        lines.append(",".join([bucket] + [str(counts[s][bucket]) for s in splits]))
    return "".join(line + "\n" for line in lines)
