"""Command-line surface: build the corpus, run generators, evaluate sets.

Subcommands
    build           dataset root -> corpus (manifest, drumrolls, stats, finetune JSONL)
    export-prompts  corpus split -> {"id", "prompt"} JSONL for external generation
    generate        corpus split -> completions via a baseline or an external file
    eval            drumroll sets -> reports, comparison tables, variation charts

Every command is deterministic given its flags (including --seed), and
all files are written atomically. Exit codes: 0 success, 2 missing
dataset/input, 64 usage error, 65 data format error in strict mode.

Flags may also come from a TOML config file (--config; keys are the long
option names with underscores) and the dataset root from the
GROOVEKIT_DATASET_ROOT environment variable. Explicit flags win over the
config file, which wins over the environment.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import dataset as ds
from .drumroll import DrumrollError, decode_repair, decode_strict, iter_documents
from .evaluate import (
    CHAR_UNIT,
    EvalReport,
    GrooveAnalysis,
    JudgeConfig,
    LINE_UNIT,
    aggregate,
    analyze_groove,
)
from .generate import (
    CompletionRequest,
    SplitMix64,
    completion_text,
    export_prompts,
    ingest_completions,
    random_complete,
    repeat_complete,
)
from .grid import DrumMap, GrooveGrid, default_drum_map, load_drum_map, roland_td11_drum_map
from .ioutil import atomic_write_text
from .report import (
    comparison_table_csv,
    comparison_table_text,
    report_to_dict,
    stats_table_csv,
    stats_table_text,
    write_report_json,
    write_variations_csv,
)
from .svg import faceted_variation_chart, variation_chart

log = logging.getLogger(__name__)

ENV_DATASET_ROOT = "GROOVEKIT_DATASET_ROOT"

EXIT_OK = 0
EXIT_MISSING_INPUT = 2
EXIT_USAGE = 64
EXIT_DATA_FORMAT = 65

GENERATORS = ("random", "repeat", "external")


class CliError(Exception):
    """A command failure with an explicit process exit code."""

    def __init__(self, exit_code: int, message: str) -> None:
        super().__init__(message)
        self.exit_code = exit_code


@dataclass
class RunConfig:
    """Resolved settings for one command invocation."""

    dataset_root: Path | None = None
    drum_map: str = "default"
    split: str = "test"
    generator: str = "repeat"
    seed: int | None = None
    p_hit: float = 0.5
    thresholds: JudgeConfig = field(default_factory=JudgeConfig)
    output_dir: Path = Path(".")
    corpus_dir: Path | None = None
    completions: Path | None = None
    tag: str | None = None
    unit: str = CHAR_UNIT
    pooled: bool = False
    strict: bool = False
    tie_round_up: bool = False
    training: Path | None = None


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 64."""

    def error(self, message: str):  # noqa: D102 - argparse hook
        raise CliError(EXIT_USAGE, f"{self.prog}: {message}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="groovekit", description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, help="TOML config file with default flag values")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_parser(name: str, **kwargs) -> _Parser:
        # --config is accepted both before and after the subcommand; the
        # SUPPRESS default keeps the subparser from clobbering a value the
        # top-level parser already set.
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--config", type=Path, default=argparse.SUPPRESS, help=argparse.SUPPRESS)
        return p

    p_build = add_parser("build", help="convert the dataset into split corpora")
    p_build.add_argument("--dataset-root", type=Path, default=None)
    p_build.add_argument("--out", type=Path, default=None, help="output directory")
    p_build.add_argument(
        "--drum-map",
        default=None,
        help="'default' (GM voices), 'td11' (bundled Roland TD-11 map), or a map file path",
    )
    p_build.add_argument(
        "--tie-round-up",
        action="store_true",
        default=None,
        help="round quantization ties up instead of down",
    )

    p_prompts = add_parser("export-prompts", help="emit {'id','prompt'} JSONL for a split")
    p_prompts.add_argument("--corpus", type=Path, default=None, help="build output directory")
    p_prompts.add_argument("--split", default=None, choices=ds.SPLITS)
    p_prompts.add_argument("--out", type=Path, default=None, help="output JSONL path")

    p_gen = add_parser("generate", help="complete each groove of a split")
    p_gen.add_argument("--corpus", type=Path, default=None, help="build output directory")
    p_gen.add_argument("--split", default=None, choices=ds.SPLITS)
    p_gen.add_argument("--generator", default=None, choices=GENERATORS)
    p_gen.add_argument("--seed", type=int, default=None, help="required for --generator random")
    p_gen.add_argument("--p-hit", type=float, default=None, help="hit probability (random)")
    p_gen.add_argument(
        "--completions", type=Path, default=None, help="JSONL input (external generator)"
    )
    p_gen.add_argument("--tag", default=None, help="output name (defaults to the generator)")
    p_gen.add_argument("--out", type=Path, default=None, help="output directory")

    p_eval = add_parser("eval", help="evaluate one or more drumroll sets")
    p_eval.add_argument(
        "sets",
        nargs="+",
        metavar="NAME=PATH",
        help="drumroll stream files to evaluate, labeled",
    )
    p_eval.add_argument("--out", type=Path, default=None, help="output directory")
    p_eval.add_argument(
        "--training", type=Path, default=None, help="training drumroll file for duplication"
    )
    p_eval.add_argument("--strict", action="store_true", default=None)
    p_eval.add_argument("--unit", default=None, choices=(CHAR_UNIT, LINE_UNIT))
    p_eval.add_argument(
        "--pooled",
        action="store_true",
        default=None,
        help="pool all interior variations instead of per-groove means",
    )
    p_eval.add_argument("--repetitive-max-variation", type=float, default=None)
    p_eval.add_argument("--chaotic-mean-variation", type=float, default=None)
    p_eval.add_argument("--chaotic-min-backbeat", type=float, default=None)
    p_eval.add_argument("--fill-min-variation", type=float, default=None)
    p_eval.add_argument("--fill-median-factor", type=float, default=None)
    return parser


def _load_config_file(path: Path | None) -> dict:
    if path is None:
        return {}
    if not path.is_file():
        raise CliError(EXIT_MISSING_INPUT, f"config file not found: {path}")
    try:
        with open(path, "rb") as handle:
            return tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise CliError(EXIT_DATA_FORMAT, f"bad config file {path}: {exc}") from exc


def _pick(args: argparse.Namespace, config: dict, key: str, fallback):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return fallback


def _resolve(args: argparse.Namespace) -> RunConfig:
    config = _load_config_file(args.config)
    env_root = os.environ.get(ENV_DATASET_ROOT)
    thresholds = JudgeConfig(
        repetitive_max_variation=float(
            _pick(args, config, "repetitive_max_variation", JudgeConfig.repetitive_max_variation)
        ),
        chaotic_mean_variation=float(
            _pick(args, config, "chaotic_mean_variation", JudgeConfig.chaotic_mean_variation)
        ),
        chaotic_min_backbeat=float(
            _pick(args, config, "chaotic_min_backbeat", JudgeConfig.chaotic_min_backbeat)
        ),
        fill_min_variation=float(
            _pick(args, config, "fill_min_variation", JudgeConfig.fill_min_variation)
        ),
        fill_median_factor=float(
            _pick(args, config, "fill_median_factor", JudgeConfig.fill_median_factor)
        ),
    )
    dataset_root = _pick(args, config, "dataset_root", env_root)
    corpus_dir = _pick(args, config, "corpus", None)
    out = _pick(args, config, "out", None)
    seed = _pick(args, config, "seed", None)
    completions = _pick(args, config, "completions", None)
    training = _pick(args, config, "training", None)
    return RunConfig(
        dataset_root=Path(dataset_root) if dataset_root else None,
        drum_map=str(_pick(args, config, "drum_map", "default")),
        split=str(_pick(args, config, "split", "test")),
        generator=str(_pick(args, config, "generator", "repeat")),
        seed=int(seed) if seed is not None else None,
        p_hit=float(_pick(args, config, "p_hit", 0.5)),
        thresholds=thresholds,
        output_dir=Path(out) if out else Path("."),
        corpus_dir=Path(corpus_dir) if corpus_dir else None,
        completions=Path(completions) if completions else None,
        tag=_pick(args, config, "tag", None),
        unit=str(_pick(args, config, "unit", CHAR_UNIT)),
        pooled=bool(_pick(args, config, "pooled", False)),
        strict=bool(_pick(args, config, "strict", False)),
        tie_round_up=bool(_pick(args, config, "tie_round_up", False)),
        training=Path(training) if training else None,
    )


def _resolve_drum_map(spec: str) -> DrumMap:
    if spec == "default":
        return default_drum_map()
    if spec == "td11":
        return roland_td11_drum_map()
    path = Path(spec)
    if not path.is_file():
        raise CliError(EXIT_MISSING_INPUT, f"drum map file not found: {path}")
    return load_drum_map(path)


def _dump_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def cmd_build(cfg: RunConfig) -> int:
    if cfg.dataset_root is None:
        raise CliError(
            EXIT_USAGE,
            f"build requires --dataset-root (or {ENV_DATASET_ROOT})",
        )
    csv_path = cfg.dataset_root / "info.csv"
    if not csv_path.is_file():
        raise CliError(EXIT_MISSING_INPUT, f"info.csv not found in {cfg.dataset_root}")
    drum_map = _resolve_drum_map(cfg.drum_map)
    try:
        records = ds.load_metadata(csv_path)
    except ds.MissingColumn as exc:
        raise CliError(EXIT_DATA_FORMAT, str(exc)) from exc
    records = ds.filter_corpus(records)
    grids, stats, rejections = ds.build_corpus(
        records, cfg.dataset_root, drum_map, tie_round_up=cfg.tie_round_up
    )
    out = cfg.output_dir
    manifest = {
        "drum_map": cfg.drum_map,
        "grooves": [
            {
                "id": g.source_id,
                "split": g.split,
                "style": g.style,
                "bpm": g.bpm,
                "measure_count": len(g.measures),
            }
            for g in grids
        ],
        "rejection_count": len(rejections),
    }
    atomic_write_text(out / "manifest.json", _dump_json(manifest))
    atomic_write_text(
        out / "stats.txt", stats_table_text(stats.counts, ds.SPLITS, ds.STYLE_BUCKETS)
    )
    atomic_write_text(
        out / "stats.csv", stats_table_csv(stats.counts, ds.SPLITS, ds.STYLE_BUCKETS)
    )
    ds.write_rejections_csv(rejections, out / "rejections.csv")
    for split in ds.SPLITS:
        split_grids = [g for g in grids if g.split == split]
        ds.write_drumroll_corpus(split_grids, out / "drumrolls" / f"{split}.drumroll")
    train = [g for g in grids if g.split == "train"]
    emitted = ds.emit_finetune_records(train, out / "finetune_train.jsonl")
    for split in ds.SPLITS:
        print(f"{split}: {stats.split_total(split)} grooves")
    print(f"rejected: {len(rejections)}")
    print(f"finetune records: {emitted}")
    print(f"corpus written to {out}")
    return EXIT_OK


def _load_corpus_file(path: Path, split: str = "") -> list[GrooveGrid]:
    try:
        return ds.load_drumroll_corpus(path, split=split)
    except DrumrollError as exc:
        raise CliError(EXIT_DATA_FORMAT, f"corrupt drumroll file {path}: {exc}") from exc


def _load_split(corpus_dir: Path | None, split: str) -> list[GrooveGrid]:
    if corpus_dir is None:
        raise CliError(EXIT_USAGE, "missing --corpus (build output directory)")
    path = corpus_dir / "drumrolls" / f"{split}.drumroll"
    if not path.is_file():
        raise CliError(EXIT_MISSING_INPUT, f"corpus split file not found: {path}")
    return _load_corpus_file(path, split)


def cmd_export_prompts(cfg: RunConfig) -> int:
    grooves = _load_split(cfg.corpus_dir, cfg.split)
    out_path = cfg.output_dir
    if out_path == Path("."):
        out_path = cfg.corpus_dir / f"prompts_{cfg.split}.jsonl"
    count = export_prompts(grooves, out_path)
    print(f"wrote {count} prompts to {out_path}")
    return EXIT_OK


def cmd_generate(cfg: RunConfig) -> int:
    grooves = _load_split(cfg.corpus_dir, cfg.split)
    if not grooves:
        raise CliError(EXIT_MISSING_INPUT, f"no grooves in split {cfg.split!r}")
    tag = cfg.tag or cfg.generator
    if cfg.generator == "external":
        if cfg.completions is None:
            raise CliError(EXIT_USAGE, "--generator external requires --completions")
        if not cfg.completions.is_file():
            raise CliError(EXIT_MISSING_INPUT, f"completions file not found: {cfg.completions}")
        generated = ingest_completions(cfg.completions, grooves, generator_tag=tag)
    else:
        if cfg.generator == "random" and cfg.seed is None:
            raise CliError(EXIT_USAGE, "--generator random requires --seed")
        seed_stream = SplitMix64(cfg.seed) if cfg.seed is not None else None
        generated = []
        for groove in sorted(grooves, key=lambda g: g.source_id):
            if len(groove.measures) < 2:
                log.warning("groove %r has fewer than 2 measures; skipped", groove.source_id)
                continue
            prompt = GrooveGrid(
                measures=groove.measures[:2],
                style=groove.style,
                bpm=groove.bpm,
                split=groove.split,
                source_id=groove.source_id,
            )
            if cfg.generator == "random":
                request = CompletionRequest(prompt=prompt, seed=seed_stream.next_u64())
                generated.append(random_complete(request, p_hit=cfg.p_hit))
            else:
                generated.append(repeat_complete(CompletionRequest(prompt=prompt)))
    out = cfg.output_dir
    ds.write_drumroll_corpus([g.full for g in generated], out / f"{tag}.drumroll")
    lines = [
        json.dumps({"id": g.full.source_id, "completion": completion_text(g)})
        for g in generated
    ]
    atomic_write_text(out / f"{tag}.completions.jsonl", "".join(l + "\n" for l in lines))
    repaired = sum(1 for g in generated if g.repaired)
    print(f"generated {len(generated)} grooves with {cfg.generator!r} -> {out / (tag + '.drumroll')}")
    if repaired:
        print(f"repaired completions: {repaired}")
    return EXIT_OK


def _parse_set_args(set_args: list[str]) -> list[tuple[str, Path]]:
    sets: list[tuple[str, Path]] = []
    seen: set[str] = set()
    for item in set_args:
        name, eq, path = item.partition("=")
        if not eq or not name or not path:
            raise CliError(EXIT_USAGE, f"expected NAME=PATH, got {item!r}")
        if name in seen:
            raise CliError(EXIT_USAGE, f"duplicate set name {name!r}")
        seen.add(name)
        sets.append((name, Path(path)))
    return sets


def _decode_set(name: str, path: Path, strict: bool) -> list[tuple[str, GrooveGrid]]:
    if not path.is_file():
        raise CliError(EXIT_MISSING_INPUT, f"set {name!r}: file not found: {path}")
    text = path.read_text(encoding="utf-8")
    documents = list(iter_documents(text))
    ids = ds.sidecar_ids(path, len(documents))
    grids: list[tuple[str, GrooveGrid]] = []
    for index, doc_text in enumerate(documents):
        if strict:
            try:
                grid = decode_strict(doc_text)
            except DrumrollError as exc:
                raise CliError(
                    EXIT_DATA_FORMAT, f"set {name!r} document {index}: {exc}"
                ) from exc
        else:
            try:
                grid, _doc = decode_repair(doc_text)
            except DrumrollError as exc:
                log.warning("set %r document %d undecodable (%s); skipped", name, index, exc)
                continue
        grids.append((ids[index], grid))
    if not grids:
        raise CliError(EXIT_MISSING_INPUT, f"set {name!r}: no grooves decoded from {path}")
    return grids


def _safe_filename(groove_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", groove_id)


def cmd_eval(cfg: RunConfig, set_args: list[str]) -> int:
    sets = _parse_set_args(set_args)
    training = None
    if cfg.training is not None:
        if not cfg.training.is_file():
            raise CliError(EXIT_MISSING_INPUT, f"training file not found: {cfg.training}")
        training = _load_corpus_file(cfg.training)
    named_reports: list[tuple[str, EvalReport]] = []
    weighting = "pooled" if cfg.pooled else "per_groove"
    for name, path in sets:
        decoded = _decode_set(name, path, cfg.strict)
        analyses: list[GrooveAnalysis] = []
        for groove_id, grid in decoded:
            analyses.append(
                analyze_groove(
                    grid, unit=cfg.unit, config=cfg.thresholds, groove_id=groove_id
                )
            )
        report = aggregate(analyses, training=training, pooled=cfg.pooled)
        named_reports.append((name, report))
        set_dir = cfg.output_dir / name
        write_report_json(
            set_dir / "report.json",
            report_to_dict(
                report,
                analyses,
                set_name=name,
                distance_unit=cfg.unit,
                weighting=weighting,
            ),
        )
        write_variations_csv(set_dir / "variations.csv", analyses)
        series = [
            (a.groove_id, [float(v) for v in a.profile.values]) for a in analyses
        ]
        atomic_write_text(
            set_dir / "overview.svg",
            faceted_variation_chart(series, title=f"per-measure variation: {name}"),
        )
        used_names: set[str] = set()
        for a in analyses:
            chart = variation_chart(
                [float(v) for v in a.profile.values], title=a.groove_id
            )
            base = _safe_filename(a.groove_id)
            name_candidate = base
            suffix = 2
            while name_candidate in used_names:
                name_candidate = f"{base}-{suffix}"
                suffix += 1
            used_names.add(name_candidate)
            atomic_write_text(set_dir / "grooves" / f"{name_candidate}.svg", chart)
    atomic_write_text(cfg.output_dir / "comparison.txt", comparison_table_text(named_reports))
    atomic_write_text(cfg.output_dir / "comparison.csv", comparison_table_csv(named_reports))
    print(comparison_table_text(named_reports), end="")
    print(f"reports written to {cfg.output_dir}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _resolve(args)
        if args.command == "build":
            return cmd_build(cfg)
        if args.command == "export-prompts":
            return cmd_export_prompts(cfg)
        if args.command == "generate":
            return cmd_generate(cfg)
        if args.command == "eval":
            return cmd_eval(cfg, args.sets)
        raise CliError(EXIT_USAGE, f"unknown command {args.command!r}")
    except CliError as err:
        print(f"groovekit: error: {err}", file=sys.stderr)
        return err.exit_code
    except OSError as err:
        print(f"groovekit: error: {err}", file=sys.stderr)
        return EXIT_MISSING_INPUT


if __name__ == "__main__":
    sys.exit(main())
