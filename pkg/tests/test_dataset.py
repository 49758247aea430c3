from __future__ import annotations

import json
import random

import pytest

from groovekit.dataset import (
    CorpusStats,
    MissingColumn,
    SPLITS,
    build_corpus,
    emit_finetune_records,
    filter_corpus,
    load_drumroll_corpus,
    load_metadata,
    style_bucket,
    write_drumroll_corpus,
    write_rejections_csv,
)
from groovekit.drumroll import decode_strict
from groovekit.grid import DrumLane, GrooveGrid, Measure, default_drum_map

from conftest import random_grid
import smfbuild as sb

CSV_HEADER = (
    "drummer,session,id,style,bpm,beat_type,time_signature,midi_filename,"
    "audio_filename,duration,split"
)


def write_csv(tmp_path, rows, header=CSV_HEADER):
    path = tmp_path / "info.csv"
    path.write_text("".join(line + "\n" for line in [header] + rows), encoding="utf-8")
    return path


def row(
    rid="d1/s1/1",
    style="rock",
    bpm="120",
    beat_type="beat",
    tsig="4-4",
    split="train",
    midi=None,
):
    midi = midi if midi is not None else f"{rid}.mid"
    return f"d1,s1,{rid},{style},{bpm},{beat_type},{tsig},{midi},,30.0,{split}"


class TestLoadMetadata:
    def test_basic_fields(self, tmp_path):
        path = write_csv(tmp_path, [row()])
        records = load_metadata(path)
        assert len(records) == 1
        r = records[0]
        assert (r.drummer, r.session, r.id) == ("d1", "s1", "d1/s1/1")
        assert (r.style, r.bpm, r.beat_type) == ("rock", 120.0, "beat")
        assert (r.time_signature, r.midi_path, r.split) == ("4-4", "d1/s1/1.mid", "train")

    def test_validation_split_normalized_to_dev(self, tmp_path):
        records = load_metadata(write_csv(tmp_path, [row(split="validation")]))
        assert records[0].split == "dev"

    def test_fill_and_other_signatures_retained_here(self, tmp_path):
        rows = [row(beat_type="fill"), row(rid="d1/s1/2", tsig="3-4")]
        records = load_metadata(write_csv(tmp_path, rows))
        assert len(records) == 2

    def test_unknown_columns_ignored(self, tmp_path):
        header = CSV_HEADER + ",kit_name"
        records = load_metadata(write_csv(tmp_path, [row() + ",TD-11"], header))
        assert len(records) == 1

    def test_missing_column(self, tmp_path):
        header = CSV_HEADER.replace("beat_type,", "")
        bad = row().replace("beat,", "")
        with pytest.raises(MissingColumn):
            load_metadata(write_csv(tmp_path, [bad], header))

    def test_missing_midi_path_column(self, tmp_path):
        header = CSV_HEADER.replace("midi_filename", "file")
        with pytest.raises(MissingColumn):
            load_metadata(write_csv(tmp_path, [row()], header))

    def test_midi_path_column_alias(self, tmp_path):
        header = CSV_HEADER.replace("midi_filename", "midi_path")
        records = load_metadata(write_csv(tmp_path, [row()], header))
        assert records[0].midi_path == "d1/s1/1.mid"

    def test_malformed_rows_skipped(self, tmp_path):
        rows = [
            row(),
            row(rid="d1/s1/2", bpm="fast"),  # bad bpm
            row(rid="d1/s1/3", split="holdout"),  # bad split
            row(rid="", midi="x.mid"),  # empty id
        ]
        records = load_metadata(write_csv(tmp_path, rows))
        assert [r.id for r in records] == ["d1/s1/1"]


class TestFilterCorpus:
    def test_filters(self, tmp_path):
        rows = [
            row(),
            row(rid="d1/s1/2", beat_type="fill"),
            row(rid="d1/s1/3", tsig="3-4"),
            row(rid="d1/s1/4", split="test"),
        ]
        records = load_metadata(write_csv(tmp_path, rows))
        kept = filter_corpus(records)
        assert [r.id for r in kept] == ["d1/s1/1", "d1/s1/4"]
        # Splits pass through as shipped.
        assert [r.split for r in kept] == ["train", "test"]

    def test_idempotent(self, tmp_path):
        records = load_metadata(write_csv(tmp_path, [row(), row(rid="x", beat_type="fill")]))
        once = filter_corpus(records)
        assert filter_corpus(once) == once


class TestStyleBuckets:
    @pytest.mark.parametrize(
        "style, bucket",
        [
            ("rock", "rock"),
            ("rock/halftime", "rock"),
            ("Rock", "rock"),
            ("jazz/swing", "jazz"),
            ("latin/songo", "latin"),
            ("funk", "funk"),
            ("hiphop/boombap", "hiphop"),
            ("soul", "others"),
            ("afrocuban", "others"),
            ("", "others"),
        ],
    )
    def test_bucketing(self, style, bucket):
        assert style_bucket(style) == bucket

    def test_stats_sums(self):
        stats = CorpusStats()
        stats.add("train", "rock")
        stats.add("train", "soul")
        stats.add("dev", "jazz")
        assert stats.split_total("train") == 2
        assert stats.split_total("dev") == 1
        assert stats.total() == 3
        for split in SPLITS:
            assert sum(stats.counts[split].values()) == stats.split_total(split)


def make_dataset(tmp_path, specs):
    """specs: list of (row_kwargs, measure_hits or None or b'raw')."""
    rows = []
    for kwargs, content in specs:
        rows.append(row(**kwargs))
        rid = kwargs.get("rid", "d1/s1/1")
        midi_path = tmp_path / f"{rid}.mid"
        midi_path.parent.mkdir(parents=True, exist_ok=True)
        if content is None:
            continue  # deliberately missing file
        if isinstance(content, bytes):
            midi_path.write_bytes(content)
        else:
            midi_path.write_bytes(sb.groove_smf(content))
    write_csv(tmp_path, rows)
    return tmp_path


def eight_measures():
    base = [(0, DrumLane.BASS), (4, DrumLane.SNARE), (8, DrumLane.BASS), (12, DrumLane.SNARE)]
    return [base] * 8


class TestBuildCorpus:
    def test_empty_corpus(self, tmp_path):
        grids, stats, rejections = build_corpus([], tmp_path, default_drum_map())
        assert grids == [] and rejections == []
        assert stats.total() == 0

    def test_accepts_and_annotates(self, tmp_path):
        root = make_dataset(
            tmp_path,
            [({"rid": "d1/s1/a", "style": "funk/x", "split": "test"}, eight_measures())],
        )
        records = load_metadata(root / "info.csv")
        grids, stats, _rej = build_corpus(records, root, default_drum_map())
        assert len(grids) == 1
        g = grids[0]
        assert (g.source_id, g.style, g.split, g.bpm) == ("d1/s1/a", "funk/x", "test", 120.0)
        assert len(g.measures) == 8
        assert stats.counts["test"]["funk"] == 1

    def test_too_short_rejected_and_logged(self, tmp_path):
        root = make_dataset(
            tmp_path,
            [
                ({"rid": "d1/s1/ok"}, eight_measures()),
                ({"rid": "d1/s1/short"}, eight_measures()[:5]),
            ],
        )
        records = load_metadata(root / "info.csv")
        grids, _stats, rejections = build_corpus(records, root, default_drum_map())
        assert [g.source_id for g in grids] == ["d1/s1/ok"]
        assert [(r.source_id, r.reason) for r in rejections] == [("d1/s1/short", "too_short")]

    def test_corrupt_and_missing_files_logged_not_fatal(self, tmp_path):
        root = make_dataset(
            tmp_path,
            [
                ({"rid": "d1/s1/bad"}, b"not midi at all"),
                ({"rid": "d1/s1/gone"}, None),
                ({"rid": "d1/s1/ok"}, eight_measures()),
            ],
        )
        records = load_metadata(root / "info.csv")
        grids, _stats, rejections = build_corpus(records, root, default_drum_map())
        assert [g.source_id for g in grids] == ["d1/s1/ok"]
        reasons = {r.source_id: r.reason for r in rejections}
        assert reasons["d1/s1/bad"].startswith("parse_error:")
        assert reasons["d1/s1/gone"].startswith("io_error:")

    def test_output_sorted_by_id(self, tmp_path):
        root = make_dataset(
            tmp_path,
            [
                ({"rid": "d1/s1/b"}, eight_measures()),
                ({"rid": "d1/s1/a"}, eight_measures()),
            ],
        )
        records = load_metadata(root / "info.csv")
        grids, _stats, _rej = build_corpus(records, root, default_drum_map())
        assert [g.source_id for g in grids] == ["d1/s1/a", "d1/s1/b"]


class TestMiniGrooveCorpus:
    def test_counts_and_stats(self, mini_corpus):
        grids, stats, rejections = mini_corpus
        assert rejections == []
        assert stats.split_total("train") == 3
        assert stats.split_total("dev") == 1
        assert stats.split_total("test") == 1
        assert stats.counts["train"]["rock"] == 1
        assert stats.counts["train"]["funk"] == 1
        assert stats.counts["train"]["jazz"] == 1
        assert stats.counts["dev"]["latin"] == 1
        assert stats.counts["test"]["hiphop"] == 1
        assert stats.counts["train"]["others"] == 0

    def test_measure_counts_match_golden(self, mini_corpus, mini_groove_root):
        grids, _stats, _rej = mini_corpus
        golden = json.loads((mini_groove_root / "golden.json").read_text())
        for g in grids:
            assert len(g.measures) == golden["per_groove"][g.source_id]["measure_count"]


class TestEmitFinetune:
    def test_sixteen_measure_groove(self, tmp_path):
        rng = random.Random(40)
        grid = random_grid(rng, 16, 16)
        grid.source_id = "g"
        out = tmp_path / "finetune.jsonl"
        assert emit_finetune_records([grid], out) == 1
        record = json.loads(out.read_text().splitlines()[0])
        assert set(record) == {"prompt", "completion"}
        prompt_lines = record["prompt"].splitlines()
        assert prompt_lines[-1] == "SEP"
        assert len(prompt_lines) == 34
        completion_lines = record["completion"].splitlines()
        assert completion_lines[-1] == "END"
        assert len(completion_lines) == 14 * 16 + 13 + 1

    def test_round_trip(self, tmp_path):
        rng = random.Random(41)
        grids = []
        for i in range(5):
            g = random_grid(rng, 3, 16)
            g.source_id = f"g{i}"
            grids.append(g)
        out = tmp_path / "finetune.jsonl"
        assert emit_finetune_records(grids, out) == 5
        for line, grid in zip(out.read_text().splitlines(), grids):
            record = json.loads(line)
            rebuilt = decode_strict(record["prompt"] + record["completion"])
            assert rebuilt.measures == grid.measures

    def test_short_grooves_skipped(self, tmp_path):
        short = GrooveGrid(measures=[Measure.empty()] * 2, source_id="short")
        ok = GrooveGrid(measures=[Measure.empty()] * 3, source_id="ok")
        out = tmp_path / "finetune.jsonl"
        assert emit_finetune_records([short, ok], out) == 1

    def test_eight_measure_groove_has_six_completion_measures(self, tmp_path):
        rng = random.Random(42)
        grid = random_grid(rng, 8, 8)
        out = tmp_path / "finetune.jsonl"
        emit_finetune_records([grid], out)
        record = json.loads(out.read_text().splitlines()[0])
        assert len(decode_strict(record["prompt"] + record["completion"]).measures) == 8
        completion_lines = record["completion"].splitlines()
        assert len(completion_lines) == 6 * 16 + 5 + 1


class TestDrumrollCorpusFiles:
    def test_write_and_load_round_trip(self, tmp_path):
        rng = random.Random(43)
        grids = []
        for i in range(4):
            g = random_grid(rng, 2, 6)
            g.source_id = f"set/{i}"
            grids.append(g)
        path = tmp_path / "train.drumroll"
        write_drumroll_corpus(grids, path)
        loaded = load_drumroll_corpus(path, split="train")
        assert [g.source_id for g in loaded] == [g.source_id for g in grids]
        assert [g.measures for g in loaded] == [g.measures for g in grids]
        assert all(g.split == "train" for g in loaded)

    def test_positional_ids_without_sidecar(self, tmp_path):
        rng = random.Random(44)
        grids = [random_grid(rng, 2, 3) for _ in range(2)]
        path = tmp_path / "xs.drumroll"
        write_drumroll_corpus(grids, path)
        (tmp_path / "xs.drumroll.manifest.json").unlink()
        loaded = load_drumroll_corpus(path)
        assert [g.source_id for g in loaded] == ["xs-0000", "xs-0001"]

    def test_unusable_sidecar_falls_back_to_positional(self, tmp_path):
        rng = random.Random(45)
        grids = [random_grid(rng, 2, 3) for _ in range(2)]
        path = tmp_path / "ys.drumroll"
        write_drumroll_corpus(grids, path)
        sidecar = tmp_path / "ys.drumroll.manifest.json"
        for content in ("{broken", '{"ids": ["only-one"]}', '{"ids": "nope"}'):
            sidecar.write_text(content)
            loaded = load_drumroll_corpus(path)
            assert [g.source_id for g in loaded] == ["ys-0000", "ys-0001"]

    def test_rejections_csv(self, tmp_path):
        from groovekit.dataset import Rejection

        path = tmp_path / "rejections.csv"
        write_rejections_csv(
            [Rejection("b", "b.mid", "too_short"), Rejection("a", "a.mid", "parse_error:X")],
            path,
        )
        lines = path.read_text().splitlines()
        assert lines[0] == "id,midi_path,reason"
        assert lines[1].startswith("a,")
        assert lines[2].startswith("b,")
