from __future__ import annotations

import random
from statistics import fmean

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groovekit.evaluate import (
    EmptySet,
    FILL,
    JudgeConfig,
    PATTERN,
    VariationProfile,
    aggregate,
    analyze_groove,
    backbeat_consistency,
    duplication_histogram,
    judge,
    kmeans_1d,
    measure_distance,
    variation_profile,
)
from groovekit.generate import CompletionRequest, random_complete, repeat_complete
from groovekit.grid import DrumLane, GrooveGrid, Measure

from conftest import random_grid, random_measure
from oracles import best_two_means, levenshtein_reference, sse_under


def grid_of(*measures):
    return GrooveGrid(measures=list(measures))


def measure_with_hits(k: int) -> Measure:
    return Measure.from_hits([(i // 6, DrumLane(i % 6)) for i in range(k)])


class TestMeasureDistance:
    def test_identity(self):
        rng = random.Random(10)
        for _ in range(20):
            m = random_measure(rng)
            assert measure_distance(m, m) == 0

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_empty_vs_k_hits_is_k(self, k):
        # k substitutions suffice and are optimal (verified by the DP oracle).
        m = measure_with_hits(k)
        empty = Measure.empty()
        assert measure_distance(empty, m) == k
        assert levenshtein_reference(empty.flat_form, m.flat_form) == k

    def test_matches_oracle_on_random_pairs(self):
        rng = random.Random(11)
        for _ in range(150):
            a, b = random_measure(rng), random_measure(rng)
            assert measure_distance(a, b) == levenshtein_reference(a.flat_form, b.flat_form)

    def test_symmetry_and_triangle_on_random_triples(self):
        rng = random.Random(12)
        for _ in range(100):
            a, b, c = (random_measure(rng) for _ in range(3))
            ab = measure_distance(a, b)
            ba = measure_distance(b, a)
            ac = measure_distance(a, c)
            cb = measure_distance(c, b)
            assert ab == ba
            assert ab <= ac + cb

    def test_bounded_by_string_length(self):
        rng = random.Random(13)
        for _ in range(50):
            d = measure_distance(random_measure(rng), random_measure(rng))
            assert 0 <= d <= 96

    def test_line_unit(self):
        a = Measure.empty()
        b = Measure.from_hits([(0, DrumLane.BASS)])
        assert measure_distance(a, b, unit="line") == 1
        c = Measure.from_hits([(s, DrumLane.BASS) for s in range(16)])
        assert measure_distance(a, c, unit="line") == 16
        assert measure_distance(a, a, unit="line") == 0

    def test_line_unit_matches_oracle(self):
        rng = random.Random(14)
        for _ in range(60):
            a, b = random_measure(rng), random_measure(rng)
            expected = levenshtein_reference(a.lines(), b.lines())
            assert measure_distance(a, b, unit="line") == expected

    def test_unknown_unit(self):
        with pytest.raises(ValueError):
            measure_distance(Measure.empty(), Measure.empty(), unit="word")


class TestVariationProfile:
    def test_repeat_groove_all_interior_zero(self):
        m = measure_with_hits(8)
        profile = variation_profile(grid_of(*[m] * 10))
        assert profile.interior() == [0] * 8

    def test_aabaa_pattern(self):
        a = Measure.empty()
        b = measure_with_hits(7)
        d = measure_distance(a, b)
        profile = variation_profile(grid_of(a, a, b, a, a))
        assert profile.interior() == [0, d, 0]
        # Boundaries carry the one-sided distance.
        assert profile.values[0] == 0
        assert profile.values[-1] == 0

    def test_boundaries_one_sided(self):
        a, b, c = Measure.empty(), measure_with_hits(3), measure_with_hits(10)
        profile = variation_profile(grid_of(a, b, c))
        assert profile.values[0] == measure_distance(a, b)
        assert profile.values[-1] == measure_distance(b, c)
        assert profile.values[1] == min(
            measure_distance(b, a), measure_distance(b, c)
        )

    def test_two_measures_no_interior(self):
        a, b = Measure.empty(), measure_with_hits(4)
        profile = variation_profile(grid_of(a, b))
        assert profile.values == [4, 4]
        assert profile.interior() == []
        assert profile.mean_interior() is None

    def test_single_measure(self):
        profile = variation_profile(grid_of(Measure.empty()))
        assert profile.values == [0]
        assert profile.interior() == []

    @settings(max_examples=60, deadline=None)
    @given(st.integers(3, 16), st.randoms(use_true_random=False))
    def test_interior_is_min_of_neighbor_distances(self, n, rnd):
        rng = random.Random(rnd.randint(0, 10**9))
        grid = random_grid(rng, n, n)
        profile = variation_profile(grid)
        assert len(profile.values) == n
        for i in profile.interior_range:
            left = measure_distance(grid.measures[i], grid.measures[i - 1])
            right = measure_distance(grid.measures[i], grid.measures[i + 1])
            assert profile.values[i] == min(left, right)
            assert 0 <= profile.values[i] <= 96


class TestKmeans1d:
    def test_all_zero(self):
        result = kmeans_1d([0, 0, 0, 0])
        assert (result.centroid_low, result.centroid_high) == (0.0, 0.0)
        assert result.centroid_gap == 0.0
        assert result.mean_member_distance == 0.0
        assert result.assignment == [PATTERN] * 4

    def test_two_clean_clusters(self):
        result = kmeans_1d([0, 0, 0, 10, 10])
        assert (result.centroid_low, result.centroid_high) == (0.0, 10.0)
        assert result.centroid_gap == 10.0
        assert result.mean_member_distance == 0.0
        assert result.assignment == [PATTERN] * 3 + [FILL] * 2

    def test_one_two_nine(self):
        result = kmeans_1d([1, 2, 9])
        assert (result.centroid_low, result.centroid_high) == (1.5, 9.0)
        assert result.assignment == [PATTERN, PATTERN, FILL]

    def test_single_value(self):
        result = kmeans_1d([7])
        assert result.centroid_low == result.centroid_high == 7.0

    def test_assignment_order_matches_input(self):
        result = kmeans_1d([9, 1, 2])
        assert result.assignment == [FILL, PATTERN, PATTERN]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            kmeans_1d([])

    def test_lloyd_trap_still_optimal(self):
        # Plain Lloyd from (min, max) stalls at SSE 20.0 here; the optimal
        # split has SSE 13.005 and must win.
        values = [0, 0, 0, 0, 0, 4.9, 10]
        result = kmeans_1d(values)
        opt_sse, opt_low, opt_high = best_two_means(values)
        assert sse_under(values, result.centroid_low, result.centroid_high) == pytest.approx(
            opt_sse, rel=1e-12
        )
        assert result.centroid_low == pytest.approx(opt_low)
        assert result.centroid_high == pytest.approx(opt_high)

    def test_matches_bruteforce_on_random_suites(self):
        rng = random.Random(15)
        for case in range(200):
            n = rng.randint(1, 12)
            style = case % 4
            if style == 0:
                values = [rng.uniform(0, 50) for _ in range(n)]
            elif style == 1:
                values = [float(rng.randint(0, 25)) for _ in range(n)]
            elif style == 2:
                values = [rng.gauss(3, 1) for _ in range(n // 2)] + [
                    rng.gauss(20, 2) for _ in range(n - n // 2)
                ]
            else:
                values = [0.0] * (n - 1) + [float(rng.randint(0, 40))]
            opt_sse, _lo, _hi = best_two_means(values)
            result = kmeans_1d(values)
            got = sse_under(values, result.centroid_low, result.centroid_high)
            assert got <= opt_sse + 1e-9 * (1 + opt_sse)

    def test_deterministic(self):
        values = [3.1, 0.2, 18.0, 0.4, 2.2, 19.5]
        first = kmeans_1d(values)
        second = kmeans_1d(values)
        assert first == second

    def test_centroids_ordered(self):
        rng = random.Random(16)
        for _ in range(100):
            values = [rng.uniform(-5, 30) for _ in range(rng.randint(1, 12))]
            result = kmeans_1d(values)
            assert result.centroid_low <= result.centroid_high
            assert result.centroid_gap == result.centroid_high - result.centroid_low


def backbeat_measure() -> Measure:
    return Measure.from_hits([(4, DrumLane.SNARE), (12, DrumLane.SNARE), (0, DrumLane.BASS)])


class TestBackbeat:
    def test_full_backbeat(self):
        assert backbeat_consistency(grid_of(*[backbeat_measure()] * 4)) == 1.0

    def test_empty_groove(self):
        assert backbeat_consistency(grid_of(Measure.empty(), Measure.empty())) == 0.0
        assert backbeat_consistency(GrooveGrid(measures=[])) == 0.0

    def test_half(self):
        grid = grid_of(backbeat_measure(), Measure.empty(), backbeat_measure(), Measure.empty())
        assert backbeat_consistency(grid) == 0.5

    def test_single_backbeat_does_not_count(self):
        only_two = Measure.from_hits([(4, DrumLane.SNARE)])
        assert backbeat_consistency(grid_of(only_two)) == 0.0


class TestJudge:
    def test_repeat_groove_is_repetitive(self):
        prompt = grid_of(backbeat_measure(), backbeat_measure())
        generated = repeat_complete(CompletionRequest(prompt=prompt))
        analysis = analyze_groove(generated.full)
        assert analysis.judgment.repetitive
        assert not analysis.judgment.consistent
        assert not analysis.judgment.chaotic
        assert not analysis.judgment.has_fill

    def test_repeat_without_backbeat_still_repetitive(self):
        # Repetitiveness takes precedence over the lost back-beat.
        prompt = grid_of(Measure.empty(), Measure.empty())
        generated = repeat_complete(CompletionRequest(prompt=prompt))
        analysis = analyze_groove(generated.full)
        assert analysis.judgment.repetitive

    def test_random_groove_is_chaotic(self):
        prompt = grid_of(backbeat_measure(), backbeat_measure())
        generated = random_complete(CompletionRequest(prompt=prompt, seed=99), p_hit=0.5)
        analysis = analyze_groove(generated.full)
        assert analysis.judgment.chaotic

    def test_fill_spike_detected(self):
        profile = VariationProfile([2, 2, 2, 12, 2, 2, 2, 2])
        grid = grid_of(*[backbeat_measure()] * 8)
        result = judge(grid, profile)
        assert result.has_fill
        assert result.consistent

    def test_no_fill_when_spike_small(self):
        profile = VariationProfile([2, 2, 2, 5, 2, 2, 2, 2])
        result = judge(grid_of(*[backbeat_measure()] * 8), profile)
        assert not result.has_fill

    def test_no_fill_when_spike_not_above_median(self):
        profile = VariationProfile([9, 9, 9, 9, 9, 9])
        result = judge(grid_of(*[backbeat_measure()] * 6), profile)
        assert not result.has_fill

    def test_lost_backbeat_is_chaotic(self):
        profile = VariationProfile([2, 3, 2, 3, 2, 3])
        result = judge(grid_of(*[Measure.from_hits([(0, DrumLane.BASS)])] * 6), profile)
        assert result.chaotic

    def test_exactly_one_label(self):
        rng = random.Random(17)
        for _ in range(200):
            grid = random_grid(rng, 2, 16)
            result = judge(grid, variation_profile(grid))
            assert [result.repetitive, result.consistent, result.chaotic].count(True) == 1

    def test_length_reported(self):
        grid = grid_of(*[backbeat_measure()] * 9)
        assert judge(grid, variation_profile(grid)).length_measures == 9

    def test_thresholds_configurable(self):
        profile = VariationProfile([0, 5, 5, 5, 0])
        grid = grid_of(*[backbeat_measure()] * 5)
        strict_config = JudgeConfig(repetitive_max_variation=5.0)
        assert judge(grid, profile, strict_config).repetitive
        assert not judge(grid, profile).repetitive


class TestDuplication:
    def test_absent_measure_in_bucket_zero(self):
        training = [grid_of(*[backbeat_measure()] * 8)]
        novel = Measure.from_hits([(1, DrumLane.CRASH)])
        generated = [grid_of(Measure.empty(), Measure.empty(), novel)]
        hist = duplication_histogram(generated, training)
        assert hist == {0: 1}

    def test_multiset_counting(self):
        m = backbeat_measure()
        training = [grid_of(m, m, m, Measure.empty())]
        generated = [grid_of(Measure.empty(), Measure.empty(), m, Measure.empty())]
        hist = duplication_histogram(generated, training)
        assert hist == {1: 1, 3: 1}

    def test_repeat_from_training_prompt_always_found(self):
        rng = random.Random(18)
        training = [random_grid(rng, 8, 16) for _ in range(10)]
        for source in training:
            prompt = grid_of(*source.measures[:2])
            generated = repeat_complete(CompletionRequest(prompt=prompt))
            hist = duplication_histogram([generated], training)
            assert 0 not in hist
            assert sum(hist.values()) == 14

    def test_bucket_sum_matches_generated_measures(self):
        rng = random.Random(19)
        training = [random_grid(rng, 8, 16) for _ in range(5)]
        generated = [
            repeat_complete(CompletionRequest(prompt=grid_of(*random_grid(rng, 2, 2).measures)))
            for _ in range(7)
        ]
        hist = duplication_histogram(generated, training)
        assert sum(hist.values()) == 7 * 14

    def test_empty_training_rejected(self):
        with pytest.raises(ValueError):
            duplication_histogram([], [])


class TestAggregate:
    def test_single_repeat_groove(self):
        prompt = grid_of(backbeat_measure(), backbeat_measure())
        generated = repeat_complete(CompletionRequest(prompt=prompt))
        report = aggregate([analyze_groove(generated.full)])
        assert report.groove_count == 1
        assert report.avg_variation == 0.0
        assert report.avg_centroid_gap == 0.0
        assert report.avg_member_distance == 0.0
        assert report.judgment_counts == {"repetitive": 1, "consistent": 0, "chaotic": 0}
        assert report.has_fill_count == 0
        assert report.avg_length == 16.0

    def test_empty_set(self):
        with pytest.raises(EmptySet):
            aggregate([])

    def test_judgment_counts_sum_to_groove_count(self):
        rng = random.Random(20)
        analyses = [analyze_groove(random_grid(rng, 2, 16)) for _ in range(25)]
        report = aggregate(analyses)
        assert sum(report.judgment_counts.values()) == report.groove_count == 25

    def test_per_groove_vs_pooled_weighting(self):
        short = grid_of(Measure.empty(), measure_with_hits(6), Measure.empty())
        m = backbeat_measure()
        long = grid_of(*[m] * 10)
        analyses = [analyze_groove(short), analyze_groove(long)]
        per_groove = aggregate(analyses)
        pooled = aggregate(analyses, pooled=True)
        v_short = analyses[0].profile.interior()
        v_long = analyses[1].profile.interior()
        assert per_groove.avg_variation == pytest.approx(
            fmean([fmean(v_short), fmean(v_long)])
        )
        assert pooled.avg_variation == pytest.approx(fmean(v_short + v_long))

    def test_short_grooves_excluded_from_variation_averages(self):
        two_measures = grid_of(Measure.empty(), measure_with_hits(9))
        m = backbeat_measure()
        report = aggregate([analyze_groove(two_measures), analyze_groove(grid_of(*[m] * 8))])
        assert report.avg_variation == 0.0  # the 8-measure repeat contributes 0
        assert report.groove_count == 2

    def test_duplication_attached_when_training_supplied(self):
        rng = random.Random(21)
        training = [random_grid(rng, 8, 10) for _ in range(3)]
        analyses = [analyze_groove(random_grid(rng, 4, 8)) for _ in range(2)]
        report = aggregate(analyses, training=training)
        assert report.duplication_histogram is not None
        assert sum(report.duplication_histogram.values()) == sum(
            len(a.groove.measures) - 2 for a in analyses
        )
