import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from survshape.errors import (
    DataError,
    GridDegenerateError,
    MetricUndefinedError,
)
from survshape.survival import (
    PiecewiseChf,
    SurvivalDataset,
    TimeGrid,
    build_time_grid,
    chf_to_sf,
    concordance_index,
    mean_chf,
    nelson_aalen,
    project_chf,
)


def make_dataset(times, events, features=None):
    times = np.asarray(times, dtype=float)
    if features is None:
        features = np.arange(len(times), dtype=float).reshape(-1, 1)
    return SurvivalDataset.from_arrays(features, times, events)


def brute_force_nelson_aalen(times, events, at):
    """Direct sum of d_i / n_i over sorted distinct times, for tiny n."""
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=int)
    total = 0.0
    for u in sorted(set(times.tolist())):
        if u > at:
            break
        d = int(events[times == u].sum())
        n = int((times >= u).sum())
        if d:
            total += d / n
    return total


class TestDatasetInvariants:
    def test_rejects_single_sample(self):
        with pytest.raises(DataError):
            make_dataset([1.0], [1])

    def test_rejects_no_events(self):
        with pytest.raises(DataError):
            make_dataset([1.0, 2.0], [0, 0])

    def test_rejects_negative_time(self):
        with pytest.raises(DataError):
            make_dataset([-1.0, 2.0], [1, 1])

    def test_rejects_bad_indicator(self):
        with pytest.raises(DataError):
            make_dataset([1.0, 2.0], [1, 2])


class TestBuildTimeGrid:
    def test_three_events(self):
        ds = make_dataset([1.0, 2.0, 3.0], [1, 1, 1])
        grid = build_time_grid(ds, gamma_fraction=0.01)
        assert np.array_equal(grid.times, [1.0, 2.0, 3.0])
        assert grid.gamma == pytest.approx(0.02)
        assert np.allclose(grid.widths, [1.0, 1.0, 0.02])
        assert grid.horizon == pytest.approx(3.02)

    def test_single_distinct_time_degenerate(self):
        ds = make_dataset([5.0, 5.0, 5.0], [1, 1, 1])
        with pytest.raises(GridDegenerateError):
            build_time_grid(ds)

    def test_duplicate_times_deduped(self):
        ds = make_dataset([1.0, 2.0, 2.0, 4.0], [1, 1, 1, 1])
        grid = build_time_grid(ds, gamma_fraction=0.5)
        assert np.array_equal(grid.times, [1.0, 2.0, 4.0])
        assert grid.gamma == pytest.approx(1.5)

    def test_fallback_to_all_times_when_one_event_time(self):
        ds = make_dataset([1.0, 2.0, 3.0], [0, 1, 0])
        grid = build_time_grid(ds)
        assert np.array_equal(grid.times, [1.0, 2.0, 3.0])


class TestNelsonAalen:
    def test_hand_case_with_censoring(self):
        ds = make_dataset([1.0, 2.0, 3.0], [1, 0, 1])
        grid = build_time_grid(ds)
        chf = nelson_aalen(ds, grid)
        assert np.array_equal(grid.times, [1.0, 3.0])
        assert chf.values == pytest.approx([1 / 3, 1 / 3 + 1.0], abs=1e-12)

    def test_single_event_at_first_time(self):
        ds = make_dataset([1.0, 2.0, 3.0, 4.0], [1, 0, 0, 0])
        grid = build_time_grid(ds)
        chf = nelson_aalen(ds, grid)
        assert np.allclose(chf.values, 0.25, atol=1e-12)

    def test_two_samples_no_censoring(self):
        ds = make_dataset([1.0, 2.0], [1, 1])
        grid = build_time_grid(ds)
        chf = nelson_aalen(ds, grid)
        assert chf.values == pytest.approx([0.5, 1.5], abs=1e-12)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = rng.integers(3, 20)
            times = np.round(rng.uniform(0.5, 10.0, n), 1)
            events = rng.integers(0, 2, n)
            if events.sum() == 0:
                events[0] = 1
            ds = make_dataset(times, events)
            try:
                grid = build_time_grid(ds)
            except GridDegenerateError:
                continue
            chf = nelson_aalen(ds, grid)
            expected = [brute_force_nelson_aalen(times, events, tj) for tj in grid.times]
            assert chf.values == pytest.approx(expected, abs=1e-12)
            assert np.all(np.diff(chf.values) >= -1e-15)


class TestChfSfConversion:
    def test_zero_hazard(self):
        grid = TimeGrid(np.array([1.0, 2.0, 3.0]), 0.1)
        sf = chf_to_sf(PiecewiseChf(grid, np.zeros(3)))
        assert np.array_equal(sf.values, [1.0, 1.0, 1.0])

    def test_log_two(self):
        grid = TimeGrid(np.array([1.0, 2.0]), 0.1)
        sf = chf_to_sf(PiecewiseChf(grid, np.full(2, np.log(2.0))))
        assert sf.values == pytest.approx([0.5, 0.5], abs=1e-15)

    def test_hand_values(self):
        grid = TimeGrid(np.array([1.0, 3.0]), 0.1)
        sf = chf_to_sf(PiecewiseChf(grid, np.array([1 / 3, 4 / 3])))
        assert sf.values == pytest.approx([0.71653, 0.26360], abs=5e-6)

    @given(st.lists(st.floats(0.0, 50.0), min_size=2, max_size=8))
    def test_neg_log_roundtrip(self, raw):
        values = np.sort(np.asarray(raw))
        grid = TimeGrid(np.arange(1.0, len(values) + 1.0), 0.5)
        chf = PiecewiseChf(grid, values)
        back = -np.log(chf_to_sf(chf).values)
        assert back == pytest.approx(values, abs=1e-12)


class TestProjectChf:
    def test_identity_on_same_grid(self):
        grid = TimeGrid(np.array([1.0, 2.0, 3.0]), 0.1)
        chf = PiecewiseChf(grid, np.array([0.1, 0.2, 0.5]))
        out = project_chf(chf, grid)
        assert np.array_equal(out.values, chf.values)

    def test_zero_before_source_start(self):
        source_grid = TimeGrid(np.array([2.0, 5.0]), 0.1)
        chf = PiecewiseChf(source_grid, np.array([1 / 3, 1 / 3]))
        target = TimeGrid(np.array([1.0, 2.0, 3.0]), 0.1)
        out = project_chf(chf, target)
        assert out.values == pytest.approx([0.0, 1 / 3, 1 / 3], abs=1e-15)

    def test_constant_source(self):
        source_grid = TimeGrid(np.array([0.5, 1.5]), 0.1)
        chf = PiecewiseChf(source_grid, np.array([0.7, 0.7]))
        target = TimeGrid(np.array([0.6, 2.0, 9.0]), 1.0)
        out = project_chf(chf, target)
        assert np.allclose(out.values, 0.7)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_idempotent_on_own_grid(self, seed):
        rng = np.random.default_rng(seed)
        times = np.unique(np.round(rng.uniform(0, 10, 5), 2))
        if len(times) < 2:
            return
        grid = TimeGrid(times, 0.3)
        chf = PiecewiseChf(grid, np.sort(rng.uniform(0, 2, len(times))))
        once = project_chf(chf, grid)
        twice = project_chf(once, grid)
        assert np.array_equal(once.values, twice.values)


class TestMeanChf:
    def test_mean_of_two(self):
        grid = TimeGrid(np.array([1.0, 2.0]), 0.1)
        a = PiecewiseChf(grid, np.array([0.2, 0.4]))
        b = PiecewiseChf(grid, np.array([0.4, 0.8]))
        out = mean_chf([a, b])
        assert out.values == pytest.approx([0.3, 0.6])


class TestConcordanceIndex:
    def test_perfect_ordering(self):
        ds = make_dataset([1.0, 2.0, 3.0, 4.0], [1, 1, 1, 1])
        assert concordance_index([4.0, 3.0, 2.0, 1.0], ds) == 1.0

    def test_all_tied_scores(self):
        ds = make_dataset([1.0, 2.0, 3.0], [1, 1, 1])
        assert concordance_index([5.0, 5.0, 5.0], ds) == 0.5

    def test_two_thirds_hand_case(self):
        ds = make_dataset([1.0, 2.0, 3.0], [1, 1, 1])
        assert concordance_index([3.0, 1.0, 2.0], ds) == pytest.approx(2 / 3)

    def test_censored_pairs_inadmissible(self):
        # Only the (t=1, event) vs (t=2, censored) pair is admissible.
        ds = make_dataset([1.0, 2.0], [1, 0])
        assert concordance_index([2.0, 1.0], ds) == 1.0
        assert concordance_index([1.0, 2.0], ds) == 0.0

    def test_no_admissible_pairs(self):
        # Equal times, both events: inadmissible under the tie convention.
        ds = make_dataset([2.0, 2.0], [1, 1])
        with pytest.raises(MetricUndefinedError):
            concordance_index([1.0, 2.0], ds)

    def test_tied_time_event_vs_censored(self):
        ds = make_dataset([2.0, 2.0], [1, 0])
        assert concordance_index([2.0, 1.0], ds) == 1.0
        assert concordance_index([1.0, 2.0], ds) == 0.0

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_rank_invariance(self, seed):
        rng = np.random.default_rng(seed)
        n = 12
        ds = make_dataset(np.round(rng.uniform(1, 9, n), 1), rng.integers(0, 2, n) | (np.arange(n) == 0))
        scores = rng.normal(size=n)
        try:
            base = concordance_index(scores, ds)
        except MetricUndefinedError:
            return
        transformed = np.exp(3.0 * scores) + 7.0
        assert concordance_index(transformed, ds) == pytest.approx(base)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_reversal_complement(self, seed):
        rng = np.random.default_rng(seed)
        n = 10
        ds = make_dataset(np.round(rng.uniform(1, 9, n), 1), np.ones(n, dtype=int))
        scores = rng.permutation(n).astype(float)  # distinct, so no risk ties
        try:
            forward = concordance_index(scores, ds)
            backward = concordance_index(-scores, ds)
        except MetricUndefinedError:
            return
        assert forward + backward == pytest.approx(1.0)
