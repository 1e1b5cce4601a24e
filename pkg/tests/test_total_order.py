from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import ALL_FAMILIES, FAMILIES, chain_samples
from isorange import (
    FunctionalSpec,
    IndexPartition,
    IsotonicFit,
    NotMonotoneError,
    Pooling,
    Side,
    WeightedSample,
    functional_interval,
    is_solution,
    minimizer_indices,
    minmax_fit,
    pav,
    solution_band,
)
from isorange.oracle import band_minimizers, verify_simultaneous_optimality

F = Fraction
MEAN = FunctionalSpec.mean()
MEDIAN = FunctionalSpec.median()


def chain(*ys, weights=None):
    return WeightedSample.from_values([F(y) for y in ys], weights)


class TestMinimizerIndices:
    # positions are 0-based suffix starts; n means the empty suffix
    def test_dip_eta7(self, dip):
        assert minimizer_indices(MEAN, dip, 7) == {3}

    def test_dip_eta6(self, dip):
        assert minimizer_indices(MEAN, dip, 6) == {0, 3}

    def test_quantile_below_all(self):
        assert minimizer_indices(FunctionalSpec.quantile(F(3, 10)), chain(1, 4, 2), -10) == {0}


class TestMinmaxFit:
    def test_dip(self, dip):
        for side in Side:
            assert minmax_fit(MEAN, dip, side).values == (6, 6, 6, 10)

    def test_median_pair(self):
        s = chain(2, 1)
        assert minmax_fit(MEDIAN, s, Side.LOWER).values == (1, 1)
        assert minmax_fit(MEDIAN, s, Side.UPPER).values == (2, 2)

    def test_increasing_data(self):
        assert minmax_fit(MEAN, chain(1, 2, 3)).values == (1, 2, 3)

    def test_repeated_covariates_are_pooled(self):
        s = WeightedSample.from_arrays([1, 1, 2], [F(4), F(0), F(1)])
        assert minmax_fit(MEAN, s).values == (F(5, 3), F(5, 3))
        assert s.covariates == (1, 2)

    def test_string_sides(self, dip):
        assert minmax_fit(MEAN, dip, "lower") == minmax_fit(MEAN, dip, Side.LOWER)


class TestPav:
    def test_dip_strong(self, dip):
        res = pav(MEAN, dip, Pooling.STRONG_ONLY)
        assert res.partition.blocks == ((0, 3), (3, 4))
        assert res.lower.values == res.upper.values == (6, 6, 6, 10)

    def test_median_strong(self):
        res = pav(MEDIAN, chain(2, 1), Pooling.STRONG_ONLY)
        assert res.partition.blocks == ((0, 2),)
        assert res.lower.values == (1, 1)
        assert res.upper.values == (2, 2)

    def test_single_observation(self):
        res = pav(FunctionalSpec.quantile(F(1, 3)), chain(5))
        assert res.partition.blocks == ((0, 1),)
        assert res.lower.values == res.upper.values == (5,)

    def test_weak_pooling_is_late_stopping(self):
        # every adjacent pair is a weak violator here, so one block remains
        res = pav(MEDIAN, chain(2, 0, 1), Pooling.POOL_WEAK)
        assert res.partition.blocks == ((0, 3),)
        assert res.lower.values == (1, 1, 1)

    def test_partition_must_tile(self):
        with pytest.raises(ValueError):
            IndexPartition(((0, 2), (3, 4)))


class TestSolutionBand:
    def test_median_pair(self):
        sb = solution_band(MEDIAN, chain(2, 1))
        assert [(b.start, b.stop, b.eta_lower, b.eta_upper) for b in sb.bands] == [(0, 2, 1, 2)]
        assert sb.band_jump_sets == {(0, 2): ()}

    def test_singleton_type_has_no_bands(self, dip):
        assert solution_band(MEAN, dip).bands == ()

    def test_alternating_median(self):
        s = chain(0, 2, 0, 2)
        sb = solution_band(MEDIAN, s)
        assert sb.lower.values == (0, 0, 0, 2)
        assert sb.upper.values == (0, 2, 2, 2)
        assert sb.band_jump_sets == {(1, 3): ()}
        # the oracle agrees: only the bracketing suffixes minimize on all of (0, 2]
        admissible = band_minimizers(MEDIAN, s, None, 0, 2)
        starts = sorted(4 - len(x) for x in admissible)
        assert not [l for l in starts if 1 < l < 3]


class TestIsSolution:
    def test_dip(self, dip):
        assert is_solution(MEAN, dip, {1: 6, 2: 6, 3: 6, 4: 10})

    def test_median_jump_rejected(self):
        assert not is_solution(MEDIAN, chain(2, 1), {1: 1, 2: 2})

    def test_median_constant_accepted(self):
        assert is_solution(MEDIAN, chain(2, 1), {1: F(13, 10), 2: F(13, 10)})

    def test_non_monotone(self):
        with pytest.raises(NotMonotoneError):
            is_solution(MEAN, chain(1, 2), {1: 3, 2: 1})


@pytest.mark.parametrize("name", sorted(ALL_FAMILIES))
@given(sample=chain_samples())
@settings(max_examples=30, deadline=None)
def test_extreme_fits_are_ordered_solutions(name, sample):
    spec = ALL_FAMILIES[name]
    lo, hi = minmax_fit(spec, sample, Side.LOWER), minmax_fit(spec, sample, Side.UPPER)
    tol = 1e-7 if name == "lp_3" else 0
    assert all(a <= b + tol for a, b in zip(lo.values, hi.values))
    assert is_solution(spec, sample, lo, tol=tol or 1e-9)
    assert is_solution(spec, sample, hi, tol=tol or 1e-9)
    if spec.singleton_type and name != "lp_3":
        assert lo == hi


@pytest.mark.parametrize("name", sorted(FAMILIES))
@given(sample=chain_samples())
@settings(max_examples=40, deadline=None)
def test_maxmin_equals_minmax(name, sample):
    spec = FAMILIES[name]
    for side in Side:
        assert minmax_fit(spec, sample, side, "maxmin") == minmax_fit(spec, sample, side, "minmax")


@pytest.mark.parametrize("name", sorted(FAMILIES))
@given(sample=chain_samples())
@settings(max_examples=40, deadline=None)
def test_strong_only_pav_gives_extreme_fits(name, sample):
    spec = FAMILIES[name]
    res = pav(spec, sample, Pooling.STRONG_ONLY)
    assert res.lower == minmax_fit(spec, sample, Side.LOWER)
    assert res.upper == minmax_fit(spec, sample, Side.UPPER)


@pytest.mark.parametrize("name", sorted(FAMILIES))
@given(sample=chain_samples())
@settings(max_examples=40, deadline=None)
def test_weak_pooling_pav_fits_are_solutions(name, sample):
    spec = FAMILIES[name]
    res = pav(spec, sample, Pooling.POOL_WEAK)
    assert verify_simultaneous_optimality(spec, sample, None, res.lower).verified
    assert verify_simultaneous_optimality(spec, sample, None, res.upper).verified
    if spec.singleton_type:
        assert res.upper == minmax_fit(spec, sample)


@pytest.mark.parametrize("pooling", list(Pooling))
@pytest.mark.parametrize("name", sorted(FAMILIES))
@given(sample=chain_samples())
@settings(max_examples=30, deadline=None)
def test_pav_blocks_are_representative(name, pooling, sample):
    spec = FAMILIES[name]
    groups = [sample.groups[z] for z in sample.covariates]

    def t(i, j):
        return functional_interval(spec, [p for g in groups[i : j + 1] for p in g])

    for a, b in pav(spec, sample, pooling).partition.blocks:
        whole = t(a, b - 1)
        for j in range(a, b):
            assert t(j, b - 1).lower <= whole.lower <= whole.upper <= t(a, j).upper


@pytest.mark.parametrize("name", sorted(FAMILIES))
@given(sample=chain_samples())
@settings(max_examples=30, deadline=None)
def test_sandwich_fits_are_solutions(name, sample):
    spec = FAMILIES[name]
    lo, hi = minmax_fit(spec, sample, Side.LOWER), minmax_fit(spec, sample, Side.UPPER)
    for lam in (F(1, 4), F(1, 2), F(3, 4)):
        fit = IsotonicFit(sample.covariates, tuple(lam * a + (1 - lam) * b for a, b in zip(lo.values, hi.values)))
        assert is_solution(spec, sample, fit, tol=0)


@pytest.mark.parametrize("name", sorted(FAMILIES))
@given(sample=chain_samples())
@settings(max_examples=30, deadline=None)
def test_minimizer_selectors_increase(name, sample):
    spec = FAMILIES[name]
    grid = [F(k, 4) for k in range(-28, 29)]
    sets = [minimizer_indices(spec, sample, eta, tol=0) for eta in grid]
    mins = [min(s) for s in sets]
    maxs = [max(s) for s in sets]
    assert mins == sorted(mins)
    assert maxs == sorted(maxs)


@pytest.mark.parametrize("name", ["quantile_0.5", "huber_1", "quantile_0.3"])
@given(sample=chain_samples(max_size=6))
@settings(max_examples=30, deadline=None)
def test_band_jumps_match_oracle(name, sample):
    spec = FAMILIES[name]
    sb = solution_band(spec, sample)
    n = len(sample.covariates)
    for b in sb.bands:
        admissible = band_minimizers(spec, sample, None, b.eta_lower, b.eta_upper)
        starts = {n - len(x) for x in admissible}
        assert set(b.jumps) == {l for l in starts if b.start < l < b.stop}
