import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FAMILIES, chain_samples
from isorange import (
    DiscreteMixingMeasure,
    FitDomainError,
    FunctionalSpec,
    InvalidParameterError,
    IsotonicFit,
    elementary_score,
    expected_score,
    functional_interval,
    minmax_fit,
    mixture_loss,
    murphy_curve,
)
from isorange.scores import MurphyCurve, breakpoint_grid, superlevel_score

F = Fraction
MEAN = FunctionalSpec.mean()


class TestElementaryScore:
    def test_equal_indicators(self):
        assert elementary_score(MEAN, 8, 9, 10) == 0

    def test_forecast_above(self):
        assert elementary_score(MEAN, 8, 9, 5) == 3

    def test_forecast_below(self):
        assert elementary_score(MEAN, 8, 5, 9) == 1

    def test_infinite_forecasts(self):
        assert elementary_score(MEAN, 8, math.inf, 5) == 3
        assert elementary_score(MEAN, 8, -math.inf, 9) == 1


class TestExpectedScore:
    def test_superlevel_sums_of_dip(self, dip):
        g1 = (9, 9, 5, 5)
        g4 = (6, 6, 6, 10)
        assert superlevel_score(MEAN, 7, dict(zip(range(1, 5), g1)), dip) == -4
        assert superlevel_score(MEAN, 7, dict(zip(range(1, 5), g4)), dip) == -3

    def test_elementary_sums_of_dip(self, dip):
        # S_7 sums: only z4 (y=10) disagrees for g1, giving -V(7,10) = 3
        g1 = dict(zip(range(1, 5), (9, 9, 5, 5)))
        g4 = dict(zip(range(1, 5), (6, 6, 6, 10)))
        assert expected_score(MEAN, 7, g1, dip) == 3
        assert expected_score(MEAN, 7, g4, dip) == 4

    @given(chain_samples(), st.data())
    @settings(max_examples=40, deadline=None)
    def test_two_forms_differ_by_fit_free_constant(self, sample, data):
        n = len(sample.covariates)
        vals = sorted(data.draw(st.lists(st.integers(-6, 6), min_size=n, max_size=n)))
        other = sorted(data.draw(st.lists(st.integers(-6, 6), min_size=n, max_size=n)))
        a = dict(zip(sample.covariates, vals))
        b = dict(zip(sample.covariates, other))
        for eta in range(-7, 8):
            da = expected_score(MEAN, eta, a, sample) - superlevel_score(MEAN, eta, a, sample)
            db = expected_score(MEAN, eta, b, sample) - superlevel_score(MEAN, eta, b, sample)
            assert da == db

    def test_below_everything_is_zero(self, dip):
        assert expected_score(MEAN, -100, dict(zip(range(1, 5), (6, 6, 6, 10))), dip) == 0

    def test_missing_covariate(self, dip):
        with pytest.raises(FitDomainError):
            expected_score(MEAN, 0, {1: 0}, dip)


class TestMurphy:
    def test_dip_rows_cross(self, dip):
        g1 = IsotonicFit(dip.covariates, (9, 9, 5, 5))
        g4 = IsotonicFit(dip.covariates, (6, 6, 6, 10))
        curve = murphy_curve(MEAN, [g1, g4], dip)
        at = dict(zip(curve.etas, zip(curve.rows[1], curve.rows[2])))
        # 7 is not a grid point; 7.5 lies in the same cell (6, 9)
        assert at[F(15, 2)][0] < at[F(15, 2)][1]
        assert at[9][0] > at[9][1]

    def test_single_and_identical(self, dip):
        g = IsotonicFit(dip.covariates, (6, 6, 6, 10))
        assert len(murphy_curve(MEAN, [g], dip).rows) == 1
        c = murphy_curve(MEAN, [g, g], dip)
        assert c.rows[1] == c.rows[2]

    def test_grid_shape(self):
        assert breakpoint_grid([3, 1, 1]) == [0, 1, 2, 3, 4]
        assert breakpoint_grid([]) == [0]
        assert breakpoint_grid([math.inf, 2]) == [1, 2, 3]

    def test_csv(self):
        curve = MurphyCurve((0, F(1, 3)), {"a": (1, F(2, 3))})
        assert curve.to_csv() == "eta,fit_a\n0,1\n0.333333333333,0.666666666667\n"

    def test_grid_must_increase(self):
        with pytest.raises(InvalidParameterError):
            MurphyCurve((1, 1), {1: (0, 0)})


class TestMixture:
    def test_single_atom(self):
        h = DiscreteMixingMeasure(((8, 2),))
        assert mixture_loss(MEAN, h, 9, 5) == 6

    def test_empty(self):
        assert mixture_loss(MEAN, DiscreteMixingMeasure(), 9, 5) == 0

    def test_perfect_forecast(self):
        h = DiscreteMixingMeasure.from_mapping({1: 1, 4: 3})
        assert mixture_loss(MEAN, h, 3, 3) == 0

    def test_validation(self):
        with pytest.raises(InvalidParameterError):
            DiscreteMixingMeasure(((1, 0),))
        with pytest.raises(InvalidParameterError):
            DiscreteMixingMeasure(((1, 1), (1, 2)))


GRID = [F(k, 2) for k in range(-14, 15)]


@pytest.mark.parametrize("name", sorted(FAMILIES))
@given(sample=chain_samples(max_size=5))
@settings(max_examples=25, deadline=None)
def test_consistency_of_elementary_scores(name, sample):
    spec = FAMILIES[name]
    t = functional_interval(spec, sample)
    for est in (t.lower, t.upper, (t.lower + t.upper) / 2):
        for eta in GRID:
            best = sum(w * elementary_score(spec, eta, est, y) for _, y, w in sample.observations)
            for x in GRID:
                other = sum(w * elementary_score(spec, eta, x, y) for _, y, w in sample.observations)
                assert best <= other


@pytest.mark.parametrize("name", sorted(FAMILIES))
@given(sample=chain_samples(max_size=5), data=st.data())
@settings(max_examples=25, deadline=None)
def test_consistency_of_mixtures(name, sample, data):
    spec = FAMILIES[name]
    locs = data.draw(st.lists(st.integers(-12, 12), min_size=1, max_size=4, unique=True))
    masses = data.draw(st.lists(st.integers(1, 3), min_size=len(locs), max_size=len(locs)))
    h = DiscreteMixingMeasure(tuple((F(l, 2), m) for l, m in zip(locs, masses)))
    t = functional_interval(spec, sample)

    def loss(x):
        return sum(w * mixture_loss(spec, h, x, y) for _, y, w in sample.observations)

    assert all(loss(t.lower) <= loss(x) for x in GRID)


@pytest.mark.parametrize("name", sorted(FAMILIES))
@given(sample=chain_samples(max_size=5), data=st.data())
@settings(max_examples=25, deadline=None)
def test_regret_is_nonnegative(name, sample, data):
    spec = FAMILIES[name]
    opt = minmax_fit(spec, sample, "upper")
    n = len(sample.covariates)
    rival = sorted(data.draw(st.lists(st.integers(-6, 6).map(F), min_size=n, max_size=n)))
    rival = dict(zip(sample.covariates, rival))
    for eta in GRID:
        assert expected_score(spec, eta, opt, sample) <= expected_score(spec, eta, rival, sample)
