import random
from fractions import Fraction

import pytest
from hypothesis import strategies as st

from isorange import FunctionalSpec, Poset, WeightedSample

# the five families used throughout the randomized checks
FAMILIES = {
    "mean": FunctionalSpec.mean(),
    "quantile_0.3": FunctionalSpec.quantile(Fraction(3, 10)),
    "quantile_0.5": FunctionalSpec.quantile(Fraction(1, 2)),
    "expectile_0.7": FunctionalSpec.expectile(Fraction(7, 10)),
    "huber_1": FunctionalSpec.huber(1),
}

ALL_FAMILIES = dict(
    FAMILIES,
    median=FunctionalSpec.median(),
    second_moment=FunctionalSpec.second_moment(),
    lp_3=FunctionalSpec.lp(3),
    ratio=FunctionalSpec.ratio(lambda y: y, lambda y: 1 + y * y),
)


def random_chain(rng, n_max=8, lo=-5, hi=5, n_min=1):
    n = rng.randint(n_min, n_max)
    ys = [Fraction(rng.randint(lo, hi)) for _ in range(n)]
    ws = [rng.choice((1, 2)) for _ in range(n)]
    return WeightedSample.from_values(ys, ws)


def random_poset(rng, n, p=0.35):
    elements = list(range(1, n + 1))
    edges = [(a, b) for a in elements for b in elements if a < b and rng.random() < p]
    return Poset.from_edges(elements, edges)


def random_poset_sample(rng, poset, lo=-3, hi=3, per=2):
    obs = []
    for z in poset.elements:
        for _ in range(rng.randint(1, per)):
            obs.append((z, Fraction(rng.randint(lo, hi)), rng.choice((1, 2))))
    return WeightedSample(tuple(poset.elements), tuple(obs))


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def dip():
    return WeightedSample.from_values([Fraction(v) for v in (9, 9, 0, 10)])


ys_strategy = st.lists(st.integers(-5, 5).map(Fraction), min_size=1, max_size=7)


@st.composite
def chain_samples(draw, max_size=7):
    ys = draw(st.lists(st.integers(-5, 5).map(Fraction), min_size=1, max_size=max_size))
    ws = draw(st.lists(st.sampled_from((1, 2)), min_size=len(ys), max_size=len(ys)))
    return WeightedSample.from_values(ys, ws)
