"""Identification functions and the set-valued functionals they induce.

A functional is described by an identification function ``V(x, y)`` that is
increasing and left-continuous in ``x``.  For a finite nonnegative measure
``P`` (here: a weighted list of observations) the functional value is the
interval ``[T-, T+]`` with

    T- = sup{x : V(x, P) < 0},    T+ = inf{x : V(x, P) > 0}.

All arithmetic is generic over ``float`` and ``fractions.Fraction``; feeding
``Fraction`` data (and parameters) makes every closed-form and knot-based
computation exact.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Any

from .errors import ConvergenceError, InvalidParameterError

INF = math.inf


class Family(enum.Enum):
    MEAN = "mean"
    SECOND_MOMENT = "second-moment"
    QUANTILE = "quantile"
    MEDIAN = "median"
    EXPECTILE = "expectile"
    RATIO = "ratio"
    LP = "lp"
    HUBER = "huber"


class SolverHint(enum.Enum):
    CLOSED_FORM = "closed-form"
    KNOTS = "piecewise-linear-knots"
    BISECTION = "monotone-bisection"


_INTERVAL_FAMILIES = {Family.QUANTILE, Family.MEDIAN, Family.HUBER}

_DEFAULT_HINT = {
    Family.MEAN: SolverHint.CLOSED_FORM,
    Family.SECOND_MOMENT: SolverHint.CLOSED_FORM,
    Family.RATIO: SolverHint.CLOSED_FORM,
    Family.QUANTILE: SolverHint.KNOTS,
    Family.MEDIAN: SolverHint.KNOTS,
    Family.HUBER: SolverHint.KNOTS,
    Family.EXPECTILE: SolverHint.KNOTS,
    Family.LP: SolverHint.BISECTION,
}

# which hints each family supports
_ALLOWED_HINTS = {
    Family.MEAN: {SolverHint.CLOSED_FORM, SolverHint.KNOTS, SolverHint.BISECTION},
    Family.SECOND_MOMENT: {SolverHint.CLOSED_FORM, SolverHint.BISECTION},
    Family.RATIO: {SolverHint.CLOSED_FORM, SolverHint.BISECTION},
    Family.QUANTILE: {SolverHint.KNOTS},
    Family.MEDIAN: {SolverHint.KNOTS},
    Family.HUBER: {SolverHint.KNOTS, SolverHint.BISECTION},
    Family.EXPECTILE: {SolverHint.KNOTS, SolverHint.BISECTION},
    Family.LP: {SolverHint.BISECTION},
}


def _lookup(table: Mapping | Callable, y):
    if callable(table):
        return table(y)
    return table[y]


@dataclass(frozen=True)
class FunctionalSpec:
    """A family of identification functions plus its parameters.

    Use the constructors (:meth:`mean`, :meth:`quantile`, ...) rather than
    filling the fields by hand.  ``u`` and ``w`` are only used by the ratio
    family and may be mappings ``y -> value`` or callables.
    """

    family: Family
    alpha: Any = None
    tau: Any = None
    p: Any = None
    delta: Any = None
    u: Any = field(default=None, compare=False)
    w: Any = field(default=None, compare=False)
    solver_hint: SolverHint | None = None
    tolerance: float = 1e-9
    max_iter: int = 200
    bracket: Callable[[Sequence], tuple] | None = field(default=None, compare=False)

    def __post_init__(self):
        fam = self.family
        if fam is Family.QUANTILE and not (0 < self.alpha < 1):
            raise InvalidParameterError(f"quantile level must lie in (0, 1), got {self.alpha}")
        if fam is Family.MEDIAN and self.alpha is None:
            object.__setattr__(self, "alpha", Fraction(1, 2))
        if fam is Family.EXPECTILE and not (0 < self.tau < 1):
            raise InvalidParameterError(f"expectile level must lie in (0, 1), got {self.tau}")
        if fam is Family.LP and not self.p > 1:
            raise InvalidParameterError(f"p must exceed 1, got {self.p}")
        if fam is Family.HUBER and not self.delta > 0:
            raise InvalidParameterError(f"delta must be positive, got {self.delta}")
        if fam is Family.RATIO and (self.u is None or self.w is None):
            raise InvalidParameterError("ratio functional needs both u and w")
        if not self.tolerance > 0:
            raise InvalidParameterError("tolerance must be positive")
        hint = self.solver_hint or _DEFAULT_HINT[fam]
        if hint not in _ALLOWED_HINTS[fam]:
            raise InvalidParameterError(f"{hint.value} solver not available for {fam.value}")
        object.__setattr__(self, "solver_hint", hint)

    # constructors ---------------------------------------------------------

    @classmethod
    def mean(cls, **kw) -> FunctionalSpec:
        return cls(Family.MEAN, **kw)

    @classmethod
    def second_moment(cls, **kw) -> FunctionalSpec:
        return cls(Family.SECOND_MOMENT, **kw)

    @classmethod
    def quantile(cls, alpha, **kw) -> FunctionalSpec:
        return cls(Family.QUANTILE, alpha=alpha, **kw)

    @classmethod
    def median(cls, **kw) -> FunctionalSpec:
        return cls(Family.MEDIAN, **kw)

    @classmethod
    def expectile(cls, tau, **kw) -> FunctionalSpec:
        return cls(Family.EXPECTILE, tau=tau, **kw)

    @classmethod
    def ratio(cls, u, w, **kw) -> FunctionalSpec:
        return cls(Family.RATIO, u=u, w=w, **kw)

    @classmethod
    def lp(cls, p, **kw) -> FunctionalSpec:
        return cls(Family.LP, p=p, **kw)

    @classmethod
    def huber(cls, delta, **kw) -> FunctionalSpec:
        return cls(Family.HUBER, delta=delta, **kw)

    @property
    def singleton_type(self) -> bool:
        """True when T(P) is a single point for every non-null P."""
        return self.family not in _INTERVAL_FAMILIES

    def describe(self) -> dict:
        out = {"family": self.family.value}
        for name in ("alpha", "tau", "p", "delta"):
            val = getattr(self, name)
            if val is not None:
                out[name] = float(val)
        return out


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def identify(spec: FunctionalSpec, eta, y):
    """Evaluate the identification function ``V(eta, y)``."""
    fam = spec.family
    if fam is Family.MEAN:
        return eta - y
    if fam is Family.SECOND_MOMENT:
        return eta - y * y
    if fam is Family.QUANTILE or fam is Family.MEDIAN:
        return (1 if eta > y else 0) - spec.alpha
    if fam is Family.EXPECTILE:
        return 2 * abs((1 if eta > y else 0) - spec.tau) * (eta - y)
    if fam is Family.RATIO:
        wy = _lookup(spec.w, y)
        if not wy > 0:
            raise InvalidParameterError(f"ratio weight w({y}) = {wy} is not positive")
        return eta * wy - _lookup(spec.u, y)
    if fam is Family.LP:
        d = eta - y
        return _sign(d) * abs(d) ** (spec.p - 1)
    if fam is Family.HUBER:
        d = eta - y
        return _sign(d) * min(abs(d), spec.delta)
    raise InvalidParameterError(f"unknown family {fam}")


@dataclass(frozen=True)
class ExtendedInterval:
    """Closed interval ``[lower, upper]`` in the extended reals."""

    lower: Any
    upper: Any

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"empty interval [{self.lower}, {self.upper}]")

    def __contains__(self, x) -> bool:
        return self.lower <= x <= self.upper

    def __iter__(self):
        yield self.lower
        yield self.upper

    @property
    def is_point(self) -> bool:
        return self.lower == self.upper

    @property
    def is_full(self) -> bool:
        return self.lower == -INF and self.upper == INF

    def midpoint(self):
        if math.isinf(self.lower) or math.isinf(self.upper):
            raise ValueError("midpoint of an unbounded interval")
        return (self.lower + self.upper) / 2


NULL_INTERVAL = ExtendedInterval(-INF, INF)


@dataclass(frozen=True)
class WeightedSample:
    """Weighted observations attached to an ordered list of covariates.

    ``covariates`` fixes the covariate order (the chain order for totally
    ordered problems).  Observations with repeated covariate ids are pooled,
    which is the counting-measure convention for ties.
    """

    covariates: tuple
    observations: tuple  # of (covariate, y, weight)

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))
        obs = tuple((c, y, w) for c, y, w in self.observations)
        object.__setattr__(self, "observations", obs)
        if len(set(self.covariates)) != len(self.covariates):
            raise InvalidParameterError("duplicate covariate ids in covariate list")
        known = set(self.covariates)
        for c, _, w in obs:
            if c not in known:
                raise InvalidParameterError(f"observation for unknown covariate {c!r}")
            if w < 0:
                raise InvalidParameterError(f"negative weight {w} at covariate {c!r}")

    @classmethod
    def from_arrays(cls, z: Sequence, y: Sequence, weight: Sequence | None = None) -> WeightedSample:
        """Build a sample from parallel arrays; covariates are the sorted unique ``z``."""
        if weight is None:
            weight = [1] * len(y)
        if not (len(z) == len(y) == len(weight)):
            raise InvalidParameterError("z, y and weight must have equal length")
        covs = sorted(set(z))
        return cls(tuple(covs), tuple(zip(z, y, weight)))

    @classmethod
    def from_values(cls, y: Sequence, weight: Sequence | None = None) -> WeightedSample:
        """One observation per covariate, covariates ``1..n`` in order."""
        z = list(range(1, len(y) + 1))
        return cls.from_arrays(z, y, weight)

    @cached_property
    def groups(self) -> dict:
        out = {c: [] for c in self.covariates}
        for c, y, w in self.observations:
            out[c].append((y, w))
        return out

    def pairs(self, covariates: Iterable | None = None) -> list:
        """``(y, weight)`` pairs for the given covariates (all by default)."""
        if covariates is None:
            covariates = self.covariates
        out = []
        for c in covariates:
            out.extend(self.groups[c])
        return out

    def mass(self, covariate) -> Any:
        return sum(w for _, w in self.groups[covariate])

    def restrict(self, covariates: Sequence) -> WeightedSample:
        keep = set(covariates)
        return WeightedSample(tuple(covariates), tuple(o for o in self.observations if o[0] in keep))

    def reversed(self) -> WeightedSample:
        return WeightedSample(tuple(reversed(self.covariates)), self.observations)

    @property
    def ys(self) -> list:
        return [y for _, y, _ in self.observations]


def _as_pairs(sample) -> list:
    if isinstance(sample, WeightedSample):
        return sample.pairs()
    return list(sample)


def identification_sum(spec: FunctionalSpec, eta, sample) -> Any:
    """Weighted sum of ``V(eta, y)``; ``sample`` is a WeightedSample or (y, w) pairs."""
    total = 0
    for y, w in _as_pairs(sample):
        if w:
            total += w * identify(spec, eta, y)
    return total


def functional_interval(spec: FunctionalSpec, sample) -> ExtendedInterval:
    """The functional value ``[T-, T+]`` of a weighted sample."""
    pairs = [(y, w) for y, w in _as_pairs(sample) if w > 0]
    if not pairs:
        return NULL_INTERVAL
    hint = spec.solver_hint
    fam = spec.family
    if hint is SolverHint.CLOSED_FORM:
        return _closed_form(spec, pairs)
    if hint is SolverHint.KNOTS:
        if fam in (Family.QUANTILE, Family.MEDIAN):
            return _quantile_scan(spec.alpha, pairs)
        if fam is Family.HUBER:
            knots = [y + s for y, _ in pairs for s in (-spec.delta, spec.delta)]
        else:
            knots = [y for y, _ in pairs]
        return _continuous_knots(spec, pairs, knots)
    return _bisection(spec, pairs)


def _closed_form(spec, pairs):
    fam = spec.family
    if fam is Family.MEAN:
        num = sum(w * y for y, w in pairs)
        den = sum(w for _, w in pairs)
    elif fam is Family.SECOND_MOMENT:
        num = sum(w * y * y for y, w in pairs)
        den = sum(w for _, w in pairs)
    else:  # ratio
        num = 0
        den = 0
        for y, w in pairs:
            wy = _lookup(spec.w, y)
            if not wy > 0:
                raise InvalidParameterError(f"ratio weight w({y}) = {wy} is not positive")
            num += w * _lookup(spec.u, y)
            den += w * wy
    t = num / den
    return ExtendedInterval(t, t)


def _quantile_scan(alpha, pairs):
    # V(x, P) = W(y < x) - alpha * W jumps right after each y value
    agg = {}
    for y, w in pairs:
        agg[y] = agg.get(y, 0) + w
    level = alpha * sum(agg.values())
    lower = upper = None
    cum = 0
    for y in sorted(agg):
        cum += agg[y]
        if lower is None and cum - level >= 0:
            lower = y
        if cum - level > 0:
            upper = y
            break
    return ExtendedInterval(lower, upper)


def _continuous_knots(spec, pairs, knots):
    """Exact roots of a continuous, piecewise-linear, increasing V(., P)."""
    ks = sorted(set(knots))
    ks = [ks[0] - 1] + ks + [ks[-1] + 1]
    vs = [identification_sum(spec, k, pairs) for k in ks]

    def root(i):
        # zero of the affine piece through (ks[i], vs[i]) and (ks[i+1], vs[i+1])
        return ks[i] - vs[i] * (ks[i + 1] - ks[i]) / (vs[i + 1] - vs[i])

    m = len(ks) - 1
    left_slope = vs[1] - vs[0]
    right_slope = vs[m] - vs[m - 1]

    neg = [i for i, v in enumerate(vs) if v < 0]
    if not neg:
        if left_slope > 0 and vs[0] > 0:
            lower = root(0)
        elif left_slope > 0:
            lower = ks[0]
        else:
            lower = -INF
    elif neg[-1] == m:
        lower = root(m - 1) if right_slope > 0 else INF
    else:
        lower = root(neg[-1])

    pos = [i for i, v in enumerate(vs) if v > 0]
    if not pos:
        upper = root(m - 1) if right_slope > 0 else INF
    elif pos[0] == 0:
        upper = root(0) if left_slope > 0 else -INF
    else:
        upper = root(pos[0] - 1)
    return ExtendedInterval(lower, upper)


def _bisection(spec, pairs):
    if spec.bracket is not None:
        lo, hi = spec.bracket([y for y, _ in pairs])
    else:
        ys = [y for y, _ in pairs]
        lo, hi = float(min(ys)) - 1.0, float(max(ys)) + 1.0

    def vsum(x):
        return identification_sum(spec, x, pairs)

    if not vsum(lo) < 0 or not vsum(hi) > 0:
        raise ConvergenceError(
            f"no sign change of V(., P) on [{lo}, {hi}]; check the solver hint or bracket"
        )

    def search(strict_left):
        a, b = lo, hi
        for _ in range(spec.max_iter):
            if b - a <= spec.tolerance:
                return (a + b) / 2
            mid = (a + b) / 2
            v = vsum(mid)
            left = v < 0 if strict_left else v <= 0
            if left:
                a = mid
            else:
                b = mid
        raise ConvergenceError(f"bisection did not reach tolerance {spec.tolerance}")

    lower = search(True)
    upper = search(False)
    if lower > upper:
        lower = upper = (lower + upper) / 2
    return ExtendedInterval(lower, upper)


def check_identification(spec: FunctionalSpec, ys: Iterable, grid: Iterable) -> None:
    """Sampled check that ``x -> V(x, y)`` is nondecreasing for each ``y``.

    Raises InvalidParameterError on the first decrease found.
    """
    xs = sorted(grid)
    for y in ys:
        prev = None
        for x in xs:
            v = identify(spec, x, y)
            if prev is not None and v < prev:
                raise InvalidParameterError(f"V(., {y}) decreases at x={x}")
            prev = v
