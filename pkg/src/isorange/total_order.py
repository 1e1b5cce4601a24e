"""Isotonic regression over totally ordered covariates.

Covariate order is the order of ``sample.covariates``.  Positions are
0-based: a suffix start ``i`` in ``0..n`` stands for the superlevel set
``{z_i, ..., z_{n-1}}`` (``i == n`` is the empty set), and ``T[i, j]`` is the
functional value of the observations at positions ``i..j`` inclusive.
"""

from __future__ import annotations

import enum
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

from .errors import FitDomainError, NotMonotoneError
from .functionals import (
    ExtendedInterval,
    FunctionalSpec,
    WeightedSample,
    functional_interval,
    identification_sum,
)
from .scores import breakpoint_grid

DEFAULT_TOL = 1e-9


class Side(enum.Enum):
    LOWER = "lower"
    UPPER = "upper"


class Pooling(enum.Enum):
    STRONG_ONLY = "strong"
    POOL_WEAK = "weak"


def _side(side) -> Side:
    return side if isinstance(side, Side) else Side(side)


@dataclass(frozen=True)
class IsotonicFit:
    """Values of a fitted function, aligned with ``covariates``."""

    covariates: tuple
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.covariates) != len(self.values):
            raise FitDomainError("one value per covariate")

    @classmethod
    def from_mapping(cls, covariates: Sequence, values: Mapping) -> IsotonicFit:
        try:
            return cls(tuple(covariates), tuple(values[c] for c in covariates))
        except KeyError as exc:
            raise FitDomainError(f"no value for covariate {exc.args[0]!r}") from None

    def __getitem__(self, covariate):
        return self.values[self._index[covariate]]

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    @property
    def _index(self) -> dict:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {c: k for k, c in enumerate(self.covariates)}
            self.__dict__["_idx"] = idx
        return idx

    def as_dict(self) -> dict:
        return dict(zip(self.covariates, self.values))

    def is_increasing(self) -> bool:
        return all(a <= b for a, b in zip(self.values, self.values[1:]))


@dataclass(frozen=True)
class IndexPartition:
    """Contiguous blocks ``(start, stop)`` (stop exclusive) covering ``0..n-1``."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple((int(a), int(b)) for a, b in self.blocks)
        pos = 0
        for a, b in blocks:
            if a != pos or b <= a:
                raise ValueError(f"blocks {blocks} do not tile the index range")
            pos = b
        object.__setattr__(self, "blocks", blocks)

    @property
    def n(self) -> int:
        return self.blocks[-1][1] if self.blocks else 0

    def label(self, covariates: Sequence) -> list:
        """Blocks as lists of covariate ids."""
        return [list(covariates[a:b]) for a, b in self.blocks]


class ChainProblem:
    """Per-position observation groups with a lazily filled ``T[i, j]`` table."""

    def __init__(self, spec: FunctionalSpec, sample: WeightedSample):
        self.spec = spec
        self.sample = sample
        self.covariates = sample.covariates
        self.groups = [sample.groups[c] for c in self.covariates]
        self.n = len(self.groups)
        self._table = {}

    def pairs(self, i: int, j: int) -> list:
        out = []
        for g in self.groups[i : j + 1]:
            out.extend(g)
        return out

    def interval(self, i: int, j: int) -> ExtendedInterval:
        key = (i, j)
        t = self._table.get(key)
        if t is None:
            t = self._table[key] = functional_interval(self.spec, self.pairs(i, j))
        return t

    def suffix_scores(self, eta) -> list:
        """``s_i(eta)`` for ``i = 0..n``; the last entry is the empty suffix."""
        s = [0] * (self.n + 1)
        for i in range(self.n - 1, -1, -1):
            s[i] = s[i + 1] + identification_sum(self.spec, eta, self.groups[i])
        return s

    def grid_values(self) -> list:
        vals = []
        for i in range(self.n):
            for j in range(i, self.n):
                vals.extend(self.interval(i, j))
        return vals


def minimizer_indices(spec: FunctionalSpec, sample: WeightedSample, eta, tol=DEFAULT_TOL) -> frozenset:
    """Suffix starts minimizing the identification sum over the suffix at ``eta``."""
    return _argmin_suffixes(ChainProblem(spec, sample), eta, tol)


def _argmin_suffixes(prob: ChainProblem, eta, tol) -> frozenset:
    s = prob.suffix_scores(eta)
    best = min(s)
    return frozenset(i for i, v in enumerate(s) if v <= best + tol)


def _maxmin(prob: ChainProblem, bound: str) -> list:
    # g(l) = max_{i<=l} min_{j>=i} T_{i:j}
    n = prob.n
    inner = []
    for i in range(n):
        inner.append(min(getattr(prob.interval(i, j), bound) for j in range(i, n)))
    out = []
    run = None
    for v in inner:
        run = v if run is None else max(run, v)
        out.append(run)
    return out


def _minmax(prob: ChainProblem, bound: str) -> list:
    # g(l) = min_{j>=l} max_{i<=j} T_{i:j}
    n = prob.n
    inner = [max(getattr(prob.interval(i, j), bound) for i in range(j + 1)) for j in range(n)]
    out = [None] * n
    run = None
    for j in range(n - 1, -1, -1):
        run = inner[j] if run is None else min(run, inner[j])
        out[j] = run
    return out


def minmax_fit(spec: FunctionalSpec, sample: WeightedSample, side=Side.UPPER, form: str = "maxmin") -> IsotonicFit:
    """Minimal (``side='lower'``) or maximal (``side='upper'``) solution.

    ``form`` selects which of the two equivalent expressions is evaluated,
    ``max_i min_j`` (default) or ``min_j max_i``.
    """
    prob = ChainProblem(spec, sample)
    bound = "upper" if _side(side) is Side.UPPER else "lower"
    if form == "maxmin":
        vals = _maxmin(prob, bound)
    elif form == "minmax":
        vals = _minmax(prob, bound)
    else:
        raise ValueError(f"unknown form {form!r}")
    return IsotonicFit(prob.covariates, vals)


@dataclass(frozen=True)
class PavResult:
    lower: IsotonicFit
    upper: IsotonicFit
    partition: IndexPartition


def _strong(a: ExtendedInterval, b: ExtendedInterval) -> bool:
    return a.lower > b.upper


def _invalid(a: ExtendedInterval, b: ExtendedInterval) -> bool:
    return a.upper < b.lower


def pav(spec: FunctionalSpec, sample: WeightedSample, pooling=Pooling.POOL_WEAK) -> PavResult:
    """Pool-adjacent-violators for an identifiable functional.

    Blocks are scanned left to right and a merged block is re-checked against
    its left neighbour.  ``STRONG_ONLY`` pools strong violators and, only
    where no increasing block-constant selection exists yet, the leftmost
    weak violator in the way; the fits are the smallest and largest
    increasing selections.  ``POOL_WEAK`` pools every pair that is not an
    invalid pooling and returns the block endpoints.
    """
    pooling = pooling if isinstance(pooling, Pooling) else Pooling(pooling)
    prob = ChainProblem(spec, sample)
    n = prob.n
    stack = []  # [start, stop, interval]

    def push(start, stop):
        stack.append([start, stop, prob.interval(start, stop - 1)])
        while len(stack) > 1:
            a, b = stack[-2], stack[-1]
            if pooling is Pooling.STRONG_ONLY:
                merge = _strong(a[2], b[2])
            else:
                merge = not _invalid(a[2], b[2])
            if not merge:
                break
            stack.pop()
            stack.pop()
            stack.append([a[0], b[1], prob.interval(a[0], b[1] - 1)])

    for k in range(n):
        push(k, k + 1)

    if pooling is Pooling.STRONG_ONLY:
        while True:
            k = _first_infeasible(stack)
            if k is None:
                break
            # pair (k-1, k) is a weak violator here; pool it and re-run the cascade
            rest = stack[k + 1 :]
            a, b = stack[k - 1], stack[k]
            del stack[k - 1 :]
            push(a[0], b[1])
            for blk in rest:
                stack.append(blk)
                _cascade_strong(stack, prob)
        lo, hi = _selections(stack)
    else:
        lo = [blk[2].lower for blk in stack]
        hi = [blk[2].upper for blk in stack]

    lower, upper = [], []
    for blk, a, b in zip(stack, lo, hi):
        width = blk[1] - blk[0]
        lower.extend([a] * width)
        upper.extend([b] * width)
    part = IndexPartition(tuple((blk[0], blk[1]) for blk in stack))
    return PavResult(IsotonicFit(prob.covariates, lower), IsotonicFit(prob.covariates, upper), part)


def _cascade_strong(stack, prob):
    while len(stack) > 1 and _strong(stack[-2][2], stack[-1][2]):
        b = stack.pop()
        a = stack.pop()
        stack.append([a[0], b[1], prob.interval(a[0], b[1] - 1)])


def _first_infeasible(stack):
    run = None
    for k, blk in enumerate(stack):
        run = blk[2].lower if run is None else max(run, blk[2].lower)
        if run > blk[2].upper:
            return k
    return None


def _selections(stack):
    lo, run = [], None
    for blk in stack:
        run = blk[2].lower if run is None else max(run, blk[2].lower)
        lo.append(run)
    hi, run = [None] * len(stack), None
    for k in range(len(stack) - 1, -1, -1):
        u = stack[k][2].upper
        run = u if run is None else min(run, u)
        hi[k] = run
    return lo, hi


@dataclass(frozen=True)
class Band:
    """Maximal run ``start..stop-1`` where ``g-`` equals ``eta_lower`` and ``g+`` equals ``eta_upper``."""

    start: int
    stop: int
    eta_lower: Any
    eta_upper: Any
    jumps: tuple  # positions l in start+1..stop-1 where a solution may step up


@dataclass(frozen=True)
class SolutionBand:
    lower: IsotonicFit
    upper: IsotonicFit
    bands: tuple = field(default=())

    @property
    def band_jump_sets(self) -> dict:
        return {(b.start, b.stop): b.jumps for b in self.bands}


def solution_band(spec: FunctionalSpec, sample: WeightedSample) -> SolutionBand:
    """``g-``, ``g+`` and, inside each band where they differ, the admissible jump positions."""
    prob = ChainProblem(spec, sample)
    lo = _maxmin(prob, "lower")
    hi = _maxmin(prob, "upper")
    bands = []
    i = 0
    while i < prob.n:
        j = i
        while j + 1 < prob.n and lo[j + 1] == lo[i] and hi[j + 1] == hi[i]:
            j += 1
        if lo[i] < hi[i]:
            jumps = tuple(l for l in range(i + 1, j + 1) if prob.interval(i, l - 1).lower <= lo[i])
            bands.append(Band(i, j + 1, lo[i], hi[i], jumps))
        i = j + 1
    return SolutionBand(IsotonicFit(prob.covariates, lo), IsotonicFit(prob.covariates, hi), tuple(bands))


def solution_grid(prob: ChainProblem, fit_values: Sequence = ()) -> list:
    return breakpoint_grid(list(prob.grid_values()) + list(fit_values))


def is_solution(spec: FunctionalSpec, sample: WeightedSample, fit, tol=DEFAULT_TOL) -> bool:
    """Whether ``fit`` minimizes every elementary score simultaneously.

    Exact up to ``tol``: the minimizing suffix sets only change at functional
    bounds of contiguous blocks, and the fit's superlevel set only at its own
    values, all of which are on the checked grid (with midpoints in between).
    """
    prob = ChainProblem(spec, sample)
    if not isinstance(fit, IsotonicFit):
        fit = IsotonicFit.from_mapping(prob.covariates, fit)
    elif fit.covariates != prob.covariates:
        fit = IsotonicFit.from_mapping(prob.covariates, fit.as_dict())
    if not fit.is_increasing():
        raise NotMonotoneError("fit is not increasing along the covariate order")
    vals = fit.values
    for eta in solution_grid(prob, vals):
        start = next((k for k, v in enumerate(vals) if v >= eta), prob.n)
        if start not in _argmin_suffixes(prob, eta, tol):
            return False
    return True
