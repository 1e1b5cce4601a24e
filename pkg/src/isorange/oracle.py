"""Brute-force ground truth for simultaneous optimality.

Nothing here calls the chain or poset solvers.  Upper sets are found by
filtering every subset of the covariates, scores are plain identification
sums, and the check runs on a grid fine enough to be exact: every
``v_D(eta)`` changes sign only at the functional bounds of ``D``, and every
superlevel set of a fit changes only at fit values, so one point per cell of
the joint breakpoint partition decides each comparison.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass, field

from .errors import LatticeCapError, NotMonotoneError
from .functionals import FunctionalSpec, WeightedSample, functional_interval, identification_sum
from .scores import breakpoint_grid

ORACLE_CAP = 16  # subsets are filtered one by one, so 2**16 is the practical ceiling
CHAIN_SEARCH_CAP = 10
POSET_SEARCH_CAP = 6


@dataclass(frozen=True)
class Failure:
    eta: object
    offered: frozenset  # superlevel set of the fit at eta
    better: frozenset  # a set with strictly smaller score
    gap: object  # score(offered) - score(better)


@dataclass(frozen=True)
class OptimalityReport:
    verified: bool
    failures: tuple = field(default=())

    def __bool__(self) -> bool:
        return self.verified


def _skey(spec: FunctionalSpec):
    # ratio tables do not take part in spec equality
    return spec, id(spec.u), id(spec.w)


class OracleLattice:
    """Upper sets of the order, by exhaustive subset filtering."""

    def __init__(self, sample: WeightedSample, order=None, cap: int | None = None):
        if order is None:
            elements = tuple(sample.covariates)
            rank = {z: k for k, z in enumerate(elements)}
            leq = lambda a, b: rank[a] <= rank[b]  # noqa: E731
        else:
            elements = tuple(order.elements)
            leq = order.leq
        cap = ORACLE_CAP if cap is None else cap
        if len(elements) > cap:
            raise LatticeCapError(f"oracle enumerates 2**{len(elements)} subsets; cap is {cap} elements")
        self.elements = elements
        self.pairs = [(a, b) for a in elements for b in elements if a != b and leq(a, b)]
        self.sets = []
        for r in range(len(elements) + 1):
            for combo in itertools.combinations(elements, r):
                s = frozenset(combo)
                if all(b in s for a, b in self.pairs if a in s):
                    self.sets.append(s)
        self.groups = {z: [] for z in elements}
        for c, y, w in sample.observations:
            if c not in self.groups:
                raise ValueError(f"covariate {c!r} is not part of the order")
            self.groups[c].append((y, w))
        self.spec_cache = {}
        self._min_cache = {}
        self._score_cache = {}

    def is_monotone(self, fit) -> bool:
        return all(fit[a] <= fit[b] for a, b in self.pairs)

    def pairs_of(self, members) -> list:
        out = []
        for z in members:
            out.extend(self.groups[z])
        return out

    def score(self, spec: FunctionalSpec, eta, members) -> object:
        return identification_sum(spec, eta, self.pairs_of(members))

    def scores(self, spec: FunctionalSpec, eta) -> list:
        """Scores of all upper sets at ``eta``, aligned with ``self.sets``."""
        key = (_skey(spec), eta)
        hit = self._score_cache.get(key)
        if hit is None:
            per = {z: identification_sum(spec, eta, g) for z, g in self.groups.items()}
            hit = [sum((per[z] for z in s), 0) for s in self.sets]
            self._score_cache[key] = hit
        return hit

    def t_points(self, spec: FunctionalSpec) -> list:
        """Finite bounds of the functional over every difference of nested upper sets."""
        key = _skey(spec)
        if key not in self.spec_cache:
            pts = set()
            for big in self.sets:
                for small in self.sets:
                    if small < big:
                        diff = big - small
                        t = functional_interval(spec, self.pairs_of(diff))
                        for v in t:
                            if v not in (float("inf"), float("-inf")):
                                pts.add(v)
            self.spec_cache[key] = sorted(pts)
        return self.spec_cache[key]

    def grid(self, spec: FunctionalSpec, extra=()) -> list:
        ys = [y for g in self.groups.values() for y, _ in g]
        return breakpoint_grid(list(self.t_points(spec)) + ys + list(extra))

    def minimizers(self, spec: FunctionalSpec, eta, tol=0) -> list:
        key = (_skey(spec), eta, tol)
        hit = self._min_cache.get(key)
        if hit is None:
            scores = self.scores(spec, eta)
            best = min(scores)
            hit = [s for s, v in zip(self.sets, scores) if v <= best + tol]
            self._min_cache[key] = hit
        return hit


def _lattice(sample, order, cap=None):
    if isinstance(order, OracleLattice):
        return order
    return OracleLattice(sample, order, cap)


def verify_simultaneous_optimality(
    spec: FunctionalSpec, sample: WeightedSample, order=None, fit=None, tol=0, etas: Sequence | None = None
) -> OptimalityReport:
    """Check that every superlevel set of ``fit`` minimizes the identification sum.

    ``order`` is ``None`` for the chain in sample order, or any object with
    ``elements`` and ``leq(a, b)``.  ``fit`` is indexable by covariate id.
    """
    lat = _lattice(sample, order)
    if not lat.is_monotone(fit):
        raise NotMonotoneError("fit is not increasing along the order")
    values = [fit[z] for z in lat.elements]
    grid = list(etas) if etas is not None else lat.grid(spec, values)
    failures = []
    for eta in grid:
        offered = frozenset(z for z in lat.elements if fit[z] >= eta)
        s_off = lat.score(spec, eta, offered)
        best_set, best = offered, s_off
        for s, v in zip(lat.sets, lat.scores(spec, eta)):
            if v < best:
                best_set, best = s, v
        if s_off > best + tol:
            failures.append(Failure(eta, offered, best_set, s_off - best))
    return OptimalityReport(not failures, tuple(failures))


def oracle_minimizers(spec: FunctionalSpec, sample: WeightedSample, order=None, eta=0, tol=0) -> list:
    """All upper sets minimizing the identification sum at ``eta``."""
    return _lattice(sample, order).minimizers(spec, eta, tol)


def band_minimizers(spec: FunctionalSpec, sample: WeightedSample, order=None, lower=0, upper=1, tol=0) -> list:
    """Upper sets that minimize at every grid point of ``(lower, upper]``."""
    lat = _lattice(sample, order)
    etas = [e for e in lat.grid(spec, (lower, upper)) if lower < e <= upper]
    keep = list(lat.sets)
    for eta in etas:
        mins = set(lat.minimizers(spec, eta, tol))
        keep = [s for s in keep if s in mins]
    return keep


def value_grid(spec: FunctionalSpec, sample: WeightedSample, order=None) -> list:
    """Candidate solution values: functional bounds and midpoints between them."""
    pts = _lattice(sample, order).t_points(spec)
    out = []
    for a, b in zip(pts, pts[1:]):
        out.extend((a, (a + b) / 2))
    out.extend(pts[-1:])
    return out


def _search_cap(lat: OracleLattice, order, cap):
    if cap is None:
        cap = CHAIN_SEARCH_CAP if order is None else POSET_SEARCH_CAP
    if len(lat.elements) > cap:
        raise LatticeCapError(f"exhaustive solution search is capped at {cap} elements")


def brute_force_solution_values(
    spec: FunctionalSpec, sample: WeightedSample, order=None, z=None, tol=0, cap: int | None = None
) -> set:
    """Values at ``z`` of all solutions taking values in :func:`value_grid`.

    A fit with values ``v_1 < ... < v_m`` is fixed by its superlevel sets
    ``U_k = {g >= v_k}``, and it is a solution exactly when each ``U_k``
    minimizes on every grid point of ``(v_{k-1}, v_k]`` (with the full set
    below ``v_1`` and the empty set above ``v_m``).  Walking the decreasing
    chains ``U_1 = full >= U_2 >= ...`` forward and backward covers every
    monotone fit on the value grid without listing them one by one.
    """
    lat = _lattice(sample, order)
    _search_cap(lat, order, cap)
    vals = value_grid(spec, sample, lat)
    if not vals:
        return set()
    grid = lat.grid(spec, vals)
    full = frozenset(lat.elements)
    empty = frozenset()
    m = len(vals)

    mins = {eta: frozenset(lat.minimizers(spec, eta, tol)) for eta in grid}

    def ok_on(lo, hi):
        # sets minimizing at every grid point of (lo, hi]
        keep = set(lat.sets)
        for eta in grid:
            if (lo is None or eta > lo) and (hi is None or eta <= hi):
                keep &= mins[eta]
        return keep

    allowed = [ok_on(None, vals[0])] + [ok_on(vals[k - 1], vals[k]) for k in range(1, m)]
    tail_ok = empty in ok_on(vals[-1], None)
    if full not in allowed[0] or not tail_ok:
        return set()
    # forward: sets reachable as U_k through a valid decreasing chain
    fwd = [{full}]
    for k in range(1, m):
        fwd.append({u for u in allowed[k] if any(u <= p for p in fwd[k - 1])})
    # backward: sets from which the chain can be completed
    bwd = [set() for _ in range(m)]
    bwd[m - 1] = set(fwd[m - 1])
    for k in range(m - 2, -1, -1):
        bwd[k] = {u for u in fwd[k] if any(nxt <= u for nxt in bwd[k + 1])}
    out = set()
    for k in range(m):
        for u in bwd[k]:
            if z not in u:
                continue
            # level k at z needs a continuation whose next set drops z
            if k == m - 1 or any(nxt <= u and z not in nxt for nxt in bwd[k + 1]):
                out.add(vals[k])
    return out


def enumerate_solutions(spec: FunctionalSpec, sample: WeightedSample, order=None, values=None, tol=0, limit=200_000) -> list:
    """Every monotone fit with values in ``values`` that passes the optimality check.

    Literal enumeration of the product space; for small cross-checks only.
    """
    lat = _lattice(sample, order)
    values = value_grid(spec, sample, lat) if values is None else sorted(values)
    if len(values) ** len(lat.elements) > limit:
        raise LatticeCapError("value grid too large for literal enumeration")
    grid = lat.grid(spec, values)
    out = []
    for combo in itertools.product(values, repeat=len(lat.elements)):
        fit = dict(zip(lat.elements, combo))
        if lat.is_monotone(fit) and verify_simultaneous_optimality(spec, sample, lat, fit, tol, grid).verified:
            out.append(fit)
    return out


def least_squares_isotonic(y: Sequence, w: Sequence | None = None) -> tuple:
    """Weighted squared-error isotonic regression by block averaging.

    Returns ``(values, blocks)`` with blocks as ``(start, stop)`` level runs.
    """
    w = [1] * len(y) if w is None else list(w)
    stack = []  # [weighted sum, weight, count]
    for yi, wi in zip(y, w):
        stack.append([yi * wi, wi, 1])
        while len(stack) > 1 and stack[-2][0] * stack[-1][1] > stack[-1][0] * stack[-2][1]:
            s, ww, c = stack.pop()
            stack[-1][0] += s
            stack[-1][1] += ww
            stack[-1][2] += c
    values = []
    for s, ww, c in stack:
        values.extend([s / ww] * c)
    return values, level_runs(values)


def level_runs(values: Sequence) -> list:
    """Maximal runs of equal consecutive values as ``(start, stop)``."""
    runs = []
    start = 0
    for k in range(1, len(values) + 1):
        if k == len(values) or values[k] != values[start]:
            runs.append((start, k))
            start = k
    return runs
