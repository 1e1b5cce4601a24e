"""Isotonic regression over a finite partially ordered covariate set.

Upper sets are handled as integer bitmasks over ``poset.elements`` (bit ``k``
is element ``k``).  Public functions return frozensets of element ids.
"""

from __future__ import annotations

import os
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Any

from .errors import (
    EmptyBandError,
    FitDomainError,
    IntervalTypeError,
    LatticeCapError,
    NonSolutionError,
    PosetError,
    ZeroMassError,
)
from .functionals import (
    NULL_INTERVAL,
    ExtendedInterval,
    FunctionalSpec,
    WeightedSample,
    functional_interval,
    identification_sum,
)
from .total_order import DEFAULT_TOL, IsotonicFit, Side, _side

PosetFit = IsotonicFit

DEFAULT_LATTICE_CAP = 20


def lattice_cap() -> int:
    """Element-count cap for upper-set enumeration (``ISORANGE_LATTICE_CAP`` overrides)."""
    raw = os.environ.get("ISORANGE_LATTICE_CAP")
    return int(raw) if raw else DEFAULT_LATTICE_CAP


def _bits(mask: int):
    k = 0
    while mask:
        if mask & 1:
            yield k
        mask >>= 1
        k += 1


class Poset:
    """Finite partial order stored as up-closure bitmasks.

    ``up[k]`` is the mask of all elements ``z'`` with ``elements[k] <= z'``.
    """

    def __init__(self, elements: Sequence, up: Sequence[int]):
        self.elements = tuple(elements)
        self.index = {z: k for k, z in enumerate(self.elements)}
        if len(self.index) != len(self.elements):
            raise PosetError("duplicate element ids")
        self.up = tuple(up)
        n = len(self.elements)
        for k in range(n):
            if not self.up[k] >> k & 1:
                raise PosetError("relation is not reflexive")
            for j in _bits(self.up[k]):
                if j != k and self.up[j] >> k & 1:
                    raise PosetError(f"cycle between {self.elements[k]!r} and {self.elements[j]!r}")
                if self.up[j] & ~self.up[k]:
                    raise PosetError("relation is not transitive")
        self.down = tuple(sum(1 << j for j in range(n) if self.up[j] >> k & 1) for k in range(n))

    @classmethod
    def from_edges(cls, elements: Sequence, edges: Iterable[tuple]) -> Poset:
        """Order generated by ``a < b`` pairs (transitive closure is taken)."""
        elements = tuple(elements)
        idx = {z: k for k, z in enumerate(elements)}
        n = len(elements)
        up = [1 << k for k in range(n)]
        succ = [0] * n
        for a, b in edges:
            if a not in idx or b not in idx:
                missing = a if a not in idx else b
                raise PosetError(f"edge mentions unknown element {missing!r}")
            if a == b:
                raise PosetError(f"self-loop at {a!r}")
            succ[idx[a]] |= 1 << idx[b]
        # closure by fixed-point iteration; n is small
        changed = True
        while changed:
            changed = False
            for k in range(n):
                new = up[k] | succ[k]
                for j in _bits(succ[k]):
                    new |= up[j]
                if new != up[k]:
                    up[k] = new
                    changed = True
        for k in range(n):
            for j in _bits(up[k]):
                if j != k and up[j] >> k & 1:
                    raise PosetError(f"cycle through {elements[k]!r} and {elements[j]!r}")
        return cls(elements, up)

    @classmethod
    def chain(cls, elements: Sequence) -> Poset:
        n = len(elements)
        full = (1 << n) - 1
        return cls(elements, [full & ~((1 << k) - 1) for k in range(n)])

    @classmethod
    def antichain(cls, elements: Sequence) -> Poset:
        return cls(elements, [1 << k for k in range(len(elements))])

    def __len__(self) -> int:
        return len(self.elements)

    def leq(self, a, b) -> bool:
        return bool(self.up[self.index[a]] >> self.index[b] & 1)

    def mask(self, ids: Iterable) -> int:
        m = 0
        for z in ids:
            m |= 1 << self.index[z]
        return m

    def ids(self, mask: int) -> frozenset:
        return frozenset(self.elements[k] for k in _bits(mask))

    def is_upper(self, mask: int) -> bool:
        return all(self.up[k] & ~mask == 0 for k in _bits(mask))

    def topological_order(self) -> list:
        """Element positions, every element after all elements below it."""
        return sorted(range(len(self)), key=lambda k: bin(self.down[k]).count("1"))

    def is_increasing(self, fit) -> bool:
        for k, z in enumerate(self.elements):
            for j in _bits(self.up[k]):
                if fit[z] > fit[self.elements[j]]:
                    return False
        return True


@dataclass(frozen=True)
class UpperSetLattice:
    poset: Poset
    sets: tuple  # bitmasks, sorted by (size, mask)

    @property
    def full(self) -> int:
        return (1 << len(self.poset)) - 1

    def __len__(self) -> int:
        return len(self.sets)

    def __contains__(self, mask: int) -> bool:
        return mask in self._members

    @property
    def _members(self) -> frozenset:
        m = self.__dict__.get("_m")
        if m is None:
            m = frozenset(self.sets)
            self.__dict__["_m"] = m
        return m

    def members(self) -> list:
        return [self.poset.ids(m) for m in self.sets]


def upper_sets(poset: Poset, cap: int | None = None) -> UpperSetLattice:
    """All upper sets of ``poset``; raises LatticeCapError above ``cap`` elements."""
    cap = lattice_cap() if cap is None else cap
    if len(poset) > cap:
        raise LatticeCapError(f"{len(poset)} elements exceed the lattice cap of {cap}")
    # decide elements from the top down: z may join only if everything above it already did
    order = list(reversed(poset.topological_order()))
    found = []

    def extend(pos: int, mask: int):
        if pos == len(order):
            found.append(mask)
            return
        k = order[pos]
        extend(pos + 1, mask)
        above = poset.up[k] & ~(1 << k)
        if above & ~mask == 0:
            extend(pos + 1, mask | 1 << k)

    extend(0, 0)
    found.sort(key=lambda m: (bin(m).count("1"), m))
    return UpperSetLattice(poset, tuple(found))


class _PosetProblem:
    """Observation groups per element plus cached functional values of element subsets."""

    def __init__(self, spec: FunctionalSpec, sample: WeightedSample, lattice: UpperSetLattice):
        poset = lattice.poset
        unknown = set(sample.covariates) - set(poset.elements)
        if unknown:
            raise FitDomainError(f"covariates {sorted(map(str, unknown))} are not poset elements")
        self.spec = spec
        self.lattice = lattice
        self.poset = poset
        self.groups = [sample.groups.get(z, []) if z in sample.groups else [] for z in poset.elements]
        self._t = {}

    def interval(self, mask: int) -> ExtendedInterval:
        t = self._t.get(mask)
        if t is None:
            if mask == 0:
                t = NULL_INTERVAL
            else:
                pairs = []
                for k in _bits(mask):
                    pairs.extend(self.groups[k])
                t = functional_interval(self.spec, pairs)
            self._t[mask] = t
        return t

    def element_sums(self, eta) -> list:
        return [identification_sum(self.spec, eta, g) for g in self.groups]

    def scores(self, eta) -> dict:
        e = self.element_sums(eta)
        return {x: sum((e[k] for k in _bits(x)), 0) for x in self.lattice.sets}

    def require_mass(self):
        for z, g in zip(self.poset.elements, self.groups):
            if not sum((w for _, w in g), 0) > 0:
                raise ZeroMassError(f"covariate {z!r} carries no positive weight")

    def inner_min(self, bound: str) -> dict:
        """``x -> min over lattice x' < x of T(x \\ x')`` for the chosen bound."""
        sets = self.lattice.sets
        return {
            x: min(getattr(self.interval(x & ~xp), bound) for xp in sets if xp & ~x == 0 and xp != x)
            for x in sets
            if x
        }

    def inner_max(self, bound: str) -> dict:
        """``x' -> max over lattice x > x' of T(x \\ x')`` for the chosen bound."""
        sets = self.lattice.sets
        full = self.lattice.full
        return {
            xp: max(getattr(self.interval(x & ~xp), bound) for x in sets if xp & ~x == 0 and x != xp)
            for xp in sets
            if xp != full
        }

    @staticmethod
    def maxmin(k: int, inner: dict):
        return max(v for x, v in inner.items() if x >> k & 1)

    @staticmethod
    def minmax(k: int, inner: dict):
        return min(v for xp, v in inner.items() if not xp >> k & 1)


def minimizing_upper_sets(
    spec: FunctionalSpec, sample: WeightedSample, lattice: UpperSetLattice, eta, tol=DEFAULT_TOL
) -> list:
    """Upper sets whose identification sum at ``eta`` is minimal, smallest first."""
    prob = _PosetProblem(spec, sample, lattice)
    return [lattice.poset.ids(x) for x in _argmin_sets(prob, eta, tol)]


def _argmin_sets(prob: _PosetProblem, eta, tol) -> list:
    s = prob.scores(eta)
    best = min(s.values())
    return [x for x in prob.lattice.sets if s[x] <= best + tol]


def poset_fit(spec: FunctionalSpec, sample: WeightedSample, lattice: UpperSetLattice, side=Side.UPPER, form: str | None = None) -> PosetFit:
    """Maximal (``upper``) or minimal (``lower``) solution on a poset.

    By default the upper solution is evaluated in max-min form,
    ``max_{x contains z} min_{x' < x} T+(x \\ x')``, and the lower one in
    min-max form, ``min_{x' omits z} max_{x > x'} T-(x \\ x')``.  Pass
    ``form='maxmin'`` or ``form='minmax'`` to evaluate the other expression.
    Every covariate must carry positive weight.
    """
    side = _side(side)
    if form is None:
        form = "maxmin" if side is Side.UPPER else "minmax"
    if form not in ("maxmin", "minmax"):
        raise ValueError(f"unknown form {form!r}")
    prob = _PosetProblem(spec, sample, lattice)
    prob.require_mass()
    bound = "upper" if side is Side.UPPER else "lower"
    if form == "maxmin":
        inner = prob.inner_min(bound)
        vals = [prob.maxmin(k, inner) for k in range(len(lattice.poset))]
    else:
        inner = prob.inner_max(bound)
        vals = [prob.minmax(k, inner) for k in range(len(lattice.poset))]
    return IsotonicFit(lattice.poset.elements, vals)


def min_max_bounds(spec: FunctionalSpec, sample: WeightedSample, lattice: UpperSetLattice, z) -> ExtendedInterval:
    """Interval that contains the value at ``z`` of every solution."""
    prob = _PosetProblem(spec, sample, lattice)
    prob.require_mass()
    k = lattice.poset.index[z]
    lo = prob.minmax(k, prob.inner_max("lower"))
    hi = prob.maxmin(k, prob.inner_min("upper"))
    return ExtendedInterval(lo, hi)


def all_min_max_bounds(spec: FunctionalSpec, sample: WeightedSample, lattice: UpperSetLattice) -> dict:
    prob = _PosetProblem(spec, sample, lattice)
    prob.require_mass()
    lower_inner = prob.inner_max("lower")
    upper_inner = prob.inner_min("upper")
    return {
        z: ExtendedInterval(prob.minmax(k, lower_inner), prob.maxmin(k, upper_inner))
        for k, z in enumerate(lattice.poset.elements)
    }


@dataclass(frozen=True)
class BandRefinement:
    """Intermediate minimizing upper sets inside one band of ``(g-, g+)``.

    ``outer`` and ``inner`` are the sets ``x'`` and ``x''`` bracketing the
    band ``Z``; ``separation`` holds ``x'' | Z_k`` for the comparability
    components ``Z_k`` of ``Z``; ``admitted`` is every lattice member strictly
    between ``inner`` and ``outer`` that passes the exact lower-bound test.
    The separation sets are always among the admitted ones.

    Both tests rest on ``outer`` and ``inner`` themselves minimizing across
    the band, which holds when no covariate has ``g-`` above ``eta_lower``
    together with ``g+`` below ``eta_upper``.  ``sandwiched`` records that;
    when it is False the admitted sets are only candidates.
    """

    band: frozenset
    outer: frozenset
    inner: frozenset
    components: tuple
    separation: tuple
    admitted: tuple
    sandwiched: bool = True

    @property
    def consistent(self) -> bool:
        return set(self.separation) <= set(self.admitted)


def _components(poset: Poset, mask: int) -> list:
    ks = list(_bits(mask))
    parent = {k: k for k in ks}

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    for a in ks:
        for b in ks:
            if a < b and (poset.up[a] >> b & 1 or poset.up[b] >> a & 1):
                parent[find(a)] = find(b)
    comps = {}
    for k in ks:
        comps[find(k)] = comps.get(find(k), 0) | 1 << k
    return sorted(comps.values())


def refine_band(
    spec: FunctionalSpec,
    sample: WeightedSample,
    lattice: UpperSetLattice,
    g_lower,
    g_upper,
    eta_lower,
    eta_upper,
) -> BandRefinement:
    """Lattice members between the band's bracketing sets that minimize on ``(eta_lower, eta_upper]``."""
    poset = lattice.poset
    prob = _PosetProblem(spec, sample, lattice)
    band = outer_lo = outer_hi = 0
    sandwiched = True
    for k, z in enumerate(poset.elements):
        lo, hi = g_lower[z], g_upper[z]
        if lo > eta_lower and hi < eta_upper:
            sandwiched = False
        if lo == eta_lower and hi == eta_upper:
            band |= 1 << k
        if lo >= eta_lower:
            outer_lo |= 1 << k
        if hi >= eta_upper:
            outer_hi |= 1 << k
    if not band:
        raise EmptyBandError(f"no covariate has (g-, g+) = ({eta_lower}, {eta_upper})")
    outer = outer_lo & outer_hi
    inner = outer & ~band
    comps = _components(poset, band)
    separation = []
    if len(comps) > 1:
        separation = [inner | c for c in comps]
    admitted = [
        x
        for x in lattice.sets
        if x != outer and x != inner and x & ~outer == 0 and inner & ~x == 0
        and prob.interval(outer & ~x).lower <= eta_lower
    ]
    return BandRefinement(
        band=poset.ids(band),
        outer=poset.ids(outer),
        inner=poset.ids(inner),
        components=tuple(poset.ids(c) for c in comps),
        separation=tuple(poset.ids(x) for x in separation),
        admitted=tuple(poset.ids(x) for x in admitted),
        sandwiched=sandwiched,
    )


def bands(g_lower, g_upper, elements: Sequence) -> list:
    """Distinct ``(eta_lower, eta_upper)`` value pairs with ``eta_lower < eta_upper``."""
    pairs = {(g_lower[z], g_upper[z]) for z in elements if g_lower[z] < g_upper[z]}
    return sorted(pairs)


def level_partition(
    spec: FunctionalSpec, sample: WeightedSample, lattice: UpperSetLattice, fit, tol=DEFAULT_TOL
) -> list:
    """Blocks on which ``fit`` is constant and equal to the block's functional value.

    Only for singleton-type functionals with positive weight everywhere; the
    fit must be the (then unique) solution.
    """
    if not spec.singleton_type:
        raise IntervalTypeError(f"{spec.family.value} is of interval type")
    prob = _PosetProblem(spec, sample, lattice)
    prob.require_mass()
    poset = lattice.poset
    ref = poset_fit(spec, sample, lattice, Side.UPPER)
    for z in poset.elements:
        if abs(fit[z] - ref[z]) > tol:
            raise NonSolutionError(f"fit value {fit[z]} at {z!r} differs from the solution {ref[z]}")
    inner_up = prob.inner_min("upper")
    inner_lo = prob.inner_max("lower")
    blocks = []
    seen = 0
    for k, z in enumerate(poset.elements):
        if seen >> k & 1:
            continue
        g = fit[z]
        # union of first components of max-min pairs, intersection of first components of min-max pairs
        top = 0
        for x, v in inner_up.items():
            if x >> k & 1 and abs(v - g) <= tol:
                top |= x
        bottom = lattice.full
        for kp, v in inner_lo.items():
            if not kp >> k & 1 and abs(v - g) <= tol:
                bottom &= kp
        block = top & ~bottom
        if not block >> k & 1 or block & seen:
            raise NonSolutionError(f"level sets around {z!r} do not form a partition")
        blocks.append(block)
        seen |= block
    return [poset.ids(b) for b in blocks]
