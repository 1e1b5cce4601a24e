"""Elementary scores, expected scores of fits and Murphy-diagram curves."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

from .errors import FitDomainError, InvalidParameterError
from .functionals import FunctionalSpec, WeightedSample, identify


def elementary_score(spec: FunctionalSpec, eta, x, y):
    """``S_eta(x, y) = (1{eta <= x} - 1{eta <= y}) V(eta, y)``; ``x`` may be infinite."""
    ind = (1 if eta <= x else 0) - (1 if eta <= y else 0)
    if ind == 0:
        return 0
    return ind * identify(spec, eta, y)


def _value(fit, covariate):
    try:
        return fit[covariate]
    except (KeyError, IndexError) as exc:
        raise FitDomainError(f"fit has no value for covariate {covariate!r}") from exc


def expected_score(spec: FunctionalSpec, eta, fit, sample: WeightedSample):
    """Weighted sum of ``S_eta(g(z), y)`` over the sample.

    ``fit`` is anything indexable by covariate id (an ``IsotonicFit`` or a dict).
    The normalising ``1/m`` of an empirical expectation is left out.
    """
    total = 0
    for c, y, w in sample.observations:
        if w:
            total += w * elementary_score(spec, eta, _value(fit, c), y)
    return total


def superlevel_score(spec: FunctionalSpec, eta, fit, sample: WeightedSample):
    """Identification sum over the superlevel set ``{z : g(z) >= eta}``.

    Differs from :func:`expected_score` by a term that does not depend on the
    fit, so both rank fits identically at every ``eta``.
    """
    total = 0
    for c, y, w in sample.observations:
        if w and eta <= _value(fit, c):
            total += w * identify(spec, eta, y)
    return total


def breakpoint_grid(values: Iterable) -> list:
    """Sorted distinct finite values, their midpoints, and a sentinel beyond each end."""
    pts = sorted({v for v in values if not math.isinf(v)})
    if not pts:
        return [0]
    grid = [pts[0] - 1]
    for a, b in zip(pts, pts[1:]):
        grid.extend((a, (a + b) / 2))
    grid.extend((pts[-1], pts[-1] + 1))
    return grid


def score_grid(sample: WeightedSample, fits: Sequence) -> list:
    """Canonical grid for comparing fits: observed y values and fit values."""
    vals = list(sample.ys)
    for fit in fits:
        vals.extend(_value(fit, c) for c in sample.covariates)
    return breakpoint_grid(vals)


@dataclass(frozen=True)
class MurphyCurve:
    etas: tuple
    rows: dict  # fit id -> tuple of expected scores, aligned with etas

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.etas, self.etas[1:])):
            raise InvalidParameterError("Murphy grid must be strictly increasing")

    def to_csv(self) -> str:
        ids = list(self.rows)
        lines = [",".join(["eta"] + [f"fit_{i}" for i in ids])]
        for k, eta in enumerate(self.etas):
            cells = [_fmt(eta)] + [_fmt(self.rows[i][k]) for i in ids]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    return format(float(v), ".12g")


def murphy_curve(
    spec: FunctionalSpec,
    fits: Sequence,
    sample: WeightedSample,
    ids: Sequence | None = None,
    etas: Sequence | None = None,
) -> MurphyCurve:
    """Expected elementary scores of each fit along the breakpoint grid."""
    if not fits:
        raise InvalidParameterError("at least one fit is required")
    ids = list(ids) if ids is not None else list(range(1, len(fits) + 1))
    if len(ids) != len(fits):
        raise InvalidParameterError("one id per fit")
    grid = list(etas) if etas is not None else score_grid(sample, fits)
    rows = {i: tuple(expected_score(spec, eta, fit, sample) for eta in grid) for i, fit in zip(ids, fits)}
    return MurphyCurve(tuple(grid), rows)


@dataclass(frozen=True)
class DiscreteMixingMeasure:
    """Finitely many point masses ``(eta, mass)``."""

    atoms: tuple = ()

    def __post_init__(self):
        atoms = tuple((eta, m) for eta, m in self.atoms)
        if any(not m > 0 for _, m in atoms):
            raise InvalidParameterError("mixing masses must be positive")
        if len({eta for eta, _ in atoms}) != len(atoms):
            raise InvalidParameterError("mixing locations must be distinct")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_mapping(cls, masses: Mapping) -> DiscreteMixingMeasure:
        return cls(tuple(sorted(masses.items())))


def mixture_loss(spec: FunctionalSpec, H: DiscreteMixingMeasure, x, y):
    """Loss ``sum_k mass_k * S_{eta_k}(x, y)`` of a discrete mixture."""
    return sum((m * elementary_score(spec, eta, x, y) for eta, m in H.atoms), 0)
