"""Unimodal regression by sweeping the mode over the gaps between covariates."""

from __future__ import annotations

import enum
from collections.abc import Sequence
from dataclasses import dataclass, field

from .errors import InvalidParameterError
from .functionals import FunctionalSpec, WeightedSample
from .scores import MurphyCurve, murphy_curve
from .total_order import IndexPartition, IsotonicFit, Pooling, Side, minmax_fit, pav


@dataclass(frozen=True)
class ModalFit:
    """Fit increasing before ``mode_index`` and decreasing from it on.

    ``mode_index`` is 0-based in ``0..n``: the mode sits just before
    covariate position ``mode_index`` (``n`` means after the last one).
    """

    mode_index: int
    fit: IsotonicFit
    partition: IndexPartition

    @property
    def values(self) -> tuple:
        return self.fit.values


def unimodal_fits(spec: FunctionalSpec, sample: WeightedSample) -> list:
    """One fit per mode position: isotonic on the prefix, antitonic on the suffix.

    Each side uses its maximal solution; equal fits from different modes are kept.
    """
    covs = sample.covariates
    n = len(covs)
    out = []
    for m in range(n + 1):
        values = {}
        blocks = []
        if m:
            head = sample.restrict(covs[:m])
            values.update(minmax_fit(spec, head, Side.UPPER).as_dict())
            blocks.extend(pav(spec, head, Pooling.POOL_WEAK).partition.blocks)
        if m < n:
            tail = sample.restrict(covs[m:]).reversed()
            values.update(minmax_fit(spec, tail, Side.UPPER).as_dict())
            k = n - m
            # blocks of the reversed tail, mapped back to original positions
            for a, b in reversed(pav(spec, tail, Pooling.POOL_WEAK).partition.blocks):
                blocks.append((m + k - b, m + k - a))
        out.append(ModalFit(m, IsotonicFit.from_mapping(covs, values), IndexPartition(tuple(blocks))))
    return out


class Verdict(enum.Enum):
    DOMINATES = "dominates"
    DOMINATED_BY = "dominated_by"
    INCOMPARABLE = "incomparable"
    EQUAL = "equal"


@dataclass(frozen=True)
class DominanceMatrix:
    """Pairwise verdicts on expected elementary scores across the grid.

    ``verdicts[(i, j)]`` reads "fit i <verdict> fit j"; lower scores are better.
    """

    ids: tuple
    verdicts: dict
    curve: MurphyCurve
    tol: float = 0
    witnesses: dict = field(default_factory=dict)  # (i, j) -> etas where i scores strictly lower

    def __getitem__(self, pair) -> Verdict:
        return self.verdicts[pair]

    def dominant(self) -> list:
        """Ids that dominate or equal every other fit, with at least one strict win."""
        out = []
        for i in self.ids:
            others = [self.verdicts[i, j] for j in self.ids if j != i]
            if others and all(v in (Verdict.DOMINATES, Verdict.EQUAL) for v in others) and Verdict.DOMINATES in others:
                out.append(i)
        return out

    def as_rows(self) -> list:
        return [[i] + [self.verdicts[i, j].value if i != j else "-" for j in self.ids] for i in self.ids]


def dominance_matrix(
    spec: FunctionalSpec,
    sample: WeightedSample,
    fits: Sequence,
    ids: Sequence | None = None,
    etas: Sequence | None = None,
    tol=0,
) -> DominanceMatrix:
    """Compare fits by their expected elementary scores on a common grid.

    ``fits`` may be ``ModalFit`` or anything indexable by covariate.  The
    default grid is the breakpoint grid of observations and all fit values.
    """
    if len(fits) < 2:
        raise InvalidParameterError("dominance needs at least two fits")
    plain = [f.fit if isinstance(f, ModalFit) else f for f in fits]
    ids = tuple(ids) if ids is not None else tuple(range(1, len(fits) + 1))
    curve = murphy_curve(spec, plain, sample, ids=ids, etas=etas)
    verdicts = {}
    witnesses = {}
    for i in ids:
        for j in ids:
            if i == j:
                continue
            better = [eta for eta, a, b in zip(curve.etas, curve.rows[i], curve.rows[j]) if a < b - tol]
            worse = [eta for eta, a, b in zip(curve.etas, curve.rows[i], curve.rows[j]) if b < a - tol]
            witnesses[i, j] = tuple(better)
            if better and worse:
                verdicts[i, j] = Verdict.INCOMPARABLE
            elif better:
                verdicts[i, j] = Verdict.DOMINATES
            elif worse:
                verdicts[i, j] = Verdict.DOMINATED_BY
            else:
                verdicts[i, j] = Verdict.EQUAL
    return DominanceMatrix(ids, verdicts, curve, tol, witnesses)


def distinct_fits(fits: Sequence) -> list:
    """Modal fits with duplicate value vectors removed, first occurrence kept."""
    seen = set()
    out = []
    for f in fits:
        if f.values not in seen:
            seen.add(f.values)
            out.append(f)
    return out

