"""Isotonic regression for identifiable functionals with interval-valued solutions."""

from .errors import (
    ConvergenceError,
    EmptyBandError,
    FitDomainError,
    IntervalTypeError,
    InvalidParameterError,
    IsorangeError,
    LatticeCapError,
    NonSolutionError,
    NotMonotoneError,
    PosetError,
    ZeroMassError,
)
from .functionals import (
    ExtendedInterval,
    Family,
    FunctionalSpec,
    SolverHint,
    WeightedSample,
    functional_interval,
    identification_sum,
    identify,
)
from .oracle import (
    OptimalityReport,
    brute_force_solution_values,
    verify_simultaneous_optimality,
)
from .poset import (
    Poset,
    UpperSetLattice,
    level_partition,
    min_max_bounds,
    minimizing_upper_sets,
    poset_fit,
    refine_band,
    upper_sets,
)
from .scores import (
    DiscreteMixingMeasure,
    MurphyCurve,
    elementary_score,
    expected_score,
    mixture_loss,
    murphy_curve,
)
from .total_order import (
    IndexPartition,
    IsotonicFit,
    Pooling,
    Side,
    is_solution,
    minimizer_indices,
    minmax_fit,
    pav,
    solution_band,
)
from .unimodal import DominanceMatrix, ModalFit, Verdict, dominance_matrix, unimodal_fits

__version__ = "0.1.0"
