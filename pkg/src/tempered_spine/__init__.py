"""Exact computations on well-rounded and well-tempered retracts of SL_n(Z).

The package builds the well-rounded retract as an equivariant cell complex,
sweeps the temperament parameter, assembles boundary double complexes over
parabolic flags and computes Hecke operators on interior and boundary
cohomology with exact arithmetic.
"""

from tempered_spine.lattice import (
    QForm,
    WeightSystem,
    TemperedWeight,
    MinimaReport,
    weighted_length,
    arithmetic_minimum,
    short_vectors,
    normalize_homothety,
)

__all__ = [
    "QForm",
    "WeightSystem",
    "TemperedWeight",
    "MinimaReport",
    "weighted_length",
    "arithmetic_minimum",
    "short_vectors",
    "normalize_homothety",
]

__version__ = "0.1.0"
