"""Energy-distance redundancy index of coupling matrices."""

from ._core import (
    RhoEstimate,
    RhoIndexError,
    dimscan,
    divergence_table,
    empirical_self_term,
    energy_distance,
    fisher_z,
    gaussian_self_constant,
    mixed_expectation,
    read_matrix,
    rho_from_activations,
    rho_from_weights,
    robust_standardize,
)

__version__ = "0.3.0"

__all__ = [
    "RhoEstimate",
    "RhoIndexError",
    "dimscan",
    "divergence_table",
    "empirical_self_term",
    "energy_distance",
    "fisher_z",
    "gaussian_self_constant",
    "mixed_expectation",
    "read_matrix",
    "rho_from_activations",
    "rho_from_weights",
    "robust_standardize",
]
