"""Fourier-lattice contrasts, Sobolev norms and lattice-sum audits."""

from .lattice import (
    ContrastField,
    Lattice,
    analyze,
    l2_inner,
    project_to_D,
    smooth_cutoff,
    sobolev_inner,
    sobolev_norm,
    synthesize,
    truncation_diagnostics,
)
from .sums import (
    LatticeSumReport,
    SobolevParams,
    SplitCheckReport,
    embedding_constant,
    high_freq_split_check,
    lattice_sum,
    lattice_sum_bound_check,
    lattice_sum_majorant,
    lattice_sum_shells,
)

__all__ = [
    "ContrastField",
    "Lattice",
    "LatticeSumReport",
    "SobolevParams",
    "SplitCheckReport",
    "analyze",
    "embedding_constant",
    "high_freq_split_check",
    "l2_inner",
    "lattice_sum",
    "lattice_sum_bound_check",
    "lattice_sum_majorant",
    "lattice_sum_shells",
    "project_to_D",
    "smooth_cutoff",
    "sobolev_inner",
    "sobolev_norm",
    "synthesize",
    "truncation_diagnostics",
]
