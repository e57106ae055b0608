"""Pseudospectral Euler / inviscid Leray-alpha solver with norm and rate diagnostics."""

from .spectral_core import (
    Grid,
    SpectralField,
    derivative,
    from_physical,
    leray_project,
    load_checkpoint,
    make_grid,
    save_checkpoint,
    sobolev_norm,
    to_physical,
)
from .kernels import KernelKind, KernelSpec, apply_kernel, check_lemma_norms, certify_kernel
from .dynamics import (
    DtPolicy,
    InitialCondition,
    SolverConfig,
    make_initial_condition,
    rhs_euler,
    rhs_leray_alpha,
    simulate,
    step,
)

__all__ = [
    "Grid", "SpectralField", "derivative", "from_physical", "leray_project", "load_checkpoint", "make_grid",
    "save_checkpoint", "sobolev_norm", "to_physical", "KernelKind", "KernelSpec", "apply_kernel",
    "check_lemma_norms", "certify_kernel", "DtPolicy", "InitialCondition", "SolverConfig",
    "make_initial_condition", "rhs_euler", "rhs_leray_alpha", "simulate", "step",
]

__version__ = "0.1.0"
