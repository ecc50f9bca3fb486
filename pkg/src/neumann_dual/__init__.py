"""Dual variational solver for radial Neumann Hamiltonian systems."""

from __future__ import annotations

from .dual_energy import (
    DualPair,
    Exponents,
    SolutionPair,
    direct_energy_I,
    make_exponents,
    nehari_project,
    nehari_t,
    phi,
    phi_gradient,
    recover_solution,
)
from .errors import (
    DomainError,
    ExponentError,
    NumericalError,
    PreconditionError,
    UnsupportedError,
)
from .grid import (
    DomainKind,
    RadialFunction,
    RadialGrid,
    integrate,
    make_grid,
    measure_map,
    measure_map_inverse,
    project_zero_average,
)
from .minimizer import (
    MinimizeOptions,
    MinResult,
    minimize,
    minimize_sublinear,
    minimize_superlinear,
    star_polish,
)
from .neumann_inverse import (
    Mode1Solution,
    apply_K,
    apply_K_t,
    bilinear_T,
    solve_mode1,
)
from .rearrange import (
    DecreasingProfile,
    MeasureProfile,
    cumulative_I,
    decreasing_rearrangement,
    flip_F,
    schwarz_symmetrization,
    star_transform,
)

__version__ = "0.1.0"

__all__ = [
    "DecreasingProfile",
    "DomainError",
    "DomainKind",
    "DualPair",
    "ExponentError",
    "Exponents",
    "MeasureProfile",
    "MinResult",
    "MinimizeOptions",
    "Mode1Solution",
    "NumericalError",
    "PreconditionError",
    "RadialFunction",
    "RadialGrid",
    "SolutionPair",
    "UnsupportedError",
    "apply_K",
    "apply_K_t",
    "bilinear_T",
    "cumulative_I",
    "decreasing_rearrangement",
    "direct_energy_I",
    "flip_F",
    "integrate",
    "make_exponents",
    "make_grid",
    "measure_map",
    "measure_map_inverse",
    "minimize",
    "minimize_sublinear",
    "minimize_superlinear",
    "nehari_project",
    "nehari_t",
    "phi",
    "phi_gradient",
    "project_zero_average",
    "recover_solution",
    "schwarz_symmetrization",
    "solve_mode1",
    "star_polish",
    "star_transform",
]
