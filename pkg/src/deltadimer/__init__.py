"""Bound states and below-threshold scattering of a 1D dimer on a contact impurity.

Units are fixed to hbar = 1.  The public solvers work on the half-line
momentum grids of :mod:`deltadimer.quadrature` and the parity-resolved
kernel of :mod:`deltadimer.kernel`.
"""

from .params import (
    OFF,
    ApplicabilityVerdict,
    DomainError,
    PhysicalParams,
    PoleError,
    applicability,
    dimer_phi,
    h_factor,
    new_params,
    point_dimer_reflection,
    single_atom_reflection,
    t_matrix,
)
from .quadrature import MomentumGrid, build_grid, pv_integrate
from .kernel import KernelMatrix, kernel_matrix, kernel_parity, kernel_value
from .bound import (
    BoundStateResult,
    bound_eigenvalue,
    coefficient_C,
    recover_c1,
    solve_bound_state,
)
from .scatter import (
    ScatteringResult,
    SweepRow,
    onshell,
    reflection_transmission,
    solve_offshell,
    solve_scattering,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "OFF",
    "ApplicabilityVerdict",
    "BoundStateResult",
    "DomainError",
    "KernelMatrix",
    "MomentumGrid",
    "PhysicalParams",
    "PoleError",
    "ScatteringResult",
    "SweepRow",
    "applicability",
    "bound_eigenvalue",
    "build_grid",
    "coefficient_C",
    "dimer_phi",
    "h_factor",
    "kernel_matrix",
    "kernel_parity",
    "kernel_value",
    "new_params",
    "onshell",
    "point_dimer_reflection",
    "pv_integrate",
    "recover_c1",
    "reflection_transmission",
    "single_atom_reflection",
    "solve_bound_state",
    "solve_offshell",
    "solve_scattering",
    "sweep",
    "t_matrix",
]
