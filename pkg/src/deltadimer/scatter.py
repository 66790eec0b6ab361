"""Dimer scattering off the impurity below the dissociation threshold.

Per parity channel the off-shell amplitude obeys::

    f(p) = h_p [K(p, P) + (1/pi) int_0^inf K(p, s) f(s) / (s^2 - P^2 - i0) ds]

at ``E = eps + P^2/2M``.  The unknowns are ``f`` on the quadrature nodes
plus the on-shell value ``f(P)``, which enters only through the pole
subtraction and the ``i pi / 2P`` term.  That makes the system square
with no interpolation at the pole.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .kernel import DEFAULT_QUAD_N, PARITIES, kernel_matrices
from .params import DomainError, PhysicalParams, applicability, h_factor
from .quadrature import MomentumGrid, build_grid, pv_weights

log = logging.getLogger(__name__)

DEFAULT_N = 300
RESIDUAL_TOL = 1e-10
# Refuse on-shell momenta this close (relative) to the top of the valid window.
THRESHOLD_GUARD = 1e-6
AXES = ("P", "a1_ratio")


def scattering_energy(params: PhysicalParams, P: float) -> float:
    return params.eps + P**2 / (2.0 * params.M)


def check_momentum(params: PhysicalParams, P: float) -> None:
    """Raise :class:`DomainError` unless ``P`` is safely inside the valid window."""
    if not P > 0:
        raise DomainError(f"on-shell momentum must be positive, got {P!r}")
    verdict = applicability(params, P)
    if not verdict.valid:
        raise DomainError(f"P = {P!r} not applicable ({verdict.reason}, p_max = {verdict.p_max!r})")
    if P > verdict.p_max * (1.0 - THRESHOLD_GUARD):
        raise DomainError(f"P = {P!r} too close to p_max = {verdict.p_max!r}")


def scattering_grid(params: PhysicalParams, P: float, n: int = DEFAULT_N,
                    scale: Optional[float] = None) -> MomentumGrid:
    scale = params.momentum_scale() if scale is None else scale
    try:
        return build_grid(n, scale, P)
    except ValueError:
        # P landed on a node; a one-point-larger rule moves every node.
        return build_grid(n + 1, scale, P)


def _solve_channel(K: np.ndarray, h: np.ndarray, v: np.ndarray, grid: MomentumGrid) -> np.ndarray:
    i0 = grid.onshell_index
    A = np.eye(grid.n, dtype=complex) - (h[:, None] * K * v[None, :]) / np.pi
    b = (h * K[:, i0]).astype(complex)
    if not np.any(b):
        return np.zeros(grid.n, dtype=complex)
    lu = lu_factor(A, check_finite=True)
    if np.min(np.abs(np.diag(lu[0]))) == 0.0:
        raise np.linalg.LinAlgError("singular scattering system")
    f = lu_solve(lu, b)
    if log.isEnabledFor(logging.DEBUG):
        log.debug("scattering system condition number %.3e", np.linalg.cond(A))
    residual = np.linalg.norm(A @ f - b) / np.linalg.norm(b)
    if not residual <= RESIDUAL_TOL:
        raise np.linalg.LinAlgError(f"scattering solve residual {residual:.3e} above {RESIDUAL_TOL:g}")
    return f


def solve_offshell(params: PhysicalParams, P: float, parity: str, grid: MomentumGrid,
                   quad_n: int = DEFAULT_QUAD_N, kernel: Optional[np.ndarray] = None) -> np.ndarray:
    """Off-shell amplitude of one parity channel on every node of ``grid``.

    ``grid`` must carry the on-shell node at ``P``.  A precomputed kernel
    block on the same grid and energy can be passed to skip assembly.
    """
    if parity not in PARITIES:
        raise ValueError(f"parity must be one of {PARITIES}, got {parity!r}")
    if grid.P is None or grid.P != P:
        raise ValueError("grid must contain the on-shell node at P")
    check_momentum(params, P)
    if params.impurity_off:
        return np.zeros(grid.n, dtype=complex)
    E = scattering_energy(params, P)
    if kernel is None:
        kernel = kernel_matrices(grid, E, params, quad_n)[parity].entries
    h = h_factor(grid.nodes, P, params)
    return _solve_channel(kernel, h, pv_weights(grid), grid)


def onshell(grid: MomentumGrid, f_even, f_odd) -> tuple[complex, complex]:
    """On-shell channel amplitudes ``(f+, f-)``; ``f(+-P) = f+ +- f-``."""
    if grid.onshell_index is None:
        raise ValueError("grid has no on-shell node")
    i0 = grid.onshell_index
    return complex(f_even[i0]), complex(f_odd[i0])


def reflection_transmission(P: float, f_plus: complex, f_minus: complex):
    """``(R, T, r_amp, t_amp)`` from the on-shell channel amplitudes.

    ``r_amp = f(-P)/2P`` and ``t_amp = 1 + i f(P)/2P``.
    """
    if not P > 0:
        raise DomainError("P must be positive")
    r_amp = (f_plus - f_minus) / (2.0 * P)
    t_amp = 1.0 + 1j * (f_plus + f_minus) / (2.0 * P)
    return abs(r_amp) ** 2, abs(t_amp) ** 2, complex(r_amp), complex(t_amp)


@dataclass(frozen=True, eq=False)
class ScatteringResult:
    P: float
    E: float
    f_even: np.ndarray
    f_odd: np.ndarray
    f_even_onshell: complex
    f_odd_onshell: complex
    r_amp: complex
    t_amp: complex
    R: float
    T: float
    grid: MomentumGrid
    params: PhysicalParams
    quad_n: int

    @property
    def unitarity_defect(self) -> float:
        return abs(self.R + self.T - 1.0)

    @property
    def channel_defects(self) -> tuple[float, float]:
        """``| |1 + i f+-/P| - 1 |`` for the even and odd channel."""
        return tuple(abs(abs(1.0 + 1j * f / self.P) - 1.0)
                     for f in (self.f_even_onshell, self.f_odd_onshell))


def solve_scattering(params: PhysicalParams, P: float, n: int = DEFAULT_N,
                     quad_n: int = DEFAULT_QUAD_N, scale: Optional[float] = None) -> ScatteringResult:
    """Solve both parity channels at on-shell momentum ``P``."""
    check_momentum(params, P)
    grid = scattering_grid(params, P, n, scale)
    E = scattering_energy(params, P)
    if params.impurity_off:
        f_even = f_odd = np.zeros(grid.n, dtype=complex)
    else:
        blocks = kernel_matrices(grid, E, params, quad_n)
        h = h_factor(grid.nodes, P, params)
        v = pv_weights(grid)
        f_even = _solve_channel(blocks["even"].entries, h, v, grid)
        f_odd = _solve_channel(blocks["odd"].entries, h, v, grid)
    fe, fo = onshell(grid, f_even, f_odd)
    R, T, r_amp, t_amp = reflection_transmission(P, fe, fo)
    return ScatteringResult(P, E, f_even, f_odd, fe, fo, r_amp, t_amp, R, T, grid, params, quad_n)


@dataclass(frozen=True)
class SweepRow:
    value: float
    R: float
    T: float
    f_even: complex
    f_odd: complex
    unitarity_defect: float
    shaded: bool
    reason: str


def _shaded(value: float, reason: str) -> SweepRow:
    nan = math.nan
    return SweepRow(value, nan, nan, complex(nan, nan), complex(nan, nan), nan, True, reason)


def _sweep_point(params, axis, value, P, n, quad_n, scale) -> SweepRow:
    try:
        if axis == "a1_ratio":
            if value == 0:
                return _shaded(value, "a1_zero")
            point = params.with_a1(value * params.a)
            momentum = P
        else:
            point, momentum = params, value
        verdict = applicability(point, momentum) if momentum > 0 else None
        if verdict is None:
            return _shaded(value, "nonpositive_P")
        if not verdict.valid:
            return _shaded(value, verdict.reason)
        if momentum > verdict.p_max * (1.0 - THRESHOLD_GUARD):
            return _shaded(value, "near_threshold")
        res = solve_scattering(point, momentum, n, quad_n, scale)
    except DomainError as exc:
        log.info("sweep point %r shaded: %s", value, exc)
        return _shaded(value, "domain_error")
    return SweepRow(value, res.R, res.T, res.f_even_onshell, res.f_odd_onshell,
                    res.unitarity_defect, False, "ok")


def sweep(params: PhysicalParams, axis: str, values: Iterable[float], P: Optional[float] = None,
          n: int = DEFAULT_N, quad_n: int = DEFAULT_QUAD_N, scale: Optional[float] = None,
          jobs: int = 1) -> list[SweepRow]:
    """Scan ``P`` or ``a1/a`` and return one row per value, in input order.

    Points outside the applicability window come back as ``shaded`` rows
    filled with NaN instead of raising.  For ``axis="a1_ratio"``, ``P`` is
    the fixed on-shell momentum.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    if axis == "a1_ratio" and P is None:
        raise ValueError("an a1_ratio sweep needs a fixed P")
    values: Sequence[float] = [float(x) for x in values]

    def run(value):
        return _sweep_point(params, axis, value, P, n, quad_n, scale)

    if jobs <= 1:
        return [run(x) for x in values]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run, values))
