"""Dimer states localized on an attractive impurity.

Folding ``int ds/2pi`` over the full line into one parity channel gives a
factor ``1/pi`` on the half line, so the homogeneous equation reads::

    c(p_i) = t(E - p_i^2/2M) (1/pi) sum_j w_j K+-(p_i, p_j; E) c(p_j).

A bound state is an energy where this operator ``B(E)`` has eigenvalue 1.
Below threshold ``t < 0`` and the kernel is symmetric.  The similarity
transform ``A = S (-K) S`` with ``S = diag(sqrt(|t| w / pi))`` is therefore
symmetric and has the same spectrum as ``B``.  Its top eigenvalue
decreases monotonically as ``E`` moves away from the threshold.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh
from scipy.optimize import brentq

from .kernel import DEFAULT_QUAD_N, PARITIES, kernel_blocks
from .params import DomainError, PhysicalParams, t_matrix
from .quadrature import MomentumGrid, build_grid

log = logging.getLogger(__name__)

DEFAULT_N = 300
MAX_ITER = 200
LAMBDA_TOL = 1e-10
# Closest approach of the scan to the threshold, relative to |threshold|.
THRESHOLD_GAP = 1e-9


@dataclass(frozen=True, eq=False)
class BoundStateResult:
    energy: float
    parity: str
    c: np.ndarray
    grid: MomentumGrid
    lambda_residual: float
    params: PhysicalParams
    quad_n: int

    @property
    def energy_ratio(self) -> float:
        """``energy / eps``; above 1 means bound deeper than the free dimer."""
        return self.energy / self.params.eps


def default_grid(params: PhysicalParams, n: int = DEFAULT_N, scale: Optional[float] = None) -> MomentumGrid:
    return build_grid(n, params.momentum_scale() if scale is None else scale)


def _check_parity(parity: str) -> None:
    if parity not in PARITIES:
        raise ValueError(f"parity must be one of {PARITIES}, got {parity!r}")


def _check_bound_energy(params: PhysicalParams, E: float) -> None:
    if not params.attractive and not params.impurity_off:
        raise DomainError("localized dimer states need an attractive impurity (a1 > 0)")
    if not E < min(params.threshold, 0.0):
        raise DomainError(
            f"E = {E!r} must lie below both binding energies (threshold {params.threshold!r})"
        )


def _symmetric_operator(E, parity, params, grid, quad_n):
    even, odd = kernel_blocks(grid.nodes, grid.nodes, E, params, quad_n)
    K = even if parity == "even" else odd
    K = 0.5 * (K + K.T)
    t = t_matrix(E - grid.nodes**2 / (2.0 * params.M), params.m, params.a)
    scale = np.sqrt(np.abs(t) * grid.weights / np.pi)
    return -(scale[:, None] * K * scale[None, :]), t


def bound_eigenvalue(E: float, parity: str, params: PhysicalParams, grid: MomentumGrid,
                     quad_n: int = DEFAULT_QUAD_N) -> float:
    """Largest eigenvalue of the discretized bound-state operator at energy ``E``."""
    _check_parity(parity)
    _check_bound_energy(params, E)
    if params.impurity_off:
        return 0.0
    A, _ = _symmetric_operator(E, parity, params, grid, quad_n)
    return float(eigh(A, eigvals_only=True, subset_by_index=[grid.n - 1, grid.n - 1])[0])


def _eigenvector(E, parity, params, grid, quad_n):
    A, t = _symmetric_operator(E, parity, params, grid, quad_n)
    lam, vec = eigh(A, subset_by_index=[grid.n - 1, grid.n - 1])
    c = np.sqrt(np.abs(t) / (np.pi * grid.weights)) * vec[:, 0]
    peak = np.argmax(np.abs(c))
    return float(lam[0]), c / c[peak]


def solve_bound_state(params: PhysicalParams, parity: str = "even",
                      window: Optional[tuple[float, float]] = None,
                      n: int = DEFAULT_N, quad_n: int = DEFAULT_QUAD_N,
                      scale: Optional[float] = None,
                      scan_points: int = 48) -> Optional[BoundStateResult]:
    """Find the lowest localized state in ``window = (E_lo, E_hi)``.

    The window defaults to ``(10 th, th (1 + 1e-9))`` with ``th = min(eps, eps1)``.
    The top eigenvalue is scanned on a log-spaced energy grid. A bracketed
    crossing of 1 is refined by Brent's method.  Returns ``None`` if the
    eigenvalue stays on one side of 1 over the whole window.
    """
    _check_parity(parity)
    if not params.attractive:
        raise DomainError("localized dimer states need an attractive impurity (a1 > 0)")
    th = params.threshold
    E_lo, E_hi = window if window is not None else (10.0 * th, th * (1.0 + THRESHOLD_GAP))
    if not E_lo < E_hi:
        raise ValueError(f"energy window misordered: {(E_lo, E_hi)!r}")
    if E_hi > th * (1.0 + THRESHOLD_GAP):
        raise DomainError(f"window top {E_hi!r} must stay below the threshold {th!r}")
    grid = default_grid(params, n, scale)

    def residual(E):
        return bound_eigenvalue(E, parity, params, grid, quad_n) - 1.0

    gaps = np.geomspace(E_hi / th - 1.0, E_lo / th - 1.0, scan_points)
    energies = th * (1.0 + gaps)
    values = [residual(E) for E in energies]
    log.debug("bound scan %s: %s", parity, list(zip(energies, values)))
    bracket = None
    for i in range(scan_points - 1):
        if values[i] > 0 >= values[i + 1]:
            bracket = (energies[i + 1], energies[i])
            break
    if bracket is None:
        return None
    E = brentq(residual, *bracket, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=MAX_ITER)
    lam, c = _eigenvector(E, parity, params, grid, quad_n)
    lambda_residual = abs(lam - 1.0)
    if lambda_residual > LAMBDA_TOL:
        raise RuntimeError(f"bound-state root not converged: |lambda - 1| = {lambda_residual:.3e}")
    return BoundStateResult(E, parity, c, grid, lambda_residual, params, quad_n)


def _pair_denominator(p1, p2, E, params):
    return p1**2 / (2.0 * params.m1) + p2**2 / (2.0 * params.m2) - E


def recover_c1(c, E: float, params: PhysicalParams, grid: MomentumGrid,
               parity: str = "even", k=None) -> np.ndarray:
    """Impurity amplitude ``c1(k)`` from the dimer amplitude ``c`` on ``grid``.

    ``c1(k) = -t1(E - k^2/2m2) int dp/2pi c(p) / D(p - k, k)``, where the
    full-line integral is rebuilt from the parity channel.  ``k`` defaults
    to the grid nodes and may hold any real momenta.
    """
    _check_parity(parity)
    k = grid.nodes if k is None else np.asarray(k, dtype=float)
    if params.impurity_off:
        return np.zeros(k.shape)
    sign = 1.0 if parity == "even" else -1.0
    p = grid.nodes[None, :]
    kk = k.reshape(-1, 1)
    fold = 1.0 / _pair_denominator(p - kk, kk, E, params) + sign / _pair_denominator(-p - kk, kk, E, params)
    conv = fold @ (grid.weights * np.asarray(c)) / (2.0 * np.pi)
    t1 = t_matrix(E - k.ravel() ** 2 / (2.0 * params.m2), params.m1, params.a1)
    return (-t1 * conv).reshape(k.shape)


def coupled_residual(c, c1, E: float, params: PhysicalParams, grid: MomentumGrid,
                     parity: str = "even") -> float:
    """Relative residual of ``t^-1(E - p^2/2M) c_p = -int dk/2pi c1_k / D(p - k, k)``."""
    sign = 1.0 if parity == "even" else -1.0
    p = grid.nodes[:, None]
    k = grid.nodes[None, :]
    fold = 1.0 / _pair_denominator(p - k, k, E, params) + sign / _pair_denominator(p + k, -k, E, params)
    rhs = -(fold @ (grid.weights * np.asarray(c1))) / (2.0 * np.pi)
    lhs = np.asarray(c) / t_matrix(E - grid.nodes**2 / (2.0 * params.M), params.m, params.a)
    return float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(lhs)))


def full_line_interpolant(grid: MomentumGrid, values, parity: str = "even") -> Callable:
    """Cubic interpolant of a parity-definite function given on ``grid.nodes``.

    The returned callable refuses arguments outside ``[-p_max, p_max]``.
    """
    _check_parity(parity)
    values = np.asarray(values, dtype=float)
    sign = 1.0 if parity == "even" else -1.0
    x = np.concatenate([-grid.nodes[::-1], grid.nodes])
    y = np.concatenate([sign * values[::-1], values])
    spline = CubicSpline(x, y)
    p_max = grid.nodes[-1]

    def evaluate(q):
        q = np.asarray(q, dtype=float)
        if np.any(np.abs(q) > p_max):
            raise DomainError(f"momentum beyond grid support |p| <= {p_max:.6g}")
        out = spline(q)
        return out if out.ndim else float(out)

    return evaluate


def coefficient_C(p1, p2, c: Callable, c1: Callable, E: float, params: PhysicalParams):
    """Two-body amplitude ``C(p1, p2) = -(c(p1 + p2) + c1(p2)) / (eps1(p1) + eps2(p2) - E)``.

    ``c`` and ``c1`` are full-line callables such as
    :func:`full_line_interpolant` returns.
    """
    if not E < 0:
        raise DomainError("coefficient reconstruction needs E < 0")
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    den = _pair_denominator(p1, p2, E, params)
    out = -(np.asarray(c(p1 + p2)) + np.asarray(c1(p2))) / den
    return out if np.ndim(out) else float(out)
