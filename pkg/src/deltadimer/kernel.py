"""Energy-dependent kernel K_{p,s}(E) and its parity blocks.

The kernel integrates the impurity t-matrix over the momentum ``k`` of
atom 2::

    K(p, s) = int dk/2pi  t1(E - k^2/2m2) / (D_p(k) D_s(k)),
    D_p(k)  = (p - k)^2/2m1 + k^2/2m2 - E.

Below every threshold it is real and symmetric.  On the half line,
``K(p, s) = K+(|p|, |s|) + sign(ps) K-(|p|, |s|)``.  Splitting ``1/D_p``
into parts even and odd in ``k`` turns each parity block into a Gram
product over ``k > 0``::

    K+-(p, s) = (1/pi) sum_k w_k t1_k e+-(p, k) e+-(s, k)

so a full matrix is two matrix products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import DomainError, PhysicalParams, t_matrix
from .quadrature import MomentumGrid, gauss_halfline

DEFAULT_QUAD_N = 400
PARITIES = ("even", "odd")


def check_energy(params: PhysicalParams, E: float) -> None:
    """Raise unless ``E`` is below both the breakup and the capture thresholds."""
    if not E < 0:
        raise DomainError(f"kernel needs a negative energy, got {E!r}")
    if params.attractive and not E < params.eps1:
        raise DomainError(
            f"atom-1 capture channel open: E = {E!r} is not below eps1 = {params.eps1!r}"
        )


def inner_scale(params: PhysicalParams, E: float) -> float:
    """Map scale of the inner ``k`` grid: the widest of the model momenta at ``E``."""
    return max(params.momentum_scale(), math.sqrt(-2.0 * params.m * E))


def impurity_measure(params: PhysicalParams, E: float, quad_n: int):
    """Nodes ``k > 0`` and weights ``w_k t1(E - k^2/2m2)`` of the inner integral."""
    k, w = gauss_halfline(quad_n, inner_scale(params, E))
    if params.impurity_off:
        return k, np.zeros_like(w)
    t1 = t_matrix(E - k**2 / (2.0 * params.m2), params.m1, params.a1)
    return k, w * t1


def _parity_factors(q, k, E, params: PhysicalParams):
    """Even/odd-in-k parts of ``1/D_q(k)``, written without cancellation."""
    q = np.asarray(q, dtype=float)[:, None]
    base = k**2 / (2.0 * params.m2) - E
    d_minus = (q - k) ** 2 / (2.0 * params.m1) + base
    d_plus = (q + k) ** 2 / (2.0 * params.m1) + base
    prod = d_minus * d_plus
    even = 0.5 * (d_minus + d_plus) / prod
    odd = (q * k / params.m1) / prod
    return even, odd


def kernel_value(p: float, s: float, E: float, params: PhysicalParams,
                 quad_n: int = DEFAULT_QUAD_N) -> float:
    """Full-line kernel ``K(p, s)`` for real (possibly negative) momenta."""
    check_energy(params, E)
    k, wt = impurity_measure(params, E, quad_n)
    k = np.concatenate([-k[::-1], k])
    wt = np.concatenate([wt[::-1], wt])
    base = k**2 / (2.0 * params.m2) - E
    dp = (p - k) ** 2 / (2.0 * params.m1) + base
    ds = (s - k) ** 2 / (2.0 * params.m1) + base
    return float(np.sum(wt / (dp * ds)) / (2.0 * np.pi))


def kernel_parity(p_abs: float, s_abs: float, E: float, params: PhysicalParams,
                  quad_n: int = DEFAULT_QUAD_N) -> tuple[float, float]:
    """Parity components ``(K+, K-)`` at ``p, s > 0`` from two full-line values."""
    direct = kernel_value(p_abs, s_abs, E, params, quad_n)
    crossed = kernel_value(p_abs, -s_abs, E, params, quad_n)
    return 0.5 * (direct + crossed), 0.5 * (direct - crossed)


def kernel_blocks(p, s, E: float, params: PhysicalParams,
                  quad_n: int = DEFAULT_QUAD_N) -> tuple[np.ndarray, np.ndarray]:
    """Even and odd kernel blocks on the outer products of ``p`` and ``s`` (both > 0)."""
    check_energy(params, E)
    k, wt = impurity_measure(params, E, quad_n)
    ep, op = _parity_factors(p, k, E, params)
    if s is p:
        es, os_ = ep, op
    else:
        es, os_ = _parity_factors(s, k, E, params)
    wt = wt / np.pi
    return (ep * wt) @ es.T, (op * wt) @ os_.T


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Dense parity block ``K+-(p_i, p_j; E)`` on the nodes of ``grid``."""

    E: float
    parity: str
    entries: np.ndarray
    grid: MomentumGrid
    quad_n: int


def kernel_matrices(grid: MomentumGrid, E: float, params: PhysicalParams,
                    quad_n: int = DEFAULT_QUAD_N) -> dict[str, KernelMatrix]:
    """Both parity blocks from one shared assembly."""
    even, odd = kernel_blocks(grid.nodes, grid.nodes, E, params, quad_n)
    # Gram products are symmetric up to round-off; make it exact.
    even = 0.5 * (even + even.T)
    odd = 0.5 * (odd + odd.T)
    return {
        "even": KernelMatrix(E, "even", even, grid, quad_n),
        "odd": KernelMatrix(E, "odd", odd, grid, quad_n),
    }


def kernel_matrix(grid: MomentumGrid, E: float, params: PhysicalParams, parity: str,
                  quad_n: int = DEFAULT_QUAD_N) -> KernelMatrix:
    if parity not in PARITIES:
        raise ValueError(f"parity must be one of {PARITIES}, got {parity!r}")
    return kernel_matrices(grid, E, params, quad_n)[parity]
