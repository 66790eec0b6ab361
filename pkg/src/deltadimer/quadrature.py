"""Half-line momentum grids and principal-value integration.

Gauss-Legendre nodes on ``[0, 1)`` are pushed to ``[0, inf)`` with the
algebraic map ``s = c u / (1 - u)``, where ``c`` is a momentum scale.
The map suits integrands with algebraic tails such as the kernel's
``|k|^-3`` decay.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

MIN_NODES = 16


def gauss_halfline(n: int, scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ``int_0^inf ds`` with ``n`` mapped Gauss-Legendre points."""
    u, w = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (u + 1.0)
    w = 0.5 * w
    nodes = scale * u / (1.0 - u)
    weights = w * scale / (1.0 - u) ** 2
    return nodes, weights


@dataclass(frozen=True, eq=False)
class MomentumGrid:
    """Quadrature nodes/weights on ``(0, inf)``.

    When ``onshell_index`` is set, ``nodes[onshell_index]`` is exactly the
    on-shell momentum ``P``.  That node carries zero weight: it only
    enters integrals through the pole-subtraction and delta terms.
    """

    nodes: np.ndarray
    weights: np.ndarray
    onshell_index: Optional[int]
    map_scale: float

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def P(self) -> Optional[float]:
        if self.onshell_index is None:
            return None
        return float(self.nodes[self.onshell_index])

    def regular_mask(self) -> np.ndarray:
        """Boolean mask of the ordinary quadrature nodes (excludes the on-shell node)."""
        mask = np.ones(self.n, dtype=bool)
        if self.onshell_index is not None:
            mask[self.onshell_index] = False
        return mask


def build_grid(n: int, scale: float, P: Optional[float] = None) -> MomentumGrid:
    """Build an ``n``-point half-line grid, optionally with ``P`` injected as a node.

    ``scale`` is the momentum at which half of the nodes have been used.
    """
    if n < MIN_NODES:
        raise ValueError(f"grid needs at least {MIN_NODES} nodes, got {n}")
    if not scale > 0:
        raise ValueError("scale must be positive")
    nodes, weights = gauss_halfline(n, scale)
    if P is None:
        return MomentumGrid(nodes, weights, None, float(scale))
    if not P > 0:
        raise ValueError("on-shell momentum must be positive")
    P = float(P)
    if np.min(np.abs(nodes - P)) <= 1e-10 * P:
        raise ValueError("on-shell momentum coincides with a quadrature node; change n")
    idx = int(np.searchsorted(nodes, P))
    nodes = np.insert(nodes, idx, P)
    weights = np.insert(weights, idx, 0.0)
    return MomentumGrid(nodes, weights, idx, float(scale))


def pv_weights(grid: MomentumGrid) -> np.ndarray:
    """Complex weights ``v`` with ``sum(v * G) = int_0^inf G(s)/(s^2 - P^2 - i0) ds``.

    Uses ``int_0^inf [G(s) - G(P)]/(s^2 - P^2) ds + i pi G(P)/(2P)``, which
    rests on ``PV int_0^inf ds/(s^2 - P^2) = 0``.  The subtracted term is
    summed with the same discrete weights so the pole cancels node by node.
    """
    if grid.onshell_index is None:
        raise ValueError("grid has no on-shell node")
    P = grid.P
    mask = grid.regular_mask()
    s = grid.nodes[mask]
    w = grid.weights[mask]
    v = np.zeros(grid.n, dtype=complex)
    reg = w / (s**2 - P**2)
    v[mask] = reg
    v[grid.onshell_index] = -reg.sum() + 1j * np.pi / (2.0 * P)
    return v


def pv_integrate(grid: MomentumGrid, G, P: Optional[float] = None) -> complex:
    """``int_0^inf G(s)/(s^2 - P^2 - i0) ds`` for ``G`` sampled on every grid node."""
    if P is not None and (grid.P is None or grid.P != P):
        raise ValueError("grid has no on-shell node at the requested P")
    G = np.asarray(G)
    if G.shape != grid.nodes.shape:
        raise ValueError("G must be sampled on all grid nodes, on-shell node included")
    return complex(np.dot(pv_weights(grid), G))
