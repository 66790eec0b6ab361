"""Physical parameters, closed-form t-matrices and reference formulas.

Everything is in units with hbar = 1.  Couplings are parametrized by
scattering lengths: ``g = -1/(m a)`` for the atom-atom contact and
``g1 = -1/(m1 a1)`` for the impurity, so that positive lengths are
attractive.  The impurity can be switched off entirely with :data:`OFF`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

OFF = "off"

# Relative distance to a t-matrix pole below which the pole error is raised.
POLE_RTOL = 1e-12

LengthLike = Union[float, str, None]


class DomainError(ValueError):
    """An input lies outside the region where a formula or solver applies."""


class PoleError(DomainError):
    """Energy sits on (or numerically at) a t-matrix pole."""


def _is_off(length: LengthLike) -> bool:
    return length is None or (isinstance(length, str) and length.lower() == OFF)


@dataclass(frozen=True)
class PhysicalParams:
    """Masses and scattering lengths of the dimer + impurity system.

    ``a1`` is ``None`` when the impurity is switched off (``g1 = 0``).
    Use :func:`new_params` to build validated instances.
    """

    m1: float
    m2: float
    a: float
    a1: Optional[float]

    @property
    def m(self) -> float:
        """Reduced mass of the two atoms."""
        return self.m1 * self.m2 / (self.m1 + self.m2)

    @property
    def M(self) -> float:
        return self.m1 + self.m2

    @property
    def g(self) -> float:
        return -1.0 / (self.m * self.a)

    @property
    def g1(self) -> float:
        if self.a1 is None:
            return 0.0
        return -1.0 / (self.m1 * self.a1)

    @property
    def eps(self) -> float:
        """Dimer binding energy."""
        return -1.0 / (2.0 * self.m * self.a**2)

    @property
    def eps1(self) -> Optional[float]:
        """Binding energy of atom 1 on the impurity (attractive impurity only)."""
        if self.a1 is None or self.a1 < 0:
            return None
        return -1.0 / (2.0 * self.m1 * self.a1**2)

    @property
    def impurity_off(self) -> bool:
        return self.a1 is None

    @property
    def attractive(self) -> bool:
        return self.a1 is not None and self.a1 > 0

    @property
    def threshold(self) -> float:
        """Lowest two-body threshold: ``min(eps, eps1)`` (``eps`` without a bound impurity state)."""
        if self.eps1 is None:
            return self.eps
        return min(self.eps, self.eps1)

    def momentum_scale(self) -> float:
        """Characteristic momentum ``max(1/a, 1/|a1|)`` used to size grids."""
        if self.a1 is None:
            return 1.0 / self.a
        return max(1.0 / self.a, 1.0 / abs(self.a1))

    def with_a1(self, a1: LengthLike) -> "PhysicalParams":
        return new_params(self.m1, self.m2, self.a, a1)

    def as_dict(self) -> dict:
        return {
            "m1": self.m1,
            "m2": self.m2,
            "a": self.a,
            "a1": OFF if self.a1 is None else self.a1,
        }


def new_params(m1: float, m2: float, a: float, a1: LengthLike) -> PhysicalParams:
    """Validate inputs and build a :class:`PhysicalParams`.

    ``a1`` may be a nonzero finite float or the sentinel ``"off"`` (also
    ``None``) meaning no impurity coupling.
    """
    for name, value in (("m1", m1), ("m2", m2), ("a", a)):
        if not (math.isfinite(value) and value > 0):
            raise DomainError(f"{name} must be finite and positive, got {value!r}")
    if _is_off(a1):
        return PhysicalParams(float(m1), float(m2), float(a), None)
    if isinstance(a1, str):
        try:
            a1 = float(a1)
        except ValueError:
            raise DomainError(f"a1 must be a number or {OFF!r}, got {a1!r}") from None
    if not math.isfinite(a1):
        raise DomainError(f"a1 must be finite (use {OFF!r} for g1 = 0), got {a1!r}")
    if a1 == 0:
        raise DomainError("a1 = 0 means an infinite impurity coupling")
    return PhysicalParams(float(m1), float(m2), float(a), float(a1))


def t_matrix(E_prime, mass: float, length: LengthLike):
    """Contact-interaction t-matrix ``t(E') = kappa / (mass (1 - length kappa))``.

    ``kappa = sqrt(-2 mass E')``.  This equals ``1/(g^-1 + sqrt(mass/(-2E')))``
    with ``g = -1/(mass length)``, written with the bound-state pole explicit.
    Works elementwise on arrays.  Returns zeros when ``length`` is off.
    """
    E_prime = np.asarray(E_prime, dtype=float)
    if np.any(E_prime >= 0):
        raise DomainError("t-matrix is only defined here for negative energies")
    if _is_off(length):
        out = np.zeros_like(E_prime)
        return out if out.ndim else float(out)
    length = float(length)
    if length > 0:
        e_pole = -1.0 / (2.0 * mass * length**2)
        if np.any(np.abs(E_prime - e_pole) <= POLE_RTOL * abs(e_pole)):
            raise PoleError(f"energy at the t-matrix pole {e_pole!r}")
    kappa = np.sqrt(-2.0 * mass * E_prime)
    out = kappa / (mass * (1.0 - length * kappa))
    return out if out.ndim else float(out)


def h_factor(p, P: float, params: PhysicalParams):
    """Even factor ``h_p = (p^2 - P^2) t(E + i0 - p^2/2M)`` at ``E = eps + P^2/2M``.

    With ``g = -1/(m a)`` the pole of ``t`` cancels identically and
    ``h_p = -M kappa_p (1 + a kappa_p) / (m^2 a^2)`` where
    ``kappa_p^2 = 1/a^2 + m (p^2 - P^2)/M``.  This form has no 0/0 at
    ``|p| = P`` and is real below the dissociation threshold.
    """
    p = np.asarray(p, dtype=float)
    m, M, a = params.m, params.M, params.a
    kappa_sq = 1.0 / a**2 + m * (p**2 - P**2) / M
    if np.any(kappa_sq <= 0):
        raise DomainError("P is at or above the dissociation threshold")
    kappa = np.sqrt(kappa_sq)
    out = -M * kappa * (1.0 + a * kappa) / (m**2 * a**2)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ApplicabilityVerdict:
    valid: bool
    p_max: float
    reason: str  # ok | above_dissociation | above_impurity_capture | no_valid_P


def applicability(params: PhysicalParams, P: float) -> ApplicabilityVerdict:
    """Check that ``E = eps + P^2/2M`` lies below every open breakup channel.

    The scattering ansatz needs ``E < 0`` (no dissociation) and, for an
    attractive impurity, ``E < eps1`` (atom 1 cannot be captured).
    """
    M, eps = params.M, params.eps
    if params.attractive:
        p_max = math.sqrt(2.0 * M * max(0.0, params.eps1 - eps))
        blocked = "above_impurity_capture"
    else:
        p_max = math.sqrt(-2.0 * M * eps)
        blocked = "above_dissociation"
    if p_max == 0.0:
        return ApplicabilityVerdict(False, 0.0, "no_valid_P")
    if P < p_max:
        return ApplicabilityVerdict(True, p_max, "ok")
    return ApplicabilityVerdict(False, p_max, blocked)


def single_atom_reflection(P, a1: LengthLike):
    """Reflection probability ``1/(1 + (P a1)^2)`` of a lone atom on the impurity."""
    P = np.asarray(P, dtype=float)
    if _is_off(a1):
        out = np.zeros_like(P)
    else:
        out = 1.0 / (1.0 + (P * float(a1)) ** 2)
    return out if out.ndim else float(out)


def point_dimer_reflection(P, params: PhysicalParams):
    """Lorentzian limit for a point-like dimer, ``a1' = a1 m1/M``."""
    if params.impurity_off:
        return single_atom_reflection(P, OFF)
    return single_atom_reflection(P, params.a1 * params.m1 / params.M)


def dimer_phi(x, a: float):
    """Normalized relative-motion bound state ``exp(-|x|/a)/sqrt(a)``."""
    x = np.asarray(x, dtype=float)
    out = np.exp(-np.abs(x) / a) / math.sqrt(a)
    return out if out.ndim else float(out)
