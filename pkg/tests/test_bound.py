import numpy as np
import pytest

from deltadimer import (OFF, DomainError, bound_eigenvalue, build_grid, coefficient_C, new_params,
                        recover_c1, solve_bound_state)
from deltadimer.bound import coupled_residual, full_line_interpolant


@pytest.fixture(scope="module")
def state():
    """Even ground state at a1 = a on a reduced grid."""
    return solve_bound_state(new_params(1, 1, 1, 1.0), n=200, quad_n=200)


def test_eigenvalue_anchor():
    p = new_params(1, 1, 1, 1.0)
    lam = bound_eigenvalue(1.5 * p.eps, "even", p, build_grid(300, 1.0))
    assert lam == pytest.approx(1.3190176412649, rel=1e-11)
    assert bound_eigenvalue(1.5 * p.eps, "even", p, build_grid(400, 1.0)) == pytest.approx(lam, rel=1e-12)


def test_eigenvalue_limits():
    p = new_params(1, 1, 1, 1.0)
    g = build_grid(100, 1.0)
    assert bound_eigenvalue(-2.0, "even", new_params(1, 1, 1, OFF), g) == 0.0
    deep = [bound_eigenvalue(E, "even", p, g) for E in (-1e2, -1e4, -1e6)]
    assert deep[0] > deep[1] > deep[2] > 0 and deep[2] < 1e-2


def test_eigenvalue_monotone_scan():
    p = new_params(1, 1, 1, 1.0)
    g = build_grid(100, 1.0)
    energies = p.threshold * (1 + np.geomspace(1e-6, 9, 20))
    lam = [bound_eigenvalue(E, "even", p, g) for E in energies]
    assert np.all(np.diff(lam) < 0)


def test_domain_errors():
    p = new_params(1, 1, 1, 1.0)
    g = build_grid(32, 1.0)
    with pytest.raises(DomainError):
        bound_eigenvalue(-0.9, "even", p, g)
    with pytest.raises(DomainError):
        bound_eigenvalue(-2.0, "even", new_params(1, 1, 1, -1.0), g)
    with pytest.raises(DomainError):
        solve_bound_state(new_params(1, 1, 1, -1.0))
    with pytest.raises(ValueError):
        solve_bound_state(p, window=(-1.5, -3.0))
    with pytest.raises(DomainError):
        solve_bound_state(p, window=(-3.0, -0.5))
    with pytest.raises(ValueError):
        bound_eigenvalue(-2.0, "up", p, g)


def test_ground_state(state):
    p = state.params
    assert state.energy_ratio == pytest.approx(1.646781478515387, rel=1e-10)
    assert state.lambda_residual <= 1e-10
    assert state.energy < p.eps and state.energy < p.eps1
    assert np.max(np.abs(state.c)) == 1.0 and state.c[np.argmax(np.abs(state.c))] == 1.0
    assert np.all(state.c > 0)
    peak = np.argmax(state.c)
    assert np.all(np.diff(state.c[peak:]) < 0)


def test_window_without_crossing():
    p = new_params(1, 1, 1, 1.0)
    assert solve_bound_state(p, window=(-10.0, -5.0), n=100, quad_n=100) is None


def test_c1_consistency(state):
    p, E, g = state.params, state.energy, state.grid
    c1 = recover_c1(state.c, E, p, g)
    assert np.all(np.isfinite(c1))
    assert coupled_residual(state.c, c1, E, p, g) <= 1e-8
    k = np.array([0.05, 0.9, 4.0])
    assert np.allclose(recover_c1(state.c, E, p, g, k=-k), recover_c1(state.c, E, p, g, k=k), rtol=1e-12)
    assert not np.any(recover_c1(state.c, E, new_params(1, 1, 1, OFF), g))


def test_coefficient_C(state):
    p, E, g = state.params, state.energy, state.grid
    c = full_line_interpolant(g, state.c)
    c1 = full_line_interpolant(g, recover_c1(state.c, E, p, g))
    rng = np.random.default_rng(3)
    p1, p2 = rng.normal(scale=3.0, size=(2, 200))
    den = p1**2 / 2 + p2**2 / 2 - E
    assert np.all(den >= abs(E))
    C = coefficient_C(p1, p2, c, c1, E, p)
    assert np.all(np.isfinite(C))
    big = np.array([20.0, 50.0, 100.0])
    scaled = np.abs(coefficient_C(big, big, c, c1, E, p)) * (2 * big**2)
    assert np.all(scaled <= 2.0 * (1 + 1e-12))
    with pytest.raises(DomainError):
        coefficient_C(2 * g.nodes[-1], 0.0, c, c1, E, p)


def test_coefficient_C_without_impurity():
    p = new_params(1, 1, 1, OFF)
    c = lambda q: np.exp(-np.abs(q))
    c1 = lambda q: np.zeros_like(np.asarray(q, dtype=float))
    val = coefficient_C(0.3, -0.8, c, c1, -1.0, p)
    assert val == pytest.approx(-np.exp(-0.5) / (0.045 + 0.32 + 1.0), rel=1e-14)


def test_interpolant_parity(state):
    g = state.grid
    f = full_line_interpolant(g, np.sin(g.nodes), "odd")
    assert f(-0.37) == pytest.approx(-f(0.37), rel=1e-14)
    assert f(0.37) == pytest.approx(np.sin(0.37), rel=1e-6)
