import numpy as np
import pytest

from deltadimer import (OFF, DomainError, build_grid, new_params, onshell, reflection_transmission,
                        single_atom_reflection, solve_offshell, solve_scattering, sweep)
from deltadimer.scatter import scattering_grid

# Converged reflection probabilities (n = 300, quad_n = 400; stable to 1e-13
# against n = quad_n = 200).
ANCHORS = [
    (-1.0, 1.0, 0.8268865458287),
    (-10.0, 0.1, 0.8139238041088),
    (-0.1, 0.1, 0.9999942715662),
    (1.0, 0.1, 0.9639539029271),
    (-50.0, 0.1, 0.1396969037137),
    (50.0, 0.1, 0.1349578767103),
    (1.2, 1.0, 0.2354352666023),
]


@pytest.mark.parametrize("a1,P,R", ANCHORS)
def test_reflection_anchors(equal, a1, P, R):
    res = solve_scattering(equal(a1), P)
    assert res.R == pytest.approx(R, abs=1e-11)
    assert res.unitarity_defect < 1e-10
    assert 0 <= res.R <= 1 and 0 <= res.T <= 1


def test_free_propagation():
    assert reflection_transmission(0.5, 0j, 0j)[:2] == (0.0, 1.0)
    res = solve_scattering(new_params(1, 1, 1, OFF), 0.7)
    assert not np.any(res.f_even) and not np.any(res.f_odd)
    assert (res.R, res.T) == (0.0, 1.0)


def test_amplitudes_and_channel_unitarity(equal):
    res = solve_scattering(equal(-1.0), 1.0)
    P = res.P
    R, T, r, t = reflection_transmission(P, res.f_even_onshell, res.f_odd_onshell)
    assert abs(r) ** 2 == pytest.approx(R) and abs(t) ** 2 == pytest.approx(T)
    for f in (res.f_even_onshell, res.f_odd_onshell):
        assert abs(1 + 1j * f / P) == pytest.approx(1.0, abs=1e-6)
    fP = res.f_even_onshell + res.f_odd_onshell
    fmP = res.f_even_onshell - res.f_odd_onshell
    assert fP.imag == pytest.approx((abs(fP) ** 2 + abs(fmP) ** 2) / (4 * P), abs=1e-6)


def test_offshell_matches_combined_solve(equal):
    p = equal(-2.0)
    res = solve_scattering(p, 0.6)
    g = res.grid
    for parity, f in (("even", res.f_even), ("odd", res.f_odd)):
        assert np.allclose(solve_offshell(p, 0.6, parity, g), f, rtol=1e-12, atol=1e-14)
    assert onshell(g, res.f_even, res.f_odd) == (res.f_even_onshell, res.f_odd_onshell)
    with pytest.raises(ValueError):
        solve_offshell(p, 0.6, "even", build_grid(64, 1.0))
    with pytest.raises(ValueError):
        onshell(build_grid(64, 1.0), res.f_even, res.f_odd)


def test_sign_change_of_symmetric_amplitude(equal):
    weak = solve_scattering(equal(-10.0), 0.1).f_even_onshell
    strong = solve_scattering(equal(-0.1), 0.1).f_even_onshell
    assert np.sign(weak.real) != np.sign(strong.real)


def test_odd_channel_suppressed_at_low_momentum(equal):
    p = equal(-1.0)
    ratios = []
    for P in (0.05, 0.025):
        res = solve_scattering(p, P)
        ratios.append(abs(res.f_odd_onshell) / abs(res.f_even_onshell))
    assert ratios[1] < ratios[0]


def test_reflection_exceeds_single_atom(equal):
    for a1 in (-10.0, -1.0, -0.1):
        for P in (0.1, 1.0):
            assert solve_scattering(equal(a1), P).R > single_atom_reflection(P, a1)


def test_applicability_enforced(equal):
    with pytest.raises(DomainError):
        solve_scattering(equal(-1.0), 2.0)
    with pytest.raises(DomainError):
        solve_scattering(equal(1.0), np.sqrt(2) * (1 - 1e-8))
    with pytest.raises(DomainError):
        solve_scattering(equal(0.5), 0.1)
    with pytest.raises(DomainError):
        solve_scattering(equal(-1.0), 0.0)


def test_onshell_momentum_on_a_node(equal):
    node = build_grid(300, 1.0).nodes[150]
    g = scattering_grid(equal(-1.0), node, 300)
    assert g.P == node and g.n == 302
    res = solve_scattering(equal(-1.0), node)
    assert res.unitarity_defect < 1e-10


def test_sweep_rows(equal):
    p = equal(1.0)
    values = [0.5, 1.0, 1.41, 1.42, 1.5]
    rows = sweep(p, "P", values)
    assert [r.value for r in rows] == values
    assert [r.shaded for r in rows] == [False, False, False, True, True]
    assert rows[3].reason == "above_impurity_capture" and np.isnan(rows[3].R)
    assert rows[1].R == pytest.approx(solve_scattering(p, 1.0).R, rel=1e-14)


def test_sweep_a1_axis_and_threads(equal):
    values = [-1.0, 0.0, 0.5, 1.0, 3.0]
    serial = sweep(equal(OFF), "a1_ratio", values, P=0.5)
    threaded = sweep(equal(OFF), "a1_ratio", values, P=0.5, jobs=3)
    assert [r.reason for r in serial] == ["ok", "a1_zero", "no_valid_P", "ok", "ok"]
    for a, b in zip(serial, threaded):
        assert a.value == b.value and a.shaded == b.shaded
        if not a.shaded:
            assert a.R == b.R and a.f_even == b.f_even


def test_sweep_rejects_bad_axis(equal):
    with pytest.raises(ValueError):
        sweep(equal(1.0), "E", [1.0])
    with pytest.raises(ValueError):
        sweep(equal(1.0), "a1_ratio", [1.0])
