"""Acceptance criteria, one test each, at the stated tolerances.

Every test records a PASS/FAIL line that is printed in the terminal
summary.  The wave-packet criterion dominates the runtime (several minutes).
"""

import math
import time

import numpy as np
import pytest

from deltadimer import (OFF, applicability, build_grid, kernel_matrix, kernel_value, new_params,
                        point_dimer_reflection, single_atom_reflection, solve_bound_state,
                        solve_scattering, sweep)
from deltadimer.oracle import momentum_averaged_reflection, run_oracle

MOMENTA = (0.1, 1.0)
RATIOS = np.concatenate([np.linspace(-10.0, -0.1, 20), np.linspace(0.8, 10.0, 20)])


def params(a1):
    return new_params(1.0, 1.0, 1.0, a1)


@pytest.fixture(scope="module")
def unitarity_set():
    """Solutions on the 40-ratio grid at both momenta, valid points only."""
    start = time.perf_counter()
    results = []
    for P in MOMENTA:
        for a1 in RATIOS:
            p = params(float(a1))
            verdict = applicability(p, P)
            if verdict.valid and P < verdict.p_max * (1 - 1e-6):
                results.append((float(a1), P, solve_scattering(p, P)))
    return results, time.perf_counter() - start


def test_1_unitarity(unitarity_set, criterion):
    results, elapsed = unitarity_set
    worst = max(r.unitarity_defect for _, _, r in results)
    ok = worst <= 1e-5 and len(results) >= 60
    criterion(1, ok, f"max |T+R-1| = {worst:.2e} <= 1e-5 over {len(results)} valid points ({elapsed:.1f} s)")
    assert ok


def test_2_channel_unitarity(unitarity_set, criterion):
    results, _ = unitarity_set
    worst = max(max(r.channel_defects) for _, _, r in results)
    ok = worst <= 1e-6
    criterion(2, ok, f"max ||1 + i f/P| - 1| = {worst:.2e} <= 1e-6")
    assert ok


def test_3_weak_coupling_bound_state(criterion):
    res = solve_bound_state(params(0.05))
    ratio = res.energy_ratio
    ok = abs(ratio - 200.0) <= 0.05 * 200.0
    criterion(3, ok, f"a1/a = 0.05: eps+/eps = {ratio:.4f}, target 200 +- 5%")
    assert ok


def test_4_point_dimer_bound_state(criterion):
    res = solve_bound_state(params(10.0))
    offset = res.energy_ratio - 1.0
    ok = abs(offset - 0.01) <= 0.10 * 0.01
    criterion(4, ok, f"a1/a = 10: eps+/eps - 1 = {offset:.6f}, target 0.01 +- 10%")
    assert ok


def test_5_no_odd_bound_state(criterion):
    found = {a1: solve_bound_state(params(a1), "odd") for a1 in (0.1, 1.0, 10.0)}
    ok = all(r is None for r in found.values())
    criterion(5, ok, "odd channel returns none for a1/a in {0.1, 1, 10} over [10 th, th]")
    assert ok


def test_6_point_dimer_scattering(criterion):
    lines, ok = [], True
    for a1 in (-50.0, 50.0):
        p = params(a1)
        R = solve_scattering(p, 0.1).R
        ref = point_dimer_reflection(0.1, p)
        dev = abs(R - ref) / ref
        ok &= dev <= 0.05
        lines.append(f"a1/a={a1:+g}: R={R:.5f} vs {ref:.5f} ({100 * dev:.1f}%)")
    criterion(6, ok, "; ".join(lines) + " within 5%")
    assert ok


def test_7_reflection_enhancement(unitarity_set, criterion):
    results, _ = unitarity_set
    repulsive = [(a1, P, r) for a1, P, r in results if a1 < 0]
    margins = [r.R - single_atom_reflection(P, a1) for a1, P, r in repulsive]
    ok = len(repulsive) == 40 and min(margins) > 0
    criterion(7, ok, f"R_dimer > R_single at all {len(repulsive)} repulsive points "
                     f"(smallest margin {min(margins):.2e})")
    assert ok


def _window_check(P, lo, hi, step):
    values = list(np.round(np.arange(lo, hi + step / 2, step), 10))
    rows = [r for r in sweep(params(OFF), "a1_ratio", values, P=P) if not r.shaded]
    R = np.array([r.R for r in rows])
    a1 = np.array([r.value for r in rows])
    i = int(np.argmin(R))
    enhanced = a1[[r.T > 1 - single_atom_reflection(P, float(v)) for r, v in zip(rows, a1)]]
    return a1[i], R[i], rows[i].T > 1 - single_atom_reflection(P, float(a1[i])), enhanced


def test_8_resonance_windows(criterion):
    lines, ok = [], True
    for P, lo, hi in ((0.1, 0.7, 1.2), (1.0, 0.8, 1.8)):
        a1_min, R_min, beats_single, enhanced = _window_check(P, lo, hi, 0.01)
        ok &= lo <= a1_min <= hi and beats_single
        lines.append(f"Pa={P}: min R={R_min:.4f} at a1/a={a1_min:.2f}, T_dimer>T_single "
                     f"on [{enhanced.min():.2f}, {enhanced.max():.2f}]")
    criterion(8, ok, "; ".join(lines))
    assert ok


def test_9_applicability_flags(criterion):
    momenta = [round(0.05 * k, 10) for k in range(1, 40)]
    rows = sweep(params(1.0), "P", momenta, n=64, quad_n=100)
    shaded = [r.value for r in rows if r.shaded]
    expected = [P for P in momenta if P >= math.sqrt(2)]
    none_valid = all(applicability(params(r), 1e-6).reason == "no_valid_P"
                     for r in (0.3, 0.5, 0.7, 1 / math.sqrt(2)))
    ok = shaded == expected and none_valid
    criterion(9, ok, f"a1/a=1 shades exactly {len(shaded)} rows with Pa >= sqrt(2); "
                     f"a1/a <= 1/sqrt(2) has no valid P")
    assert ok


# Oracle benchmarks: (a1/a, P a, sigma, r_extent, trapped tolerance).
ORACLE_POINTS = [(-1.0, 1.0, 10.0, 16.0, 1e-4), (-10.0, 0.1, 15.0, 12.0, 2e-2),
                 (1.0, 0.1, 15.0, 12.0, 2e-2)]


def test_10_oracle_equivalence(criterion):
    lines, ok = [], True
    start = time.perf_counter()
    for a1, P0, sigma, r_extent, tol in ORACLE_POINTS:
        p = params(a1)
        ref = momentum_averaged_reflection(p, P0, sigma)
        res = run_oracle(p, P0, sigma, r_extent=r_extent, trapped_tol=tol)
        dev = max(abs(res.R - ref), abs(res.R + res.trapped - ref)) / ref
        ok &= dev <= 0.05 and res.norm_drift <= 1e-6 and res.energy_drift <= 1e-4
        lines.append(f"a1/a={a1:+g},Pa={P0}: R={res.R:.4f} vs {ref:.4f} ({100 * dev:.1f}%, "
                     f"trapped {res.trapped:.1e})")
    elapsed = time.perf_counter() - start
    criterion(10, ok, "; ".join(lines) + f" within 5% ({elapsed / 60:.1f} min)")
    assert ok


def test_11_grid_convergence(criterion):
    bound_dev = []
    for a1 in (0.05, 1.0, 10.0):
        coarse = solve_bound_state(params(a1), n=200, quad_n=200).energy
        fine = solve_bound_state(params(a1), n=400, quad_n=400).energy
        bound_dev.append(abs(coarse - fine) / abs(fine))
    bench = [(-10.0, 0.1), (-10.0, 1.0), (-1.0, 0.1), (-1.0, 1.0), (-0.1, 0.1), (-0.1, 1.0),
             (0.8, 0.1), (1.0, 0.1), (1.2, 1.0), (5.0, 1.0)]
    R_dev = [abs(solve_scattering(params(a1), P, 200, 200).R - solve_scattering(params(a1), P, 400, 400).R)
             for a1, P in bench]
    ok = max(bound_dev) < 1e-7 and max(R_dev) < 1e-6
    criterion(11, ok, f"eps+ rel. change {max(bound_dev):.1e} < 1e-7; "
                      f"R abs. change {max(R_dev):.1e} < 1e-6 (10 points)")
    assert ok


def test_12_kernel_properties(criterion):
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(100):
        a1 = float(rng.choice([-5.0, -1.0, -0.2, 0.9, 3.0]))
        p = params(a1)
        E = p.threshold * (1 + rng.uniform(1e-3, 4))
        x, y = rng.normal(scale=3.0, size=2)
        k = kernel_value(x, y, E, p)
        for other in (kernel_value(y, x, E, p), kernel_value(-x, -y, E, p)):
            worst = max(worst, abs(other - k) / abs(k))
    g = build_grid(64, 1.0)
    zero = not np.any(kernel_matrix(g, -1.5, params(OFF), "even").entries) and \
        kernel_value(0.3, 0.7, -1.5, params(OFF)) == 0.0
    ok = worst <= 1e-10 and zero
    criterion(12, ok, f"symmetry defects {worst:.1e} <= 1e-10 on 100 samples; K == 0 for g1 = 0")
    assert ok
