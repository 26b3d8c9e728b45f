"""Acceptance criteria 1-10 at their stated tolerances.

Each test records one PASS/FAIL line; the lines are repeated in the pytest
terminal summary. Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import numpy as np
import pytest

from conftest import record
from qfe.ansatz import AnsatzSpec, AnsatzState
from qfe.problems import (build_dense_ode, build_heat, build_stochastic_heat, build_stochastic_ode,
                          simulate, simulate_stochastic_heat)
from qfe.selftest import run_all, v_block_branches
from qfe.spectral import interpolation_error
from qfe.stochastic import extract_moments, pce_truncation_error, sample_amp0_squared
from qfe.vqs import VqsProblem, assemble_C, evolve, prepare_hamiltonian


def moments(run):
    out = []
    for th, c in zip(run.thetas, run.coefficients):
        m = extract_moments(c / th[0], th[0])
        out.append((m.mean, m.variance))
    return np.array(out)


def test_criterion_1_circuit_counts():
    inst = build_dense_ode()
    counts = {}
    for strategy in ("original", "parallel"):
        p = VqsProblem(inst.hamiltonian, inst.initial, 0.003, mode="circuit", strategy=strategy,
                       pauli_drop_tol=inst.pauli_drop_tol)
        counts[strategy] = evolve(p, AnsatzSpec(2, 2)).circuits_per_step
    ok = counts["original"] == [105] * 3 and counts["parallel"] == [45] * 3
    record(1, ok, f"circuits per step original={counts['original'][0]} (105), "
                  f"parallel={counts['parallel'][0]} (45), n=2, M=4")
    assert ok


def test_criterion_2_strategy_equivalence():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for trial in range(50):
        n = 1 + trial % 3
        h = prepare_hamiltonian(rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n)))
        spec = AnsatzSpec(n, 2, entangler="cx", axes=tuple(rng.choice(list("XYZ"), 2 * n)))
        st = AnsatzState(spec, np.r_[rng.uniform(0.2, 3), rng.uniform(-np.pi, np.pi, spec.M)])
        c_orig = assemble_C(st, h, "original")
        c_par = assemble_C(st, h, "parallel")
        worst = max(worst, np.abs(c_orig - c_par).max())
    ok = worst < 1e-10
    record(2, ok, f"max |C_parallel - C_original| = {worst:.2e} over 50 Hamiltonians (< 1e-10)")
    assert ok


def test_criterion_3_v_block_exactness():
    dev = v_block_branches(2)
    ok = dev < 1e-14
    record(3, ok, f"V-block branch deviation = {dev:.2e} for n <= 2 (< 1e-14)")
    assert ok


def test_criterion_4_dense_ode():
    inst = build_dense_ode()
    run = simulate(inst, 1.0, dt=1e-3, layers=2)
    err = np.abs(run.coefficients.real - inst.reference(run.times)).max()
    over = simulate(inst, 1.0, dt=1e-3, layers=4)
    res = over.residuals.max()
    ok = err <= 5e-2 and res < 1e-8
    record(4, ok, f"L-inf error = {err:.2e} (<= 5e-2, M=4); over-parameterized (M=8) "
                  f"max residual = {res:.2e} (< 1e-8)")
    assert ok


def test_criterion_5_stochastic_ode():
    runs = {n: simulate(build_stochastic_ode(2**n), 1.0, dt=1e-3, layers=2 if n == 2 else 4)
            for n in (2, 3)}
    t = runs[3].times
    ref = build_stochastic_ode(8).reference(t)
    m = moments(runs[3])
    mean_err = np.abs(m[:, 0] - ref[:, 0]).max()
    var_err = np.abs(m[:, 1] - ref[:, 1]).max()
    early = t <= 0.3 + 1e-12
    var_early = np.abs(m[early, 1] - ref[early, 1]).max()
    end = {n: abs(moments(r)[-1, 1] - ref[-1, 1]) for n, r in runs.items()}
    ok = mean_err <= 2e-2 and var_err <= 1e-1 and var_early <= 1e-2 and end[3] <= end[2]
    record(5, ok, f"n=3 mean err {mean_err:.2e} (2e-2), var err {var_err:.2e} (1e-1), "
                  f"var err t<=0.3 {var_early:.2e} (1e-2); var err at t=1 n=2 {end[2]:.2e} "
                  f">= n=3 {end[3]:.2e}")
    assert ok


def test_criterion_6_heat():
    inst = build_heat()
    run = simulate(inst, 1.0, dt=1e-3)
    ref = inst.reference(run.times)
    vqs_err = np.abs(run.coefficients.real - ref).max()
    cls_err = np.abs(inst.classical(run.times[::50]) - ref[::50]).max()
    ok = vqs_err <= 1e-2 and cls_err <= 1e-4
    record(6, ok, f"VQS vs analytic {vqs_err:.2e} (<= 1e-2); classical collocation vs "
                  f"analytic {cls_err:.2e} (<= 1e-4)")
    assert ok


def test_criterion_7_stochastic_heat():
    sh = build_stochastic_heat()
    runs = simulate_stochastic_heat(sh, 0.5, dt=1e-3)
    times = runs[0].times
    mean, var = sh.recombine(np.array([r.coefficients.real for r in runs]))
    errs = {}
    for t in (0.1, 0.5):
        i = int(np.argmin(abs(times - t)))
        rmean, rvar = sh.classical(times[i])
        errs[t] = (np.abs(mean[i] - rmean).max(), np.abs(var[i] - rvar).max())
    ok = all(e[0] <= 1e-2 and e[1] <= 2e-2 for e in errs.values())
    detail = "; ".join(f"t={t}: mean {e[0]:.2e}, var {e[1]:.2e}" for t, e in errs.items())
    record(7, ok, f"{detail} (<= 1e-2 / 2e-2; {len(runs)} collocation instances)")
    assert ok


def _criterion_8_values():
    f = lambda x: np.sin(np.pi * x)  # noqa: E731
    e11 = interpolation_error(f, 11)
    drop = interpolation_error(f, 7) / interpolation_error(f, 13)
    pce = [pce_truncation_error(lambda xi: np.exp(0.5 * xi), N) for N in range(2, 9)]
    return e11, drop, pce


def test_criterion_8_spectral_and_hermite_convergence():
    e11, drop, pce = _criterion_8_values()
    decreasing = all(b < a for a, b in zip(pce, pce[1:]))
    attainable_ok = drop >= 100 and decreasing and pce[-1] < 1e-4
    record(8, attainable_ok and e11 < 1e-6,
           f"interp err at 11 points {e11:.2e} (< 1e-6: unattainable, degree-10 minimax "
           f"error >= 5.7e-6); drop 7->13 points {drop:.1e}x (>= 100); PCE strictly "
           f"decreasing={decreasing}, N=8 err {pce[-1]:.2e} (< 1e-4)")
    assert attainable_ok


@pytest.mark.xfail(strict=True, reason="no degree-10 polynomial approximates sin(pi x) on "
                                       "[-1, 1] better than 5.7e-6 in max norm")
def test_criterion_8_eleven_point_threshold():
    e11, _, _ = _criterion_8_values()
    assert e11 < 1e-6


def test_criterion_9_shot_scaling():
    rng = np.random.default_rng(9)
    amps = np.array([0.8, 0.6])
    shots = np.array([100, 1000, 10_000, 100_000])
    rmse = [np.sqrt(np.mean([(sample_amp0_squared(amps, s, rng)[0] - 0.64) ** 2
                             for _ in range(500)])) for s in shots]
    slope = np.polyfit(np.log(shots), np.log(rmse), 1)[0]
    ok = -0.6 <= slope <= -0.4
    record(9, ok, f"log-log slope of amp0^2 error vs shots = {slope:.3f} (in [-0.6, -0.4])")
    assert ok


def test_criterion_10_selftest():
    checks = run_all()
    ok = all(c.passed for c in checks)
    worst = "; ".join(f"{c.name} {c.value:.1e}" for c in checks)
    record(10, ok, f"selftest {'green' if ok else 'red'}: {worst}")
    assert ok
