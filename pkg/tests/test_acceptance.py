"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The long sweeps (criteria 7 to 9) take several minutes on one core.
Run with ``pytest tests/test_acceptance.py -v``; the verdict lines are also
collected in the ``acceptance criteria`` section of the terminal summary.
"""

from __future__ import annotations

import math
import random
import time
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from acceptance_log import record
from kinlimits.harness import ExperimentConfig, cmd_relax_test, cmd_sweep
from kinlimits.kinetic_model import (
    AXES,
    BgkOperator,
    classify_regime,
    moment_chain_terms,
    radial_formula_verdict,
    solve_hats,
    transport_coefficients,
)
from kinlimits.kinetic_solver import KineticSolver, SolverConfig, build_velocity_grid, lift_hydrodynamic
from kinlimits.moment_algebra import VelocityPolynomial, gaussian_moment, inner_product, kernel_basis, make_A, make_B
from kinlimits.verify import run_algebra_suite

LADDER = [0.2, 0.1, 0.05]
SWEEP = dict(M=32, N=8, amplitude=0.05, epsilon_ladder=LADDER)


def strictly_decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


def fmt(xs) -> str:
    return "[" + ", ".join(f"{x:.3e}" for x in xs) + "]"


# --- 1. exact algebra suite ---------------------------------------------------


def test_criterion_01_exact_algebra_suite():
    t0 = time.perf_counter()
    rep = run_algebra_suite(nu0=1, seed=0, n_pairs=100)
    elapsed = time.perf_counter() - t0
    names = " | ".join(name for name, _, _ in rep.checks)
    for needle in ("kernel orthogonality", "self-adjointness", "<Lp, k> = 0", "Gamma(g,g)", "9 + 81"):
        assert needle in names
    ok = rep.ok and elapsed < 10
    record(1, ok, f"{len(rep.checks)} exact checks, all pass={rep.ok}, 100 seeded pairs, {elapsed:.2f}s (< 10s)")
    assert rep.ok, "\n".join(rep.lines())
    assert elapsed < 10


# --- 2. transport coefficients -------------------------------------------------


def test_criterion_02_transport_coefficients():
    c1 = transport_coefficients(solve_hats(BgkOperator(Fraction(1))))
    c2 = transport_coefficients(solve_hats(BgkOperator(Fraction(2))))
    verdict = radial_formula_verdict()
    ok = (c1.kappa, c1.nu) == (1, 1) and (c2.kappa, c2.nu) == (Fraction(1, 2), Fraction(1, 2))
    record(
        2,
        ok,
        f"nu0=1: kappa={c1.kappa} nu={c1.nu}; nu0=2: kappa={c2.kappa} nu={c2.nu}; "
        f"radial forms as printed reproduce them: {verdict.printed_matches}, "
        f"with integrands swapped (1/15, 2/15): {verdict.swapped_matches}",
    )
    for line in verdict.lines():
        print("    " + line)
    assert ok


# --- 3. moment chain ------------------------------------------------------------


def _random_states(n=6, seed=3):
    rng = random.Random(seed)
    for _ in range(n):
        rho, theta = (Fraction(rng.randint(-7, 7), rng.randint(1, 6)) for _ in range(2))
        u = tuple(Fraction(rng.randint(-7, 7), rng.randint(1, 6)) for _ in AXES)
        yield rho, u, theta


def _targets(u, theta):
    usq = sum(x * x for x in u)
    B = {(i, j): u[i - 1] * u[j - 1] - (usq / 3 if i == j else 0) for i, j in product(AXES, AXES)}
    A = {i: Fraction(5, 2) * u[i - 1] * theta for i in AXES}
    return B, A


def test_criterion_03_moment_chain_replay():
    # The convective limit terms come from <Gamma(g,g), hat> = <g^2, .>/2 (unit nu0).
    mismatches = 0
    for rho, u, theta in _random_states():
        t = moment_chain_terms(rho, u, theta)
        B, A = _targets(u, theta)
        mismatches += sum(t["gamma_Bhat"][k] != B[k] for k in B)
        mismatches += sum(t["gamma_Ahat"][i] != A[i] for i in A)
        mismatches += sum(t["g2_B"][k] != 2 * t["gamma_Bhat"][k] for k in B)
    record(
        3,
        mismatches == 0,
        "exact: <Gamma(g,g), B_hat_ij> = u_i u_j - |u|^2 d_ij/3 and <Gamma(g,g), A_hat_i> = (5/2) u_i theta "
        "(raw <g^2, .> moments are twice these)",
    )
    assert mismatches == 0


@pytest.mark.xfail(strict=True, reason="raw <g^2, B_ij> and <g^2, A_i> carry an extra factor 2")
def test_criterion_03_raw_square_moments_literal():
    for rho, u, theta in _random_states():
        t = moment_chain_terms(rho, u, theta)
        B, A = _targets(u, theta)
        assert all(t["g2_B"][k] == B[k] for k in B)
        assert all(t["g2_A"][i] == A[i] for i in A)


# --- 4. quadrature fidelity -----------------------------------------------------


def test_criterion_04_quadrature_fidelity():
    grid = build_velocity_grid(8)
    V = grid.nodes
    worst = 0.0
    count = 0
    for a in range(16):
        for b in range(16 - a):
            for c in range(16 - a - b):
                vals = V[:, 0] ** a * V[:, 1] ** b * V[:, 2] ** c
                got = float(vals @ grid.weights)
                exact = float(gaussian_moment(a, b, c))
                # zero moments are compared against the size of the integrand
                scale = abs(exact) if exact else float(np.abs(vals) @ grid.weights)
                worst = max(worst, abs(got - exact) / scale)
                count += 1
    named = [make_A(i) for i in AXES] + [make_B(i, j) for i, j in product(AXES, AXES)] + kernel_basis()
    for p, q in product(named, named):
        if (p * q).degree <= 15:
            exact = float(inner_product(p, q))
            got = float(grid.inner(grid.sample(p), grid.sample(q)))
            scale = abs(exact) if exact else float(np.abs(grid.sample(p * q)) @ grid.weights)
            worst = max(worst, abs(got - exact) / scale)
            count += 1
    ok = worst < 1e-12
    record(4, ok, f"N=8: {count} moments/inner products of degree <= 15, worst relative error {worst:.2e} (< 1e-12)")
    assert ok


# --- 5. homogeneous relaxation --------------------------------------------------


def test_criterion_05_homogeneous_relaxation():
    t0 = time.perf_counter()
    res = cmd_relax_test(epsilons=(0.2, 0.05), qs=(0.5, 2.0), decades=3.0)
    elapsed = time.perf_counter() - t0
    decades = min(-math.log10(c["final_ratio"]) for c in res.cases)
    ok = res.max_deviation < 1e-10 and elapsed < 60 and decades >= 3 - 1e-9
    record(5, ok, f"max |deviation| {res.max_deviation:.2e} over {decades:.2f} decades, 4 cases, {elapsed:.2f}s")
    assert ok


# --- 6. conservation ------------------------------------------------------------


def test_criterion_06_conservation():
    M, steps = 16, 10_000
    grid = build_velocity_grid(8)
    cfg = SolverConfig(epsilon=0.1, regime=classify_regime(0.5, 0.5), M=M, N=8, source=None)
    solver = KineticSolver(cfg, grid)
    x1, x2 = solver.sgrid.coordinates()
    # small fluctuation: nonzero means in every invariant plus a non-equilibrium part
    a = 0.01
    rho = a * (1.0 + 0.5 * np.cos(x1 + x2))
    u = a * np.stack([0.4 + 0.3 * np.sin(x2), -0.3 + 0.2 * np.cos(x1), 0.2 + 0.1 * np.sin(x1)])
    theta = a * (0.5 + 0.4 * np.sin(2 * x1))
    g = lift_hydrodynamic(grid, rho, u, theta)
    g = g + 0.2 * a * np.cos(x1)[..., None] * grid.sample(make_B(1, 2))

    def means(h):
        return grid.kernel_moments(h).mean(axis=(0, 1))

    m0 = means(g)
    worst = 0.0
    t0 = time.perf_counter()
    for n in range(1, steps + 1):
        g = solver.step(g)
        if n % 100 == 0:
            worst = max(worst, float(np.max(np.abs(means(g) - m0) / np.abs(m0))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12
    record(6, ok, f"{steps} steps (M={M}, N=8, nonlinear collisions), worst relative drift {worst:.2e} (< 1e-12), {elapsed:.0f}s")
    assert ok


# --- 7 and 8. NSF sweep -----------------------------------------------------------


@pytest.fixture(scope="module")
def nsf_sweep():
    t0 = time.perf_counter()
    rep = cmd_sweep(ExperimentConfig(r=0.5, q=0.5, **SWEEP), write=False)
    return rep, time.perf_counter() - t0


def test_criterion_07_boussinesq_and_incompressibility(nsf_sweep):
    rep, elapsed = nsf_sweep
    bous, div = rep.column("boussinesq_residual"), rep.column("div_u_residual")
    ok = strictly_decreasing(bous) and strictly_decreasing(div) and elapsed < 30 * 60
    record(7, ok, f"|grad(rho+theta)| {fmt(bous)}, |div u| {fmt(div)}, sweep {elapsed:.0f}s")
    assert strictly_decreasing(bous)
    assert strictly_decreasing(div)
    assert elapsed < 30 * 60


def test_criterion_08_nsf_limit(nsf_sweep):
    rep, _ = nsf_sweep
    ue, te = rep.column("u_error"), rep.column("theta_error")
    mono = strictly_decreasing(ue) and strictly_decreasing(te)
    ceiling = max(ue[-1], te[-1]) <= 0.05
    record(
        8,
        mono and ceiling,
        f"u_error {fmt(ue)}, theta_error {fmt(te)}; decreasing={mono}, smallest-eps error <= 5%: {ceiling}",
    )
    assert mono
    assert ceiling, f"relative errors at eps={LADDER[-1]}: u {ue[-1]:.4f}, theta {te[-1]:.4f}"


# --- 9. regime dispatch -----------------------------------------------------------


def test_criterion_09_regime_dispatch():
    stokes = cmd_sweep(ExperimentConfig(r=2.0, q=0.5, **SWEEP), write=False)
    euler = cmd_sweep(ExperimentConfig(r=0.5, q=2.0, **SWEEP), write=False)
    su, st = stokes.column("u_error"), stokes.column("theta_error")
    em, eh = euler.column("euler_momentum_residual"), euler.column("euler_heat_residual")
    ok_s = stokes.regime["class"] == "Stokes" and strictly_decreasing(su) and strictly_decreasing(st)
    ok_e = euler.regime["class"] == "Euler" and strictly_decreasing(em) and strictly_decreasing(eh)
    record(
        9,
        ok_s and ok_e,
        f"Stokes u_error {fmt(su)} theta_error {fmt(st)}; Euler residuals momentum {fmt(em)} heat {fmt(eh)}",
    )
    assert ok_s and ok_e


# --- 10. determinism --------------------------------------------------------------


def test_criterion_10_determinism(tmp_path):
    kw = dict(r=0.5, q=0.5, M=16, N=8, amplitude=0.05, epsilon_ladder=[0.2, 0.1])
    cmd_sweep(ExperimentConfig(output_dir=str(tmp_path / "a"), **kw))
    cmd_sweep(ExperimentConfig(output_dir=str(tmp_path / "b"), **kw))
    a = (tmp_path / "a" / "report.csv").read_bytes()
    b = (tmp_path / "b" / "report.csv").read_bytes()
    record(10, a == b, f"two identical sweeps, report.csv {len(a)} bytes, identical={a == b}")
    assert a == b


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v", "-s"]))
