"""Acceptance suite: one test per exit criterion, stated tolerances pinned.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL line
per criterion.  The full reference sweeps execute inside session fixtures and
are shared by the criteria that inspect them.
"""

import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from anthobs import (
    Grid,
    ModelState,
    ParameterSet,
    SpatialParameterSet,
    SpatialSystem,
    WithinHostSystem,
    check_conditions,
    envelope_series,
    laplacian_neumann,
    model_rhs,
    simulate,
    step_euler,
    step_rk4,
)
from anthobs import runner

P = ParameterSet()

ODE_SWEEP_BUDGET_S = 10.0
PDE_SWEEP_BUDGET_S = 600.0
SCENARIO_BUDGET_S = 1.0


def _report(criterion: str, passed: bool, detail: str) -> None:
    print(f"{'PASS' if passed else 'FAIL'} {criterion}: {detail}")
    assert passed, f"{criterion}: {detail}"


@pytest.fixture(scope="session")
def ode_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("paper_ode")
    t0 = time.perf_counter()
    records = runner.sweep("paper-ode", P, out_dir=out)
    elapsed = time.perf_counter() - t0
    return records, out, elapsed


@pytest.fixture(scope="session")
def pde_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("paper_pde")
    t0 = time.perf_counter()
    records = runner.sweep("paper-pde", P, out_dir=out)
    elapsed = time.perf_counter() - t0
    return records, out, elapsed


def test_criterion_1_natural_observer_exact_law():
    """Gain-free error follows exp(-int alpha w) e(0) within 1e-3 |e(0)|."""
    worst = 0.0
    slowest = 0.0
    scenarios = [s for s in runner.scenario_matrix("paper-ode", P)
                 if s.k1 == 0.0 and s.k2 == 0.0]
    assert len(scenarios) == 8
    for s in scenarios:
        t0 = time.perf_counter()
        system = WithinHostSystem(P, s.theta0, s.v0, s.rho0)
        traj = simulate(system, 0.0, 1.0, 1e-4, scheme="euler")
        e = traj.truth[:, 0] - traj.observer[:, 0]
        env = envelope_series(traj.times, P, float(e[0]))
        gap = float(np.max(np.abs(e - env))) / abs(float(e[0]))
        slowest = max(slowest, time.perf_counter() - t0)
        worst = max(worst, gap)
    _report("criterion 1 (exact error law)", worst <= 1e-3 and slowest < SCENARIO_BUDGET_S,
            f"max |e - envelope|/|e0| = {worst:.2e} (tol 1e-3), "
            f"slowest scenario {slowest:.2f}s (budget {SCENARIO_BUDGET_S}s)")


def test_criterion_2_squared_error_envelope():
    """k1=0, k2=1e3: e^2 below exp(-int alpha w) e0^2 (1+1e-3) pointwise."""
    p2 = replace(P, k2=1e3)
    worst_margin = -np.inf
    slowest = 0.0
    scenarios = [s for s in runner.scenario_matrix("paper-ode", P)
                 if s.k1 == 0.0 and s.k2 == 1e3]
    assert {(s.theta0, s.v0) for s in scenarios} == set(runner.FIGURE_PAIRS)
    for s in scenarios:
        t0 = time.perf_counter()
        system = WithinHostSystem(p2, s.theta0, s.v0, s.rho0)
        traj = simulate(system, 0.0, 1.0, 1e-4, scheme="euler")
        e2 = (traj.truth[:, 0] - traj.observer[:, 0]) ** 2
        env = envelope_series(traj.times, P, 1.0) * e2[0]
        margin = float(np.max(e2 - env * (1.0 + 1e-3)))
        worst_margin = max(worst_margin, margin)
        slowest = max(slowest, time.perf_counter() - t0)
    _report("criterion 2 (squared-error envelope)",
            worst_margin <= 0.0 and slowest < SCENARIO_BUDGET_S,
            f"worst margin above envelope = {worst_margin:.2e} (must be <= 0), "
            f"slowest scenario {slowest:.2f}s")


def test_criterion_3_box_invariance_and_runtimes(ode_sweep, pde_sweep):
    """Pre-clamp overshoot <= 1e-6 across both sweeps, within time budgets."""
    ode_records, _, ode_elapsed = ode_sweep
    pde_records, _, pde_elapsed = pde_sweep
    assert all(r.status == "ok" for r in ode_records + pde_records)
    worst = max(max(r.overshoot.values()) for r in ode_records + pde_records)
    ok = (worst <= 1e-6 and ode_elapsed < ODE_SWEEP_BUDGET_S
          and pde_elapsed < PDE_SWEEP_BUDGET_S)
    _report("criterion 3 (box invariance)", ok,
            f"max overshoot {worst:.2e} (tol 1e-6); ode sweep {ode_elapsed:.1f}s"
            f" (budget {ODE_SWEEP_BUDGET_S:.0f}s), pde sweep {pde_elapsed:.1f}s"
            f" (budget {PDE_SWEEP_BUDGET_S:.0f}s)")


def test_criterion_4_pde_reduces_to_ode():
    """Uniform spatial factors + constant data: every cell tracks the ODE."""
    spu = SpatialParameterSet(base=P, spatial_profile="uniform", diffusivity=1e-2)
    grid = Grid(1, 8)
    worst = 0.0
    for theta0, v0 in ((0.05, 0.5), (0.75, 0.5)):
        pde_sys = SpatialSystem(spu, grid, theta0, v0, theta0)
        ode_sys = WithinHostSystem(P, theta0, v0, theta0)
        tr_p = simulate(pde_sys, 0.0, 1.0, 1e-4)
        tr_o = simulate(ode_sys, 0.0, 1.0, 1e-4)
        worst = max(worst, float(np.abs(tr_p.truth - tr_o.truth[..., None]).max()))
        worst = max(worst, float(np.abs(tr_p.observer - tr_o.observer[..., None]).max()))
    _report("criterion 4 (reduction oracle)", worst <= 1e-6,
            f"max cell deviation from ODE trajectory = {worst:.2e} (tol 1e-6)")


def test_criterion_5_figure_ordering(ode_sweep, pde_sweep):
    """The rot-innovation gain k2=1e3 never loses to k2=0 at final time."""
    problems = []
    for records, label in ((ode_sweep[0], "ode"), (pde_sweep[0], "pde")):
        by_key = {}
        for r in records:
            s = r.scenario
            by_key[(s.theta0, s.v0, s.rho0, s.k1, s.k2)] = r.final_rel_err
        for (theta0, v0, rho0, k1, k2), err in by_key.items():
            if k2 != 0.0:
                continue
            gained = by_key[(theta0, v0, rho0, k1, 1e3)]
            if gained > err:
                problems.append(
                    f"{label} th{theta0} v{v0} rho{rho0} k1={k1:g}:"
                    f" k2=1e3 err {gained:.3e} > k2=0 err {err:.3e}")
    _report("criterion 5 (figure ordering)", not problems,
            "k2=1e3 final rel_err <= k2=0 final rel_err for every figure"
            f" initial condition and matching k1 ({len(problems)} violations)"
            + ("; " + "; ".join(problems) if problems else ""))


def test_criterion_6_diffusion_conservation_and_dissipativity():
    """Neumann stencil conserves the cell sum and dissipates the L2 norm."""
    rng = np.random.default_rng(2024)
    worst_rel = 0.0
    for i in range(100):
        dim = 1 if i % 2 == 0 else 2
        g = Grid(dim, 24)
        f = rng.random(g.shape)
        out = laplacian_neumann(f, g, 1e-2)
        worst_rel = max(worst_rel, abs(out.sum()) / np.abs(out).sum())
    g = Grid(1, 32)
    f = rng.random(g.shape)
    dt = 0.9 * g.h ** 2 / (2 * 1e-2)
    norms = [float((f ** 2).mean())]
    for _ in range(1000):
        f = f + dt * laplacian_neumann(f, g, 1e-2)
        norms.append(float((f ** 2).mean()))
    monotone = bool(np.all(np.diff(norms) <= 1e-15))
    _report("criterion 6 (diffusion conservation/dissipativity)",
            worst_rel <= 1e-12 and monotone,
            f"worst relative cell-sum {worst_rel:.2e} (tol 1e-12); "
            f"L2 norm nonincreasing over 1000 steps: {monotone}")


def _final_state(scheme, dt):
    state = np.array([0.75, 0.5, 0.25])
    stepper = step_euler if scheme == "euler" else step_rk4
    rhs = lambda t, y: np.array(model_rhs(t, ModelState(*y.tolist()), P))
    for k in range(int(round(1.0 / dt))):
        state = stepper(rhs, k * dt, state, dt)
    return state


def test_criterion_7_integration_orders():
    """Step-halving ratios sit within a factor 2 of orders 1 and 4."""
    e1 = _final_state("euler", 2e-3)
    e2 = _final_state("euler", 1e-3)
    e3 = _final_state("euler", 5e-4)
    euler_ratio = float(np.linalg.norm(e1 - e2) / np.linalg.norm(e2 - e3))
    r1 = _final_state("rk4", 4e-3)
    r2 = _final_state("rk4", 2e-3)
    r3 = _final_state("rk4", 1e-3)
    rk4_ratio = float(np.linalg.norm(r1 - r2) / np.linalg.norm(r2 - r3))
    ok = 1.0 <= euler_ratio <= 4.0 and 8.0 <= rk4_ratio <= 32.0
    _report("criterion 7 (integration orders)", ok,
            f"euler halving ratio {euler_ratio:.2f} (want within [1,4] of 2), "
            f"rk4 halving ratio {rk4_ratio:.2f} (want within [8,32] of 16)")


def test_criterion_8_condition_diagnostics():
    """inf alpha = 0, attained exactly on the analytic root set."""
    system = WithinHostSystem(P, 0.75, 0.5, 0.25)
    traj = simulate(system, 0.0, 1.0, 1e-4)
    report = check_conditions(traj, P)
    # roots of (1 - cos(10 pi t)) * (t - 0.75)^2 on [0, 1]
    analytic = sorted({k / 5.0 for k in range(6)} | {0.75})
    got = [round(t, 9) for t in report.alpha_zero_times]
    ok = report.alpha_inf == 0.0 and got == analytic
    _report("criterion 8 (condition diagnostics)", ok,
            f"inf alpha = {report.alpha_inf}, zero set {got} vs analytic {analytic}")


def test_criterion_9_sweep_determinism(ode_sweep, tmp_path_factory):
    """Two paper-ode sweep executions emit byte-identical CSVs."""
    _, first_dir, _ = ode_sweep
    second_dir = tmp_path_factory.mktemp("paper_ode_repeat")
    runner.sweep("paper-ode", P, out_dir=second_dir)
    first = sorted(Path(first_dir).glob("*/series.csv"))
    mismatches = []
    for csv_a in first:
        csv_b = second_dir / csv_a.relative_to(first_dir)
        if csv_a.read_bytes() != csv_b.read_bytes():
            mismatches.append(csv_a.parent.name)
    ok = len(first) == 32 and not mismatches
    _report("criterion 9 (sweep determinism)", ok,
            f"{len(first)} CSVs compared, {len(mismatches)} byte mismatches")
