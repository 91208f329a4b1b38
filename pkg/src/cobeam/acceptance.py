"""Acceptance criteria for the whole library, as runnable checks.

Each criterion compares the optimizing code against an independent
reference (closed forms, exhaustive grids, boundary sweeps) or asserts a
structural property on randomized instances with fixed seeds. Tolerances
are part of the contract and live here; `tolerance_scale` exists only to
explore margins from the command line and is 1.0 for the real check.

Heavy intermediate data (the random instance banks and their solves) is
cached per process so criteria that share instances do not recompute them.
"""
from __future__ import annotations

import dataclasses
import functools
import math
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from . import harness, oracles
from .baselines import maxmin_optimal, tdma_rate
from .beamforming import (
    PerformanceMeasure,
    fpo_upper_bound,
    power_saturation_probe,
    solve_fpo,
    solve_qos,
    verify_solution,
)
from .conic import ConicProgram, solve_conic, verify_infeasibility_certificate
from .impairments import ImpairmentModel
from .metrics import evaluate, finite_snr_mux_gain
from .scenario import (
    DropConfig,
    dbm_to_mw,
    drop_users,
    make_manual_scenario,
    with_power_dbm,
)

__all__ = ["CriterionResult", "ALL", "run_all"]

RATE = PerformanceMeasure.rate()


@dataclass(frozen=True)
class CriterionResult:
    criterion_id: str
    passed: bool
    detail: str
    values: dict
    runtime: float


def _scalar_scenario(gain, sigma2, q, phase=0.0, delta=1.0):
    h = math.sqrt(gain) * complex(math.cos(phase), math.sin(phase))
    ch = np.full((1, 1, 1, 1), h, dtype=complex)
    return make_manual_scenario(ch, sigma2, [[(1.0, q)]], delta=delta)


def _random_multicell(rng, n_tx=4, users=2, cross_scale=0.3, q_range=(50.0, 200.0)):
    """Two-cell manual scenario with O(1) channel entries."""
    ch = np.zeros((2, 2, users, n_tx), dtype=complex)
    for m in range(2):
        for i in range(2):
            scale = 1.0 if m == i else cross_scale
            ch[m, i] = scale * (
                rng.normal(size=(users, n_tx)) + 1j * rng.normal(size=(users, n_tx))
            ) / math.sqrt(2.0)
    q = rng.uniform(*q_range)
    constraints = [[(np.eye(n_tx), q)] for _ in range(2)]
    return make_manual_scenario(ch, 1.0, constraints, delta=1.0), q


# -- criterion 1: scalar closed forms ---------------------------------------


def _c1_instances():
    rng = np.random.default_rng(101)
    out = []
    for k in range(100):
        gain = float(rng.uniform(0.1, 10.0))
        sigma2 = float(rng.uniform(0.1, 10.0))
        q = float(rng.uniform(1.0, 1000.0))
        if k < 10:
            k1 = k3 = 0.0
        else:
            k1 = float(rng.uniform(0.0, 15.0))
            k3 = float(rng.uniform(0.0, 15.0))
        delta = float(rng.integers(0, 2))
        phase = float(rng.uniform(0.0, 2.0 * math.pi))
        d = (k1 / 100.0) ** 2 + (k3 / 100.0) ** 2
        if d == 0.0:
            target = float(rng.uniform(0.5, 50.0))
        else:
            target = float(rng.uniform(0.05, 0.8)) / d
        out.append((gain, sigma2, q, k1, k3, delta, phase, target))
    return out


@functools.lru_cache(maxsize=None)
def _c1_data():
    rows = []
    start = time.perf_counter()
    for gain, sigma2, q, k1, k3, delta, phase, target in _c1_instances():
        sc = _scalar_scenario(gain, sigma2, q, phase=phase, delta=delta)
        model = ImpairmentModel(kappa1=k1, kappa3=k3)
        sol = solve_qos(sc, model, [[target]], tolerance=1e-9)
        _, _, beta_star = oracles.scalar_qos(gain, sigma2, q, k1, k3, delta, target)
        f_up = fpo_upper_bound(sc, RATE)
        fpo = solve_fpo(
            sc, model, RATE, bisection_tol=max(1e-6 * f_up, 1e-12), tolerance=1e-9
        )
        f_star = oracles.scalar_fpo(gain, sigma2, q, k1, k3, delta)
        rows.append(
            {
                "scenario": sc,
                "model": model,
                "params": (gain, sigma2, q, k1, k3, delta, target),
                "qos": sol,
                "fpo": fpo,
                "beta_star": beta_star,
                "f_star": f_star,
            }
        )
    return rows, time.perf_counter() - start


def criterion_scalar_closed_form(tol_scale=1.0) -> CriterionResult:
    rows, runtime = _c1_data()
    beta_err = 0.0
    f_err = 0.0
    for row in rows:
        beta_err = max(beta_err, abs(row["qos"].beta - row["beta_star"]) / row["beta_star"])
        f_err = max(f_err, abs(row["fpo"].f_star - row["f_star"]) / row["f_star"])
    tol = 1e-4 * tol_scale
    passed = beta_err <= tol and f_err <= tol and runtime < 30.0
    detail = (
        f"100 scalar instances: max rel err beta {beta_err:.2e}, f* {f_err:.2e} "
        f"(tol {tol:.0e}); solve time {runtime:.1f}s (< 30s)"
    )
    return CriterionResult(
        "c01_scalar_closed_form",
        passed,
        detail,
        {"beta_err": beta_err, "f_err": f_err, "runtime": runtime},
        runtime,
    )


# -- criterion 2: two-cell grid oracle --------------------------------------


def _c2_instances():
    rng = np.random.default_rng(202)
    out = []
    for k in range(20):
        own = rng.uniform(0.6, 2.5, size=2)
        cross = rng.uniform(0.05, 0.35, size=2) * own
        phases = rng.uniform(0.0, 2.0 * math.pi, size=4)
        ch = np.zeros((2, 2, 1, 1), dtype=complex)
        ch[0, 0, 0, 0] = math.sqrt(own[0]) * np.exp(1j * phases[0])
        ch[1, 1, 0, 0] = math.sqrt(own[1]) * np.exp(1j * phases[1])
        ch[1, 0, 0, 0] = math.sqrt(cross[0]) * np.exp(1j * phases[2])
        ch[0, 1, 0, 0] = math.sqrt(cross[1]) * np.exp(1j * phases[3])
        sigma2 = float(rng.uniform(0.5, 2.0))
        q = rng.uniform(20.0, 100.0, size=2)
        kind = k % 3
        if kind == 0:
            model = ImpairmentModel.ideal()
        elif kind == 1:
            model = ImpairmentModel(
                kappa1=float(rng.uniform(2.0, 10.0)), kappa3=float(rng.uniform(2.0, 10.0))
            )
        else:
            model = ImpairmentModel(
                kappa1=float(rng.uniform(2.0, 8.0)),
                kappa2=float(math.sqrt(q.max()) * rng.uniform(0.6, 1.2)),
                kappa3=float(rng.uniform(0.0, 5.0)),
            )
        sc = make_manual_scenario(
            ch, sigma2, [[(1.0, float(q[0]))], [(1.0, float(q[1]))]], delta=1.0
        )
        out.append((sc, model))
    return out


@functools.lru_cache(maxsize=None)
def _c2_data():
    rows = []
    start = time.perf_counter()
    for sc, model in _c2_instances():
        f_grid = oracles.grid_fpo(sc, model, n_grid=2000)
        f_up = fpo_upper_bound(sc, RATE)
        fpo = solve_fpo(
            sc, model, RATE, bisection_tol=max(2e-4 * f_up, 1e-10), tolerance=1e-9
        )
        rows.append({"scenario": sc, "model": model, "fpo": fpo, "f_grid": f_grid})
    return rows, time.perf_counter() - start


def criterion_two_cell_grid(tol_scale=1.0) -> CriterionResult:
    rows, runtime = _c2_data()
    worst = 0.0
    for row in rows:
        worst = max(
            worst, abs(row["fpo"].f_star - row["f_grid"]) / max(abs(row["f_grid"]), 1e-9)
        )
    tol = 1e-3 * tol_scale
    passed = worst <= tol and runtime < 300.0
    detail = (
        f"20 two-cell instances vs 2000x2000 power grid: max rel err {worst:.2e} "
        f"(tol {tol:.0e}); runtime {runtime:.1f}s (< 300s)"
    )
    return CriterionResult(
        "c02_two_cell_grid_oracle",
        passed,
        detail,
        {"max_rel_err": worst, "runtime": runtime},
        runtime,
    )


# -- criterion 3: reformulation tightness -----------------------------------


@functools.lru_cache(maxsize=None)
def _c3_extra_data():
    """20 random 4-antenna two-cell instances solved at their fairness point."""
    rng = np.random.default_rng(303)
    rows = []
    start = time.perf_counter()
    for k in range(20):
        sc, q = _random_multicell(rng)
        if k % 2 == 0:
            model = ImpairmentModel(
                kappa1=float(rng.uniform(2.0, 10.0)), kappa3=float(rng.uniform(2.0, 10.0))
            )
        else:
            model = ImpairmentModel(
                kappa1=float(rng.uniform(2.0, 8.0)),
                kappa2=float(math.sqrt(q) * rng.uniform(0.3, 0.8)),
                kappa3=float(rng.uniform(0.0, 5.0)),
            )
        fpo = solve_fpo(sc, model, RATE, bisection_tol=1e-3, tolerance=1e-9)
        rows.append({"scenario": sc, "model": model, "solution": fpo.solution})
    return rows, time.perf_counter() - start


def criterion_tightness(tol_scale=1.0) -> CriterionResult:
    c1_rows, _ = _c1_data()
    c2_rows, _ = _c2_data()
    extra, runtime = _c3_extra_data()
    solves = []
    for row in c1_rows:
        solves.append((row["scenario"], row["model"], row["qos"]))
        solves.append((row["scenario"], row["model"], row["fpo"].solution))
    for row in c2_rows:
        solves.append((row["scenario"], row["model"], row["fpo"].solution))
    for row in extra:
        solves.append((row["scenario"], row["model"], row["solution"]))

    gap_tol = 1e-5 * tol_scale
    phase_tol = 1e-8 * tol_scale
    resid_tol = 1e-6 * tol_scale
    worst = {
        "eta_gap_abs": 0.0,
        "nu_gap_abs": 0.0,
        "phase_imag_abs": 0.0,
        "power_rel": -math.inf,
        "sinr_cone_rel": -math.inf,
    }
    checked = 0
    for sc, model, sol in solves:
        if sol.W is None or sol.beta == 0.0:
            continue
        res = verify_solution(sc, model, sol)
        for key in worst:
            worst[key] = max(worst[key], res[key])
        checked += 1
    passed = (
        worst["eta_gap_abs"] <= gap_tol
        and worst["nu_gap_abs"] <= gap_tol
        and worst["phase_imag_abs"] <= phase_tol
        and worst["power_rel"] <= resid_tol
        and worst["sinr_cone_rel"] <= resid_tol
    )
    detail = (
        f"{checked} optimal solves: |t-eta| {worst['eta_gap_abs']:.1e}, "
        f"|r-nu| {worst['nu_gap_abs']:.1e} (tol {gap_tol:.0e}); "
        f"phase {worst['phase_imag_abs']:.1e} (tol {phase_tol:.0e}); "
        f"power/SINR residuals {worst['power_rel']:.1e}/{worst['sinr_cone_rel']:.1e} "
        f"(tol {resid_tol:.0e})"
    )
    return CriterionResult("c03_reformulation_tightness", passed, detail, worst, runtime)


# -- criterion 4: bisection contract ----------------------------------------


def criterion_bisection(tol_scale=1.0) -> CriterionResult:
    start = time.perf_counter()
    bis_tol = 1e-3
    halving_ok = True
    replay_ok = True
    scan_err = 0.0
    for gain, sigma2, q, k1, k3, delta, phase, _ in _c1_instances()[:5]:
        sc = _scalar_scenario(gain, sigma2, q, phase=phase, delta=delta)
        model = ImpairmentModel(kappa1=k1, kappa3=k3)
        fpo = solve_fpo(sc, model, RATE, bisection_tol=bis_tol, tolerance=1e-9)
        widths = [row[1] for row in fpo.trace]
        halving_ok &= all(widths[i + 1] == 0.5 * widths[i] for i in range(len(widths) - 1))
        lo = 0.0
        for cand, width, feasible, _beta in fpo.trace:
            replay_ok &= cand == lo + width * 0.5
            if feasible:
                lo = cand
        replay_ok &= fpo.f_star == lo
        f_up = fpo_upper_bound(sc, RATE)
        grid = np.arange(0.0, f_up * (1.0 + 1e-9), 1e-5)
        mask = oracles.scalar_feasible_levels(grid, gain, sigma2, q, k1, k3, delta)
        f_dense = float(grid[mask].max())
        scan_err = max(scan_err, abs(fpo.f_star - f_dense))
    runtime = time.perf_counter() - start
    tol = 2.0 * bis_tol * tol_scale
    passed = halving_ok and replay_ok and scan_err <= tol
    detail = (
        f"5 scalar instances: exact width halving {halving_ok}, candidate replay "
        f"{replay_ok}, |f* - dense scan| {scan_err:.2e} (tol {tol:.0e})"
    )
    return CriterionResult(
        "c04_bisection_contract",
        passed,
        detail,
        {"halving_ok": halving_ok, "replay_ok": replay_ok, "scan_err": scan_err},
        runtime,
    )


# -- criterion 5: ideal-hardware coincidence --------------------------------


def criterion_coincidence(tol_scale=1.0) -> CriterionResult:
    start = time.perf_counter()
    ideal = ImpairmentModel.ideal()
    worst = 0.0
    for d in range(20):
        base = drop_users(
            DropConfig(), users_per_cell=2, n_tx=4, rng_seed=np.random.SeedSequence([505, d])
        )
        mm = maxmin_optimal(base, ideal, RATE, bisection_tol=1e-4, tolerance=1e-8)
        design = dataclasses.replace(base, delta=0.0)
        ig_fpo = solve_fpo(design, ideal, RATE, bisection_tol=1e-4, tolerance=1e-8)
        ig_rates = evaluate(base, ig_fpo.solution.W, ideal, RATE)
        worst = max(worst, abs(mm.min_rate - ig_rates.min_rate))
    runtime = time.perf_counter() - start
    tol = 2e-8 * tol_scale
    passed = worst <= tol
    detail = (
        f"20 ideal-hardware drops: max |maxmin - ignoring| min-rate gap {worst:.2e} "
        f"(tol {tol:.0e}, twice the conic tolerance)"
    )
    return CriterionResult(
        "c05_ideal_coincidence", passed, detail, {"worst_gap": worst}, runtime
    )


# -- criterion 6: impairment-aware dominance --------------------------------


def criterion_dominance(tol_scale=1.0) -> CriterionResult:
    start = time.perf_counter()
    drops = 50
    kappas = (2.0, 4.0, 8.0)
    bis_tol = 1e-3
    slack = bis_tol * tol_scale  # the fairness level is resolved to bis_tol
    worst_violation = -math.inf
    gaps_at_8 = []
    for d in range(drops):
        base = drop_users(
            DropConfig(), users_per_cell=2, n_tx=4, rng_seed=np.random.SeedSequence([606, d])
        )
        design = dataclasses.replace(base, delta=0.0)
        ig_fpo = solve_fpo(
            design, ImpairmentModel.ideal(), RATE, bisection_tol=bis_tol, tolerance=1e-8
        )
        for kappa in kappas:
            model = ImpairmentModel(kappa1=kappa, kappa3=kappa)
            mm = maxmin_optimal(base, model, RATE, bisection_tol=bis_tol, tolerance=1e-8)
            ig_min = evaluate(base, ig_fpo.solution.W, model, RATE).min_rate
            worst_violation = max(worst_violation, ig_min - mm.min_rate)
            if kappa == 8.0:
                gaps_at_8.append(mm.min_rate - ig_min)
    runtime = time.perf_counter() - start
    mean_gap = float(np.mean(gaps_at_8))
    passed = worst_violation <= slack and mean_gap > 0.0
    detail = (
        f"{drops} drops x kappa in {kappas}: worst (ignoring - aware) "
        f"{worst_violation:.2e} (slack {slack:.0e}); mean aware advantage at "
        f"kappa=8: {mean_gap:.4f} bits (> 0 required)"
    )
    return CriterionResult(
        "c06_aware_dominates_ignoring",
        passed,
        detail,
        {"worst_violation": worst_violation, "mean_gap_at_8": mean_gap},
        runtime,
    )


# -- criterion 7: rate saturation and ideal slope ---------------------------


def criterion_saturation_slope(tol_scale=1.0) -> CriterionResult:
    start = time.perf_counter()
    drops = 50
    impaired = ImpairmentModel(kappa1=4.0, kappa3=4.0)
    ideal = ImpairmentModel.ideal()
    imp_powers = (60.0, 80.0)
    # the ideal slope is read off below the impaired pair: at 60+ dBm the
    # required SINR targets (~1e9) fall below conic feasibility resolution,
    # while 30-50 dBm is already deep in the interference-nulled regime
    ideal_powers = (30.0, 40.0, 50.0)
    imp_sum = {p: 0.0 for p in imp_powers}
    ideal_sum = {p: 0.0 for p in ideal_powers}
    for d in range(drops):
        base = drop_users(
            DropConfig(), users_per_cell=2, n_tx=4, rng_seed=np.random.SeedSequence([707, d])
        )
        for p in imp_powers:
            sc = with_power_dbm(base, p)
            imp_sum[p] += maxmin_optimal(sc, impaired, RATE, bisection_tol=1e-3).sum_rate
        for p in ideal_powers:
            sc = with_power_dbm(base, p)
            ideal_sum[p] += maxmin_optimal(sc, ideal, RATE, bisection_tol=1e-3).sum_rate
    r60 = imp_sum[60.0] / drops
    r80 = imp_sum[80.0] / drops
    gap_rel = abs(r60 - r80) / max(r60, r80)
    xs = np.log2([dbm_to_mw(p) for p in ideal_powers])
    ys = np.array([ideal_sum[p] / drops for p in ideal_powers])
    slope = float(np.polyfit(xs, ys, 1)[0])
    runtime = time.perf_counter() - start
    gap_tol = 0.02 * tol_scale
    slope_target = 4.0
    slope_tol = 0.15 * slope_target * tol_scale
    passed = gap_rel <= gap_tol and abs(slope - slope_target) <= slope_tol
    detail = (
        f"{drops} drops, kappa=4: avg sum rate 60 vs 80 dBm differs by "
        f"{100 * gap_rel:.2f}% (< {100 * gap_tol:.0f}%); ideal high-power slope "
        f"{slope:.2f} bits/octave (target {slope_target} +/- {slope_tol:.1f})"
    )
    return CriterionResult(
        "c07_rate_saturation_slope",
        passed,
        detail,
        {"r60": r60, "r80": r80, "gap_rel": gap_rel, "ideal_slope": slope},
        runtime,
    )


# -- criterion 8: bounded-power plateau -------------------------------------


def criterion_power_plateau(tol_scale=1.0) -> CriterionResult:
    start = time.perf_counter()
    drops = 10
    # operating cap 10*log10(kappa2^2) = 30 dBm, ten dB below the top budget
    model = ImpairmentModel(kappa1=4.0, kappa2=math.sqrt(1000.0), kappa3=0.0)
    grid = (10.0, 16.0, 22.0, 28.0, 32.0, 36.0, 40.0)
    failures = []
    reports = []
    for d in range(drops):
        base = drop_users(
            DropConfig(), users_per_cell=2, n_tx=4, rng_seed=np.random.SeedSequence([808, d])
        )
        rep = power_saturation_probe(base, model, RATE, grid, bisection_tol=1e-5)
        reports.append(rep)
        if not rep.passed:
            failures.append((d, rep))
    runtime = time.perf_counter() - start
    headroom = min(
        (r.budget_mw[-1] - r.used_power_mw[-1]) / r.budget_mw[-1] for r in reports
    )
    passed = not failures
    detail = (
        f"{drops} drops, kappa2=sqrt(1000): saturation probe passed on "
        f"{drops - len(failures)}/{drops}; min top-of-grid budget headroom "
        f"{100 * headroom:.1f}%"
    )
    return CriterionResult(
        "c08_bounded_power_plateau",
        passed,
        detail,
        {"n_failed": len(failures), "min_headroom": headroom},
        runtime,
    )


# -- criterion 9: finite-SNR multiplexing gain ------------------------------


def criterion_mux_gain(tol_scale=1.0) -> CriterionResult:
    start = time.perf_counter()
    drops = 50
    impaired = ImpairmentModel(kappa1=4.0, kappa3=4.0)
    ideal = ImpairmentModel.ideal()
    sums = {"mm_imp": 0.0, "mm_id": 0.0, "td_imp": 0.0, "td_id": 0.0}
    for d in range(drops):
        base = drop_users(
            DropConfig(), users_per_cell=2, n_tx=4, rng_seed=np.random.SeedSequence([909, d])
        )
        sums["mm_imp"] += maxmin_optimal(base, impaired, RATE, bisection_tol=1e-3).sum_rate
        sums["mm_id"] += maxmin_optimal(base, ideal, RATE, bisection_tol=1e-3).sum_rate
        sums["td_imp"] += tdma_rate(base, impaired, RATE, bisection_tol=1e-3).sum_rate
        sums["td_id"] += tdma_rate(base, ideal, RATE, bisection_tol=1e-3).sum_rate
    m_imp = finite_snr_mux_gain(sums["mm_imp"] / drops, sums["td_imp"] / drops)
    m_id = finite_snr_mux_gain(sums["mm_id"] / drops, sums["td_id"] / drops)

    # one cell, one user: coordination and time sharing are the same problem
    sc = _scalar_scenario(1.3, 0.7, 120.0, phase=0.4)
    mm1 = maxmin_optimal(sc, impaired, RATE, bisection_tol=1e-4)
    td1 = tdma_rate(sc, impaired, RATE, bisection_tol=1e-4)
    m_one = finite_snr_mux_gain(mm1.sum_rate, td1.sum_rate)
    runtime = time.perf_counter() - start
    passed = m_imp >= m_id and m_one == 1.0
    detail = (
        f"{drops} drops at 18.2 dBm: M(impaired) {m_imp:.3f} >= M(ideal) {m_id:.3f}: "
        f"{m_imp >= m_id}; single-user M == 1 exactly: {m_one == 1.0}"
    )
    return CriterionResult(
        "c09_finite_snr_mux_gain",
        passed,
        detail,
        {"m_impaired": m_imp, "m_ideal": m_id, "m_single": m_one},
        runtime,
    )


# -- criterion 10: conic backend --------------------------------------------


def _solve_suite_instance(inst):
    prog = ConicProgram()
    prog.add_variable("x", 2)
    prog.set_objective({"x": inst.objective})
    for k, (A, b, cvec, e) in enumerate(inst.socs):
        prog.add_soc({"x": A}, b, {"x": cvec}, e, name=f"soc_{k}")
    for k, (A, rho) in enumerate(inst.quads):
        prog.add_rotated_cone({"x": A}, np.zeros(A.shape[0]), {}, rho / 2.0, {}, 1.0, name=f"quad_{k}")
    return solve_conic(prog, tolerance=1e-9)


def criterion_conic_backend(tol_scale=1.0) -> CriterionResult:
    start = time.perf_counter()
    suite = oracles.socp_suite(count=20)
    worst = 0.0
    statuses_ok = True
    for inst in suite:
        out = _solve_suite_instance(inst)
        statuses_ok &= out.status == "optimal"
        ref = oracles.brute_force_socp(inst)
        worst = max(worst, abs(out.objective - ref) / abs(ref))
    cert_ok = True
    for build in oracles.infeasible_fixtures():
        out = solve_conic(build(), tolerance=1e-9)
        cert_ok &= out.status == "primal_infeasible"
        if out.certificate is not None:
            cert_ok &= verify_infeasibility_certificate(out)["valid"]
        else:
            cert_ok = False
    runtime = time.perf_counter() - start
    tol = 1e-4 * tol_scale
    passed = statuses_ok and worst <= tol and cert_ok
    detail = (
        f"20 cone programs vs boundary sweep: max rel err {worst:.2e} (tol {tol:.0e}); "
        f"all optimal: {statuses_ok}; infeasible fixtures certified: {cert_ok}"
    )
    return CriterionResult(
        "c10_conic_backend",
        passed,
        detail,
        {"max_rel_err": worst, "certificates_ok": cert_ok},
        runtime,
    )


# -- criterion 11: byte-identical CSV ---------------------------------------


def criterion_determinism(tol_scale=1.0) -> CriterionResult:
    start = time.perf_counter()
    cfg = harness.ExperimentConfig(
        experiment="custom",
        drops=2,
        seed=123,
        users_per_cell=2,
        n_tx=2,
        power_dbm=(18.2,),
        impairments=((4.0, math.inf, 4.0), (0.0, math.inf, 0.0)),
        schemes=("maxmin",),
        bisection_tol=1e-2,
    )
    blobs = []
    for jobs in (1, 1, 2):
        result = harness.run_experiment(cfg, jobs=jobs)
        with tempfile.NamedTemporaryFile(suffix=".csv", delete=False) as fh:
            path = fh.name
        harness.write_csv(result.records, path)
        with open(path, "rb") as fh2:
            blobs.append(fh2.read())
    identical = blobs[0] == blobs[1] and blobs[0] == blobs[2]
    header_ok = blobs[0].decode().splitlines()[0] == harness.CSV_HEADER
    runtime = time.perf_counter() - start
    passed = identical and header_ok
    detail = (
        f"same config run three times (jobs 1/1/2): byte-identical CSV {identical}, "
        f"header fixed {header_ok}"
    )
    return CriterionResult(
        "c11_csv_determinism",
        passed,
        detail,
        {"identical": identical, "header_ok": header_ok},
        runtime,
    )


# -- registry ---------------------------------------------------------------

ALL = {
    "c01_scalar_closed_form": (
        criterion_scalar_closed_form,
        "scalar QoS/fairness solves match closed forms within 1e-4 relative",
    ),
    "c02_two_cell_grid_oracle": (
        criterion_two_cell_grid,
        "two-cell fairness optimum matches a 2000x2000 power grid within 1e-3",
    ),
    "c03_reformulation_tightness": (
        criterion_tightness,
        "distortion magnitudes bind and all constraints verify on optimal solves",
    ),
    "c04_bisection_contract": (
        criterion_bisection,
        "interval halves exactly; f* within 2*bisection_tol of a dense scan",
    ),
    "c05_ideal_coincidence": (
        criterion_coincidence,
        "with ideal hardware the aware and ignoring strategies coincide",
    ),
    "c06_aware_dominates_ignoring": (
        criterion_dominance,
        "aware design never loses to the ignoring baseline; strict mean gain at kappa=8",
    ),
    "c07_rate_saturation_slope": (
        criterion_saturation_slope,
        "impaired rates saturate at high power; ideal slope is 4 bits/octave",
    ),
    "c08_bounded_power_plateau": (
        criterion_power_plateau,
        "with finite kappa2 the used power plateaus below growing budgets",
    ),
    "c09_finite_snr_mux_gain": (
        criterion_mux_gain,
        "multiplexing gain ordering at practical power; exactly 1 for one user",
    ),
    "c10_conic_backend": (
        criterion_conic_backend,
        "cone programs match boundary-sweep oracles; infeasibility is certified",
    ),
    "c11_csv_determinism": (
        criterion_determinism,
        "experiment CSV output is byte-identical across reruns and worker counts",
    ),
}


def _normalize_ids(ids):
    if ids is None:
        return None
    chosen = []
    for token in ids:
        token = str(token)
        if token in ALL:
            chosen.append(token)
            continue
        try:
            num = int(token)
        except ValueError:
            raise ValueError(f"unknown criterion {token!r}")
        matches = [cid for cid in ALL if cid.startswith(f"c{num:02d}_")]
        if not matches:
            raise ValueError(f"no criterion number {num}")
        chosen.extend(matches)
    return chosen


def run_all(ids=None, tolerance_scale: float = 1.0, stream=None):
    """Run the selected criteria (all by default), printing one line each."""
    chosen = _normalize_ids(ids)
    results = []
    for cid, (fn, _desc) in ALL.items():
        if chosen is not None and cid not in chosen:
            continue
        res = fn(tolerance_scale)
        results.append(res)
        if stream is not None:
            verdict = "PASS" if res.passed else "FAIL"
            print(f"{verdict} {cid}: {res.detail}", file=stream)
    return results
