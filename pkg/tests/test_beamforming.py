"""QoS feasibility solves, fairness optimization, and their verification."""
import math

import numpy as np
import pytest

from cobeam import (
    ImpairmentModel,
    fpo_upper_bound,
    make_manual_scenario,
    power_saturation_probe,
    scale_power,
    solve_fpo,
    solve_qos,
    structure_fit,
    verify_solution,
)
from cobeam.beamforming import PerformanceMeasure
from cobeam.oracles import scalar_fpo, scalar_qos

RATE = PerformanceMeasure.rate()


def scalar_scenario(gain, sigma2, q, delta=1.0):
    return make_manual_scenario(
        np.full((1, 1, 1), math.sqrt(gain) + 0j), sigma2, (((np.eye(1), q),),), delta
    )


def multicell_scenario(seed=5, n=2, k=2, n_tx=3, q=100.0, sigma2=0.1):
    rng = np.random.default_rng(seed)
    ch = np.zeros((n, n, k, n_tx), dtype=complex)
    for m in range(n):
        for i in range(n):
            scale = 1.0 if m == i else 0.4
            ch[m, i] = scale * (
                rng.standard_normal((k, n_tx)) + 1j * rng.standard_normal((k, n_tx))
            ) / math.sqrt(2.0)
    return make_manual_scenario(ch, sigma2, tuple((((np.eye(n_tx), q),)) for _ in range(n)))


def radiated(W):
    return sum(float(np.linalg.norm(Wi) ** 2) for Wi in W)


def test_qos_matches_scalar_closed_form():
    gain, sigma2, q = 2.0, 1.0, 100.0
    model = ImpairmentModel(kappa1=3.0, kappa3=5.0)
    sc = scalar_scenario(gain, sigma2, q)
    for target in (0.5, 4.0, 30.0):
        sol = solve_qos(sc, model, np.full((1, 1), target))
        assert sol.ok
        _, _, beta_ref = scalar_qos(gain, sigma2, q, 3.0, 5.0, 1.0, target)
        assert sol.beta == pytest.approx(beta_ref, rel=1e-6)
        assert sol.sinr[0, 0] == pytest.approx(target, rel=1e-6)


def test_qos_zero_target_is_free():
    sol = solve_qos(scalar_scenario(1.0, 1.0, 10.0), ImpairmentModel.ideal(), np.zeros((1, 1)))
    assert sol.ok and sol.beta == 0.0
    assert np.all(sol.W[0] == 0.0)


def test_qos_detects_the_impairment_ceiling():
    # kappa1 = kappa3 = 10 caps the SINR at 1 / 0.02 = 50 at any power
    model = ImpairmentModel(kappa1=10.0, kappa3=10.0)
    sc = scalar_scenario(1.0, 1.0, 50.0)
    sol = solve_qos(sc, model, np.full((1, 1), 60.0))
    assert not sol.ok
    assert sol.status == "infeasible"
    assert sol.W is None


def test_qos_input_validation():
    sc = scalar_scenario(1.0, 1.0, 10.0)
    with pytest.raises(ValueError):
        solve_qos(sc, ImpairmentModel.ideal(), np.zeros((1, 1)), objective="fastest")
    with pytest.raises(ValueError):
        solve_qos(sc, ImpairmentModel.ideal(), np.zeros((1, 1)), budget_fraction_cap=0.0)
    with pytest.raises(ValueError):
        solve_qos(sc, ImpairmentModel.ideal(), np.full((1, 2), 1.0))


def test_fpo_scalar_ideal_value():
    # one ideal link with g q / sigma2 = 50 tops out at log2(51)
    sc = scalar_scenario(1.0, 1.0, 50.0)
    res = solve_fpo(sc, ImpairmentModel.ideal(), RATE, bisection_tol=1e-5)
    assert res.f_star == pytest.approx(math.log2(51.0), abs=2e-5)
    assert res.solution.beta <= 1.0 + 1e-6


def test_fpo_scalar_impaired_matches_oracle():
    gain, sigma2, q = 2.0, 1.0, 30.0
    res = solve_fpo(
        scalar_scenario(gain, sigma2, q),
        ImpairmentModel(kappa1=8.0, kappa3=3.0),
        RATE,
        bisection_tol=1e-5,
    )
    assert res.f_star == pytest.approx(scalar_fpo(gain, sigma2, q, 8.0, 3.0, 1.0), abs=2e-5)


def test_fpo_upper_bound_closed_form():
    sc = scalar_scenario(1.0, 1.0, 100.0)
    assert fpo_upper_bound(sc, RATE) == pytest.approx(math.log2(101.0), rel=1e-12)
    res = solve_fpo(sc, ImpairmentModel(kappa1=4.0), RATE)
    assert res.f_star <= fpo_upper_bound(sc, RATE)


def test_fpo_bisection_trace_halves_exactly():
    res = solve_fpo(scalar_scenario(1.0, 1.0, 50.0), ImpairmentModel.ideal(), RATE)
    widths = [step[1] for step in res.trace]
    for prev, cur in zip(widths, widths[1:]):
        assert cur == 0.5 * prev
    # the loop stops once another halving would dip below the tolerance
    assert widths[-1] <= 2.0 * 1e-3


def test_verified_multicell_solution():
    sc = multicell_scenario()
    model = ImpairmentModel(kappa1=4.0, kappa2=math.sqrt(1000.0), kappa3=4.0)
    res = solve_fpo(sc, model, RATE, bisection_tol=1e-3)
    rep = verify_solution(sc, model, res.solution)
    assert rep["power_rel"] <= 1e-6
    assert rep["sinr_cone_rel"] <= 1e-6
    assert rep["eta_violation"] <= 1e-6
    assert rep["nu_violation"] <= 1e-6
    assert rep["phase_imag_abs"] <= 1e-8
    # realized SINR meets each active target within 1e-4 relative
    active = res.solution.sinr_targets > 0
    ratio = res.solution.sinr[active] / res.solution.sinr_targets[active]
    assert np.all(ratio >= 1.0 - 1e-4)


def test_total_power_objective_spends_less_for_same_targets():
    sc = multicell_scenario()
    model = ImpairmentModel(kappa1=4.0, kappa3=4.0)
    targets = np.full((2, 2), 3.0)
    frac = solve_qos(sc, model, targets)
    econ = solve_qos(
        sc, model, targets, objective="total_power",
        budget_fraction_cap=min(1.0, frac.beta * (1.0 + 1e-6)),
    )
    assert frac.ok and econ.ok
    assert radiated(econ.W) <= radiated(frac.W) * (1.0 + 1e-6)
    for sol in (frac, econ):
        rep = verify_solution(sc, model, sol)
        assert rep["sinr_cone_rel"] <= 1e-6 and rep["power_rel"] <= 1e-6


def test_budget_fraction_cap_equals_scaled_budgets():
    # capping beta at 0.25 is the same problem as quartering every budget
    sc = multicell_scenario()
    model = ImpairmentModel(kappa1=4.0, kappa3=4.0)
    capped = solve_fpo(sc, model, RATE, bisection_tol=1e-4, budget_fraction_cap=0.25)
    scaled = solve_fpo(scale_power(sc, 0.25), model, RATE, bisection_tol=1e-4)
    assert capped.f_star == pytest.approx(scaled.f_star, abs=3e-4)


def test_canonical_solution_minimizes_power_at_the_optimum():
    sc = multicell_scenario()
    model = ImpairmentModel(kappa1=4.0, kappa3=4.0)
    res = solve_fpo(sc, model, RATE, bisection_tol=1e-3, canonical_power=True)
    canon = res.canonical_solution
    assert canon is not None and canon.ok
    assert canon.beta <= 1.0 + 1e-6
    assert radiated(canon.W) <= radiated(res.solution.W) * (1.0 + 1e-6)
    rep = verify_solution(sc, model, canon)
    assert rep["sinr_cone_rel"] <= 1e-6 and rep["power_rel"] <= 1e-6


def test_structure_fit_recovers_the_parametric_form():
    sc = multicell_scenario()
    model = ImpairmentModel(kappa1=4.0, kappa2=math.sqrt(1000.0), kappa3=4.0)
    res = solve_fpo(sc, model, RATE, bisection_tol=1e-3)
    fit = structure_fit(res.solution, sc)
    assert fit.worst_angle <= 0.05
    assert fit.angles.shape == (2, 2)
    assert np.nanmax(fit.angles) == pytest.approx(fit.worst_angle)


def test_saturation_probe_on_a_saturating_link():
    sc = scalar_scenario(1.0, 1.0, 1000.0)
    model = ImpairmentModel(kappa1=4.0, kappa2=2.0, kappa3=0.0)
    rep = power_saturation_probe(sc, model, RATE, (0.0, 10.0, 20.0, 30.0), bisection_tol=1e-4)
    assert rep.saturating_model
    assert rep.passed and rep.monotone_ok and rep.plateau_ok and rep.below_budget_ok
    # the plateau is strict: the top of the grid leaves real budget headroom
    assert rep.used_power_mw[-1] < 0.9 * rep.budget_mw[-1]
    assert rep.used_power_mw[-1] == pytest.approx(rep.used_power_mw[-2], rel=0.01)


def test_memoized_fpo_is_reusable_across_caps():
    # shared memo: the same instance answers every cap level, so repeated
    # solves reuse feasibility evidence instead of recomputing it
    sc = scalar_scenario(1.0, 1.0, 100.0)
    model = ImpairmentModel(kappa1=4.0, kappa2=3.0)
    memo = {}
    res_half = solve_fpo(sc, model, RATE, budget_fraction_cap=0.5, qos_memo=memo)
    n_entries = len(memo)
    again = solve_fpo(sc, model, RATE, budget_fraction_cap=0.5, qos_memo=memo)
    assert len(memo) == n_entries
    assert again.f_star == res_half.f_star
    res_full = solve_fpo(sc, model, RATE, budget_fraction_cap=1.0, qos_memo=memo)
    assert res_full.f_star >= res_half.f_star - 1e-9
