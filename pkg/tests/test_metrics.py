"""Realized-performance metrics computed directly from beamformers."""
import math

import numpy as np
import pytest

from cobeam import ImpairmentModel, finite_snr_mux_gain, make_manual_scenario, power_usage
from cobeam.beamforming import PerformanceMeasure
from cobeam.metrics import evaluate, sinr, sinr_all, sinr_components
from cobeam.oracles import ideal_sinr

RATE = PerformanceMeasure.rate()


def two_cell_fixture():
    rng = np.random.default_rng(42)
    ch = rng.standard_normal((2, 2, 2, 3)) + 1j * rng.standard_normal((2, 2, 2, 3))
    sc = make_manual_scenario(ch, 0.5, tuple((((np.eye(3), 20.0),)) for _ in range(2)))
    Ws = [
        rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2)),
        rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2)),
    ]
    return sc, Ws


def test_power_usage_hand_value():
    W = np.array([[1.0 + 1.0j, 0.0], [0.0, 2.0]], dtype=complex)
    Q = np.diag([2.0, 1.0])
    C = np.array([0.01, 0.04])
    # tr(W^H Q W) = 2*2 + 1*4 = 8, distortion adds 2*0.01 + 1*0.04
    assert power_usage(W, C, Q, delta=1.0) == pytest.approx(8.06, rel=1e-12)
    assert power_usage(W, C, Q, delta=0.0) == pytest.approx(8.0, rel=1e-12)


def test_sinr_components_decompose_the_denominator():
    sc, Ws = two_cell_fixture()
    model = ImpairmentModel(kappa1=4.0, kappa2=10.0, kappa3=3.0)
    for i in range(2):
        for j in range(2):
            parts = sinr_components(sc, Ws, model, i, j)
            denom = parts["intra"] + parts["inter"] + parts["tx_distortion"] + parts["rx_variance"]
            assert sinr(sc, Ws, model, i, j) == pytest.approx(
                parts["signal"] / denom, rel=1e-12
            )
            # the receive variance never drops below the thermal floor
            assert parts["rx_variance"] >= sc.noise_power


def test_sinr_matches_classical_form_without_impairments():
    sc, Ws = two_cell_fixture()
    ideal = ImpairmentModel.ideal()
    grid = sinr_all(sc, Ws, ideal)
    for i in range(2):
        for j in range(2):
            assert grid[i, j] == pytest.approx(ideal_sinr(sc, Ws, i, j), rel=1e-12)


def test_impairments_only_reduce_sinr():
    sc, Ws = two_cell_fixture()
    ideal = sinr_all(sc, Ws, ImpairmentModel.ideal())
    impaired = sinr_all(sc, Ws, ImpairmentModel(kappa1=8.0, kappa3=8.0))
    assert np.all(impaired < ideal)


def test_evaluate_report_consistency():
    sc, Ws = two_cell_fixture()
    model = ImpairmentModel(kappa1=2.0, kappa3=2.0)
    rep = evaluate(sc, Ws, model, RATE)
    np.testing.assert_allclose(rep.rates, np.log2(1.0 + rep.sinr), rtol=1e-12)
    assert rep.min_rate == pytest.approx(rep.rates.min())
    assert rep.sum_rate == pytest.approx(rep.rates.sum())
    # linear eta keeps the transmit EVM pinned at kappa1 percent
    np.testing.assert_allclose(rep.evm_percent, 2.0, rtol=1e-9)
    used = sum(float(u) for cell in rep.power_used for u in np.atleast_1d(cell))
    assert used > 0.0


def test_evaluate_flags_overspent_budgets():
    sc, Ws = two_cell_fixture()
    model = ImpairmentModel.ideal()
    blown = [10.0 * Wi for Wi in Ws]
    assert not evaluate(sc, blown, model, RATE).power_feasible
    shrink = [1e-3 * Wi for Wi in Ws]
    assert evaluate(sc, shrink, model, RATE).power_feasible


def test_finite_snr_mux_gain():
    assert finite_snr_mux_gain(6.0, 2.0) == 3.0
    with pytest.raises(ValueError):
        finite_snr_mux_gain(1.0, 0.0)


def test_performance_measure_rate_inverse():
    measure = PerformanceMeasure.rate()
    x = np.array([0.0, 1.0, 63.0])
    np.testing.assert_allclose(measure.g_inverse(measure.g(x)), x, atol=1e-12)
    assert measure.g(1.0) == pytest.approx(1.0)
