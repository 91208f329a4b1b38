"""Distortion magnitude functions and the statistics they induce."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cobeam import ImpairmentModel, eta_poly, evm_tx, nu_linear
from cobeam.impairments import (
    distortion_state,
    rx_distortion_var,
    tx_distortion_cov,
)
from cobeam.scenario import make_manual_scenario


def test_eta_poly_linear_values():
    # kappa2 = inf is the constant-EVM model, exactly (kappa1/100) x
    assert eta_poly(2.0, 1.0, math.inf) == pytest.approx(0.02, rel=1e-15)
    assert eta_poly(0.0, 7.0, math.inf) == 0.0
    np.testing.assert_allclose(
        eta_poly(np.array([1.0, 10.0]), 5.0, math.inf), [0.05, 0.5]
    )


def test_eta_poly_quintic_values():
    # (1/100) * 2 * (1 + (2/1)^4) = 0.34
    assert eta_poly(2.0, 1.0, 1.0) == pytest.approx(0.34, rel=1e-15)
    # superlinearity: doubling the input more than doubles the output
    assert eta_poly(4.0, 1.0, 1.0) > 2.0 * eta_poly(2.0, 1.0, 1.0)


def test_eta_poly_input_validation():
    with pytest.raises(ValueError):
        eta_poly(1.0, -1.0, math.inf)
    with pytest.raises(ValueError):
        eta_poly(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        eta_poly(-1.0, 1.0, math.inf)
    with pytest.raises(ValueError):
        nu_linear(-2.0, 1.0)


def test_nu_linear_values():
    assert nu_linear(3.0, 2.0) == pytest.approx(0.06, rel=1e-15)
    np.testing.assert_allclose(nu_linear(np.array([0.0, 50.0]), 4.0), [0.0, 2.0])


@settings(max_examples=60, deadline=None)
@given(
    x=st.floats(0.0, 40.0),
    y=st.floats(0.0, 40.0),
    kappa1=st.floats(0.0, 15.0),
    kappa2=st.floats(0.5, 100.0),
)
def test_eta_poly_is_nondecreasing_and_convex(x, y, kappa1, kappa2):
    lo, hi = sorted((x, y))
    f = lambda v: eta_poly(v, kappa1, kappa2)
    assert f(hi) >= f(lo)
    mid = 0.5 * (lo + hi)
    assert f(mid) <= 0.5 * (f(lo) + f(hi)) + 1e-12 * (1.0 + f(hi))


def test_model_flags():
    ideal = ImpairmentModel.ideal()
    assert ideal.is_ideal and ideal.eta_is_zero and ideal.nu_is_zero
    linear = ImpairmentModel(kappa1=4.0, kappa3=2.0)
    assert linear.eta_is_linear and not linear.eta_is_superlinear
    assert linear.eta_slope == pytest.approx(0.04)
    assert linear.nu_slope == pytest.approx(0.02)
    sat = ImpairmentModel(kappa1=4.0, kappa2=5.0)
    assert sat.eta_is_superlinear and not sat.eta_is_linear
    # kappa1 = 0 kills the quintic factor as well
    assert ImpairmentModel(kappa1=0.0, kappa2=5.0).eta_is_linear
    with pytest.raises(ValueError):
        ImpairmentModel(kappa1=-1.0)
    with pytest.raises(ValueError):
        ImpairmentModel(kappa2=0.0)


def test_model_validate_accepts_builtin_and_rejects_concave():
    ImpairmentModel(kappa1=8.0, kappa2=3.0, kappa3=5.0).validate()
    bad = ImpairmentModel(
        custom_eta=(lambda x: np.sqrt(x), lambda x: 0.5 / np.sqrt(np.maximum(x, 1e-12)))
    )
    with pytest.raises(ValueError):
        bad.validate()


def test_derivatives_match_finite_differences():
    model = ImpairmentModel(kappa1=6.0, kappa2=4.0, kappa3=3.0)
    h = 1e-6
    for x in (0.5, 2.0, 7.0):
        num = (model.eta(x + h) - model.eta(x - h)) / (2.0 * h)
        assert model.eta_deriv(x) == pytest.approx(num, rel=1e-6)
        num = (model.nu(x + h) - model.nu(x - h)) / (2.0 * h)
        assert model.nu_deriv(x) == pytest.approx(num, rel=1e-6)


def test_rescale_args_identity():
    model = ImpairmentModel(kappa1=6.0, kappa2=4.0, kappa3=3.0)
    a = 7.5
    scaled = model.rescale_args(a, a)
    for x in (0.3, 1.0, 2.5):
        assert scaled.eta(x) == pytest.approx(model.eta(a * x) / a, rel=1e-12)
        assert scaled.nu(x) == pytest.approx(model.nu(a * x) / a, rel=1e-12)
    assert scaled.kappa2 == pytest.approx(model.kappa2 / a)
    with pytest.raises(ValueError):
        model.rescale_args(0.0, 1.0)


def test_tx_distortion_cov_frozen_row_norms():
    # rows with norms 2 and 3 under 1 percent EVM give 4e-4 and 9e-4 mW
    W = np.array([[2.0, 0.0], [0.0, 3.0]], dtype=complex)
    model = ImpairmentModel(kappa1=1.0)
    np.testing.assert_allclose(tx_distortion_cov(W, model), [4e-4, 9e-4], rtol=1e-12)


def test_evm_is_scale_invariant_for_linear_eta():
    model = ImpairmentModel(kappa1=3.0)
    W = np.array([[1.0 + 1.0j, 0.5], [0.2, 2.0]], dtype=complex)
    for scale in (1.0, 10.0, 250.0):
        assert evm_tx(scale * W, 0, model) == pytest.approx(9e-4, rel=1e-12)
    # a saturating amplifier instead degrades with drive level
    sat = ImpairmentModel(kappa1=3.0, kappa2=2.0)
    assert evm_tx(10.0 * W, 1, sat) > evm_tx(W, 1, sat)
    with pytest.raises(ValueError):
        evm_tx(np.zeros((2, 1)), 0, model)


def test_distortion_state_shapes_and_floors():
    ch = np.zeros((2, 2, 1, 2), dtype=complex)
    ch[0, 0, 0] = [1.0, 0.5j]
    ch[1, 1, 0] = [0.8, 0.1]
    ch[0, 1, 0] = [0.1, 0.0]
    ch[1, 0, 0] = [0.2, 0.1j]
    sc = make_manual_scenario(ch, 0.3, tuple((((np.eye(2), 10.0),)) for _ in range(2)))
    Ws = [np.array([[1.0], [1.0j]]), np.array([[2.0], [0.0]])]
    model = ImpairmentModel(kappa1=5.0, kappa3=5.0)
    state = distortion_state(sc, Ws, model)
    assert state.tx_cov_diag.shape == (2, 2)
    assert state.rx_var.shape == (2, 1)
    assert np.all(state.rx_var >= sc.noise_power)
    # the receive variance decomposes as noise + nu(received magnitude)^2
    assert state.rx_var[0, 0] == pytest.approx(
        rx_distortion_var(sc, Ws, 0, 0, model), rel=1e-12
    )
