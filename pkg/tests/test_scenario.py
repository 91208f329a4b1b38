"""Scenario construction, unit conversions, and the random drop generator."""
import dataclasses
import math

import numpy as np
import pytest

from cobeam import (
    DropConfig,
    PowerConstraint,
    Scenario,
    dbm_to_mw,
    drop_users,
    make_manual_scenario,
    mw_to_dbm,
    per_antenna_constraints,
    per_array_constraints,
    scale_power,
    with_power_dbm,
)
from cobeam.scenario import _antenna_gain_db


def test_dbm_round_trip():
    assert dbm_to_mw(0.0) == 1.0
    assert dbm_to_mw(18.2) == pytest.approx(66.06934480075964, rel=1e-13)
    assert mw_to_dbm(dbm_to_mw(-31.7)) == pytest.approx(-31.7, abs=1e-12)
    with pytest.raises(ValueError):
        mw_to_dbm(0.0)


def test_pathloss_model_at_100m():
    # fixed 128.1 dB plus 37.6 dB per decade of km gives 90.5 dB at 100 m
    cfg = DropConfig()
    pl = cfg.pathloss_fixed_db + cfg.pathloss_slope_db * math.log10(0.1)
    assert pl == pytest.approx(90.5, abs=1e-12)


def test_antenna_gain_parabola_and_sector_clamp():
    cfg = DropConfig()
    assert _antenna_gain_db(0.0, cfg) == pytest.approx(14.0)
    assert _antenna_gain_db(math.pi / 4.0, cfg) == pytest.approx(
        9.065197799455321, rel=1e-12
    )
    # beyond the 45 degree sector edge the gain stays at the edge value
    assert _antenna_gain_db(2.0, cfg) == _antenna_gain_db(math.pi / 4.0, cfg)
    assert _antenna_gain_db(-0.3, cfg) == _antenna_gain_db(0.3, cfg)


def test_drop_shapes_and_interface_powers():
    cfg = DropConfig()
    sc = drop_users(cfg, users_per_cell=3, n_tx=4, rng_seed=11)
    assert sc.channels.shape == (2, 2, 3, 4)
    assert sc.noise_power == pytest.approx(dbm_to_mw(-127.0))
    for i in range(2):
        (pc,) = sc.cell_constraints(i)
        np.testing.assert_allclose(pc.Q, np.eye(4))
        assert pc.q == pytest.approx(dbm_to_mw(18.2))


def test_drop_determinism_and_seed_sensitivity():
    cfg = DropConfig()
    a = drop_users(cfg, users_per_cell=2, n_tx=4, rng_seed=3)
    b = drop_users(cfg, users_per_cell=2, n_tx=4, rng_seed=3)
    c = drop_users(cfg, users_per_cell=2, n_tx=4, rng_seed=4)
    assert np.array_equal(a.channels, b.channels)
    assert not np.array_equal(a.channels, c.channels)
    # the config seed is the fallback when no explicit seed is passed
    d = drop_users(dataclasses.replace(cfg, rng_seed=3), users_per_cell=2, n_tx=4)
    assert np.array_equal(a.channels, d.channels)


def test_drop_fading_is_zero_mean_across_antennas():
    # every link shares one large-scale gain, so the per-link antenna mean
    # must be small next to the per-link rms (CN(0, I) small-scale fading)
    sc = drop_users(DropConfig(), users_per_cell=4, n_tx=64, rng_seed=17)
    for m in range(2):
        for i in range(2):
            for j in range(4):
                h = sc.channels[m, i, j]
                rms = np.sqrt(np.mean(np.abs(h) ** 2))
                assert abs(np.mean(h)) < 0.5 * rms


def test_drop_rejects_impossible_geometry():
    # exclusion radius larger than any point of the serving half triangle
    cfg = DropConfig(min_bs_distance_m=495.0, resample_cap=50)
    with pytest.raises(RuntimeError):
        drop_users(cfg, users_per_cell=1, n_tx=1, rng_seed=0)
    with pytest.raises(ValueError):
        drop_users(DropConfig(), users_per_cell=1, n_tx=1, n_cells=3)


def test_drop_config_validation():
    with pytest.raises(ValueError):
        DropConfig(square_diagonal_m=-1.0)
    with pytest.raises(ValueError):
        DropConfig(min_bs_distance_m=600.0)
    with pytest.raises(ValueError):
        DropConfig(resample_cap=0)


def test_power_constraint_validation():
    with pytest.raises(ValueError):
        PowerConstraint(np.array([[0.0, 1.0], [0.0, 0.0]]), 1.0)  # not Hermitian
    with pytest.raises(ValueError):
        PowerConstraint(-np.eye(2), 1.0)  # not PSD
    with pytest.raises(ValueError):
        PowerConstraint(np.eye(2), 0.0)  # budget must be positive
    pc = PowerConstraint(np.eye(2), 5.0)
    with pytest.raises(ValueError):
        pc.Q[0, 0] = 2.0  # frozen


def test_scenario_validation():
    ch = np.ones((1, 1, 1, 2), dtype=complex)
    ok = (((np.eye(2), 1.0),),)
    with pytest.raises(ValueError):
        Scenario(np.ones((1, 2, 1, 2)), 1.0, ok)  # first two axes must agree
    with pytest.raises(ValueError):
        Scenario(ch, -1.0, ok)
    with pytest.raises(ValueError):
        Scenario(ch, 1.0, ok, delta=0.5)
    # a cell whose constraint matrices sum to something singular is rejected
    half = np.diag([1.0, 0.0])
    with pytest.raises(ValueError):
        make_manual_scenario(ch, 1.0, (((half, 1.0),),))
    with pytest.raises(ValueError):
        Scenario(ch, 1.0, ((),))  # no constraint at all


def test_manual_scenario_lifts_scalar_channels():
    sc = make_manual_scenario(
        np.full((1, 1, 1), 2.0 + 0j), 1.0, (((1.0, 5.0),),)
    )
    assert sc.channels.shape == (1, 1, 1, 1)
    assert sc.n_cells == 1 and sc.users_per_cell == 1 and sc.n_tx == 1
    assert sc.cell_constraints(0)[0].q == 5.0


def test_per_antenna_constraints_are_selectors():
    cells = per_antenna_constraints(2.5, n_cells=2, n_tx=3)
    assert len(cells) == 2 and len(cells[0]) == 3
    total = sum(pc.Q for pc in cells[0])
    np.testing.assert_allclose(total, np.eye(3))
    assert all(pc.q == 2.5 for pc in cells[0])
    with pytest.raises(ValueError):
        per_antenna_constraints(0.0, 1, 2)


def test_power_scaling_helpers_keep_ratios():
    cells = (
        (PowerConstraint(np.eye(2), 10.0), PowerConstraint(np.diag([1.0, 0.5]), 4.0)),
        (PowerConstraint(np.eye(2), 20.0),),
    )
    sc = Scenario(np.ones((2, 2, 1, 2), dtype=complex), 1.0, cells)
    doubled = scale_power(sc, 2.0)
    qs = [pc.q for cell in doubled.power_constraints for pc in cell]
    assert qs == [20.0, 8.0, 40.0]
    np.testing.assert_array_equal(doubled.channels, sc.channels)

    retuned = with_power_dbm(sc, 30.0)
    qs = [pc.q for cell in retuned.power_constraints for pc in cell]
    assert max(qs) == pytest.approx(dbm_to_mw(30.0))
    assert qs[1] / qs[0] == pytest.approx(0.4)
    with pytest.raises(ValueError):
        scale_power(sc, 0.0)
