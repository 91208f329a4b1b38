"""Cone program construction and the interior-point solve path."""
import math

import numpy as np
import pytest

from cobeam import ConicProgram, ScalarConvexConstraint, outer_approx_solve, solve_conic
from cobeam.conic import embed_quadratic, verify_infeasibility_certificate
from cobeam.oracles import infeasible_fixtures


def ball_program(center, radius, objective):
    prog = ConicProgram()
    prog.add_variable("x", 2)
    prog.add_soc({"x": np.eye(2)}, -np.asarray(center, dtype=float), {}, radius, name="ball")
    prog.set_objective({"x": np.asarray(objective, dtype=float)})
    return prog


def test_linear_objective_over_ball():
    # min c.x over ||x - a|| <= R is c.a - R ||c||
    c = np.array([1.0, 2.0])
    out = solve_conic(ball_program([0.5, -1.0], 2.0, c))
    assert out.status == "optimal"
    expected = 0.5 - 2.0 - 2.0 * math.sqrt(5.0)
    assert out.objective == pytest.approx(expected, rel=1e-7)
    np.testing.assert_allclose(
        out.primal["x"], [0.5 - 2.0 / math.sqrt(5.0), -1.0 - 4.0 / math.sqrt(5.0)], atol=1e-6
    )
    assert out.primal_residual <= 1e-6 and out.dual_residual <= 1e-6
    assert "ball" in out.duals


def test_equality_restricts_the_ball():
    prog = ball_program([0.0, 0.0], 1.0, [0.0, 1.0])
    prog.add_equality({"x": np.array([[1.0, 0.0]])}, 0.6, name="pin")
    out = solve_conic(prog)
    assert out.status == "optimal"
    assert out.primal["x"][0] == pytest.approx(0.6, abs=1e-7)
    assert out.objective == pytest.approx(-0.8, abs=1e-6)


def test_componentwise_inequalities():
    prog = ConicProgram()
    prog.add_variable("x", 2)
    prog.add_inequality({"x": -np.eye(2)}, np.array([-1.0, -2.0]), name="floor")
    prog.set_objective({"x": np.array([1.0, 1.0])})
    out = solve_conic(prog)
    assert out.status == "optimal"
    np.testing.assert_allclose(out.primal["x"], [1.0, 2.0], atol=1e-7)


def test_rotated_cone_models_a_square():
    # x^2 <= 2 t (1/2) with x >= 2 pins t at 4
    prog = ConicProgram()
    prog.add_variable("x", 1)
    prog.add_variable("t", 1)
    prog.add_rotated_cone(
        {"x": np.array([[1.0]])}, 0.0, {"t": np.array([1.0])}, 0.0, {}, 0.5, name="sq"
    )
    prog.add_inequality({"x": np.array([[-1.0]])}, -2.0, name="lb")
    prog.set_objective({"t": np.array([1.0])})
    out = solve_conic(prog)
    assert out.status == "optimal"
    assert out.objective == pytest.approx(4.0, rel=1e-6)


def test_embed_quadratic_weighted_norm_ball():
    # max w1 + w2 subject to w1^2 + 2 w2^2 <= 1 equals sqrt(3/2)
    prog = ConicProgram()
    prog.add_variable("w_re", 2)
    prog.add_variable("w_im", 2)
    embed_quadratic(prog, "w_re", "w_im", 2, 1, np.diag([1.0, 2.0]), rhs_const=1.0, name="q")
    prog.set_objective({"w_re": np.array([-1.0, -1.0])})
    out = solve_conic(prog)
    assert out.status == "optimal"
    assert -out.objective == pytest.approx(math.sqrt(1.5), rel=1e-7)
    with pytest.raises(ValueError):
        embed_quadratic(prog, "w_re", "w_im", 2, 1, np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_unused_variable_is_an_error():
    prog = ball_program([0.0, 0.0], 1.0, [1.0, 0.0])
    prog.add_variable("idle", 3)
    with pytest.raises(ValueError, match="idle"):
        solve_conic(prog)


def test_duplicate_names_and_sizes_are_checked():
    prog = ConicProgram()
    prog.add_variable("x", 2)
    with pytest.raises(ValueError):
        prog.add_variable("x", 2)
    with pytest.raises(ValueError):
        prog.add_inequality({"x": np.ones((1, 3))}, 0.0)
    with pytest.raises(ValueError):
        prog.add_inequality({"y": np.ones((1, 2))}, 0.0)


def test_dump_names_everything():
    prog = ball_program([0.0, 0.0], 1.0, [1.0, 0.0])
    text = prog.dump()
    assert "ball" in text and "x" in text
    assert prog.variable_size("x") == 2


def test_copy_is_independent():
    prog = ball_program([0.0, 0.0], 1.0, [1.0, 0.0])
    clone = prog.copy()
    clone.add_inequality({"x": np.array([[-1.0, 0.0]])}, 0.5, name="cap")
    base = solve_conic(prog)
    capped = solve_conic(clone)
    assert base.objective == pytest.approx(-1.0, abs=1e-7)
    assert capped.objective == pytest.approx(-0.5, abs=1e-6)


def test_infeasible_fixtures_produce_valid_certificates():
    for build in infeasible_fixtures():
        prog = build()
        sizes = {name: prog.variable_size(name) for name in ("x",)}
        prog.set_objective({"x": np.zeros(sizes["x"])})
        out = solve_conic(prog)
        assert out.status == "primal_infeasible"
        cert = verify_infeasibility_certificate(out)
        assert cert["valid"]
        # Farkas witness: A^T z vanishes while b.z is strictly negative
        assert cert["atz_inf"] <= 1e-6
        assert cert["b_dot_z"] < 0.0


def test_outer_approximation_tightens_a_square():
    # min t with u >= 2 and u^2 <= t converges to t = 4 by cutting planes
    prog = ConicProgram()
    prog.add_variable("u", 1)
    prog.add_variable("t", 1)
    prog.add_inequality({"u": np.array([[-1.0]])}, -2.0, name="lb")
    prog.set_objective({"t": np.array([1.0])})
    con = ScalarConvexConstraint(
        phi=lambda x: x * x,
        phi_deriv=lambda x: 2.0 * x,
        arg=("u", 0),
        bound=("t", 0),
        initial_points=(0.0, 5.0),
    )
    out = outer_approx_solve(prog, [con], cut_tolerance=1e-8)
    assert out.status == "optimal"
    assert out.objective == pytest.approx(4.0, rel=1e-6)
    assert out.oa_rounds >= 1
    assert out.max_scalar_violation <= 1e-8


def test_solve_is_deterministic():
    runs = [solve_conic(ball_program([0.2, 0.7], 1.3, [3.0, -1.0])) for _ in range(2)]
    assert runs[0].objective == runs[1].objective
    np.testing.assert_array_equal(runs[0].primal["x"], runs[1].primal["x"])
