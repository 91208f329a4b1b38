"""Independent reference computations for the acceptance checks.

Nothing in this module touches the conic machinery or the beamforming
solvers: scalar networks are handled in closed form, two-cell scalar
networks by exhaustive power grids, and the cone-program suite by a
brute-force boundary sweep. These are the values the optimized code has to
reproduce.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

__all__ = [
    "scalar_qos",
    "scalar_fpo",
    "scalar_feasible_levels",
    "grid_fpo",
    "ideal_sinr",
    "SocpInstance",
    "socp_suite",
    "brute_force_socp",
    "infeasible_fixtures",
]


# -- single-cell single-user single-antenna closed forms --------------------
#
# With linear distortion (slopes c1 = kappa1/100, c3 = kappa3/100) and
# transmit power p, the achieved SINR is g p / (g d p + sigma2) where
# g = |h|^2 and d = c1^2 + c3^2: both distortion terms are proportional to
# the received signal power. Everything below follows by solving for p.


def scalar_qos(gain, sigma2, q, kappa1, kappa3, delta, target):
    """(feasible, p_star, beta_star) for one user with SINR target s.

    p_star solves SINR(p) = s, beta_star = p_star (1 + delta c1^2) / q.
    Infeasible (at any power) iff s * d >= 1.
    """
    c1 = kappa1 / 100.0
    c3 = kappa3 / 100.0
    d = c1 * c1 + c3 * c3
    if target == 0.0:
        return True, 0.0, 0.0
    if gain <= 0.0 or target * d >= 1.0:
        return False, math.inf, math.inf
    p = target * sigma2 / (gain * (1.0 - target * d))
    beta = p * (1.0 + delta * c1 * c1) / q
    return True, p, beta


def scalar_fpo(gain, sigma2, q, kappa1, kappa3, delta):
    """Best log2(1 + SINR) for one user: spend the whole admissible power.

    The budget constraint p (1 + delta c1^2) <= q caps p, and SINR is
    increasing in p for linear distortion.
    """
    c1 = kappa1 / 100.0
    c3 = kappa3 / 100.0
    d = c1 * c1 + c3 * c3
    p_max = q / (1.0 + delta * c1 * c1)
    s = gain * p_max / (gain * d * p_max + sigma2)
    return math.log2(1.0 + s)


def scalar_feasible_levels(f_grid, gain, sigma2, q, kappa1, kappa3, delta):
    """Vectorized feasibility of rate levels f (max-min sense, one user)."""
    f = np.asarray(f_grid, dtype=float)
    c1 = kappa1 / 100.0
    c3 = kappa3 / 100.0
    d = c1 * c1 + c3 * c3
    s = np.exp2(f) - 1.0
    reachable = s * d < 1.0
    p = np.where(reachable, s * sigma2 / (gain * np.maximum(1.0 - s * d, 1e-300)), np.inf)
    beta = p * (1.0 + delta * c1 * c1) / q
    return reachable & (beta <= 1.0)


# -- two-cell scalar-channel exhaustive grid --------------------------------


def _admissible_power(q, delta, model):
    """Largest p with p + delta * eta(sqrt(p))^2 <= q (scalar antenna)."""
    if delta == 0.0 or model.eta_is_zero:
        return q

    def excess(p):
        return p + delta * float(model.eta(math.sqrt(p))) ** 2 - q

    # excess(0) = -q < 0 and excess(q) >= 0, so the root lives in [0, q]
    return float(optimize.brentq(excess, 0.0, q, xtol=1e-14 * q, rtol=1e-15))


def grid_fpo(scenario, model, a=0.0, alpha=None, n_grid=2000):
    """Exhaustive max-min value for 2 cells, 1 user and 1 antenna each.

    Scans the full (p_1, p_2) power box on an n_grid x n_grid lattice and
    maximizes min_i (g(SINR_i) - a_i) / alpha_i, with rate as g. Only the
    scalar impairment expressions are used, nothing from the solver path.
    """
    assert scenario.n_cells == 2 and scenario.users_per_cell == 1 and scenario.n_tx == 1
    G = np.abs(scenario.channels[:, :, 0, 0]) ** 2  # G[m, i]
    sigma2 = scenario.noise_power
    a_arr = np.broadcast_to(np.asarray(a, dtype=float), (2,))
    if alpha is None:
        alpha = 0.5
    al = np.broadcast_to(np.asarray(alpha, dtype=float), (2,))
    p_caps = [
        _admissible_power(scenario.cell_constraints(i)[0].q, scenario.delta, model)
        for i in range(2)
    ]
    p1 = np.linspace(0.0, p_caps[0], n_grid)[:, None]
    p2 = np.linspace(0.0, p_caps[1], n_grid)[None, :]
    eta1 = np.asarray(model.eta(np.sqrt(p1)), dtype=float) ** 2
    eta2 = np.asarray(model.eta(np.sqrt(p2)), dtype=float) ** 2

    def user_f(i):
        other = 1 - i
        ps = (p1, p2)
        etas = (eta1, eta2)
        signal = G[i, i] * ps[i]
        received = G[0, i] * p1 + G[1, i] * p2
        den = (
            G[other, i] * ps[other]
            + G[0, i] * eta1
            + G[1, i] * eta2
            + sigma2
            + np.asarray(model.nu(np.sqrt(received)), dtype=float) ** 2
        )
        rate = np.log2(1.0 + signal / den)
        return (rate - a_arr[i]) / al[i]

    value = np.minimum(user_f(0), user_f(1))
    return float(value.max())


# -- classical SINR without impairments (independent of metrics) ------------


def ideal_sinr(scenario, Ws, i, j):
    h_own = np.asarray(scenario.channel(i, i, j))
    sig = abs(np.vdot(h_own, Ws[i][:, j])) ** 2
    interference = 0.0
    for m in range(scenario.n_cells):
        h = np.asarray(scenario.channel(m, i, j))
        for l in range(scenario.users_per_cell):
            if m == i and l == j:
                continue
            interference += abs(np.vdot(h, Ws[m][:, l])) ** 2
    return sig / (interference + scenario.noise_power)


# -- brute-forced cone-program suite ----------------------------------------


@dataclass(frozen=True)
class SocpInstance:
    """min c.x over 2-d second-order cone constraints.

    socs: (A, b, cvec, e) meaning ||A x + b|| <= cvec . x + e.  quads:
    (A, rho) meaning ||A x||^2 <= rho (these exercise the rotated-cone
    path).  anchor is strictly feasible, and one soc is the ball
    ||x - anchor|| <= radius, so the feasible set is compact, convex and
    star-shaped around the anchor.
    """

    objective: np.ndarray
    socs: tuple
    quads: tuple
    anchor: np.ndarray
    radius: float

    def feasible(self, X):
        """Vectorized membership for points X of shape (2, P)."""
        X = np.atleast_2d(X)
        if X.shape[0] != 2:
            X = X.T
        ok = np.ones(X.shape[1], dtype=bool)
        for A, b, cvec, e in self.socs:
            lhs = np.linalg.norm(A @ X + b[:, None], axis=0)
            ok &= lhs <= cvec @ X + e
        for A, rho in self.quads:
            ok &= np.sum((A @ X) ** 2, axis=0) <= rho
        return ok


def _draw_instance(rng) -> SocpInstance:
    anchor = rng.normal(size=2)
    radius = rng.uniform(1.5, 3.0)
    socs = [(np.eye(2), -anchor.copy(), np.zeros(2), radius)]
    for _ in range(rng.integers(2, 5)):
        rows = int(rng.integers(1, 4))
        A = rng.normal(size=(rows, 2))
        b = rng.normal(size=rows)
        cvec = 0.3 * rng.normal(size=2)
        margin = rng.uniform(0.2, 1.0)
        e = float(np.linalg.norm(A @ anchor + b) - cvec @ anchor + margin)
        socs.append((A, b, cvec, e))
    quads = []
    if rng.uniform() < 0.5:
        A = rng.normal(size=(2, 2))
        rho = float(np.sum((A @ anchor) ** 2) + rng.uniform(0.5, 2.0))
        quads.append((A, rho))
    obj = rng.normal(size=2)
    obj /= np.linalg.norm(obj)
    return SocpInstance(
        objective=obj,
        socs=tuple(socs),
        quads=tuple(quads),
        anchor=anchor,
        radius=radius,
    )


def socp_suite(count: int = 20, seed: int = 20240817):
    """Deterministic feasible instances; degenerate ones (tiny or near-zero
    optimum, which would make a relative comparison meaningless) are
    redrawn using a coarse sweep as the filter."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        inst = _draw_instance(rng)
        rough = _sweep_stage(inst, 0.0, 2.0 * math.pi, 720)[1]
        if abs(rough) >= 0.05:
            out.append(inst)
    return out


def _sweep_stage(inst: SocpInstance, lo: float, hi: float, count: int, bisect_iters: int = 60):
    phis = np.linspace(lo, hi, count, endpoint=False) if hi - lo >= 2.0 * math.pi else np.linspace(lo, hi, count)
    U = np.stack([np.cos(phis), np.sin(phis)])
    t_lo = np.zeros(count)
    t_hi = np.full(count, inst.radius + 1.0)
    for _ in range(bisect_iters):
        mid = 0.5 * (t_lo + t_hi)
        pts = inst.anchor[:, None] + mid * U
        good = inst.feasible(pts)
        t_lo = np.where(good, mid, t_lo)
        t_hi = np.where(good, t_hi, mid)
    boundary = inst.anchor[:, None] + t_lo * U
    vals = inst.objective @ boundary
    return phis, float(vals.min()), vals, boundary


def brute_force_socp(inst: SocpInstance, n_angles: int = 30000) -> float:
    """Reference optimum by radial boundary sweep.

    The objective is linear and the feasible set compact and convex, so the
    optimum sits on the boundary, which the anchor sees at exactly one
    radius per direction (found by bisection). Every coarse local minimum
    near the best value is refined by three zoom stages, which keeps basin
    selection honest even when two boundary kinks compete.
    """
    phis, best, vals, _ = _sweep_stage(inst, 0.0, 2.0 * math.pi, n_angles)
    spacing = 2.0 * math.pi / n_angles
    ext = np.concatenate([vals[-1:], vals, vals[:1]])
    local_min = (ext[1:-1] <= ext[:-2]) & (ext[1:-1] <= ext[2:])
    candidates = np.where(local_min & (vals <= best + 0.05))[0]
    order = np.argsort(vals[candidates])
    candidates = candidates[order][:40]
    overall = best
    for idx in candidates:
        centre = phis[idx]
        width = 10.0 * spacing
        for _ in range(3):
            _, stage_best, stage_vals, _ = _sweep_stage(inst, centre - width, centre + width, 2001)
            overall = min(overall, stage_best)
            stage_phis = np.linspace(centre - width, centre + width, 2001)
            centre = float(stage_phis[int(np.argmin(stage_vals))])
            width = 10.0 * (stage_phis[1] - stage_phis[0])
    return overall


def infeasible_fixtures():
    """Constructed primal-infeasible cone programs, as build callbacks.

    Each entry returns a fresh ConicProgram; all three are infeasible by
    inspection (contradictory halfspaces, a ball violating a halfspace, an
    equality the ball cannot reach).
    """
    from .conic import ConicProgram

    def contradictory_bounds():
        prog = ConicProgram()
        prog.add_variable("x", 1)
        prog.add_inequality({"x": np.array([[1.0]])}, -1.0, name="upper")
        prog.add_inequality({"x": np.array([[-1.0]])}, -1.0, name="lower")
        return prog

    def ball_vs_halfspace():
        prog = ConicProgram()
        prog.add_variable("x", 2)
        prog.add_soc({"x": np.eye(2)}, np.zeros(2), {}, 1.0, name="ball")
        prog.add_inequality({"x": np.array([[-1.0, 0.0]])}, -5.0, name="far")
        return prog

    def unreachable_equality():
        prog = ConicProgram()
        prog.add_variable("x", 2)
        prog.add_soc({"x": np.eye(2)}, np.zeros(2), {}, 1.0, name="ball")
        prog.add_equality({"x": np.array([[1.0, 1.0]])}, 10.0, name="sum")
        return prog

    return (contradictory_bounds, ball_vs_halfspace, unreachable_equality)
