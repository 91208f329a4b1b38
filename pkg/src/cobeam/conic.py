"""Second-order cone program representation and solution.

A ConicProgram holds named real variable blocks, a linear objective and a
list of constraints (linear equalities/inequalities, second-order cones,
rotated cones). compile() lowers it to the standard embedding

    minimize q'x   subject to   A x + s = b,  s in K,

which is handed to the Clarabel interior-point solver. Nonlinear convex
scalar constraints phi(u) <= t are handled by outer_approx_solve, which
tightens a supporting-hyperplane relaxation until the worst violation falls
below cut_tolerance.

Statuses reported by solve_conic: "optimal", "primal_infeasible" (with a
Farkas certificate in SolveOutcome.certificate), "dual_infeasible",
"inaccurate", "iteration_limit".
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import sparse

import clarabel

__all__ = [
    "ConicProgram",
    "SolveOutcome",
    "ScalarConvexConstraint",
    "solve_conic",
    "outer_approx_solve",
    "embed_quadratic",
    "verify_infeasibility_certificate",
]

_SQ2 = math.sqrt(2.0)

_STATUS_MAP = {
    "Solved": "optimal",
    "PrimalInfeasible": "primal_infeasible",
    "DualInfeasible": "dual_infeasible",
    "AlmostSolved": "inaccurate",
    "AlmostPrimalInfeasible": "inaccurate",
    "AlmostDualInfeasible": "inaccurate",
    "MaxIterations": "iteration_limit",
    "MaxTime": "iteration_limit",
}


@dataclass
class _Constraint:
    # semantic: expr(x) = sum_b coeffs[b] @ x[b] + const must lie in the cone
    # 'zero' -> expr == 0; 'nonneg' -> expr >= 0 componentwise;
    # 'soc' -> expr = [t; u] with ||u|| <= t;
    # 'rsoc' -> expr = [u; v; w] with ||u||^2 <= 2 v w, v, w >= 0.
    kind: str
    name: str
    coeffs: dict
    const: np.ndarray


def _as_matrix(value, size: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != size:
        raise ValueError(f"coefficient block has shape {arr.shape}, expected (*, {size})")
    return arr


class ConicProgram:
    """Conic program over named real variable blocks."""

    def __init__(self):
        self._sizes: dict[str, int] = {}
        self._objective: dict[str, np.ndarray] = {}
        self._constraints: list[_Constraint] = []
        self._auto = 0

    # -- construction ------------------------------------------------------

    def add_variable(self, name: str, size: int = 1) -> str:
        if name in self._sizes:
            raise ValueError(f"variable {name!r} already declared")
        if size < 1:
            raise ValueError("variable size must be at least 1")
        self._sizes[name] = int(size)
        return name

    def variable_size(self, name: str) -> int:
        return self._sizes[name]

    @property
    def variable_names(self):
        return tuple(self._sizes)

    @property
    def constraint_names(self):
        return tuple(c.name for c in self._constraints)

    def set_objective(self, coeffs: dict):
        """Minimize sum over blocks of coeffs[name] . x[name]."""
        self._objective = {
            name: _as_matrix(c, self._size_of(name)).ravel() for name, c in coeffs.items()
        }

    def _size_of(self, name: str) -> int:
        if name not in self._sizes:
            raise ValueError(f"unknown variable {name!r}")
        return self._sizes[name]

    def _name(self, name: Optional[str], stem: str) -> str:
        if name is None:
            name = f"{stem}_{self._auto}"
            self._auto += 1
        if any(c.name == name for c in self._constraints):
            raise ValueError(f"constraint name {name!r} already used")
        return name

    def _expr(self, coeffs: dict, const, rows: Optional[int] = None):
        mats = {name: _as_matrix(c, self._size_of(name)) for name, c in coeffs.items()}
        dims = {m.shape[0] for m in mats.values()}
        if len(dims) > 1:
            raise ValueError(f"inconsistent row counts across blocks: {sorted(dims)}")
        carr = np.asarray(const, dtype=float)
        if dims:
            dim = dims.pop()
        elif carr.ndim >= 1:
            dim = carr.shape[0]
        elif rows is not None:
            dim = rows
        else:
            dim = 1
        cvec = np.broadcast_to(np.atleast_1d(carr), (dim,)).copy() if dim else np.zeros(0)
        return mats, cvec, dim

    def add_equality(self, coeffs: dict, rhs=0.0, name: Optional[str] = None) -> str:
        """sum_b coeffs[b] @ x[b] == rhs (vector-valued allowed)."""
        mats, rvec, dim = self._expr(coeffs, rhs)
        if dim == 0:
            raise ValueError("empty equality")
        self._constraints.append(_Constraint("zero", self._name(name, "eq"), mats, -rvec))
        return self._constraints[-1].name

    def add_inequality(self, coeffs: dict, rhs=0.0, name: Optional[str] = None) -> str:
        """sum_b coeffs[b] @ x[b] <= rhs  componentwise."""
        mats, rvec, dim = self._expr(coeffs, rhs)
        if dim == 0:
            raise ValueError("empty inequality")
        flipped = {k: -m for k, m in mats.items()}
        self._constraints.append(_Constraint("nonneg", self._name(name, "ineq"), flipped, rvec))
        return self._constraints[-1].name

    def add_soc(
        self,
        norm_coeffs: dict,
        norm_const,
        rhs_coeffs: dict,
        rhs_const: float = 0.0,
        name: Optional[str] = None,
    ) -> str:
        """|| norm_expr || <= rhs_expr, rhs_expr scalar.

        A degenerate empty norm part turns into the inequality rhs_expr >= 0.
        """
        rhs_mats, rhs_vec, rdim = self._expr(rhs_coeffs, rhs_const, rows=1)
        if rdim != 1:
            raise ValueError("cone bound must be scalar")
        norm_mats, norm_vec, ndim = self._expr(norm_coeffs, norm_const, rows=0)
        cname = self._name(name, "soc")
        if ndim == 0:
            # ||()|| <= rhs collapses to rhs_expr >= 0
            self._constraints.append(_Constraint("nonneg", cname, rhs_mats, rhs_vec))
            return cname
        coeffs: dict[str, np.ndarray] = {}
        for key in set(rhs_mats) | set(norm_mats):
            size = self._size_of(key)
            top = rhs_mats.get(key, np.zeros((1, size)))
            bottom = norm_mats.get(key, np.zeros((ndim, size)))
            coeffs[key] = np.vstack([top, bottom])
        const = np.concatenate([rhs_vec, norm_vec])
        self._constraints.append(_Constraint("soc", cname, coeffs, const))
        return cname

    def add_rotated_cone(
        self,
        sq_coeffs: dict,
        sq_const,
        v_coeffs: dict,
        v_const: float,
        w_coeffs: dict,
        w_const: float,
        name: Optional[str] = None,
    ) -> str:
        """|| sq_expr ||^2 <= 2 * v_expr * w_expr with v_expr, w_expr >= 0."""
        sq_mats, sq_vec, sdim = self._expr(sq_coeffs, sq_const, rows=0)
        v_mats, v_vec, vdim = self._expr(v_coeffs, v_const, rows=1)
        w_mats, w_vec, wdim = self._expr(w_coeffs, w_const, rows=1)
        if vdim != 1 or wdim != 1:
            raise ValueError("rotated-cone scale terms must be scalar")
        coeffs: dict[str, np.ndarray] = {}
        for key in set(sq_mats) | set(v_mats) | set(w_mats):
            size = self._size_of(key)
            coeffs[key] = np.vstack(
                [
                    sq_mats.get(key, np.zeros((sdim, size))),
                    v_mats.get(key, np.zeros((1, size))),
                    w_mats.get(key, np.zeros((1, size))),
                ]
            )
        const = np.concatenate([sq_vec, v_vec, w_vec])
        cname = self._name(name, "rsoc")
        self._constraints.append(_Constraint("rsoc", cname, coeffs, const))
        return cname

    def copy(self) -> "ConicProgram":
        out = ConicProgram()
        out._sizes = dict(self._sizes)
        out._objective = {k: v.copy() for k, v in self._objective.items()}
        out._constraints = [
            _Constraint(c.kind, c.name, {k: m.copy() for k, m in c.coeffs.items()}, c.const.copy())
            for c in self._constraints
        ]
        out._auto = self._auto
        return out

    # -- lowering ----------------------------------------------------------

    def _soc_rows(self, con: _Constraint):
        # rows of the expression that must land in a plain SOC, rotated cones
        # rewritten via ||u||^2 <= 2vw  <=>  ||[u; (v-w)/sqrt2]|| <= (v+w)/sqrt2
        if con.kind == "soc":
            return con.coeffs, con.const
        dim = con.const.size
        T = np.zeros((dim, dim))
        T[0, dim - 2] = T[0, dim - 1] = 1.0 / _SQ2
        for r in range(dim - 2):
            T[1 + r, r] = 1.0
        T[dim - 1, dim - 2] = 1.0 / _SQ2
        T[dim - 1, dim - 1] = -1.0 / _SQ2
        return {k: T @ m for k, m in con.coeffs.items()}, T @ con.const

    def compile(self):
        if not self._sizes:
            raise ValueError("program has no variables")
        offsets: dict[str, int] = {}
        n = 0
        for vname, size in self._sizes.items():
            offsets[vname] = n
            n += size
        used = set(self._objective)
        for con in self._constraints:
            used.update(con.coeffs)
        unused = set(self._sizes) - used
        if unused:
            raise ValueError(f"variables appear in no constraint or objective: {sorted(unused)}")

        q = np.zeros(n)
        for vname, vec in self._objective.items():
            q[offsets[vname] : offsets[vname] + self._sizes[vname]] = vec

        # rows grouped by cone family: equalities, inequalities, then cones
        order = (
            [c for c in self._constraints if c.kind == "zero"]
            + [c for c in self._constraints if c.kind == "nonneg"]
            + [c for c in self._constraints if c.kind in ("soc", "rsoc")]
        )
        rows_A, cols_A, vals_A = [], [], []
        b_parts = []
        slices: dict[str, slice] = {}
        cones = []
        row = 0
        n_zero = n_nonneg = 0
        for con in order:
            if con.kind in ("soc", "rsoc"):
                coeffs, const = self._soc_rows(con)
            else:
                coeffs, const = con.coeffs, con.const
            dim = const.size
            for vname, mat in coeffs.items():
                r, c = np.nonzero(mat)
                rows_A.append(r + row)
                cols_A.append(c + offsets[vname])
                vals_A.append(-mat[r, c])  # s = b - A x = expr  =>  A = -E
            b_parts.append(const)
            slices[con.name] = slice(row, row + dim)
            row += dim
            if con.kind == "zero":
                n_zero += dim
            elif con.kind == "nonneg":
                n_nonneg += dim
            else:
                cones.append(clarabel.SecondOrderConeT(dim))
        cone_list = []
        if n_zero:
            cone_list.append(clarabel.ZeroConeT(n_zero))
        if n_nonneg:
            cone_list.append(clarabel.NonnegativeConeT(n_nonneg))
        cone_list.extend(cones)

        if rows_A:
            A = sparse.csc_matrix(
                (np.concatenate(vals_A), (np.concatenate(rows_A), np.concatenate(cols_A))),
                shape=(row, n),
            )
        else:
            A = sparse.csc_matrix((row, n))
        b = np.concatenate(b_parts) if b_parts else np.zeros(0)
        kinds = {c.name: c.kind for c in order}
        return _Compiled(A, b, q, cone_list, offsets, dict(self._sizes), slices, kinds)

    # -- debugging ---------------------------------------------------------

    def dump(self) -> str:
        """Plain-text rendering, one constraint per line, dense coefficients."""

        def row_str(coeffs, const, r):
            parts = []
            for vname in self._sizes:
                mat = coeffs.get(vname)
                if mat is None:
                    continue
                for idx, val in enumerate(mat[r]):
                    if val != 0.0:
                        parts.append(f"{val:+.6g}*{vname}[{idx}]")
            if const[r] != 0.0 or not parts:
                parts.append(f"{const[r]:+.6g}")
            return " ".join(parts)

        lines = []
        obj = {k: v.reshape(1, -1) for k, v in self._objective.items()}
        if obj:
            lines.append("minimize " + row_str(obj, np.zeros(1), 0))
        for vname, size in self._sizes.items():
            lines.append(f"var {vname}[{size}]")
        for con in self._constraints:
            dim = con.const.size
            rows = [row_str(con.coeffs, con.const, r) for r in range(dim)]
            if con.kind == "zero":
                body = " ; ".join(f"{r} == 0" for r in rows)
            elif con.kind == "nonneg":
                body = " ; ".join(f"{r} >= 0" for r in rows)
            elif con.kind == "soc":
                body = f"||{' ; '.join(rows[1:])}|| <= {rows[0]}"
            else:
                body = (
                    f"||{' ; '.join(rows[:-2])}||^2 <= 2*({rows[-2]})*({rows[-1]})"
                )
            lines.append(f"{con.kind} {con.name}: {body}")
        return "\n".join(lines)


@dataclass
class _Compiled:
    A: sparse.csc_matrix
    b: np.ndarray
    q: np.ndarray
    cones: list
    var_offsets: dict
    var_sizes: dict
    con_slices: dict
    con_kinds: dict


@dataclass
class SolveOutcome:
    """Result of one conic solve.

    primal/duals are keyed by variable/constraint name. certificate is only
    set for primal_infeasible outcomes and holds the Farkas ray (same keying
    as duals). oa_rounds / max_scalar_violation are filled in by
    outer_approx_solve.
    """

    status: str
    objective: Optional[float]
    primal: dict
    duals: dict
    iterations: int
    solve_time: float
    primal_residual: float
    dual_residual: float
    certificate: Optional[dict] = None
    oa_rounds: int = 0
    max_scalar_violation: float = 0.0
    compiled: Optional[_Compiled] = None
    raw_x: Optional[np.ndarray] = None
    raw_z: Optional[np.ndarray] = None

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _clarabel_solve(compiled: _Compiled, feas_tol: float, gap_tol: float, max_iter: int):
    n = compiled.q.size
    P = sparse.csc_matrix((n, n))
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_feas = feas_tol
    settings.tol_gap_abs = gap_tol
    settings.tol_gap_rel = gap_tol
    settings.max_iter = max_iter
    solver = clarabel.DefaultSolver(P, compiled.q, compiled.A, compiled.b, compiled.cones, settings)
    sol = solver.solve()
    return sol, _STATUS_MAP.get(str(sol.status), "inaccurate")


def solve_conic(program: ConicProgram, tolerance: float = 1e-8, max_iter: int = 200) -> SolveOutcome:
    """Compile and solve. tolerance feeds the feasibility and gap targets.

    The duality-gap targets are floored at 1e-8: tighter gaps routinely
    stall in double precision even when the iterate is essentially exact.
    If the endgame still stalls short of the target (interior-point
    iterations can overshoot into a worse iterate right at convergence),
    one retry at a 100x relaxed target is attempted and kept when it
    solves cleanly; the reported residuals always describe the returned
    iterate.
    """
    if not (0.0 < tolerance <= 1e-2):
        raise ValueError("tolerance must lie in (0, 1e-2]")
    compiled = program.compile()
    sol, status = _clarabel_solve(
        compiled, tolerance, max(tolerance, 1e-8), max_iter
    )
    if status == "inaccurate":
        relaxed = min(max(100.0 * tolerance, 1e-7), 1e-4)
        sol2, status2 = _clarabel_solve(compiled, relaxed, relaxed, max_iter)
        if status2 == "optimal":
            sol, status = sol2, status2
    x = np.asarray(sol.x, dtype=float)
    z = np.asarray(sol.z, dtype=float)
    primal = {
        name: x[off : off + compiled.var_sizes[name]].copy()
        for name, off in compiled.var_offsets.items()
    }
    duals = {name: z[sl].copy() for name, sl in compiled.con_slices.items()}
    certificate = None
    if status == "primal_infeasible":
        certificate = {name: z[sl].copy() for name, sl in compiled.con_slices.items()}
    objective = float(sol.obj_val) if status == "optimal" else None
    return SolveOutcome(
        status=status,
        objective=objective,
        primal=primal,
        duals=duals,
        iterations=int(sol.iterations),
        solve_time=float(sol.solve_time),
        primal_residual=float(sol.r_prim),
        dual_residual=float(sol.r_dual),
        certificate=certificate,
        compiled=compiled,
        raw_x=x,
        raw_z=z,
    )


def verify_infeasibility_certificate(outcome: SolveOutcome, tol: float = 1e-6) -> dict:
    """Check the Farkas ray of a primal_infeasible outcome.

    Returns the residuals: ||A' z||_inf (should be ~0 after normalization),
    b . z (must be < 0) and the worst dual-cone violation of z.
    """
    if outcome.certificate is None or outcome.compiled is None:
        raise ValueError("outcome carries no infeasibility certificate")
    compiled = outcome.compiled
    z = outcome.raw_z
    scale = float(np.abs(z).max())
    if scale == 0.0:
        raise ValueError("certificate ray is zero")
    zn = z / scale
    atz = float(np.abs(compiled.A.T @ zn).max())
    bz = float(compiled.b @ zn)
    cone_violation = 0.0
    for name, sl in compiled.con_slices.items():
        kind = compiled.con_kinds[name]
        piece = zn[sl]
        if kind == "zero":
            continue  # dual cone is all of R^dim
        if kind == "nonneg":
            cone_violation = max(cone_violation, float(max(0.0, -piece.min(initial=0.0))))
        else:  # soc rows (rotated ones were lowered to soc); self-dual
            cone_violation = max(
                cone_violation, float(np.linalg.norm(piece[1:]) - piece[0])
            )
    return {
        "atz_inf": atz,
        "b_dot_z": bz,
        "cone_violation": cone_violation,
        "valid": atz <= tol and bz < 0.0 and cone_violation <= tol,
    }


@dataclass(frozen=True)
class ScalarConvexConstraint:
    """phi(u) <= t for scalar entries u, t of variable blocks.

    phi must be convex and nondecreasing on u >= 0 with phi(0) >= 0; u is
    expected to be bounded below by a norm elsewhere in the program, so
    supporting hyperplanes of phi stay valid cuts. initial_points seeds the
    relaxation (0 plus a generous upper bound on u is the usual pair).
    """

    phi: Callable[[float], float]
    phi_deriv: Callable[[float], float]
    arg: tuple
    bound: tuple
    initial_points: tuple = (0.0,)


def _entry_row(program: ConicProgram, ref: tuple, value: float) -> np.ndarray:
    block, index = ref
    row = np.zeros(program.variable_size(block))
    row[index] = value
    return row


def _add_cut(program: ConicProgram, sc: ScalarConvexConstraint, u0: float, tag: str):
    # phi(u0) + phi'(u0) (u - u0) <= t
    slope = float(sc.phi_deriv(u0))
    offset = float(sc.phi(u0)) - slope * u0
    coeffs: dict[str, np.ndarray] = {}
    arg_block, _ = sc.arg
    bound_block, _ = sc.bound
    coeffs[arg_block] = _entry_row(program, sc.arg, slope)
    brow = _entry_row(program, sc.bound, -1.0)
    if bound_block in coeffs:
        coeffs[bound_block] = coeffs[bound_block] + brow
    else:
        coeffs[bound_block] = brow
    program.add_inequality(coeffs, rhs=-offset, name=tag)


def trustworthy_inaccurate(outcome: SolveOutcome, tolerance: float) -> bool:
    """Whether a reduced-accuracy outcome still carries a usable iterate.

    Interior-point gap targets occasionally stall a hair short while the
    iterate itself satisfies the constraints to near machine precision;
    such outcomes are safe to keep working with (cuts, feasibility
    decisions) even though the reported status is not "optimal".
    """
    return (
        outcome.status == "inaccurate"
        and bool(outcome.primal)
        and max(outcome.primal_residual, outcome.dual_residual) <= 1e3 * tolerance
    )


def outer_approx_solve(
    program: ConicProgram,
    scalar_constraints,
    cut_tolerance: float = 1e-6,
    max_rounds: int = 50,
    tolerance: float = 1e-8,
) -> SolveOutcome:
    """Solve program subject to extra scalar convex constraints phi(u) <= t.

    Supporting-hyperplane cuts are added at the current u until the largest
    violation phi(u*) - t* drops below cut_tolerance. Infeasibility of the
    relaxation proves infeasibility of the true problem and is returned
    as is; running out of rounds downgrades the status to "inaccurate".
    """
    if cut_tolerance <= 0 or max_rounds < 1:
        raise ValueError("cut_tolerance must be positive and max_rounds at least 1")
    work = program.copy()
    counter = 0
    for k, sc in enumerate(scalar_constraints):
        for u0 in sc.initial_points:
            _add_cut(work, sc, float(u0), f"cut_{k}_init_{counter}")
            counter += 1
    rounds = 0
    while True:
        rounds += 1
        outcome = solve_conic(work, tolerance=tolerance)
        if outcome.status != "optimal" and not trustworthy_inaccurate(outcome, tolerance):
            outcome.oa_rounds = rounds
            return outcome
        worst = 0.0
        violated = []
        for k, sc in enumerate(scalar_constraints):
            u_star = float(outcome.primal[sc.arg[0]][sc.arg[1]])
            t_star = float(outcome.primal[sc.bound[0]][sc.bound[1]])
            gap = float(sc.phi(max(u_star, 0.0))) - t_star
            if gap > worst:
                worst = gap
            if gap > cut_tolerance:
                violated.append((k, sc, max(u_star, 0.0)))
        outcome.oa_rounds = rounds
        outcome.max_scalar_violation = worst
        if not violated:
            return outcome
        if rounds >= max_rounds:
            outcome.status = "inaccurate"
            return outcome
        for k, sc, u_star in violated:
            _add_cut(work, sc, u_star, f"cut_{k}_round_{rounds}_{counter}")
            counter += 1


def embed_quadratic(
    program: ConicProgram,
    w_re: str,
    w_im: str,
    n_rows: int,
    n_cols: int,
    Q: np.ndarray,
    diag_terms=(),
    rhs_coeffs: Optional[dict] = None,
    rhs_const: float = 0.0,
    name: Optional[str] = None,
    psd_tol: float = 1e-9,
) -> str:
    """Add tr(W^H Q W) + sum_l a_l y_l^2 <= rhs as a rotated cone.

    W is an n_rows x n_cols complex matrix stored column-major in the real
    blocks w_re / w_im. Q must be Hermitian PSD; it is factored as L L^H and
    the cone collects the rows of L^H W (real and imaginary parts) plus
    sqrt(a_l) * y_l for each (block, index, a_l) in diag_terms. rhs is linear:
    rhs_coeffs (block -> coefficient row) plus rhs_const.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=complex))
    if Q.shape != (n_rows, n_rows):
        raise ValueError(f"Q has shape {Q.shape}, expected ({n_rows}, {n_rows})")
    scale = max(1.0, float(np.abs(Q).max()))
    if np.abs(Q - Q.conj().T).max() > psd_tol * scale:
        raise ValueError("Q must be Hermitian")
    evals, evecs = np.linalg.eigh(Q)
    if evals.min() < -psd_tol * scale:
        raise ValueError(f"Q must be PSD (min eigenvalue {evals.min():.3e})")
    keep = evals > max(evals.max(), 0.0) * 1e-14
    if not np.any(keep):
        raise ValueError("Q is numerically zero; nothing to embed")
    L = evecs[:, keep] * np.sqrt(evals[keep])  # Q ~= L L^H
    rank = L.shape[1]

    size = n_rows * n_cols
    rows_re = []
    rows_im = []
    for j in range(n_cols):
        cols = slice(j * n_rows, (j + 1) * n_rows)
        for l in range(rank):
            a = L[:, l]  # row l of L^H is a^H
            re_re = np.zeros(size)
            re_im = np.zeros(size)
            im_re = np.zeros(size)
            im_im = np.zeros(size)
            re_re[cols] = a.real
            re_im[cols] = a.imag
            im_re[cols] = -a.imag
            im_im[cols] = a.real
            rows_re.append((re_re, re_im))
            rows_im.append((im_re, im_im))
    sq_re = np.vstack([r for r, _ in rows_re] + [r for r, _ in rows_im])
    sq_im = np.vstack([c for _, c in rows_re] + [c for _, c in rows_im])
    sq_coeffs = {w_re: sq_re, w_im: sq_im}
    extra_rows: dict[str, list] = {}
    n_extra = 0
    for block, index, a in diag_terms:
        if a < 0:
            raise ValueError("diagonal quadratic coefficients must be nonnegative")
        if a == 0.0:
            continue
        row = np.zeros(program.variable_size(block))
        row[index] = math.sqrt(a)
        extra_rows.setdefault(block, []).append((n_extra, row))
        n_extra += 1
    total_sq = sq_re.shape[0] + n_extra
    if n_extra:
        pad = np.zeros((n_extra, size))
        sq_coeffs[w_re] = np.vstack([sq_re, pad])
        sq_coeffs[w_im] = np.vstack([sq_im, pad])
        for block, entries in extra_rows.items():
            mat = np.zeros((total_sq, program.variable_size(block)))
            for pos, row in entries:
                mat[sq_re.shape[0] + pos] = row
            if block in sq_coeffs:
                sq_coeffs[block] = sq_coeffs[block] + mat
            else:
                sq_coeffs[block] = mat
    rhs_coeffs = rhs_coeffs or {}
    v_coeffs = {blockname: 0.5 * np.asarray(c, dtype=float) for blockname, c in rhs_coeffs.items()}
    return program.add_rotated_cone(
        sq_coeffs,
        np.zeros(total_sq),
        v_coeffs,
        0.5 * rhs_const,
        {},
        1.0,
        name=name,
    )
