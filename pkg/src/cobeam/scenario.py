"""System instances for the multicell downlink: channels, power constraints, drops.

Conventions used throughout the package:
  * powers are linear milliwatts, channel entries sqrt(mW) per unit symbol,
    so |h^H w|^2 is directly a received power in mW;
  * dB / dBm only ever appears at interface boundaries;
  * channels[m, i, j] is the vector channel from the array of cell m to user
    j of cell i (so channels[i, i, j] is the serving link).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "PowerConstraint",
    "Scenario",
    "DropConfig",
    "make_manual_scenario",
    "drop_users",
    "per_array_constraints",
    "per_antenna_constraints",
    "dbm_to_mw",
    "mw_to_dbm",
    "scale_power",
    "with_power_dbm",
]

# eigenvalue slack accepted when checking that a weighting matrix is PSD
PSD_TOL = 1e-9


def dbm_to_mw(dbm: float) -> float:
    return float(10.0 ** (float(dbm) / 10.0))


def mw_to_dbm(mw: float) -> float:
    if mw <= 0.0:
        raise ValueError("power must be positive to express in dBm")
    return float(10.0 * math.log10(mw))


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PowerConstraint:
    """One weighted transmit power constraint tr(W^H Q W) + delta*tr(Q C) <= q.

    Q is Hermitian PSD (n_tx x n_tx), q is the budget in mW.
    """

    Q: np.ndarray
    q: float

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=complex))
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError(f"constraint matrix must be square, got shape {Q.shape}")
        scale = max(1.0, float(np.abs(Q).max()))
        if np.abs(Q - Q.conj().T).max() > PSD_TOL * scale:
            raise ValueError("constraint matrix must be Hermitian")
        evals = np.linalg.eigvalsh(Q)
        if evals.min() < -PSD_TOL * scale:
            raise ValueError(f"constraint matrix must be PSD (min eigenvalue {evals.min():.3e})")
        if not (float(self.q) > 0.0 and math.isfinite(float(self.q))):
            raise ValueError(f"power budget must be positive and finite, got {self.q}")
        object.__setattr__(self, "Q", _freeze(Q))
        object.__setattr__(self, "q", float(self.q))


@dataclass(frozen=True)
class Scenario:
    """Immutable downlink instance: channels, noise floor, power constraints.

    power_constraints is a tuple (one entry per cell) of tuples of
    PowerConstraint; every cell needs at least one constraint and the
    constraint matrices of a cell must sum to something positive definite,
    otherwise transmit power could hide in an unconstrained subspace.
    delta toggles whether transmit distortion is counted against the budget.
    """

    channels: np.ndarray
    noise_power: float
    power_constraints: tuple
    delta: float = 1.0

    def __post_init__(self):
        ch = np.asarray(self.channels, dtype=complex)
        if ch.ndim != 4 or ch.shape[0] != ch.shape[1]:
            raise ValueError(
                "channels must have shape (n_cells, n_cells, users_per_cell, n_tx), "
                f"got {ch.shape}"
            )
        if not np.all(np.isfinite(ch)):
            raise ValueError("channels must be finite")
        n, _, _, n_tx = ch.shape
        if min(ch.shape[2], n_tx, n) < 1:
            raise ValueError("need at least one cell, one user per cell and one antenna")
        if not (float(self.noise_power) > 0.0 and math.isfinite(float(self.noise_power))):
            raise ValueError("noise power must be positive and finite")
        if float(self.delta) not in (0.0, 1.0):
            raise ValueError("delta must be 0 or 1")
        raw = tuple(tuple(cell) for cell in self.power_constraints)
        if len(raw) != n:
            raise ValueError(f"expected power constraints for {n} cells, got {len(raw)}")
        cells = []
        for i, cell in enumerate(raw):
            if len(cell) == 0:
                raise ValueError(f"cell {i} has no power constraint")
            built = []
            total = np.zeros((n_tx, n_tx), dtype=complex)
            for k, pc in enumerate(cell):
                if not isinstance(pc, PowerConstraint):
                    pc = PowerConstraint(*pc)
                if pc.Q.shape != (n_tx, n_tx):
                    raise ValueError(
                        f"constraint {k} of cell {i} has shape {pc.Q.shape}, "
                        f"expected ({n_tx}, {n_tx})"
                    )
                built.append(pc)
                total += pc.Q
            lam_min = float(np.linalg.eigvalsh(total).min())
            if lam_min <= PSD_TOL:
                raise ValueError(
                    f"summed constraint matrices of cell {i} are singular "
                    f"(min eigenvalue {lam_min:.3e}); power would be unbounded"
                )
            cells.append(tuple(built))
        pcs = tuple(cells)
        object.__setattr__(self, "channels", _freeze(ch))
        object.__setattr__(self, "noise_power", float(self.noise_power))
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "power_constraints", pcs)

    @property
    def n_cells(self) -> int:
        return self.channels.shape[0]

    @property
    def users_per_cell(self) -> int:
        return self.channels.shape[2]

    @property
    def n_tx(self) -> int:
        return self.channels.shape[3]

    def channel(self, m: int, i: int, j: int) -> np.ndarray:
        """Channel from the array of cell m to user j of cell i."""
        return self.channels[m, i, j]

    def cell_constraints(self, i: int):
        return self.power_constraints[i]


def per_array_constraints(power_dbm: float, n_cells: int, n_tx: int):
    """One total-power constraint per cell: Q = I, q = 10^(dBm/10) mW."""
    q = dbm_to_mw(power_dbm)
    one_cell = (PowerConstraint(np.eye(n_tx), q),)
    return tuple(one_cell for _ in range(n_cells))


def per_antenna_constraints(power_mw: float, n_cells: int, n_tx: int):
    """n_tx single-antenna selector constraints per cell, each with budget power_mw."""
    if power_mw <= 0:
        raise ValueError("per-antenna budget must be positive")
    cell = []
    for antenna in range(n_tx):
        Q = np.zeros((n_tx, n_tx))
        Q[antenna, antenna] = 1.0
        cell.append(PowerConstraint(Q, float(power_mw)))
    cell = tuple(cell)
    return tuple(cell for _ in range(n_cells))


def make_manual_scenario(channels, noise_power, power_constraints, delta=1.0) -> Scenario:
    """Build a Scenario from explicit arrays (fixtures, hand-built toy networks).

    channels may be (n_cells, n_cells, users_per_cell, n_tx) or, for scalar
    channels, (n_cells, n_cells, users_per_cell). power_constraints is a
    sequence per cell of PowerConstraint or (Q, q) pairs; scalar Q is accepted.
    """
    ch = np.asarray(channels, dtype=complex)
    if ch.ndim == 3:
        ch = ch[..., np.newaxis]
    cells = []
    for cell in power_constraints:
        built = []
        for pc in cell:
            if isinstance(pc, PowerConstraint):
                built.append(pc)
            else:
                Q, q = pc
                built.append(PowerConstraint(np.atleast_2d(np.asarray(Q, dtype=complex)), q))
        cells.append(tuple(built))
    return Scenario(ch, noise_power, tuple(cells), delta)


@dataclass(frozen=True)
class DropConfig:
    """Fixed parameters of the two-cell random drop generator.

    Geometry: square coverage area given by its diagonal, one base station in
    each of two opposite corners, each serving the users falling in its half
    (the diagonal band between the corners splits the square into two
    triangles). Antenna boresights point along the diagonal so every served
    user sits within +/- 45 degrees of boresight.
    """

    square_diagonal_m: float = 500.0
    min_bs_distance_m: float = 35.0
    pathloss_fixed_db: float = 128.1
    pathloss_slope_db: float = 37.6
    shadowing_std_db: float = 8.0
    penetration_loss_db: float = 20.0
    tx_gain_max_db: float = 14.0
    tx_gain_rolloff: float = 8.0
    rx_gain_db: float = 0.0
    noise_dbm: float = -127.0
    power_dbm: float = 18.2
    rng_seed: int = 0
    resample_cap: int = 10_000

    def __post_init__(self):
        if self.square_diagonal_m <= 0 or self.min_bs_distance_m <= 0:
            raise ValueError("geometry lengths must be positive")
        if self.min_bs_distance_m >= self.square_diagonal_m:
            raise ValueError("minimum distance must be smaller than the area diagonal")
        if self.resample_cap < 1:
            raise ValueError("resample cap must be at least 1")


def _antenna_gain_db(theta: float, config: DropConfig) -> float:
    # parabolic main lobe, clamped at the +/- 45 degree sector edge
    t = min(abs(theta), math.pi / 4.0)
    return config.tx_gain_max_db - config.tx_gain_rolloff * t * t


def drop_users(
    config: DropConfig,
    users_per_cell: int,
    n_tx: int,
    rng_seed=None,
    n_cells: int = 2,
    delta: float = 1.0,
) -> Scenario:
    """Draw one random user drop and return the resulting Scenario.

    User positions are uniform in each triangular half (rejection sampling,
    at least min_bs_distance_m from the serving array); each link gets
    independent log-normal shadowing and CN(0, I) small-scale fading. The
    draw order (all positions first, then per-link shadowing and fading in
    lexicographic link order) is fixed, so a given seed always produces the
    same Scenario.
    """
    if n_cells != 2:
        raise ValueError("the drop geometry is defined for exactly 2 cells")
    if users_per_cell < 1 or n_tx < 1:
        raise ValueError("users_per_cell and n_tx must be at least 1")
    seed = config.rng_seed if rng_seed is None else rng_seed
    rng = np.random.default_rng(seed)

    side = config.square_diagonal_m / math.sqrt(2.0)
    bs_pos = np.array([[0.0, 0.0], [side, side]])
    boresight = np.array([[1.0, 1.0], [-1.0, -1.0]]) / math.sqrt(2.0)

    positions = np.zeros((n_cells, users_per_cell, 2))
    for i in range(n_cells):
        for j in range(users_per_cell):
            for _ in range(config.resample_cap):
                p = rng.uniform(0.0, side, size=2)
                in_half = (p[0] + p[1] <= side) if i == 0 else (p[0] + p[1] >= side)
                if in_half and np.linalg.norm(p - bs_pos[i]) >= config.min_bs_distance_m:
                    positions[i, j] = p
                    break
            else:
                raise RuntimeError(
                    f"could not place user {j} of cell {i} within {config.resample_cap} draws"
                )

    channels = np.zeros((n_cells, n_cells, users_per_cell, n_tx), dtype=complex)
    for m in range(n_cells):
        for i in range(n_cells):
            for j in range(users_per_cell):
                diff = positions[i, j] - bs_pos[m]
                dist = float(np.linalg.norm(diff))
                theta = math.acos(
                    float(np.clip(diff @ boresight[m] / dist, -1.0, 1.0))
                )
                pathloss_db = config.pathloss_fixed_db + config.pathloss_slope_db * math.log10(
                    dist / 1000.0
                )
                shadowing_db = rng.normal(0.0, config.shadowing_std_db)
                gain_db = (
                    _antenna_gain_db(theta, config)
                    + config.rx_gain_db
                    - pathloss_db
                    - config.penetration_loss_db
                    - shadowing_db
                )
                fading = (rng.standard_normal(n_tx) + 1j * rng.standard_normal(n_tx)) / math.sqrt(2.0)
                channels[m, i, j] = math.sqrt(10.0 ** (gain_db / 10.0)) * fading

    constraints = per_array_constraints(config.power_dbm, n_cells, n_tx)
    return Scenario(channels, dbm_to_mw(config.noise_dbm), constraints, delta)


def scale_power(scenario: Scenario, factor: float) -> Scenario:
    """Scale every power budget by a positive factor (matrices untouched)."""
    if factor <= 0:
        raise ValueError("power scale factor must be positive")
    pcs = tuple(
        tuple(PowerConstraint(pc.Q, pc.q * factor) for pc in cell)
        for cell in scenario.power_constraints
    )
    return dataclasses.replace(scenario, power_constraints=pcs)


def with_power_dbm(scenario: Scenario, power_dbm: float) -> Scenario:
    """Rescale all budgets so the largest equals 10^(dBm/10) mW, keeping ratios."""
    q_max = max(pc.q for cell in scenario.power_constraints for pc in cell)
    return scale_power(scenario, dbm_to_mw(power_dbm) / q_max)
