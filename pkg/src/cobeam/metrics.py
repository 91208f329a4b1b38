"""Evaluation of beamforming matrices under an impairment model.

Everything here works on the true nonconvex performance expressions; nothing
depends on the conic machinery, so these routines double as a cross-check on
what the solvers claim to achieve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .impairments import (
    ImpairmentModel,
    evm_tx,
    rx_distortion_var,
    tx_distortion_cov,
)

__all__ = [
    "sinr",
    "sinr_components",
    "sinr_all",
    "power_usage",
    "finite_snr_mux_gain",
    "EvaluationReport",
    "evaluate",
]


def sinr_components(scenario, Ws, model: ImpairmentModel, i: int, j: int) -> dict:
    """Signal power and the four denominator pieces for user (i, j), in mW."""
    h_own = scenario.channel(i, i, j)
    received_own = h_own.conj() @ Ws[i]
    signal = float(np.abs(received_own[j]) ** 2)
    intra = float(np.sum(np.abs(received_own) ** 2)) - float(np.abs(received_own[j]) ** 2)
    inter = 0.0
    tx_dist = 0.0
    for m in range(scenario.n_cells):
        h = scenario.channel(m, i, j)
        if m != i:
            inter += float(np.sum(np.abs(h.conj() @ Ws[m]) ** 2))
        c2 = tx_distortion_cov(Ws[m], model)
        tx_dist += float(np.sum(np.abs(h) ** 2 * c2))
    rx_var = rx_distortion_var(scenario, Ws, i, j, model)
    return {
        "signal": signal,
        "intra": intra,
        "inter": inter,
        "tx_distortion": tx_dist,
        "rx_variance": rx_var,
    }


def sinr(scenario, Ws, model: ImpairmentModel, i: int, j: int) -> float:
    parts = sinr_components(scenario, Ws, model, i, j)
    denom = parts["intra"] + parts["inter"] + parts["tx_distortion"] + parts["rx_variance"]
    return parts["signal"] / denom


def sinr_all(scenario, Ws, model: ImpairmentModel) -> np.ndarray:
    out = np.zeros((scenario.n_cells, scenario.users_per_cell))
    for i in range(scenario.n_cells):
        for j in range(scenario.users_per_cell):
            out[i, j] = sinr(scenario, Ws, model, i, j)
    return out


def power_usage(W, C_diag, Q, delta: float) -> float:
    """tr(W^H Q W) + delta * tr(Q C) in mW, C the diagonal distortion covariance."""
    W = np.atleast_2d(np.asarray(W, dtype=complex))
    Q = np.atleast_2d(np.asarray(Q, dtype=complex))
    C_diag = np.asarray(C_diag, dtype=float)
    if C_diag.ndim == 2:
        C_diag = np.real(np.diag(C_diag))
    direct = float(np.real(np.trace(W.conj().T @ Q @ W)))
    dist = float(np.real(np.diag(Q)) @ C_diag)
    return direct + float(delta) * dist


def finite_snr_mux_gain(coordinated_avg_sum_rate: float, tdma_avg_rate: float) -> float:
    """Ratio of average coordinated sum rate to the average orthogonal rate."""
    if tdma_avg_rate <= 0.0:
        raise ValueError("reference rate must be positive")
    return coordinated_avg_sum_rate / tdma_avg_rate


@dataclass(frozen=True)
class EvaluationReport:
    """Per-user and per-constraint view of one set of beamformers."""

    sinr: np.ndarray          # (n_cells, users_per_cell)
    rates: np.ndarray         # measure applied to sinr
    min_rate: float
    sum_rate: float
    power_used: tuple         # per cell: array over that cell's constraints, mW
    power_feasible: bool      # all constraints satisfied (small relative slack)
    evm_percent: np.ndarray   # (n_cells, n_tx), NaN for silent antennas


def evaluate(scenario, Ws, model: ImpairmentModel, measure, feasibility_slack: float = 1e-7):
    s = sinr_all(scenario, Ws, model)
    rates = np.asarray(measure.g(s), dtype=float)
    used = []
    feasible = True
    for i in range(scenario.n_cells):
        c2 = tx_distortion_cov(Ws[i], model)
        cell = []
        for pc in scenario.cell_constraints(i):
            u = power_usage(Ws[i], c2, pc.Q, scenario.delta)
            cell.append(u)
            if u > pc.q * (1.0 + feasibility_slack):
                feasible = False
        used.append(np.asarray(cell))
    evm = np.full((scenario.n_cells, scenario.n_tx), np.nan)
    for i in range(scenario.n_cells):
        norms = np.linalg.norm(np.atleast_2d(Ws[i]), axis=1)
        for n in range(scenario.n_tx):
            if norms[n] > 0.0:
                evm[i, n] = 100.0 * math.sqrt(evm_tx(Ws[i], n, model))
    return EvaluationReport(
        sinr=s,
        rates=rates,
        min_rate=float(rates.min()),
        sum_rate=float(rates.sum()),
        power_used=tuple(used),
        power_feasible=feasible,
        evm_percent=evm,
    )
