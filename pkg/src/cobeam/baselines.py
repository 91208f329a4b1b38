"""Transmission strategies compared in the experiments.

Every strategy returns a StrategyResult whose rates are re-evaluated under
the true impairment model, so the comparison is always on realized
performance regardless of what the designer believed.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import metrics
from .beamforming import PerformanceMeasure, solve_fpo
from .impairments import ImpairmentModel
from .scenario import Scenario

__all__ = ["StrategyResult", "maxmin_optimal", "distortion_ignoring", "tdma_rate"]


@dataclass(frozen=True)
class StrategyResult:
    """Realized per-user rates of one strategy on one scenario.

    For the orthogonal (tdma) strategy the per-user rates are already
    time-share weighted, so sum_rate is directly comparable with the
    coordinated schemes. meta carries strategy-specific extras.
    """

    label: str
    rates: np.ndarray
    min_rate: float
    sum_rate: float
    W: Optional[list]
    meta: dict

    @classmethod
    def from_rates(cls, label, rates, W=None, meta=None):
        rates = np.asarray(rates, dtype=float)
        return cls(
            label=label,
            rates=rates,
            min_rate=float(rates.min()),
            sum_rate=float(rates.sum()),
            W=W,
            meta=meta or {},
        )


def maxmin_optimal(
    scenario: Scenario,
    model: ImpairmentModel,
    measure: PerformanceMeasure,
    **fpo_kwargs,
) -> StrategyResult:
    """Max-min fair coordinated beamforming under the true model."""
    res = solve_fpo(scenario, model, measure, a=0.0, alpha=None, **fpo_kwargs)
    report = metrics.evaluate(scenario, res.solution.W, model, measure)
    return StrategyResult.from_rates(
        "maxmin_optimal",
        report.rates,
        W=res.solution.W,
        meta={"f_star": res.f_star, "beta": res.solution.beta},
    )


def distortion_ignoring(
    scenario: Scenario,
    true_model: ImpairmentModel,
    measure: PerformanceMeasure,
    rescale_power: bool = False,
    **fpo_kwargs,
) -> StrategyResult:
    """Design as if the hardware were ideal, then live with the real hardware.

    The design stage solves max-min fairness with eta = nu = 0 and no
    distortion power accounting (delta = 0); the resulting beamformers are
    then evaluated under true_model. They are deliberately NOT rescaled, so
    they can overspend the true budget (the design believed distortion was
    free); rescale_power=True instead shrinks them by a common factor until
    every true constraint holds, for sensitivity studies.
    """
    design_scenario = dataclasses.replace(scenario, delta=0.0)
    res = solve_fpo(design_scenario, ImpairmentModel.ideal(), measure, a=0.0, alpha=None, **fpo_kwargs)
    W = [Wi.copy() for Wi in res.solution.W]
    scale = 1.0
    if rescale_power:
        scale = _feasibility_scale(scenario, W, true_model)
        W = [scale * Wi for Wi in W]
    report = metrics.evaluate(scenario, W, true_model, measure)
    return StrategyResult.from_rates(
        "distortion_ignoring",
        report.rates,
        W=W,
        meta={
            "f_star_design": res.f_star,
            "power_feasible": report.power_feasible,
            "rescale_factor": scale,
        },
    )


def _feasibility_scale(scenario, Ws, model, iters: int = 60) -> float:
    # shrink by the largest s in (0, 1] with all true constraints satisfied;
    # usage is monotone in s so plain bisection is enough
    from .impairments import tx_distortion_cov

    def feasible(s):
        for i in range(scenario.n_cells):
            Wi = s * Ws[i]
            c2 = tx_distortion_cov(Wi, model)
            for pc in scenario.cell_constraints(i):
                if metrics.power_usage(Wi, c2, pc.Q, scenario.delta) > pc.q:
                    return False
        return True

    if feasible(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def tdma_rate(
    scenario: Scenario,
    model: ImpairmentModel,
    measure: PerformanceMeasure,
    **fpo_kwargs,
) -> StrategyResult:
    """Orthogonal reference: each user gets an equal 1/(n*k) time share.

    In its slot a user is served alone by its own array at full budget (the
    other array is silent), still under the full impairment model. Reported
    per-user rates are the slot rates divided by the number of slots.
    """
    n, k = scenario.n_cells, scenario.users_per_cell
    slots = n * k
    slot_rates = np.zeros((n, k))
    for i in range(n):
        for j in range(k):
            reduced = Scenario(
                scenario.channels[i : i + 1, i : i + 1, j : j + 1, :],
                scenario.noise_power,
                (scenario.cell_constraints(i),),
                scenario.delta,
            )
            res = solve_fpo(reduced, model, measure, a=0.0, alpha=None, **fpo_kwargs)
            report = metrics.evaluate(reduced, res.solution.W, model, measure)
            slot_rates[i, j] = report.rates[0, 0]
    return StrategyResult.from_rates(
        "tdma",
        slot_rates / slots,
        W=None,
        meta={"slot_rates": slot_rates},
    )
