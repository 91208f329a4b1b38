"""Coordinated multicell downlink beamforming under transceiver impairments.

Optimal QoS-constrained and max-min fair beamforming for multicell MIMO
downlinks whose transmitters and receivers add signal-dependent distortion,
plus the simulation harness that averages the schemes over random user
drops.
"""

from .baselines import StrategyResult, distortion_ignoring, maxmin_optimal, tdma_rate
from .beamforming import (
    BeamformingSolution,
    FpoResult,
    InfeasibleError,
    PerformanceMeasure,
    SaturationReport,
    StructureFitReport,
    fpo_upper_bound,
    power_saturation_probe,
    solve_fpo,
    solve_qos,
    structure_fit,
    verify_solution,
)
from .conic import (
    ConicProgram,
    ScalarConvexConstraint,
    SolveOutcome,
    outer_approx_solve,
    solve_conic,
    verify_infeasibility_certificate,
)
from .harness import (
    ExperimentConfig,
    ExperimentRecord,
    ExperimentResult,
    load_config,
    preset_config,
    run_experiment,
    write_csv,
    write_summary,
)
from .impairments import ImpairmentModel, eta_poly, evm_tx, nu_linear
from .metrics import (
    EvaluationReport,
    evaluate,
    finite_snr_mux_gain,
    power_usage,
    sinr,
    sinr_all,
)
from .scenario import (
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

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BeamformingSolution",
    "ConicProgram",
    "DropConfig",
    "EvaluationReport",
    "ExperimentConfig",
    "ExperimentRecord",
    "ExperimentResult",
    "FpoResult",
    "ImpairmentModel",
    "InfeasibleError",
    "PerformanceMeasure",
    "PowerConstraint",
    "SaturationReport",
    "ScalarConvexConstraint",
    "Scenario",
    "SolveOutcome",
    "StrategyResult",
    "StructureFitReport",
    "dbm_to_mw",
    "distortion_ignoring",
    "drop_users",
    "eta_poly",
    "evaluate",
    "evm_tx",
    "finite_snr_mux_gain",
    "fpo_upper_bound",
    "load_config",
    "make_manual_scenario",
    "maxmin_optimal",
    "mw_to_dbm",
    "nu_linear",
    "outer_approx_solve",
    "per_antenna_constraints",
    "per_array_constraints",
    "power_saturation_probe",
    "power_usage",
    "preset_config",
    "run_experiment",
    "scale_power",
    "sinr",
    "sinr_all",
    "solve_conic",
    "solve_fpo",
    "solve_qos",
    "structure_fit",
    "tdma_rate",
    "verify_infeasibility_certificate",
    "verify_solution",
    "with_power_dbm",
    "write_csv",
    "write_summary",
]
