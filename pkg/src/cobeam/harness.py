"""Monte-Carlo experiment harness.

Maps a declarative config (named preset or TOML file) onto many random
user drops, runs the selected transmission schemes on an impairment and
power grid, and emits per-drop records plus an aggregate summary. Output
is deterministic for a fixed config: drop d always derives its randomness
from SeedSequence([seed, d]) regardless of worker count, and rows are
sorted canonically before writing.
"""
from __future__ import annotations

import concurrent.futures
import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from .baselines import StrategyResult, maxmin_optimal, tdma_rate
from .beamforming import PerformanceMeasure
from .impairments import ImpairmentModel
from .metrics import evaluate
from .scenario import DropConfig, drop_users, with_power_dbm

__all__ = [
    "ExperimentConfig",
    "ExperimentRecord",
    "ExperimentResult",
    "PRESETS",
    "preset_config",
    "load_config",
    "run_experiment",
    "write_csv",
    "write_summary",
]

CSV_HEADER = "experiment,drop,seed,power_dbm,kappa1,kappa2,kappa3,delta,scheme,metric,value"

_SCHEMES = ("maxmin", "ignoring", "tdma")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "custom"
    drops: int = 50
    seed: int = 0
    n_cells: int = 2
    users_per_cell: int = 2
    n_tx: int = 4
    power_dbm: tuple = (18.2,)
    impairments: tuple = ((0.0, math.inf, 0.0),)
    delta: float = 1.0
    schemes: tuple = ("maxmin",)
    bisection_tol: float = 1e-3
    solver_tolerance: float = 1e-8
    cut_tolerance: float = 1e-6
    drop: DropConfig = DropConfig()

    def __post_init__(self):
        if self.drops < 1:
            raise ValueError("drops must be at least 1")
        if not self.power_dbm:
            raise ValueError("power grid is empty")
        if not self.impairments:
            raise ValueError("impairment grid is empty")
        if not self.schemes:
            raise ValueError("no schemes selected")
        for s in self.schemes:
            if s not in _SCHEMES:
                raise ValueError(f"unknown scheme {s!r}")
        for trip in self.impairments:
            if len(trip) != 3:
                raise ValueError("impairment entries must be (kappa1, kappa2, kappa3)")
        if self.n_cells < 1 or self.users_per_cell < 1 or self.n_tx < 1:
            raise ValueError("n_cells, users_per_cell and n_tx must be positive")


@dataclass(frozen=True)
class ExperimentRecord:
    experiment: str
    drop: int
    seed: int
    power_dbm: float
    kappa1: float
    kappa2: float
    kappa3: float
    delta: float
    scheme: str
    metric: str
    value: float

    def csv_row(self) -> str:
        cells = [
            self.experiment,
            str(self.drop),
            str(self.seed),
            repr(float(self.power_dbm)),
            repr(float(self.kappa1)),
            repr(float(self.kappa2)),
            repr(float(self.kappa3)),
            repr(float(self.delta)),
            self.scheme,
            self.metric,
            repr(float(self.value)),
        ]
        return ",".join(cells)

    @property
    def sort_key(self):
        return (
            self.power_dbm,
            self.kappa1,
            self.kappa2,
            self.kappa3,
            self.drop,
            self.scheme,
            self.metric,
        )


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    records: tuple
    summary: dict
    failure_fraction: float


# -- presets ----------------------------------------------------------------


def _tx_sweep():
    return dict(
        experiment="fig_tx_sweep",
        impairments=tuple((k, math.inf, 2.0) for k in (0.0, 2.0, 4.0, 8.0, 12.0)),
        schemes=("maxmin", "ignoring"),
    )


def _rx_sweep():
    return dict(
        experiment="fig_rx_sweep",
        impairments=tuple((2.0, math.inf, k) for k in (0.0, 2.0, 4.0, 8.0, 12.0)),
        schemes=("maxmin", "ignoring"),
    )


def _joint_sweep():
    return dict(
        experiment="fig_joint_sweep",
        impairments=tuple(
            (k, k2, k) for k2 in (math.inf, 20.0) for k in (0.0, 2.0, 4.0, 8.0)
        ),
        schemes=("maxmin", "ignoring"),
    )


def _power_sweep():
    return dict(
        experiment="fig_power_sweep",
        power_dbm=(0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0),
        impairments=((0.0, math.inf, 0.0), (4.0, math.inf, 4.0)),
        schemes=("maxmin", "ignoring"),
    )


def _mux_gain():
    return dict(
        experiment="fig_mux_gain",
        power_dbm=(0.0, 10.0, 18.2, 30.0, 40.0, 50.0),
        impairments=((0.0, math.inf, 0.0), (4.0, math.inf, 4.0)),
        schemes=("maxmin", "tdma"),
    )


PRESETS = {
    "fig_tx_sweep": _tx_sweep,
    "fig_rx_sweep": _rx_sweep,
    "fig_joint_sweep": _joint_sweep,
    "fig_power_sweep": _power_sweep,
    "fig_mux_gain": _mux_gain,
    "custom": dict,
}


def preset_config(name: str, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choices: {sorted(PRESETS)}")
    base = PRESETS[name]()
    base.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**base)


def _as_float(x):
    if isinstance(x, str):
        return float(x)  # accepts "inf"
    return float(x)


def load_config(path) -> ExperimentConfig:
    """Build a config from TOML. Keys mirror ExperimentConfig fields;
    impairments may be given as a list of [kappa1, kappa2, kappa3] triples
    or as separate kappa1/kappa2/kappa3 lists zipped positionally."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    preset = raw.pop("preset", "custom")
    drop_keys = raw.pop("drop", None)
    if "impairments" in raw:
        raw["impairments"] = tuple(
            tuple(_as_float(v) for v in trip) for trip in raw["impairments"]
        )
    elif {"kappa1", "kappa2", "kappa3"} & raw.keys():
        k1 = raw.pop("kappa1", [0.0])
        k2 = raw.pop("kappa2", [math.inf])
        k3 = raw.pop("kappa3", [0.0])
        k1 = [k1] if not isinstance(k1, list) else k1
        k2 = [k2] if not isinstance(k2, list) else k2
        k3 = [k3] if not isinstance(k3, list) else k3
        n = max(len(k1), len(k2), len(k3))
        if not all(len(k) in (1, n) for k in (k1, k2, k3)):
            raise ValueError("kappa lists must share a length (or be scalars)")

        def expand(k):
            return k * n if len(k) == 1 else k

        raw["impairments"] = tuple(
            (_as_float(a), _as_float(b), _as_float(c))
            for a, b, c in zip(expand(k1), expand(k2), expand(k3))
        )
    for key in ("power_dbm", "schemes"):
        if key in raw and isinstance(raw[key], list):
            raw[key] = tuple(raw[key])
    if isinstance(raw.get("power_dbm"), (int, float)):
        raw["power_dbm"] = (float(raw["power_dbm"]),)
    cfg_kwargs = dict(raw)
    if drop_keys:
        cfg_kwargs["drop"] = DropConfig(**drop_keys)
    return preset_config(preset, **cfg_kwargs)


# -- running ----------------------------------------------------------------


def _scheme_rates(scheme, sc, model, measure, cfg, ideal_cache, power):
    fpo_kwargs = dict(
        bisection_tol=cfg.bisection_tol,
        tolerance=cfg.solver_tolerance,
        cut_tolerance=cfg.cut_tolerance,
    )
    if scheme == "maxmin":
        return maxmin_optimal(sc, model, measure, **fpo_kwargs)
    if scheme == "ignoring":
        # the ideal design is impairment-independent, so cache it per power
        if power not in ideal_cache:
            design = dataclasses.replace(sc, delta=0.0)
            res = maxmin_optimal(design, ImpairmentModel.ideal(), measure, **fpo_kwargs)
            ideal_cache[power] = res
        res = ideal_cache[power]
        report = evaluate(sc, res.W, model, measure)
        return StrategyResult.from_rates(
            "ignoring", report.rates, res.W, meta={"power_feasible": report.power_feasible}
        )
    if scheme == "tdma":
        return tdma_rate(sc, model, measure, **fpo_kwargs)
    raise ValueError(f"unknown scheme {scheme!r}")


def _run_drop(cfg: ExperimentConfig, d: int):
    measure = PerformanceMeasure.rate()
    base = drop_users(
        cfg.drop,
        users_per_cell=cfg.users_per_cell,
        n_tx=cfg.n_tx,
        rng_seed=np.random.SeedSequence([cfg.seed, d]),
        n_cells=cfg.n_cells,
        delta=cfg.delta,
    )
    records = []
    failures = 0
    attempts = 0
    for power in cfg.power_dbm:
        sc = with_power_dbm(base, power)
        ideal_cache = {}
        for k1, k2, k3 in cfg.impairments:
            model = ImpairmentModel(kappa1=k1, kappa2=k2, kappa3=k3)
            for scheme in cfg.schemes:
                attempts += 1
                common = dict(
                    experiment=cfg.experiment,
                    drop=d,
                    seed=cfg.seed,
                    power_dbm=power,
                    kappa1=k1,
                    kappa2=k2,
                    kappa3=k3,
                    delta=cfg.delta,
                    scheme=scheme,
                )
                try:
                    res = _scheme_rates(scheme, sc, model, measure, cfg, ideal_cache, power)
                except Exception:
                    failures += 1
                    records.append(ExperimentRecord(metric="status", value=1.0, **common))
                    continue
                records.append(ExperimentRecord(metric="min_rate", value=res.min_rate, **common))
                records.append(ExperimentRecord(metric="sum_rate", value=res.sum_rate, **common))
    return records, failures, attempts


def _summarize(cfg: ExperimentConfig, records):
    groups = {}
    for r in records:
        if r.metric == "status":
            continue
        key = (r.power_dbm, r.kappa1, r.kappa2, r.kappa3, r.scheme, r.metric)
        groups.setdefault(key, []).append(r.value)
    summary = {"experiment": cfg.experiment, "drops": cfg.drops, "seed": cfg.seed, "groups": {}}
    for key in sorted(groups):
        vals = np.asarray(groups[key])
        power, k1, k2, k3, scheme, metric = key
        label = (
            f"power={power!r}|kappa1={k1!r}|kappa2={k2!r}|kappa3={k3!r}"
            f"|scheme={scheme}|metric={metric}"
        )
        summary["groups"][label] = {
            "mean": float(vals.mean()),
            "std": float(vals.std(ddof=1)) if len(vals) > 1 else 0.0,
            "count": int(len(vals)),
        }
    # multiplexing gain: ratio of mean sum rates, per grid point, when both
    # schemes are present
    mux = {}
    for key in groups:
        power, k1, k2, k3, scheme, metric = key
        if scheme != "maxmin" or metric != "sum_rate":
            continue
        tk = (power, k1, k2, k3, "tdma", "sum_rate")
        if tk in groups:
            denom = float(np.mean(groups[tk]))
            if denom > 0:
                label = f"power={power!r}|kappa1={k1!r}|kappa2={k2!r}|kappa3={k3!r}"
                mux[label] = float(np.mean(groups[key])) / denom
    if mux:
        summary["mux_gain"] = {k: mux[k] for k in sorted(mux)}
    return summary


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, progress=None) -> ExperimentResult:
    """Run every drop, collect records, and aggregate.

    jobs > 1 parallelizes across drops with threads (the conic solver
    releases the GIL while factorizing); ordering of the output does not
    depend on jobs.
    """
    all_records = []
    failures = 0
    attempts = 0
    if jobs <= 1:
        iterator = (_run_drop(cfg, d) for d in range(cfg.drops))
        for d, (recs, f, n) in enumerate(iterator):
            all_records.extend(recs)
            failures += f
            attempts += n
            if progress:
                progress(d + 1, cfg.drops)
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_run_drop, cfg, d): d for d in range(cfg.drops)}
            done = 0
            for fut in concurrent.futures.as_completed(futures):
                recs, f, n = fut.result()
                all_records.extend(recs)
                failures += f
                attempts += n
                done += 1
                if progress:
                    progress(done, cfg.drops)
    all_records.sort(key=lambda r: r.sort_key)
    frac = failures / attempts if attempts else 0.0
    summary = _summarize(cfg, all_records)
    summary["failure_fraction"] = frac
    return ExperimentResult(
        config=cfg, records=tuple(all_records), summary=summary, failure_fraction=frac
    )


def write_csv(records, path) -> None:
    """Write records with a fixed header and repr-formatted floats, so the
    same records always produce byte-identical files."""
    lines = [CSV_HEADER]
    lines.extend(r.csv_row() for r in records)
    data = "\n".join(lines) + "\n"
    with open(path, "w", newline="") as fh:
        fh.write(data)


def write_summary(result: ExperimentResult, path) -> None:
    with open(path, "w") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
