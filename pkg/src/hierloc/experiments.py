"""Batch Monte Carlo experiment harness.

An experiment runs one algorithm on `trials` seeded scenarios
(seed = base_seed + trial index), scores per-agent positioning errors,
and persists everything needed for replay: manifest.json, trials.csv,
traffic.csv, cdf.csv, plus rendered figures next to the CSVs.  Identical
configs produce byte-identical outputs.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import figures
from .errors import ConfigurationError
from .graph import bfs_spanning_tree, build_connectivity, min_spanning_tree
from .hierarchy import assign_layers, run_hierarchical_nbp
from .metrics import CdfCurve, errors_to_cdf, measured_links
from .nbp import RunConfig, run_standard_nbp, run_tree_nbp
from .particles import mmse_estimate
from .scenario import Scenario, ScenarioConfig, generate_scenario, measure_distances

ALGORITHMS = ("nbp", "nbp-bfs", "nbp-min", "hierarchical")
DEFAULT_THRESHOLDS = tuple(round(0.1 * i, 10) for i in range(1, 51))

_PRESETS: dict[str, ScenarioConfig] = {
    "net1": ScenarioConfig(area_side=50.0, radio_range=12.0, n_agents=100, anchors="net1"),
    "net2": ScenarioConfig(area_side=50.0, radio_range=12.0, n_agents=50, anchors="net2"),
    "net3": ScenarioConfig(area_side=50.0, radio_range=12.0, n_agents=100, anchors="net3"),
}


def preset(network_id: str) -> ScenarioConfig:
    """Scenario presets: net1 13/100, net2 13/50, net3 9/100 (a=50, R=12)."""
    if network_id not in _PRESETS:
        raise ConfigurationError(f"unknown preset: {network_id!r}")
    return _PRESETS[network_id]


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig
    algorithm: str = "nbp"
    threshold_init: int | None = None
    K: int = 200
    T: int = 10
    h: float = 2.0
    trials: int = 50
    base_seed: int = 1
    workers: int = 1
    score_unassignable: str = "exclude"
    cdf_thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    render_figures: bool = True
    preset_name: str | None = None

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm: {self.algorithm!r}")
        if self.trials < 1:
            raise ConfigurationError("trials must be at least 1")
        if self.algorithm == "hierarchical":
            if self.threshold_init is None:
                object.__setattr__(self, "threshold_init", 3)
            elif self.threshold_init not in (0, 1, 2, 3):
                raise ConfigurationError("threshold_init must be in {0, 1, 2, 3}")
        elif self.threshold_init is not None:
            raise ConfigurationError("threshold_init only applies to the hierarchical algorithm")
        if self.score_unassignable not in ("exclude", "prior-mean"):
            raise ConfigurationError("score_unassignable must be 'exclude' or 'prior-mean'")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")

    @property
    def label(self) -> str:
        if self.algorithm == "hierarchical":
            return f"hierarchical-t{self.threshold_init}"
        return self.algorithm

    def run_config(self, seed: int) -> RunConfig:
        return RunConfig(K=self.K, T=self.T, h=self.h, seed=seed)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["scenario"] = self.scenario.to_dict()
        d["cdf_thresholds"] = list(self.cdf_thresholds)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentConfig":
        d = dict(d)
        scen = d.pop("scenario", None)
        preset_name = d.pop("preset_name", None) or d.pop("preset", None)
        if scen is not None:
            scenario = ScenarioConfig.from_dict(scen)
        elif preset_name is not None:
            scenario = preset(preset_name)
        else:
            raise ConfigurationError("config needs a 'scenario' section or a 'preset'")
        thresholds = d.pop("cdf_thresholds", DEFAULT_THRESHOLDS)
        known = {f.name for f in dataclasses.fields(cls)} - {"scenario", "cdf_thresholds"}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
        return cls(
            scenario=scenario,
            cdf_thresholds=tuple(float(t) for t in thresholds),
            preset_name=preset_name,
            **d,
        )

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if path.suffix.lower() == ".toml":
            if sys.version_info >= (3, 11):
                import tomllib as toml_loader
            else:
                import tomli as toml_loader
            with open(path, "rb") as fh:
                return cls.from_dict(toml_loader.load(fh))
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: int
    scenario_hash: str
    errors: dict[int, float]  # per-agent positioning error, meters
    scored: tuple[int, ...]
    unassigned: tuple[int, ...]
    runtime_s: float
    total_messages: int
    per_iteration_links: float
    layers: int

    def scored_errors(self) -> list[float]:
        return [self.errors[i] for i in self.scored]


def scenario_digest(scenario: Scenario) -> str:
    doc = json.dumps(scenario.to_dict(), sort_keys=True)
    return hashlib.sha256(doc.encode()).hexdigest()


def run_single_trial(config: ExperimentConfig, trial: int) -> TrialRecord:
    """One seeded scenario end to end: generate, localize, score."""
    seed = config.base_seed + trial
    scenario = generate_scenario(config.scenario, seed)
    graph = build_connectivity(scenario)
    measurements = measure_distances(scenario, graph, seed)
    cfg = config.run_config(seed)
    anchors = set(scenario.anchor_ids)

    layers = 1
    if config.algorithm == "nbp":
        result = run_standard_nbp(scenario, graph, measurements, cfg)
    elif config.algorithm == "nbp-bfs":
        tree = bfs_spanning_tree(graph, anchors)
        result = run_tree_nbp(scenario, tree, measurements, cfg)
    elif config.algorithm == "nbp-min":
        weights = {pair: d for pair, d in measurements.items()}
        tree = min_spanning_tree(graph, weights)
        result = run_tree_nbp(scenario, tree, measurements, cfg)
    else:
        assignment = assign_layers(graph, anchors, config.threshold_init)
        result = run_hierarchical_nbp(scenario, graph, measurements, assignment, cfg)
        layers = assignment.n_layers

    center = np.array([scenario.area_side / 2.0, scenario.area_side / 2.0])
    unassigned = set(result.unlocalized)
    errors: dict[int, float] = {}
    scored: list[int] = []
    for i in scenario.agent_ids:
        truth = scenario.position(i)
        if i in unassigned:
            errors[i] = float(np.hypot(*(center - truth)))
            if config.score_unassignable == "prior-mean":
                scored.append(i)
        else:
            est = mmse_estimate(result.beliefs[i])
            errors[i] = float(np.hypot(*(est - truth)))
            scored.append(i)

    return TrialRecord(
        trial=trial,
        seed=seed,
        scenario_hash=scenario_digest(scenario),
        errors=errors,
        scored=tuple(scored),
        unassigned=tuple(sorted(unassigned)),
        runtime_s=result.runtime_s,
        total_messages=len(result.traffic),
        per_iteration_links=measured_links(result.traffic, "per-iteration-mean"),
        layers=layers,
    )


def _trial_task(args) -> TrialRecord:
    config, trial = args
    return run_single_trial(config, trial)


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    records: tuple[TrialRecord, ...]
    cdf: CdfCurve
    failures: tuple[dict, ...] = ()

    def pooled_errors(self) -> np.ndarray:
        return np.array([e for rec in self.records for e in rec.scored_errors()])

    def median_error(self) -> float:
        pooled = self.pooled_errors()
        return float(np.median(pooled)) if pooled.size else float("nan")

    def cdf_at(self, threshold: float) -> float:
        return self.cdf.value_at(threshold)

    def median_runtime(self) -> float:
        return float(np.median([rec.runtime_s for rec in self.records]))

    def total_messages(self) -> list[int]:
        return [rec.total_messages for rec in self.records]


def _execute_trials(config: ExperimentConfig) -> tuple[list[TrialRecord], list[dict]]:
    records: list[TrialRecord] = []
    failures: list[dict] = []
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = {pool.submit(run_single_trial, config, t): t for t in range(config.trials)}
            for future, trial in futures.items():
                try:
                    records.append(future.result())
                except Exception as exc:  # recorded, not fatal
                    failures.append(
                        {"trial": trial, "seed": config.base_seed + trial, "error": str(exc)}
                    )
    else:
        for trial in range(config.trials):
            try:
                records.append(run_single_trial(config, trial))
            except Exception as exc:  # recorded, not fatal
                failures.append(
                    {"trial": trial, "seed": config.base_seed + trial, "error": str(exc)}
                )
    records.sort(key=lambda rec: rec.seed)
    failures.sort(key=lambda f: f["trial"])
    return records, failures


def run_experiment(config: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Run all trials, aggregate the pooled CDF, persist results."""
    records, failures = _execute_trials(config)
    pooled = [e for rec in records for e in rec.scored_errors()]
    cdf = errors_to_cdf(pooled, config.cdf_thresholds)
    result = ExperimentResult(config, tuple(records), cdf, tuple(failures))
    if out_dir is not None:
        write_outputs(result, Path(out_dir))
    return result


def write_outputs(result: ExperimentResult, out_dir: Path) -> None:
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory {out_dir}: {exc}") from exc

    manifest = {
        "config": result.config.to_dict(),
        "trials": [
            {
                "trial": rec.trial,
                "seed": rec.seed,
                "scenario_hash": rec.scenario_hash,
                "n_scored": len(rec.scored),
                "n_unassigned": len(rec.unassigned),
                "median_error": float(np.median(rec.scored_errors())) if rec.scored else None,
                "runtime_s": rec.runtime_s,
                "total_messages": rec.total_messages,
                "layers": rec.layers,
            }
            for rec in result.records
        ],
        "failures": list(result.failures),
        "partial": bool(result.failures),
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)

    with open(out_dir / "trials.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write("trial,seed,agent_id,error_m,scored\n")
        for rec in result.records:
            scored = set(rec.scored)
            for agent in sorted(rec.errors):
                fh.write(
                    f"{rec.trial},{rec.seed},{agent},"
                    f"{rec.errors[agent]:.9g},{int(agent in scored)}\n"
                )

    with open(out_dir / "traffic.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write(
            "trial,seed,algorithm,runtime_s,total_directed_messages,"
            "per_iteration_mean_links,realized_layers,n_unassigned\n"
        )
        for rec in result.records:
            fh.write(
                f"{rec.trial},{rec.seed},{result.config.label},{rec.runtime_s:.9g},"
                f"{rec.total_messages},{rec.per_iteration_links:.9g},"
                f"{rec.layers},{len(rec.unassigned)}\n"
            )

    result.cdf.to_csv(out_dir / "cdf.csv")

    if result.config.render_figures:
        figures.save_cdf_figure(out_dir / "cdf.png", {result.config.label: result.cdf})
        figures.save_traffic_figure(
            out_dir / "traffic.png", {result.config.label: result.total_messages()}
        )


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    median_error: float
    cdf_050: float
    cdf_100: float
    cdf_200: float
    median_runtime_s: float
    mean_messages: float
    runtime_ratio: float | None
    traffic_ratio: float | None


def compare(configs: Sequence[ExperimentConfig], out_dir=None) -> list[ComparisonRow]:
    """Paired-seed comparison of several algorithms on one scenario.

    All configs must share the scenario, trial count, and base seed; the
    per-trial scenario hashes are cross-checked so every algorithm saw
    exactly the same networks and measurements.
    """
    if not configs:
        raise ConfigurationError("compare needs at least one config")
    first = configs[0]
    for other in configs[1:]:
        if other.scenario != first.scenario:
            raise ConfigurationError("compare requires a shared scenario config")
        if other.trials != first.trials or other.base_seed != first.base_seed:
            raise ConfigurationError("compare requires shared trials and base seed")

    results = []
    out_dir = Path(out_dir) if out_dir is not None else None
    for config in configs:
        sub = out_dir / config.label if out_dir is not None else None
        results.append(run_experiment(config, sub))

    for other in results[1:]:
        for rec_a, rec_b in zip(results[0].records, other.records):
            if rec_a.scenario_hash != rec_b.scenario_hash:
                raise ConfigurationError("paired trials saw different scenarios")

    base_runtime = results[0].median_runtime()
    base_traffic = float(np.mean(results[0].total_messages()))
    rows = []
    for idx, res in enumerate(results):
        runtime = res.median_runtime()
        traffic = float(np.mean(res.total_messages()))
        rows.append(
            ComparisonRow(
                label=res.config.label,
                median_error=res.median_error(),
                cdf_050=res.cdf.value_at(0.5),
                cdf_100=res.cdf.value_at(1.0),
                cdf_200=res.cdf.value_at(2.0),
                median_runtime_s=runtime,
                mean_messages=traffic,
                runtime_ratio=None if idx == 0 or base_runtime == 0 else runtime / base_runtime,
                traffic_ratio=None if idx == 0 or base_traffic == 0 else traffic / base_traffic,
            )
        )

    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "comparison.csv", "w", newline="", encoding="utf-8") as fh:
            fh.write(
                "algorithm,median_error_m,cdf_0.5m,cdf_1.0m,cdf_2.0m,"
                "median_runtime_s,mean_messages,runtime_ratio,traffic_ratio\n"
            )
            for row in rows:
                rr = f"{row.runtime_ratio:.9g}" if row.runtime_ratio is not None else ""
                tr = f"{row.traffic_ratio:.9g}" if row.traffic_ratio is not None else ""
                fh.write(
                    f"{row.label},{row.median_error:.9g},{row.cdf_050:.9g},"
                    f"{row.cdf_100:.9g},{row.cdf_200:.9g},{row.median_runtime_s:.9g},"
                    f"{row.mean_messages:.9g},{rr},{tr}\n"
                )
        if first.render_figures:
            figures.save_cdf_figure(
                out_dir / "cdf_compare.png", {r.config.label: r.cdf for r in results}
            )
            figures.save_runtime_figure(
                out_dir / "runtime_compare.png",
                {r.config.label: [rec.runtime_s for rec in r.records] for r in results},
            )
    return rows


def replay_trial(manifest_path, trial: int) -> tuple[TrialRecord, bool]:
    """Re-run one trial from a manifest; True iff it reproduced exactly."""
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    config = ExperimentConfig.from_dict(manifest["config"])
    stored = next((t for t in manifest["trials"] if t["trial"] == trial), None)
    if stored is None:
        raise ConfigurationError(f"trial {trial} not present in manifest")
    record = run_single_trial(config, trial)
    ok = (
        record.scenario_hash == stored["scenario_hash"]
        and record.total_messages == stored["total_messages"]
        and (
            stored["median_error"] is None
            or np.isclose(float(np.median(record.scored_errors())), stored["median_error"])
        )
    )
    return record, ok
