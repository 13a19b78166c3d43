"""
Loaders for the versioned economic data files under config/.

    economics.yml       → EconomicsConfig (built-in constants, BOM, projection)
    paper_baseline.yml  → PaperBaseline (published evaluation + training statistics)

Usage:
    from costnav.fixtures import load_paper_baseline

    baseline = load_paper_baseline()
    report = baseline.report()
    print(report.profit)   # -30.009
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from costnav.config import ECONOMICS_FILE, PAPER_BASELINE_FILE, RunConfig, load_yaml
from costnav.econ_core import (
    CostParams,
    EconReport,
    HardwareBOM,
    LedgerRounding,
    ProjectionPolicy,
    RunMetrics,
    TrainingStats,
    build_report,
)
from costnav.errors import ConfigError, ValidationError
from costnav.log_model import EpisodeRecord, EvaluationSummary, MomentAccumulator, Termination, to_run_metrics

logger = logging.getLogger(__name__)

SUPPORTED_VERSIONS = (1,)

# Metric keys a counterfactual preset may override
COUNTERFACTUAL_KEYS = ("collision_rate", "sla_compliance", "mean_collision_impulse", "mean_power")


def _check_version(data: Mapping[str, Any], path: str | Path) -> None:
    version = data.get("version")
    if version not in SUPPORTED_VERSIONS:
        raise ConfigError(f"{path}: unsupported schema version {version!r} (supported: {list(SUPPORTED_VERSIONS)})")


def _section(data: Mapping[str, Any], key: str, path: str | Path) -> Any:
    if key not in data:
        raise ConfigError(f"{path}: missing section '{key}'")
    return data[key]


# ═════════════════════════════════════════════════════════════════
# Economics
# ═════════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class EconomicsConfig:
    """Everything build_report needs apart from training and evaluation statistics."""

    params: CostParams
    bom: HardwareBOM
    projection: ProjectionPolicy
    ledger: LedgerRounding = LedgerRounding.EXACT

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], path: str | Path = "<mapping>") -> "EconomicsConfig":
        try:
            params = CostParams(**_section(data, "params", path))
            bom = HardwareBOM.from_records(_section(data, "hardware", path))
            projection = ProjectionPolicy(**data.get("projection", {}))
            ledger = LedgerRounding(data.get("ledger_rounding", "exact"))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{path}: {e}") from e
        return cls(params=params, bom=bom, projection=projection, ledger=ledger)

    def with_overrides(self, run_config: RunConfig) -> "EconomicsConfig":
        """Apply RunConfig economic overrides (flag > file > these defaults)."""
        params = replace(self.params, **run_config.econ_overrides())
        projection = self.projection
        if run_config.target_runtime is not None:
            projection = replace(projection, target_runtime=run_config.target_runtime)
        if run_config.distance_scale_maintenance is not None:
            projection = replace(projection, distance_scale_maintenance=run_config.distance_scale_maintenance)
        ledger = LedgerRounding(run_config.ledger_rounding) if run_config.ledger_rounding else self.ledger
        return replace(self, params=params, projection=projection, ledger=ledger)

    def report(self, training: TrainingStats, metrics: RunMetrics) -> EconReport:
        return build_report(self.bom, training, metrics, self.params, self.projection, self.ledger)


def load_economics(path: str | Path = ECONOMICS_FILE) -> EconomicsConfig:
    data = load_yaml(path)
    _check_version(data, path)
    logger.info("Loaded economics from %s", path)
    return EconomicsConfig.from_mapping(data, path)


# ═════════════════════════════════════════════════════════════════
# Published baseline bundle
# ═════════════════════════════════════════════════════════════════


def summary_from_rates(evaluation: Mapping[str, Any]) -> EvaluationSummary:
    """
    Rebuild an EvaluationSummary from published rates and moments.

    Counts are rate × n; unconditional impulse moments are derived by
    merging the collision moments with (n − collisions) zero impulses.
    """
    n = int(evaluation["n_episodes"])
    counts = {key: round(float(evaluation[f"{key}_rate"]) * n) for key in ("arrival", "collision", "timeout")}
    if sum(counts.values()) != n:
        raise ValidationError(f"Termination rates do not add up to {n} episodes: {counts}")

    collisions = MomentAccumulator.from_moments(
        counts["collision"], float(evaluation["impulse_mean"]), float(evaluation["impulse_std"])
    )
    impulse_all = collisions.merge(MomentAccumulator(n - counts["collision"]))
    return EvaluationSummary(
        n_episodes=n,
        arrival_count=counts["arrival"],
        collision_count=counts["collision"],
        timeout_count=counts["timeout"],
        on_time_count=counts["arrival"],
        impulse_mean=float(evaluation["impulse_mean"]),
        impulse_std=float(evaluation["impulse_std"]),
        impulse_mean_all=impulse_all.mean,
        impulse_std_all=impulse_all.std,
        power_mean=float(evaluation["power_mean"]),
        power_std=float(evaluation["power_std"]),
        power_max_mean=float(evaluation.get("power_max_mean", evaluation["power_mean"])),
        power_max_std=float(evaluation.get("power_max_std", 0.0)),
        duration_mean=float(evaluation["runtime_hours"]) * 3600.0,
        distance_mean=float(evaluation.get("distance_mean", 0.0)),
        sla_timeout=float(evaluation.get("timeout", 600.0)),
    )


@dataclass(frozen=True)
class PaperBaseline:
    """Published evaluation/training statistics plus the economics they were costed with."""

    policy_id: str
    summary: EvaluationSummary
    training: TrainingStats
    economics: EconomicsConfig
    counterfactuals: Mapping[str, Mapping[str, float]] = field(default_factory=dict)

    @property
    def metrics(self) -> RunMetrics:
        return to_run_metrics(self.summary)

    def counterfactual(self, name: str) -> RunMetrics:
        if name not in self.counterfactuals:
            raise ValidationError(f"Unknown counterfactual {name!r}; available: {sorted(self.counterfactuals)}")
        return replace(self.metrics, **self.counterfactuals[name])

    def report(self, metrics: RunMetrics | None = None, economics: EconomicsConfig | None = None) -> EconReport:
        economics = economics or self.economics
        return economics.report(self.training, metrics or self.metrics)


def load_paper_baseline(path: str | Path = PAPER_BASELINE_FILE) -> PaperBaseline:
    data = load_yaml(path)
    _check_version(data, path)
    try:
        summary = summary_from_rates(_section(data, "evaluation", path))
        training = TrainingStats(**_section(data, "training", path))
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from e

    counterfactuals = data.get("counterfactuals") or {}
    for name, overrides in counterfactuals.items():
        unknown = sorted(set(overrides) - set(COUNTERFACTUAL_KEYS))
        if unknown:
            raise ConfigError(f"{path}: counterfactual '{name}' has unknown keys {unknown}")

    logger.info("Loaded baseline '%s' from %s", data.get("policy_id"), path)
    return PaperBaseline(
        policy_id=str(data.get("policy_id", "baseline")),
        summary=summary,
        training=training,
        economics=EconomicsConfig.from_mapping(data, path),
        counterfactuals={name: dict(values) for name, values in counterfactuals.items()},
    )


def paper_evaluation_log(baseline: PaperBaseline | None = None) -> list[EpisodeRecord]:
    """
    Synthetic episode log whose aggregate reproduces the baseline's rates and means.

    Every collision carries the mean impulse and every episode the mean
    power, so spreads are 0; Timeout episodes last exactly the timeout and
    the other durations are set so the mean duration equals the runtime.
    """
    baseline = baseline or load_paper_baseline()
    s = baseline.summary
    timeout = s.sla_timeout or 600.0
    others = s.n_episodes - s.timeout_count
    short = (s.duration_mean * s.n_episodes - timeout * s.timeout_count) / others
    if not 0 < short <= timeout:
        raise ValidationError(f"Cannot spread a {s.duration_mean} s mean over episodes shorter than {timeout} s")

    kinds = (
        [Termination.COLLISION] * s.collision_count
        + [Termination.ARRIVE] * s.arrival_count
        + [Termination.TIMEOUT] * s.timeout_count
    )
    records = []
    for i, kind in enumerate(kinds):
        duration = timeout if kind is Termination.TIMEOUT else short
        records.append(
            EpisodeRecord(
                episode_id=f"ep-{i:06d}",
                scenario_id="testbed",
                policy_id=baseline.policy_id,
                seed=i,
                termination=kind,
                duration_s=duration,
                distance_m=s.distance_mean,
                collision_impulse_ns=s.impulse_mean if kind is Termination.COLLISION else 0.0,
                mean_power_w=s.power_mean,
                max_power_w=s.power_max_mean,
                energy_wh=s.power_mean * duration / 3600.0,
            )
        )
    return records
