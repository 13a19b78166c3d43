"""
Sensitivity sweeps, viability frontiers, break-even curves and the policy leaderboard.

Every analysis is built from econ_core.build_report calls on a baseline
(bom, training, metrics, params, projection) with some variables overridden:

    metric axes : collision_rate, sla_compliance, mean_power
    param axes  : c_shock, r_base

Profit is affine in each single axis, so the frontier (profit = 0) along a
free axis is found by plain bisection.

Usage:
    from costnav.analysis import SweepAxis, SweepBaseline, SweepSpec, sweep, frontier

    spec = SweepSpec(
        axes=(SweepAxis("collision_rate", 0.0, 0.6, 7), SweepAxis("sla_compliance", 0.4, 1.0, 7)),
        baseline=SweepBaseline(bom, training, metrics, params, projection),
    )
    grid = sweep(spec)
    points = frontier(spec, free_axis="collision_rate")
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from costnav.config import LEADERBOARD_MANIFEST_FILE, PROJECT_ROOT, load_yaml
from costnav.econ_core import (
    CostParams,
    EconReport,
    HardwareBOM,
    LedgerRounding,
    ProjectionPolicy,
    RunMetrics,
    TrainingStats,
    build_report,
    cumulative_position,
)
from costnav.errors import ConfigError, InfeasibleAnalysisError, ValidationError
from costnav.fixtures import EconomicsConfig
from costnav.log_model import aggregate, read_log, to_run_metrics, training_stats_from_log

logger = logging.getLogger(__name__)

METRIC_AXES = ("collision_rate", "sla_compliance", "mean_power")
PARAM_AXES = ("c_shock", "r_base")
SWEEP_AXES = METRIC_AXES + PARAM_AXES
UNIT_INTERVAL_AXES = ("collision_rate", "sla_compliance")

MAX_CURVE_POINTS = 10_000
MAX_BISECTION_ITERATIONS = 200


# ═════════════════════════════════════════════════════════════════
# Sweep
# ═════════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class SweepAxis:
    """One swept variable: `steps` evenly spaced values over [lo, hi]."""

    name: str
    lo: float
    hi: float
    steps: int = 2

    def __post_init__(self):
        if self.name not in SWEEP_AXES:
            raise ValidationError(f"Unknown sweep axis {self.name!r}; expected one of {list(SWEEP_AXES)}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo > self.hi:
            raise ValidationError(f"{self.name}: need finite lo <= hi (got [{self.lo}, {self.hi}])")
        if self.lo < 0 or (self.name in UNIT_INTERVAL_AXES and self.hi > 1):
            domain = "[0, 1]" if self.name in UNIT_INTERVAL_AXES else "[0, inf)"
            raise ValidationError(f"{self.name}: range [{self.lo}, {self.hi}] outside {domain}")
        if not isinstance(self.steps, int) or self.steps < 1:
            raise ValidationError(f"{self.name}: steps must be an integer >= 1 (got {self.steps})")
        # a single step is only meaningful for a pinned value
        if self.steps == 1 and self.lo != self.hi:
            raise ValidationError(f"{self.name}: steps must be >= 2 for a range (got 1 over [{self.lo}, {self.hi}])")

    def values(self) -> list[float]:
        return [float(v) for v in np.linspace(self.lo, self.hi, self.steps)]

    @classmethod
    def pinned(cls, name: str, value: float) -> "SweepAxis":
        return cls(name, value, value, 1)


@dataclass(frozen=True)
class SweepBaseline:
    bom: HardwareBOM
    training: TrainingStats
    metrics: RunMetrics
    params: CostParams
    projection: ProjectionPolicy | None = None
    ledger: LedgerRounding = LedgerRounding.EXACT

    def report(self, overrides: Mapping[str, float] | None = None, ledger: LedgerRounding | None = None) -> EconReport:
        """build_report with the given axis values substituted."""
        overrides = overrides or {}
        metric_changes = {k: v for k, v in overrides.items() if k in METRIC_AXES}
        param_changes = {k: v for k, v in overrides.items() if k in PARAM_AXES}
        metrics = replace(self.metrics, **metric_changes) if metric_changes else self.metrics
        params = replace(self.params, **param_changes) if param_changes else self.params
        return build_report(self.bom, self.training, metrics, params, self.projection, ledger or self.ledger)

    @classmethod
    def from_economics(
        cls, economics: EconomicsConfig, training: TrainingStats, metrics: RunMetrics
    ) -> "SweepBaseline":
        return cls(
            bom=economics.bom,
            training=training,
            metrics=metrics,
            params=economics.params,
            projection=economics.projection,
            ledger=economics.ledger,
        )


@dataclass(frozen=True)
class SweepSpec:
    axes: tuple[SweepAxis, ...]
    baseline: SweepBaseline

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not self.axes:
            raise ValidationError("A sweep needs at least one axis")
        names = [axis.name for axis in self.axes]
        if len(set(names)) != len(names):
            raise ValidationError(f"Duplicate sweep axes: {names}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(axis.name for axis in self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(axis.steps for axis in self.axes)

    def axis(self, name: str) -> SweepAxis:
        for axis in self.axes:
            if axis.name == name:
                return axis
        raise ValidationError(f"Axis {name!r} is not part of this sweep ({list(self.names)})")


@dataclass(frozen=True)
class SweepCell:
    coords: Mapping[str, float]
    report: EconReport


@dataclass(frozen=True)
class SweepGrid:
    """Cells in row-major order over the sweep axes (last axis varies fastest)."""

    axes: tuple[str, ...]
    shape: tuple[int, ...]
    cells: tuple[SweepCell, ...]

    def __post_init__(self):
        if not self.cells:
            raise ValidationError("Sweep grid is empty")

    def cell(self, *index: int) -> SweepCell:
        return self.cells[int(np.ravel_multi_index(index, self.shape))]

    def profits(self) -> np.ndarray:
        return np.array([c.report.profit for c in self.cells]).reshape(self.shape)


def sweep(spec: SweepSpec, workers: int = 1) -> SweepGrid:
    """
    Evaluate build_report on the Cartesian product of the axis values.

    Cells are independent; workers > 1 evaluates them on a thread pool
    without changing the output order.
    """
    coords = [dict(zip(spec.names, values)) for values in itertools.product(*(a.values() for a in spec.axes))]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(spec.baseline.report, coords))
    else:
        reports = [spec.baseline.report(c) for c in coords]
    logger.info("Swept %d cells over %s", len(coords), "×".join(spec.names))
    return SweepGrid(
        axes=spec.names,
        shape=spec.shape,
        cells=tuple(SweepCell(c, r) for c, r in zip(coords, reports)),
    )


# ═════════════════════════════════════════════════════════════════
# Viability frontier
# ═════════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class FrontierPoint:
    """
    Break-even value of the free axis for one combination of the other axes.

    root is None (NoRoot) when profit has the same sign at both bracket ends.
    """

    free_axis: str
    coords: Mapping[str, float]
    root: float | None
    profit: float | None
    bep: int | None

    @property
    def has_root(self) -> bool:
        return self.root is not None


def bisect_root(func: Callable[[float], float], lo: float, hi: float) -> float | None:
    """
    Sign-change root of a monotone function on [lo, hi], None when there is no sign change.

    Halves the bracket until the midpoint is no longer representable
    between the ends, then returns the end with the smaller |f|.
    """
    f_lo, f_hi = func(lo), func(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        return None

    for _ in range(MAX_BISECTION_ITERATIONS):
        mid = (lo + hi) / 2
        if mid <= lo or mid >= hi:
            break
        f_mid = func(mid)
        if f_mid == 0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return lo if abs(f_lo) <= abs(f_hi) else hi


def frontier(spec: SweepSpec, free_axis: str) -> list[FrontierPoint]:
    """
    Solve profit = 0 along `free_axis` for every grid point of the other axes.

    The free axis contributes only its [lo, hi] bracket. Profits are
    evaluated on the exact ledger so roots are continuous in the inputs.
    """
    axis = spec.axis(free_axis)
    if axis.lo == axis.hi:
        raise ValidationError(f"Free axis {free_axis} needs a bracket with lo < hi")

    fixed_axes = [a for a in spec.axes if a.name != free_axis]
    combos = itertools.product(*(a.values() for a in fixed_axes)) if fixed_axes else [()]

    points = []
    for values in combos:
        coords = dict(zip((a.name for a in fixed_axes), values))

        def profit_at(x: float, coords: Mapping[str, float] = coords) -> float:
            return spec.baseline.report({**coords, free_axis: x}, ledger=LedgerRounding.EXACT).profit

        root = bisect_root(profit_at, axis.lo, axis.hi)
        if root is None:
            points.append(FrontierPoint(free_axis, coords, None, None, None))
            continue
        report = spec.baseline.report({**coords, free_axis: root}, ledger=LedgerRounding.EXACT)
        points.append(FrontierPoint(free_axis, coords, root, report.profit, report.bep))

    solved = sum(p.has_root for p in points)
    logger.info("Frontier on %s: %d/%d combinations with a root", free_axis, solved, len(points))
    return points


def require_roots(points: Sequence[FrontierPoint]) -> None:
    """Raise InfeasibleAnalysisError when no combination has a root in the bracket."""
    if not any(p.has_root for p in points):
        free_axis = points[0].free_axis if points else "?"
        raise InfeasibleAnalysisError(f"Profit never crosses zero along {free_axis} in the requested bracket")


# ═════════════════════════════════════════════════════════════════
# Break-even curve
# ═════════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class BepCurve:
    runs: np.ndarray
    cumulative: np.ndarray
    crossing: int | None
    stride: int


def bep_curve(report: EconReport, n_max: int, stride: int | None = None) -> BepCurve:
    """
    Cumulative position at 0, stride, 2·stride, … and n_max.

    stride defaults to the smallest value keeping the series within
    MAX_CURVE_POINTS. The crossing is the report's exact break-even run,
    never read off the (possibly decimated) series.
    """
    if not isinstance(n_max, int) or n_max < 1:
        raise ValidationError(f"n_max must be an integer >= 1 (got {n_max})")
    if stride is None:
        stride = max(1, math.ceil(n_max / (MAX_CURVE_POINTS - 1)))
    if stride < 1:
        raise ValidationError(f"stride must be >= 1 (got {stride})")

    runs = list(range(0, n_max + 1, stride))
    if runs[-1] != n_max:
        runs.append(n_max)
    cumulative = [cumulative_position(report.pre_run_total, report.profit, n) for n in runs]
    return BepCurve(
        runs=np.asarray(runs, dtype=np.int64),
        cumulative=np.asarray(cumulative, dtype=float),
        crossing=report.bep,
        stride=stride,
    )


# ═════════════════════════════════════════════════════════════════
# Leaderboard
# ═════════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class LeaderboardEntry:
    policy_id: str
    log: Path
    training_log: Path | None = None


@dataclass(frozen=True)
class LeaderboardRow:
    """Traditional navigation metrics side by side with the economic ones."""

    policy_id: str
    n_episodes: int
    success_rate: float
    collision_rate: float
    timeout_rate: float
    sla_compliance: float
    path_length: float
    mean_power: float
    hardware_cost: float
    training_cost: float
    energy_cost: float
    maintenance_cost: float
    run_cost: float
    revenue: float
    profit: float
    bep: int | None
    time_to_profitability_days: float | None = None
    cost_shares: Mapping[str, float] = field(default_factory=dict)

    def sort_key(self) -> tuple[Any, ...]:
        return (self.bep is None, -self.profit, self.policy_id)


def rank_rows(rows: Iterable[LeaderboardRow]) -> list[LeaderboardRow]:
    """Profit descending, not-viable after viable, ties by policy_id."""
    return sorted(rows, key=LeaderboardRow.sort_key)


def load_leaderboard_manifest(
    path: str | Path = LEADERBOARD_MANIFEST_FILE, root: str | Path | None = None
) -> list[LeaderboardEntry]:
    """
    Read a manifest of {policy_id, log, training_log?} entries.

    Relative log paths resolve against `root` (default: project root).
    """
    base = Path(root) if root is not None else PROJECT_ROOT
    data = load_yaml(path)
    policies = data.get("policies")
    if not policies:
        raise ConfigError(f"{path}: manifest lists no policies")

    entries, seen = [], set()
    for row in policies:
        unknown = sorted(set(row) - {"policy_id", "log", "training_log", "note"})
        if unknown:
            raise ConfigError(f"{path}: unknown manifest keys {unknown}")
        if "policy_id" not in row or "log" not in row:
            raise ConfigError(f"{path}: every entry needs policy_id and log")
        policy_id = str(row["policy_id"])
        if policy_id in seen:
            raise ConfigError(f"{path}: duplicate policy_id {policy_id!r}")
        seen.add(policy_id)
        training_log = base / row["training_log"] if row.get("training_log") else None
        entries.append(LeaderboardEntry(policy_id, base / row["log"], training_log))
    return entries


def leaderboard_row(
    entry: LeaderboardEntry,
    economics: EconomicsConfig,
    training: TrainingStats,
    strict: bool = True,
) -> LeaderboardRow:
    timeout = economics.params.sla_timeout
    summary = aggregate(read_log(entry.log, strict=strict, timeout=timeout), sla_timeout=timeout)
    if entry.training_log is not None:
        training = training_stats_from_log(read_log(entry.training_log, strict=strict, timeout=None))
    report = economics.report(training, to_run_metrics(summary, timeout))
    return LeaderboardRow(
        policy_id=entry.policy_id,
        n_episodes=summary.n_episodes,
        success_rate=summary.arrival_rate,
        collision_rate=summary.collision_rate,
        timeout_rate=summary.timeout_rate,
        sla_compliance=summary.sla_compliance,
        path_length=summary.distance_mean,
        mean_power=summary.power_mean,
        hardware_cost=report.hardware_cost,
        training_cost=report.training_cost,
        energy_cost=report.energy_cost,
        maintenance_cost=report.maintenance_cost,
        run_cost=report.run_cost_total,
        revenue=report.revenue,
        profit=report.profit,
        bep=report.bep,
        time_to_profitability_days=report.time_to_profitability_days,
        cost_shares=dict(report.cost_shares),
    )


def leaderboard(
    entries: Sequence[LeaderboardEntry],
    economics: EconomicsConfig,
    training: TrainingStats,
    strict: bool = True,
) -> list[LeaderboardRow]:
    """
    Aggregate each policy's log, cost it with the shared economics and rank.

    In strict mode the first unreadable or invalid log aborts; in lenient
    mode the policy is skipped with a warning.
    """
    if not entries:
        raise ValidationError("Leaderboard needs at least one policy")

    rows = []
    for entry in entries:
        try:
            rows.append(leaderboard_row(entry, economics, training, strict=strict))
            logger.info("✅ %s: profit %.4f $/run", entry.policy_id, rows[-1].profit)
        except (ValidationError, OSError) as e:
            logger.error("❌ %s: %s", entry.policy_id, e)
            if strict:
                raise
            logger.warning("Skipping %s (lenient mode)", entry.policy_id)

    if not rows:
        raise ValidationError("No policy produced a valid leaderboard row")
    return rank_rows(rows)
