"""
Economics engine: pure cost, revenue, profit and break-even computations.

Converts navigation evaluation statistics into a per-robot business case:

    pre-run costs  : hardware bill of materials + training/data-collection wear
    run costs      : energy + collision-driven maintenance + expected rescue
    revenue        : base delivery fee × SLA compliance
    profit per run : revenue − run costs
    break-even     : smallest whole number of runs that recovers pre-run costs

Every function here is a deterministic function of its arguments (no I/O,
no shared state), so reports can be built concurrently from any thread.

Usage:
    from costnav.econ_core import build_report

    report = build_report(bom, training, metrics, params, projection)
    print(report.profit, report.bep)
"""

import logging
import math
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_EVEN, Decimal
from enum import Enum
from typing import Any, Iterable, Mapping

from costnav.errors import ValidationError

logger = logging.getLogger(__name__)

# Profit at or below this margin is treated as "not viable"
VIABILITY_EPSILON = 1e-9

COST_COMPONENTS = ("energy", "maintenance", "rescue")


def round_half_even(value: float, places: int) -> float:
    """Round to `places` decimals with banker's rounding on the decimal repr."""
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(repr(float(value))).quantize(quantum, rounding=ROUND_HALF_EVEN))


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValidationError(message)


def _finite(value: float) -> bool:
    return isinstance(value, (int, float)) and math.isfinite(value)


# ═════════════════════════════════════════════════════════════════
# Domain types
# ═════════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class BOMItem:
    """One hardware line item (USD per unit × quantity)."""

    name: str
    unit_cost: float
    quantity: int = 1

    def __post_init__(self):
        _require(bool(self.name), "BOM item name must be non-empty")
        _require(
            _finite(self.unit_cost) and self.unit_cost >= 0,
            f"BOM item '{self.name}': unit_cost must be >= 0 (got {self.unit_cost})",
        )
        _require(
            isinstance(self.quantity, int) and self.quantity >= 1,
            f"BOM item '{self.name}': quantity must be >= 1 (got {self.quantity})",
        )

    @property
    def subtotal(self) -> float:
        return self.unit_cost * self.quantity


@dataclass(frozen=True)
class HardwareBOM:
    """Upfront robot hardware: chassis, sensors, compute module."""

    items: tuple[BOMItem, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        _require(len(self.items) > 0, "Hardware BOM must contain at least one item")

    def total(self) -> float:
        return math.fsum(item.subtotal for item in self.items)

    @classmethod
    def from_records(cls, records: Iterable[Mapping[str, Any]]) -> "HardwareBOM":
        """Build from YAML-style rows: {name, unit_cost, quantity}."""
        items = []
        for row in records:
            unknown = set(row) - {"name", "unit_cost", "quantity"}
            _require(not unknown, f"Unknown BOM keys: {sorted(unknown)}")
            items.append(
                BOMItem(
                    name=str(row["name"]),
                    unit_cost=float(row["unit_cost"]),
                    quantity=int(row.get("quantity", 1)),
                )
            )
        return cls(tuple(items))


@dataclass(frozen=True)
class CostParams:
    """
    Calibrated economic coefficients.

    Attributes:
        c_elec: electricity rate (USD per kWh)
        c_shock: fraction of hardware cost charged per N·s of collision impulse
        r_base: base delivery fee (USD per delivery)
        sla_timeout: delivery-time cutoff (seconds); later deliveries earn 0
        p_failure: probability a run needs a human rescue
        c_human_op: cost of one human intervention (USD)
        deliveries_per_day: optional fleet cadence for time-to-profitability
    """

    c_elec: float
    c_shock: float
    r_base: float
    sla_timeout: float
    p_failure: float = 0.0
    c_human_op: float = 0.0
    deliveries_per_day: float | None = None

    def __post_init__(self):
        for name in ("c_elec", "c_shock", "r_base", "sla_timeout", "p_failure", "c_human_op"):
            value = getattr(self, name)
            _require(_finite(value) and value >= 0, f"CostParams.{name} must be >= 0 (got {value})")
        _require(self.p_failure <= 1, f"CostParams.p_failure must be in [0, 1] (got {self.p_failure})")
        if self.deliveries_per_day is not None:
            _require(
                _finite(self.deliveries_per_day) and self.deliveries_per_day > 0,
                f"CostParams.deliveries_per_day must be > 0 (got {self.deliveries_per_day})",
            )


@dataclass(frozen=True)
class TrainingStats:
    """Statistics of the simulation training run (collision wear during RL training)."""

    episodes: int
    collision_rate: float
    mean_collision_impulse: float
    mean_episode_time: float = 0.0

    def __post_init__(self):
        _require(isinstance(self.episodes, int) and self.episodes >= 0, f"episodes must be >= 0 (got {self.episodes})")
        _require(0 <= self.collision_rate <= 1, f"collision_rate must be in [0, 1] (got {self.collision_rate})")
        _require(
            _finite(self.mean_collision_impulse) and self.mean_collision_impulse >= 0,
            f"mean_collision_impulse must be >= 0 (got {self.mean_collision_impulse})",
        )
        _require(
            _finite(self.mean_episode_time) and self.mean_episode_time >= 0,
            f"mean_episode_time must be >= 0 (got {self.mean_episode_time})",
        )


@dataclass(frozen=True)
class RunMetrics:
    """
    Per-run operating statistics consumed by the cost model.

    mean_collision_impulse is conditional on a collision occurring; the
    expected impulse per run is impulse × collision_rate × collision_scale.
    collision_scale stays 1.0 unless a projection scales collisions with
    delivery distance.
    """

    sla_compliance: float
    collision_rate: float
    mean_collision_impulse: float
    mean_power: float
    runtime: float
    collision_scale: float = 1.0

    def __post_init__(self):
        _require(0 <= self.sla_compliance <= 1, f"sla_compliance must be in [0, 1] (got {self.sla_compliance})")
        _require(0 <= self.collision_rate <= 1, f"collision_rate must be in [0, 1] (got {self.collision_rate})")
        _require(
            _finite(self.mean_collision_impulse) and self.mean_collision_impulse >= 0,
            f"mean_collision_impulse must be >= 0 (got {self.mean_collision_impulse})",
        )
        _require(_finite(self.mean_power) and self.mean_power >= 0, f"mean_power must be >= 0 (got {self.mean_power})")
        _require(_finite(self.runtime) and self.runtime > 0, f"runtime must be > 0 hours (got {self.runtime})")
        _require(
            _finite(self.collision_scale) and self.collision_scale >= 0,
            f"collision_scale must be >= 0 (got {self.collision_scale})",
        )


@dataclass(frozen=True)
class ProjectionPolicy:
    """
    Maps micro-testbed metrics onto a full-length delivery.

    The default only replaces the runtime (0.1 hr testbed → 1 hr delivery).
    With distance_scale_maintenance, expected collisions are multiplied by
    target_distance / source_distance (exploratory, off by default).
    """

    target_runtime: float = 1.0
    source_distance: float = 20.0
    target_distance: float = 6000.0
    distance_scale_maintenance: bool = False

    def __post_init__(self):
        _require(
            _finite(self.target_runtime) and self.target_runtime > 0,
            f"Projection target_runtime must be > 0 hours (got {self.target_runtime})",
        )
        _require(self.source_distance > 0, f"source_distance must be > 0 (got {self.source_distance})")
        _require(self.target_distance > 0, f"target_distance must be > 0 (got {self.target_distance})")

    @property
    def distance_ratio(self) -> float:
        return self.target_distance / self.source_distance

    @classmethod
    def identity(cls, metrics: RunMetrics) -> "ProjectionPolicy":
        return cls(target_runtime=metrics.runtime)


class LedgerRounding(str, Enum):
    """How component costs are rounded before they are summed."""

    EXACT = "exact"  # unrounded internals, rounding only at presentation
    PAPER = "paper"  # cents for costs, mills for revenue, as in the published ledger


@dataclass(frozen=True)
class EconReport:
    """Full economic breakdown for one policy (pre-run, per-run, profitability)."""

    hardware_cost: float
    training_cost: float
    pre_run_total: float
    energy_cost: float
    maintenance_cost: float
    rescue_cost: float
    run_cost_total: float
    revenue: float
    profit: float
    bep: int | None
    bep_ratio: float | None
    cost_shares: Mapping[str, float] = field(default_factory=dict)
    sla_compliance: float = 0.0
    collision_rate: float = 0.0
    training_to_hardware_ratio: float | None = None
    time_to_profitability_days: float | None = None
    ledger: LedgerRounding = LedgerRounding.EXACT

    @property
    def viable(self) -> bool:
        return self.bep is not None


# ═════════════════════════════════════════════════════════════════
# Pre-run costs
# ═════════════════════════════════════════════════════════════════


def hardware_cost(bom: HardwareBOM) -> float:
    """Total upfront hardware investment (exact sum, no rounding)."""
    if not isinstance(bom, HardwareBOM) or not bom.items:
        raise ValidationError("hardware_cost requires a non-empty HardwareBOM")
    return bom.total()


def training_cost(stats: TrainingStats, params: CostParams, hardware: float) -> float:
    """
    Hardware wear accumulated while collecting training data:

        c_shock × impulse × collision_rate × episodes × C_hardware
    """
    _require(_finite(hardware) and hardware >= 0, f"hardware cost must be >= 0 (got {hardware})")
    return params.c_shock * stats.mean_collision_impulse * stats.collision_rate * stats.episodes * hardware


# ═════════════════════════════════════════════════════════════════
# Run costs
# ═════════════════════════════════════════════════════════════════


def energy_cost(metrics: RunMetrics, params: CostParams) -> float:
    """E_kWh × c_elec with E_kWh = P_avg (kW) × t_run (hr)."""
    return (metrics.mean_power / 1000.0) * metrics.runtime * params.c_elec


def maintenance_cost(metrics: RunMetrics, params: CostParams, hardware: float) -> float:
    """Expected collision wear per run: c_shock × impulse × collision_rate × C_hardware."""
    _require(_finite(hardware) and hardware >= 0, f"hardware cost must be >= 0 (got {hardware})")
    expected_collisions = metrics.collision_rate * metrics.collision_scale
    return params.c_shock * metrics.mean_collision_impulse * expected_collisions * hardware


def rescue_cost(params: CostParams) -> float:
    """Expected human-intervention cost: P(failure) × c_human_op."""
    return params.p_failure * params.c_human_op


# ═════════════════════════════════════════════════════════════════
# Revenue
# ═════════════════════════════════════════════════════════════════


def sla_factor(delivery_time: float, params: CostParams) -> int:
    """1 when the delivery meets the SLA cutoff (inclusive), else 0."""
    _require(_finite(delivery_time) and delivery_time >= 0, f"delivery_time must be >= 0 (got {delivery_time})")
    return 1 if delivery_time <= params.sla_timeout else 0


def revenue(metrics: RunMetrics, params: CostParams) -> float:
    """Expected revenue per run: r_base × aggregate SLA compliance."""
    return params.r_base * metrics.sla_compliance


# ═════════════════════════════════════════════════════════════════
# Profitability
# ═════════════════════════════════════════════════════════════════


def profit_per_run(revenue_per_run: float, *run_costs: float) -> float:
    """revenue − Σ run-cost components."""
    return revenue_per_run - sum(run_costs)


def cumulative_position(pre_run_total: float, profit: float, n_runs: int) -> float:
    """Net position after n runs; negative values are cumulative losses."""
    _require(n_runs >= 0, f"n_runs must be >= 0 (got {n_runs})")
    return n_runs * profit - pre_run_total


def break_even_ratio(pre_run_total: float, profit: float) -> float | None:
    """Raw (fractional) break-even run count, None when not viable."""
    _require(_finite(pre_run_total) and pre_run_total >= 0, f"pre_run_total must be >= 0 (got {pre_run_total})")
    if profit <= VIABILITY_EPSILON:
        return None
    return pre_run_total / profit


def break_even(pre_run_total: float, profit: float) -> int | None:
    """
    Smallest whole number of runs n with cumulative_position(n) >= 0.

    Returns None (not viable) when profit per run is at or below
    VIABILITY_EPSILON. The ceiling of the ratio is nudged against
    cumulative_position so both always agree under float rounding.
    """
    ratio = break_even_ratio(pre_run_total, profit)
    if ratio is None:
        return None

    n = max(0, math.ceil(ratio))
    while n > 0 and cumulative_position(pre_run_total, profit, n - 1) >= 0:
        n -= 1
    while cumulative_position(pre_run_total, profit, n) < 0:
        n += 1
    return n


def time_to_profitability(bep: int | None, deliveries_per_day: float | None) -> float | None:
    """Calendar days to break-even; None when not viable or cadence unknown."""
    if bep is None or deliveries_per_day is None:
        return None
    _require(deliveries_per_day > 0, f"deliveries_per_day must be > 0 (got {deliveries_per_day})")
    return bep / deliveries_per_day


# ═════════════════════════════════════════════════════════════════
# Projection & report assembly
# ═════════════════════════════════════════════════════════════════


def project(metrics: RunMetrics, policy: ProjectionPolicy) -> RunMetrics:
    """
    Normalize micro-testbed metrics to the target delivery.

    Rates, impulse, power and SLA compliance pass through unchanged;
    only the runtime is replaced (and collisions scaled when enabled).
    """
    if policy.target_runtime <= 0:
        raise ValidationError(f"Projection target_runtime must be > 0 (got {policy.target_runtime})")

    changes: dict[str, Any] = {"runtime": policy.target_runtime}
    if policy.distance_scale_maintenance:
        changes["collision_scale"] = metrics.collision_scale * policy.distance_ratio
    return replace(metrics, **changes)


def _cost_shares(energy: float, maintenance: float, rescue: float) -> dict[str, float]:
    total = energy + maintenance + rescue
    if total <= 0:
        return {name: 0.0 for name in COST_COMPONENTS}
    return {
        "energy": energy / total,
        "maintenance": maintenance / total,
        "rescue": rescue / total,
    }


def build_report(
    bom: HardwareBOM,
    training: TrainingStats,
    metrics: RunMetrics,
    params: CostParams,
    projection: ProjectionPolicy | None = None,
    ledger: LedgerRounding | str = LedgerRounding.EXACT,
) -> EconReport:
    """
    Compose every cost, revenue and profitability figure into one report.

    Args:
        bom: hardware bill of materials
        training: training-run statistics (data collection wear)
        metrics: evaluation metrics (unprojected testbed values)
        params: economic coefficients
        projection: testbed → delivery projection (None = use metrics as-is)
        ledger: EXACT keeps full precision; PAPER rounds each component to
            its presented precision (cents, revenue in mills) before summing

    Returns:
        EconReport satisfying all identity invariants for the chosen ledger
    """
    ledger = LedgerRounding(ledger)
    run_metrics = project(metrics, projection) if projection is not None else metrics

    hw = hardware_cost(bom)
    train = training_cost(training, params, hw)
    energy = energy_cost(run_metrics, params)
    maint = maintenance_cost(run_metrics, params, hw)
    rescue = rescue_cost(params)
    rev = revenue(run_metrics, params)

    if ledger is LedgerRounding.PAPER:
        hw, train = round_half_even(hw, 2), round_half_even(train, 2)
        energy, maint, rescue = (round_half_even(v, 2) for v in (energy, maint, rescue))
        rev = round_half_even(rev, 3)

    pre_run = hw + train
    run_total = energy + maint + rescue
    profit = profit_per_run(rev, energy, maint, rescue)
    bep = break_even(pre_run, profit)

    report = EconReport(
        hardware_cost=hw,
        training_cost=train,
        pre_run_total=pre_run,
        energy_cost=energy,
        maintenance_cost=maint,
        rescue_cost=rescue,
        run_cost_total=run_total,
        revenue=rev,
        profit=profit,
        bep=bep,
        bep_ratio=break_even_ratio(pre_run, profit),
        cost_shares=_cost_shares(energy, maint, rescue),
        sla_compliance=run_metrics.sla_compliance,
        collision_rate=run_metrics.collision_rate,
        training_to_hardware_ratio=(train / hw) if hw > 0 else None,
        time_to_profitability_days=time_to_profitability(bep, params.deliveries_per_day),
        ledger=ledger,
    )
    logger.debug(
        "Report: run_cost=%.4f revenue=%.4f profit=%.4f bep=%s (%s ledger)",
        run_total,
        rev,
        profit,
        bep,
        ledger.value,
    )
    return report
