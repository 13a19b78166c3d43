"""
Episode-log schema, NDJSON ingestion/validation and aggregation.

Log format: UTF-8, one JSON object per line, keys in this fixed order:

    episode_id, scenario_id, policy_id, seed, termination, duration_s,
    distance_m, collision_impulse_ns, mean_power_w, max_power_w, energy_wh

Example line:
    {"episode_id": "ep-000000", "scenario_id": "l2", "policy_id": "potential-field",
     "seed": 42, "termination": "Arrive", "duration_s": 11.3, ...}

Aggregation turns a list of EpisodeRecord into an EvaluationSummary
(termination rates, conditional impulse moments, power moments), which
converts to the RunMetrics / TrainingStats consumed by econ_core.
Summaries of shards merge exactly like the summary of the concatenated log.
"""

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping

from costnav.econ_core import RunMetrics, TrainingStats
from costnav.errors import LogFormatError, LogValidationError, ValidationError

logger = logging.getLogger(__name__)

LOG_FIELDS = (
    "episode_id",
    "scenario_id",
    "policy_id",
    "seed",
    "termination",
    "duration_s",
    "distance_m",
    "collision_impulse_ns",
    "mean_power_w",
    "max_power_w",
    "energy_wh",
)

TEXT_FIELDS = ("episode_id", "scenario_id", "policy_id")
FLOAT_FIELDS = ("duration_s", "distance_m", "collision_impulse_ns", "mean_power_w", "max_power_w", "energy_wh")

# energy_wh must match mean_power_w × duration_s / 3600 within this relative tolerance
ENERGY_TOLERANCE = 0.01
DEFAULT_TIMEOUT = 600.0


class Termination(str, Enum):
    ARRIVE = "Arrive"
    COLLISION = "Collision"
    TIMEOUT = "Timeout"


# ═════════════════════════════════════════════════════════════════
# EpisodeRecord
# ═════════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class EpisodeRecord:
    """One navigation episode as written to the log (field names = wire names)."""

    episode_id: str
    scenario_id: str
    policy_id: str
    seed: int
    termination: Termination
    duration_s: float
    distance_m: float
    collision_impulse_ns: float
    mean_power_w: float
    max_power_w: float
    energy_wh: float

    def __post_init__(self):
        object.__setattr__(self, "termination", Termination(self.termination))

    def violations(self, timeout: float | None = DEFAULT_TIMEOUT) -> list[str]:
        """Return invariant violations (empty list = valid)."""
        problems = []
        for name in FLOAT_FIELDS:
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                problems.append(f"{name} must be finite and >= 0 (got {value})")
        if problems:
            return problems

        if self.collision_impulse_ns > 0 and self.termination is not Termination.COLLISION:
            problems.append(f"collision_impulse_ns > 0 with termination {self.termination.value}")
        if self.max_power_w < self.mean_power_w * (1 - 1e-9):
            problems.append(f"max_power_w ({self.max_power_w}) < mean_power_w ({self.mean_power_w})")

        expected_wh = self.mean_power_w * self.duration_s / 3600.0
        if abs(self.energy_wh - expected_wh) > ENERGY_TOLERANCE * expected_wh + 1e-9:
            problems.append(
                f"energy_wh {self.energy_wh} differs from mean_power × duration ({expected_wh:.6f}) by > 1%"
            )

        if self.termination is Termination.TIMEOUT and timeout is not None and self.duration_s < timeout:
            problems.append(f"Timeout episode shorter than the {timeout} s timeout (duration {self.duration_s})")
        return problems

    def to_dict(self) -> dict[str, Any]:
        row = {name: getattr(self, name) for name in LOG_FIELDS}
        row["termination"] = self.termination.value
        return row

    @classmethod
    def from_dict(
        cls,
        row: Mapping[str, Any],
        line_no: int | None = None,
        strict: bool = True,
    ) -> "EpisodeRecord":
        """Parse one decoded log object, type-checking every field."""
        unknown = sorted(set(row) - set(LOG_FIELDS))
        if unknown:
            if strict:
                raise LogFormatError("unknown key", line_no=line_no, field=unknown[0])
            logger.warning("Line %s: ignoring unknown keys %s", line_no, unknown)

        values: dict[str, Any] = {}
        for name in LOG_FIELDS:
            if name not in row:
                raise LogFormatError("missing field", line_no=line_no, field=name)
            value = row[name]
            if name in TEXT_FIELDS:
                if not isinstance(value, str) or not value:
                    raise LogFormatError("expected non-empty text", line_no=line_no, field=name)
            elif name == "seed":
                if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < 2**64:
                    raise LogFormatError("expected unsigned 64-bit integer", line_no=line_no, field=name)
            elif name == "termination":
                try:
                    value = Termination(value)
                except ValueError:
                    raise LogFormatError(
                        f"expected one of {[t.value for t in Termination]} (got {value!r})",
                        line_no=line_no,
                        field=name,
                    )
            else:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise LogFormatError("expected a number", line_no=line_no, field=name)
                value = float(value)
            values[name] = value
        return cls(**values)


def dumps_record(record: EpisodeRecord) -> str:
    """Canonical single-line encoding (no trailing newline)."""
    return json.dumps(record.to_dict(), ensure_ascii=False)


def write_log(records: Iterable[EpisodeRecord], path: str | Path) -> Path:
    """Write records as canonical NDJSON; parent directories are created."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(dumps_record(record) + "\n")
            count += 1
    logger.info("Wrote %d episode records to %s", count, path)
    return path


def parse_lines(
    lines: Iterable[str],
    strict: bool = True,
    timeout: float | None = DEFAULT_TIMEOUT,
) -> list[EpisodeRecord]:
    """Parse NDJSON lines; raises on the first malformed line, then on invariant violations."""
    records = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            if strict:
                raise LogFormatError("blank line", line_no=line_no)
            logger.warning("Line %d: skipping blank line", line_no)
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as e:
            raise LogFormatError(f"invalid JSON ({e.msg})", line_no=line_no) from e
        if not isinstance(row, dict):
            raise LogFormatError("expected a JSON object", line_no=line_no)
        records.append(EpisodeRecord.from_dict(row, line_no=line_no, strict=strict))

    bad = {}
    for record in records:
        problems = record.violations(timeout)
        if problems:
            bad[record.episode_id] = problems
    if bad:
        for episode_id, problems in bad.items():
            logger.error("❌ %s: %s", episode_id, "; ".join(problems))
        raise LogValidationError("episode records violate log invariants", episode_ids=list(bad))
    return records


def read_log(
    path: str | Path,
    strict: bool = True,
    timeout: float | None = DEFAULT_TIMEOUT,
) -> list[EpisodeRecord]:
    """
    Read and validate an episode log.

    Args:
        path: NDJSON log file
        strict: reject unknown keys / blank lines (lenient mode warns and skips)
        timeout: scenario timeout used for the Timeout-duration check (None = skip)

    Returns:
        Records in file order
    """
    with open(path, encoding="utf-8") as f:
        records = parse_lines(f, strict=strict, timeout=timeout)
    logger.info("Read %d episode records from %s", len(records), path)
    return records


@dataclass
class ValidationResult:
    path: str
    ok: bool
    n_records: int = 0
    errors: list[str] = field(default_factory=list)


def validate_log(path: str | Path, strict: bool = True, timeout: float | None = DEFAULT_TIMEOUT) -> ValidationResult:
    """Non-raising wrapper around read_log for the `validate` command."""
    try:
        records = read_log(path, strict=strict, timeout=timeout)
    except ValidationError as e:
        return ValidationResult(path=str(path), ok=False, errors=[str(e)])
    return ValidationResult(path=str(path), ok=True, n_records=len(records))


# ═════════════════════════════════════════════════════════════════
# Aggregation
# ═════════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class MomentAccumulator:
    """
    Exact running sums for a mean / sample standard deviation.

    Sums are kept as Fractions, so merging shards is plain addition and
    the result does not depend on record order or sharding. The mean
    equals math.fsum(values) / n.
    """

    n: int = 0
    total: Fraction = Fraction(0)
    total_sq: Fraction = Fraction(0)

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        return MomentAccumulator(self.n + other.n, self.total + other.total, self.total_sq + other.total_sq)

    @property
    def mean(self) -> float:
        """0 for an empty accumulator."""
        if self.n == 0:
            return 0.0
        return float(self.total) / self.n

    @property
    def variance(self) -> Fraction:
        """Exact sample variance (n − 1); 0 for fewer than two values."""
        if self.n < 2:
            return Fraction(0)
        return (self.total_sq - self.total * self.total / self.n) / (self.n - 1)

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @classmethod
    def of(cls, values: Iterable[float]) -> "MomentAccumulator":
        exact = [Fraction(v) for v in values]
        return cls(len(exact), sum(exact, Fraction(0)), sum((v * v for v in exact), Fraction(0)))

    @classmethod
    def from_moments(cls, n: int, mean: float, std: float) -> "MomentAccumulator":
        """Accumulator with the given count, mean and sample std (published summaries)."""
        if n == 0:
            return cls()
        total = Fraction(mean) * n
        variance = Fraction(std) ** 2 if n >= 2 else Fraction(0)
        return cls(n, total, variance * (n - 1) + total * total / n)


# accumulator name → (mean field, std field) on EvaluationSummary
MOMENT_FIELDS = {
    "impulse": ("impulse_mean", "impulse_std"),
    "impulse_all": ("impulse_mean_all", "impulse_std_all"),
    "power": ("power_mean", "power_std"),
    "power_max": ("power_max_mean", "power_max_std"),
    "duration": ("duration_mean", None),
    "distance": ("distance_mean", None),
}


@dataclass(frozen=True)
class EvaluationSummary:
    """
    Aggregate statistics of an evaluation log.

    impulse_* moments are conditional on collision (0 when there are no
    collisions); impulse_*_all include zero-impulse episodes. `moments`
    keeps the exact sums behind each mean so shard summaries merge
    without loss.
    """

    n_episodes: int
    arrival_count: int
    collision_count: int
    timeout_count: int
    on_time_count: int
    impulse_mean: float
    impulse_std: float
    impulse_mean_all: float
    impulse_std_all: float
    power_mean: float
    power_std: float
    power_max_mean: float
    power_max_std: float
    duration_mean: float
    distance_mean: float
    sla_timeout: float | None = DEFAULT_TIMEOUT
    moments: Mapping[str, MomentAccumulator] = field(default_factory=dict, compare=False, repr=False)

    @property
    def arrival_rate(self) -> float:
        return self.arrival_count / self.n_episodes

    @property
    def collision_rate(self) -> float:
        return self.collision_count / self.n_episodes

    @property
    def timeout_rate(self) -> float:
        return self.timeout_count / self.n_episodes

    @property
    def sla_compliance(self) -> float:
        return self.on_time_count / self.n_episodes

    def moment(self, name: str) -> MomentAccumulator:
        """Exact sums for `name`, rebuilt from the reported mean / std when they were not kept."""
        if name in self.moments:
            return self.moments[name]
        mean_field, std_field = MOMENT_FIELDS[name]
        n = self.collision_count if name == "impulse" else self.n_episodes
        std = getattr(self, std_field) if std_field else 0.0
        return MomentAccumulator.from_moments(n, getattr(self, mean_field), std)


def _summary(
    counts: tuple[int, int, int, int, int],
    moments: Mapping[str, MomentAccumulator],
    sla_timeout: float | None,
) -> EvaluationSummary:
    n, arrivals, collisions, timeouts, on_time = counts
    return EvaluationSummary(
        n_episodes=n,
        arrival_count=arrivals,
        collision_count=collisions,
        timeout_count=timeouts,
        on_time_count=on_time,
        impulse_mean=moments["impulse"].mean,
        impulse_std=moments["impulse"].std,
        impulse_mean_all=moments["impulse_all"].mean,
        impulse_std_all=moments["impulse_all"].std,
        power_mean=moments["power"].mean,
        power_std=moments["power"].std,
        power_max_mean=moments["power_max"].mean,
        power_max_std=moments["power_max"].std,
        duration_mean=moments["duration"].mean,
        distance_mean=moments["distance"].mean,
        sla_timeout=sla_timeout,
        moments=dict(moments),
    )


def aggregate(
    records: Iterable[EpisodeRecord],
    sla_timeout: float | None = DEFAULT_TIMEOUT,
) -> EvaluationSummary:
    """
    Summarize an evaluation log.

    Rates are counts / n; impulse moments use only collision episodes;
    power moments use every episode; spreads are sample (n − 1) std.
    An arrival counts toward SLA compliance when duration ≤ sla_timeout.
    Means are exact: each equals math.fsum(values) / n.
    """
    records = list(records)
    if not records:
        raise ValidationError("Cannot aggregate an empty episode log")

    kinds = Counter(r.termination for r in records)
    on_time = sum(
        1
        for r in records
        if r.termination is Termination.ARRIVE and (sla_timeout is None or r.duration_s <= sla_timeout)
    )
    moments = {
        "impulse": MomentAccumulator.of(
            r.collision_impulse_ns for r in records if r.termination is Termination.COLLISION
        ),
        "impulse_all": MomentAccumulator.of(r.collision_impulse_ns for r in records),
        "power": MomentAccumulator.of(r.mean_power_w for r in records),
        "power_max": MomentAccumulator.of(r.max_power_w for r in records),
        "duration": MomentAccumulator.of(r.duration_s for r in records),
        "distance": MomentAccumulator.of(r.distance_m for r in records),
    }
    counts = (
        len(records),
        kinds[Termination.ARRIVE],
        kinds[Termination.COLLISION],
        kinds[Termination.TIMEOUT],
        on_time,
    )
    return _summary(counts, moments, sla_timeout)


def merge_summaries(a: EvaluationSummary, b: EvaluationSummary) -> EvaluationSummary:
    """Combine shard summaries; equals aggregate() over the concatenated shards."""
    if a.sla_timeout != b.sla_timeout:
        raise ValidationError(
            f"Cannot merge summaries with different SLA timeouts ({a.sla_timeout} vs {b.sla_timeout})"
        )
    counts = (
        a.n_episodes + b.n_episodes,
        a.arrival_count + b.arrival_count,
        a.collision_count + b.collision_count,
        a.timeout_count + b.timeout_count,
        a.on_time_count + b.on_time_count,
    )
    moments = {name: a.moment(name).merge(b.moment(name)) for name in MOMENT_FIELDS}
    return _summary(counts, moments, a.sla_timeout)



# ═════════════════════════════════════════════════════════════════
# Conversion to economic inputs
# ═════════════════════════════════════════════════════════════════


def to_run_metrics(summary: EvaluationSummary, timeout: float | None = None) -> RunMetrics:
    """
    Economic view of an evaluation summary (runtime in hours, unprojected).

    sla_compliance is the on-time arrival rate; `timeout`, when given,
    must match the timeout the summary was aggregated with.
    """
    if timeout is not None and summary.sla_timeout is not None and timeout != summary.sla_timeout:
        raise ValidationError(
            f"Summary was aggregated with sla_timeout={summary.sla_timeout}, not {timeout}; re-aggregate the log"
        )
    return RunMetrics(
        sla_compliance=summary.sla_compliance,
        collision_rate=summary.collision_rate,
        mean_collision_impulse=summary.impulse_mean,
        mean_power=summary.power_mean,
        runtime=summary.duration_mean / 3600.0,
    )


def training_stats_from_log(records: Iterable[EpisodeRecord]) -> TrainingStats:
    """Training-run statistics: episode count, collision rate, conditional impulse, mean time."""
    summary = aggregate(records, sla_timeout=None)
    return TrainingStats(
        episodes=summary.n_episodes,
        collision_rate=summary.collision_rate,
        mean_collision_impulse=summary.impulse_mean,
        mean_episode_time=summary.duration_mean,
    )
