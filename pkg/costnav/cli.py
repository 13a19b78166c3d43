"""
Batch command-line entry point: simulate → evaluate → sensitivity / breakeven → leaderboard.

Exit codes:
    0  success
    1  validation error (bad config value, malformed log, invalid range)
    2  I/O error (missing input, unwritable output)
    3  infeasible analysis (no frontier root in the requested bracket)

Precedence for every setting: command-line flag > --config file > built-in default.
Without --log, economic commands use the bundled published baseline (config/paper_baseline.yml).

Usage:
    python -m costnav simulate --level l2 --policy potential-field --episodes 100 --seed 7 --out runs.log
    python -m costnav evaluate --paper-baseline
    python -m costnav breakeven --collision 0.05 --sla 0.90
    python -m costnav sensitivity --axis collision_rate:0:1:11 --axis sla_compliance:1:1:1 --free-axis collision_rate
    python -m costnav leaderboard --manifest config/leaderboard.yml --format csv --out data/reports/leaderboard.csv
    python -m costnav validate --log runs.log
"""

import functools
import logging
from dataclasses import replace
from typing import Any, Callable

import click

from costnav.analysis import (
    SWEEP_AXES,
    SweepAxis,
    SweepBaseline,
    SweepSpec,
    bep_curve,
    frontier,
    leaderboard,
    load_leaderboard_manifest,
    require_roots,
    sweep,
)
from costnav.config import LEADERBOARD_MANIFEST_FILE, RunConfig, resolve_run_config
from costnav.econ_core import RunMetrics, TrainingStats, cumulative_position
from costnav.errors import ConfigError, InfeasibleAnalysisError, SimulationError, ValidationError
from costnav.fixtures import EconomicsConfig, load_economics, load_paper_baseline
from costnav.log_model import (
    DEFAULT_TIMEOUT,
    aggregate,
    read_log,
    to_run_metrics,
    training_stats_from_log,
    validate_log,
    write_log,
)
from costnav.microsim import load_presets, run_batch, termination_counts
from costnav.reporting import emit_report, format_bep, format_usd

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_INFEASIBLE = 3

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def handle_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """Map the CostNav error hierarchy onto exit codes."""

    def fail(ctx: click.Context, error: Exception, code: int) -> None:
        logger.debug("%s in %s", type(error).__name__, func.__name__, exc_info=True)
        click.echo(f"❌ {error}", err=True)
        ctx.exit(code)

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return func(*args, **kwargs)
        except InfeasibleAnalysisError as e:
            fail(ctx, e, EXIT_INFEASIBLE)
        except (ValidationError, SimulationError) as e:
            fail(ctx, e, EXIT_VALIDATION)
        except OSError as e:
            fail(ctx, e, EXIT_IO)

    return wrapper


def _options(*decorators: Callable) -> Callable:
    def apply(func: Callable) -> Callable:
        for decorator in reversed(decorators):
            func = decorator(func)
        return func

    return apply


econ_options = _options(
    click.option("--c-elec", type=float, default=None, help="Electricity rate (USD per kWh)."),
    click.option("--c-shock", type=float, default=None, help="Hardware-cost fraction per N·s of impulse."),
    click.option("--r-base", type=float, default=None, help="Base delivery fee (USD)."),
    click.option("--sla-timeout", type=float, default=None, help="Delivery-time cutoff (seconds)."),
    click.option("--p-failure", type=float, default=None, help="Probability a run needs a human rescue."),
    click.option("--c-human-op", type=float, default=None, help="Cost of one human intervention (USD)."),
    click.option("--deliveries-per-day", type=float, default=None, help="Enables time to profitability (days)."),
    click.option("--target-runtime", type=float, default=None, help="Projected delivery runtime (hours)."),
    click.option(
        "--distance-scale-maintenance/--no-distance-scale-maintenance",
        default=None,
        help="Scale expected collisions by target/source distance.",
    ),
    click.option("--ledger", "ledger_rounding", default=None, help="Ledger rounding: exact or paper."),
)

source_options = _options(
    click.option("--log", "log_in", default=None, help="Evaluation episode log (NDJSON)."),
    click.option("--paper-baseline", is_flag=True, help="Use the bundled published baseline instead of a log."),
    click.option("--training-log", default=None, help="Training episode log for the data-collection cost."),
    click.option("--counterfactual", default=None, help="Named what-if preset from the baseline bundle."),
    click.option("--lenient", is_flag=True, help="Warn on unknown log keys instead of failing."),
)

output_options = _options(
    click.option("--format", "fmt", default=None, help="Output format: table, csv or svg."),
    click.option("--out", default=None, help="Output file (stdout when omitted; required for svg)."),
)


def _config(ctx: click.Context, **overrides: Any) -> RunConfig:
    return resolve_run_config(ctx.obj.get("config_path"), overrides)


def _strict(lenient: bool) -> bool | None:
    return False if lenient else None


def _emit(artifact: Any, cfg: RunConfig) -> None:
    result = emit_report(artifact, cfg.format, cfg.report_out)
    if cfg.report_out is None:
        click.echo(result, nl=False)
    else:
        click.echo(f"✅ Wrote {cfg.format} output to {result}")


def _training(cfg: RunConfig, default: TrainingStats) -> TrainingStats:
    if cfg.training_log is None:
        return default
    return training_stats_from_log(read_log(cfg.training_log, strict=cfg.strict, timeout=None))


def _with_counterfactual(metrics: RunMetrics, name: str | None) -> RunMetrics:
    if name is None:
        return metrics
    baseline = load_paper_baseline()
    if name not in baseline.counterfactuals:
        raise ConfigError(f"Unknown counterfactual {name!r}; available: {sorted(baseline.counterfactuals)}")
    return replace(metrics, **baseline.counterfactuals[name])


def _economic_inputs(
    cfg: RunConfig, paper_baseline: bool, counterfactual: str | None
) -> tuple[EconomicsConfig, TrainingStats, RunMetrics]:
    """Economics, training stats and (unprojected) metrics from a log or the bundled baseline."""
    baseline = load_paper_baseline()
    if paper_baseline or cfg.log_in is None:
        logger.info("Using bundled baseline '%s'", baseline.policy_id)
        economics = baseline.economics.with_overrides(cfg)
        metrics = baseline.metrics
    else:
        economics = load_economics().with_overrides(cfg)
        timeout = economics.params.sla_timeout
        summary = aggregate(read_log(cfg.log_in, strict=cfg.strict, timeout=timeout), sla_timeout=timeout)
        metrics = to_run_metrics(summary, timeout)
        logger.info(
            "Aggregated %d episodes: arrival %.3f, collision %.3f, timeout %.3f",
            summary.n_episodes,
            summary.arrival_rate,
            summary.collision_rate,
            summary.timeout_rate,
        )
    return economics, _training(cfg, baseline.training), _with_counterfactual(metrics, counterfactual)


def parse_axis(text: str) -> SweepAxis:
    """NAME:LO:HI:STEPS → SweepAxis."""
    parts = text.split(":")
    if len(parts) != 4:
        raise ValidationError(f"Axis must look like name:lo:hi:steps (got {text!r})")
    name, lo, hi, steps = parts
    try:
        return SweepAxis(name, float(lo), float(hi), int(steps))
    except ValueError as e:
        raise ValidationError(f"Invalid axis {text!r}: {e}") from e


# ═════════════════════════════════════════════════════════════════
# Commands
# ═════════════════════════════════════════════════════════════════


@click.group()
@click.option("--config", "config_path", default=None, help="Flat YAML RunConfig file.")
@click.option("--verbose", is_flag=True, help="Debug logging.")
@click.pass_context
def cli(ctx: click.Context, config_path: str | None, verbose: bool):
    """CostNav: navigation episode logs → costs, revenue, profit and break-even."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path
    logging.getLogger("costnav").setLevel(logging.DEBUG if verbose else logging.INFO)


@cli.command()
@click.option("--level", default=None, help="Scenario level: l1 or l2.")
@click.option("--policy", default=None, help="straight-line, potential-field or noisy-heading.")
@click.option("--episodes", type=int, default=None, help="Number of episodes.")
@click.option("--seed", type=int, default=None, help="Master seed.")
@click.option("--workers", type=int, default=None, help="Worker processes.")
@click.option("--out", "log_out", default=None, help="Episode log to write.")
@click.pass_context
@handle_errors
def simulate(ctx, level, policy, episodes, seed, workers, log_out):
    """Run the micro-simulator and write a canonical episode log."""
    cfg = _config(ctx, level=level, policy=policy, episodes=episodes, seed=seed, workers=workers, log_out=log_out)
    if cfg.log_out is None:
        raise ConfigError("simulate needs an output log (--out or log_out in the config file)")

    presets = load_presets()
    scenario = presets.scenario(cfg.level, master_seed=cfg.seed, n_episodes=cfg.episodes)
    records = run_batch(scenario, presets.policy(cfg.policy), cfg.workers, presets.robot, presets.power)
    path = write_log(records, cfg.log_out)

    counts = termination_counts(records)
    click.echo(
        f"✅ {len(records)} episodes → {path}: "
        f"Arrive={counts['Arrive']} Collision={counts['Collision']} Timeout={counts['Timeout']}"
    )


@cli.command()
@source_options
@econ_options
@output_options
@click.pass_context
@handle_errors
def evaluate(ctx, log_in, paper_baseline, training_log, counterfactual, lenient, fmt, out, **econ):
    """Aggregate a log (or the bundled baseline) into an economic report."""
    cfg = _config(
        ctx, log_in=log_in, training_log=training_log, strict=_strict(lenient), format=fmt, report_out=out, **econ
    )
    economics, training, metrics = _economic_inputs(cfg, paper_baseline, counterfactual)
    report = economics.report(training, metrics)
    logger.info("Profit %.4f $/run, BEP %s", report.profit, format_bep(report.bep))
    _emit(report, cfg)


@cli.command()
@source_options
@econ_options
@output_options
@click.option("--axis", "axes", multiple=True, help="Sweep axis as name:lo:hi:steps (repeatable).")
@click.option("--free-axis", default=None, help="Solve profit = 0 along this axis instead of sweeping.")
@click.option("--workers", type=int, default=None, help="Worker threads for sweep cells.")
@click.pass_context
@handle_errors
def sensitivity(
    ctx, log_in, paper_baseline, training_log, counterfactual, lenient, fmt, out, axes, free_axis, workers, **econ
):
    """Sweep economic variables over a grid, or solve the viability frontier."""
    cfg = _config(
        ctx,
        log_in=log_in,
        training_log=training_log,
        strict=_strict(lenient),
        format=fmt,
        report_out=out,
        workers=workers,
        **econ,
    )
    if not axes:
        raise ValidationError(f"sensitivity needs at least one --axis over {list(SWEEP_AXES)}")
    economics, training, metrics = _economic_inputs(cfg, paper_baseline, counterfactual)
    spec = SweepSpec(
        axes=tuple(parse_axis(a) for a in axes),
        baseline=SweepBaseline.from_economics(economics, training, metrics),
    )

    if free_axis is None:
        _emit(sweep(spec, workers=cfg.workers), cfg)
        return

    points = frontier(spec, free_axis)
    _emit(points, cfg)
    require_roots(points)


@cli.command()
@source_options
@econ_options
@output_options
@click.option("--collision", type=float, default=None, help="Override the collision rate.")
@click.option("--sla", type=float, default=None, help="Override the SLA compliance.")
@click.option("--curve", "n_max", type=int, default=None, help="Also compute the cumulative curve up to N runs.")
@click.pass_context
@handle_errors
def breakeven(
    ctx, log_in, paper_baseline, training_log, counterfactual, lenient, fmt, out, collision, sla, n_max, **econ
):
    """Print the break-even point (and optionally emit the cumulative curve)."""
    cfg = _config(
        ctx, log_in=log_in, training_log=training_log, strict=_strict(lenient), format=fmt, report_out=out, **econ
    )
    economics, training, metrics = _economic_inputs(cfg, paper_baseline, counterfactual)
    changes = {"collision_rate": collision, "sla_compliance": sla}
    metrics = replace(metrics, **{k: v for k, v in changes.items() if v is not None})
    report = economics.report(training, metrics)

    click.echo(f"Profit ($/run): {format_usd(report.profit, 3)}")
    click.echo(f"BEP: {format_bep(report.bep)}")
    if n_max is None:
        return

    position = cumulative_position(report.pre_run_total, report.profit, n_max)
    click.echo(f"Cumulative position after {n_max} runs ($): {format_usd(position, 0)}")
    if cfg.report_out is not None:
        _emit(bep_curve(report, n_max), cfg)


@cli.command(name="leaderboard")
@econ_options
@output_options
@click.option("--manifest", default=None, help="Leaderboard manifest (policy_id → log).")
@click.option("--training-log", default=None, help="Shared training episode log.")
@click.option("--lenient", is_flag=True, help="Skip policies whose logs fail validation.")
@click.pass_context
@handle_errors
def leaderboard_cmd(ctx, fmt, out, manifest, training_log, lenient, **econ):
    """Rank policies by profit per run."""
    cfg = _config(
        ctx, manifest=manifest, training_log=training_log, strict=_strict(lenient), format=fmt, report_out=out, **econ
    )
    entries = load_leaderboard_manifest(cfg.manifest or LEADERBOARD_MANIFEST_FILE)
    economics = load_economics().with_overrides(cfg)
    training = _training(cfg, load_paper_baseline().training)
    _emit(leaderboard(entries, economics, training, strict=cfg.strict), cfg)


@cli.command()
@click.option("--log", "log_in", default=None, help="Episode log to check.")
@click.option("--sla-timeout", type=float, default=None, help="Scenario timeout for the Timeout-duration check.")
@click.option("--lenient", is_flag=True, help="Allow unknown keys and blank lines.")
@click.pass_context
@handle_errors
def validate(ctx, log_in, sla_timeout, lenient):
    """Check an episode log against the schema and record invariants."""
    cfg = _config(ctx, log_in=log_in, sla_timeout=sla_timeout, strict=_strict(lenient))
    if cfg.log_in is None:
        raise ConfigError("validate needs a log (--log or log_in in the config file)")

    result = validate_log(cfg.log_in, strict=cfg.strict, timeout=cfg.sla_timeout or DEFAULT_TIMEOUT)
    if not result.ok:
        for error in result.errors:
            click.echo(f"❌ {result.path}: {error}", err=True)
        ctx.exit(EXIT_VALIDATION)
    click.echo(f"✅ {result.path}: {result.n_records} valid episode records")


def main():
    logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
    cli(obj={})


if __name__ == "__main__":
    main()
