"""
Report emission: human-readable tables, versioned CSV and SVG charts.

Artifacts: EconReport, SweepGrid, BepCurve, list[FrontierPoint], list[LeaderboardRow].

Formats:
    table : plain text, USD at 2 decimals (≥ 1) or 3 decimals (< 1);
            revenue and profit at 3 decimals, pre-run costs in whole dollars
    csv   : "# schema: <artifact>/v1" comment line, then a fixed header row
    svg   : single self-contained matplotlib (Agg) chart

Usage:
    from costnav.reporting import emit_report

    print(emit_report(report, "table"))
    emit_report(curve, "csv", "data/reports/bep_curve.csv")
"""

import logging
from pathlib import Path
from typing import Any, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from costnav.analysis import BepCurve, FrontierPoint, LeaderboardRow, SweepGrid  # noqa: E402
from costnav.config import REPORT_FORMATS  # noqa: E402
from costnav.econ_core import COST_COMPONENTS, EconReport, round_half_even  # noqa: E402
from costnav.errors import ValidationError  # noqa: E402

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "v1"
RULE = "=" * 60
SVG_RC = {"svg.hashsalt": "costnav", "svg.fonttype": "none"}

REPORT_COLUMNS = [
    "hardware_cost",
    "training_cost",
    "pre_run_total",
    "energy_cost",
    "maintenance_cost",
    "rescue_cost",
    "run_cost_total",
    "revenue",
    "profit",
    "bep",
    "sla_compliance",
    "collision_rate",
    "share_energy",
    "share_maintenance",
    "share_rescue",
    "training_to_hardware_ratio",
    "ledger",
]


# ═════════════════════════════════════════════════════════════════
# Number formatting
# ═════════════════════════════════════════════════════════════════


def format_usd(value: float, places: int | None = None) -> str:
    """USD with half-even rounding: 2 decimals from $1 up, 3 below (unless `places` is given)."""
    if places is None:
        places = 2 if abs(value) >= 1 else 3
    rounded = round_half_even(value, places) + 0.0
    return f"{rounded:,.{places}f}"


def format_bep(bep: int | None) -> str:
    return "None" if bep is None else str(bep)


def _percent(value: float) -> str:
    return f"{value * 100:.2f}%"


# ═════════════════════════════════════════════════════════════════
# Artifact dispatch
# ═════════════════════════════════════════════════════════════════


def _kind(artifact: Any) -> str:
    if isinstance(artifact, EconReport):
        return "econ_report"
    if isinstance(artifact, SweepGrid):
        return "sweep_grid"
    if isinstance(artifact, BepCurve):
        return "bep_curve"
    if isinstance(artifact, (list, tuple)):
        if not artifact:
            raise ValidationError("Cannot emit an empty artifact")
        if all(isinstance(a, LeaderboardRow) for a in artifact):
            return "leaderboard"
        if all(isinstance(a, FrontierPoint) for a in artifact):
            return "frontier"
    raise ValidationError(f"Unsupported artifact type: {type(artifact).__name__}")


# ═════════════════════════════════════════════════════════════════
# Text tables
# ═════════════════════════════════════════════════════════════════


def report_text(report: EconReport) -> str:
    lines = [
        RULE,
        f"ECONOMIC REPORT (ledger: {report.ledger.value})",
        RULE,
        f"Hardware ($) {format_usd(report.hardware_cost, 0)}",
        f"Data collection ($) {format_usd(report.training_cost, 0)}",
        f"Pre-run total ($) {format_usd(report.pre_run_total, 0)}",
        "-" * 60,
        f"Energy ($/run) {format_usd(report.energy_cost)}",
        f"Maintenance ($/run) {format_usd(report.maintenance_cost)}",
        f"Rescue ($/run) {format_usd(report.rescue_cost)}",
        f"Run cost ($/run) {format_usd(report.run_cost_total)}",
        f"Revenue ($/run) {format_usd(report.revenue, 3)}",
        f"Profit ($/run) {format_usd(report.profit, 3)}",
        f"BEP (runs) {format_bep(report.bep)}",
        "-" * 60,
        f"SLA compliance {_percent(report.sla_compliance)}",
        f"Collision rate {_percent(report.collision_rate)}",
        "Cost shares " + ", ".join(f"{name} {_percent(report.cost_shares[name])}" for name in COST_COMPONENTS),
    ]
    if report.training_to_hardware_ratio is not None:
        lines.append(f"Training / hardware cost {report.training_to_hardware_ratio:.2f}x")
    if report.time_to_profitability_days is not None:
        lines.append(f"Time to profitability (days) {report.time_to_profitability_days:,.1f}")
    lines.append(RULE)
    return "\n".join(lines) + "\n"


def curve_text(curve: BepCurve, max_rows: int = 20) -> str:
    step = max(1, int(np.ceil(len(curve.runs) / max_rows)))
    idx = sorted(set(range(0, len(curve.runs), step)) | {len(curve.runs) - 1})
    lines = [RULE, "BREAK-EVEN CURVE", RULE, f"BEP (runs) {format_bep(curve.crossing)}", f"Stride {curve.stride}", ""]
    lines.append(f"{'runs':>12}  {'cumulative ($)':>18}")
    for i in idx:
        lines.append(f"{int(curve.runs[i]):>12}  {format_usd(float(curve.cumulative[i]), 0):>18}")
    lines.append(RULE)
    return "\n".join(lines) + "\n"


def _frame_text(title: str, frame: pd.DataFrame) -> str:
    return "\n".join([RULE, title, RULE, frame.to_string(index=False), RULE]) + "\n"


def render_text(artifact: Any) -> str:
    kind = _kind(artifact)
    if kind == "econ_report":
        return report_text(artifact)
    if kind == "bep_curve":
        return curve_text(artifact)

    frame = to_frame(artifact)
    for column in frame.columns:
        if column in ("run_cost", "revenue", "profit"):
            frame[column] = ["n/a" if pd.isna(v) else format_usd(v, 3) for v in frame[column]]
        elif column in ("hardware_cost", "training_cost"):
            frame[column] = [format_usd(v, 0) for v in frame[column]]
        elif column in ("energy_cost", "maintenance_cost"):
            frame[column] = [format_usd(v) for v in frame[column]]
        elif column == "bep":
            frame[column] = [format_bep(None if pd.isna(v) else int(v)) for v in frame[column]]
    titles = {"sweep_grid": "SENSITIVITY GRID", "frontier": "VIABILITY FRONTIER", "leaderboard": "LEADERBOARD"}
    return _frame_text(titles[kind], frame)


# ═════════════════════════════════════════════════════════════════
# CSV
# ═════════════════════════════════════════════════════════════════


def _bep_column(values: Sequence[int | None]) -> "pd.arrays.IntegerArray":
    return pd.array(list(values), dtype="Int64")


def _report_record(report: EconReport) -> dict[str, Any]:
    return {
        "hardware_cost": report.hardware_cost,
        "training_cost": report.training_cost,
        "pre_run_total": report.pre_run_total,
        "energy_cost": report.energy_cost,
        "maintenance_cost": report.maintenance_cost,
        "rescue_cost": report.rescue_cost,
        "run_cost_total": report.run_cost_total,
        "revenue": report.revenue,
        "profit": report.profit,
        "bep": report.bep,
        "sla_compliance": report.sla_compliance,
        "collision_rate": report.collision_rate,
        "share_energy": report.cost_shares["energy"],
        "share_maintenance": report.cost_shares["maintenance"],
        "share_rescue": report.cost_shares["rescue"],
        "training_to_hardware_ratio": report.training_to_hardware_ratio,
        "ledger": report.ledger.value,
    }


def to_frame(artifact: Any) -> pd.DataFrame:
    """Tabular view of an artifact with the documented (versioned) column order."""
    kind = _kind(artifact)

    if kind == "econ_report":
        frame = pd.DataFrame([_report_record(artifact)], columns=REPORT_COLUMNS)
        if artifact.time_to_profitability_days is not None:
            frame["time_to_profitability_days"] = artifact.time_to_profitability_days
        frame["bep"] = _bep_column(frame["bep"].tolist())
        return frame

    if kind == "bep_curve":
        return pd.DataFrame({"runs": artifact.runs, "cumulative_usd": artifact.cumulative})

    if kind == "sweep_grid":
        rows = []
        for cell in artifact.cells:
            r = cell.report
            rows.append(
                {
                    **{axis: cell.coords[axis] for axis in artifact.axes},
                    "run_cost": r.run_cost_total,
                    "revenue": r.revenue,
                    "profit": r.profit,
                    "bep": r.bep,
                }
            )
        frame = pd.DataFrame(rows, columns=[*artifact.axes, "run_cost", "revenue", "profit", "bep"])
        frame["bep"] = _bep_column([row["bep"] for row in rows])
        return frame

    if kind == "frontier":
        fixed = list(artifact[0].coords)
        free_axis = artifact[0].free_axis
        frame = pd.DataFrame(
            [{**p.coords, free_axis: p.root, "profit": p.profit} for p in artifact],
            columns=[*fixed, free_axis, "profit"],
        )
        frame["bep"] = _bep_column([p.bep for p in artifact])
        return frame

    rows = [
        {
            "rank": i,
            "policy_id": row.policy_id,
            "episodes": row.n_episodes,
            "success_rate": row.success_rate,
            "collision_rate": row.collision_rate,
            "timeout_rate": row.timeout_rate,
            "sla_compliance": row.sla_compliance,
            "path_length_m": row.path_length,
            "mean_power_w": row.mean_power,
            "hardware_cost": row.hardware_cost,
            "training_cost": row.training_cost,
            "energy_cost": row.energy_cost,
            "maintenance_cost": row.maintenance_cost,
            "run_cost": row.run_cost,
            "revenue": row.revenue,
            "profit": row.profit,
            "bep": row.bep,
            "time_to_profitability_days": row.time_to_profitability_days,
        }
        for i, row in enumerate(artifact, start=1)
    ]
    frame = pd.DataFrame(rows)
    frame["bep"] = _bep_column([row["bep"] for row in rows])
    # days column only when a delivery cadence is configured
    if frame["time_to_profitability_days"].isna().all():
        frame = frame.drop(columns="time_to_profitability_days")
    return frame


def write_csv(artifact: Any, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = to_frame(artifact)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"# schema: {_kind(artifact)}/{SCHEMA_VERSION}\n")
        frame.to_csv(f, index=False, lineterminator="\n")
    logger.info("✅ Wrote %s CSV (%d rows) to %s", _kind(artifact), len(frame), path)
    return path


def csv_text(artifact: Any) -> str:
    header = f"# schema: {_kind(artifact)}/{SCHEMA_VERSION}\n"
    return header + to_frame(artifact).to_csv(index=False, lineterminator="\n")


def read_csv_artifact(path: str | Path) -> pd.DataFrame:
    """Parse an emitted CSV back (schema comment skipped, floats round-trip exactly)."""
    return pd.read_csv(path, comment="#", float_precision="round_trip")


def read_csv_schema(path: str | Path) -> str:
    with open(path, encoding="utf-8") as f:
        first = f.readline().strip()
    if not first.startswith("# schema: "):
        raise ValidationError(f"{path}: missing schema comment line")
    return first.removeprefix("# schema: ")


# ═════════════════════════════════════════════════════════════════
# SVG charts
# ═════════════════════════════════════════════════════════════════


def _plot_curve(ax: plt.Axes, curve: BepCurve) -> None:
    ax.plot(curve.runs, curve.cumulative, color="#4C72B0", linewidth=1.5, label="cumulative position")
    ax.axhline(0.0, color="#555555", linewidth=0.8, linestyle="--")
    if curve.crossing is not None and curve.crossing <= curve.runs[-1]:
        ax.axvline(curve.crossing, color="#C44E52", linewidth=1.0, label=f"BEP = {curve.crossing:,} runs")
    ax.set_xlabel("Runs")
    ax.set_ylabel("Cumulative position ($)")
    ax.set_title("Break-even curve")
    ax.legend(loc="best", fontsize=8)


def _plot_report(ax: plt.Axes, report: EconReport) -> None:
    labels = ["energy", "maintenance", "rescue", "revenue", "profit"]
    values = [report.energy_cost, report.maintenance_cost, report.rescue_cost, report.revenue, report.profit]
    colors = ["#DD8452", "#C44E52", "#8172B3", "#55A868", "#4C72B0"]
    ax.bar(labels, values, color=colors)
    ax.axhline(0.0, color="#555555", linewidth=0.8)
    ax.set_ylabel("$ per run")
    ax.set_title(f"Per-run economics (BEP: {format_bep(report.bep)})")


def _plot_grid(ax: plt.Axes, grid: SweepGrid) -> None:
    profits = grid.profits()
    first = [c.coords[grid.axes[0]] for c in grid.cells[:: int(np.prod(grid.shape[1:]))]]
    if len(grid.shape) == 1:
        ax.plot(first, profits, marker="o", color="#4C72B0")
    else:
        series = profits.reshape(grid.shape[0], -1)
        for j in range(series.shape[1]):
            label = ", ".join(f"{a}={grid.cells[j].coords[a]:.3g}" for a in grid.axes[1:])
            ax.plot(first, series[:, j], marker="o", linewidth=1.0, label=label)
        if series.shape[1] <= 12:
            ax.legend(loc="best", fontsize=7)
    ax.axhline(0.0, color="#555555", linewidth=0.8, linestyle="--")
    ax.set_xlabel(grid.axes[0])
    ax.set_ylabel("Profit ($/run)")
    ax.set_title("Sensitivity sweep")


def _plot_frontier(ax: plt.Axes, points: Sequence[FrontierPoint]) -> None:
    solved = [p for p in points if p.root is not None]
    fixed = list(points[0].coords)
    if len(fixed) == 1:
        ax.plot([p.coords[fixed[0]] for p in solved], [p.root for p in solved], marker="o", color="#4C72B0")
        ax.set_xlabel(fixed[0])
    else:
        ax.plot(range(len(solved)), [p.root for p in solved], marker="o", color="#4C72B0")
        ax.set_xlabel("combination")
    ax.set_ylabel(f"break-even {points[0].free_axis}")
    ax.set_title("Viability frontier (profit = 0)")


def _plot_leaderboard(ax: plt.Axes, rows: Sequence[LeaderboardRow]) -> None:
    names = [r.policy_id for r in rows][::-1]
    profits = [r.profit for r in rows][::-1]
    ax.barh(names, profits, color=["#55A868" if p > 0 else "#C44E52" for p in profits])
    ax.axvline(0.0, color="#555555", linewidth=0.8)
    ax.set_xlabel("Profit ($/run)")
    ax.set_title("Leaderboard")


def write_svg(artifact: Any, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    kind = _kind(artifact)
    plotters = {
        "econ_report": _plot_report,
        "bep_curve": _plot_curve,
        "sweep_grid": _plot_grid,
        "frontier": _plot_frontier,
        "leaderboard": _plot_leaderboard,
    }
    with plt.rc_context(SVG_RC):
        fig, ax = plt.subplots(figsize=(7.8, 5.0))
        try:
            plotters[kind](ax, artifact)
            ax.grid(True, linewidth=0.3)
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    logger.info("✅ Wrote %s chart to %s", kind, path)
    return path


# ═════════════════════════════════════════════════════════════════
# Entry point
# ═════════════════════════════════════════════════════════════════


def emit_report(artifact: Any, fmt: str = "table", path: str | Path | None = None) -> str | Path:
    """
    Emit an artifact.

    With a path the file is written and the path returned; without one,
    table and csv return their text (svg always needs a path).
    """
    if fmt not in REPORT_FORMATS:
        raise ValidationError(f"Unknown format {fmt!r}; expected one of {list(REPORT_FORMATS)}")
    if fmt == "svg":
        if path is None:
            raise ValidationError("svg output needs an output path")
        return write_svg(artifact, path)
    if fmt == "csv":
        return write_csv(artifact, path) if path is not None else csv_text(artifact)

    text = render_text(artifact)
    if path is None:
        return text
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info("✅ Wrote %s table to %s", _kind(artifact), path)
    return path
