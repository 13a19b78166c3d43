"""
Unit tests for costnav/econ_core.py

Behaviors tested:
  - Pre-run costs: hardware BOM total, training wear
  - Run costs: energy, maintenance, rescue
  - Revenue / SLA factor
  - Break-even: None when not viable, agreement with a linear scan
  - Break-even is monotone in profit, pre-run costs and each run cost
  - build_report identities for both ledger modes
  - Published baseline and viable counterfactual reproduced
  - Input validation → ValidationError
"""

import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from costnav.econ_core import (
    BOMItem,
    CostParams,
    HardwareBOM,
    LedgerRounding,
    ProjectionPolicy,
    RunMetrics,
    TrainingStats,
    break_even,
    break_even_ratio,
    build_report,
    cumulative_position,
    energy_cost,
    hardware_cost,
    maintenance_cost,
    profit_per_run,
    project,
    rescue_cost,
    revenue,
    round_half_even,
    sla_factor,
    time_to_profitability,
    training_cost,
)
from costnav.errors import ValidationError

# ─────────────────────────────────────────────────────────────────
# Helpers
# ─────────────────────────────────────────────────────────────────


def _scan_break_even(pre_run: float, profit: float, limit: int) -> int | None:
    """Reference: first n with n·profit − pre_run >= 0, by linear scan."""
    for n in range(limit + 1):
        if n * profit - pre_run >= 0:
            return n
    return None


# ─────────────────────────────────────────────────────────────────
# Pre-run costs
# ─────────────────────────────────────────────────────────────────


class TestPreRunCosts:

    def test_hardware_cost_sums_quantities(self, paper_bom):
        """8600 + 2389 + 2 × 300 = 11,589."""
        assert hardware_cost(paper_bom) == 11589.0

    def test_empty_bom_rejected(self):
        """A BOM with no items is invalid."""
        with pytest.raises(ValidationError):
            HardwareBOM(())

    def test_negative_unit_cost_rejected(self):
        """Negative unit cost → ValidationError."""
        with pytest.raises(ValidationError):
            BOMItem("chassis", -1.0)

    def test_zero_quantity_rejected(self):
        """Quantity must be at least 1."""
        with pytest.raises(ValidationError):
            BOMItem("camera", 300.0, 0)

    def test_bom_from_records_rejects_unknown_keys(self):
        """Unknown BOM columns are not silently dropped."""
        with pytest.raises(ValidationError):
            HardwareBOM.from_records([{"name": "chassis", "unit_cost": 1.0, "vendor": "x"}])

    def test_training_cost_small_example(self):
        """10 episodes, rate 0.5, impulse 100, c_shock 1e-3, hardware 100 → 50."""
        stats = TrainingStats(episodes=10, collision_rate=0.5, mean_collision_impulse=100.0)
        params = CostParams(c_elec=0.2, c_shock=1e-3, r_base=1.0, sla_timeout=600.0)
        assert training_cost(stats, params, 100.0) == pytest.approx(50.0)

    def test_training_cost_published_baseline(self, paper_training, paper_params):
        """534 episodes of wear on an 11,589 USD robot ≈ 16,238 USD."""
        assert training_cost(paper_training, paper_params, 11589.0) == pytest.approx(16238.02, abs=0.01)

    def test_training_cost_zero_episodes(self, paper_params):
        """No training episodes → no training cost."""
        stats = TrainingStats(episodes=0, collision_rate=0.5, mean_collision_impulse=100.0)
        assert training_cost(stats, paper_params, 11589.0) == 0.0

    def test_training_rate_out_of_range_rejected(self):
        """collision_rate > 1 → ValidationError."""
        with pytest.raises(ValidationError):
            TrainingStats(episodes=10, collision_rate=1.5, mean_collision_impulse=1.0)


# ─────────────────────────────────────────────────────────────────
# Run costs and revenue
# ─────────────────────────────────────────────────────────────────


class TestRunCosts:

    def test_energy_cost_projected_hour(self, paper_metrics, paper_params):
        """551.7 W for 1 hr at 0.20 USD/kWh = 0.11034 USD."""
        metrics = replace(paper_metrics, runtime=1.0)
        assert energy_cost(metrics, paper_params) == pytest.approx(0.11034)

    def test_energy_cost_linear_in_runtime(self, paper_metrics, paper_params):
        """Doubling runtime doubles energy cost."""
        one = energy_cost(replace(paper_metrics, runtime=1.0), paper_params)
        two = energy_cost(replace(paper_metrics, runtime=2.0), paper_params)
        assert two == pytest.approx(2 * one)

    def test_maintenance_cost_baseline(self, paper_metrics, paper_params):
        """1e-5 × 501.7 × 0.54 × 11,589 ≈ 31.40 USD per run."""
        assert maintenance_cost(paper_metrics, paper_params, 11589.0) == pytest.approx(31.3967, abs=1e-4)

    def test_maintenance_zero_without_collisions(self, paper_metrics, paper_params):
        """Collision rate 0 → maintenance 0."""
        metrics = replace(paper_metrics, collision_rate=0.0)
        assert maintenance_cost(metrics, paper_params, 11589.0) == 0.0

    def test_rescue_cost(self):
        """p_failure × c_human_op."""
        params = CostParams(c_elec=0.2, c_shock=0.0, r_base=1.0, sla_timeout=600.0, p_failure=0.1, c_human_op=25.0)
        assert rescue_cost(params) == pytest.approx(2.5)

    def test_rescue_cost_default_zero(self, paper_params):
        """Ideal supervision: no rescue cost."""
        assert rescue_cost(paper_params) == 0.0

    def test_p_failure_above_one_rejected(self):
        """p_failure is a probability."""
        with pytest.raises(ValidationError):
            CostParams(c_elec=0.2, c_shock=0.0, r_base=1.0, sla_timeout=600.0, p_failure=1.2)

    def test_negative_param_rejected(self):
        """Negative coefficients → ValidationError."""
        with pytest.raises(ValidationError):
            CostParams(c_elec=-0.2, c_shock=0.0, r_base=1.0, sla_timeout=600.0)

    def test_revenue_scales_with_sla(self, paper_metrics, paper_params):
        """3.49 × 0.43 = 1.5007."""
        assert revenue(paper_metrics, paper_params) == pytest.approx(1.5007)

    def test_sla_factor_inclusive_cutoff(self, paper_params):
        """Delivery at exactly the cutoff still earns revenue."""
        assert sla_factor(600.0, paper_params) == 1
        assert sla_factor(600.1, paper_params) == 0
        assert sla_factor(0.0, paper_params) == 1

    def test_profit_per_run(self):
        """revenue minus all components."""
        assert profit_per_run(5.0, 1.0, 2.0, 0.5) == pytest.approx(1.5)


# ─────────────────────────────────────────────────────────────────
# Break-even
# ─────────────────────────────────────────────────────────────────


class TestBreakEven:

    def test_not_viable_when_losing(self):
        """Negative profit → None."""
        assert break_even(1000.0, -1.0) is None
        assert break_even_ratio(1000.0, -1.0) is None

    def test_not_viable_at_zero_profit(self):
        """Zero profit never recovers pre-run costs."""
        assert break_even(1000.0, 0.0) is None

    def test_exact_division(self):
        """100 / 10 = 10 runs exactly."""
        assert break_even(100.0, 10.0) == 10

    def test_rounds_up(self):
        """100 / 30 → 4 runs."""
        assert break_even(100.0, 30.0) == 4

    def test_zero_pre_run(self):
        """Nothing to recover → 0 runs."""
        assert break_even(0.0, 1.0) == 0

    def test_negative_pre_run_rejected(self):
        """pre_run_total must be >= 0."""
        with pytest.raises(ValidationError):
            break_even(-1.0, 1.0)

    def test_matches_linear_scan_random(self):
        """1000 random cases agree with the first n where the position turns non-negative."""
        rng = np.random.default_rng(20240101)
        for _ in range(1000):
            pre_run = round(float(rng.uniform(0.0, 1000.0)), int(rng.choice([0, 2, 6])))
            profit = round(float(rng.uniform(0.5, 50.0)), int(rng.choice([1, 3, 9])))
            expected = _scan_break_even(pre_run, profit, limit=2100)
            n = break_even(pre_run, profit)
            assert n == expected, (pre_run, profit)
            assert cumulative_position(pre_run, profit, n) >= 0
            if n > 0:
                assert cumulative_position(pre_run, profit, n - 1) < 0

    def test_monotone_in_profit(self):
        """More profit per run never needs more runs to break even."""
        rng = np.random.default_rng(7)
        for _ in range(500):
            pre_run = float(rng.uniform(0.0, 20000.0))
            low, high = sorted(float(p) for p in rng.uniform(0.01, 40.0, size=2))
            assert break_even(pre_run, high) <= break_even(pre_run, low), (pre_run, low, high)

    def test_monotone_in_pre_run(self):
        """Higher pre-run costs never break even sooner."""
        rng = np.random.default_rng(11)
        for _ in range(500):
            profit = float(rng.uniform(0.01, 40.0))
            low, high = sorted(float(c) for c in rng.uniform(0.0, 20000.0, size=2))
            assert break_even(low, profit) <= break_even(high, profit), (low, high, profit)

    def test_viability_is_monotone_in_run_costs(self):
        """Raising any run cost lowers profit, so the break-even point never moves earlier."""
        rng = np.random.default_rng(13)
        for _ in range(500):
            pre_run = float(rng.uniform(0.0, 20000.0))
            revenue_per_run = float(rng.uniform(0.0, 60.0))
            costs = [float(c) for c in rng.uniform(0.0, 20.0, size=3)]
            bumped = list(costs)
            bumped[int(rng.integers(3))] += float(rng.uniform(0.0, 5.0))

            base, worse = profit_per_run(revenue_per_run, *costs), profit_per_run(revenue_per_run, *bumped)
            assert worse <= base
            before, after = break_even(pre_run, base), break_even(pre_run, worse)
            if before is None:
                assert after is None
            elif after is not None:
                assert after >= before

    def test_cumulative_position(self):
        """n × profit − pre_run."""
        assert cumulative_position(100.0, 2.5, 10) == pytest.approx(-75.0)
        assert cumulative_position(100.0, 2.5, 0) == -100.0

    def test_cumulative_position_negative_runs_rejected(self):
        """n_runs must be >= 0."""
        with pytest.raises(ValidationError):
            cumulative_position(100.0, 1.0, -1)

    def test_time_to_profitability(self):
        """BEP / deliveries per day; None without a cadence or when not viable."""
        assert time_to_profitability(300, 30.0) == pytest.approx(10.0)
        assert time_to_profitability(300, None) is None
        assert time_to_profitability(None, 30.0) is None


# ─────────────────────────────────────────────────────────────────
# Projection
# ─────────────────────────────────────────────────────────────────


class TestProjection:

    def test_replaces_runtime_only(self, paper_metrics, projection):
        """Rates and power pass through; runtime becomes 1 hr."""
        projected = project(paper_metrics, projection)
        assert projected.runtime == 1.0
        assert projected.collision_rate == paper_metrics.collision_rate
        assert projected.mean_power == paper_metrics.mean_power
        assert projected.collision_scale == 1.0

    def test_distance_scaling(self, paper_metrics):
        """6000 m / 20 m → expected collisions × 300."""
        policy = ProjectionPolicy(target_runtime=1.0, distance_scale_maintenance=True)
        assert project(paper_metrics, policy).collision_scale == pytest.approx(300.0)

    def test_non_positive_runtime_rejected(self):
        """target_runtime must be > 0."""
        with pytest.raises(ValidationError):
            ProjectionPolicy(target_runtime=0.0)

    def test_runtime_must_be_positive(self):
        """RunMetrics with runtime 0 → ValidationError."""
        with pytest.raises(ValidationError):
            RunMetrics(sla_compliance=0.5, collision_rate=0.1, mean_collision_impulse=1.0, mean_power=1.0, runtime=0.0)


# ─────────────────────────────────────────────────────────────────
# build_report
# ─────────────────────────────────────────────────────────────────


class TestBuildReport:

    def test_exact_baseline(self, paper_bom, paper_training, paper_metrics, paper_params, projection):
        """Published lb-local baseline loses ≈ 30.01 USD per run and never breaks even."""
        report = build_report(paper_bom, paper_training, paper_metrics, paper_params, projection)
        assert report.hardware_cost == 11589.0
        assert report.pre_run_total == pytest.approx(27827.02, abs=0.01)
        assert report.profit == pytest.approx(-30.0066, abs=1e-3)
        assert report.bep is None
        assert report.bep_ratio is None
        assert not report.viable

    def test_paper_ledger_baseline(self, paper_bom, paper_training, paper_metrics, paper_params, projection):
        """Components rounded first: 1.501 − 0.11 − 31.40 = −30.009."""
        report = build_report(paper_bom, paper_training, paper_metrics, paper_params, projection, LedgerRounding.PAPER)
        assert report.energy_cost == pytest.approx(0.11)
        assert report.maintenance_cost == pytest.approx(31.40)
        assert report.revenue == pytest.approx(1.501)
        assert report.profit == pytest.approx(-30.009, abs=1e-9)
        assert report.pre_run_total == pytest.approx(27827.02, abs=1e-9)

    def test_paper_ledger_counterfactual(self, paper_bom, paper_training, paper_metrics, paper_params, projection):
        """Collisions 5%, SLA 90% → profit 0.121 and break-even after 229,976 runs."""
        metrics = replace(paper_metrics, collision_rate=0.05, sla_compliance=0.90)
        report = build_report(paper_bom, paper_training, metrics, paper_params, projection, "paper")
        assert report.profit == pytest.approx(0.121, abs=1e-9)
        assert report.bep == 229976
        assert report.viable

    def test_exact_counterfactual(self, paper_bom, paper_training, paper_metrics, paper_params, projection):
        """Unrounded ledger gives profit ≈ 0.1236 and BEP in the 220k–240k range."""
        metrics = replace(paper_metrics, collision_rate=0.05, sla_compliance=0.90)
        report = build_report(paper_bom, paper_training, metrics, paper_params, projection)
        assert report.maintenance_cost == pytest.approx(2.91, abs=0.01)
        assert report.revenue == pytest.approx(3.14, abs=0.01)
        assert report.profit == pytest.approx(0.1236, abs=1e-3)
        assert 220_000 <= report.bep <= 240_000

    def test_identities_hold(self, paper_bom, paper_training, paper_metrics, paper_params, projection):
        """pre_run = hw + train; run_cost = Σ components; profit = revenue − run_cost."""
        for ledger in LedgerRounding:
            report = build_report(paper_bom, paper_training, paper_metrics, paper_params, projection, ledger)
            assert report.pre_run_total == pytest.approx(report.hardware_cost + report.training_cost)
            assert report.run_cost_total == pytest.approx(
                report.energy_cost + report.maintenance_cost + report.rescue_cost
            )
            assert report.profit == pytest.approx(report.revenue - report.run_cost_total)

    def test_cost_shares_sum_to_one(self, paper_bom, paper_training, paper_metrics, paper_params, projection):
        """Maintenance dominates the baseline run cost."""
        report = build_report(paper_bom, paper_training, paper_metrics, paper_params, projection)
        assert math.fsum(report.cost_shares.values()) == pytest.approx(1.0)
        assert report.cost_shares["maintenance"] == pytest.approx(0.9965, abs=0.001)

    def test_cost_shares_zero_cost(self, paper_bom, paper_training):
        """All-zero run costs → all shares 0; 1 USD profit recovers 11,589 in as many runs."""
        params = CostParams(c_elec=0.0, c_shock=0.0, r_base=1.0, sla_timeout=600.0)
        metrics = RunMetrics(
            sla_compliance=1.0, collision_rate=0.0, mean_collision_impulse=0.0, mean_power=0.0, runtime=1.0
        )
        report = build_report(paper_bom, paper_training, metrics, params)
        assert set(report.cost_shares.values()) == {0.0}
        assert report.bep == 11589

    def test_training_to_hardware_ratio(self, paper_bom, paper_training, paper_metrics, paper_params, projection):
        """Training wear ≈ 1.4 × hardware cost."""
        report = build_report(paper_bom, paper_training, paper_metrics, paper_params, projection)
        assert report.training_to_hardware_ratio == pytest.approx(1.4012, abs=1e-3)

    def test_profit_linear_in_r_base(self, paper_bom, paper_training, paper_metrics, paper_params, projection):
        """∂profit/∂r_base = SLA compliance."""
        low = build_report(paper_bom, paper_training, paper_metrics, paper_params, projection)
        high = build_report(paper_bom, paper_training, paper_metrics, replace(paper_params, r_base=4.49), projection)
        assert high.profit - low.profit == pytest.approx(paper_metrics.sla_compliance)

    def test_time_to_profitability_with_cadence(self, paper_bom, paper_training, paper_metrics, paper_params):
        """Viable report with a delivery cadence gets a day count."""
        metrics = replace(paper_metrics, collision_rate=0.0, sla_compliance=1.0)
        params = replace(paper_params, deliveries_per_day=100.0)
        report = build_report(paper_bom, paper_training, metrics, params, ProjectionPolicy())
        assert report.time_to_profitability_days == pytest.approx(report.bep / 100.0)

    def test_invalid_ledger_rejected(self, paper_bom, paper_training, paper_metrics, paper_params):
        """Unknown ledger mode → ValueError."""
        with pytest.raises(ValueError):
            build_report(paper_bom, paper_training, paper_metrics, paper_params, ledger="banker")


class TestRoundHalfEven:

    def test_ties_to_even(self):
        """0.125 → 0.12, 0.135 → 0.14."""
        assert round_half_even(0.125, 2) == 0.12
        assert round_half_even(0.135, 2) == 0.14

    def test_decimal_repr_not_binary(self):
        """1.5007 rounds to 1.501 on three places."""
        assert round_half_even(1.5007, 3) == 1.501
