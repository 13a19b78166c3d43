"""
Unit tests for costnav/config.py and costnav/fixtures.py

Behaviors tested:
  - RunConfig validation (choices, integer ranges, non-negative rates)
  - from_mapping / from_file reject unknown keys
  - merged(): None means "flag not given"; flag > file > default
  - load_yaml on empty and non-mapping documents
  - economics.yml / paper_baseline.yml loading, version check, overrides
  - summary_from_rates counts and unconditional impulse moments
  - paper_evaluation_log reproduces the published summary
"""

import sys
from pathlib import Path

import pytest
import yaml

sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from costnav.config import RunConfig, load_yaml, resolve_run_config
from costnav.econ_core import LedgerRounding
from costnav.errors import ConfigError, ValidationError
from costnav.fixtures import load_economics, load_paper_baseline, paper_evaluation_log, summary_from_rates
from costnav.log_model import Termination, aggregate, validate_log, write_log

PUBLISHED_EVALUATION = {
    "n_episodes": 100,
    "arrival_rate": 0.43,
    "collision_rate": 0.54,
    "timeout_rate": 0.03,
    "impulse_mean": 501.7,
    "impulse_std": 2285.7,
    "power_mean": 551.7,
    "power_std": 175.3,
    "runtime_hours": 0.1,
}


def _write_yaml(path: Path, data) -> Path:
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path


# ─────────────────────────────────────────────────────────────────
# RunConfig
# ─────────────────────────────────────────────────────────────────


class TestRunConfig:

    def test_defaults(self):
        """Zero-config run: L2, potential field, 100 episodes, table output."""
        config = RunConfig()
        assert (config.level, config.policy, config.episodes) == ("l2", "potential-field", 100)
        assert config.format == "table"
        assert config.strict is True
        assert config.econ_overrides() == {}

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"level": "l3"},
            {"policy": "teleport"},
            {"format": "pdf"},
            {"ledger_rounding": "bankers"},
            {"episodes": 0},
            {"seed": -1},
            {"seed": 2**64},
            {"workers": 0},
            {"c_elec": -0.1},
            {"p_failure": 1.5},
            {"deliveries_per_day": 0},
            {"target_runtime": -1.0},
        ],
    )
    def test_rejects_invalid_values(self, kwargs):
        """Out-of-domain values raise ConfigError."""
        with pytest.raises(ConfigError):
            RunConfig(**kwargs)

    def test_config_error_is_validation_error(self):
        """ConfigError maps to the validation exit code."""
        with pytest.raises(ValidationError):
            RunConfig(workers=-3)

    def test_from_mapping_unknown_key(self):
        """Typos in a config file are reported, not ignored."""
        with pytest.raises(ConfigError, match="c_elek"):
            RunConfig.from_mapping({"c_elek": 0.3})

    def test_from_file(self, tmp_path):
        """A YAML file fills RunConfig fields."""
        path = _write_yaml(tmp_path / "run.yml", {"level": "l1", "episodes": 20, "c_elec": 0.3})
        config = RunConfig.from_file(path)
        assert config.level == "l1"
        assert config.episodes == 20
        assert config.econ_overrides() == {"c_elec": 0.3}

    def test_merged_ignores_none(self):
        """Flags left at None do not clobber file values."""
        base = RunConfig(level="l1", c_shock=2e-5)
        merged = base.merged({"level": None, "c_shock": None, "seed": 7})
        assert merged.level == "l1"
        assert merged.c_shock == 2e-5
        assert merged.seed == 7

    def test_merged_unknown_key(self):
        """Unknown override keys raise."""
        with pytest.raises(ConfigError):
            RunConfig().merged({"speed": 2.0})

    def test_resolve_flag_beats_file(self, tmp_path):
        """Precedence: flag > file > default."""
        path = _write_yaml(tmp_path / "run.yml", {"r_base": 4.0, "p_failure": 0.1})
        config = resolve_run_config(path, {"r_base": 5.0})
        assert config.r_base == 5.0
        assert config.p_failure == 0.1
        assert config.level == "l2"

    def test_resolve_without_file(self):
        """No config file → defaults plus flags."""
        assert resolve_run_config(None, {"episodes": 5}).episodes == 5

    def test_econ_overrides_excludes_projection_keys(self):
        """target_runtime and ledger are not CostParams fields."""
        config = RunConfig(c_elec=0.25, target_runtime=2.0, ledger_rounding="paper", deliveries_per_day=40.0)
        assert config.econ_overrides() == {"c_elec": 0.25, "deliveries_per_day": 40.0}


# ─────────────────────────────────────────────────────────────────
# YAML loading
# ─────────────────────────────────────────────────────────────────


class TestLoadYaml:

    def test_empty_file(self, tmp_path):
        """An empty document is an empty mapping."""
        path = tmp_path / "empty.yml"
        path.write_text("", encoding="utf-8")
        assert load_yaml(path) == {}

    def test_non_mapping(self, tmp_path):
        """A top-level list is rejected."""
        path = _write_yaml(tmp_path / "list.yml", [1, 2, 3])
        with pytest.raises(ConfigError, match="mapping"):
            load_yaml(path)

    def test_missing_file(self, tmp_path):
        """Missing files surface as OSError (I/O exit code)."""
        with pytest.raises(OSError):
            load_yaml(tmp_path / "nope.yml")

    def test_malformed_yaml(self, tmp_path):
        """Unparseable YAML is a ConfigError naming the file."""
        path = tmp_path / "broken.yml"
        path.write_text("level: [l2\nepisodes: 10\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="broken.yml"):
            load_yaml(path)


# ─────────────────────────────────────────────────────────────────
# Economics and baseline files
# ─────────────────────────────────────────────────────────────────


class TestLoadEconomics:

    def test_shipped_defaults(self):
        """Built-in constants and the 11,589 USD bill of materials."""
        economics = load_economics()
        assert economics.params.c_elec == 0.20
        assert economics.params.c_shock == 1e-5
        assert economics.params.r_base == 3.49
        assert economics.params.sla_timeout == 600
        assert economics.bom.total() == 11589
        assert economics.projection.target_runtime == 1.0
        assert economics.projection.distance_scale_maintenance is False
        assert economics.ledger is LedgerRounding.EXACT

    def test_unsupported_version(self, tmp_path):
        """Schema version other than 1 is rejected."""
        data = load_yaml(Path(__file__).parent.parent.parent / "config" / "economics.yml")
        data["version"] = 2
        with pytest.raises(ConfigError, match="version"):
            load_economics(_write_yaml(tmp_path / "economics.yml", data))

    def test_missing_section(self, tmp_path):
        """A file without hardware cannot be costed."""
        path = _write_yaml(tmp_path / "economics.yml", {"version": 1, "params": {"c_elec": 0.2}})
        with pytest.raises(ConfigError):
            load_economics(path)

    def test_with_overrides(self):
        """RunConfig values patch params, projection and ledger."""
        economics = load_economics().with_overrides(
            RunConfig(c_elec=0.30, target_runtime=2.0, distance_scale_maintenance=True, ledger_rounding="paper")
        )
        assert economics.params.c_elec == 0.30
        assert economics.params.r_base == 3.49
        assert economics.projection.target_runtime == 2.0
        assert economics.projection.distance_scale_maintenance is True
        assert economics.ledger is LedgerRounding.PAPER


class TestPaperBaseline:

    def test_published_figures(self):
        """Bundled baseline reproduces the published ledger."""
        baseline = load_paper_baseline()
        report = baseline.report()
        assert baseline.policy_id == "lb-local"
        assert baseline.training.episodes == 534
        assert report.pre_run_total == pytest.approx(27827.02, abs=0.01)
        assert report.profit == pytest.approx(-30.009, abs=1e-6)
        assert report.bep is None

    def test_counterfactual(self):
        """The viable what-if breaks even after 229,976 runs."""
        baseline = load_paper_baseline()
        report = baseline.report(baseline.counterfactual("viable_counterfactual"))
        assert report.profit == pytest.approx(0.121, abs=1e-6)
        assert report.bep == 229976

    def test_unknown_counterfactual(self):
        """Asking for a missing preset lists the available ones."""
        with pytest.raises(ValidationError, match="viable_counterfactual"):
            load_paper_baseline().counterfactual("free_lunch")

    def test_counterfactual_unknown_key(self, tmp_path):
        """Counterfactuals may only override metric keys."""
        data = load_yaml(Path(__file__).parent.parent.parent / "config" / "paper_baseline.yml")
        data["counterfactuals"] = {"bad": {"r_base": 10.0}}
        with pytest.raises(ConfigError, match="r_base"):
            load_paper_baseline(_write_yaml(tmp_path / "baseline.yml", data))


class TestSummaryFromRates:

    def test_counts(self):
        """Rates × n become integer counts; arrivals are on time."""
        summary = summary_from_rates(PUBLISHED_EVALUATION)
        assert (summary.arrival_count, summary.collision_count, summary.timeout_count) == (43, 54, 3)
        assert summary.on_time_count == 43
        assert summary.duration_mean == pytest.approx(360.0)

    def test_unconditional_impulse(self):
        """Mean over all episodes = conditional mean × collision rate."""
        summary = summary_from_rates(PUBLISHED_EVALUATION)
        assert summary.impulse_mean_all == pytest.approx(501.7 * 0.54)
        assert summary.impulse_std_all > 0

    def test_rates_must_add_up(self):
        """Rates that do not cover every episode are rejected."""
        with pytest.raises(ValidationError):
            summary_from_rates({**PUBLISHED_EVALUATION, "timeout_rate": 0.10})


# ─────────────────────────────────────────────────────────────────
# Synthetic baseline log
# ─────────────────────────────────────────────────────────────────


class TestPaperEvaluationLog:

    def test_termination_mix(self):
        """100 records: 54 collisions, 43 arrivals, 3 timeouts."""
        records = paper_evaluation_log()
        kinds = [r.termination for r in records]
        assert len(records) == 100
        assert kinds.count(Termination.COLLISION) == 54
        assert kinds.count(Termination.ARRIVE) == 43
        assert kinds.count(Termination.TIMEOUT) == 3

    def test_aggregate_matches_baseline(self):
        """Aggregating the log gives back the published means."""
        summary = aggregate(paper_evaluation_log())
        assert summary.collision_rate == pytest.approx(0.54)
        assert summary.sla_compliance == pytest.approx(0.43)
        assert summary.impulse_mean == pytest.approx(501.7)
        assert summary.power_mean == pytest.approx(551.7)
        assert summary.duration_mean == pytest.approx(360.0)

    def test_written_log_validates(self, tmp_path):
        """The synthetic log passes strict validation."""
        path = write_log(paper_evaluation_log(), tmp_path / "lb_local.log")
        result = validate_log(path)
        assert result.ok
