"""Shared runtime configuration: project paths, YAML data files and RunConfig."""

import logging
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml
from dotenv import load_dotenv

from costnav.errors import ConfigError

logger = logging.getLogger(__name__)

load_dotenv()

# COSTNAV_ROOT in .env → used when the package runs outside the repo checkout
# Path(__file__).parent.parent → default for a local clone
PROJECT_ROOT = Path(os.getenv("COSTNAV_ROOT", Path(__file__).parent.parent))
CONFIG_DIR = PROJECT_ROOT / "config"

ECONOMICS_FILE = CONFIG_DIR / "economics.yml"
PAPER_BASELINE_FILE = CONFIG_DIR / "paper_baseline.yml"
SCENARIOS_FILE = CONFIG_DIR / "scenarios.yml"
LEADERBOARD_MANIFEST_FILE = CONFIG_DIR / "leaderboard.yml"

DEFAULT_OUTPUT_DIR = PROJECT_ROOT / "data"

REPORT_FORMATS = ("table", "csv", "svg")
LEVELS = ("l1", "l2")
POLICIES = ("straight-line", "potential-field", "noisy-heading")
LEDGER_MODES = ("exact", "paper")


def load_yaml(path: str | Path) -> dict:
    """Load a YAML mapping; an empty file yields {}, malformed YAML raises ConfigError."""
    with open(path, encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: invalid YAML ({e})") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level, got {type(data).__name__}")
    return data


# ═════════════════════════════════════════════════════════════════
# RunConfig: flat key/value settings shared by all CLI commands
# ═════════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class RunConfig:
    """
    Flat CLI configuration. Precedence: command-line flag > config file > default.

    Economic overrides left as None fall back to config/economics.yml.
    """

    # paths
    log_in: str | None = None
    log_out: str | None = None
    report_out: str | None = None
    training_log: str | None = None
    manifest: str | None = None
    # econ parameter overrides
    c_elec: float | None = None
    c_shock: float | None = None
    r_base: float | None = None
    sla_timeout: float | None = None
    p_failure: float | None = None
    c_human_op: float | None = None
    deliveries_per_day: float | None = None
    target_runtime: float | None = None
    distance_scale_maintenance: bool | None = None
    ledger_rounding: str | None = None
    # scenario / policy selection
    level: str = "l2"
    policy: str = "potential-field"
    episodes: int = 100
    seed: int = 0
    workers: int = 1
    # output / validation
    format: str = "table"
    strict: bool = True

    def __post_init__(self):
        self._check_choice("level", LEVELS)
        self._check_choice("policy", POLICIES)
        self._check_choice("format", REPORT_FORMATS)
        if self.ledger_rounding is not None:
            self._check_choice("ledger_rounding", LEDGER_MODES)
        if not isinstance(self.episodes, int) or self.episodes < 1:
            raise ConfigError(f"episodes must be an integer >= 1 (got {self.episodes})")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer (got {self.seed})")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError(f"workers must be >= 1 (got {self.workers})")
        for name in ("c_elec", "c_shock", "r_base", "sla_timeout", "p_failure", "c_human_op"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ConfigError(f"{name} must be >= 0 (got {value})")
        if self.p_failure is not None and self.p_failure > 1:
            raise ConfigError(f"p_failure must be in [0, 1] (got {self.p_failure})")
        for name in ("deliveries_per_day", "target_runtime"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ConfigError(f"{name} must be > 0 (got {value})")

    def _check_choice(self, name: str, choices: tuple[str, ...]) -> None:
        value = getattr(self, name)
        if value not in choices:
            raise ConfigError(f"{name} must be one of {list(choices)} (got {value!r})")

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "RunConfig":
        """Build from a flat mapping; unknown keys are rejected."""
        unknown = sorted(set(values) - set(cls.keys()))
        if unknown:
            raise ConfigError(f"Unknown config keys: {unknown}")
        try:
            return cls(**dict(values))
        except TypeError as e:
            raise ConfigError(f"Invalid config value: {e}") from e

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        logger.info("Loading run config from %s", path)
        return cls.from_mapping(load_yaml(path))

    def merged(self, overrides: Mapping[str, Any]) -> "RunConfig":
        """Apply command-line values (None = not given) on top of this config."""
        given = {k: v for k, v in overrides.items() if v is not None}
        unknown = sorted(set(given) - set(self.keys()))
        if unknown:
            raise ConfigError(f"Unknown config keys: {unknown}")
        return replace(self, **given)

    def econ_overrides(self) -> dict[str, Any]:
        """Economic keys explicitly set (used to patch the economics defaults)."""
        names = ("c_elec", "c_shock", "r_base", "sla_timeout", "p_failure", "c_human_op", "deliveries_per_day")
        return {name: getattr(self, name) for name in names if getattr(self, name) is not None}


def resolve_run_config(config_path: str | Path | None, overrides: Mapping[str, Any]) -> RunConfig:
    """File (if any) then flags on top."""
    base = RunConfig.from_file(config_path) if config_path else RunConfig()
    return base.merged(overrides)
