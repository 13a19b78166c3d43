"""
Exception hierarchy shared by every CostNav module.

CLI exit codes are derived from these classes (see costnav/cli.py):
  - ValidationError (and subclasses) → 1
  - OSError                          → 2
  - InfeasibleAnalysisError          → 3
"""


class CostNavError(Exception):
    """Base class for all CostNav errors"""

    pass


class ValidationError(CostNavError, ValueError):
    """An input violates a type invariant or domain constraint"""

    pass


class ConfigError(ValidationError):
    """Invalid or unknown configuration key/value"""

    pass


class LogFormatError(ValidationError):
    """Malformed episode-log line (cannot be parsed into a record)"""

    def __init__(self, message: str, line_no: int | None = None, field: str | None = None):
        self.line_no = line_no
        self.field = field
        location = []
        if line_no is not None:
            location.append(f"line {line_no}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")


class LogValidationError(ValidationError):
    """Parsed records violate EpisodeRecord invariants"""

    def __init__(self, message: str, episode_ids: list[str] | None = None):
        self.episode_ids = list(episode_ids or [])
        if self.episode_ids:
            message = f"{message} (episodes: {', '.join(self.episode_ids)})"
        super().__init__(message)


class SimulationError(CostNavError, RuntimeError):
    """Numerical blow-up or kinematic-limit breach inside the integrator"""

    def __init__(self, message: str, seed: int | None = None, episode_index: int | None = None):
        self.seed = seed
        self.episode_index = episode_index
        details = []
        if episode_index is not None:
            details.append(f"episode_index={episode_index}")
        if seed is not None:
            details.append(f"seed={seed}")
        suffix = f" [{', '.join(details)}]" if details else ""
        super().__init__(f"{message}{suffix}")


class InfeasibleAnalysisError(CostNavError):
    """A frontier search found no sign change in the requested bracket"""

    pass
