"""
pytest configuration and shared fixtures

Economic fixtures reproduce the published delivery-robot baseline:
  - BOM {chassis 8600, compute 2389, 2 × rgb-d camera 300} → 11,589 USD
  - training: 534 episodes, 52.3% collisions, 501.7 N·s mean impulse
  - evaluation: 551.7 W, SLA 43%, collisions 54%, 0.1 hr testbed runs projected to 1 hr
"""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from costnav.econ_core import (
    BOMItem,
    CostParams,
    HardwareBOM,
    ProjectionPolicy,
    RunMetrics,
    TrainingStats,
)
from costnav.log_model import EpisodeRecord, Termination


@pytest.fixture
def paper_bom():
    return HardwareBOM(
        (
            BOMItem("delivery robot chassis", 8600.0),
            BOMItem("compute module", 2389.0),
            BOMItem("rgb-d camera", 300.0, 2),
        )
    )


@pytest.fixture
def paper_params():
    return CostParams(c_elec=0.20, c_shock=1e-5, r_base=3.49, sla_timeout=600.0)


@pytest.fixture
def paper_training():
    return TrainingStats(episodes=534, collision_rate=0.523, mean_collision_impulse=501.7, mean_episode_time=294.5)


@pytest.fixture
def paper_metrics():
    """Testbed metrics (0.1 hr runtime, unprojected)."""
    return RunMetrics(
        sla_compliance=0.43,
        collision_rate=0.54,
        mean_collision_impulse=501.7,
        mean_power=551.7,
        runtime=0.1,
    )


@pytest.fixture
def projection():
    return ProjectionPolicy(target_runtime=1.0)


def make_record(
    index: int = 0,
    termination: Termination | str = Termination.ARRIVE,
    duration: float = 12.0,
    impulse: float = 0.0,
    power: float = 500.0,
    max_power: float | None = None,
    distance: float = 20.0,
    policy_id: str = "potential-field",
) -> EpisodeRecord:
    """Valid EpisodeRecord with energy consistent with power × duration."""
    return EpisodeRecord(
        episode_id=f"ep-{index:06d}",
        scenario_id="l2",
        policy_id=policy_id,
        seed=index,
        termination=termination,
        duration_s=duration,
        distance_m=distance,
        collision_impulse_ns=impulse,
        mean_power_w=power,
        max_power_w=power if max_power is None else max_power,
        energy_wh=power * duration / 3600.0,
    )


@pytest.fixture
def record_factory():
    return make_record


@pytest.fixture
def sample_records():
    """Mixed log: 2 arrivals, 2 collisions, 1 timeout."""
    return [
        make_record(0, Termination.ARRIVE, duration=11.0, power=540.0, max_power=700.0),
        make_record(1, Termination.COLLISION, duration=6.5, impulse=50.0, power=520.0, max_power=850.0),
        make_record(2, Termination.ARRIVE, duration=13.0, power=500.0, max_power=690.0),
        make_record(3, Termination.COLLISION, duration=3.0, impulse=30.0, power=400.0, max_power=600.0),
        make_record(4, Termination.TIMEOUT, duration=600.0, power=80.0, max_power=200.0, distance=1.5),
    ]


@pytest.fixture
def tmp_output_dir(tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    return out
