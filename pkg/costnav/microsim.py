"""
Deterministic 2D kinematic navigation micro-simulator (Economic Difficulty Levels 1–2).

A disc robot drives along a 30 m × 6 m sidewalk strip toward a goal 20 m
ahead. Level 2 adds pedestrians walking between random waypoints. Each
episode ends on the first of: goal disc reached (Arrive), overlap with a
wall or pedestrian (Collision, inelastic stop), timeout (Timeout).

Per step (dt = 0.1 s):
    1. controller command (target speed, turn rate)
    2. clamp to v_max / a_max / w_max, semi-implicit Euler update
    3. collision check → impulse J = m × |v at contact|, velocity zeroed
    4. arrival check
    5. pedestrians advance (a pedestrian holds if its next position would overlap the robot)

Power P = p_idle + k_drive·m·max(a, 0)·v + k_drag·v², energy = trapezoidal integral.

Seeds: episode seed = splitmix64(master_seed, episode_index); every random
draw of an episode comes from numpy.random.default_rng(episode seed), so
logs are identical across runs and worker counts.

Usage:
    from costnav.microsim import load_presets, run_batch

    presets = load_presets()
    scenario = presets.scenario("l2", master_seed=7, n_episodes=100)
    records = run_batch(scenario, presets.policy("potential-field"), workers=4)
"""

import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import partial
from pathlib import Path
from typing import Mapping, NamedTuple, Protocol, Sequence

import numpy as np

from costnav.config import SCENARIOS_FILE, load_yaml
from costnav.errors import SimulationError, ValidationError
from costnav.log_model import EpisodeRecord, Termination

logger = logging.getLogger(__name__)

DT = 0.1
GOAL_RADIUS = 0.5
HEADING_GAIN = 2.0
# minimum start clearance between a spawned pedestrian and the robot (meters, surface to surface)
SPAWN_CLEARANCE = 1.0
MAX_SPAWN_ATTEMPTS = 1000

# splitmix64 constants
MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_1 = 0xBF58476D1CE4E5B9
MIX_2 = 0x94D049BB133111EB


def derive_episode_seed(master_seed: int, episode_index: int) -> int:
    """
    splitmix64 output for state master_seed + (index + 1) × golden gamma.

    (0, 0) gives 0xE220A8397B1DCDAF, the first output of the reference
    splitmix64 generator seeded with 0.
    """
    if master_seed < 0 or episode_index < 0:
        raise ValidationError(f"seed and index must be >= 0 (got {master_seed}, {episode_index})")
    z = (master_seed + (episode_index + 1) * GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * MIX_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_2) & MASK64
    return z ^ (z >> 31)


def _wrap_angle(angle: float) -> float:
    return (angle + math.pi) % (2 * math.pi) - math.pi


def _clamp(value: float, lo: float, hi: float) -> float:
    return lo if value < lo else hi if value > hi else value


# ═════════════════════════════════════════════════════════════════
# Configuration types
# ═════════════════════════════════════════════════════════════════


class Level(str, Enum):
    L1_EMPTY = "L1_Empty"
    L2_CROWDED = "L2_Crowded"


class PolicyKind(str, Enum):
    STRAIGHT_LINE = "StraightLine"
    POTENTIAL_FIELD = "PotentialField"
    NOISY_HEADING = "NoisyHeading"


POLICY_PARAMETERS: dict[PolicyKind, dict[str, float]] = {
    PolicyKind.STRAIGHT_LINE: {"speed": 2.0},
    PolicyKind.POTENTIAL_FIELD: {"k_attract": 1.0, "k_repulse": 1.5, "influence": 2.0, "min_speed": 0.4},
    PolicyKind.NOISY_HEADING: {
        "speed": 2.0,
        "heading_noise": 0.35,
        "reversion": 0.5,
        "stall_probability": 0.1,
        "stall_window": 8.0,
    },
}

POLICY_IDS = {
    PolicyKind.STRAIGHT_LINE: "straight-line",
    PolicyKind.POTENTIAL_FIELD: "potential-field",
    PolicyKind.NOISY_HEADING: "noisy-heading",
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Arena, pedestrians and batch size for one difficulty level."""

    level: Level
    arena_width: float = 6.0
    arena_length: float = 30.0
    goal_distance: float = 20.0
    timeout: float = 600.0
    n_pedestrians: int = 0
    pedestrian_speed: float = 0.0
    pedestrian_radius: float = 0.3
    master_seed: int = 0
    n_episodes: int = 100
    scenario_id: str = ""

    def __post_init__(self):
        try:
            object.__setattr__(self, "level", Level(self.level))
        except ValueError:
            raise ValidationError(f"Unknown level {self.level!r}; expected one of {[lv.value for lv in Level]}")
        if not self.scenario_id:
            object.__setattr__(self, "scenario_id", "l1" if self.level is Level.L1_EMPTY else "l2")
        if self.level is Level.L1_EMPTY and self.n_pedestrians != 0:
            raise ValidationError(f"L1_Empty scenarios have no pedestrians (got {self.n_pedestrians})")
        if self.arena_width <= 0 or self.arena_length <= 0:
            raise ValidationError(f"Arena dimensions must be > 0 (got {self.arena_width} × {self.arena_length})")
        if not 0 < self.goal_distance < self.arena_length:
            raise ValidationError(
                f"goal_distance must be in (0, arena_length={self.arena_length}) (got {self.goal_distance})"
            )
        if self.timeout <= 0:
            raise ValidationError(f"timeout must be > 0 seconds (got {self.timeout})")
        if not isinstance(self.n_pedestrians, int) or self.n_pedestrians < 0:
            raise ValidationError(f"n_pedestrians must be >= 0 (got {self.n_pedestrians})")
        if self.pedestrian_speed < 0 or self.pedestrian_radius <= 0:
            raise ValidationError("pedestrian_speed must be >= 0 and pedestrian_radius > 0")
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed <= MASK64:
            raise ValidationError(f"master_seed must be an unsigned 64-bit integer (got {self.master_seed})")
        if not isinstance(self.n_episodes, int) or self.n_episodes < 1:
            raise ValidationError(f"n_episodes must be >= 1 (got {self.n_episodes})")

    @property
    def start(self) -> tuple[float, float]:
        return (self.arena_length - self.goal_distance) / 2, self.arena_width / 2

    @property
    def goal(self) -> tuple[float, float]:
        x, y = self.start
        return x + self.goal_distance, y


@dataclass(frozen=True)
class RobotParams:
    """25 kg delivery robot, 0.4 m bounding disc."""

    mass: float = 25.0
    radius: float = 0.4
    v_max: float = 2.0
    a_max: float = 1.0
    w_max: float = 2.5

    def __post_init__(self):
        for name in ("mass", "radius", "v_max", "a_max", "w_max"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"RobotParams.{name} must be > 0 (got {getattr(self, name)})")


@dataclass(frozen=True)
class PowerModel:
    p_idle: float = 80.0
    k_drive: float = 6.0
    k_drag: float = 117.5

    def __post_init__(self):
        if min(self.p_idle, self.k_drive, self.k_drag) < 0:
            raise ValidationError("PowerModel coefficients must be >= 0")

    def power(self, speed: float, accel: float, mass: float) -> float:
        """Instantaneous draw in Watts (never below p_idle)."""
        return self.p_idle + self.k_drive * mass * max(accel, 0.0) * speed + self.k_drag * speed * speed


@dataclass(frozen=True)
class PolicySpec:
    kind: PolicyKind
    parameters: Mapping[str, float] = field(default_factory=dict)
    policy_id: str = ""

    def __post_init__(self):
        try:
            kind = PolicyKind(self.kind)
        except ValueError:
            raise ValidationError(f"Unknown policy kind {self.kind!r}; expected one of {[k.value for k in PolicyKind]}")
        object.__setattr__(self, "kind", kind)
        defaults = POLICY_PARAMETERS[kind]
        unknown = sorted(set(self.parameters) - set(defaults))
        if unknown:
            raise ValidationError(f"Unknown {kind.value} parameters: {unknown}")
        merged = {**defaults, **{k: float(v) for k, v in self.parameters.items()}}
        for name, value in merged.items():
            if not math.isfinite(value) or value < 0:
                raise ValidationError(f"{kind.value}.{name} must be finite and >= 0 (got {value})")
        if merged.get("stall_probability", 0.0) > 1:
            raise ValidationError("stall_probability must be in [0, 1]")
        if kind is PolicyKind.POTENTIAL_FIELD and merged["influence"] <= 0:
            raise ValidationError("PotentialField.influence must be > 0")
        object.__setattr__(self, "parameters", merged)
        if not self.policy_id:
            object.__setattr__(self, "policy_id", POLICY_IDS[kind])


@dataclass(frozen=True)
class SimulatorPresets:
    """Named scenarios, robot, power model and policies from config/scenarios.yml."""

    levels: Mapping[str, ScenarioConfig]
    policies: Mapping[str, PolicySpec]
    robot: RobotParams = RobotParams()
    power: PowerModel = PowerModel()

    def scenario(self, name: str, master_seed: int = 0, n_episodes: int = 100) -> ScenarioConfig:
        if name not in self.levels:
            raise ValidationError(f"Unknown level {name!r}; expected one of {sorted(self.levels)}")
        return replace(self.levels[name], master_seed=master_seed, n_episodes=n_episodes)

    def policy(self, name: str) -> PolicySpec:
        if name not in self.policies:
            raise ValidationError(f"Unknown policy {name!r}; expected one of {sorted(self.policies)}")
        return self.policies[name]


def load_presets(path: str | Path = SCENARIOS_FILE) -> SimulatorPresets:
    data = load_yaml(path)
    try:
        levels = {name: ScenarioConfig(scenario_id=name, **values) for name, values in data["levels"].items()}
        policies = {
            name: PolicySpec(kind=values["kind"], parameters=values.get("parameters") or {}, policy_id=name)
            for name, values in data["policies"].items()
        }
        robot = RobotParams(**data.get("robot", {}))
        power = PowerModel(**data.get("power", {}))
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"{path}: invalid simulator presets ({e})") from e
    return SimulatorPresets(levels=levels, policies=policies, robot=robot, power=power)


# ═════════════════════════════════════════════════════════════════
# Pedestrians
# ═════════════════════════════════════════════════════════════════


@dataclass(frozen=True, eq=False)
class Crowd:
    """
    State of every pedestrian in an episode, one row per pedestrian.

    position, velocity and waypoint are (n, 2) arrays; speed, radius and
    waypoint_index are (n,); seeds drive each pedestrian's waypoint stream.
    """

    position: np.ndarray
    velocity: np.ndarray
    waypoint: np.ndarray
    speed: np.ndarray
    radius: np.ndarray
    waypoint_index: np.ndarray
    seeds: tuple[int, ...]

    @classmethod
    def build(
        cls,
        x: float | Sequence[float],
        y: float | Sequence[float],
        speed: float | Sequence[float] = 0.0,
        radius: float | Sequence[float] = 0.3,
        waypoint_x: float | Sequence[float] = 0.0,
        waypoint_y: float | Sequence[float] = 0.0,
        seeds: int | Sequence[int] = 0,
    ) -> "Crowd":
        """Crowd from per-pedestrian values; scalars broadcast over the crowd."""
        xs, ys, speeds, radii, wxs, wys = np.broadcast_arrays(
            *(np.atleast_1d(np.asarray(v, dtype=float)) for v in (x, y, speed, radius, waypoint_x, waypoint_y))
        )
        n = len(xs)
        seed_list = (seeds,) * n if isinstance(seeds, int) else tuple(int(s) for s in seeds)
        if len(seed_list) != n:
            raise ValidationError(f"Crowd needs one seed per pedestrian ({len(seed_list)} for {n})")
        return cls(
            position=np.column_stack([xs, ys]),
            velocity=np.zeros((n, 2)),
            waypoint=np.column_stack([wxs, wys]),
            speed=speeds.copy(),
            radius=radii.copy(),
            waypoint_index=np.zeros(n, dtype=np.int64),
            seeds=seed_list,
        )

    @classmethod
    def empty(cls) -> "Crowd":
        return cls.build(x=np.empty(0), y=np.empty(0), seeds=())

    def __len__(self) -> int:
        return len(self.speed)

    def distances_sq(self, x: float, y: float) -> np.ndarray:
        """Squared center distance from (x, y) to every pedestrian."""
        offset = self.position - (x, y)
        return np.einsum("ij,ij->i", offset, offset)


def _waypoint(seed: int, index: int, radius: float, arena_width: float, arena_length: float) -> tuple[float, float]:
    rng = np.random.default_rng(derive_episode_seed(seed, index))
    return float(rng.uniform(radius, arena_length - radius)), float(rng.uniform(radius, arena_width - radius))


def pedestrian_step(crowd: Crowd, dt: float, arena_width: float, arena_length: float) -> Crowd:
    """
    Advance every pedestrian at constant speed toward its waypoint.

    A pedestrian within one step of its waypoint lands on it and draws the
    next one from (seed, index), so the walk is a pure function of the
    state. Positions leaving the arena are mirrored back and the matching
    velocity component flipped. Zero-speed pedestrians stay put.
    """
    if len(crowd) == 0:
        return crowd

    delta = crowd.waypoint - crowd.position
    dist = np.hypot(delta[:, 0], delta[:, 1])
    scale = np.divide(crowd.speed, dist, out=np.zeros_like(dist), where=dist > 0)
    heading_velocity = delta * scale[:, None]
    moving = crowd.speed > 0
    reached = moving & (dist <= crowd.speed * dt)
    walking = moving & ~reached

    lo = crowd.radius[:, None]
    hi = np.column_stack([arena_length - crowd.radius, arena_width - crowd.radius])
    stepped = crowd.position + heading_velocity * dt
    below, above = stepped < lo, stepped > hi
    stepped = np.where(below, 2 * lo - stepped, np.where(above, 2 * hi - stepped, stepped))
    stepped_velocity = np.where(below | above, -heading_velocity, heading_velocity)

    position = np.where(walking[:, None], stepped, crowd.position)
    velocity = np.where(walking[:, None], stepped_velocity, 0.0)
    waypoint = crowd.waypoint.copy()
    waypoint_index = crowd.waypoint_index.copy()

    for i in np.flatnonzero(reached):
        position[i] = crowd.waypoint[i]
        velocity[i] = heading_velocity[i] if dist[i] > 0 else crowd.velocity[i]
        waypoint_index[i] += 1
        waypoint[i] = _waypoint(
            crowd.seeds[i], int(waypoint_index[i]), float(crowd.radius[i]), arena_width, arena_length
        )

    return replace(crowd, position=position, velocity=velocity, waypoint=waypoint, waypoint_index=waypoint_index)


def spawn_pedestrians(
    scenario: ScenarioConfig,
    episode_seed: int,
    rng: np.random.Generator,
    robot: RobotParams,
) -> Crowd:
    start_x, start_y = scenario.start
    r = scenario.pedestrian_radius
    min_dist = robot.radius + r + SPAWN_CLEARANCE
    xs, ys, wxs, wys, seeds = [], [], [], [], []
    for i in range(scenario.n_pedestrians):
        for _ in range(MAX_SPAWN_ATTEMPTS):
            x = float(rng.uniform(r, scenario.arena_length - r))
            y = float(rng.uniform(r, scenario.arena_width - r))
            if math.hypot(x - start_x, y - start_y) >= min_dist:
                break
        else:
            raise SimulationError(f"could not place pedestrian {i} clear of the robot start", seed=episode_seed)
        ped_seed = derive_episode_seed(episode_seed, i)
        wx, wy = _waypoint(ped_seed, 0, r, scenario.arena_width, scenario.arena_length)
        xs.append(x)
        ys.append(y)
        wxs.append(wx)
        wys.append(wy)
        seeds.append(ped_seed)
    if not xs:
        return Crowd.empty()
    return Crowd.build(xs, ys, scenario.pedestrian_speed, r, wxs, wys, seeds)


# ═════════════════════════════════════════════════════════════════
# Controllers
# ═════════════════════════════════════════════════════════════════


class Observation(NamedTuple):
    t: float
    x: float
    y: float
    heading: float
    speed: float
    radius: float
    goal_x: float
    goal_y: float
    crowd: Crowd
    arena_width: float
    arena_length: float


class Controller(Protocol):
    """Anything returning (target speed m/s, turn rate rad/s); the integrator clamps both."""

    def command(self, obs: Observation) -> tuple[float, float]: ...


def _heading_error(obs: Observation, offset: float = 0.0) -> float:
    bearing = math.atan2(obs.goal_y - obs.y, obs.goal_x - obs.x)
    return _wrap_angle(bearing + offset - obs.heading)


class StraightLineController:
    """Constant speed, steer straight at the goal."""

    def __init__(self, speed: float):
        self.speed = speed

    def command(self, obs: Observation) -> tuple[float, float]:
        return self.speed, HEADING_GAIN * _heading_error(obs)


class PotentialFieldController:
    """Goal attraction + pedestrian/wall repulsion, slowing down near obstacles."""

    def __init__(self, k_attract: float, k_repulse: float, influence: float, min_speed: float, v_max: float):
        self.k_attract = k_attract
        self.k_repulse = k_repulse
        self.influence = influence
        self.min_speed = min_speed
        self.v_max = v_max

    def _push(self, clearance: float) -> float:
        clearance = max(clearance, 0.05)
        return self.k_repulse * (1.0 / clearance - 1.0 / self.influence)

    def command(self, obs: Observation) -> tuple[float, float]:
        gx, gy = obs.goal_x - obs.x, obs.goal_y - obs.y
        dist = math.hypot(gx, gy) or 1e-9
        fx, fy = self.k_attract * gx / dist, self.k_attract * gy / dist
        nearest = self.influence

        if len(obs.crowd):
            offset = (obs.x, obs.y) - obs.crowd.position
            d = np.maximum(np.hypot(offset[:, 0], offset[:, 1]), 1e-9)
            clearance = d - obs.radius - obs.crowd.radius
            near = clearance < self.influence
            if near.any():
                push = self.k_repulse * (1.0 / np.maximum(clearance[near], 0.05) - 1.0 / self.influence)
                direction = offset[near] / d[near, None]
                fx += float(push @ direction[:, 0])
                fy += float(push @ direction[:, 1])
                nearest = min(nearest, float(clearance[near].min()))

        lower = obs.y - obs.radius
        upper = obs.arena_width - obs.y - obs.radius
        if lower < self.influence:
            fy += self._push(lower)
        if upper < self.influence:
            fy -= self._push(upper)

        error = _wrap_angle(math.atan2(fy, fx) - obs.heading)
        slowdown = _clamp(nearest / self.influence, 0.0, 1.0)
        speed = max(self.min_speed, self.v_max * max(math.cos(error), 0.0) * slowdown)
        return speed, HEADING_GAIN * error


class NoisyHeadingController:
    """
    Goal seeking with an Ornstein-Uhlenbeck heading offset.

    With probability stall_probability the robot stalls for good at a
    time drawn uniformly from [0, stall_window] seconds.
    """

    def __init__(
        self,
        rng: np.random.Generator,
        speed: float,
        heading_noise: float,
        reversion: float,
        stall_probability: float,
        stall_window: float,
    ):
        self.rng = rng
        self.speed = speed
        self.heading_noise = heading_noise
        self.reversion = reversion
        self.offset = 0.0
        self.stall_at = float(rng.uniform(0.0, stall_window)) if rng.random() < stall_probability else None

    def command(self, obs: Observation) -> tuple[float, float]:
        if self.stall_at is not None and obs.t >= self.stall_at:
            return 0.0, 0.0
        noise = self.heading_noise * math.sqrt(DT) * float(self.rng.standard_normal())
        self.offset += -self.reversion * self.offset * DT + noise
        return self.speed, HEADING_GAIN * _heading_error(obs, self.offset)


def build_controller(policy: PolicySpec, robot: RobotParams, rng: np.random.Generator) -> Controller:
    params = policy.parameters
    if policy.kind is PolicyKind.STRAIGHT_LINE:
        return StraightLineController(speed=params["speed"])
    if policy.kind is PolicyKind.POTENTIAL_FIELD:
        return PotentialFieldController(v_max=robot.v_max, **params)
    return NoisyHeadingController(rng=rng, **params)


# ═════════════════════════════════════════════════════════════════
# Episode integration
# ═════════════════════════════════════════════════════════════════


@dataclass
class EpisodeTrace:
    """Record plus per-step samples (index 0 is the initial state at t = 0)."""

    record: EpisodeRecord
    times: np.ndarray
    speeds: np.ndarray
    accelerations: np.ndarray
    powers: np.ndarray


def _hits_obstacle(x: float, y: float, radius: float, crowd: Crowd, width: float, length: float) -> bool:
    if x - radius < 0 or y - radius < 0 or x + radius > length or y + radius > width:
        return True
    if not len(crowd):
        return False
    return bool(np.any(crowd.distances_sq(x, y) < (radius + crowd.radius) ** 2))


def _advance_crowd(
    crowd: Crowd, robot_x: float, robot_y: float, robot_radius: float, width: float, length: float
) -> Crowd:
    """Step the crowd; a pedestrian whose next position overlaps the robot holds with zero velocity."""
    if not len(crowd):
        return crowd
    moved = pedestrian_step(crowd, DT, width, length)
    blocked = moved.distances_sq(robot_x, robot_y) < (robot_radius + moved.radius) ** 2
    if not blocked.any():
        return moved
    keep = blocked[:, None]
    return replace(
        moved,
        position=np.where(keep, crowd.position, moved.position),
        velocity=np.where(keep, 0.0, moved.velocity),
        waypoint=np.where(keep, crowd.waypoint, moved.waypoint),
        waypoint_index=np.where(blocked, crowd.waypoint_index, moved.waypoint_index),
    )


def simulate_episode(
    scenario: ScenarioConfig,
    policy: PolicySpec,
    episode_index: int = 0,
    robot: RobotParams | None = None,
    power: PowerModel | None = None,
    controller: Controller | None = None,
    crowd: Crowd | None = None,
    record_trace: bool = True,
) -> EpisodeTrace:
    """
    Integrate one episode.

    Args:
        scenario: arena / pedestrian / timeout configuration
        policy: policy preset (also provides the logged policy_id)
        episode_index: index within the batch; seeds the episode
        robot, power: physical parameters (defaults when None)
        controller: replaces the controller built from `policy`
        crowd: replaces the randomly spawned pedestrians
        record_trace: keep per-step samples (off for batch runs)

    Raises:
        SimulationError: non-finite command/state or a kinematic-limit breach
    """
    robot = robot or RobotParams()
    power = power or PowerModel()
    seed = derive_episode_seed(scenario.master_seed, episode_index)
    rng = np.random.default_rng(seed)

    width, length = scenario.arena_width, scenario.arena_length
    x, y = scenario.start
    goal_x, goal_y = scenario.goal
    heading, v = 0.0, 0.0
    crowd = crowd if crowd is not None else spawn_pedestrians(scenario, seed, rng, robot)
    if controller is None:
        controller = build_controller(policy, robot, rng)

    dv_max = robot.a_max * DT
    p_prev = power.power(0.0, 0.0, robot.mass)
    energy_j, max_p, distance = 0.0, p_prev, 0.0
    times, speeds, accels, powers = [0.0], [0.0], [0.0], [p_prev]

    termination = Termination.TIMEOUT
    impulse = 0.0
    steps = 0
    max_steps = math.ceil(scenario.timeout / DT - 1e-9)

    for step in range(1, max_steps + 1):
        obs = Observation((step - 1) * DT, x, y, heading, v, robot.radius, goal_x, goal_y, crowd, width, length)
        v_cmd, w_cmd = controller.command(obs)
        if not (math.isfinite(v_cmd) and math.isfinite(w_cmd)):
            raise SimulationError(f"controller returned non-finite command ({v_cmd}, {w_cmd})", seed, episode_index)

        v_target = _clamp(v_cmd, 0.0, robot.v_max)
        v_new = min(v_target, v + dv_max) if v_target > v else max(v_target, v - dv_max)
        accel = (v_new - v) / DT
        heading = _wrap_angle(heading + _clamp(w_cmd, -robot.w_max, robot.w_max) * DT)
        x += v_new * math.cos(heading) * DT
        y += v_new * math.sin(heading) * DT
        distance += v_new * DT

        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(v_new)):
            raise SimulationError(f"non-finite robot state at step {step}", seed, episode_index)
        if v_new > robot.v_max * (1 + 1e-12) or abs(v_new - v) > dv_max * (1 + 1e-9):
            raise SimulationError(
                f"kinematic limit breached at step {step} (v={v_new}, dv={v_new - v})", seed, episode_index
            )

        p = power.power(v_new, accel, robot.mass)
        energy_j += 0.5 * (p_prev + p) * DT
        p_prev = p
        max_p = max(max_p, p)
        v = v_new
        steps = step
        if record_trace:
            times.append(step * DT)
            speeds.append(v)
            accels.append(accel)
            powers.append(p)

        if _hits_obstacle(x, y, robot.radius, crowd, width, length):
            termination = Termination.COLLISION
            impulse = robot.mass * abs(v)
            v = 0.0
            break
        if math.hypot(goal_x - x, goal_y - y) <= GOAL_RADIUS:
            termination = Termination.ARRIVE
            break
        crowd = _advance_crowd(crowd, x, y, robot.radius, width, length)

    duration = steps * DT
    if termination is Termination.TIMEOUT:
        duration = max(duration, scenario.timeout)
    mean_power = min(energy_j / duration, max_p)

    record = EpisodeRecord(
        episode_id=f"ep-{episode_index:06d}",
        scenario_id=scenario.scenario_id,
        policy_id=policy.policy_id,
        seed=seed,
        termination=termination,
        duration_s=duration,
        distance_m=distance,
        collision_impulse_ns=impulse,
        mean_power_w=mean_power,
        max_power_w=max_p,
        energy_wh=mean_power * duration / 3600.0,
    )
    return EpisodeTrace(
        record=record,
        times=np.asarray(times),
        speeds=np.asarray(speeds),
        accelerations=np.asarray(accels),
        powers=np.asarray(powers),
    )


def run_episode(
    scenario: ScenarioConfig,
    policy: PolicySpec,
    episode_index: int,
    robot: RobotParams | None = None,
    power: PowerModel | None = None,
) -> EpisodeRecord:
    return simulate_episode(scenario, policy, episode_index, robot, power, record_trace=False).record


def _run_indexed(
    scenario: ScenarioConfig,
    policy: PolicySpec,
    robot: RobotParams | None,
    power: PowerModel | None,
    episode_index: int,
) -> EpisodeRecord:
    return run_episode(scenario, policy, episode_index, robot, power)


def run_batch(
    scenario: ScenarioConfig,
    policy: PolicySpec,
    workers: int = 1,
    robot: RobotParams | None = None,
    power: PowerModel | None = None,
) -> list[EpisodeRecord]:
    """
    Run scenario.n_episodes episodes; output is in episode-index order for any worker count.

    workers > 1 distributes episodes over a process pool.
    """
    if workers < 1:
        raise ValidationError(f"workers must be >= 1 (got {workers})")
    indices = range(scenario.n_episodes)
    run_one = partial(_run_indexed, scenario, policy, robot, power)

    logger.info(
        "Simulating %d %s episodes with %s (seed=%d, workers=%d)",
        scenario.n_episodes,
        scenario.scenario_id,
        policy.policy_id,
        scenario.master_seed,
        workers,
    )
    if workers == 1:
        records = [run_one(i) for i in indices]
    else:
        chunksize = max(1, scenario.n_episodes // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_one, indices, chunksize=chunksize))

    counts = termination_counts(records)
    logger.info(
        "✅ %d episodes: Arrive=%d Collision=%d Timeout=%d",
        len(records),
        counts["Arrive"],
        counts["Collision"],
        counts["Timeout"],
    )
    return records


def termination_counts(records: Sequence[EpisodeRecord]) -> dict[str, int]:
    counts = Counter(r.termination.value for r in records)
    return {t.value: counts[t.value] for t in Termination}

