# SPDX-FileCopyrightText: (C) 2026 rowdrive contributors
#   Licensed under the Apache License, Version 2.0 (the "License");
#   you may not use this file except in compliance with the License.
#   You may obtain a copy of the License at
#
#       http://www.apache.org/licenses/LICENSE-2.0
#
#   Unless required by applicable law or agreed to in writing, software
#   distributed under the License is distributed on an "AS IS" BASIS,
#   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#   See the License for the specific language governing permissions and
#   limitations under the License.
# SPDX-License-Identifier: Apache-2.0

"""
Value types shared by the whole stack: vehicle snapshots, scenario settings,
episode logs and their JSON-lines encoding.

The road is a ring of road_length metres with lane_count parallel lanes.
Lane 0 is the rightmost lane; lane centres sit at (lane + 0.5) * lane_width.
Every position is the centre of a vehicle's footprint.
"""

import dataclasses
import enum
import json
import math
import sys
import zlib

import numpy as np

LANE_WIDTH = 3.5  # m
MIN_SPAWN_GAP = 8.0  # m, bumper to bumper within a lane
N_NEIGHBORS = 6
EPISODE_FORMAT = "rowdrive-episode"
EPISODE_VERSION = 1


class RowdriveError(Exception):
  """Root of every error raised by rowdrive."""


class ConfigError(RowdriveError):
  def __init__(self, msg, key=None):
    super().__init__(f"{key}: {msg}" if key else msg)
    self.key = key


class InfeasibleDensity(RowdriveError):
  def __init__(self, required, capacity):
    super().__init__(
      f"{required} vehicles cannot be spawned; ring holds at most {capacity}"
    )
    self.required = required
    self.capacity = capacity


class UnreadableFile(RowdriveError):
  def __init__(self, path, reason):
    super().__init__(f"cannot read {path}: {reason}")
    self.path = path
    self.reason = reason


class EpisodeAborted(RowdriveError):
  def __init__(self, tick, cause):
    super().__init__(f"policy failed at tick {tick}: {cause!r}")
    self.tick = tick
    self.cause = cause


class IntentLabel(str, enum.Enum):
  LEFT_TURN = "LeftTurn"
  STRAIGHT = "Straight"
  RIGHT_TURN = "RightTurn"

  @property
  def index(self):
    return INTENT_LABELS.index(self)


INTENT_LABELS = tuple(IntentLabel)


class Maneuver(str, enum.Enum):
  LEFT_CHANGE = "LeftChange"
  KEEP = "Keep"
  RIGHT_CHANGE = "RightChange"

  @property
  def index(self):
    return MANEUVERS.index(self)

  @property
  def lane_delta(self):
    return {"LeftChange": 1, "Keep": 0, "RightChange": -1}[self.value]

  def intent(self):
    return INTENT_LABELS[self.index]


MANEUVERS = tuple(Maneuver)


class Outcome(str, enum.Enum):
  SAFE_ARRIVED = "SafeArrived"
  COLLISION = "Collision"
  WRONG_LANE = "WrongLane"
  TIMEOUT = "Timeout"


def derive_seed(base, *keys):
  """Derives an independent 64-bit seed from a base seed and string/int keys.
  The same (base, keys) always yields the same seed.
  """
  entropy = [int(base) & 0xFFFFFFFFFFFFFFFF]
  for key in keys:
    entropy.append(zlib.crc32(key.encode()) if isinstance(key, str) else key)
  state = np.random.SeedSequence(entropy).generate_state(2, np.uint32)
  return int(state[0]) << 32 | int(state[1])


def _num(v):
  # json renders numpy scalars through float.__repr__ but we keep it explicit
  return v if isinstance(v, int) and not isinstance(v, bool) else float(v)


@dataclasses.dataclass(frozen=True)
class VehicleState:
  """Kinematic snapshot of one vehicle in the road frame."""

  id: int
  x: float
  y: float
  v_x: float
  v_y: float
  a_x: float = 0.0
  a_y: float = 0.0
  heading: float = 0.0
  lane_index: int = 0
  width: float = 1.8
  length: float = 4.5

  def __post_init__(self):
    if not self.width > 0 or not self.length > 0:
      raise ValueError(f"vehicle {self.id} has a degenerate footprint")

  @property
  def speed(self):
    return math.hypot(self.v_x, self.v_y)

  def validate(self, config):
    """Checks the invariants that depend on the scenario."""
    if self.speed > config.v_max_world + 1e-9:
      raise ValueError(f"vehicle {self.id} exceeds v_max_world")
    if not 0 <= self.lane_index < config.lane_count:
      raise ValueError(f"vehicle {self.id} lane {self.lane_index} invalid")
    return self

  def to_dict(self):
    return {f.name: _num(getattr(self, f.name)) for f in _FIELDS[type(self)]}

  @classmethod
  def from_dict(cls, d):
    return cls(**d)


@dataclasses.dataclass(frozen=True)
class ControlCommand:
  """Hierarchical ego action: a discrete maneuver plus two continuous
  parameters. Positive accel accelerates, negative brakes."""

  HEADING_LIMIT = 0.5  # rad
  ACCEL_LIMIT = 5.0  # m/s^2

  maneuver: Maneuver = Maneuver.KEEP
  heading_angle: float = 0.0
  accel: float = 0.0

  def clamped(self):
    """Returns (command within bounds, names of clamped fields)."""
    limit = self.HEADING_LIMIT
    heading = min(max(self.heading_angle, -limit), limit)
    accel = min(max(self.accel, -self.ACCEL_LIMIT), self.ACCEL_LIMIT)
    fields = tuple(
      name
      for name, old, new in (
        ("heading_angle", self.heading_angle, heading),
        ("accel", self.accel, accel),
      )
      if old != new or not math.isfinite(old)
    )
    if not math.isfinite(heading):
      heading = 0.0
    if not math.isfinite(accel):
      accel = 0.0
    return ControlCommand(Maneuver(self.maneuver), heading, accel), fields

  def to_dict(self):
    return {
      "maneuver": Maneuver(self.maneuver).value,
      "heading_angle": float(self.heading_angle),
      "accel": float(self.accel),
    }

  @classmethod
  def from_dict(cls, d):
    return cls(Maneuver(d["maneuver"]), d["heading_angle"], d["accel"])


@dataclasses.dataclass(frozen=True)
class SimEvent:
  """Something the simulator noticed during a step.
  ids holds the vehicles involved; value carries the closing speed of a
  collision or is zero.
  """

  COLLISION = "Collision"
  OFF_ROAD = "OffRoad"
  LANE_CHANGE_COMPLETED = "LaneChangeCompleted"
  CLAMPED = "Clamped"

  kind: str
  ids: tuple = ()
  value: float = 0.0
  detail: str = ""

  def involves(self, vid):
    return vid in self.ids

  def to_dict(self):
    return {
      "kind": self.kind,
      "ids": [int(i) for i in self.ids],
      "value": float(self.value),
      "detail": self.detail,
    }

  @classmethod
  def from_dict(cls, d):
    return cls(d["kind"], tuple(d["ids"]), d["value"], d["detail"])


@dataclasses.dataclass(frozen=True)
class ScenarioConfig:
  lane_count: int = 3
  road_length: float = 1000.0  # m, ring
  density: float = 100.0  # vehicles/km, all lanes
  tick: float = 0.1  # s
  max_ticks: int = 400
  rng_seed: int = 0
  ego_desired_speed: float = 15.0  # m/s, also the reward's v_ref
  ego_desired_speed_range: tuple = ()  # (lo, hi) draws per episode if set
  npc_speed_range: tuple = (8.0, 16.0)  # m/s
  k_rho: float = 0.5
  a_max: float = 5.0  # m/s^2, A_ROW braking capability
  v_max_world: float = 40.0  # m/s
  lane_width: float = LANE_WIDTH
  vehicle_length: float = 4.5
  vehicle_width: float = 1.8
  min_spawn_gap: float = MIN_SPAWN_GAP
  log_radius: float = 0.0  # m, 0 records every vehicle
  safe_arrival_on_timeout: bool = True

  def __post_init__(self):
    checks = (
      ("lane_count", self.lane_count >= 1),
      ("road_length", self.road_length > 0),
      ("density", self.density >= 0),
      ("tick", self.tick > 0),
      ("max_ticks", self.max_ticks >= 1),
      ("ego_desired_speed", 0 < self.ego_desired_speed <= self.v_max_world),
      (
        "npc_speed_range",
        len(self.npc_speed_range) == 2
        and 0 < self.npc_speed_range[0] <= self.npc_speed_range[1]
        and self.npc_speed_range[1] <= self.v_max_world,
      ),
      (
        "ego_desired_speed_range",
        not self.ego_desired_speed_range
        or len(self.ego_desired_speed_range) == 2
        and 0
        < self.ego_desired_speed_range[0]
        <= self.ego_desired_speed_range[1],
      ),
      ("k_rho", self.k_rho >= 0),
      ("a_max", self.a_max > 0),
      ("lane_width", self.lane_width > 0),
      ("vehicle_length", self.vehicle_length > 0),
      ("vehicle_width", 0 < self.vehicle_width < self.lane_width),
      ("min_spawn_gap", self.min_spawn_gap >= 0),
      ("log_radius", self.log_radius >= 0),
    )
    for key, ok in checks:
      if not ok:
        raise ConfigError(f"invalid value {getattr(self, key)!r}", key)

  @property
  def vehicle_count(self):
    return math.floor(self.density * self.road_length / 1000 + 1e-9)

  @property
  def slots_per_lane(self):
    return math.floor(
      self.road_length / (self.vehicle_length + self.min_spawn_gap) + 1e-9
    )

  @property
  def spawn_capacity(self):
    return self.lane_count * self.slots_per_lane

  @property
  def road_width(self):
    return self.lane_count * self.lane_width

  def lane_center(self, lane):
    return (lane + 0.5) * self.lane_width

  def lane_of(self, y):
    """Nearest lane to a lateral position, clamped to the road."""
    lane = math.floor(y / self.lane_width)
    return min(max(lane, 0), self.lane_count - 1)

  def wrap(self, dx):
    """Maps a longitudinal difference onto [-road_length/2, road_length/2)."""
    half = self.road_length / 2
    return (dx + half) % self.road_length - half

  def to_dict(self):
    d = {}
    for f in _FIELDS[type(self)]:
      v = getattr(self, f.name)
      d[f.name] = [_num(x) for x in v] if isinstance(v, tuple) else _num(v)
      if isinstance(v, bool):
        d[f.name] = v
    return d

  @classmethod
  def from_dict(cls, d):
    return cls(
      **{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
    )


@dataclasses.dataclass(frozen=True)
class NeighborSet:
  """The ego and its nearest surrounding vehicles, each paired with an
  inferred intention (None when unknown)."""

  ego: VehicleState
  neighbors: tuple = ()

  def __post_init__(self):
    ids = [v.id for v, _ in self.neighbors]
    if len(set(ids)) != len(ids) or self.ego.id in ids:
      raise ValueError("neighbor set repeats a vehicle")


@dataclasses.dataclass(frozen=True)
class TickRecord:
  tick: int
  vehicles: tuple
  action: object = None  # ControlCommand
  reward: object = None  # reward.RewardBreakdown
  violations: tuple = ()  # geometry.RowViolationEvent
  events: tuple = ()  # SimEvent

  def vehicle(self, vid):
    return next((v for v in self.vehicles if v.id == vid), None)

  def to_dict(self):
    return {
      "tick": self.tick,
      "vehicles": [v.to_dict() for v in self.vehicles],
      "action": self.action.to_dict() if self.action else None,
      "reward": self.reward.to_dict() if self.reward else None,
      "violations": [v.to_dict() for v in self.violations],
      "events": [e.to_dict() for e in self.events],
    }

  @classmethod
  def from_dict(cls, d):
    from .geometry import RowViolationEvent
    from .reward import RewardBreakdown

    return cls(
      tick=d["tick"],
      vehicles=tuple(VehicleState.from_dict(v) for v in d["vehicles"]),
      action=ControlCommand.from_dict(d["action"]) if d["action"] else None,
      reward=RewardBreakdown.from_dict(d["reward"]) if d["reward"] else None,
      violations=tuple(
        RowViolationEvent.from_dict(v) for v in d["violations"]
      ),
      events=tuple(SimEvent.from_dict(e) for e in d["events"]),
    )


@dataclasses.dataclass(frozen=True)
class EpisodeLog:
  """Per-tick trajectory record plus the terminal outcome."""

  scenario: ScenarioConfig
  ticks: tuple = ()
  outcome: Outcome = Outcome.TIMEOUT
  ego_id: int = 0

  def __post_init__(self):
    if len(self.ticks) > self.scenario.max_ticks:
      raise ValueError("episode log is longer than max_ticks")

  def ego_states(self):
    return [t.vehicle(self.ego_id) for t in self.ticks]

  def header(self):
    return {
      "format": EPISODE_FORMAT,
      "version": EPISODE_VERSION,
      "scenario": self.scenario.to_dict(),
      "outcome": Outcome(self.outcome).value,
      "ego_id": self.ego_id,
      "ticks": len(self.ticks),
    }

  def encode(self):
    lines = [dumps(self.header())]
    lines += [dumps(t.to_dict()) for t in self.ticks]
    return "\n".join(lines) + "\n"

  @classmethod
  def decode(cls, text):
    lines = text.splitlines()
    header = json.loads(lines[0])
    if header.get("format") != EPISODE_FORMAT:
      raise RowdriveError("not an episode log")
    if header.get("version") != EPISODE_VERSION:
      raise RowdriveError(f"unsupported episode version {header['version']}")
    ticks = tuple(TickRecord.from_dict(json.loads(line)) for line in lines[1:])
    if len(ticks) != header["ticks"]:
      raise RowdriveError("episode log is truncated")
    return cls(
      scenario=ScenarioConfig.from_dict(header["scenario"]),
      ticks=ticks,
      outcome=Outcome(header["outcome"]),
      ego_id=header["ego_id"],
    )

  def write(self, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
      f.write(self.encode())

  @classmethod
  def read(cls, path):
    """Decodes the log at path; any failure is an UnreadableFile."""
    try:
      with open(path, encoding="utf-8") as f:
        return cls.decode(f.read())
    except OSError as e:
      raise UnreadableFile(path, e.strerror or e) from e
    except (ValueError, KeyError, IndexError, TypeError) as e:
      raise UnreadableFile(path, f"malformed log ({e})") from e
    except UnreadableFile:
      raise
    except RowdriveError as e:
      raise UnreadableFile(path, e) from e


_FIELDS = {
  cls: dataclasses.fields(cls) for cls in (VehicleState, ScenarioConfig)
}


def dumps(obj):
  """Canonical single-line JSON used by every JSONL artifact."""
  return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def build_scenario(config):
  """Spawns the initial world for a scenario: a list of VehicleStates with
  the ego (id 0) first. The same config always yields the same world.
  """
  n = config.vehicle_count
  if n > config.spawn_capacity:
    raise InfeasibleDensity(n, config.spawn_capacity)
  if n == 0:
    n = 1  # there is always an ego
  rng = np.random.default_rng(derive_seed(config.rng_seed, "spawn"))
  slots = config.slots_per_lane
  spacing = config.road_length / slots
  slack = spacing - config.vehicle_length - config.min_spawn_gap
  chosen = rng.choice(config.lane_count * slots, size=n, replace=False)
  jitter = rng.uniform(0.0, max(slack, 0.0), size=n)
  lo, hi = config.npc_speed_range
  speeds = rng.uniform(lo, hi, size=n)

  lanes = [int(c) // slots for c in chosen]
  xs = [(int(c) % slots) * spacing + j for c, j in zip(chosen, jitter)]
  # The ego starts no faster than its leader so the first ticks are calm
  ego_lane, ego_x = lanes[0], xs[0]
  ahead = [
    (config.wrap(x - ego_x) % config.road_length, s)
    for lane, x, s in zip(lanes[1:], xs[1:], speeds[1:])
    if lane == ego_lane
  ]
  ego_speed = config.ego_desired_speed
  if ahead:
    ego_speed = min(ego_speed, min(ahead)[1])
  speeds[0] = ego_speed

  return [
    VehicleState(
      id=i,
      x=float(xs[i]),
      y=config.lane_center(lanes[i]),
      v_x=float(speeds[i]),
      v_y=0.0,
      lane_index=lanes[i],
      width=config.vehicle_width,
      length=config.vehicle_length,
    ).validate(config)
    for i in range(n)
  ]


def leader_of(subject, vehicles, config, max_range=math.inf):
  """Returns (leader, bumper gap) for the nearest vehicle ahead in the
  subject's lane, or (None, inf) if none lies within max_range."""
  best, best_dx = None, math.inf
  for v in vehicles:
    if v.id == subject.id or v.lane_index != subject.lane_index:
      continue
    dx = config.wrap(v.x - subject.x)
    if 0 <= dx < best_dx and dx <= max_range:
      best, best_dx = v, dx
  if best is None:
    return None, math.inf
  return best, best_dx - (best.length + subject.length) / 2


def main(argv):
  """USAGE: world.py [episode.jsonl]
  Decodes an episode log and re-encodes it to stdout.
  """
  path = argv[1] if len(argv) > 1 else None
  with open(path) if path else sys.stdin as f:
    log = EpisodeLog.decode(f.read())
  sys.stdout.write(log.encode())
  return 0


if __name__ == "__main__":
  sys.exit(main(sys.argv))
