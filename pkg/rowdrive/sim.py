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
Fixed-step kinematic simulation of a ring road.

Vehicle 0 is the ego and follows ControlCommands; every other vehicle is an
NPC driven by IDM car following plus MOBIL-style lane changes. Lane changes
of both kinds are two-second quintic lateral splines.
"""

import argparse
import collections
import dataclasses
import logging
import math
import sys

import numpy as np

from . import geometry
from .progress import Progress
from .reward import RewardTracker, RewardWeights
from .world import (
  N_NEIGHBORS,
  ConfigError,
  ControlCommand,
  EpisodeAborted,
  EpisodeLog,
  IntentLabel,
  Maneuver,
  NeighborSet,
  Outcome,
  ScenarioConfig,
  SimEvent,
  TickRecord,
  VehicleState,
  build_scenario,
  derive_seed,
)

log = logging.getLogger(__name__)

EGO_ID = 0
EMERGENCY_DECEL = 9.0  # m/s^2, physical braking cap
MIN_IDM_GAP = 1e-3  # m
LANE_CHANGE_DURATION = 2.0  # s
PLANNING_LEAD = 1.0  # s between a lane-change decision and lateral motion
DECISION_PERIOD = 1.0  # s between MOBIL evaluations of one vehicle
HEADING_LAG = 0.3  # s, first-order time constant of the ego heading
VISIBILITY = 60.0  # m, vehicles tracked for intention inference


@dataclasses.dataclass(frozen=True)
class IdmParams:
  desired_speed: float = 14.0  # m/s
  time_headway: float = 1.5  # s
  min_gap: float = 2.0  # m
  max_accel: float = 1.5  # m/s^2
  comfortable_decel: float = 2.0  # m/s^2

  def __post_init__(self):
    for f in dataclasses.fields(self):
      if not getattr(self, f.name) > 0:
        raise ConfigError("IDM parameters must be positive", f.name)

  def accel(self, v, gap, dv):
    return idm_accel(
      v,
      gap,
      dv,
      self.desired_speed,
      self.time_headway,
      self.min_gap,
      self.max_accel,
      self.comfortable_decel,
    )


@dataclasses.dataclass(frozen=True)
class LaneChangeRule:
  politeness: float = 0.3
  threshold: float = 0.2  # m/s^2, required advantage
  max_imposed_decel: float = 4.0  # m/s^2, on the new follower
  random_rate: float = 0.05  # chance per decision of an unmotivated change

  def __post_init__(self):
    if self.politeness < 0 or self.threshold < 0:
      raise ConfigError("must be non-negative", "lane_change")
    if not self.max_imposed_decel > 0:
      raise ConfigError("must be positive", "max_imposed_decel")
    if not 0 <= self.random_rate <= 1:
      raise ConfigError("must be a probability", "random_rate")


@dataclasses.dataclass
class NpcPolicy:
  """Rule-based driver of one NPC. planned_maneuver is the ground-truth
  intention; it turns LeftTurn/RightTurn at decision time, a full
  PLANNING_LEAD before any lateral motion."""

  idm: IdmParams
  lane_change: LaneChangeRule = LaneChangeRule()
  planned_maneuver: IntentLabel = IntentLabel.STRAIGHT
  onset_tick: int = -1


@dataclasses.dataclass(frozen=True)
class ManeuverRecord:
  vehicle_id: int
  decision_tick: int
  onset_tick: int
  label: IntentLabel
  executed: bool


def idm_accel(v, gap, dv, v0, time_headway, s0, a, b, delta=4):
  """Intelligent driver model acceleration, vectorized over numpy inputs.
  gap is bumper to bumper, dv the approach rate v - v_leader; an infinite
  gap means a free road. Results are clipped to [-EMERGENCY_DECEL, a].
  """
  v = np.asarray(v, dtype=float)
  gap = np.maximum(np.asarray(gap, dtype=float), MIN_IDM_GAP)
  approach = v * dv / (2 * np.sqrt(a * b))
  s_star = s0 + np.maximum(0.0, v * time_headway + approach)
  with np.errstate(invalid="ignore"):
    interaction = np.where(np.isinf(gap), 0.0, (s_star / gap) ** 2)
  acc = a * (1 - (v / v0) ** delta - interaction)
  acc = np.clip(acc, -EMERGENCY_DECEL, a)
  return float(acc) if acc.ndim == 0 else acc


def quintic(u):
  """Smooth 0 -> 1 blend with zero slope and curvature at both ends.
  Returns (position, derivative) for u in [0, 1]."""
  u = min(max(u, 0.0), 1.0)
  return (
    u**3 * (10 - 15 * u + 6 * u * u),
    30 * u * u * (1 - u) ** 2,
  )


def resolve_scenario(config):
  """Fixes the per-episode ego desired speed if a range is configured."""
  if not config.ego_desired_speed_range:
    return config
  rng = np.random.default_rng(derive_seed(config.rng_seed, "ego-speed"))
  lo, hi = config.ego_desired_speed_range
  speed = min(float(rng.uniform(lo, hi)), config.v_max_world)
  return dataclasses.replace(
    config, ego_desired_speed=speed, ego_desired_speed_range=()
  )


class World:
  """Mutable simulation state. Vehicle kinematics live in numpy arrays
  indexed by vehicle id; snapshot() produces immutable VehicleStates."""

  def __init__(self, config, vehicles=None, npcs=None, ego_controlled=True):
    self.config = config
    self.tick = 0
    if vehicles is None:
      vehicles = build_scenario(config)
    vehicles = sorted(vehicles, key=lambda v: v.id)
    if [v.id for v in vehicles] != list(range(len(vehicles))):
      raise ValueError("vehicle ids must be 0..n-1")
    self.n = len(vehicles)
    self.ego_controlled = ego_controlled
    self.x = np.array([v.x for v in vehicles]) % config.road_length
    self.y = np.array([v.y for v in vehicles])
    self.speed = np.array([math.hypot(v.v_x, v.v_y) for v in vehicles])
    self.heading = np.array([v.heading for v in vehicles])
    self.a_x = np.array([v.a_x for v in vehicles])
    self.a_y = np.array([v.a_y for v in vehicles])
    self.length = np.array([v.length for v in vehicles])
    self.width = np.array([v.width for v in vehicles])
    self.v_x = self.speed * np.cos(self.heading)
    self.v_y = self.speed * np.sin(self.heading)
    self.lane = self._lanes(self.y)
    self.target = np.full(self.n, -1)
    self.change_start = np.full(self.n, -1)
    self.change_from = np.zeros(self.n)
    self.ego_heading_cmd = 0.0

    if npcs is None:
      lo = config.npc_speed_range[0]
      npcs = {
        v.id: NpcPolicy(IdmParams(desired_speed=max(v.speed, lo)))
        for v in vehicles
      }
    self.npcs = npcs
    idm = [
      npcs[i].idm if i in npcs else IdmParams() for i in range(self.n)
    ]
    self._v0 = np.array([p.desired_speed for p in idm])
    self._headway = np.array([p.time_headway for p in idm])
    self._s0 = np.array([p.min_gap for p in idm])
    self._amax = np.array([p.max_accel for p in idm])
    self._bcomf = np.array([p.comfortable_decel for p in idm])
    self._rng = np.random.default_rng(derive_seed(config.rng_seed, "npc"))
    self.maneuvers = []
    self._pending = {}

  @property
  def ticks_per_second(self):
    return max(1, round(1 / self.config.tick))

  def _lanes(self, y):
    lanes = np.floor(y / self.config.lane_width).astype(int)
    return np.clip(lanes, 0, self.config.lane_count - 1)

  def is_npc(self, i):
    return not (self.ego_controlled and i == EGO_ID)

  def snapshot(self):
    return tuple(self.state(i) for i in range(self.n))

  def state(self, i):
    return VehicleState(
      id=i,
      x=float(self.x[i]),
      y=float(self.y[i]),
      v_x=float(self.v_x[i]),
      v_y=float(self.v_y[i]),
      a_x=float(self.a_x[i]),
      a_y=float(self.a_y[i]),
      heading=float(self.heading[i]),
      lane_index=int(self.lane[i]),
      width=float(self.width[i]),
      length=float(self.length[i]),
    )

  def changing(self, i):
    return self.change_start[i] >= 0

  def _wrap(self, dx):
    half = self.config.road_length / 2
    return (dx + half) % self.config.road_length - half

  def _occupies(self, lane):
    return (self.lane == lane) | (self.target == lane)

  def lane_neighbors(self, i, lane):
    """(leader, gap, follower, gap) of vehicle i if it were in lane.
    Missing neighbours are -1 with an infinite gap."""
    others = np.flatnonzero(self._occupies(lane))
    others = others[others != i]
    lead, lead_gap, fol, fol_gap = -1, math.inf, -1, math.inf
    if len(others):
      dx = self._wrap(self.x[others] - self.x[i])
      half = (self.length[others] + self.length[i]) / 2
      ahead = dx >= 0
      if ahead.any():
        k = np.argmin(np.where(ahead, dx, np.inf))
        lead, lead_gap = int(others[k]), float(dx[k] - half[k])
      if (~ahead).any():
        k = np.argmax(np.where(ahead, -np.inf, dx))
        fol, fol_gap = int(others[k]), float(-dx[k] - half[k])
    return lead, lead_gap, fol, fol_gap

  def _idm_one(self, i, leader, gap):
    dv = self.speed[i] - self.speed[leader] if leader >= 0 else 0.0
    return idm_accel(
      self.speed[i],
      gap,
      dv,
      self._v0[i],
      self._headway[i],
      self._s0[i],
      self._amax[i],
      self._bcomf[i],
    )

  def idm_all(self):
    """IDM acceleration of every vehicle against its leader in each lane
    it occupies, keeping the more cautious value."""
    cfg = self.config
    acc = np.full(self.n, np.inf)
    for lane in range(cfg.lane_count):
      members = np.flatnonzero(self._occupies(lane))
      if not len(members):
        continue
      order = members[np.argsort(self.x[members], kind="stable")]
      leaders = np.roll(order, -1)
      gap = (self.x[leaders] - self.x[order]) % cfg.road_length
      gap -= (self.length[leaders] + self.length[order]) / 2
      gap = np.where(leaders == order, np.inf, gap)
      dv = self.speed[order] - self.speed[leaders]
      a = idm_accel(
        self.speed[order],
        gap,
        dv,
        self._v0[order],
        self._headway[order],
        self._s0[order],
        self._amax[order],
        self._bcomf[order],
      )
      acc[order] = np.minimum(acc[order], a)
    return np.where(np.isinf(acc), self._amax, acc)

  def _change_safe(self, i, lane, rule):
    lead, lead_gap, fol, fol_gap = self.lane_neighbors(i, lane)
    if lead_gap <= 0 or fol_gap <= 0:
      return False, lead, lead_gap, fol, fol_gap
    if fol >= 0:
      imposed = self._idm_one(fol, i, fol_gap)
      if imposed < -rule.max_imposed_decel:
        return False, lead, lead_gap, fol, fol_gap
    return True, lead, lead_gap, fol, fol_gap

  def _mobil(self, i, acc):
    """Chooses a lane-change direction for NPC i or returns 0."""
    npc = self.npcs[i]
    rule = npc.lane_change
    lane = int(self.lane[i])
    lead_o, gap_o, old_fol, old_fol_gap = self.lane_neighbors(i, lane)
    best, best_gain = 0, rule.threshold
    options = []
    for delta in (1, -1):
      target = lane + delta
      if not 0 <= target < self.config.lane_count:
        continue
      ok, lead, lead_gap, fol, fol_gap = self._change_safe(i, target, rule)
      if not ok:
        continue
      options.append(delta)
      gain = self._idm_one(i, lead, lead_gap) - acc[i]
      if fol >= 0:
        # New follower before and after the change
        lead_f, gap_f, _, _ = self.lane_neighbors(fol, target)
        gain += rule.politeness * (
          self._idm_one(fol, i, fol_gap) - self._idm_one(fol, lead_f, gap_f)
        )
      if old_fol >= 0:
        # Old follower closes up to our current leader
        freed = gap_o + old_fol_gap + self.length[i]
        gain += rule.politeness * (
          self._idm_one(old_fol, lead_o, freed) - acc[old_fol]
        )
      if gain > best_gain:
        best, best_gain = delta, gain
    if not best and options and self._rng.random() < rule.random_rate:
      best = int(self._rng.choice(options))
    return best

  def _plan_npcs(self, acc):
    tps = self.ticks_per_second
    period = max(1, round(DECISION_PERIOD * tps))
    for i in range(self.n):
      if not self.is_npc(i) or i not in self.npcs:
        continue
      npc = self.npcs[i]
      if npc.onset_tick == self.tick:
        self._begin_planned(i, npc)
        continue
      if npc.onset_tick >= 0 or self.changing(i):
        continue
      if (self.tick + i) % period:
        continue
      delta = self._mobil(i, acc)
      if delta:
        npc.planned_maneuver = IntentLabel.LEFT_TURN
        if delta < 0:
          npc.planned_maneuver = IntentLabel.RIGHT_TURN
        npc.onset_tick = self.tick + round(PLANNING_LEAD * tps)
        self._pending[i] = (self.tick, int(self.lane[i]) + delta)

  def _begin_planned(self, i, npc):
    decided, target = self._pending.pop(i)
    ok = 0 <= target < self.config.lane_count and not self.changing(i)
    if ok:
      ok = self._change_safe(i, target, npc.lane_change)[0]
    self.maneuvers.append(
      ManeuverRecord(i, decided, npc.onset_tick, npc.planned_maneuver, ok)
    )
    npc.onset_tick = -1
    if ok:
      self._start_change(i, target)
    else:
      npc.planned_maneuver = IntentLabel.STRAIGHT

  def _start_change(self, i, target_lane):
    self.target[i] = target_lane
    self.change_start[i] = self.tick
    self.change_from[i] = self.y[i]

  def ego_command(self, command):
    """Applies a clamped ControlCommand to the ego. Returns the longitudinal
    acceleration to integrate."""
    if command.maneuver != Maneuver.KEEP and not self.changing(EGO_ID):
      # An off-road target is still driven to; the episode then ends
      target = int(self.lane[EGO_ID]) + command.maneuver.lane_delta
      self._start_change(EGO_ID, target)
    self.ego_heading_cmd = command.heading_angle
    return command.accel

  def step(self, ego_action=None, dt=None):
    """Advances the world by one tick. Returns the list of SimEvents."""
    cfg = self.config
    dt = cfg.tick if dt is None else dt
    if not dt > 0:
      raise ValueError(f"dt must be positive, got {dt}")
    events = []

    acc = self.idm_all()
    self._plan_npcs(acc)
    if self.ego_controlled:
      command, clamped = (ego_action or ControlCommand()).clamped()
      if clamped:
        detail = ",".join(clamped)
        events.append(SimEvent(SimEvent.CLAMPED, (EGO_ID,), 0.0, detail))
      acc[EGO_ID] = self.ego_command(command)

    # Position from the old velocity, then velocity from the acceleration
    self.x = (self.x + self.v_x * dt) % cfg.road_length
    old_speed = self.speed
    old_v_y = self.v_y
    speed = np.clip(old_speed + acc * dt, 0.0, cfg.v_max_world)
    self.a_x = (speed - old_speed) / dt
    self.speed = speed
    self.tick += 1

    v_y = np.zeros(self.n)
    for i in range(self.n):
      if self.changing(i):
        v_y[i] = self._advance_change(i, dt, events)
      elif self.ego_controlled and i == EGO_ID:
        k = min(dt / HEADING_LAG, 1.0)
        self.heading[i] += (self.ego_heading_cmd - self.heading[i]) * k
        v_y[i] = self.speed[i] * math.sin(self.heading[i])
        self.y[i] += old_v_y[i] * dt
    # Lateral motion may not push the speed magnitude past the cap
    v_y = np.clip(v_y, -cfg.v_max_world, cfg.v_max_world)
    self.v_x = np.sqrt(np.maximum(self.speed**2 - v_y**2, 0.0))
    self.v_x = np.minimum(self.v_x, self.speed)
    for i in range(self.n):
      if self.changing(i):
        self.heading[i] = math.atan2(v_y[i], max(self.v_x[i], 1e-9))
      elif not (self.ego_controlled and i == EGO_ID):
        self.heading[i] = 0.0
    self.v_y = v_y
    self.a_y = (v_y - old_v_y) / dt
    self.lane = self._lanes(self.y)

    for i in np.flatnonzero((self.y < 0) | (self.y > cfg.road_width)):
      events.append(SimEvent(SimEvent.OFF_ROAD, (int(i),)))
    events.extend(self.collisions())
    return events

  def _advance_change(self, i, dt, events):
    duration = LANE_CHANGE_DURATION
    elapsed = (self.tick - self.change_start[i]) * dt
    target_y = self.config.lane_center(self.target[i])
    span = target_y - self.change_from[i]
    pos, slope = quintic(elapsed / duration)
    self.y[i] = self.change_from[i] + span * pos
    v_y = span * slope / duration
    if elapsed >= duration - 1e-9:
      self.y[i] = target_y
      v_y = 0.0
      delta = 1 if span > 0 else -1
      maneuver = Maneuver.LEFT_CHANGE if delta > 0 else Maneuver.RIGHT_CHANGE
      events.append(
        SimEvent(
          SimEvent.LANE_CHANGE_COMPLETED, (i,), 0.0, maneuver.value
        )
      )
      self.change_start[i] = -1
      self.target[i] = -1
      if i in self.npcs and self.is_npc(i):
        self.npcs[i].planned_maneuver = IntentLabel.STRAIGHT
    return v_y

  def collisions(self):
    """Collision events for every pair of overlapping footprints, with the
    relative speed as the event value."""
    dx = self._wrap(self.x[None, :] - self.x[:, None])
    dy = self.y[None, :] - self.y[:, None]
    c, s = np.abs(np.cos(self.heading)), np.abs(np.sin(self.heading))
    hx = (self.length * c + self.width * s) / 2
    hy = (self.length * s + self.width * c) / 2
    near = (np.abs(dx) < hx[:, None] + hx[None, :]) & (
      np.abs(dy) < hy[:, None] + hy[None, :]
    )
    events = []
    for i, j in zip(*np.nonzero(np.triu(near, k=1))):
      a, b = self.state(int(i)), self.state(int(j))
      shifted = geometry.footprint(b, dx=dx[i, j] - (b.x - a.x))
      if geometry.overlap_area(geometry.footprint(a), shifted) > 0:
        closing = math.hypot(a.v_x - b.v_x, a.v_y - b.v_y)
        events.append(SimEvent(SimEvent.COLLISION, (int(i), int(j)), closing))
    return events


def step(world, ego_action, dt):
  """Advances world in place; returns (world, events)."""
  return world, world.step(ego_action, dt)


class IntentMonitor:
  """Keeps a rolling RegionGrid history for every vehicle near the ego and
  asks an intention model for the labels of the ego's neighbours."""

  MIN_TICKS = 3

  def __init__(self, model, config):
    self.model = model
    self.config = config
    self.history = {}

  def observe(self, vehicles, ego):
    window = self.model.window_ticks
    visible = set()
    for v in vehicles:
      if v.id == ego.id or abs(self.config.wrap(v.x - ego.x)) > VISIBILITY:
        continue
      visible.add(v.id)
      grids = self.history.get(v.id)
      if grids is None:
        grids = self.history[v.id] = collections.deque(maxlen=window)
      grids.append(geometry.region_grid(v, vehicles, self.config))
    for vid in set(self.history) - visible:
      del self.history[vid]

  def infer(self, ids):
    ready = [i for i in ids if len(self.history.get(i, ())) >= self.MIN_TICKS]
    if not ready:
      return {}
    window = self.model.window_ticks
    batch = np.zeros(
      (len(ready), window, geometry.REGION_COUNT, geometry.REGION_FEATURES)
    )
    for k, vid in enumerate(ready):
      grids = self.history[vid]
      batch[k, window - len(grids) :] = np.stack(grids)
    labels, _ = self.model.predict(batch)
    return dict(zip(ready, labels))


def neighbor_set(vehicles, config, intentions=None, ego_id=EGO_ID):
  """The ego plus its N_NEIGHBORS nearest vehicles by ring-wrapped
  Euclidean distance, each paired with its intention or None."""
  ego = next(v for v in vehicles if v.id == ego_id)
  intentions = intentions or {}
  dist = sorted(
    (math.hypot(config.wrap(v.x - ego.x), v.y - ego.y), v.id, v)
    for v in vehicles
    if v.id != ego_id
  )
  return NeighborSet(
    ego=ego,
    neighbors=tuple(
      (v, intentions.get(v.id)) for _, _, v in dist[:N_NEIGHBORS]
    ),
  )


class Episode:
  """One ego episode as an environment: observe(), step(command) until
  done, then log(). Deterministic given the scenario and the commands."""

  def __init__(
    self,
    config,
    intent_model=None,
    reward_weights=None,
    vehicles=None,
  ):
    self.scenario = resolve_scenario(config)
    self.world = World(self.scenario, vehicles=vehicles)
    self.rewards = RewardTracker(
      reward_weights or RewardWeights(), self.scenario, EGO_ID
    )
    self.violations = geometry.ViolationTracker(self.scenario.tick)
    self.monitor = None
    if intent_model is not None:
      self.monitor = IntentMonitor(intent_model, self.scenario)
    self.records = []
    self.outcome = None
    self._vehicles = self.world.snapshot()
    self._intentions = {}
    self._observe_intentions()

  @property
  def done(self):
    return self.outcome is not None

  def _observe_intentions(self):
    if self.monitor is None:
      return
    ego = self._vehicles[EGO_ID]
    self.monitor.observe(self._vehicles, ego)
    near = neighbor_set(self._vehicles, self.scenario)
    self._intentions = self.monitor.infer([v.id for v, _ in near.neighbors])

  def observe(self):
    return neighbor_set(self._vehicles, self.scenario, self._intentions)

  def _logged(self, vehicles):
    radius = self.scenario.log_radius
    if not radius:
      return vehicles
    ego = vehicles[EGO_ID]
    return tuple(
      v
      for v in vehicles
      if v.id == EGO_ID
      or math.hypot(self.scenario.wrap(v.x - ego.x), v.y - ego.y) <= radius
    )

  def step(self, command):
    """Returns (NeighborSet, RewardBreakdown, done)."""
    if self.done:
      raise RuntimeError("episode already finished")
    world = self.world
    events = world.step(command)
    vehicles = world.snapshot()
    violations = geometry.detect_violations(
      vehicles, self.scenario, world.tick, self.violations, {EGO_ID}
    )
    if any(
      e.kind == SimEvent.COLLISION and e.involves(EGO_ID) for e in events
    ):
      self.outcome = Outcome.COLLISION
    elif any(
      e.kind == SimEvent.OFF_ROAD and e.involves(EGO_ID) for e in events
    ):
      self.outcome = Outcome.WRONG_LANE
    elif world.tick >= self.scenario.max_ticks:
      self.outcome = Outcome.TIMEOUT
      if self.scenario.safe_arrival_on_timeout:
        self.outcome = Outcome.SAFE_ARRIVED
    reward = self.rewards.step(world.tick, vehicles, violations, self.outcome)
    clamped, _ = command.clamped()
    self.records.append(
      TickRecord(
        tick=world.tick,
        vehicles=self._logged(vehicles),
        action=clamped,
        reward=reward,
        violations=tuple(violations),
        events=tuple(events),
      )
    )
    self._vehicles = vehicles
    if not self.done:
      self._observe_intentions()
    return self.observe(), reward, self.done

  def log(self):
    return EpisodeLog(
      scenario=self.scenario,
      ticks=tuple(self.records),
      outcome=self.outcome or Outcome.TIMEOUT,
      ego_id=EGO_ID,
    )


def run_episode(
  config,
  policy,
  intent_model=None,
  reward_weights=None,
  vehicles=None,
):
  """Runs policy (NeighborSet -> ControlCommand) to a terminal event and
  returns the EpisodeLog. Policy failures surface as EpisodeAborted."""
  episode = Episode(config, intent_model, reward_weights, vehicles)
  obs = episode.observe()
  while not episode.done:
    try:
      command = policy(obs)
    except Exception as e:
      raise EpisodeAborted(episode.world.tick, e) from e
    obs, _, _ = episode.step(command)
  log.debug(
    "episode seed=%d ended %s after %d ticks",
    config.rng_seed,
    episode.outcome.value,
    episode.world.tick,
  )
  return episode.log()


def replay_commands(log_):
  """Re-simulates an episode from its scenario and logged ego commands."""
  commands = iter([t.action for t in log_.ticks])
  return run_episode(log_.scenario, lambda _: next(commands))


def keep_lane(_obs):
  return ControlCommand()


def main(argv):
  """USAGE: sim.py [--seed N] [--density D] [--ticks T] [out.jsonl]
  Runs one lane-keeping episode and writes its log.
  """
  parser = argparse.ArgumentParser(description=main.__doc__)
  parser.add_argument("--seed", type=int, default=0)
  parser.add_argument("--density", type=float, default=100.0)
  parser.add_argument("--ticks", type=int, default=400)
  parser.add_argument("out", nargs="?")
  args = parser.parse_args(argv[1:])
  config = ScenarioConfig(
    density=args.density, max_ticks=args.ticks, rng_seed=args.seed
  )
  progress = Progress(sys.stderr)
  progress.set_text("simulating")
  episode_log = run_episode(config, keep_lane)
  progress.clear()
  text = episode_log.encode()
  if args.out:
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
      f.write(text)
  else:
    sys.stdout.write(text)
  return 0


if __name__ == "__main__":
  sys.exit(main(sys.argv))
