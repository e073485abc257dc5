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
The five reward terms, their social-compliance (SCE) mix, and the
four-part episode fitness used by the genetic search.
"""

import dataclasses
import math
import sys

from .world import ConfigError, Outcome, RowdriveError, SimEvent, leader_of

TTC_THRESHOLD = 3.5  # s
TTC_RANGE = 100.0  # m, leaders further away are ignored
TERMINAL_REWARDS = {
  Outcome.SAFE_ARRIVED: 100.0,
  Outcome.COLLISION: -60.0,
  Outcome.WRONG_LANE: -40.0,
}
SEVERE_CLOSING_SPEED = 15.0  # m/s, scores zero safety
COMFORT_SCALE = 10.0  # m/s^2, the full swing of the accel command


class ZeroInterval(RowdriveError, ValueError):
  pass


@dataclasses.dataclass(frozen=True)
class RewardWeights:
  w_v: float = 0.2
  w_c: float = 0.05
  w_s: float = 1.0
  w_d: float = 0.5
  beta: float = 0.5  # 1/s
  v_ref: float = None  # m/s, None follows the ego desired speed
  sce_mix: tuple = (0.2, 0.2, 0.2, 0.2, 0.2)

  def __post_init__(self):
    for key in ("w_v", "w_c", "w_s", "w_d", "beta"):
      if not getattr(self, key) >= 0:
        raise ConfigError("must be non-negative", f"reward.{key}")
    if self.v_ref is not None and not self.v_ref > 0:
      raise ConfigError("must be positive", "reward.v_ref")
    if len(self.sce_mix) != 5 or any(w < 0 for w in self.sce_mix):
      raise ConfigError("needs five non-negative weights", "reward.sce_mix")
    if not math.isclose(math.fsum(self.sce_mix), 1.0, abs_tol=1e-9):
      raise ConfigError("must sum to 1", "reward.sce_mix")


@dataclasses.dataclass(frozen=True)
class FitnessWeights:
  w1: float = 0.4  # safety
  w2: float = 0.3  # efficiency
  w3: float = 0.1  # comfort
  w4: float = 0.2  # SCE score

  def __post_init__(self):
    ws = (self.w1, self.w2, self.w3, self.w4)
    if any(w < 0 for w in ws):
      raise ConfigError("weights must be non-negative", "fitness")
    if not math.isclose(math.fsum(ws), 1.0, abs_tol=1e-9):
      raise ConfigError(f"weights sum to {math.fsum(ws)}, not 1", "fitness")


@dataclasses.dataclass(frozen=True)
class RewardBreakdown:
  r_v: float = 0.0
  r_c: float = 0.0
  r_s: float = 0.0
  r_d: float = 0.0
  r_t: float = 0.0
  total: float = 0.0

  @classmethod
  def mix(cls, sce_mix, r_v, r_c, r_s, r_d, r_t):
    parts = (r_v, r_c, r_s, r_d, r_t)
    total = math.fsum(w * r for w, r in zip(sce_mix, parts))
    return cls(*(float(p) for p in parts), total=total)

  @property
  def components(self):
    return (self.r_v, self.r_c, self.r_s, self.r_d, self.r_t)

  def to_dict(self):
    return {f.name: float(getattr(self, f.name)) for f in _BREAKDOWN_FIELDS}

  @classmethod
  def from_dict(cls, d):
    return cls(**d)


_BREAKDOWN_FIELDS = dataclasses.fields(RewardBreakdown)


def speed_reward(speed_history, v_ref, w_v):
  """Time-weighted mean absolute speed deviation, negated.
  speed_history is a list of (t, v) with t the tick index; t = 0 carries
  zero weight, so fewer than two entries score 0.
  """
  num = math.fsum(t * abs(v - v_ref) for t, v in speed_history)
  den = math.fsum(t for t, _ in speed_history)
  if len(speed_history) < 2 or den == 0:
    return 0.0
  return -w_v * num / den


def comfort_reward(a_t, a_prev, t, t_prev, w_c):
  if t == t_prev:
    raise ZeroInterval(f"no time elapsed between accelerations at t={t}")
  return -w_c * abs(a_t - a_prev) / (t - t_prev)


def safety_reward(ttc, w_s):
  """Linear penalty once time-to-collision drops below 3.5 s.
  None means nothing is closing in."""
  if ttc is None or ttc >= TTC_THRESHOLD:
    return 0.0
  return -w_s * (TTC_THRESHOLD - max(ttc, 0.0)) / TTC_THRESHOLD


def row_reward(delta_overlap, since_conflict, w_d, beta):
  """Penalty on growing A_ROW overlap, amplified for fresh conflicts by
  1 + exp(-beta T). Shrinking overlap (negative delta) earns reward."""
  return -w_d * delta_overlap * (1 + math.exp(-beta * since_conflict))


def terminal_reward(outcome):
  return TERMINAL_REWARDS.get(outcome, 0.0) if outcome else 0.0


def time_to_collision(ego, vehicles, config):
  """Gap over closing speed to the same-lane leader within 100 m.
  Returns None if there is no closing leader."""
  leader, gap = leader_of(ego, vehicles, config, max_range=TTC_RANGE)
  if leader is None:
    return None
  closing = ego.v_x - leader.v_x
  if closing <= 0:
    return None
  return max(gap, 0.0) / closing


class RewardTracker:
  """Incrementally scores one episode tick by tick for the ego."""

  def __init__(self, weights, config, ego_id=0):
    self.weights = weights
    self.config = config
    self.ego_id = ego_id
    self.v_ref = weights.v_ref or config.ego_desired_speed
    self._num = 0.0
    self._den = 0.0
    self._prev_accel = None
    self._prev_overlap = 0.0
    self._since_conflict = 0.0

  def step(self, tick, vehicles, violations, outcome=None):
    w = self.weights
    ego = next(v for v in vehicles if v.id == self.ego_id)
    t = tick * self.config.tick

    # Running form of speed_reward
    self._num += tick * abs(ego.speed - self.v_ref)
    self._den += tick
    r_v = -w.w_v * self._num / self._den if self._den else 0.0

    r_c = 0.0
    if self._prev_accel is not None:
      t_prev, a_prev = self._prev_accel
      r_c = comfort_reward(ego.a_x, a_prev, t, t_prev, w.w_c)
    self._prev_accel = (t, ego.a_x)

    r_s = safety_reward(time_to_collision(ego, vehicles, self.config), w.w_s)

    mine = [e for e in violations if e.violator_id == self.ego_id]
    overlap = math.fsum(e.overlap_area for e in mine)
    if mine:
      self._since_conflict = max(e.duration_so_far for e in mine)
    r_d = row_reward(
      overlap - self._prev_overlap, self._since_conflict, w.w_d, w.beta
    )
    self._prev_overlap = overlap

    r_t = terminal_reward(outcome)
    return RewardBreakdown.mix(w.sce_mix, r_v, r_c, r_s, r_d, r_t)


def episode_return(log):
  return math.fsum(t.reward.total for t in log.ticks if t.reward)


def fitness_components(episode, v_ref=None, sce_mix=None):
  """Safety, efficiency, comfort and SCE score of a finished episode, each
  mapped onto [0, 1]."""
  ego_id = episode.ego_id
  v_ref = v_ref or episode.scenario.ego_desired_speed
  states = [s for s in episode.ego_states() if s is not None]

  crashes = [
    e.value
    for t in episode.ticks
    for e in t.events
    if e.kind == SimEvent.COLLISION and e.involves(ego_id)
  ]
  safety = 1.0
  if crashes or episode.outcome == Outcome.COLLISION:
    safety = max(0.0, 1.0 - max(crashes, default=0.0) / SEVERE_CLOSING_SPEED)

  efficiency = 0.0
  if states and v_ref > 0:
    mean_speed = math.fsum(s.speed for s in states) / len(states)
    efficiency = min(max(mean_speed / v_ref, 0.0), 1.0)

  comfort = 1.0
  if len(states) >= 2:
    jerk = math.fsum(abs(b.a_x - a.a_x) for a, b in zip(states, states[1:]))
    comfort = 1.0 - min(jerk / (len(states) - 1) / COMFORT_SCALE, 1.0)

  mix_t = (sce_mix or RewardWeights().sce_mix)[4]
  sce = [
    t.reward.total - mix_t * t.reward.r_t for t in episode.ticks if t.reward
  ]
  score = 1.0
  if sce:
    score = 1.0 / (1.0 + max(0.0, -math.fsum(sce) / len(sce)))
  return safety, efficiency, comfort, score


def fitness(episode, fw, v_ref=None, sce_mix=None):
  """Weighted sum of the four fitness components, in [0, 1]."""
  parts = fitness_components(episode, v_ref=v_ref, sce_mix=sce_mix)
  ws = (fw.w1, fw.w2, fw.w3, fw.w4)
  return math.fsum(w * p for w, p in zip(ws, parts))


def main(argv):
  """USAGE: reward.py episode.jsonl...
  Prints the return and fitness components of each episode log."""
  from .world import EpisodeLog

  fw = FitnessWeights()
  for path in argv[1:]:
    log = EpisodeLog.read(path)
    parts = fitness_components(log)
    print(
      f"{path}: outcome={log.outcome.value} "
      + f"return={episode_return(log):.3f} "
      + " ".join(f"{n}={p:.3f}" for n, p in zip("SECR", parts))
      + f" fitness={fitness(log, fw):.3f}"
    )
  return 0


if __name__ == "__main__":
  sys.exit(main(sys.argv))
