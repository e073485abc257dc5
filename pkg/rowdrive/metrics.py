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
Driving metrics computed from episode logs alone.

Time headway (THW, sometimes spelled TWH) is the bumper gap to the
same-lane leader divided by the ego speed.
"""

import collections
import dataclasses
import math
import sys

from .world import Outcome, RowdriveError, SimEvent, leader_of

THW_MIN_SPEED = 0.5  # m/s, slower ego ticks have no defined headway


class EmptyInput(RowdriveError, ValueError):
  pass


@dataclasses.dataclass(frozen=True)
class MetricsReport:
  avg_velocity: float  # m/s
  avg_acceleration: float  # m/s^2
  avg_yaw_rate: float  # rad/s
  min_thw: float  # s, None when no episode ever had a leader
  avg_row_violations: float  # per episode
  avg_lane_changes: float  # per episode
  episodes: int

  FIELDS = (
    "avg_velocity",
    "avg_acceleration",
    "avg_yaw_rate",
    "min_thw",
    "avg_row_violations",
    "avg_lane_changes",
    "episodes",
  )

  def to_dict(self):
    return {k: getattr(self, k) for k in self.FIELDS}


def _mean(values):
  return math.fsum(values) / len(values) if values else 0.0


def _ego_track(episode):
  """(TickRecord, ego state) for every tick that logged the ego."""
  for t in episode.ticks:
    ego = t.vehicle(episode.ego_id)
    if ego is not None:
      yield t, ego


def headways(episode):
  """THW per logged tick; None where undefined."""
  out = []
  for t, ego in _ego_track(episode):
    _, gap = leader_of(ego, t.vehicles, episode.scenario)
    if ego.speed < THW_MIN_SPEED or math.isinf(gap):
      out.append(None)
    else:
      out.append(max(gap, 0.0) / ego.speed)
  return out


def yaw_rates(episode):
  states = [ego for _, ego in _ego_track(episode)]
  dt = episode.scenario.tick
  return [abs(b.heading - a.heading) / dt for a, b in zip(states, states[1:])]


def row_violation_count(episode):
  """Distinct violations: one per (violator, victim, onset)."""
  return len(
    {
      (v.violator_id, v.victim_id, v.start_tick)
      for t in episode.ticks
      for v in t.violations
    }
  )


def lane_change_count(episode):
  return sum(
    1
    for t in episode.ticks
    for e in t.events
    if e.kind == SimEvent.LANE_CHANGE_COMPLETED and e.involves(episode.ego_id)
  )


def compute_metrics(logs):
  """Pools speed, acceleration and yaw rate over every tick of every
  episode; averages per-episode minimum THW and counts over episodes.
  Invariant under episode order."""
  logs = list(logs)
  if not logs:
    raise EmptyInput("no episodes to measure")
  speeds, accels, yaws, min_thws = [], [], [], []
  violations, lane_changes = [], []
  for episode in logs:
    for _, ego in _ego_track(episode):
      speeds.append(ego.speed)
      accels.append(math.hypot(ego.a_x, ego.a_y))
    yaws.extend(yaw_rates(episode))
    defined = [h for h in headways(episode) if h is not None]
    if defined:
      min_thws.append(min(defined))
    violations.append(row_violation_count(episode))
    lane_changes.append(lane_change_count(episode))
  if not speeds:
    raise EmptyInput("episodes hold no ego ticks")
  return MetricsReport(
    avg_velocity=_mean(speeds),
    avg_acceleration=_mean(accels),
    avg_yaw_rate=_mean(yaws),
    min_thw=_mean(min_thws) if min_thws else None,
    avg_row_violations=_mean(violations),
    avg_lane_changes=_mean(lane_changes),
    episodes=len(logs),
  )


def outcome_counts(logs):
  counts = collections.Counter(episode.outcome for episode in logs)
  return {o.value: counts.get(o, 0) for o in Outcome}


def tick_series(episode):
  """Per-tick metric rows of one episode; replay compares these."""
  thw = headways(episode)
  yaw = [0.0] + yaw_rates(episode)
  rows = []
  for k, (t, ego) in enumerate(_ego_track(episode)):
    rows.append(
      {
        "tick": t.tick,
        "speed": ego.speed,
        "accel": math.hypot(ego.a_x, ego.a_y),
        "yaw_rate": yaw[k],
        "thw": thw[k],
        "violations": len(t.violations),
      }
    )
  return rows


def main(argv):
  """USAGE: metrics.py episode.jsonl...
  Prints the metrics report of a set of episode logs."""
  from .world import EpisodeLog

  try:
    logs = [EpisodeLog.read(p) for p in argv[1:]]
    report = compute_metrics(logs)
  except RowdriveError as e:
    print(f"metrics: {e}", file=sys.stderr)
    return 2
  for key, value in report.to_dict().items():
    print(f"{key}\t{value}")
  return 0


if __name__ == "__main__":
  sys.exit(main(sys.argv))
