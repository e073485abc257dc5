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
Absolute right-of-way (A_ROW) regions and the violations of them.

A vehicle's A_ROW is the road-frame rectangle starting at its centre and
reaching one density-adjusted stopping distance ahead, exactly one vehicle
width wide. Its lateral extent does not rotate with the heading.
Another vehicle whose footprint overlaps that rectangle violates it.
"""

import dataclasses
import math
import sys

import numpy as np
from shapely import affinity
from shapely.geometry import Polygon, box

from .world import RowdriveError, VehicleState

AREA_EPSILON = 0.01  # m^2, below this an overlap is a grazing contact
DENSITY_WINDOW = 50.0  # m each side of the owner


class DomainError(RowdriveError, ValueError):
  pass


@dataclasses.dataclass(frozen=True)
class ARowRegion:
  x_min: float
  x_max: float
  y_min: float
  y_max: float
  owner_id: int = -1

  def __post_init__(self):
    if self.x_max < self.x_min or self.y_max < self.y_min:
      raise DomainError(f"inverted A_ROW region for {self.owner_id}")

  @property
  def length(self):
    return self.x_max - self.x_min

  @property
  def area(self):
    return self.length * (self.y_max - self.y_min)

  def polygon(self):
    return box(self.x_min, self.y_min, self.x_max, self.y_max)

  def shifted(self, dx):
    return dataclasses.replace(
      self, x_min=self.x_min + dx, x_max=self.x_max + dx
    )


@dataclasses.dataclass(frozen=True)
class RowViolationEvent:
  """violator's footprint overlaps victim's A_ROW at tick.
  Consecutive ticks of the same overlap share start_tick; duration_so_far
  grows while the overlap lasts.
  """

  violator_id: int
  victim_id: int
  tick: int
  overlap_area: float
  duration_so_far: float
  start_tick: int

  def __post_init__(self):
    if self.violator_id == self.victim_id:
      raise DomainError("a vehicle cannot violate its own A_ROW")
    if not self.overlap_area > 0:
      raise DomainError("violation without overlap")

  @property
  def is_new(self):
    return self.tick == self.start_tick

  def to_dict(self):
    return {
      "violator_id": self.violator_id,
      "victim_id": self.victim_id,
      "tick": self.tick,
      "overlap_area": float(self.overlap_area),
      "duration_so_far": float(self.duration_so_far),
      "start_tick": self.start_tick,
    }

  @classmethod
  def from_dict(cls, d):
    return cls(**d)


def stopping_distance(v, a_max, rho, k_rho):
  """Density-adjusted stopping distance
  L = v^2 / (2 a_max) / (1 + k_rho rho)."""
  if not a_max > 0:
    raise DomainError(f"a_max must be positive, got {a_max}")
  if v < 0 or rho < 0 or k_rho < 0:
    raise DomainError(f"negative input v={v} rho={rho} k_rho={k_rho}")
  return v * v / (2 * a_max) / (1 + k_rho * rho)


def a_row(state, rho, k_rho, a_max):
  """Computes a vehicle's A_ROW region for its current motion state.
  Backward-facing motion yields a zero-length region.
  """
  reach = stopping_distance(state.speed, a_max, rho, k_rho)
  x_max = state.x + reach * math.cos(state.heading)
  return ARowRegion(
    x_min=state.x,
    x_max=max(x_max, state.x),
    y_min=state.y - state.width / 2,
    y_max=state.y + state.width / 2,
    owner_id=state.id,
  )


def footprint(state, dx=0.0):
  """Oriented rectangle of a vehicle, optionally shifted along the road."""
  x = state.x + dx
  rect = box(
    x - state.length / 2,
    state.y - state.width / 2,
    x + state.length / 2,
    state.y + state.width / 2,
  )
  if not state.heading:
    return rect
  return affinity.rotate(
    rect, state.heading, origin=(x, state.y), use_radians=True
  )


def _shape(obj):
  if isinstance(obj, ARowRegion):
    return obj.polygon()
  if isinstance(obj, VehicleState):
    return footprint(obj)
  return obj if isinstance(obj, Polygon) else Polygon(obj)


def overlap_area(a, b):
  """Exact intersection area of two shapes: footprints, A_ROW regions,
  shapely polygons or vertex lists."""
  a, b = _shape(a), _shape(b)
  if not a.intersects(b):
    return 0.0
  return a.intersection(b).area


def local_density(owner, vehicles, config):
  """Other vehicles in the owner's lane within +-50 m, per 100 m."""
  return sum(
    1
    for v in vehicles
    if v.id != owner.id
    and v.lane_index == owner.lane_index
    and abs(config.wrap(v.x - owner.x)) <= DENSITY_WINDOW
  )


def _half_extents(state):
  c, s = abs(math.cos(state.heading)), abs(math.sin(state.heading))
  return (
    (state.length * c + state.width * s) / 2,
    (state.length * s + state.width * c) / 2,
  )


class ViolationTracker:
  """Remembers which (violator, victim) overlaps are ongoing so that a
  continuing overlap extends one event instead of starting new ones."""

  def __init__(self, dt):
    self.dt = dt
    self._active = {}

  def observe(self, tick, overlaps):
    """overlaps: list of (violator, victim, area). Returns events."""
    active = {}
    events = []
    for violator, victim, area in overlaps:
      start = self._active.get((violator, victim), tick)
      active[(violator, victim)] = start
      events.append(
        RowViolationEvent(
          violator_id=violator,
          victim_id=victim,
          tick=tick,
          overlap_area=area,
          duration_so_far=(tick - start) * self.dt,
          start_tick=start,
        )
      )
    self._active = active
    return events


def _candidate_pairs(vehicles, involving):
  if involving is None:
    return [(a, b) for a in vehicles for b in vehicles if a.id != b.id]
  pairs = []
  for a in vehicles:
    if a.id not in involving:
      continue
    for b in vehicles:
      if b.id != a.id:
        pairs.append((a, b))
        if b.id not in involving:
          pairs.append((b, a))
  return sorted(pairs, key=lambda p: (p[0].id, p[1].id))


def detect_violations(vehicles, config, tick, tracker=None, involving=None):
  """Returns one RowViolationEvent per (violator, victim) pair whose overlap
  exceeds AREA_EPSILON. Restrict to pairs touching the ids in involving, if
  given. Without a tracker every event starts at tick.
  """
  vehicles = sorted(vehicles, key=lambda v: v.id)
  regions = {}
  overlaps = []
  for victim, violator in _candidate_pairs(vehicles, involving):
    dx = config.wrap(violator.x - victim.x)
    region = regions.get(victim.id)
    if region is None:
      rho = local_density(victim, vehicles, config)
      region = a_row(victim, rho, config.k_rho, config.a_max)
      regions[victim.id] = region
    if region.length <= 0:
      continue
    hx, hy = _half_extents(violator)
    cx = victim.x + dx
    if (
      cx + hx <= region.x_min
      or cx - hx >= region.x_max
      or violator.y + hy <= region.y_min
      or violator.y - hy >= region.y_max
    ):
      continue
    area = overlap_area(footprint(violator, dx=cx - violator.x), region)
    if area > AREA_EPSILON:
      overlaps.append((violator.id, victim.id, area))
  if tracker is None:
    tracker = ViolationTracker(config.tick)
  return tracker.observe(tick, overlaps)


# RegionGrid: an ego-centric discretization of the neighbourhood around one
# subject vehicle. GRID_LANES lanes (subject-1, subject, subject+1) by
# GRID_CELLS longitudinal cells of GRID_CELL_LENGTH metres, flattened
# lane-major into REGION_COUNT region vectors of REGION_FEATURES values:
# occupancy, relative x, relative y, relative v_x, relative v_y, relative a_x.
GRID_LANES = 3
GRID_CELLS = 5
GRID_CELL_LENGTH = 10.0  # m
REGION_COUNT = GRID_LANES * GRID_CELLS
REGION_FEATURES = 6
# Scales that bring each feature to roughly unit range
FEATURE_SCALE = np.array([1.0, 10.0, 3.5, 10.0, 1.0, 5.0])


def region_grid(subject, vehicles, config):
  """Builds the RegionGrid of subject as a (REGION_COUNT, REGION_FEATURES)
  array. Each cell holds the occupant nearest its centre; empty cells are
  zero, cells past the road edge carry occupancy -1. The centre cell holds
  the subject's own kinematics: lateral offset from its lane centre,
  absolute velocities and longitudinal acceleration.
  """
  grid = np.zeros((GRID_LANES, GRID_CELLS, REGION_FEATURES))
  half = GRID_CELLS // 2
  for row in range(GRID_LANES):
    lane = subject.lane_index + row - 1
    if not 0 <= lane < config.lane_count:
      grid[row, :, 0] = -1.0
  best = {}
  for v in vehicles:
    if v.id == subject.id:
      continue
    row = v.lane_index - subject.lane_index + 1
    if not 0 <= row < GRID_LANES:
      continue
    dx = config.wrap(v.x - subject.x)
    col = round(dx / GRID_CELL_LENGTH) + half
    if not 0 <= col < GRID_CELLS or (row, col) == (1, half):
      continue
    miss = abs(dx - (col - half) * GRID_CELL_LENGTH)
    if (row, col) not in best or miss < best[row, col][0]:
      best[row, col] = (miss, dx, v)
  for (row, col), (_, dx, v) in best.items():
    grid[row, col] = (
      1.0,
      dx,
      v.y - subject.y,
      v.v_x - subject.v_x,
      v.v_y - subject.v_y,
      v.a_x - subject.a_x,
    )
  grid[1, half] = (
    1.0,
    0.0,
    subject.y - config.lane_center(subject.lane_index),
    subject.v_x,
    subject.v_y,
    subject.a_x,
  )
  grid /= FEATURE_SCALE
  return grid.reshape(REGION_COUNT, REGION_FEATURES)


def main(argv):
  """USAGE: geometry.py v a_max rho k_rho
  Prints the density-adjusted stopping distance."""
  v, a_max, rho, k_rho = (float(x) for x in argv[1:5])
  print(stopping_distance(v, a_max, rho, k_rho))
  return 0


if __name__ == "__main__":
  sys.exit(main(sys.argv))
