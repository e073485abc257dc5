# SPDX-FileCopyrightText: (C) 2026 rowdrive contributors
# SPDX-License-Identifier: Apache-2.0

import math

import numpy as np
import pytest
from builders import car

from rowdrive import geometry
from rowdrive.geometry import (
  ARowRegion,
  DomainError,
  ViolationTracker,
  a_row,
  detect_violations,
  footprint,
  overlap_area,
  region_grid,
  stopping_distance,
)
from rowdrive.world import ScenarioConfig, VehicleState


@pytest.mark.parametrize(
  "v,a_max,rho,k_rho,expected",
  [
    (0.0, 5.0, 0.0, 0.5, 0.0),
    (10.0, 5.0, 0.0, 0.5, 10.0),
    (10.0, 5.0, 1.0, 1.0, 5.0),
  ],
)
def test_stopping_distance(v, a_max, rho, k_rho, expected):
  assert stopping_distance(v, a_max, rho, k_rho) == pytest.approx(expected)


def test_stopping_distance_decreases_with_density():
  lengths = [stopping_distance(12.0, 5.0, rho, 0.5) for rho in range(6)]
  assert all(a > b for a, b in zip(lengths, lengths[1:]))


@pytest.mark.parametrize("a_max", [0.0, -1.0])
def test_stopping_distance_needs_braking(a_max):
  with pytest.raises(DomainError):
    stopping_distance(10.0, a_max, 0.0, 0.5)


def test_a_row_region():
  state = VehicleState(id=3, x=0.0, y=0.0, v_x=10.0, v_y=0.0, width=2.0)
  region = a_row(state, rho=0, k_rho=0.5, a_max=5.0)
  assert (region.x_min, region.x_max) == pytest.approx((0.0, 10.0))
  assert (region.y_min, region.y_max) == pytest.approx((-1.0, 1.0))
  assert region.owner_id == 3


def test_a_row_degenerate_cases():
  still = VehicleState(id=0, x=4.0, y=0.0, v_x=0.0, v_y=0.0)
  region = a_row(still, 0, 0.5, 5.0)
  assert region.x_min == region.x_max == 4.0
  assert region.area == 0.0
  sideways = VehicleState(
    id=0, x=4.0, y=0.0, v_x=0.0, v_y=10.0, heading=math.pi / 2
  )
  region = a_row(sideways, 0, 0.5, 5.0)
  assert region.x_max == pytest.approx(region.x_min)


def test_region_rejects_inversion():
  with pytest.raises(DomainError):
    ARowRegion(1.0, 0.0, 0.0, 1.0)


def test_overlap_area_simple():
  region = ARowRegion(0.0, 10.0, -2.0, 2.0)
  inside = [(1, -1), (3, -1), (3, 1), (1, 1)]
  assert overlap_area(inside, region) == pytest.approx(4.0)
  far = [(20, 0), (22, 0), (22, 2), (20, 2)]
  assert overlap_area(far, region) == 0.0


def _overlap_box(state, region):
  """The footprint's bounding box clipped to region, or None."""
  c, s = abs(math.cos(state.heading)), abs(math.sin(state.heading))
  half_x = (state.length * c + state.width * s) / 2
  half_y = (state.length * s + state.width * c) / 2
  x0 = max(region.x_min, state.x - half_x)
  x1 = min(region.x_max, state.x + half_x)
  y0 = max(region.y_min, state.y - half_y)
  y1 = min(region.y_max, state.y + half_y)
  if x0 >= x1 or y0 >= y1:
    return None
  return x0, x1, y0, y1


def _sampled_overlap(state, region, n):
  """Midpoint-grid estimate of the footprint area inside region. The grid
  spans only the clipped bounding box, so thin overlaps stay resolved."""
  box = _overlap_box(state, region)
  if box is None:
    return 0.0
  x0, x1, y0, y1 = box
  xs = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
  ys = y0 + (np.arange(n) + 0.5) * (y1 - y0) / n
  px, py = np.meshgrid(xs, ys)
  dx, dy = px - state.x, py - state.y
  c, s = math.cos(state.heading), math.sin(state.heading)
  u = dx * c + dy * s
  w = -dx * s + dy * c
  inside = (np.abs(u) <= state.length / 2) & (np.abs(w) <= state.width / 2)
  return inside.mean() * (x1 - x0) * (y1 - y0)


def _random_pairs(count, seed):
  rng = np.random.default_rng(seed)
  for _ in range(count):
    region = ARowRegion(0.0, rng.uniform(2, 15), -0.9, 0.9)
    state = VehicleState(
      id=1,
      x=rng.uniform(-2, region.x_max + 2),
      y=rng.uniform(-2, 2),
      v_x=0.0,
      v_y=0.0,
      heading=rng.uniform(-0.6, 0.6),
    )
    yield state, region


def _check_against_sampling(pairs, grid):
  overlapping = 0
  for state, region in pairs:
    exact = overlap_area(footprint(state), region)
    if _overlap_box(state, region) is None:
      assert exact == pytest.approx(0.0, abs=1e-9)
      continue
    sampled = _sampled_overlap(state, region, grid)
    if sampled > 0.1:
      overlapping += 1
      assert abs(exact - sampled) <= 0.01 * sampled
    else:
      assert exact == pytest.approx(sampled, abs=1e-3)
    assert overlap_area(region, footprint(state)) == pytest.approx(exact)
  return overlapping


def test_overlap_matches_sampling():
  assert _check_against_sampling(_random_pairs(200, seed=11), 1000) > 50


@pytest.mark.slow
def test_overlap_matches_sampling_full():
  assert _check_against_sampling(_random_pairs(1000, seed=12), 1000) > 250


def test_rear_vehicle_is_the_victim():
  config = ScenarioConfig()
  rear = car(0, 100.0, v=10.0)
  front = car(1, 106.0, v=0.0)
  events = detect_violations([rear, front], config, tick=1)
  assert len(events) == 1
  event = events[0]
  assert (event.violator_id, event.victim_id) == (1, 0)
  region = a_row(rear, 1, config.k_rho, config.a_max)
  expected = overlap_area(footprint(front), region)
  assert event.overlap_area == pytest.approx(expected)
  assert event.is_new and event.duration_so_far == 0.0


def test_no_violations_without_others():
  config = ScenarioConfig()
  assert detect_violations([car(0, 10.0)], config, tick=1) == []


def test_violations_span_the_seam():
  config = ScenarioConfig(road_length=1000)
  rear = car(0, 998.0, v=10.0)
  front = car(1, 4.0, v=0.0)
  events = detect_violations([rear, front], config, tick=1)
  assert [(e.violator_id, e.victim_id) for e in events] == [(1, 0)]


def test_continuing_overlap_extends_one_event():
  config = ScenarioConfig()
  tracker = ViolationTracker(config.tick)
  rear, front = car(0, 100.0), car(1, 106.0, v=0.0)
  first = detect_violations([rear, front], config, 5, tracker)
  second = detect_violations([rear, front], config, 6, tracker)
  assert first[0].start_tick == second[0].start_tick == 5
  assert second[0].duration_so_far == pytest.approx(0.1)
  assert not second[0].is_new
  detect_violations([rear, car(1, 300.0)], config, 7, tracker)
  again = detect_violations([rear, front], config, 8, tracker)
  assert again[0].start_tick == 8


def test_involving_limits_pairs():
  config = ScenarioConfig()
  a, b = car(0, 100.0), car(1, 106.0, v=10.0)
  c, d = car(2, 300.0), car(3, 306.0, v=0.0)
  events = detect_violations([a, b, c, d], config, 1, involving={0})
  ids = {e.violator_id for e in events} | {e.victim_id for e in events}
  assert ids == {0, 1}
  assert detect_violations([a, b, c, d], config, 1)


def test_region_grid_layout():
  config = ScenarioConfig(lane_count=2)
  subject = car(0, 100.0, lane=0, v=10.0)
  ahead = car(1, 110.0, lane=1, v=12.0)
  grid = region_grid(subject, [subject, ahead], config)
  assert grid.shape == (geometry.REGION_COUNT, geometry.REGION_FEATURES)
  cells = grid.reshape(3, 5, -1)
  # Lane below the subject is off the road
  assert (cells[0, :, 0] == -1.0).all()
  assert cells[1, 2, 0] == 1.0
  assert cells[2, 3, 0] == 1.0
  assert cells[2, 3, 1] == pytest.approx(10.0 / geometry.FEATURE_SCALE[1])
  assert cells[2, 3, 3] == pytest.approx(2.0 / geometry.FEATURE_SCALE[3])
  assert cells[2, 0, 0] == 0.0
