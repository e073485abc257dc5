# SPDX-FileCopyrightText: (C) 2026 rowdrive contributors
# SPDX-License-Identifier: Apache-2.0

import numpy as np
import pytest
from builders import car, scenario

from rowdrive import sim
from rowdrive.sim import (
  Episode,
  IdmParams,
  World,
  idm_accel,
  keep_lane,
  neighbor_set,
  quintic,
  replay_commands,
  resolve_scenario,
  run_episode,
)
from rowdrive.world import (
  ControlCommand,
  EpisodeAborted,
  IntentLabel,
  Maneuver,
  Outcome,
  ScenarioConfig,
  SimEvent,
)


def test_free_kinematics():
  config = scenario()
  world = World(config, vehicles=[car(0, 0.0, v=10.0)])
  world, events = sim.step(world, ControlCommand(), 0.1)
  assert world.x[0] == pytest.approx(1.0)
  assert world.speed[0] == pytest.approx(10.0)
  assert events == []


def test_overlapping_vehicles_collide():
  config = scenario()
  world = World(
    config, vehicles=[car(0, 50.0), car(1, 51.0)], ego_controlled=False
  )
  events = world.step()
  kinds = [(e.kind, e.ids) for e in events]
  assert (SimEvent.COLLISION, (0, 1)) in kinds


def test_idm_brakes_hard_at_zero_gap():
  p = IdmParams()
  acc = idm_accel(10.0, 0.0, 0.0, 14.0, 1.5, 2.0, 1.5, p.comfortable_decel)
  assert acc <= -p.comfortable_decel
  assert p.accel(10.0, float("inf"), 0.0) > 0


def test_idm_is_vectorized():
  v = np.array([5.0, 10.0, 15.0])
  acc = idm_accel(v, np.full(3, np.inf), np.zeros(3), 14.0, 1.5, 2.0, 1.5, 2.0)
  assert acc.shape == (3,)
  assert acc[0] > acc[1] > 0 > acc[2]


def test_quintic_blend():
  assert quintic(0.0) == (0.0, 0.0)
  assert quintic(1.0) == (1.0, 0.0)
  assert quintic(0.5)[0] == pytest.approx(0.5)
  assert quintic(2.0) == quintic(1.0)


def test_clamped_command_emits_event():
  world = World(scenario(), vehicles=[car(0, 0.0)])
  events = world.step(ControlCommand(Maneuver.KEEP, 0.0, 9.0))
  clamped = [e for e in events if e.kind == SimEvent.CLAMPED]
  assert clamped and clamped[0].detail == "accel"
  assert world.a_x[0] == pytest.approx(5.0)


def test_empty_road_arrives_safely():
  log = run_episode(scenario(max_ticks=30), keep_lane)
  assert log.outcome == Outcome.SAFE_ARRIVED
  assert len(log.ticks) == 30
  assert [t.tick for t in log.ticks] == list(range(1, 31))


def test_timeout_without_safe_arrival():
  config = scenario(max_ticks=5, safe_arrival_on_timeout=False)
  assert run_episode(config, keep_lane).outcome == Outcome.TIMEOUT


def test_full_brake_stops_before_a_stationary_car():
  config = scenario(lane_count=1, max_ticks=60)
  ego = car(0, 0.0, lane=0, v=10.0, config=config)
  wall = car(1, 30.0, lane=0, v=0.0, config=config)
  brake = ControlCommand(Maneuver.KEEP, 0.0, -5.0)
  log = run_episode(config, lambda _: brake, vehicles=[ego, wall])
  assert log.outcome == Outcome.SAFE_ARRIVED
  assert log.ticks[-1].vehicle(0).speed == 0.0


def test_collision_ends_the_episode():
  config = scenario(lane_count=1, max_ticks=100)
  ego = car(0, 0.0, lane=0, v=15.0, config=config)
  wall = car(1, 20.0, lane=0, v=0.0, config=config)
  floor_it = ControlCommand(Maneuver.KEEP, 0.0, 5.0)
  log = run_episode(config, lambda _: floor_it, vehicles=[ego, wall])
  assert log.outcome == Outcome.COLLISION
  assert len(log.ticks) < 100
  assert log.ticks[-1].reward.r_t == -60.0


def test_lane_change_completes_in_two_seconds():
  config = scenario(max_ticks=40)
  commands = iter([ControlCommand(Maneuver.LEFT_CHANGE)] * 40)
  ego = car(0, 0.0, lane=0, config=config)
  log = run_episode(config, lambda _: next(commands), vehicles=[ego])
  done = [
    t.tick
    for t in log.ticks
    for e in t.events
    if e.kind == SimEvent.LANE_CHANGE_COMPLETED
  ]
  # The repeated command starts a second change once the first completes
  assert done[0] == 20
  assert log.ticks[19].vehicle(0).lane_index == 1
  assert log.ticks[19].vehicle(0).y == pytest.approx(config.lane_center(1))


def test_leaving_the_road_is_wrong_lane():
  config = scenario(max_ticks=40)
  ego = car(0, 0.0, lane=0, config=config)
  right = ControlCommand(Maneuver.RIGHT_CHANGE)
  log = run_episode(config, lambda _: right, vehicles=[ego])
  assert log.outcome == Outcome.WRONG_LANE
  assert log.ticks[-1].reward.r_t == -40.0


def test_episodes_are_deterministic():
  config = ScenarioConfig(density=80, max_ticks=60, rng_seed=5)
  first = run_episode(config, keep_lane).encode()
  assert run_episode(config, keep_lane).encode() == first


def test_replay_reproduces_the_log():
  config = ScenarioConfig(density=80, max_ticks=40, rng_seed=9)
  log = run_episode(config, keep_lane)
  assert replay_commands(log).encode() == log.encode()


def test_policy_failure_aborts():
  def broken(_obs):
    raise ZeroDivisionError

  with pytest.raises(EpisodeAborted) as e:
    run_episode(scenario(), broken)
  assert e.value.tick == 0
  assert isinstance(e.value.cause, ZeroDivisionError)


def test_step_after_done_is_refused():
  episode = Episode(scenario(max_ticks=1))
  episode.step(ControlCommand())
  assert episode.done
  with pytest.raises(RuntimeError):
    episode.step(ControlCommand())


def test_log_radius_keeps_the_ego():
  config = ScenarioConfig(density=100, max_ticks=3, log_radius=30.0)
  log = run_episode(config, keep_lane)
  for t in log.ticks:
    ego = t.vehicle(0)
    assert ego is not None
    assert all(
      abs(config.wrap(v.x - ego.x)) <= 30.0 + 1e-9 for v in t.vehicles
    )


def test_neighbor_set_is_nearest_six():
  config = ScenarioConfig()
  vehicles = [car(0, 100.0)] + [car(i, 100.0 + 10 * i) for i in range(1, 9)]
  near = neighbor_set(vehicles, config, {1: IntentLabel.LEFT_TURN})
  assert [v.id for v, _ in near.neighbors] == [1, 2, 3, 4, 5, 6]
  assert near.neighbors[0][1] == IntentLabel.LEFT_TURN
  assert near.neighbors[1][1] is None


def test_ego_speed_range_resolves_per_seed():
  config = ScenarioConfig(ego_desired_speed_range=(10.0, 20.0), rng_seed=4)
  resolved = resolve_scenario(config)
  assert 10.0 <= resolved.ego_desired_speed <= 20.0
  assert resolved.ego_desired_speed_range == ()
  assert resolve_scenario(config) == resolved
  assert resolve_scenario(resolved) is resolved


def test_npc_maneuvers_are_announced_before_motion():
  config = ScenarioConfig(density=150, rng_seed=2)
  world = World(config)
  for _ in range(300):
    world.step(ControlCommand())
  assert world.maneuvers
  tps = world.ticks_per_second
  for m in world.maneuvers:
    assert m.onset_tick - m.decision_tick == round(sim.PLANNING_LEAD * tps)
    assert m.label != IntentLabel.STRAIGHT
