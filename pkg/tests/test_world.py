# SPDX-FileCopyrightText: (C) 2026 rowdrive contributors
# SPDX-License-Identifier: Apache-2.0

import math

import pytest
from builders import car, episode_log, scenario

from rowdrive.world import (
  ConfigError,
  ControlCommand,
  EpisodeLog,
  InfeasibleDensity,
  Maneuver,
  Outcome,
  RowdriveError,
  ScenarioConfig,
  SimEvent,
  UnreadableFile,
  build_scenario,
  derive_seed,
  leader_of,
)


def test_spawn_count_follows_density():
  config = ScenarioConfig(density=60, road_length=1000)
  assert len(build_scenario(config)) == 60


def test_spawn_is_deterministic():
  config = ScenarioConfig(density=100, rng_seed=7)
  assert build_scenario(config) == build_scenario(config)
  other = ScenarioConfig(density=100, rng_seed=8)
  assert build_scenario(config) != build_scenario(other)


def test_infeasible_density():
  with pytest.raises(InfeasibleDensity) as e:
    build_scenario(ScenarioConfig(density=1000, road_length=100))
  assert e.value.required == 100
  assert e.value.capacity < 100


def test_spawn_respects_gaps_and_ego_speed():
  config = ScenarioConfig(density=150, rng_seed=3)
  vehicles = build_scenario(config)
  assert vehicles[0].id == 0
  for a in vehicles:
    for b in vehicles:
      if a.id < b.id and a.lane_index == b.lane_index:
        centre = abs(config.wrap(a.x - b.x))
        assert centre - config.vehicle_length >= config.min_spawn_gap - 1e-9
  leader, _ = leader_of(vehicles[0], vehicles, config)
  assert vehicles[0].speed <= config.ego_desired_speed
  if leader is not None:
    assert vehicles[0].speed <= leader.speed


def test_empty_road_still_has_an_ego():
  vehicles = build_scenario(ScenarioConfig(density=0))
  assert [v.id for v in vehicles] == [0]


@pytest.mark.parametrize(
  "key,value",
  [
    ("lane_count", 0),
    ("road_length", -1.0),
    ("density", -5.0),
    ("tick", 0.0),
    ("vehicle_width", 4.0),
  ],
)
def test_scenario_validation_names_the_field(key, value):
  with pytest.raises(ConfigError) as e:
    ScenarioConfig(**{key: value})
  assert e.value.key == key


def test_command_clamping():
  cmd, fields = ControlCommand(Maneuver.KEEP, 0.9, -7.0).clamped()
  assert cmd.heading_angle == 0.5
  assert cmd.accel == -5.0
  assert fields == ("heading_angle", "accel")
  cmd, fields = ControlCommand(Maneuver.KEEP, 0.1, math.nan).clamped()
  assert cmd.accel == 0.0
  assert fields == ("accel",)
  assert ControlCommand().clamped() == (ControlCommand(), ())


def test_ring_wrap():
  config = ScenarioConfig(road_length=1000)
  assert config.wrap(990.0 - 10.0) == pytest.approx(-20.0)
  assert config.wrap(10.0 - 990.0) == pytest.approx(20.0)
  assert config.wrap(0.0) == 0.0


def test_leader_across_the_seam():
  config = ScenarioConfig(road_length=1000)
  ego = car(0, 995.0)
  ahead = car(1, 15.0)
  behind = car(2, 980.0)
  leader, gap = leader_of(ego, [ego, ahead, behind], config)
  assert leader.id == 1
  assert gap == pytest.approx(20.0 - 4.5)
  assert leader_of(ego, [ego, behind], config, max_range=10.0) == (
    None,
    math.inf,
  )


def test_derive_seed():
  assert derive_seed(1, "spawn") == derive_seed(1, "spawn")
  assert derive_seed(1, "spawn") != derive_seed(1, "npc")
  assert derive_seed(1, "spawn", 2) != derive_seed(1, "spawn", 3)
  assert 0 <= derive_seed(2**70, "x") < 2**64


def test_episode_log_round_trip(tmp_path):
  config = scenario(max_ticks=3)
  frames = [[car(0, 10.0 * k), car(1, 50.0 + k)] for k in range(3)]
  events = [(), (SimEvent(SimEvent.COLLISION, (0, 1), 3.25),), ()]
  log = episode_log(frames, config, Outcome.COLLISION, events=events)
  text = log.encode()
  assert EpisodeLog.decode(text) == log
  assert EpisodeLog.decode(text).encode() == text
  path = tmp_path / "episode.jsonl"
  log.write(path)
  assert path.read_text() == text
  assert EpisodeLog.read(path) == log


def test_episode_log_rejects_damage():
  log = episode_log([[car(0, 0.0)], [car(0, 1.0)]])
  lines = log.encode().splitlines()
  with pytest.raises(RowdriveError, match="truncated"):
    EpisodeLog.decode("\n".join(lines[:-1]))
  with pytest.raises(RowdriveError, match="not an episode"):
    EpisodeLog.decode('{"format":"other"}\n')


@pytest.mark.parametrize(
  "text",
  ["", '{"format":"rowdrive-episode"\n', '{"format":"other"}\n'],
)
def test_read_names_the_bad_file(tmp_path, text):
  path = tmp_path / "broken.jsonl"
  path.write_text(text)
  with pytest.raises(UnreadableFile) as e:
    EpisodeLog.read(str(path))
  assert e.value.path == str(path)
  assert "broken.jsonl" in str(e.value)


def test_read_of_a_missing_file(tmp_path):
  with pytest.raises(UnreadableFile, match="nowhere.jsonl"):
    EpisodeLog.read(str(tmp_path / "nowhere.jsonl"))


def test_episode_log_bounded_by_max_ticks():
  with pytest.raises(ValueError):
    episode_log([[car(0, 0.0)]] * 3, scenario(max_ticks=2))
