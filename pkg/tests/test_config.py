# SPDX-FileCopyrightText: (C) 2026 rowdrive contributors
# SPDX-License-Identifier: Apache-2.0

import pytest

from rowdrive import config as cfg
from rowdrive.config import RunConfig, parse_text, parse_value
from rowdrive.world import ConfigError


@pytest.mark.parametrize(
  "text,expected",
  [
    ("150", 150),
    ("-3", -3),
    ("0.25", 0.25),
    ("1e3", 1000.0),
    ("true", True),
    ("False", False),
    ("none", None),
    ("inf", float("inf")),
    ("interleaved", "interleaved"),
    ('"two words"', "two words"),
    ('"a, b"', "a, b"),
    (r'"say \"hi\""', 'say "hi"'),
    ("0.2, 0.2, 0.6", (0.2, 0.2, 0.6)),
    ("1, x, true", (1, "x", True)),
    ("  7  ", 7),
  ],
)
def test_parse_value(text, expected):
  assert parse_value(text) == expected


@pytest.mark.parametrize(
  "text", ["", "   ", "1,", ", 1", "1,,2", "1 2", '"open']
)
def test_parse_value_errors(text):
  with pytest.raises(ConfigError) as e:
    parse_value(text, "scenario.density")
  assert e.value.key == "scenario.density"


def test_parse_text():
  text = """
    # a comment line
    scenario.density = 150   # trailing comment
    ga.mode = "pre#1"
    reward.sce_mix = 0.2, 0.2, 0.2, 0.2, 0.2
  """
  assert parse_text(text) == {
    "scenario.density": 150,
    "ga.mode": "pre#1",
    "reward.sce_mix": (0.2, 0.2, 0.2, 0.2, 0.2),
  }


def test_parse_text_errors():
  with pytest.raises(ConfigError) as e:
    parse_text("ga.population = 4\nga.population = 6\n")
  assert e.value.key == "ga.population"
  with pytest.raises(ConfigError, match="run.conf:2"):
    parse_text("ga.population = 4\njust words\n", "run.conf")


def test_overrides():
  config = RunConfig.from_overrides(
    {"scenario.density": 60, "td3.hidden": 32, "ga.mode": "interleaved"}
  )
  assert config.scenario.density == 60.0
  assert isinstance(config.scenario.density, float)
  assert config.td3.hidden == 32
  assert config.ga.mode == "interleaved"
  assert config.reward == RunConfig().reward


@pytest.mark.parametrize(
  "overrides,key",
  [
    ({"bogus.x": 1}, "bogus.x"),
    ({"scenario.nope": 1}, "scenario.nope"),
    ({"scenario.max_ticks": 1.5}, "scenario.max_ticks"),
    ({"ga.enabled": 1}, "ga.enabled"),
    ({"scenario.density": -1}, "scenario.density"),
    ({"ga.population": 7}, "ga.population"),
    ({"td3.hidden": (1, 2)}, "td3.hidden"),
  ],
)
def test_override_errors_name_the_key(overrides, key):
  with pytest.raises(ConfigError) as e:
    RunConfig.from_overrides(overrides)
  assert e.value.key == key


def test_empty_tuple_from_none():
  config = RunConfig.from_overrides(
    {"scenario.ego_desired_speed_range": None}
  )
  assert config.scenario.ego_desired_speed_range == ()
  config = RunConfig.from_overrides({"harness.densities": 80})
  assert config.harness.densities == (80.0,)


def test_load_layers(tmp_path):
  path = tmp_path / "run.conf"
  path.write_text("ga.population = 8\nga.max_generations = 3\n")
  config = RunConfig.load(
    str(path), profile="quick", overrides={"ga.max_generations": 5}
  )
  assert config.ga.population == 8
  assert config.ga.max_generations == 5
  assert config.td3.episodes == cfg.PROFILES["quick"]["td3.episodes"]
  faithful = RunConfig.load(profile="faithful")
  assert faithful.ga.population == 50
  assert faithful.ga.max_generations == 100


def test_load_errors(tmp_path):
  missing = tmp_path / "absent.conf"
  with pytest.raises(ConfigError, match="absent.conf"):
    RunConfig.load(str(missing))
  with pytest.raises(ConfigError):
    RunConfig.load(profile="leisurely")


@pytest.mark.parametrize("profile", sorted(cfg.PROFILES))
def test_dump_parses_back(profile):
  config = RunConfig.load(profile=profile).with_seed(7)
  assert RunConfig.from_overrides(parse_text(config.dump())) == config


def test_digest():
  a = RunConfig.load()
  assert a.digest() == RunConfig.load().digest()
  assert len(a.digest()) == 64
  assert a.with_seed(1).digest() != a.digest()


def test_with_seed():
  config = RunConfig().with_seed(42)
  assert config.scenario.rng_seed == 42
  assert config.ga.rng_seed == 42
  assert config.harness.seed == 42


def test_harness_validation():
  with pytest.raises(ConfigError) as e:
    RunConfig.from_overrides({"harness.modes": "Everything"})
  assert e.value.key == "harness.modes"
  with pytest.raises(ConfigError):
    RunConfig.from_overrides({"harness.jobs": 0})
