# SPDX-FileCopyrightText: (C) 2026 rowdrive contributors
# SPDX-License-Identifier: Apache-2.0

import dataclasses
import hashlib
import json

import pytest

from rowdrive import __main__ as cli
from rowdrive import harness
from rowdrive.config import RunConfig
from rowdrive.harness import (
  AblationMode,
  ReplayMismatch,
  RunWriter,
  check_replay,
  config_diff,
  curve_bands,
  mode_config,
  normalize_curve,
  run_ablation,
  run_density_sweep,
)
from rowdrive.world import EpisodeLog, RowdriveError

TINY = {
  "scenario.density": 40,
  "scenario.max_ticks": 20,
  "td3.hidden": 8,
  "td3.batch": 8,
  "td3.buffer": 100,
  "td3.warmup": 10,
  "td3.episodes": 2,
  "td3.max_steps": 50,
  "ga.population": 4,
  "ga.max_generations": 2,
  "ga.episodes_per_eval": 1,
  "harness.eval_episodes": 2,
  "harness.seeds": 1,
  "harness.svg": False,
}


def tiny_config(**extra):
  return RunConfig.load(overrides={**TINY, **extra})


def write_conf(tmp_path, **extra):
  path = tmp_path / "tiny.conf"
  lines = [f"{k} = {v}" for k, v in {**TINY, **extra}.items()]
  path.write_text("\n".join(lines).replace("False", "false") + "\n")
  return str(path)


def cli_run(command, *args):
  return harness.run(command, [f"rowdrive {command}", *args])


def test_ablations_change_one_key():
  full = RunConfig()
  no_ga = mode_config(full, AblationMode.NO_EVOLUTION)
  blind = mode_config(full, "NoSituationAwareness")
  assert config_diff(full, no_ga) == ["ga.enabled"]
  assert config_diff(full, blind) == ["intent.enabled"]
  assert mode_config(full, AblationMode.FULL) is full
  with pytest.raises(ValueError):
    mode_config(full, "Partial")


def test_normalize_curve():
  assert normalize_curve([1.0, 3.0, 2.0]) == [0.0, 1.0, 0.5]
  assert normalize_curve([4.0, 4.0]) == [0.0, 0.0]


def test_curve_bands():
  a = [{"reward": r, "success_rate": s} for r, s in ((0, 0), (10, 1), (5, 1))]
  b = [{"reward": r, "success_rate": 0.0} for r in (2, 0, 1)]
  rows = curve_bands([a, b])
  assert [r["episode"] for r in rows] == [0, 1, 2]
  assert rows[0]["reward_mean"] == pytest.approx(0.5)
  assert rows[0]["reward_std"] == pytest.approx(0.5)
  assert rows[1]["reward_mean"] == pytest.approx(0.5)
  assert rows[1]["success_mean"] == pytest.approx(0.5)
  assert rows[2]["reward_mean"] == pytest.approx(0.5)


def test_run_writer(tmp_path):
  config = RunConfig()
  writer = RunWriter(str(tmp_path), "metrics", ["--seed", "3"], config, 3)
  writer.write_csv("a/rows.csv", [{"x": 1, "y": None}])
  assert (tmp_path / "a" / "rows.csv").read_text() == "x,y\n1,\n"
  with pytest.raises(RowdriveError):
    writer.record("never.csv")

  def saver(stem):
    for ext in ("npz", "json"):
      with open(f"{stem}.{ext}", "w") as f:
        f.write(ext)

  writer.checkpoint("ckpt/model", saver)
  manifest = json.loads(open(writer.finish()).read())
  assert manifest["command"] == "metrics"
  assert manifest["seed"] == 3
  assert manifest["status"] == "ok"
  assert manifest["config_digest"] == config.digest()
  assert manifest["code_version"]
  names = [f["name"] for f in manifest["files"]]
  assert names == ["a/rows.csv", "ckpt/model.json", "ckpt/model.npz"]
  digest = hashlib.sha256(b"x,y\n1,\n").hexdigest()
  assert manifest["files"][0]["sha256"] == digest


def test_missing_config_file_exits_one(tmp_path, capsys):
  missing = tmp_path / "nowhere.conf"
  out = tmp_path / "out"
  code = cli_run("metrics", "--config", str(missing), "--out", str(out), ".")
  assert code == 1
  assert "nowhere.conf" in capsys.readouterr().err


def test_bad_seed_exits_one(tmp_path):
  out = str(tmp_path / "out")
  assert cli_run("metrics", "--seed", "-1", "--out", out, ".") == 1


def test_unknown_command_exits_two(capsys):
  assert harness.main(["rowdrive", "fly"]) == 2
  assert cli.main(["rowdrive", "fly"]) == 2
  assert "simulate" in capsys.readouterr().err


def test_missing_inputs_fail_the_run(tmp_path, capsys):
  out = tmp_path / "replay"
  missing = str(tmp_path / "missing.jsonl")
  code = harness.main(
    ["rowdrive", "replay", "--episode", missing, "--out", str(out)]
  )
  assert code == 2
  assert "missing.jsonl" in capsys.readouterr().err
  manifest = json.loads((out / "manifest.json").read_text())
  assert manifest["status"] == "failed"

  out = tmp_path / "agent"
  conf = write_conf(tmp_path)
  stem = str(tmp_path / "no-such-model")
  args = ["--config", conf, "--intent", stem, "--out", str(out)]
  assert cli_run("train-agent", *args) == 2
  manifest = json.loads((out / "manifest.json").read_text())
  assert manifest["status"] == "failed"


def test_simulate_metrics_and_replay(tmp_path):
  conf = write_conf(tmp_path)
  sim_out = tmp_path / "sim"
  code = cli_run(
    "simulate", "--config", conf, "--out", str(sim_out), "--episodes", "2"
  )
  assert code == 0
  episodes = sorted((sim_out / "episodes").glob("*.jsonl"))
  assert len(episodes) == 2
  manifest = json.loads((sim_out / "manifest.json").read_text())
  names = {f["name"] for f in manifest["files"]}
  assert "episodes/episode-0000.jsonl" in names
  assert {"config.conf", "episodes.csv"} <= names

  metrics_out = tmp_path / "metrics"
  assert cli_run("metrics", "--out", str(metrics_out), str(sim_out)) == 0
  header, row = (metrics_out / "metrics.csv").read_text().splitlines()
  assert header.split(",")[:2] == ["avg_velocity", "avg_acceleration"]
  assert row.split(",")[6] == "2"

  replay_out = tmp_path / "replay"
  code = cli_run(
    "replay", "--out", str(replay_out), "--episode", str(episodes[0])
  )
  assert code == 0
  rows = (replay_out / "replay.csv").read_text().splitlines()
  assert len(rows) == 1 + len(EpisodeLog.read(str(episodes[0])).ticks)


def test_reruns_are_byte_identical(tmp_path):
  conf = write_conf(tmp_path)
  for name in ("a", "b"):
    out = str(tmp_path / name)
    assert cli_run("simulate", "--config", conf, "--out", out) == 0
  for name in ("episodes/episode-0000.jsonl", "episodes.csv", "config.conf"):
    assert (tmp_path / "a" / name).read_bytes() == (
      tmp_path / "b" / name
    ).read_bytes()


def test_metrics_of_nothing_is_a_runtime_failure(tmp_path):
  empty = tmp_path / "empty"
  empty.mkdir()
  out = tmp_path / "out"
  assert cli_run("metrics", "--out", str(out), str(empty)) == 2
  manifest = json.loads((out / "manifest.json").read_text())
  assert manifest["status"] == "failed"


def test_metrics_refuses_a_partial_report(tmp_path, capsys):
  conf = write_conf(tmp_path)
  sim_out = tmp_path / "sim"
  args = ["--config", conf, "--out", str(sim_out), "--episodes", "2"]
  assert cli_run("simulate", *args) == 0
  damaged = sim_out / "episodes" / "episode-0001.jsonl"
  lines = damaged.read_text().splitlines(keepends=True)
  damaged.write_text("".join(lines[:-1]))
  out = tmp_path / "metrics"
  assert cli_run("metrics", "--out", str(out), str(sim_out)) == 2
  assert "episode-0001.jsonl" in capsys.readouterr().err
  assert not (out / "metrics.csv").exists()
  manifest = json.loads((out / "manifest.json").read_text())
  assert manifest["status"] == "failed"


def test_replay_detects_a_doctored_log(tmp_path):
  conf = write_conf(tmp_path)
  out = tmp_path / "sim"
  assert cli_run("simulate", "--config", conf, "--out", str(out)) == 0
  episode = EpisodeLog.read(str(out / "episodes" / "episode-0000.jsonl"))
  assert len(check_replay(episode)) == len(episode.ticks)
  ticks = list(episode.ticks)
  ego = ticks[2].vehicle(episode.ego_id)
  faster = dataclasses.replace(ego, v_x=ego.v_x + 1.0)
  ticks[2] = dataclasses.replace(
    ticks[2],
    vehicles=tuple(faster if v.id == ego.id else v for v in ticks[2].vehicles),
  )
  doctored = dataclasses.replace(episode, ticks=tuple(ticks))
  with pytest.raises(ReplayMismatch) as e:
    check_replay(doctored)
  assert e.value.tick == ticks[2].tick
  assert e.value.field == "speed"


def test_density_sweep_without_intentions():
  config = tiny_config()
  rows, per_seed = run_density_sweep(
    config,
    AblationMode.NO_SITUATION_AWARENESS,
    seeds=[1],
    densities=[20.0, 40.0],
    episodes=2,
  )
  assert [r["density"] for r in rows] == [20.0, 40.0]
  assert all(r["episodes"] == 2 for r in rows)
  assert sum(r[o] for o in ("SafeArrived", "Collision") for r in rows) <= 4
  assert len(per_seed) == 2
  again, _ = run_density_sweep(
    config,
    AblationMode.NO_SITUATION_AWARENESS,
    seeds=[1],
    densities=[20.0, 40.0],
    episodes=2,
  )
  assert again == rows


def test_ablation_without_intentions():
  config = tiny_config()
  rows, summary, bands = run_ablation(
    config, modes=["NoSituationAwareness"], seeds=[3]
  )
  assert [(r["mode"], r["seed"]) for r in rows] == [
    ("NoSituationAwareness", 3)
  ]
  assert 0.0 <= rows[0]["fitness"] <= 1.0
  assert summary[0]["mode"] == "NoSituationAwareness"
  assert summary[0]["fitness"] == rows[0]["fitness"]
  curve = bands["NoSituationAwareness"]
  assert len(curve) == TINY["td3.episodes"]
  assert {"reward_mean", "reward_std", "success_mean"} <= set(curve[0])


@pytest.mark.slow
def test_full_ablation_pipeline(tmp_path):
  conf = write_conf(
    tmp_path,
    **{
      "scenario.density": 120,
      "scenario.max_ticks": 250,
      "intent.episodes": 4,
      "intent.window_s": 1,
      "intent.hidden": 4,
      "intent.epochs": 1,
    },
  )
  out = tmp_path / "ablation"
  assert cli_run("run-ablation", "--config", conf, "--out", str(out)) == 0
  lines = (out / "ablation-summary.csv").read_text().splitlines()
  assert [line.split(",")[0] for line in lines[1:]] == [
    m.value for m in AblationMode
  ]
