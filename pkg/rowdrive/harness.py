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
Experiment harness: the pipelines behind the command-line subcommands.

Every subcommand resolves a RunConfig (profile, then --config file, then
flags), runs its pipeline and writes its artifacts under --out through one
RunWriter, which finishes with manifest.json.
"""

import argparse
import concurrent.futures
import csv
import dataclasses
import enum
import glob
import hashlib
import io
import json
import logging
import math
import os
import statistics
import sys

import numpy as np

from . import git
from .agent import DrivingTask, Td3Agent, train
from .config import RunConfig
from .evolve import (
  PolicyFitness,
  evolve,
  initial_genomes,
  interleaved_training,
)
from .intention import (
  TICKS_PER_SECOND,
  IntentionModel,
  arrays,
  build_intent_dataset,
  classification_metrics,
  split,
  synthetic_dataset,
  window_sweep,
  write_dataset,
)
from .metrics import compute_metrics, outcome_counts, tick_series
from .progress import Progress
from .reward import fitness
from .sim import keep_lane, replay_commands, run_episode
from .svg import line_chart
from .world import (
  ConfigError,
  EpisodeLog,
  Outcome,
  RowdriveError,
  derive_seed,
)

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
METRIC_FIELDS = (
  "avg_velocity",
  "avg_acceleration",
  "avg_yaw_rate",
  "min_thw",
  "avg_row_violations",
  "avg_lane_changes",
  "episodes",
)


class ReplayMismatch(RowdriveError):
  def __init__(self, tick, field, logged, replayed):
    super().__init__(
      f"replay diverges at tick {tick}: {field} logged {logged!r}, "
      f"replayed {replayed!r}"
    )
    self.tick = tick
    self.field = field


class AblationMode(str, enum.Enum):
  FULL = "Full"
  NO_SITUATION_AWARENESS = "NoSituationAwareness"
  NO_EVOLUTION = "NoEvolution"


def mode_config(config, mode):
  """The RunConfig of an ablation; each differs from Full in one key."""
  mode = AblationMode(mode)
  if mode == AblationMode.NO_SITUATION_AWARENESS:
    return RunConfig.from_overrides({"intent.enabled": False}, config)
  if mode == AblationMode.NO_EVOLUTION:
    return RunConfig.from_overrides({"ga.enabled": False}, config)
  return config


def config_diff(a, b):
  """Keys whose values differ between two RunConfigs."""
  return [k for (k, x), (_, y) in zip(a.items(), b.items()) if x != y]


def csv_text(rows, fields=None):
  fields = list(fields or (rows[0] if rows else ()))
  out = io.StringIO()
  writer = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
  writer.writeheader()
  for row in rows:
    writer.writerow({k: "" if row.get(k) is None else row[k] for k in fields})
  return out.getvalue()


class RunWriter:
  """The only writer of a run directory. Tracks every file it writes and
  finishes with a manifest that names them with their sha256."""

  def __init__(self, out_dir, command, argv, config, seed):
    self.out_dir = out_dir
    self.command = command
    self.argv = list(argv)
    self.config = config
    self.seed = seed
    self.files = set()
    os.makedirs(out_dir, exist_ok=True)

  def path(self, name):
    path = os.path.join(self.out_dir, name)
    directory = os.path.dirname(path)
    if directory:
      os.makedirs(directory, exist_ok=True)
    return path

  def record(self, name):
    if not os.path.isfile(os.path.join(self.out_dir, name)):
      raise RowdriveError(f"{name} was not written under {self.out_dir}")
    self.files.add(name)
    return os.path.join(self.out_dir, name)

  def write_text(self, name, text):
    with open(self.path(name), "w", encoding="utf-8", newline="\n") as f:
      f.write(text)
    return self.record(name)

  def write_csv(self, name, rows, fields=None):
    return self.write_text(name, csv_text(rows, fields))

  def write_svg(self, name, svg):
    if self.config.harness.svg:
      self.write_text(name, repr(svg))

  def write_log(self, name, episode):
    return self.write_text(name, episode.encode())

  def checkpoint(self, name, saver):
    """saver(stem) writes stem.* files; all of them are recorded."""
    stem = self.path(name)
    before = set(glob.glob(glob.escape(stem) + ".*"))
    saver(stem)
    for path in sorted(set(glob.glob(glob.escape(stem) + ".*")) | before):
      self.record(os.path.relpath(path, self.out_dir))
    return stem

  def finish(self, status="ok"):
    files = []
    for name in sorted(self.files):
      with open(os.path.join(self.out_dir, name), "rb") as f:
        files.append(
          {"name": name, "sha256": hashlib.sha256(f.read()).hexdigest()}
        )
    manifest = {
      "command": self.command,
      "argv": self.argv,
      "seed": self.seed,
      "config_digest": self.config.digest(),
      "code_version": git.get_version(),
      "status": status,
      "files": files,
    }
    path = os.path.join(self.out_dir, MANIFEST)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
      json.dump(manifest, f, indent=1, sort_keys=True)
      f.write("\n")
    return path


# Pipelines


def train_intent_model(config, seed, jobs=1, progress=None):
  """Trains an STA model on simulated NPC lane changes. Returns
  (model, test metrics), or (None, None) when intention is disabled."""
  if not config.intent.enabled:
    return None, None
  cfg = config.intent
  scenario = dataclasses.replace(
    config.scenario, rng_seed=derive_seed(seed, "intent-data")
  )
  train_set, test_set = build_intent_dataset(
    scenario,
    cfg.episodes,
    cfg.window_ticks,
    cfg.train_fraction,
    jobs,
    progress,
  )
  model = IntentionModel(cfg.window_ticks, cfg.hidden, seed=seed)
  model.fit(*arrays(train_set), cfg, seed=seed, progress=progress)
  scores = None
  if test_set:
    Xt, yt = arrays(test_set)
    labels, _ = model.predict(Xt)
    scores = classification_metrics(yt, [x.index for x in labels])
  return model, scores


def policy_fitness(config, intent_model):
  return PolicyFitness(
    config.scenario,
    config.td3,
    config.fitness,
    config.reward,
    intent_model,
    use_intentions=config.intent.enabled,
    episodes=config.ga.episodes_per_eval,
    include_critics=config.ga.include_critics,
  )


def run_evolution(config, seed, intent_model, jobs=1, progress=None):
  """GA pre-phase alone. Returns the EvolutionResult."""
  ga = dataclasses.replace(config.ga, rng_seed=derive_seed(seed, "ga"))
  initial = initial_genomes(
    config.td3, ga.population, seed, ga.include_critics
  )
  fitness_fn = policy_fitness(config, intent_model)
  return evolve(ga, fitness_fn, initial, jobs, progress)


def train_driver(config, seed, intent_model=None, jobs=1, progress=None):
  """GA initialization (unless disabled) followed by TD3 training.
  Returns (agent, training curve rows, GA history rows)."""
  agent = Td3Agent(config.td3, seed=derive_seed(seed, "agent"))
  task = DrivingTask(
    config.scenario,
    intent_model if config.intent.enabled else None,
    config.reward,
    use_intentions=config.intent.enabled,
  )
  history = []
  ga = config.ga
  if ga.enabled and ga.mode == "interleaved":
    curve, history = interleaved_training(
      agent,
      task,
      dataclasses.replace(ga, rng_seed=derive_seed(seed, "ga")),
      policy_fitness(config, intent_model),
      config.td3.episodes,
      seed,
      jobs,
      progress,
    )
    return agent, curve, history
  if ga.enabled:
    result = run_evolution(config, seed, intent_model, jobs, progress)
    agent.load_genome(result.best.genes, ga.include_critics)
    history = result.history
  curve = train(agent, task, config.td3.episodes, seed, progress)
  return agent, curve, history


def _evaluation_job(job):
  agent, scenario, intent_model, reward, use_intentions = job
  policy = agent.policy(scenario, use_intentions)
  return run_episode(scenario, policy, intent_model, reward)


def evaluate_driver(
  agent, config, intent_model, density, episodes, seed, jobs=1, progress=None
):
  """Runs the deterministic policy on episodes fresh scenarios at density.
  Returns the EpisodeLogs in episode order."""
  use_intentions = config.intent.enabled
  model = intent_model if use_intentions else None
  work = [
    (
      agent,
      dataclasses.replace(
        config.scenario,
        density=density,
        rng_seed=derive_seed(seed, f"eval-{density:g}", k),
      ),
      model,
      config.reward,
      use_intentions,
    )
    for k in range(episodes)
  ]
  progress = progress or Progress(None)
  if jobs > 1:
    logs = [None] * len(work)
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
      futures = {pool.submit(_evaluation_job, w): k for k, w in enumerate(work)}
      for future in concurrent.futures.as_completed(futures):
        k = futures[future]
        try:
          logs[k] = future.result()
        except RowdriveError:
          raise
        except Exception as e:
          raise RowdriveError(f"evaluation episode {k} failed: {e}") from e
    return logs
  return [
    _evaluation_job(w)
    for w in progress.iterate(work, f"evaluating at {density:g}/km")
  ]


def mean_fitness(logs, config):
  scores = [
    fitness(
      episode,
      config.fitness,
      v_ref=config.reward.v_ref,
      sce_mix=config.reward.sce_mix,
    )
    for episode in logs
  ]
  return math.fsum(scores) / len(scores)


def normalize_curve(rewards):
  lo, hi = min(rewards), max(rewards)
  if hi == lo:
    return [0.0 for _ in rewards]
  return [(r - lo) / (hi - lo) for r in rewards]


def curve_bands(curves):
  """Per-episode mean and std of normalized reward and success rate over
  several runs of equal length."""
  rows = []
  normalized = [normalize_curve([r["reward"] for r in c]) for c in curves]
  for k in range(min(len(c) for c in curves)):
    values = [n[k] for n in normalized]
    success = [c[k]["success_rate"] for c in curves]
    rows.append(
      {
        "episode": k,
        "reward_mean": statistics.fmean(values),
        "reward_std": statistics.pstdev(values),
        "success_mean": statistics.fmean(success),
        "success_std": statistics.pstdev(success),
      }
    )
  return rows


def run_ablation(config, modes=None, seeds=None, jobs=1, progress=None):
  """Trains and evaluates every ablation mode on the same seeds.
  Returns (per-seed rows, per-mode summary rows, {mode: curve bands})."""
  modes = [AblationMode(m) for m in (modes or config.harness.modes)]
  seeds = seeds or [
    derive_seed(config.harness.seed, "seed", s)
    for s in range(config.harness.seeds)
  ]
  intent_cache = {}
  rows, summary, bands = [], [], {}
  for mode in modes:
    cfg = mode_config(config, mode)
    curves = []
    for seed in seeds:
      model = None
      if cfg.intent.enabled:
        if seed not in intent_cache:
          intent_cache[seed] = train_intent_model(cfg, seed, jobs, progress)[0]
        model = intent_cache[seed]
      agent, curve, _ = train_driver(cfg, seed, model, jobs, progress)
      curves.append(curve)
      logs = evaluate_driver(
        agent,
        cfg,
        model,
        cfg.scenario.density,
        cfg.harness.eval_episodes,
        seed,
        jobs,
        progress,
      )
      report = compute_metrics(logs)
      row = {"mode": mode.value, "seed": seed}
      row["fitness"] = mean_fitness(logs, cfg)
      row.update(report.to_dict())
      rows.append(row)
      log.info("%s seed %d: fitness %.4f", mode.value, seed, row["fitness"])
    mine = [r for r in rows if r["mode"] == mode.value]
    summary.append(_median_row({"mode": mode.value}, mine))
    bands[mode.value] = curve_bands(curves)
  return rows, summary, bands


def _median_row(head, rows):
  out = dict(head)
  for key in ("fitness",) + METRIC_FIELDS:
    values = [r[key] for r in rows if r.get(key) is not None]
    out[key] = statistics.median(values) if values else None
  return out


def run_density_sweep(
  config,
  mode=AblationMode.FULL,
  seeds=None,
  densities=None,
  episodes=None,
  jobs=1,
  progress=None,
):
  """Trains one driver per seed at the configured density, then evaluates
  it at every density. Returns (per-density rows, per-seed rows)."""
  cfg = mode_config(config, mode)
  densities = list(densities or cfg.harness.densities)
  episodes = episodes or cfg.harness.eval_episodes
  seeds = seeds or [
    derive_seed(cfg.harness.seed, "seed", s) for s in range(cfg.harness.seeds)
  ]
  pooled = {d: [] for d in densities}
  per_seed = []
  for seed in seeds:
    model, _ = train_intent_model(cfg, seed, jobs, progress)
    agent, _, _ = train_driver(cfg, seed, model, jobs, progress)
    for density in densities:
      logs = evaluate_driver(
        agent, cfg, model, density, episodes, seed, jobs, progress
      )
      pooled[density].extend(logs)
      row = {"density": density, "seed": seed}
      row.update(compute_metrics(logs).to_dict())
      per_seed.append(row)
  rows = []
  for density in densities:
    row = {"density": density}
    row.update(compute_metrics(pooled[density]).to_dict())
    row.update(outcome_counts(pooled[density]))
    rows.append(row)
  return rows, per_seed


def check_replay(episode):
  """Re-simulates episode from its logged commands and compares the
  per-tick metric series. Returns the series; raises ReplayMismatch."""
  logged = tick_series(episode)
  # Compare through the log codec so both sides carry the same floats
  replayed = tick_series(EpisodeLog.decode(replay_commands(episode).encode()))
  for a, b in zip(logged, replayed):
    for key in a:
      if a[key] != b[key]:
        raise ReplayMismatch(a["tick"], key, a[key], b[key])
  if len(logged) != len(replayed):
    tick = min(len(logged), len(replayed))
    raise ReplayMismatch(tick, "length", len(logged), len(replayed))
  return logged


# Subcommands


def _curve_chart(bands, key, title):
  series = {
    name: [(r["episode"], r[f"{key}_mean"]) for r in rows]
    for name, rows in bands.items()
  }
  envelope = {
    name: [
      (
        r["episode"],
        r[f"{key}_mean"] - r[f"{key}_std"],
        r[f"{key}_mean"] + r[f"{key}_std"],
      )
      for r in rows
    ]
    for name, rows in bands.items()
  }
  return line_chart(series, title, "episode", key, bands=envelope)


def cmd_simulate(args, config, writer, progress):
  policy = keep_lane
  if args.agent:
    agent = Td3Agent(config.td3).load(args.agent)
    policy = agent.policy(config.scenario, use_intentions=False)
  names = []
  for k in progress.iterate(range(args.episodes), "simulating"):
    scenario = dataclasses.replace(
      config.scenario, rng_seed=derive_seed(config.harness.seed, "sim", k)
    )
    episode = run_episode(scenario, policy, reward_weights=config.reward)
    name = f"episodes/episode-{k:04d}.jsonl"
    writer.write_log(name, episode)
    names.append({"episode": name, "outcome": episode.outcome.value})
  writer.write_csv("episodes.csv", names)
  return 0


def cmd_train_intent(args, config, writer, progress):
  cfg = config.intent
  seed = config.harness.seed
  if args.synthetic:
    rng = np.random.default_rng(derive_seed(seed, "intent-split"))
    data = synthetic_dataset(args.synthetic, cfg.window_ticks, seed)
    train_set, test_set = split(data, cfg.train_fraction, rng)
  else:
    train_set, test_set = build_intent_dataset(
      dataclasses.replace(
        config.scenario, rng_seed=derive_seed(seed, "intent-data")
      ),
      cfg.episodes,
      cfg.window_ticks,
      cfg.train_fraction,
      config.harness.jobs,
      progress,
    )
  write_dataset(train_set, writer.path("intent-train.jsonl"))
  writer.record("intent-train.jsonl")
  write_dataset(test_set, writer.path("intent-test.jsonl"))
  writer.record("intent-test.jsonl")
  model = IntentionModel(cfg.window_ticks, cfg.hidden, seed=seed)
  losses = model.fit(*arrays(train_set), cfg, seed=seed, progress=progress)
  writer.write_csv(
    "intent-loss.csv",
    [{"epoch": k, "loss": v} for k, v in enumerate(losses)],
  )
  Xt, yt = arrays(test_set)
  labels, _ = model.predict(Xt)
  scores = classification_metrics(yt, [x.index for x in labels])
  writer.write_csv("intent-metrics.csv", [{"window_s": cfg.window_s, **scores}])
  writer.checkpoint("intent", model.save)
  return 0


def cmd_sweep_window(args, config, writer, progress):
  cfg = config.intent
  seed = config.harness.seed
  longest = round(max(cfg.windows) * TICKS_PER_SECOND)
  if args.synthetic:
    rng = np.random.default_rng(derive_seed(seed, "intent-split"))
    data = synthetic_dataset(args.synthetic, longest, seed)
    train_set, test_set = split(data, cfg.train_fraction, rng)
  else:
    train_set, test_set = build_intent_dataset(
      dataclasses.replace(
        config.scenario, rng_seed=derive_seed(seed, "intent-data")
      ),
      cfg.episodes,
      longest,
      cfg.train_fraction,
      config.harness.jobs,
      progress,
    )
  rows = window_sweep(
    train_set, test_set, cfg, seed, config.harness.jobs, progress
  )
  writer.write_csv("window-sweep.csv", rows)
  series = {
    key: [(r["window_s"], r[key]) for r in rows]
    for key in ("precision", "recall", "f1", "accuracy")
  }
  writer.write_svg(
    "window-sweep.svg", line_chart(series, "look-back window", "s", "score")
  )
  return 0


def _load_or_train_intent(args, config, writer, progress):
  if not config.intent.enabled:
    return None
  if args.intent:
    return IntentionModel.load(args.intent)
  model, scores = train_intent_model(
    config, config.harness.seed, config.harness.jobs, progress
  )
  if scores:
    writer.write_csv(
      "intent-metrics.csv", [{"window_s": config.intent.window_s, **scores}]
    )
  writer.checkpoint("intent", model.save)
  return model


def cmd_train_agent(args, config, writer, progress):
  model = _load_or_train_intent(args, config, writer, progress)
  agent, curve, history = train_driver(
    config, config.harness.seed, model, config.harness.jobs, progress
  )
  writer.write_csv("training-curve.csv", curve)
  if history:
    writer.write_csv("ga-history.csv", history)
  bands = {"train": curve_bands([curve])}
  writer.write_svg(
    "training-curve.svg", _curve_chart(bands, "reward", "training reward")
  )
  writer.checkpoint("agent", agent.save)
  return 0


def cmd_evolve(args, config, writer, progress):
  model = _load_or_train_intent(args, config, writer, progress)
  result = run_evolution(
    config, config.harness.seed, model, config.harness.jobs, progress
  )
  writer.write_csv("ga-history.csv", result.history)
  series = {
    key: [(r["gen"], r[key]) for r in result.history]
    for key in ("best", "mean")
  }
  writer.write_svg(
    "ga-history.svg", line_chart(series, "fitness", "generation", "fitness")
  )
  agent = Td3Agent(config.td3)
  agent.load_genome(result.best.genes, config.ga.include_critics)
  writer.checkpoint("best", agent.save)
  return 0


def cmd_run_ablation(args, config, writer, progress):
  rows, summary, bands = run_ablation(
    config, args.modes, jobs=config.harness.jobs, progress=progress
  )
  fields = ("mode", "seed", "fitness") + METRIC_FIELDS
  writer.write_csv("ablation.csv", rows, fields)
  writer.write_csv(
    "ablation-summary.csv", summary, ("mode", "fitness") + METRIC_FIELDS
  )
  curve_rows = [
    {"mode": mode, **row} for mode, rows_ in bands.items() for row in rows_
  ]
  writer.write_csv("ablation-curves.csv", curve_rows)
  writer.write_svg(
    "ablation-reward.svg",
    _curve_chart(bands, "reward", "normalized reward"),
  )
  writer.write_svg(
    "ablation-success.svg", _curve_chart(bands, "success", "success rate")
  )
  return 0


def cmd_sweep_density(args, config, writer, progress):
  rows, per_seed = run_density_sweep(
    config,
    args.mode,
    episodes=args.episodes,
    jobs=config.harness.jobs,
    progress=progress,
  )
  outcomes = tuple(o.value for o in Outcome)
  writer.write_csv("density.csv", rows, ("density",) + METRIC_FIELDS + outcomes)
  writer.write_csv("density-seeds.csv", per_seed)
  return 0


def cmd_metrics(args, config, writer, progress):
  pattern = os.path.join(args.logs, "**", "*.jsonl")
  paths = sorted(glob.glob(pattern, recursive=True))
  if os.path.isfile(args.logs):
    paths = [args.logs]
  # An unreadable log fails the run; the report never covers a subset
  logs = [
    EpisodeLog.read(path) for path in progress.iterate(paths, "reading logs")
  ]
  report = compute_metrics(logs)
  row = report.to_dict()
  row.update(outcome_counts(logs))
  writer.write_csv("metrics.csv", [row])
  return 0


def cmd_replay(args, config, writer, progress):
  episode = EpisodeLog.read(args.episode)
  series = check_replay(episode)
  writer.write_csv("replay.csv", series)
  return 0


def _simulate_args(p):
  p.add_argument("--episodes", type=int, default=1)
  p.add_argument("--agent", metavar="STEM", help="TD3 checkpoint to drive")


def _intent_args(p):
  p.add_argument(
    "--synthetic", type=int, default=0, metavar="N",
    help="train on N synthetic windows instead of simulated ones",
  )


def _agent_args(p):
  p.add_argument("--intent", metavar="STEM", help="trained intention model")


def _ablation_args(p):
  p.add_argument(
    "--modes", nargs="+", choices=[m.value for m in AblationMode]
  )


def _density_args(p):
  p.add_argument(
    "--mode", default="Full", choices=[m.value for m in AblationMode]
  )
  p.add_argument("--episodes", type=int, help="episodes per density and seed")


def _metrics_args(p):
  p.add_argument("logs", help="episode log file or directory")


def _replay_args(p):
  p.add_argument("--episode", required=True, help="episode log to replay")


COMMANDS = {
  "simulate": (cmd_simulate, _simulate_args, "Run and log episodes"),
  "train-intent": (cmd_train_intent, _intent_args, "Train the STA model"),
  "sweep-window": (cmd_sweep_window, _intent_args, "Sweep look-back windows"),
  "train-agent": (cmd_train_agent, _agent_args, "Train a TD3 driver"),
  "evolve": (cmd_evolve, _agent_args, "Run the GA over actor weights"),
  "run-ablation": (cmd_run_ablation, _ablation_args, "Compare ablations"),
  "sweep-density": (cmd_sweep_density, _density_args, "Traffic densities"),
  "metrics": (cmd_metrics, _metrics_args, "Metrics of episode logs"),
  "replay": (cmd_replay, _replay_args, "Re-simulate a logged episode"),
}


def common_parser():
  parser = argparse.ArgumentParser(add_help=False)
  parser.add_argument("--config", metavar="PATH", help="key = value file")
  parser.add_argument("--seed", type=int, help="run seed (u64)")
  parser.add_argument("--out", default="out", metavar="DIR")
  parser.add_argument("--jobs", type=int, help="worker processes")
  parser.add_argument(
    "--profile", default="quick", help="quick (default) or faithful"
  )
  parser.add_argument(
    "-q",
    "--quiet",
    action="count",
    default=0,
    help="make the console output quieter",
  )
  parser.add_argument(
    "-v",
    "--verbose",
    action="count",
    default=0,
    help="make the console output more verbose",
  )
  return parser


def setup_logging(verbosity):
  level = {
    -1: logging.ERROR,
    0: logging.WARNING,
    1: logging.INFO,
  }.get(max(verbosity, -1), logging.DEBUG)
  logging.basicConfig(
    level=level,
    stream=sys.stderr,
    format="%(levelname)s %(name)s: %(message)s",
    force=True,
  )


def resolve_config(args):
  overrides = {}
  if args.jobs is not None:
    overrides["harness.jobs"] = args.jobs
  config = RunConfig.load(args.config, args.profile, overrides)
  seed = config.harness.seed if args.seed is None else args.seed
  if not 0 <= seed < 1 << 64:
    raise ConfigError("must be an unsigned 64-bit integer", "seed")
  return config.with_seed(seed)


def run(command, argv):
  """Parses argv for one subcommand and runs it. Returns the exit code:
  0 success, 1 configuration error, 2 runtime failure."""
  entry, add_args, description = COMMANDS[command]
  parser = argparse.ArgumentParser(
    prog=argv[0], description=description, parents=[common_parser()]
  )
  add_args(parser)
  args = parser.parse_args(argv[1:])
  verbosity = args.verbose - args.quiet
  setup_logging(verbosity)
  try:
    config = resolve_config(args)
  except ConfigError as e:
    log.error("%s", e)
    print(f"{command}: {e}", file=sys.stderr)
    return 1
  progress = Progress(sys.stderr if verbosity >= 0 else None)
  writer = RunWriter(
    args.out, command, argv[1:], config, config.harness.seed
  )
  writer.write_text("config.conf", config.dump())
  # Anything that escapes entry() leaves a failed manifest behind
  status = "failed"
  try:
    code = entry(args, config, writer, progress)
    status = "ok"
    return code
  except ConfigError as e:
    status = "config error"
    print(f"{command}: {e}", file=sys.stderr)
    return 1
  except (RowdriveError, OSError, ValueError) as e:
    log.debug("%s failed", command, exc_info=True)
    print(f"{command}: {e}", file=sys.stderr)
    return 2
  finally:
    progress.clear()
    writer.finish(status)


def main(argv):
  """USAGE: harness.py COMMAND [options]
  Runs one experiment subcommand."""
  if len(argv) < 2 or argv[1] not in COMMANDS:
    print(f"USAGE: {argv[0]} COMMAND ...", file=sys.stderr)
    for name, (_, _, description) in COMMANDS.items():
      print(f"  {name:14} {description}", file=sys.stderr)
    return 2
  return run(argv[1], [f"{argv[0]} {argv[1]}"] + argv[2:])


if __name__ == "__main__":
  sys.exit(main(sys.argv))
