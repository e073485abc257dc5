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
Genetic algorithm over flat network weight vectors.

Selection is a probabilistic tournament, recombination single-point
crossover, mutation sparse Gaussian noise. The best individual survives
unchanged into every next generation, so the best fitness of a run never
decreases. All randomness is drawn in the parent process; fitness
evaluations may fan out to worker processes and are merged by index.
"""

import argparse
import concurrent.futures
import csv
import dataclasses
import logging
import math
import sys

import numpy as np

from .progress import Progress
from .world import ConfigError, RowdriveError, derive_seed

log = logging.getLogger(__name__)

GA_MODES = ("pre", "interleaved")
HISTORY_FIELDS = ("gen", "best", "mean", "std", "best_id")


class FitnessFailed(RowdriveError):
  def __init__(self, genome_id, cause):
    super().__init__(f"fitness of genome {genome_id} failed: {cause}")
    self.genome_id = genome_id
    self.cause = cause


@dataclasses.dataclass(frozen=True)
class GaConfig:
  population: int = 50
  tournament_size: int = 5
  selection_pressure: float = 0.8
  crossover_prob: float = 0.8
  mutation_prob: float = 0.05
  mutation_sigma: float = 0.1
  max_generations: int = 100
  episodes_per_eval: int = 3
  elites: int = 1
  enabled: bool = True  # False skips evolution; actors start from TD3 init
  mode: str = "pre"
  include_critics: bool = False
  rounds: int = 4  # GA rounds in interleaved mode
  init_sigma: float = 0.1  # spread of a population seeded from few genomes
  rng_seed: int = 0

  def __post_init__(self):
    for key in ("selection_pressure", "crossover_prob", "mutation_prob"):
      if not 0 <= getattr(self, key) <= 1:
        raise ConfigError("must lie in [0, 1]", f"ga.{key}")
    if self.population < 2 or self.population % 2:
      raise ConfigError("must be even and at least 2", "ga.population")
    for key in ("tournament_size", "max_generations", "episodes_per_eval"):
      if getattr(self, key) < 1:
        raise ConfigError("must be positive", f"ga.{key}")
    if not 1 <= self.elites < self.population:
      raise ConfigError("must lie in [1, population)", "ga.elites")
    if self.mutation_sigma < 0 or self.init_sigma < 0:
      raise ConfigError("must be non-negative", "ga.mutation_sigma")
    if self.mode not in GA_MODES:
      raise ConfigError(f"must be one of {', '.join(GA_MODES)}", "ga.mode")
    if self.rounds < 1:
      raise ConfigError("must be positive", "ga.rounds")


@dataclasses.dataclass
class Genome:
  """A weight vector; fitness is None until evaluated."""

  id: int
  genes: np.ndarray
  fitness: float = None

  @property
  def evaluated(self):
    return self.fitness is not None


@dataclasses.dataclass
class EvolutionResult:
  best: Genome
  population: list
  history: list  # one row per generation, HISTORY_FIELDS


def tournament_select(population, rng, size=5, pressure=0.8):
  """Draws size members uniformly without replacement (with replacement
  when the population is smaller); returns the fittest with probability
  pressure, otherwise a uniformly chosen contestant."""
  n = len(population)
  picks = rng.choice(n, size=size, replace=size > n)
  if rng.random() < pressure:
    # First occurrence wins ties
    best = max(range(size), key=lambda k: (population[picks[k]].fitness, -k))
    return population[picks[best]]
  return population[picks[rng.integers(size)]]


def crossover_at(a, b, k):
  return (
    np.concatenate([a[:k], b[k:]]),
    np.concatenate([b[:k], a[k:]]),
  )


def crossover(a, b, rng, prob=0.8):
  """Single-point crossover. Returns two new arrays; with probability
  1 - prob (or for genomes shorter than two genes) copies of the parents."""
  if len(a) != len(b):
    raise ValueError(f"parents of length {len(a)} and {len(b)}")
  if len(a) < 2 or rng.random() >= prob:
    return a.copy(), b.copy()
  return crossover_at(a, b, int(rng.integers(1, len(a))))


def mutate(genes, rng, prob=0.05, sigma=0.1):
  out = genes.copy()
  mask = rng.random(len(out)) < prob
  out[mask] += rng.normal(0.0, sigma, int(mask.sum()))
  return out


def seed_population(initial, size, sigma, rng):
  """Pads the initial vectors to size members with perturbed copies."""
  vectors = [np.asarray(v, dtype=float).copy() for v in initial[:size]]
  if not vectors:
    raise ValueError("an initial population needs at least one genome")
  length = len(vectors[0])
  if any(len(v) != length for v in vectors):
    raise ValueError("initial genomes differ in length")
  for k in range(size - len(vectors)):
    parent = vectors[k % len(initial)]
    vectors.append(parent + rng.normal(0.0, sigma, length))
  return vectors


def _evaluate(job):
  fitness_fn, genes, eval_seed = job
  return float(fitness_fn(genes, eval_seed))


def evaluate_population(
  population, fitness_fn, eval_seed, jobs=1, progress=None
):
  """Fills in the fitness of every unevaluated genome, in place."""
  todo = [g for g in population if not g.evaluated]
  results = {}
  if jobs > 1 and len(todo) > 1:
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
      futures = {
        pool.submit(_evaluate, (fitness_fn, g.genes, eval_seed)): g
        for g in todo
      }
      for future in concurrent.futures.as_completed(futures):
        genome = futures[future]
        try:
          results[genome.id] = future.result()
        except Exception as e:
          raise FitnessFailed(genome.id, e) from e
        if progress:
          progress.incr().write()
  else:
    for genome in todo:
      try:
        results[genome.id] = _evaluate((fitness_fn, genome.genes, eval_seed))
      except Exception as e:
        raise FitnessFailed(genome.id, e) from e
      if progress:
        progress.incr().write()
  for genome in todo:
    value = results[genome.id]
    if not math.isfinite(value):
      raise FitnessFailed(genome.id, f"non-finite fitness {value}")
    genome.fitness = value


def generation_stats(gen, population):
  values = np.array([g.fitness for g in population])
  best = max(population, key=lambda g: g.fitness)
  return {
    "gen": gen,
    "best": float(values.max()),
    "mean": float(values.mean()),
    "std": float(values.std()),
    "best_id": best.id,
  }


def evolve(config, fitness_fn, initial, jobs=1, progress=None):
  """Runs config.max_generations generations from initial (one or more
  weight vectors) and returns an EvolutionResult.

  fitness_fn(genes, eval_seed) -> float must be deterministic and, for
  jobs > 1, picklable. Every evaluation of a run shares one eval_seed."""
  rng = np.random.default_rng(derive_seed(config.rng_seed, "ga"))
  eval_seed = derive_seed(config.rng_seed, "ga-eval")
  next_id = 0

  def make(genes):
    nonlocal next_id
    if not np.all(np.isfinite(genes)):
      raise RowdriveError(f"genome {next_id} has non-finite genes")
    next_id += 1
    return Genome(next_id - 1, genes)

  vectors = seed_population(
    list(initial), config.population, config.init_sigma, rng
  )
  population = [make(v) for v in vectors]
  history = []
  progress = progress or Progress(None)
  evaluations = config.population + (config.max_generations - 1) * (
    config.population - config.elites
  )
  progress.set_max(evaluations).set_val(0)
  progress.set_text("generations").write()
  for gen in range(config.max_generations):
    evaluate_population(population, fitness_fn, eval_seed, jobs, progress)
    history.append(generation_stats(gen, population))
    log.info(
      "generation %d: best %.4f mean %.4f",
      gen,
      history[-1]["best"],
      history[-1]["mean"],
    )
    if gen == config.max_generations - 1:
      break
    ranked = sorted(population, key=lambda g: -g.fitness)
    offspring = ranked[: config.elites]
    while len(offspring) < config.population:
      pa = tournament_select(
        population, rng, config.tournament_size, config.selection_pressure
      )
      pb = tournament_select(
        population, rng, config.tournament_size, config.selection_pressure
      )
      for child in crossover(pa.genes, pb.genes, rng, config.crossover_prob):
        if len(offspring) < config.population:
          child = mutate(
            child, rng, config.mutation_prob, config.mutation_sigma
          )
          offspring.append(make(child))
    population = offspring
  progress.clear()
  best = max(population, key=lambda g: g.fitness)
  return EvolutionResult(best=best, population=population, history=history)


class PolicyFitness:
  """Mean episode fitness of the actor encoded by a genome, over
  episodes_per_eval scenarios derived from the evaluation seed."""

  def __init__(
    self,
    scenario,
    td3_config,
    fitness_weights,
    reward_weights=None,
    intent_model=None,
    use_intentions=True,
    episodes=3,
    include_critics=False,
  ):
    self.scenario = scenario
    self.td3_config = td3_config
    self.fitness_weights = fitness_weights
    self.reward_weights = reward_weights
    self.intent_model = intent_model
    self.use_intentions = use_intentions
    self.episodes = episodes
    self.include_critics = include_critics
    self._agent = None

  def __getstate__(self):
    state = dict(self.__dict__)
    state["_agent"] = None
    return state

  def agent(self):
    from .agent import Td3Agent

    if self._agent is None:
      self._agent = Td3Agent(self.td3_config)
    return self._agent

  def episode_seeds(self, eval_seed):
    return [derive_seed(eval_seed, "episode", k) for k in range(self.episodes)]

  def logs(self, genes, eval_seed):
    from .sim import run_episode

    agent = self.agent()
    agent.load_genome(genes, self.include_critics)
    policy = agent.policy(self.scenario, self.use_intentions)
    return [
      run_episode(
        dataclasses.replace(self.scenario, rng_seed=seed),
        policy,
        self.intent_model if self.use_intentions else None,
        self.reward_weights,
      )
      for seed in self.episode_seeds(eval_seed)
    ]

  def __call__(self, genes, eval_seed):
    from .reward import fitness

    mix = self.reward_weights.sce_mix if self.reward_weights else None
    v_ref = self.reward_weights.v_ref if self.reward_weights else None
    scores = [
      fitness(episode, self.fitness_weights, v_ref=v_ref, sce_mix=mix)
      for episode in self.logs(genes, eval_seed)
    ]
    return math.fsum(scores) / len(scores)


def initial_genomes(td3_config, count, seed, include_critics=False):
  """Freshly initialized actor genomes, one per derived seed."""
  from .agent import Td3Agent

  return [
    Td3Agent(td3_config, seed=derive_seed(seed, "ga-init", k)).genome(
      include_critics
    )
    for k in range(count)
  ]


def interleaved_training(
  agent, task, config, fitness_fn, episodes, seed=0, jobs=1, progress=None
):
  """Alternates TD3 training with GA rounds seeded by the current actor.
  The best genome replaces the actor when it beats the actor's fitness.
  Returns (training curve rows, per-round GA history rows)."""
  from .agent import train

  curve, history = [], []
  chunks = np.array_split(np.arange(episodes), config.rounds)
  for r, chunk in enumerate(chunks):
    rows = train(
      agent, task, len(chunk), derive_seed(seed, "round", r), progress
    )
    for row in rows:
      row["episode"] += int(chunk[0]) if len(chunk) else 0
    curve.extend(rows)
    current = agent.genome(config.include_critics)
    round_config = dataclasses.replace(
      config, rng_seed=derive_seed(seed, "ga-round", r)
    )
    current_fitness = fitness_fn(
      current, derive_seed(round_config.rng_seed, "ga-eval")
    )
    result = evolve(round_config, fitness_fn, [current], jobs, progress)
    for row in result.history:
      history.append({"round": r, **row})
    if result.best.fitness > current_fitness:
      log.info(
        "round %d: genome %d improves fitness %.4f -> %.4f",
        r,
        result.best.id,
        current_fitness,
        result.best.fitness,
      )
      agent.load_genome(result.best.genes, config.include_critics)
  return curve, history


def write_history(rows, fout):
  fields = list(rows[0]) if rows else list(HISTORY_FIELDS)
  writer = csv.DictWriter(fout, fieldnames=fields, lineterminator="\n")
  writer.writeheader()
  writer.writerows(rows)


class QuadraticFitness:
  """-|g - optimum|^2; a surface with a known maximum of zero."""

  def __init__(self, optimum):
    self.optimum = np.asarray(optimum, dtype=float)

  def __call__(self, genes, _eval_seed=None):
    d = genes - self.optimum
    return -float(d @ d)


def main(argv):
  """USAGE: evolve.py [--dim N] [--seed N] [--generations N] [--jobs N]
  Evolves a vector towards a random optimum and prints the history CSV."""
  parser = argparse.ArgumentParser(description=main.__doc__)
  parser.add_argument("--dim", type=int, default=4)
  parser.add_argument("--seed", type=int, default=0)
  parser.add_argument("--generations", type=int, default=100)
  parser.add_argument("--jobs", type=int, default=1)
  args = parser.parse_args(argv[1:])
  rng = np.random.default_rng(args.seed)
  target = QuadraticFitness(rng.uniform(-1, 1, args.dim))
  config = GaConfig(max_generations=args.generations, rng_seed=args.seed)
  initial = list(rng.uniform(-2, 2, (config.population, args.dim)))
  result = evolve(config, target, initial, args.jobs, Progress(sys.stderr))
  write_history(result.history, sys.stdout)
  err = np.abs(result.best.genes - target.optimum).max()
  print(f"# max gene error {err:.4g}", file=sys.stderr)
  return 0


if __name__ == "__main__":
  sys.exit(main(sys.argv))
