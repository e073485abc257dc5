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
TD3 actor-critic over the hierarchical action space.

The actor emits five raw values: three maneuver logits and two continuous
heads. Critics see the relaxed action vector (maneuver probabilities plus
the two tanh-squashed heads in [-1, 1]); the executed maneuver is the argmax,
or a sample from the probabilities while exploring.
"""

import argparse
import dataclasses
import logging
import math
import sys

import numpy as np

from . import neural
from .progress import Progress
from .world import (
  INTENT_LABELS,
  MANEUVERS,
  N_NEIGHBORS,
  ConfigError,
  ControlCommand,
  Outcome,
  ScenarioConfig,
  UnreadableFile,
  derive_seed,
)

log = logging.getLogger(__name__)

EGO_FEATURES = 6
NEIGHBOR_FEATURES = 6
NEIGHBOR_WIDTH = NEIGHBOR_FEATURES + len(INTENT_LABELS)
STATE_DIM = EGO_FEATURES + NEIGHBOR_WIDTH * N_NEIGHBORS
ACTION_DIM = 5
POSITION_SCALE = 50.0  # m
SPEED_SCALE = 10.0  # m/s
ACCEL_SCALE = 5.0  # m/s^2
SUCCESS_WINDOW = 20  # episodes in the moving success rate


@dataclasses.dataclass(frozen=True)
class Td3Config:
  gamma: float = 0.97
  tau: float = 1e-3
  policy_delay: int = 2
  smooth_sigma: float = 0.2
  smooth_clip: float = 0.5
  batch: int = 256
  buffer: int = 1_000_000
  hidden: int = 128
  actor_lr: float = 3e-4
  critic_lr: float = 3e-4
  final_lr: float = 1e-6
  max_steps: int = 20_000
  explore_sigma: float = 0.1
  warmup: int = 1000  # uniformly random steps before learning starts
  episodes: int = 20

  def __post_init__(self):
    if not 0 <= self.gamma <= 1:
      raise ConfigError("must lie in [0, 1]", "td3.gamma")
    if not 0 < self.tau <= 1:
      raise ConfigError("must lie in (0, 1]", "td3.tau")
    for key in ("policy_delay", "batch", "buffer", "hidden", "max_steps"):
      if getattr(self, key) < 1:
        raise ConfigError("must be positive", f"td3.{key}")
    if self.smooth_sigma < 0 or self.smooth_clip < 0:
      raise ConfigError("must be non-negative", "td3.smooth")
    if self.batch > self.buffer:
      raise ConfigError("batch exceeds the replay buffer", "td3.batch")


class ReplayBuffer:
  """Fixed-capacity FIFO of (s, a, r, s', done) with uniform sampling."""

  FIELDS = ("s", "a", "r", "s2", "done")

  def __init__(self, capacity, state_dim, action_dim=ACTION_DIM):
    self.capacity = int(capacity)
    # Storage grows on demand up to capacity
    rows = min(self.capacity, 1024)
    self.s = np.zeros((rows, state_dim))
    self.a = np.zeros((rows, action_dim))
    self.r = np.zeros(rows)
    self.s2 = np.zeros((rows, state_dim))
    self.done = np.zeros(rows)
    self._next = 0
    self.size = 0

  def __len__(self):
    return self.size

  def _grow(self):
    rows = min(self.capacity, 2 * len(self.r))
    for name in self.FIELDS:
      old = getattr(self, name)
      new = np.zeros((rows,) + old.shape[1:])
      new[: len(old)] = old
      setattr(self, name, new)

  def add(self, s, a, r, s2, done):
    k = self._next
    if k >= len(self.r):
      self._grow()
    self.s[k], self.a[k], self.r[k] = s, a, r
    self.s2[k], self.done[k] = s2, float(done)
    self._next = (k + 1) % self.capacity
    self.size = min(self.size + 1, self.capacity)

  def sample_indices(self, n, rng):
    return rng.integers(0, self.size, size=n)

  def sample(self, n, rng):
    idx = self.sample_indices(n, rng)
    return self.s[idx], self.a[idx], self.r[idx], self.s2[idx], self.done[idx]


def encode_state(obs, scenario, use_intentions=True):
  """Flattens a NeighborSet into the fixed-width state vector: ego
  kinematics, then per neighbour its relative kinematics and an intention
  one-hot. Missing neighbours and unknown intentions are zero."""
  ego = obs.ego
  state = np.zeros(STATE_DIM)
  state[:EGO_FEATURES] = (
    0.0,  # the ego is the origin of the ring frame
    ego.y / scenario.road_width,
    ego.v_x / SPEED_SCALE,
    ego.v_y,
    ego.a_x / ACCEL_SCALE,
    ego.a_y / ACCEL_SCALE,
  )
  pos = EGO_FEATURES
  for v, intent in obs.neighbors[:N_NEIGHBORS]:
    state[pos : pos + NEIGHBOR_FEATURES] = (
      scenario.wrap(v.x - ego.x) / POSITION_SCALE,
      (v.y - ego.y) / scenario.lane_width,
      (v.v_x - ego.v_x) / SPEED_SCALE,
      v.v_y - ego.v_y,
      v.a_x / ACCEL_SCALE,
      v.a_y / ACCEL_SCALE,
    )
    if use_intentions and intent is not None:
      state[pos + NEIGHBOR_FEATURES + intent.index] = 1.0
    pos += NEIGHBOR_WIDTH
  return state


def relax(raw):
  """Raw actor output (..., 5) -> relaxed action (..., 5)."""
  return np.concatenate(
    [neural.softmax(raw[..., :3]), np.tanh(raw[..., 3:])], axis=-1
  )


def relax_backward(action, daction):
  """Gradient wrt the raw output given the relaxed action and its
  upstream gradient."""
  return np.concatenate(
    [
      neural.softmax_backward(action[..., :3], daction[..., :3]),
      daction[..., 3:] * (1 - action[..., 3:] ** 2),
    ],
    axis=-1,
  )


def decode(action, maneuver=None):
  """Relaxed action vector -> ControlCommand within hard bounds."""
  k = int(np.argmax(action[:3])) if maneuver is None else maneuver
  cont = np.clip(action[3:], -1.0, 1.0)
  return ControlCommand(
    MANEUVERS[k],
    float(cont[0]) * ControlCommand.HEADING_LIMIT,
    float(cont[1]) * ControlCommand.ACCEL_LIMIT,
  )


def bellman_target(r, done, q1, q2, gamma):
  """r + gamma * min(Q1', Q2') on non-terminal transitions."""
  return r + gamma * (1.0 - done) * np.minimum(q1, q2)


def soft_update(target, online, tau):
  """target <- tau * online + (1 - tau) * target, block by block."""
  for name, p in online.items():
    if tau == 1.0:
      target[name] = p.copy()
    else:
      target[name] = tau * p + (1 - tau) * target[name]


class Td3Agent:
  """Actor, twin critics, their targets and optimizers."""

  def __init__(self, config=None, state_dim=STATE_DIM, seed=0):
    self.config = config = config or Td3Config()
    self.state_dim = state_dim
    rng = np.random.default_rng(derive_seed(seed, "td3-init"))
    h = config.hidden
    self.actor = neural.Mlp((state_dim, h, h, ACTION_DIM), prefix="actor")
    self.critics = (
      neural.Mlp((state_dim + ACTION_DIM, h, h, 1), prefix="critic1"),
      neural.Mlp((state_dim + ACTION_DIM, h, h, 1), prefix="critic2"),
    )
    self.actor_params = self.actor.init(rng)
    self.critic_params = {}
    for critic in self.critics:
      critic.init(rng, self.critic_params)
    self.actor_target = neural.copy_params(self.actor_params)
    self.critic_target = neural.copy_params(self.critic_params)
    self.actor_opt = neural.Adam(
      config.actor_lr, config.final_lr, config.max_steps // config.policy_delay
    )
    self.critic_opt = neural.Adam(
      config.critic_lr, config.final_lr, config.max_steps
    )
    self.updates = 0
    self.actor_updates = 0

  def actor_forward(self, state, params=None):
    """Raw 5-vector(s) for state(s)."""
    raw, _ = self.actor.forward(params or self.actor_params, state)
    return raw

  def act(self, state, params=None):
    return relax(self.actor_forward(state, params))

  def critic_forward(self, state, action, params=None):
    """(Q1, Q2) for a batch of states and relaxed actions."""
    params = params or self.critic_params
    x = np.concatenate([state, action], axis=-1)
    return tuple(c.forward(params, x)[0][..., 0] for c in self.critics)

  def update(self, batch, rng):
    """One TD3 step on a sampled batch. Critics always learn; the actor and
    the targets follow every policy_delay calls. Returns the critic loss."""
    cfg = self.config
    s, a, r, s2, done = batch
    n = len(r)

    target_action = self.act(s2, self.actor_target)
    noise = np.clip(
      rng.normal(0, cfg.smooth_sigma, (n, 2)),
      -cfg.smooth_clip,
      cfg.smooth_clip,
    )
    target_action[:, 3:] = np.clip(target_action[:, 3:] + noise, -1, 1)
    q1_t, q2_t = self.critic_forward(s2, target_action, self.critic_target)
    y = bellman_target(r, done, q1_t, q2_t, cfg.gamma)

    x = np.concatenate([s, a], axis=-1)
    grads = {}
    loss = 0.0
    for critic in self.critics:
      q, acts = critic.forward(self.critic_params, x)
      err = q[:, 0] - y
      loss += float(np.mean(err * err))
      g, _ = critic.backward(self.critic_params, acts, (2 * err / n)[:, None])
      grads.update(g)
    if not math.isfinite(loss):
      raise neural.NonFiniteLoss(
        "critic loss", self.updates, f"(|y|max={np.abs(y).max():.3g})"
      )
    self.critic_opt.step(self.critic_params, grads)
    self.updates += 1

    if self.updates % cfg.policy_delay == 0:
      self._update_actor(s)
      soft_update(self.actor_target, self.actor_params, cfg.tau)
      soft_update(self.critic_target, self.critic_params, cfg.tau)
    return loss

  def _update_actor(self, s):
    n = len(s)
    raw, actor_acts = self.actor.forward(self.actor_params, s)
    action = relax(raw)
    critic = self.critics[0]
    q, acts = critic.forward(
      self.critic_params, np.concatenate([s, action], axis=-1)
    )
    if not np.all(np.isfinite(q)):
      raise neural.NonFiniteLoss("actor objective", self.updates)
    # Maximize Q1: descend on -mean(Q1)
    _, dx = critic.backward(self.critic_params, acts, np.full((n, 1), -1 / n))
    draw = relax_backward(action, dx[:, self.state_dim :])
    grads, _ = self.actor.backward(self.actor_params, actor_acts, draw)
    self.actor_opt.step(self.actor_params, grads)
    self.actor_updates += 1

  def policy(self, scenario, use_intentions=True):
    """Deterministic NeighborSet -> ControlCommand policy."""

    def drive(obs):
      return decode(self.act(encode_state(obs, scenario, use_intentions)))

    return drive

  def genome(self, include_critics=False):
    vec = neural.flatten(self.actor_params)
    if include_critics:
      vec = np.concatenate([vec, neural.flatten(self.critic_params)])
    return vec

  def load_genome(self, vec, include_critics=False):
    """Replaces the online and target networks with the genome's."""
    n = sum(p.size for p in self.actor_params.values())
    self.actor_params = neural.unflatten(vec[:n], self.actor_params)
    self.actor_target = neural.copy_params(self.actor_params)
    if include_critics:
      self.critic_params = neural.unflatten(vec[n:], self.critic_params)
      self.critic_target = neural.copy_params(self.critic_params)
    elif len(vec) != n:
      raise neural.ShapeMismatch(f"genome of {len(vec)} for {n} actor genes")

  def save(self, stem):
    neural.save_params({**self.actor_params, **self.critic_params}, stem)

  def load(self, stem):
    params = neural.load_params(stem)
    for k, p in {**self.actor_params, **self.critic_params}.items():
      if k not in params or params[k].shape != p.shape:
        raise UnreadableFile(f"{stem}.json", f"no {k} of shape {p.shape}")
    self.actor_params = {k: params[k] for k in self.actor_params}
    self.critic_params = {k: params[k] for k in self.critic_params}
    self.actor_target = neural.copy_params(self.actor_params)
    self.critic_target = neural.copy_params(self.critic_params)
    return self


def td3_update(buffer, agent, rng):
  """Samples a batch from buffer and applies one agent update. Returns the
  critic loss."""
  if len(buffer) < agent.config.batch:
    raise ValueError(
      f"replay buffer holds {len(buffer)} < batch {agent.config.batch}"
    )
  return agent.update(buffer.sample(agent.config.batch, rng), rng)


def act_with_exploration(agent, state, noise_scale, rng):
  """Returns (ControlCommand, relaxed action). With noise_scale > 0 the
  continuous heads get clipped Gaussian noise and the maneuver is sampled
  from its probabilities; at 0 this is the deterministic decode."""
  action = agent.act(state)
  if noise_scale <= 0:
    return decode(action), action
  action = action.copy()
  action[3:] = np.clip(action[3:] + rng.normal(0, noise_scale, 2), -1, 1)
  probs = action[:3] / action[:3].sum()
  maneuver = int(rng.choice(3, p=probs))
  return decode(action, maneuver), action


def random_action(rng):
  action = np.concatenate(
    [neural.softmax(rng.normal(0, 1, 3)), rng.uniform(-1, 1, 2)]
  )
  return decode(action, int(rng.choice(3, p=action[:3]))), action


class DrivingTask:
  """Environment adapter from sim.Episode to state vectors."""

  def __init__(
    self, scenario, intent_model=None, reward_weights=None, use_intentions=True
  ):
    self.scenario = scenario
    self.intent_model = intent_model
    self.reward_weights = reward_weights
    self.use_intentions = use_intentions
    self.episode = None

  def reset(self, seed):
    from .sim import Episode

    scenario = dataclasses.replace(self.scenario, rng_seed=seed)
    self.episode = Episode(scenario, self.intent_model, self.reward_weights)
    return self._encode(self.episode.observe())

  def _encode(self, obs):
    return encode_state(obs, self.episode.scenario, self.use_intentions)

  def step(self, command):
    obs, reward, done = self.episode.step(command)
    return self._encode(obs), reward.total, done

  @property
  def success(self):
    return self.episode.outcome == Outcome.SAFE_ARRIVED


def train(agent, task, episodes, seed=0, progress=None, max_steps=None):
  """Runs TD3 on task for a number of episodes. Returns training-curve
  rows (episode, reward, success, success_rate)."""
  cfg = agent.config
  rng = np.random.default_rng(derive_seed(seed, "td3-train"))
  buffer = ReplayBuffer(cfg.buffer, agent.state_dim)
  max_steps = cfg.max_steps if max_steps is None else max_steps
  rows = []
  successes = []
  steps = 0
  progress = progress or Progress(None)
  for ep in progress.iterate(range(episodes), "td3 episodes"):
    state = task.reset(derive_seed(seed, "episode", ep))
    total, done = 0.0, False
    while not done:
      if steps < cfg.warmup:
        command, action = random_action(rng)
      else:
        command, action = act_with_exploration(
          agent, state, cfg.explore_sigma, rng
        )
      state2, reward, done = task.step(command)
      buffer.add(state, action, reward, state2, done)
      total += reward
      state = state2
      steps += 1
      if len(buffer) >= cfg.batch and agent.updates < max_steps:
        td3_update(buffer, agent, rng)
    successes.append(bool(task.success))
    recent = successes[-SUCCESS_WINDOW:]
    rows.append(
      {
        "episode": ep,
        "reward": total,
        "success": int(successes[-1]),
        "success_rate": sum(recent) / len(recent),
      }
    )
    log.info("episode %d reward %.3f success %s", ep, total, successes[-1])
  return rows


def main(argv):
  """USAGE: agent.py [--episodes N] [--seed N] [--out STEM]
  Trains a TD3 driver without intention inference and saves it."""
  parser = argparse.ArgumentParser(description=main.__doc__)
  parser.add_argument("--episodes", type=int, default=5)
  parser.add_argument("--seed", type=int, default=0)
  parser.add_argument("--out", default="td3")
  args = parser.parse_args(argv[1:])
  config = Td3Config(batch=64, warmup=200)
  agent = Td3Agent(config, seed=args.seed)
  task = DrivingTask(ScenarioConfig(max_ticks=200), use_intentions=False)
  rows = train(agent, task, args.episodes, args.seed, Progress(sys.stderr))
  for row in rows:
    print(row)
  agent.save(args.out)
  return 0


if __name__ == "__main__":
  sys.exit(main(sys.argv))
