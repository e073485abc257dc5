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
Spatial-temporal attention (STA) intention inference.

Each tick a RegionGrid of L region vectors is reduced to one vector by a
softmax over regions (spatial attention). An LSTM runs over those vectors and
a second softmax over time steps, against one learned vector per look-back
step, pools its hidden states (temporal attention). A dense layer and a
softmax then give LeftTurn / Straight / RightTurn probabilities.

The spatial logit of region i is w_v . v_i + w_h . h_prev + b. The w_h term
is shared by every region, so it never moves the weights and its gradient is
identically zero. It is kept as written.
"""

import argparse
import concurrent.futures
import dataclasses
import json
import logging
import sys

import numpy as np

from . import geometry, neural
from .progress import Progress
from .world import (
  INTENT_LABELS,
  ConfigError,
  IntentLabel,
  RowdriveError,
  ScenarioConfig,
  UnreadableFile,
  derive_seed,
  dumps,
)

log = logging.getLogger(__name__)

TICKS_PER_SECOND = 10
MIN_TRACK_TICKS = 3
STRAIGHT_CLEARANCE = 2.0  # s without any planned maneuver after the window
STRAIGHT_STRIDE = 2.0  # s between Straight samples of one vehicle
DATASET_FORMAT = "rowdrive-intent"


class WindowTooShort(RowdriveError, ValueError):
  def __init__(self, ticks):
    super().__init__(f"track has {ticks} ticks; need {MIN_TRACK_TICKS}")
    self.ticks = ticks


@dataclasses.dataclass(frozen=True)
class IntentConfig:
  enabled: bool = True
  window_s: float = 4.0
  hidden: int = 64
  epochs: int = 20
  batch: int = 64
  lr: float = 1e-3
  final_lr: float = 1e-6
  episodes: int = 20
  train_fraction: float = 0.8
  windows: tuple = (1, 2, 3, 4, 5, 6, 7, 8)  # s, for the sweep

  def __post_init__(self):
    if not 1 <= self.window_s <= 8:
      raise ConfigError("must lie in [1, 8] s", "intent.window_s")
    for key in ("hidden", "epochs", "batch", "episodes"):
      if getattr(self, key) < 1:
        raise ConfigError("must be positive", f"intent.{key}")
    if not 0 < self.train_fraction < 1:
      raise ConfigError("must lie in (0, 1)", "intent.train_fraction")
    if any(not 1 <= w <= 8 for w in self.windows):
      raise ConfigError("windows must lie in [1, 8] s", "intent.windows")

  @property
  def window_ticks(self):
    return round(self.window_s * TICKS_PER_SECOND)


def spatial_attend(regions, h_prev, w_v, w_h, b):
  """regions (..., L, d), h_prev (..., H). Returns (z, weights) with
  z = sum_i g_i v_i and g = softmax over regions of the logits."""
  logits = regions @ w_v + (h_prev @ w_h)[..., None] + b
  g = neural.softmax(logits, axis=-1)
  return np.einsum("...l,...ld->...d", g, regions), g


def temporal_attend(hidden_seq, u):
  """hidden_seq (..., T, H), u (T, H) one learned vector per step.
  Returns (C, weights) with C = sum_t w_t h_t."""
  scores = np.einsum("...th,th->...t", hidden_seq, u)
  w = neural.softmax(scores, axis=-1)
  return np.einsum("...t,...th->...h", w, hidden_seq), w


class IntentionModel:
  """STA classifier over (N, T, L, d) RegionGrid windows."""

  def __init__(
    self,
    window_ticks,
    hidden=64,
    regions=geometry.REGION_COUNT,
    features=geometry.REGION_FEATURES,
    seed=0,
    params=None,
  ):
    self.window_ticks = int(window_ticks)
    self.hidden = hidden
    self.regions = regions
    self.features = features
    self.cell = neural.LstmCell(features, hidden, prefix="sta.lstm")
    if params is None:
      params = self.init(np.random.default_rng(seed))
    self.params = params

  def init(self, rng):
    params = {
      "sta.w_v": np.zeros(self.features),
      "sta.w_h": np.zeros(self.hidden),
      "sta.b": np.zeros(1),
      "sta.u": np.zeros((self.window_ticks, self.hidden)),
    }
    self.cell.init(rng, params)
    bound = 1 / np.sqrt(self.hidden)
    params["head.W"] = rng.uniform(-bound, bound, (3, self.hidden))
    params["head.b"] = np.zeros(3)
    return params

  def zeroed(self):
    """A copy with every parameter zero: the symmetric untrained model."""
    params = {k: np.zeros_like(v) for k, v in self.params.items()}
    return IntentionModel(
      self.window_ticks,
      self.hidden,
      self.regions,
      self.features,
      params=params,
    )

  def _check(self, X):
    want = (self.window_ticks, self.regions, self.features)
    if X.ndim != 4 or X.shape[1:] != want:
      raise neural.ShapeMismatch(f"windows {X.shape[1:]} != {want}")

  def forward(self, X):
    """Returns (probabilities (N, 3), cache)."""
    self._check(X)
    p = self.params
    N, T = X.shape[:2]
    h = np.zeros((N, self.hidden))
    c = np.zeros((N, self.hidden))
    hs, steps = [], []
    for t in range(T):
      z, g = spatial_attend(
        X[:, t], h, p["sta.w_v"], p["sta.w_h"], p["sta.b"]
      )
      h_prev = h
      h, c, cache = self.cell.step(p, z, h, c)
      hs.append(h)
      steps.append((g, h_prev, cache))
    H = np.stack(hs, axis=1)
    C, w = temporal_attend(H, p["sta.u"])
    logits = neural.dense_forward(p["head.W"], p["head.b"], C)
    probs = neural.softmax(logits)
    return probs, (X, H, C, w, steps)

  def loss(self, X, y):
    probs, _ = self.forward(X)
    return float(-np.mean(np.log(probs[np.arange(len(y)), y] + 1e-300)))

  def loss_and_grads(self, X, y):
    """Mean cross-entropy and its gradient for every parameter block."""
    p = self.params
    probs, (X, H, C, w, steps) = self.forward(X)
    N = len(y)
    loss = float(-np.mean(np.log(probs[np.arange(N), y] + 1e-300)))
    dlogits = probs.copy()
    dlogits[np.arange(N), y] -= 1
    dlogits /= N
    grads = {}
    grads["head.W"], grads["head.b"], dC = neural.dense_backward(
      p["head.W"], C, dlogits
    )
    # Temporal attention
    dH = w[..., None] * dC[:, None, :]
    dw = np.einsum("nth,nh->nt", H, dC)
    dscores = neural.softmax_backward(w, dw)
    grads["sta.u"] = np.einsum("nt,nth->th", dscores, H)
    dH += dscores[..., None] * p["sta.u"][None]
    # Back through time
    for name in ("sta.w_v", "sta.w_h", "sta.b"):
      grads[name] = np.zeros_like(p[name])
    grads[self.cell.w_name] = np.zeros_like(p[self.cell.w_name])
    grads[self.cell.b_name] = np.zeros_like(p[self.cell.b_name])
    dh_next = np.zeros((N, self.hidden))
    dc_next = np.zeros((N, self.hidden))
    for t in reversed(range(X.shape[1])):
      g, h_prev, cache = steps[t]
      cell_grads, dz, dh_prev, dc_next = self.cell.backward(
        p, cache, dH[:, t] + dh_next, dc_next
      )
      for k, v in cell_grads.items():
        grads[k] += v
      regions = X[:, t]
      dg = np.einsum("nld,nd->nl", regions, dz)
      dlog = neural.softmax_backward(g, dg)
      grads["sta.w_v"] += np.einsum("nl,nld->d", dlog, regions)
      dsum = dlog.sum(axis=-1)
      grads["sta.w_h"] += dsum @ h_prev
      grads["sta.b"] += dsum.sum()
      dh_next = dh_prev + dsum[:, None] * p["sta.w_h"][None]
    return loss, grads

  def predict(self, X):
    """Returns (labels, probabilities) for a batch of windows."""
    probs, _ = self.forward(X)
    return [INTENT_LABELS[k] for k in probs.argmax(axis=1)], probs

  def fit(self, X, y, config, seed=0, progress=None):
    """Minibatch Adam on cross-entropy. Returns the per-epoch mean loss."""
    rng = np.random.default_rng(derive_seed(seed, "intent-fit"))
    batches = -(-len(y) // config.batch)
    opt = neural.Adam(
      lr=config.lr,
      final_lr=config.final_lr,
      total_steps=config.epochs * batches,
    )
    history = []
    epochs = range(config.epochs)
    if progress is not None:
      epochs = progress.iterate(epochs, f"training {self.window_ticks}-tick")
    for epoch in epochs:
      order = rng.permutation(len(y))
      losses = []
      for k in range(batches):
        idx = order[k * config.batch : (k + 1) * config.batch]
        loss, grads = self.loss_and_grads(X[idx], y[idx])
        if not np.isfinite(loss):
          raise neural.NonFiniteLoss("intent loss", opt.t)
        opt.step(self.params, grads)
        losses.append(loss)
      history.append(float(np.mean(losses)))
      log.debug("epoch %d loss %.4f", epoch, history[-1])
    return history

  def save(self, stem):
    neural.save_params(self.params, stem)
    with open(f"{stem}.model.json", "w", encoding="utf-8") as f:
      json.dump(
        {
          "window_ticks": self.window_ticks,
          "hidden": self.hidden,
          "regions": self.regions,
          "features": self.features,
        },
        f,
      )
      f.write("\n")

  @classmethod
  def load(cls, stem):
    path = f"{stem}.model.json"
    try:
      with open(path, encoding="utf-8") as f:
        meta = json.load(f)
    except OSError as e:
      raise UnreadableFile(path, e.strerror or e) from e
    except ValueError as e:
      raise UnreadableFile(path, e) from e
    params = neural.load_params(stem)
    try:
      return cls(params=params, **meta)
    except TypeError as e:
      raise UnreadableFile(path, e) from e


def infer_intention(model, track):
  """Classifies one (T, L, d) track. Shorter tracks are zero-padded at the
  front to the model window; longer ones keep their latest ticks.
  Returns (IntentLabel, probabilities)."""
  track = np.asarray(track, dtype=float)
  if len(track) < MIN_TRACK_TICKS:
    raise WindowTooShort(len(track))
  W = model.window_ticks
  window = np.zeros((W,) + track.shape[1:])
  recent = track[-W:]
  window[W - len(recent) :] = recent
  labels, probs = model.predict(window[None])
  return labels[0], probs[0]


@dataclasses.dataclass(frozen=True)
class IntentSample:
  window: np.ndarray  # (T, L, d)
  label: IntentLabel
  vehicle_id: int = -1
  end_tick: int = -1
  onset_tick: int = -1

  def to_dict(self):
    return {
      "label": self.label.value,
      "vehicle_id": self.vehicle_id,
      "end_tick": self.end_tick,
      "onset_tick": self.onset_tick,
      "window": self.window.tolist(),
    }

  @classmethod
  def from_dict(cls, d):
    return cls(
      np.asarray(d["window"], dtype=float),
      IntentLabel(d["label"]),
      d["vehicle_id"],
      d["end_tick"],
      d["onset_tick"],
    )


def _window(snapshots, vid, end, ticks, config):
  """RegionGrid history of vid over the ticks ending at end, zero-padded
  where the episode had not started yet."""
  out = np.zeros((ticks, geometry.REGION_COUNT, geometry.REGION_FEATURES))
  for k, t in enumerate(range(end - ticks + 1, end + 1)):
    if t < 0:
      continue
    vehicles = snapshots[t]
    out[k] = geometry.region_grid(vehicles[vid], vehicles, config)
  return out


def episode_samples(config, window_ticks):
  """Runs one NPC-only episode and cuts labelled windows from it.
  Lane-change windows end at the decision tick, a full planning second
  before lateral motion; Straight windows come from vehicles that stay
  unplanned for STRAIGHT_CLEARANCE afterwards."""
  from .sim import World

  world = World(config, ego_controlled=False)
  snapshots = [world.snapshot()]
  busy = [set()]
  for _ in range(config.max_ticks):
    world.step()
    snapshots.append(world.snapshot())
    busy.append(
      {
        i
        for i, npc in world.npcs.items()
        if npc.onset_tick >= 0 or world.changing(i)
      }
    )

  samples = []
  for m in world.maneuvers:
    if not m.executed or m.decision_tick + 1 < MIN_TRACK_TICKS:
      continue
    if any(m.vehicle_id in busy[t] for t in range(
      max(0, m.decision_tick - window_ticks), m.decision_tick
    )):
      continue
    samples.append(
      IntentSample(
        _window(snapshots, m.vehicle_id, m.decision_tick, window_ticks, config),
        m.label,
        m.vehicle_id,
        m.decision_tick,
        m.onset_tick,
      )
    )

  clearance = round(STRAIGHT_CLEARANCE * TICKS_PER_SECOND)
  stride = round(STRAIGHT_STRIDE * TICKS_PER_SECOND)
  last = len(snapshots) - 1 - clearance
  for vid in range(world.n):
    for end in range(window_ticks - 1 + vid % stride, last, stride):
      span = range(end - window_ticks + 1, end + clearance + 1)
      if any(vid in busy[t] for t in span):
        continue
      samples.append(
        IntentSample(
          _window(snapshots, vid, end, window_ticks, config),
          IntentLabel.STRAIGHT,
          vid,
          end,
        )
      )
  return samples


def balance(samples, rng):
  """Down-samples every class to the size of the rarest one."""
  by_label = {label: [] for label in INTENT_LABELS}
  for s in samples:
    by_label[s.label].append(s)
  keep = min(len(v) for v in by_label.values())
  out = []
  for label in INTENT_LABELS:
    group = by_label[label]
    picks = sorted(rng.choice(len(group), size=keep, replace=False))
    out.extend(group[k] for k in picks)
  return out


def split(samples, train_fraction, rng):
  order = rng.permutation(len(samples))
  cut = int(np.floor(train_fraction * len(samples)))
  return [samples[k] for k in order[:cut]], [samples[k] for k in order[cut:]]


def _episode_job(args):
  config, window_ticks = args
  return episode_samples(config, window_ticks)


def build_intent_dataset(
  config, n_episodes, window_ticks, train_fraction=0.8, jobs=1, progress=None
):
  """Generates, balances and splits labelled windows from n_episodes
  independent NPC episodes. Returns (train, test)."""
  scenarios = [
    dataclasses.replace(
      config, rng_seed=derive_seed(config.rng_seed, "intent", k)
    )
    for k in range(n_episodes)
  ]
  work = [(s, window_ticks) for s in scenarios]
  results = [None] * n_episodes
  progress = progress or Progress(None)
  progress.set_max(n_episodes).set_val(0).set_text("intent episodes").write()
  if jobs > 1:
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
      futures = {pool.submit(_episode_job, w): k for k, w in enumerate(work)}
      for future in concurrent.futures.as_completed(futures):
        k = futures[future]
        try:
          results[k] = future.result()
        except Exception as e:
          raise RowdriveError(f"intent episode {k} failed: {e}") from e
        progress.incr().write()
  else:
    for k, w in enumerate(work):
      results[k] = _episode_job(w)
      progress.incr().write()
  progress.clear()
  samples = [s for r in results for s in r]
  rng = np.random.default_rng(derive_seed(config.rng_seed, "intent-split"))
  balanced = balance(samples, rng)
  if not balanced:
    raise RowdriveError(
      "no lane changes observed; raise intent.episodes or scenario.density"
    )
  log.info(
    "intent dataset: %d windows, %d after balancing",
    len(samples),
    len(balanced),
  )
  return split(balanced, train_fraction, rng)


def synthetic_dataset(n, window_ticks, seed=0, noise=0.05):
  """A separable toy set of RegionGrid windows. Lane changers show a
  growing lateral offset and lateral speed in their centre cell over the
  last second; neighbours are random clutter independent of the label."""
  rng = np.random.default_rng(derive_seed(seed, "synthetic-intent"))
  centre = geometry.REGION_COUNT // 2
  samples = []
  for k in range(n):
    label = INTENT_LABELS[k % 3]
    sign = {"LeftTurn": 1.0, "Straight": 0.0, "RightTurn": -1.0}[label.value]
    X = np.zeros(
      (window_ticks, geometry.REGION_COUNT, geometry.REGION_FEATURES)
    )
    occupied = rng.random(geometry.REGION_COUNT) < 0.3
    occupied[centre] = False
    clutter = rng.normal(0, 0.5, (geometry.REGION_COUNT, 5))
    X[:, occupied, 0] = 1.0
    X[:, occupied, 1:] = clutter[occupied]
    ramp = np.clip(np.arange(window_ticks) - (window_ticks - 11), 0, None) / 10
    X[:, centre, 0] = 1.0
    X[:, centre, 2] = sign * 0.5 * ramp**2
    X[:, centre, 3] = rng.uniform(0.8, 1.6)
    X[:, centre, 4] = sign * ramp
    X += rng.normal(0, noise, X.shape) * (X != 0)
    samples.append(IntentSample(X, label))
  return samples


def arrays(samples, window_ticks=None):
  """Stacks samples into (X, y), keeping the latest window_ticks ticks."""
  X = np.stack([s.window for s in samples])
  if window_ticks is not None:
    X = X[:, -window_ticks:]
  y = np.array([s.label.index for s in samples])
  return X, y


def classification_metrics(y_true, y_pred, classes=3):
  """Macro-averaged precision, recall, F1 and plain accuracy.
  A class never predicted has precision 0."""
  y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
  cm = np.zeros((classes, classes), dtype=int)
  np.add.at(cm, (y_true, y_pred), 1)
  tp = np.diag(cm).astype(float)
  predicted = cm.sum(axis=0)
  actual = cm.sum(axis=1)
  with np.errstate(invalid="ignore", divide="ignore"):
    precision = np.where(predicted > 0, tp / predicted, 0.0)
    recall = np.where(actual > 0, tp / actual, 0.0)
    f1 = np.where(
      precision + recall > 0,
      2 * precision * recall / (precision + recall),
      0.0,
    )
  return {
    "precision": float(precision.mean()),
    "recall": float(recall.mean()),
    "f1": float(f1.mean()),
    "accuracy": float(tp.sum() / max(cm.sum(), 1)),
  }


def _sweep_job(args):
  train, test, seconds, config, seed = args
  ticks = round(seconds * TICKS_PER_SECOND)
  model = IntentionModel(ticks, hidden=config.hidden, seed=seed)
  X, y = arrays(train, ticks)
  model.fit(X, y, config, seed=seed)
  Xt, yt = arrays(test, ticks)
  labels, _ = model.predict(Xt)
  row = {"window_s": seconds}
  row.update(classification_metrics(yt, [label.index for label in labels]))
  return row


def window_sweep(train, test, config, seed=0, jobs=1, progress=None):
  """Trains one model per look-back window under identical seeds and budget
  and scores each on test. train/test windows must be at least as long as
  the longest window. Returns rows ordered by window."""
  longest = round(max(config.windows) * TICKS_PER_SECOND)
  if train[0].window.shape[0] < longest:
    raise ConfigError(
      "dataset windows shorter than the sweep", "intent.windows"
    )
  work = [(train, test, w, config, seed) for w in config.windows]
  progress = progress or Progress(None)
  rows = [None] * len(work)
  if jobs > 1:
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
      for k, row in enumerate(pool.map(_sweep_job, work)):
        rows[k] = row
        progress.msg(f"window {row['window_s']} s: acc {row['accuracy']:.3f}")
  else:
    for k, w in enumerate(progress.iterate(work, "window sweep")):
      rows[k] = _sweep_job(w)
  return rows


def write_dataset(samples, path):
  with open(path, "w", encoding="utf-8", newline="\n") as f:
    f.write(dumps({"format": DATASET_FORMAT, "samples": len(samples)}) + "\n")
    for s in samples:
      f.write(dumps(s.to_dict()) + "\n")


def read_dataset(path):
  try:
    with open(path, encoding="utf-8") as f:
      header = json.loads(f.readline())
      if header.get("format") != DATASET_FORMAT:
        raise UnreadableFile(path, "not an intent dataset")
      return [IntentSample.from_dict(json.loads(line)) for line in f]
  except OSError as e:
    raise UnreadableFile(path, e.strerror or e) from e
  except (ValueError, KeyError) as e:
    raise UnreadableFile(path, f"malformed sample ({e})") from e


def main(argv):
  """USAGE: intention.py [--synthetic N] [--window S] [--seed N]
  Trains one STA model and prints its test metrics."""
  parser = argparse.ArgumentParser(description=main.__doc__)
  parser.add_argument("--synthetic", type=int, default=0)
  parser.add_argument("--window", type=float, default=4.0)
  parser.add_argument("--seed", type=int, default=0)
  args = parser.parse_args(argv[1:])
  config = IntentConfig(window_s=args.window, episodes=4)
  ticks = config.window_ticks
  progress = Progress(sys.stderr)
  if args.synthetic:
    rng = np.random.default_rng(args.seed)
    data = synthetic_dataset(args.synthetic, ticks, args.seed)
    train, test = split(data, config.train_fraction, rng)
  else:
    scenario = ScenarioConfig(rng_seed=args.seed)
    train, test = build_intent_dataset(
      scenario, config.episodes, ticks, progress=progress
    )
  model = IntentionModel(ticks, config.hidden, seed=args.seed)
  model.fit(*arrays(train), config, seed=args.seed, progress=progress)
  Xt, yt = arrays(test)
  labels, _ = model.predict(Xt)
  print(json.dumps(classification_metrics(yt, [x.index for x in labels])))
  return 0


if __name__ == "__main__":
  sys.exit(main(sys.argv))
