# SPDX-FileCopyrightText: (C) 2026 rowdrive contributors
# SPDX-License-Identifier: Apache-2.0

import numpy as np
import pytest

from rowdrive import geometry
from rowdrive.intention import (
  IntentConfig,
  IntentionModel,
  IntentSample,
  WindowTooShort,
  arrays,
  balance,
  build_intent_dataset,
  classification_metrics,
  episode_samples,
  infer_intention,
  read_dataset,
  spatial_attend,
  split,
  synthetic_dataset,
  temporal_attend,
  window_sweep,
  write_dataset,
)
from rowdrive.neural import numeric_grad
from rowdrive.sim import Episode
from rowdrive.world import ConfigError, ControlCommand, IntentLabel
from rowdrive.world import ScenarioConfig

L, D = geometry.REGION_COUNT, geometry.REGION_FEATURES


def _randomized(model, seed):
  rng = np.random.default_rng(seed)
  for p in model.params.values():
    p[...] = rng.normal(0, 0.5, p.shape)
  return model


def test_spatial_attention_of_identical_regions():
  rng = np.random.default_rng(0)
  u = rng.normal(size=4)
  regions = np.tile(u, (6, 1))
  z, g = spatial_attend(
    regions, rng.normal(size=3), rng.normal(size=4), rng.normal(size=3), 0.2
  )
  assert np.allclose(z, u)
  assert g.sum() == pytest.approx(1.0, abs=1e-9)


def test_spatial_attention_saturates():
  regions = np.array([[1000.0, 5.0], [0.0, 1.0], [0.0, -1.0]])
  z, g = spatial_attend(
    regions, np.zeros(2), np.array([1.0, 0.0]), np.zeros(2), 0.0
  )
  assert g[0] > 0.999
  assert np.allclose(z, regions[0])


def test_spatial_weights_are_convex():
  rng = np.random.default_rng(1)
  regions = rng.normal(size=(8, 5, 3))
  _, g = spatial_attend(
    regions, rng.normal(size=(8, 4)), rng.normal(size=3),
    rng.normal(size=4), 0.0,
  )  # fmt: skip
  assert (g >= 0).all()
  assert np.allclose(g.sum(axis=-1), 1.0, atol=1e-9)


def test_temporal_attention():
  rng = np.random.default_rng(2)
  h = rng.normal(size=(1, 5))
  C, w = temporal_attend(h, rng.normal(size=(1, 5)))
  assert np.array_equal(C, h[0]) and w.tolist() == [1.0]
  same = np.tile(h, (4, 1))
  C, _ = temporal_attend(same, rng.normal(size=(4, 5)))
  assert np.allclose(C, h[0])
  seq = rng.normal(size=(6, 5))
  C, w = temporal_attend(seq, rng.normal(size=(6, 5)))
  assert w.sum() == pytest.approx(1.0)
  assert (C >= seq.min(axis=0) - 1e-12).all()
  assert (C <= seq.max(axis=0) + 1e-12).all()


def test_symmetric_model_is_undecided():
  model = IntentionModel(10, hidden=8).zeroed()
  X = np.random.default_rng(3).normal(size=(4, 10, L, D))
  _, probs = model.predict(X)
  assert np.allclose(probs, 1 / 3)


def test_probabilities_sum_to_one():
  model = _randomized(IntentionModel(6, hidden=5), seed=4)
  X = np.random.default_rng(5).normal(size=(7, 6, L, D))
  labels, probs = model.predict(X)
  assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-6)
  assert all(label in IntentLabel for label in labels)


def test_region_order_does_not_matter():
  model = _randomized(IntentionModel(5, hidden=4), seed=6)
  X = np.random.default_rng(7).normal(size=(3, 5, L, D))
  perm = np.random.default_rng(8).permutation(L)
  _, a = model.predict(X)
  _, b = model.predict(X[:, :, perm])
  assert np.allclose(a, b)


@pytest.mark.parametrize("seed", range(3))
def test_end_to_end_gradients(seed):
  model = IntentionModel(3, hidden=3, regions=2, features=2, seed=seed)
  _randomized(model, seed)
  rng = np.random.default_rng(100 + seed)
  X = rng.normal(size=(4, 3, 2, 2))
  y = np.array([0, 1, 2, 1])
  _, grads = model.loss_and_grads(X, y)
  for name, g in grads.items():
    numeric = numeric_grad(lambda: model.loss(X, y), model.params[name])
    np.testing.assert_allclose(g, numeric, rtol=1e-3, atol=1e-6)


def test_infer_intention_pads_and_refuses_short_tracks():
  model = IntentionModel(10, hidden=4)
  track = np.random.default_rng(9).normal(size=(4, L, D))
  label, probs = infer_intention(model, track)
  padded = np.zeros((10, L, D))
  padded[-4:] = track
  _, expected = model.predict(padded[None])
  assert np.allclose(probs, expected[0])
  assert label in IntentLabel
  with pytest.raises(WindowTooShort):
    infer_intention(model, track[:2])


def test_wrong_window_shape_is_rejected():
  model = IntentionModel(10, hidden=4)
  with pytest.raises(ValueError):
    model.predict(np.zeros((1, 9, L, D)))


def test_classification_metrics():
  perfect = classification_metrics([0, 1, 2, 2], [0, 1, 2, 2])
  assert set(perfect.values()) == {1.0}
  lazy = classification_metrics([0, 1, 2] * 4, [1] * 12)
  assert lazy["accuracy"] == pytest.approx(1 / 3)
  m = classification_metrics([0, 0, 0, 1, 1, 2], [0, 0, 1, 1, 2, 2])
  assert m["precision"] == pytest.approx(2 / 3)
  assert m["recall"] == pytest.approx((2 / 3 + 1 / 2 + 1) / 3)
  assert m["f1"] == pytest.approx((0.8 + 0.5 + 2 / 3) / 3)
  assert m["accuracy"] == pytest.approx(4 / 6)


def _samples(counts):
  out = []
  for label, n in zip(IntentLabel, counts):
    window = np.zeros((3, L, D))
    out += [IntentSample(window, label, vehicle_id=k) for k in range(n)]
  return out


def test_balance_down_samples_to_the_rarest_class():
  rng = np.random.default_rng(10)
  balanced = balance(_samples((7, 20, 4)), rng)
  counts = [sum(s.label == label for s in balanced) for label in IntentLabel]
  assert counts == [4, 4, 4]


@pytest.mark.parametrize("n", [10, 15, 31])
def test_split_sizes(n):
  train, test = split(list(range(n)), 0.8, np.random.default_rng(n))
  assert len(train) == int(np.floor(0.8 * n))
  assert len(test) == n - len(train)
  assert sorted(train + test) == list(range(n))


def test_lane_change_windows_end_before_lateral_motion():
  config = ScenarioConfig(density=120, max_ticks=250, rng_seed=1)
  samples = episode_samples(config, window_ticks=20)
  changes = [s for s in samples if s.label != IntentLabel.STRAIGHT]
  assert changes
  centre = L // 2
  for s in changes:
    assert s.end_tick < s.onset_tick
    # Lateral speed of the subject stays zero through the window
    assert not s.window[:, centre, 4].any()
  assert any(s.label == IntentLabel.STRAIGHT for s in samples)


def test_build_intent_dataset_is_balanced_and_split():
  config = ScenarioConfig(density=120, max_ticks=250, rng_seed=2)
  train, test = build_intent_dataset(config, 2, window_ticks=10)
  everything = train + test
  counts = [sum(s.label == label for s in everything) for label in IntentLabel]
  assert max(counts) - min(counts) <= 1
  assert len(train) == int(np.floor(0.8 * len(everything)))
  again = build_intent_dataset(config, 2, window_ticks=10)
  assert [s.end_tick for s in again[0]] == [s.end_tick for s in train]


def test_dataset_files(tmp_path):
  samples = synthetic_dataset(6, 5, seed=1)
  path = tmp_path / "intent.jsonl"
  write_dataset(samples, path)
  back = read_dataset(path)
  assert [s.label for s in back] == [s.label for s in samples]
  assert all(np.array_equal(a.window, b.window) for a, b in zip(back, samples))


def test_save_and_load(tmp_path):
  model = _randomized(IntentionModel(5, hidden=4), seed=11)
  model.save(str(tmp_path / "sta"))
  loaded = IntentionModel.load(str(tmp_path / "sta"))
  X = np.random.default_rng(12).normal(size=(2, 5, L, D))
  assert np.array_equal(model.predict(X)[1], loaded.predict(X)[1])


def test_window_sweep_emits_one_row_per_window():
  data = synthetic_dataset(30, 20, seed=2)
  train, test = split(data, 0.8, np.random.default_rng(0))
  config = IntentConfig(windows=(1, 2), epochs=1, hidden=4, batch=8)
  rows = window_sweep(train, test, config)
  assert [r["window_s"] for r in rows] == [1, 2]
  for r in rows:
    assert set(r) == {"window_s", "precision", "recall", "f1", "accuracy"}
    assert 0.0 <= r["accuracy"] <= 1.0
  with pytest.raises(ConfigError):
    window_sweep(train, test, IntentConfig(windows=(3,)))


def test_episode_reports_neighbour_intentions():
  config = ScenarioConfig(density=100, max_ticks=20, rng_seed=3)
  episode = Episode(config, intent_model=IntentionModel(10, hidden=4))
  for _ in range(5):
    episode.step(ControlCommand())
  labels = [label for _, label in episode.observe().neighbors]
  assert any(label is not None for label in labels)


@pytest.mark.slow
def test_trained_model_separates_synthetic_intentions():
  config = IntentConfig(epochs=40, lr=3e-3)
  ticks = config.window_ticks
  data = synthetic_dataset(900, ticks, seed=0)
  train, test = split(data, config.train_fraction, np.random.default_rng(0))
  model = IntentionModel(ticks, config.hidden, seed=0)
  model.fit(*arrays(train), config, seed=0)
  Xt, yt = arrays(test)
  labels, probs = model.predict(Xt)
  scores = classification_metrics(yt, [label.index for label in labels])
  assert scores["accuracy"] >= 0.9
  straight = [k for k, y in enumerate(yt) if y == IntentLabel.STRAIGHT.index]
  assert np.median(probs[straight, IntentLabel.STRAIGHT.index]) > 0.9
