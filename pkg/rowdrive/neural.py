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
Small differentiable numeric core on numpy: dense layers, an LSTM cell,
softmax, an annealed Adam optimizer and finite-difference gradient checks.

Parameters travel as ordered dicts of name -> ndarray ("parameter blocks").
Every op has a hand-written backward rule; forward passes never draw random
numbers.
"""

import json
import os
import sys

import numpy as np

from .world import RowdriveError, UnreadableFile

PARAMS_FORMAT = "rowdrive-params"
PARAMS_VERSION = 1


class ShapeMismatch(RowdriveError, ValueError):
  pass


class NonFiniteGradient(RowdriveError):
  def __init__(self, block):
    super().__init__(f"non-finite gradient in parameter block {block!r}")
    self.block = block


class NonFiniteLoss(RowdriveError):
  def __init__(self, what, step, detail=""):
    super().__init__(f"non-finite {what} at step {step} {detail}".rstrip())
    self.what = what
    self.step = step


def _check_dense(W, b, x):
  if W.ndim != 2 or b.shape != (W.shape[0],) or x.shape[-1] != W.shape[1]:
    raise ShapeMismatch(
      f"dense W{W.shape} b{b.shape} cannot take x{x.shape}"
    )


def dense_forward(W, b, x):
  """y = W x + b for a vector x or a (batch, in) matrix."""
  _check_dense(W, b, x)
  return x @ W.T + b


def dense_backward(W, x, dy):
  """Returns (dW, db, dx) given the upstream gradient dy."""
  if dy.shape[-1] != W.shape[0] or x.shape[-1] != W.shape[1]:
    raise ShapeMismatch(f"dense backward W{W.shape} x{x.shape} dy{dy.shape}")
  if x.ndim == 1:
    return np.outer(dy, x), dy.copy(), W.T @ dy
  return dy.T @ x, dy.sum(axis=0), dy @ W


def softmax(z, axis=-1):
  z = np.asarray(z, dtype=float)
  e = np.exp(z - z.max(axis=axis, keepdims=True))
  return e / e.sum(axis=axis, keepdims=True)


def softmax_backward(p, dp, axis=-1):
  """Gradient wrt the logits given p = softmax(z) and dL/dp."""
  return p * (dp - (dp * p).sum(axis=axis, keepdims=True))


def sigmoid(z):
  return 0.5 * (1 + np.tanh(0.5 * z))


def relu(z):
  return np.maximum(z, 0.0)


class LstmCell:
  """LSTM cell with a single fused gate matrix over [x, h], gates ordered
  input, forget, candidate, output."""

  def __init__(self, input_dim, hidden_dim=64, prefix="lstm"):
    self.input_dim = input_dim
    self.hidden_dim = hidden_dim
    self.w_name = f"{prefix}.W"
    self.b_name = f"{prefix}.b"

  def init(self, rng, params=None):
    params = {} if params is None else params
    H, D = self.hidden_dim, self.input_dim
    bound = 1 / np.sqrt(H)
    params[self.w_name] = rng.uniform(-bound, bound, (4 * H, D + H))
    params[self.b_name] = np.zeros(4 * H)
    # Forget gate starts open
    params[self.b_name][H : 2 * H] = 1.0
    return params

  def step(self, params, x, h, c):
    """One step on a batch; x is (N, D), h and c are (N, H).
    Returns (h', c', cache)."""
    H = self.hidden_dim
    xh = np.concatenate([x, h], axis=-1)
    z = dense_forward(params[self.w_name], params[self.b_name], xh)
    i = sigmoid(z[..., :H])
    f = sigmoid(z[..., H : 2 * H])
    g = np.tanh(z[..., 2 * H : 3 * H])
    o = sigmoid(z[..., 3 * H :])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    return h_new, c_new, (xh, c, i, f, g, o, tc)

  def backward(self, params, cache, dh, dc):
    """Returns (grads, dx, dh_prev, dc_prev) for one step."""
    xh, c_prev, i, f, g, o, tc = cache
    D = self.input_dim
    do = dh * tc
    dc = dc + dh * o * (1 - tc * tc)
    di = dc * g
    dg = dc * i
    df = dc * c_prev
    dc_prev = dc * f
    dz = np.concatenate(
      [di * i * (1 - i), df * f * (1 - f), dg * (1 - g * g), do * o * (1 - o)],
      axis=-1,
    )
    dW, db, dxh = dense_backward(params[self.w_name], xh, dz)
    grads = {self.w_name: dW, self.b_name: db}
    return grads, dxh[..., :D], dxh[..., D:], dc_prev


def lstm_step(cell, params, x_t, h_prev, c_prev):
  """Returns (h_t, c_t)."""
  h, c, _ = cell.step(params, x_t, h_prev, c_prev)
  return h, c


class Mlp:
  """Fully connected network; ReLU between layers, linear output."""

  def __init__(self, sizes, prefix="mlp"):
    if len(sizes) < 2:
      raise ShapeMismatch("an MLP needs input and output sizes")
    self.sizes = tuple(sizes)
    self.prefix = prefix

  @property
  def names(self):
    for k in range(len(self.sizes) - 1):
      yield f"{self.prefix}.W{k}", f"{self.prefix}.b{k}"

  def init(self, rng, params=None, scale=1.0):
    params = {} if params is None else params
    for (wn, bn), fan_in, fan_out in zip(
      self.names, self.sizes, self.sizes[1:]
    ):
      bound = scale / np.sqrt(fan_in)
      params[wn] = rng.uniform(-bound, bound, (fan_out, fan_in))
      params[bn] = rng.uniform(-bound, bound, fan_out)
    return params

  def forward(self, params, x):
    """Returns (output, cache)."""
    acts = [x]
    names = list(self.names)
    for k, (wn, bn) in enumerate(names):
      x = dense_forward(params[wn], params[bn], x)
      if k < len(names) - 1:
        x = relu(x)
      acts.append(x)
    return x, acts

  def backward(self, params, acts, dy):
    """Returns (grads, dx)."""
    grads = {}
    names = list(self.names)
    for k in reversed(range(len(names))):
      wn, bn = names[k]
      if k < len(names) - 1:
        dy = dy * (acts[k + 1] > 0)
      grads[wn], grads[bn], dy = dense_backward(params[wn], acts[k], dy)
    return grads, dy


class Adam:
  """Adaptive-moment optimizer whose learning rate anneals linearly from
  lr to final_lr over total_steps, then stays at final_lr."""

  def __init__(
    self,
    lr=3e-4,
    final_lr=1e-6,
    total_steps=20000,
    beta1=0.9,
    beta2=0.999,
    eps=1e-8,
  ):
    self.lr = lr
    self.final_lr = final_lr
    self.total_steps = max(int(total_steps), 1)
    self.beta1 = beta1
    self.beta2 = beta2
    self.eps = eps
    self.t = 0
    self.m = {}
    self.v = {}

  def rate(self, t=None):
    t = self.t if t is None else t
    frac = min(t / self.total_steps, 1.0)
    return self.lr + (self.final_lr - self.lr) * frac

  def step(self, params, grads):
    """Updates params in place from grads (a subset of params is fine) and
    returns params. Raises NonFiniteGradient before touching anything."""
    for name, g in grads.items():
      if not np.all(np.isfinite(g)):
        raise NonFiniteGradient(name)
      if g.shape != params[name].shape:
        raise ShapeMismatch(
          f"{name}: gradient {g.shape} for {params[name].shape}"
        )
    lr = self.rate()
    self.t += 1
    b1, b2 = self.beta1, self.beta2
    for name, g in grads.items():
      m = self.m.get(name)
      if m is None:
        m = self.m[name] = np.zeros_like(g)
        self.v[name] = np.zeros_like(g)
      v = self.v[name]
      m *= b1
      m += (1 - b1) * g
      v *= b2
      v += (1 - b2) * g * g
      m_hat = m / (1 - b1**self.t)
      v_hat = v / (1 - b2**self.t)
      params[name] -= lr * m_hat / (np.sqrt(v_hat) + self.eps)
    return params


def optimizer_step(params, grads, optimizer):
  return optimizer.step(params, grads)


def numeric_grad(f, x, eps=1e-6):
  """Central finite-difference gradient of scalar f() wrt the array x,
  which f must read; x is perturbed in place and restored."""
  grad = np.zeros_like(x)
  it = np.nditer(x, flags=["multi_index"])
  for _ in it:
    idx = it.multi_index
    old = x[idx]
    x[idx] = old + eps
    hi = f()
    x[idx] = old - eps
    lo = f()
    x[idx] = old
    grad[idx] = (hi - lo) / (2 * eps)
  return grad


def rel_error(a, b):
  """Largest elementwise |a - b| relative to the magnitudes involved."""
  a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
  scale = np.maximum(np.abs(a) + np.abs(b), 1e-8)
  return float(np.max(np.abs(a - b) / scale)) if a.size else 0.0


def flatten(params):
  """Concatenates parameter blocks into one vector in their dict order."""
  if not params:
    return np.zeros(0)
  return np.concatenate([p.ravel() for p in params.values()])


def unflatten(vector, like):
  """Inverse of flatten with the block layout of like."""
  out = {}
  pos = 0
  for name, p in like.items():
    out[name] = np.asarray(vector[pos : pos + p.size], dtype=float).reshape(
      p.shape
    )
    pos += p.size
  if pos != len(vector):
    raise ShapeMismatch(f"vector of {len(vector)} for {pos} parameters")
  return out


def copy_params(params):
  return {k: v.copy() for k, v in params.items()}


def save_params(params, stem):
  """Writes stem.bin (little-endian float64 blocks) and stem.json (the
  block manifest). Returns both paths."""
  manifest = {
    "format": PARAMS_FORMAT,
    "version": PARAMS_VERSION,
    "blocks": [{"name": k, "shape": list(v.shape)} for k, v in params.items()],
  }
  directory = os.path.dirname(stem)
  if directory:
    os.makedirs(directory, exist_ok=True)
  with open(f"{stem}.bin", "wb") as f:
    f.write(flatten(params).astype("<f8").tobytes())
  with open(f"{stem}.json", "w", encoding="utf-8", newline="\n") as f:
    json.dump(manifest, f, indent=1)
    f.write("\n")
  return f"{stem}.bin", f"{stem}.json"


def load_params(stem):
  """Reads a checkpoint written by save_params; any failure is an
  UnreadableFile naming the stem."""
  try:
    with open(f"{stem}.json", encoding="utf-8") as f:
      manifest = json.load(f)
    with open(f"{stem}.bin", "rb") as f:
      data = np.frombuffer(f.read(), dtype="<f8").astype(float)
  except OSError as e:
    raise UnreadableFile(e.filename or stem, e.strerror or e) from e
  except ValueError as e:
    raise UnreadableFile(f"{stem}.json", e) from e
  if manifest.get("format") != PARAMS_FORMAT:
    raise UnreadableFile(f"{stem}.json", "not a parameter manifest")
  if manifest.get("version") != PARAMS_VERSION:
    raise UnreadableFile(
      f"{stem}.json", f"unsupported parameter version {manifest['version']}"
    )
  like = {
    b["name"]: np.zeros(b["shape"]) for b in manifest["blocks"]
  }
  try:
    return unflatten(data, like)
  except ShapeMismatch as e:
    raise UnreadableFile(f"{stem}.bin", e) from e


def main(argv):
  """USAGE: neural.py stem
  Lists the parameter blocks of a checkpoint."""
  params = load_params(argv[1])
  for name, p in params.items():
    shape = "x".join(map(str, p.shape))
    print(f"{name}\t{shape}\t|p|max={np.abs(p).max():.4g}")
  print(f"{sum(p.size for p in params.values())} parameters")
  return 0


if __name__ == "__main__":
  sys.exit(main(sys.argv))
