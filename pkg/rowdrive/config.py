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
Run configuration files.

A file holds one `section.field = value` assignment per line; `#` starts a
comment. Values are comma-separated lists of atoms: integers, floats,
`true`/`false`, `none`, double-quoted strings or bare words.

  scenario.density = 150
  reward.sce_mix = 0.2, 0.2, 0.2, 0.2, 0.2
  ga.mode = interleaved
"""

import dataclasses
import hashlib
import re
import sys

from .agent import Td3Config
from .evolve import GaConfig
from .intention import IntentConfig
from .reward import FitnessWeights, RewardWeights
from .world import ConfigError, ScenarioConfig

ABLATION_MODES = ("Full", "NoSituationAwareness", "NoEvolution")

ATOM_RE = re.compile(
  r"""
      ([+-]?[0-9]+)           # Group 1: integer portion
      (                       # Group 2: decimal portion
        (?:\.[0-9]*)?         # fractional
        (?:[eE][+-]?[0-9]+)?  # exponent
      )
      (?=[\s,]|$)             # a number ends at a separator
    |
      ([^,"\s]+)              # Group 3: bare word
    """,
  re.VERBOSE,
)
LITERAL_RE = re.compile(r'"(?:[^"\\]|\\.)*"')
BACKSLASH_RE = re.compile(r"\\(.)")
ASSIGNMENT_RE = re.compile(r"^\s*([a-z_][a-z0-9_]*)\.([a-z_][a-z0-9_]*)\s*=")
WORDS = {"true": True, "false": False, "none": None, "inf": float("inf")}


@dataclasses.dataclass(frozen=True)
class HarnessConfig:
  seed: int = 0
  seeds: int = 3  # independent training seeds per experiment
  eval_episodes: int = 100  # driving experiments per model and density
  densities: tuple = (60.0, 100.0, 150.0)  # vehicles/km
  modes: tuple = ABLATION_MODES
  jobs: int = 1
  svg: bool = True

  def __post_init__(self):
    for key in ("seeds", "eval_episodes", "jobs"):
      if getattr(self, key) < 1:
        raise ConfigError("must be positive", f"harness.{key}")
    if not self.densities or any(d < 0 for d in self.densities):
      raise ConfigError("needs non-negative densities", "harness.densities")
    unknown = set(self.modes) - set(ABLATION_MODES)
    if unknown or not self.modes:
      raise ConfigError(
        f"modes must be drawn from {', '.join(ABLATION_MODES)}",
        "harness.modes",
      )


SECTIONS = {
  "scenario": ScenarioConfig,
  "reward": RewardWeights,
  "fitness": FitnessWeights,
  "intent": IntentConfig,
  "td3": Td3Config,
  "ga": GaConfig,
  "harness": HarnessConfig,
}

PROFILES = {
  "quick": {
    "scenario.max_ticks": 200,
    "ga.population": 16,
    "ga.max_generations": 20,
    "td3.episodes": 20,
    "td3.max_steps": 4000,
    "intent.episodes": 10,
    "harness.eval_episodes": 10,
  },
  "faithful": {
    "scenario.max_ticks": 400,
    "ga.population": 50,
    "ga.max_generations": 100,
    "td3.episodes": 6000,
    "td3.max_steps": 20000,
    "intent.episodes": 100,
    "harness.eval_episodes": 100,
    "harness.seeds": 10,
  },
}


def parse_value(text, key=None):
  """Scans a comma-separated atom list. Returns a single atom or, when a
  comma is present, a tuple."""
  atoms = []
  i, n = 0, len(text)
  expect_atom = True
  while i < n:
    c = text[i]
    if c.isspace():
      i += 1
    elif c == ",":
      if expect_atom:
        raise ConfigError("empty list element", key)
      expect_atom = True
      i += 1
    elif not expect_atom:
      raise ConfigError(f"expected ',' at {text[i:]!r}", key)
    elif c == '"':
      literal = LITERAL_RE.match(text, i)
      if not literal:
        raise ConfigError(f"unterminated string {text[i:]!r}", key)
      atoms.append(BACKSLASH_RE.sub(r"\1", literal.group()[1:-1]))
      i = literal.end()
      expect_atom = False
    else:
      a = ATOM_RE.match(text, i)
      if a.group(1) is not None and a.group(2):
        atoms.append(float(a.group(1) + a.group(2)))
      elif a.group(1) is not None:
        atoms.append(int(a.group(1)))
      else:
        word = a.group(3)
        atoms.append(WORDS.get(word.lower(), word))
      i = a.end()
      expect_atom = False
  if expect_atom and atoms:
    raise ConfigError("trailing ','", key)
  if not atoms:
    raise ConfigError("missing value", key)
  return tuple(atoms) if "," in _strip_literals(text) else atoms[0]


def _strip_literals(text):
  return LITERAL_RE.sub("", text)


def format_value(value):
  """Inverse of parse_value for values of the config dataclasses."""
  if isinstance(value, tuple):
    if not value:
      return "none"
    return ", ".join(format_value(v) for v in value)
  if value is None:
    return "none"
  if isinstance(value, bool):
    return "true" if value else "false"
  if isinstance(value, (int, float)):
    return repr(value)
  escaped = str(value).replace("\\", "\\\\").replace('"', '\\"')
  return f'"{escaped}"'


def _coerce(field, value, key):
  """Checks an atom against a dataclass field's declared type."""
  typ = field.type
  if typ is tuple:
    if value is None:
      return ()
    values = value if isinstance(value, tuple) else (value,)
    if field.default and all(type(x) is float for x in field.default):
      values = tuple(float(x) if type(x) is int else x for x in values)
    return values
  if value is None:
    if field.default is not None:
      raise ConfigError("cannot be none", key)
    return None
  if isinstance(value, tuple):
    raise ConfigError(f"expected one {typ.__name__}, got a list", key)
  if typ is bool:
    if not isinstance(value, bool):
      raise ConfigError(f"expected true or false, got {value!r}", key)
    return value
  if typ is int:
    if isinstance(value, bool) or not isinstance(value, int):
      raise ConfigError(f"expected an integer, got {value!r}", key)
    return value
  if typ is float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
      raise ConfigError(f"expected a number, got {value!r}", key)
    return float(value)
  if typ is str:
    if not isinstance(value, str):
      raise ConfigError(f"expected a word, got {value!r}", key)
    return value
  return value


def parse_text(text, source="<config>"):
  """Returns a dict of "section.field" -> parsed value."""
  out = {}
  for lineno, line in enumerate(text.splitlines(), 1):
    # A '#' inside a string literal is not a comment
    stripped = line
    for literal in LITERAL_RE.finditer(line):
      stripped = stripped.replace(literal.group(), " " * len(literal.group()))
    if "#" in stripped:
      line = line[: stripped.index("#")]
    if not line.strip():
      continue
    m = ASSIGNMENT_RE.match(line)
    if not m:
      raise ConfigError(f"{source}:{lineno}: expected section.field = value")
    key = f"{m.group(1)}.{m.group(2)}"
    if key in out:
      raise ConfigError(f"{source}:{lineno}: assigned twice", key)
    out[key] = parse_value(line[m.end() :], key)
  return out


@dataclasses.dataclass(frozen=True)
class RunConfig:
  scenario: ScenarioConfig = ScenarioConfig()
  reward: RewardWeights = RewardWeights()
  fitness: FitnessWeights = FitnessWeights()
  intent: IntentConfig = IntentConfig()
  td3: Td3Config = Td3Config()
  ga: GaConfig = GaConfig()
  harness: HarnessConfig = HarnessConfig()

  @classmethod
  def from_overrides(cls, overrides, base=None):
    """Applies "section.field" -> value overrides on top of base."""
    base = base or cls()
    grouped = {}
    for key, value in overrides.items():
      section, _, name = key.partition(".")
      if section not in SECTIONS:
        raise ConfigError("unknown section", key)
      fields = {f.name: f for f in dataclasses.fields(SECTIONS[section])}
      if name not in fields:
        raise ConfigError("unknown key", key)
      grouped.setdefault(section, {})[name] = _coerce(fields[name], value, key)
    changes = {}
    for section, values in grouped.items():
      try:
        changes[section] = dataclasses.replace(
          getattr(base, section), **values
        )
      except ConfigError as e:
        if e.key and "." not in e.key:
          raise ConfigError(e.args[0], f"{section}.{e.key}") from e
        raise
    return dataclasses.replace(base, **changes)

  @classmethod
  def load(cls, path=None, profile="quick", overrides=None):
    """Profile, then the file at path, then explicit overrides."""
    if profile not in PROFILES:
      raise ConfigError(
        f"unknown profile {profile!r}; choose {', '.join(PROFILES)}",
        "profile",
      )
    config = cls.from_overrides(PROFILES[profile])
    if path is not None:
      try:
        with open(path, encoding="utf-8") as f:
          text = f.read()
      except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e.strerror}")
      config = cls.from_overrides(parse_text(text, path), config)
    return cls.from_overrides(overrides or {}, config)

  def items(self):
    for section in SECTIONS:
      obj = getattr(self, section)
      for f in dataclasses.fields(obj):
        yield f"{section}.{f.name}", getattr(obj, f.name)

  def dump(self):
    """Canonical key = value text; parse_text(dump()) rebuilds self."""
    return "".join(f"{k} = {format_value(v)}\n" for k, v in self.items())

  def digest(self):
    return hashlib.sha256(self.dump().encode("utf-8")).hexdigest()

  def with_seed(self, seed):
    """Re-derives every seeded section from one run seed."""
    return dataclasses.replace(
      self,
      scenario=dataclasses.replace(self.scenario, rng_seed=seed),
      ga=dataclasses.replace(self.ga, rng_seed=seed),
      harness=dataclasses.replace(self.harness, seed=seed),
    )


def main(argv):
  """USAGE: config.py [file.conf] [--profile NAME]
  Prints the fully resolved configuration and its digest."""
  import argparse

  parser = argparse.ArgumentParser(description=main.__doc__)
  parser.add_argument("path", nargs="?")
  parser.add_argument("--profile", default="quick", choices=sorted(PROFILES))
  args = parser.parse_args(argv[1:])
  config = RunConfig.load(args.path, args.profile)
  sys.stdout.write(config.dump())
  print(f"# digest {config.digest()}")
  return 0


if __name__ == "__main__":
  sys.exit(main(sys.argv))
