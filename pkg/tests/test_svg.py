# SPDX-FileCopyrightText: (C) 2026 rowdrive contributors
# SPDX-License-Identifier: Apache-2.0

import xml.etree.ElementTree as ET

import pytest

from rowdrive.svg import Svg, line_chart, nice_ticks

NS = "{http://www.w3.org/2000/svg}"


def test_nice_ticks():
  assert nice_ticks(0.0, 1.0) == pytest.approx([0, 0.2, 0.4, 0.6, 0.8, 1.0])
  assert nice_ticks(0.0, 100.0) == [0, 20, 40, 60, 80, 100]
  flat = nice_ticks(3.0, 3.0)
  assert flat[0] <= 3.0 and flat[-1] >= 4.0


def test_line_chart_is_well_formed():
  series = {
    "Full": [(0, 0.1), (1, 0.5), (2, 0.9)],
    "NoEvolution": [(0, 0.0), (1, None), (2, 0.4)],
  }
  bands = {"Full": [(0, 0.0, 0.2), (1, 0.4, 0.6), (2, 0.8, 1.0)]}
  svg = line_chart(series, "reward <normalized>", "episode", "r", bands)
  root = ET.fromstring(repr(svg))
  assert root.tag == f"{NS}svg"
  texts = [t.text for t in root.iter(f"{NS}text")]
  assert "reward <normalized>" in texts
  assert {"Full", "NoEvolution"} <= set(texts)
  paths = list(root.iter(f"{NS}path"))
  # Two series lines plus one shaded band
  assert len(paths) == 3
  assert sum(p.get("fill-opacity") == "0.2" for p in paths) == 1


def test_empty_chart():
  root = ET.fromstring(repr(line_chart({})))
  assert root.tag == f"{NS}svg"


def test_units_are_integral():
  svg = Svg(header=False)
  svg.line((0.123, 0.0), (1.0, 2.5))
  text = repr(svg)
  assert 'x1="12"' in text and 'y2="250"' in text
  assert not text.startswith("<?xml")
