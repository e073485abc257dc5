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

import math
import sys
from xml.sax.saxutils import escape

PALETTE = ("#1f5fa8", "#c8512d", "#3b8c3b", "#8a4fa0", "#b08a16", "#3a8f96")


class Svg:
  """Helps generate an SVG image."""

  # Coordinates are in mm and scaled up by SCALE before rounding so no
  # fractional user units end up in the file.
  SCALE = 100
  FONT_SIZE = 3.0  # mm
  FONT_FAMILY = "sans-serif"
  THICKNESS = {
    "axis": 0.25,  # mm
    "grid": 0.1,
    "series": 0.5,
  }
  PATTERNS = {
    "solid": (),
    "dash": (4, 2),
    "dot": (0.2, 2),
  }
  ANCHOR = {"left": "start", "middle": "middle", "right": "end"}

  def __init__(self, header=True, bgcolor="#ffffff"):
    """Preps an empty SVG.
    header -- include the xml/DOCTYPE header in the output
              Should be False if this SVG is to be nested
    """
    self.data = []
    self.header = header
    self.bgcolor = bgcolor
    self._bounds = None

  def _update_bounds(self, pos, margin=0.0):
    x0, y0 = pos[0] - margin, pos[1] - margin
    x1, y1 = pos[0] + margin, pos[1] + margin
    if self._bounds is None:
      self._bounds = [x0, y0, x1, y1]
    else:
      b = self._bounds
      self._bounds = [
        min(b[0], x0),
        min(b[1], y0),
        max(b[2], x1),
        max(b[3], y1),
      ]

  def add(self, line):
    """Adds one line to the SVG. Lists are combined with spaces.
    Returns self for chaining."""
    if not isinstance(line, str):
      line = " ".join(line)
    self.data.append(line)
    return self

  @staticmethod
  def attr(name, value, default=None):
    if value is None or value == default:
      return []
    if isinstance(value, float):
      value = Svg.tounit(value)
    return [f'{name}="{escape(str(value), {chr(34): "&quot;"})}"']

  def line(self, p1, p2, color="#000000", thick=None, pattern=None):
    thick = Svg.THICKNESS["axis"] if thick is None else thick
    self._update_bounds(p1, thick)
    self._update_bounds(p2, thick)
    self.add(
      ["<line"]
      + self.attr("x1", float(p1[0]))
      + self.attr("y1", float(p1[1]))
      + self.attr("x2", float(p2[0]))
      + self.attr("y2", float(p2[1]))
      + self.attr("stroke", color)
      + self.attr("stroke-width", float(thick))
      + self.attr("stroke-dasharray", Svg.pattern(pattern, thick))
      + ["/>"]
    )

  def polyline(
    self,
    xys,
    color="#000000",
    fill=None,
    thick=None,
    pattern=None,
    close=False,
    opacity=None,
  ):
    """Renders a polyline; xys is a sequence of (x, y) in mm."""
    xys = [(float(x), float(y)) for x, y in xys]
    if not xys:
      return
    thick = Svg.THICKNESS["series"] if thick is None else thick
    for pt in xys:
      self._update_bounds(pt, thick)
    d = " ".join(
      f"{'L' if i else 'M'} {Svg.tounit(x)} {Svg.tounit(y)}"
      for i, (x, y) in enumerate(xys)
    ) + (" Z" if close else "")
    self.add(
      ["<path"]
      + self.attr("d", d)
      + self.attr("fill", fill or "none")
      + self.attr("fill-opacity", None if opacity is None else str(opacity))
      + self.attr("stroke", color)
      + self.attr("stroke-width", float(thick))
      + self.attr("stroke-dasharray", Svg.pattern(pattern, thick))
      + ["/>"]
    )

  def text(self, text, pos, justify="left", size=None, rotate=0, color=None):
    size = Svg.FONT_SIZE if size is None else size
    self._update_bounds(pos, size * (1 + len(str(text)) * 0.3))
    transform = None
    if rotate:
      x, y = map(Svg.tounit, pos)
      transform = f"rotate({rotate} {x} {y})"
    self.add(
      ["<text"]
      + self.attr("x", float(pos[0]))
      + self.attr("y", float(pos[1]))
      + self.attr("text-anchor", Svg.ANCHOR[justify], "start")
      + self.attr("font-size", float(size), float(Svg.FONT_SIZE))
      + self.attr("fill", color)
      + self.attr("transform", transform)
      + [f">{Svg.escape(text)}</text>"]
    )

  @staticmethod
  def pattern(pattern, thick):
    if not pattern:
      return None
    return ",".join(
      Svg.tounit(float(thick) * c * 4) for c in Svg.PATTERNS[pattern]
    ) or None

  @staticmethod
  def escape(text):
    return escape(str(text))

  @staticmethod
  def tomm(coord):
    return f"{coord:.4f}mm"

  @staticmethod
  def tounit(mm):
    if isinstance(mm, str):
      return mm
    return str(round(mm * Svg.SCALE))

  def get_viewbox(self):
    if not self._bounds:
      return (0.0, 0.0, 1.0, 1.0)
    b = self._bounds
    return (b[0], b[1], b[2] - b[0], b[3] - b[1])

  def __repr__(self):
    """Returns a string of the SVG"""
    svg = []
    if self.header:
      svg.append('<?xml version="1.0"?>')
      svg.append(
        '<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN"'
        + ' "http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">'
      )
    viewbox = self.get_viewbox()
    svg.append(
      " ".join(
        (
          '<svg xmlns="http://www.w3.org/2000/svg"',
          f'viewBox="{",".join(map(Svg.tounit, viewbox))}"',
          f'width="{Svg.tomm(viewbox[2])}" height="{Svg.tomm(viewbox[3])}"',
          f'font-family="{Svg.FONT_FAMILY}"',
          f'font-size="{Svg.tounit(Svg.FONT_SIZE)}"',
          'stroke-linecap="round"',
          'stroke-linejoin="round"',
          f'style="background-color:{self.bgcolor}"',
        )
      )
      + ">"
    )
    svg += self.data
    svg.append("</svg>\n")
    return "\n".join(svg)


def nice_ticks(lo, hi, count=5):
  """Round tick positions covering [lo, hi]."""
  if not hi > lo:
    hi = lo + 1.0
  raw = (hi - lo) / max(count, 1)
  mag = 10 ** math.floor(math.log10(raw))
  step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
  first = math.floor(lo / step) * step
  ticks = []
  k = 0
  while first + k * step <= hi + step * 1e-9:
    ticks.append(round(first + k * step, 10))
    k += 1
  return ticks


def line_chart(
  series,
  title="",
  x_label="",
  y_label="",
  bands=None,
  size=(160.0, 90.0),
):
  """Renders named series of (x, y) points as an SVG line chart.
  bands maps a series name to (x, lo, hi) triples drawn as a shaded
  envelope behind its line. Returns the Svg."""
  bands = bands or {}
  points = [p for pts in series.values() for p in pts]
  for band in bands.values():
    points += [(x, v) for x, lo, hi in band for v in (lo, hi)]
  points = [(x, y) for x, y in points if y is not None and math.isfinite(y)]
  xs = [p[0] for p in points] or [0.0, 1.0]
  ys = [p[1] for p in points] or [0.0, 1.0]
  xticks = nice_ticks(min(xs), max(xs))
  yticks = nice_ticks(min(ys), max(ys))
  width, height = size
  x0, x1, y0, y1 = xticks[0], xticks[-1], yticks[0], yticks[-1]

  def px(x):
    return (x - x0) / ((x1 - x0) or 1.0) * width

  def py(y):
    return height - (y - y0) / ((y1 - y0) or 1.0) * height

  svg = Svg()
  for t in yticks:
    svg.line((0, py(t)), (width, py(t)), "#cccccc", Svg.THICKNESS["grid"])
    svg.text(f"{t:g}", (-2, py(t) + 1), justify="right")
  for t in xticks:
    svg.text(f"{t:g}", (px(t), height + 5), justify="middle")
  svg.line((0, height), (width, height))
  svg.line((0, 0), (0, height))
  if title:
    svg.text(title, (width / 2, -5), justify="middle")
  if x_label:
    svg.text(x_label, (width / 2, height + 11), justify="middle")
  if y_label:
    svg.text(y_label, (-14, height / 2), justify="middle", rotate=-90)
  for k, (name, pts) in enumerate(series.items()):
    color = PALETTE[k % len(PALETTE)]
    band = bands.get(name)
    if band:
      outline = [(px(x), py(hi)) for x, _, hi in band]
      outline += [(px(x), py(lo)) for x, lo, _ in reversed(band)]
      svg.polyline(outline, color="none", fill=color, close=True, opacity=0.2)
    pts = [
      (px(x), py(y)) for x, y in pts if y is not None and math.isfinite(y)
    ]
    svg.polyline(pts, color=color)
    svg.line(
      (width + 4, 4 + 6 * k), (width + 10, 4 + 6 * k), color, thick=0.5
    )
    svg.text(name, (width + 12, 5 + 6 * k))
  return svg


def main(argv):
  """USAGE: svg.py < table.csv
  Charts every column of a CSV against its first column."""
  import csv

  rows = list(csv.reader(sys.stdin))
  header, body = rows[0], rows[1:]
  series = {
    name: [(float(r[0]), float(r[k])) for r in body if r[k]]
    for k, name in enumerate(header)
    if k
  }
  sys.stdout.write(repr(line_chart(series, x_label=header[0])))
  return 0


if __name__ == "__main__":
  sys.exit(main(sys.argv))
