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

import sys


class Progress:
  """Renders a one-line progress bar with text on a terminal stream.
  A Progress with fout=None is silent, which is how quiet runs use it."""

  SPINNER = "|/-\\"

  def __init__(self, fout, width=60):
    self._max = 1
    self._val = 0
    self._text = ""
    self._width = width
    self._fout = fout
    self._spin = 0
    # Non-terminal streams only get the final message
    self._live = bool(fout) and getattr(fout, "isatty", lambda: False)()

  def msg(self, text):
    """Prints out a message line and keeps the bar below it."""
    self.clear()
    if self._fout is not None:
      print(text, file=self._fout)
    return self.write()

  def incr(self, amount=1):
    return self.set_val(self._val + amount)

  def set_val(self, val):
    self._val = min(val, self._max)
    return self

  def set_max(self, max_):
    self._max = max(max_, 1)
    self._val = min(self._val, self._max)
    return self

  def set_text(self, text):
    self._text = text
    return self

  def iterate(self, items, text=None):
    """Yields from items while advancing the bar once per item."""
    items = list(items)
    self.set_max(len(items)).set_val(0)
    if text is not None:
      self.set_text(text)
    self.write()
    try:
      for item in items:
        yield item
        self.incr().write()
    finally:
      self.clear()

  def write(self):
    """Redraws the bar and returns itself."""
    if not self._live:
      return self
    rev = "\x1b[7m"
    endrev = "\x1b[0m"
    barwidth = self._width - 1
    spin = Progress.SPINNER[self._spin % len(Progress.SPINNER)]
    self._spin += 1
    label = f"{self._text} {self._val}/{self._max}"[:barwidth]
    inner = label + "." * (barwidth - len(label))
    endpos = barwidth * max(self._val, 0) // self._max
    text = f"\r{rev}{inner[:endpos]}{endrev}{inner[endpos:]}{spin}\b"
    self._fout.write(text)
    self._fout.flush()
    return self

  def clear(self):
    """Blanks the bar line and returns itself."""
    if self._live:
      self._fout.write("\r" + " " * self._width + "\r")
      self._fout.flush()
    return self


def main(_):
  """Renders a short demo of the progress bar"""
  import time

  p = Progress(sys.stdout, width=42)
  for gen in p.iterate(range(20), "generation"):
    time.sleep(0.1)
    if gen == 10:
      p.msg("new best fitness 0.731")
  sys.stdout.write("done\n")
  return 0


if __name__ == "__main__":
  sys.exit(main(sys.argv))
