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
Code-version lookup recorded in run manifests.
"""

import os
import subprocess
import sys


def package_version():
  """Version stamped into rowdrive/_version.py at build time, if any."""
  try:
    from ._version import __version__
  except ImportError:
    return None
  return __version__


def describe(repo=None):
  """Returns `git describe` for repo, or None outside a work tree."""
  try:
    ret = subprocess.run(
      ["git", "describe", "--all", "--always", "--long", "--dirty"],
      cwd=repo or os.path.dirname(os.path.abspath(__file__)),
      capture_output=True,
      text=True,
    )
  except OSError:
    return None
  if ret.returncode != 0:
    return None
  ver = ret.stdout.strip()
  if ver.startswith("remotes/"):
    ver = ver[8:].partition("/")[2]
  return ver.replace("heads/", "").replace("tags/", "")


def get_version(repo=None):
  """Returns a friendly string of the running code's version.
  Prefers the checkout's git description so dirty trees are visible."""
  return describe(repo) or package_version() or "unknown"


def main(argv):
  """USAGE: git.py [repo]"""
  print(get_version(argv[1] if len(argv) > 1 else None))
  return 0


if __name__ == "__main__":
  sys.exit(main(sys.argv))
