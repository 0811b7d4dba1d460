"""Calibrated stand-ins for the absolute constants the estimates leave implicit.

Every asserted inequality in this package has the shape
``measured <= C * formula`` (or a two-sided window).  The constants C are
not derivable from theory; they are measured once by ``restriction-lab
calibrate``, margined, committed to ``data/fixtures.json``, and treated as
regression fixtures afterwards: a later run exceeding its fixture fails.

Resolution order for the fixture file: explicit path argument, then the
RESTRICTION_LAB_FIXTURES environment variable, then the packaged defaults.
"""

from __future__ import annotations

import hashlib
import json
import os
from importlib import resources

ENV_VAR = "RESTRICTION_LAB_FIXTURES"


class FixtureError(KeyError):
    pass


def _packaged_path():
    return resources.files("restriction_lab").joinpath("data/fixtures.json")


def load_fixtures(path=None):
    """Load the fixture dictionary (see module docstring for resolution order)."""
    if path is None:
        path = os.environ.get(ENV_VAR)
    if path is None:
        text = _packaged_path().read_text(encoding="utf-8")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return json.loads(text)


def fixture_hash(fixtures):
    """Stable hash of a fixture dictionary, embedded in every report."""
    canon = json.dumps(fixtures, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def get(fixtures, key):
    cur = fixtures
    for part in key.split("."):
        if not isinstance(cur, dict) or part not in cur:
            raise FixtureError(f"missing fixture {key!r}")
        cur = cur[part]
    return cur


def save_fixtures(fixtures, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(fixtures, fh, indent=2, sort_keys=True)
        fh.write("\n")
