"""Shared test configuration: the q-expansion cache is isolated to a
per-session temporary directory so tests never touch (or depend on) the
user's cache."""

from __future__ import annotations

import os
import tempfile

_CACHE = tempfile.mkdtemp(prefix="modtraces-test-cache-")
os.environ["MODTRACES_CACHE"] = _CACHE
