from __future__ import annotations

import functools
import json

import pytest

from isoflats.complex_core import serialize
from isoflats.generators import generate


@functools.lru_cache(maxsize=None)
def _cached(kind, items):
    return generate(kind, **dict(items))


def make(kind, **params):
    """Generated complexes are immutable, so tests share one copy per parameter set."""
    return _cached(kind, tuple(sorted(params.items())))


@pytest.fixture
def write_complex(tmp_path):
    def _write(X, name="x.json"):
        p = tmp_path / name
        p.write_text(json.dumps(serialize(X)))
        return str(p)

    return _write


def unit_square_doc(length=1.0):
    return {
        "vertices": ["a", "b", "c", "d"],
        "edges": [
            {"id": "ab", "v0": "a", "v1": "b", "length": length},
            {"id": "bc", "v0": "b", "v1": "c", "length": 1.0},
            {"id": "cd", "v0": "c", "v1": "d", "length": 1.0},
            {"id": "da", "v0": "d", "v1": "a", "length": 1.0},
        ],
        "cells": [{"id": "s", "corners": ["a", "b", "c", "d"], "coords": [[0, 0], [1, 0], [1, 1], [0, 1]],
                   "sides": ["ab", "bc", "cd", "da"]}],
    }
