"""City activity analytics over aggregated mobile network data."""

import json
import os

from ._core import (
    ApiService,
    ArgumentError,
    Grid,
    ValidationError,
    activity_types,
    adjusted_rand_index,
    kmeans,
    label_cluster,
)
from . import _core

__version__ = _core.__version__

__all__ = [
    "ApiService",
    "ArgumentError",
    "Grid",
    "ValidationError",
    "activity_types",
    "adjusted_rand_index",
    "build_store",
    "compute",
    "default_scenario",
    "ingest",
    "kmeans",
    "label_cluster",
    "synth",
]


def default_scenario():
    return json.loads(_core.default_scenario_json())


def synth(out, spec=None, shards=1):
    """Write a synthetic city to `out`; returns the ground truth."""
    spec_json = None if spec is None else json.dumps(spec)
    return json.loads(_core.write_scenario(spec_json, os.fspath(out), shards))


def ingest(data_dir, out=None, city=None):
    """Validate (and with `out`, persist) a city's ingest files."""
    out = None if out is None else os.fspath(out)
    city = None if city is None else os.fspath(city)
    return json.loads(_core.ingest(os.fspath(data_dir), out, city))


def compute(store_root, city=None, k=5, types=None, exclude_weeks=(), seed=42):
    types = ",".join(types) if types else ",".join(activity_types())
    return _core.compute(os.fspath(store_root), city, k, types, list(exclude_weeks), seed)


def build_store(data_dir, out, k=5, types=None, exclude_weeks=(), seed=42):
    types = ",".join(types) if types else ",".join(activity_types())
    return _core.build_store(os.fspath(data_dir), os.fspath(out), k, types, list(exclude_weeks), seed)
