import logging

import pytest

from twintet import fixtures
from twintet.pipeline import PipelineParams, run_pipeline

logging.getLogger("twintet").setLevel(logging.ERROR)

_RUNS = {}


def pipeline_run(name: str, seed: int = 0, **params):
    """Pipeline result for a named fixture, computed once per session."""
    key = (name, seed, tuple(sorted(params.items())))
    if key not in _RUNS:
        _RUNS[key] = run_pipeline(surface(name), PipelineParams(rng_seed=seed, **params))
    return _RUNS[key]


_SURFACES = {}


def surface(name: str):
    if name not in _SURFACES:
        _SURFACES[name] = fixtures.by_name(name)
    return _SURFACES[name]


@pytest.fixture(scope="session")
def sphere_run():
    return pipeline_run("sphere")


@pytest.fixture(scope="session")
def fused_run():
    return pipeline_run("fused-spheres")


@pytest.fixture(scope="session")
def ridges_run():
    return pipeline_run("two-ridges")
