"""Shared fixtures: a clean configuration per test and cached gallery solves."""

import pytest

from config import reload_config
from handlers.gallery import solvable_pair
from pipeline.config import PipelineConfig
from pipeline.solve import solve_direct, solve_pullback

ENV_VARS = ('JF_THREADS', 'JF_LOG_LEVEL', 'JF_DEBUG', 'JF_RUNTIME_BUDGET_S', 'JF_OUTPUT_DIR')


@pytest.fixture(autouse=True)
def fresh_config(monkeypatch):
    for name in ENV_VARS:
        monkeypatch.delenv(name, raising=False)
    reload_config()
    yield


@pytest.fixture(scope='session')
def twin_bumps_65():
    f, g = solvable_pair('twin-bumps', 65)
    return f, g


@pytest.fixture(scope='session')
def twin_bumps_solution(twin_bumps_65):
    f, g = twin_bumps_65
    phi, report = solve_pullback(f, g, PipelineConfig(grid_n=65))
    return f, g, phi, report


@pytest.fixture(scope='session')
def twin_bumps_direct(twin_bumps_65):
    f, g = twin_bumps_65
    phi, report = solve_direct(f, g, PipelineConfig(method='direct', grid_n=65))
    return f, g, phi, report
