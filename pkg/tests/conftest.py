import functools

import numpy as np
import pytest

from lochom.space import SampledFunction, instantiate_builtin

ACCEPTANCE_LINES = {}


@functools.lru_cache(maxsize=None)
def builtin(name: str, **params):
    return instantiate_builtin(name, params)


def func(values) -> SampledFunction:
    return SampledFunction(np.asarray(values, dtype=float))


@pytest.fixture
def tiny4():
    return builtin("tiny4")


@pytest.fixture
def grid256():
    return builtin("grid1d", N=256)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
