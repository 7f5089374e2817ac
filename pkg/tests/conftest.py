"""Shared fixture runs and the acceptance summary printed at the end of the session."""

import time

import numpy as np
import pytest

from compdamage import run
from compdamage.fixtures import bridge_config, notched_square_config

ACCEPTANCE = {}


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (ok, detail)
    print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


class TimedRun:
    def __init__(self, cfg):
        self.cfg = cfg
        t0 = time.perf_counter()
        self.result = run(cfg, write=False)
        self.seconds = time.perf_counter() - t0


@pytest.fixture(scope="session")
def notched_run():
    return TimedRun(notched_square_config())


@pytest.fixture(scope="session")
def bridge_run():
    return TimedRun(bridge_config())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
