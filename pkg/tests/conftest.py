import time

import numpy as np
import pytest

from skelkern.preprocess import CENTERED, RAW, Sequence


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def rand_seq(rng, m, j, lo=-1.0, hi=1.0, stage=RAW, **kw):
    return Sequence(rng.uniform(lo, hi, (m, j, 3)), stage=stage, **kw)


def centred_seq(rng, m, j, lo=-1.0, hi=1.0, **kw):
    return rand_seq(rng, m, j, lo, hi, stage=CENTERED, **kw)


VERDICTS = {}


@pytest.fixture
def verdict(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert."""
    t0 = time.perf_counter()

    def check(n, ok, detail):
        line = (f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}  "
                f"[{time.perf_counter() - t0:.1f}s]")
        VERDICTS[n] = line
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
