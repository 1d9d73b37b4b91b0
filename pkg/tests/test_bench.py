import numpy as np
import pytest

from skelkern.bench import bench_sequences, fit_exponent, run_bench, time_paths
from skelkern.dck import DckParams, dck_exact
from skelkern.sck import SckParams, sck_exact


def test_fit_exponent():
    n = np.array([8, 16, 32])
    assert fit_exponent(n, 3e-5 * n ** 4.0) == pytest.approx(4.0)
    assert fit_exponent(n, 0.2 * n ** 1.0) == pytest.approx(1.0)


def test_bench_sequences_stages():
    sck, dck = bench_sequences(3, 5, 4)
    assert len(sck) == len(dck) == 3
    assert all(s.frames.shape == (5, 4, 3) for s in sck + dck)
    assert sck[0].stage == "centered" and dck[0].stage == "raw"


def test_exact_grams_match_kernels():
    sck, dck = bench_sequences(3, 4, 3)
    sp, dp = SckParams(), DckParams(pair_mode="strict")
    _, grams = time_paths(sck, dck, sp, dp, ("sck_exact", "dck_exact"))
    assert grams["sck_exact"][0, 2] == pytest.approx(sck_exact(sck[0], sck[2], sp), rel=1e-12)
    assert grams["dck_exact"][1, 2] == pytest.approx(dck_exact(dck[1], dck[2], params=dp),
                                                     rel=1e-12)


def test_doubling_t_doubles_rows():
    a = run_bench(t=2, sizes=(4,), j=3, reps=1, paths=("sck_linear", "dck_linear"))
    b = run_bench(t=4, sizes=(4,), j=3, reps=1, paths=("sck_linear", "dck_linear"))
    for p in ("sck_linear", "dck_linear"):
        assert b.gram_rows[p][0] == 2 * a.gram_rows[p][0]


def test_result_table():
    r = run_bench(t=2, sizes=(4, 5), j=3, reps=1)
    assert set(r.exponents) == {"sck_exact", "sck_linear", "dck_exact", "dck_linear"}
    assert set(r.speedup) == {"sck", "dck"}
    assert "exponent" in r.table() and r.to_dict()["N"] == [4, 5]
