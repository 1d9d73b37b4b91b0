"""Wall-clock comparison of exact kernels against linearized descriptors.

For each frame count ``N`` a set of ``T`` synthetic sequences is built and
four Gram matrices are timed: exact SCK, exact DCK (strict pairs, the only
form with an exact counterpart), and the two linearized paths (descriptor
extraction plus ``X @ X.T``). Timings are medians over repetitions and the
scaling in ``N`` is summarized by a least-squares slope in log-log space.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .datasets import synth_actions
from .dck import DckParams, dck_descriptor, dck_exact, make_dck_grids
from .preprocess import Preprocessor
from .sck import SckParams, make_sck_grids, sck_descriptor, sck_exact_gram

__all__ = ["BenchResult", "bench_sequences", "time_paths", "fit_exponent", "run_bench"]

PATHS = ("sck_exact", "sck_linear", "dck_exact", "dck_linear")


@dataclass
class BenchResult:
    t: int
    j: int
    reps: int
    sizes: list
    medians: dict  # path -> list of seconds, one per N
    exponents: dict = field(default_factory=dict)
    speedup: dict = field(default_factory=dict)  # kernel -> list of exact/linear ratios
    gram_rows: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "T": self.t, "J": self.j, "reps": self.reps, "N": list(self.sizes),
            "median_s": self.medians, "exponent": self.exponents,
            "speedup": self.speedup, "gram_rows": self.gram_rows,
        }

    def table(self):
        head = f"{'N':>5} " + " ".join(f"{p:>12}" for p in self.medians)
        head += " " + " ".join(f"{'x' + k:>10}" for k in self.speedup)
        lines = [head]
        for n, size in enumerate(self.sizes):
            row = f"{size:>5} " + " ".join(f"{self.medians[p][n]:>12.3e}" for p in self.medians)
            row += " " + " ".join(f"{self.speedup[k][n]:>10.1f}" for k in self.speedup)
            lines.append(row)
        lines.append("exponent " + " ".join(f"{p}={e:.2f}" for p, e in self.exponents.items()))
        return "\n".join(lines)


def bench_sequences(t, n, j, seed=0):
    """``T`` prepared sequences: hip-centred for SCK, raw for DCK, both rescaled."""
    ds = synth_actions(1, t, j, n, noise=0.05, seed=seed)
    prep = Preprocessor.fit(ds.sequences, hip_id=1, normalize=False)
    return [prep.for_sck(s) for s in ds.sequences], [prep.for_dck(s) for s in ds.sequences]


def _exact_gram(seqs, fn):
    t = len(seqs)
    k = np.empty((t, t))
    for a in range(t):
        for b in range(a, t):
            k[a, b] = k[b, a] = fn(seqs[a], seqs[b])
    return k


def _linear_gram(seqs, fn):
    x = np.stack([fn(s).vector for s in seqs])
    return x @ x.T


def time_paths(sck_seqs, dck_seqs, sp, dp, paths=PATHS):
    """One timing (seconds) per requested path, plus the Gram matrices."""
    sg, dg = make_sck_grids(sp), make_dck_grids(dp)
    jobs = {
        "sck_exact": lambda: sck_exact_gram(sck_seqs, sp),
        "sck_linear": lambda: _linear_gram(sck_seqs, lambda s: sck_descriptor(s, sp, sg)),
        "dck_exact": lambda: _exact_gram(dck_seqs, lambda a, b: dck_exact(a, b, params=dp)),
        "dck_linear": lambda: _linear_gram(dck_seqs, lambda s: dck_descriptor(s, None, dp, dg)),
    }
    times, grams = {}, {}
    for p in paths:
        t0 = time.perf_counter()
        grams[p] = jobs[p]()
        times[p] = time.perf_counter() - t0
    return times, grams


def fit_exponent(sizes, seconds):
    """Slope of ``log(seconds)`` against ``log(sizes)``."""
    return float(np.polyfit(np.log(sizes), np.log(seconds), 1)[0])


def run_bench(t=10, sizes=(8, 16, 32), j=4, reps=5, seed=0, paths=PATHS, sp=None, dp=None):
    """Median timings over ``reps`` runs for every ``N`` in ``sizes``.

    The linearized paths run with EPN, as in real use. DCK uses strict
    pairs so exact and linearized paths compute the same kernel.
    """
    sp = sp or SckParams()
    dp = replace(dp or DckParams(), pair_mode="strict")
    medians = {p: [] for p in paths}
    rows = {p: [] for p in paths}
    for n in sizes:
        sck_seqs, dck_seqs = bench_sequences(t, n, j, seed)
        runs = {p: [] for p in paths}
        for _ in range(reps):
            times, grams = time_paths(sck_seqs, dck_seqs, sp, dp, paths)
            for p in paths:
                runs[p].append(times[p])
        for p in paths:
            medians[p].append(float(np.median(runs[p])))
            rows[p].append(int(grams[p].shape[0]))
    result = BenchResult(t, j, reps, list(sizes), medians, gram_rows=rows)
    if len(sizes) > 1:
        result.exponents = {p: fit_exponent(sizes, medians[p]) for p in paths}
    for k in ("sck", "dck"):
        if f"{k}_exact" in medians and f"{k}_linear" in medians:
            result.speedup[k] = [e / max(l, 1e-12) for e, l in
                                 zip(medians[f"{k}_exact"], medians[f"{k}_linear"])]
    return result
