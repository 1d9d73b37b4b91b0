"""Glue between datasets, descriptors and the classifier.

Everything here is deterministic given the configuration: extraction
results do not depend on the worker count and descriptors are assembled in
dataset order.
"""

import csv
import itertools
import os
import re
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import classifier
from .datasets import (
    SplitSpec, cross_subject_split, load_native, msr_subsets, read_subsets, synth_actions,
    validation_split,
)
from .dck import DckParams, dck_descriptor, dck_size
from .errors import ConfigError, InvalidArgument, ParseError
from .preprocess import JointSubset, Preprocessor, builtin_topology, named_subset, read_topology
from .sck import SckParams, sck_descriptor, sck_size
from .serialize import read_descriptor, write_descriptor

__all__ = [
    "sck_params",
    "dck_params",
    "joint_subset",
    "load_dataset",
    "load_topology",
    "split_spec",
    "fit_preprocessor",
    "extract",
    "features",
    "descriptor_sizes",
    "train_eval",
    "gridsearch",
    "run_extract",
    "read_extracted",
]

KINDS = ("sck", "dck", "both")


def sck_params(cfg):
    return SckParams(
        sigma2=cfg.sck_sigma2, sigma3=cfg.sck_sigma3, z2=cfg.sck_z2, z3=cfg.sck_z3,
        beta1=cfg.sck_beta1, beta2=1.0 - cfg.sck_beta1, gamma=cfg.sck_gamma,
        normalizer=cfg.sck_normalizer)


def dck_params(cfg):
    return DckParams(
        sigma2=cfg.dck_sigma2, sigma3=cfg.dck_sigma3, sigma4=cfg.dck_sigma4, z2=cfg.dck_z2,
        z3=cfg.dck_z3, gamma=cfg.dck_gamma, gamma_star=cfg.dck_gamma_star,
        pair_mode=cfg.dck_pair_mode, normalizer=cfg.dck_normalizer)


def joint_subset(spec):
    """``""`` (all joints), a letter A..I, or comma-separated joint ids."""
    spec = spec.strip()
    if not spec:
        return None
    if "," in spec or spec.isdigit():
        try:
            return JointSubset("custom", tuple(int(x) for x in spec.split(",") if x.strip()))
        except ValueError:
            raise ConfigError(f"bad joint subset {spec!r}") from None
    return named_subset(spec)


def load_dataset(cfg):
    """``dataset = synth`` generates data from the ``synth_*`` keys."""
    if cfg.dataset == "synth":
        return synth_actions(cfg.synth_k, cfg.synth_per_class, cfg.synth_j, cfg.synth_m,
                             cfg.synth_noise, cfg.seed, cfg.synth_subjects, cfg.synth_bursts)
    if not cfg.dataset:
        raise ConfigError("no dataset configured")
    return load_native(cfg.dataset, cfg.format)


def load_topology(name):
    if not name:
        return None
    if Path(name).is_file():
        return read_topology(name)
    return builtin_topology(name)


def split_spec(cfg):
    subsets = None
    if cfg.split == "subset-average":
        subsets = msr_subsets() if cfg.subsets == "msr" else read_subsets(cfg.subsets)
    return SplitSpec(cfg.split, cfg.train_subjects or None, cfg.test_subjects or None, subsets)


def fit_preprocessor(cfg, train):
    return Preprocessor.fit(train.sequences, cfg.hip, load_topology(cfg.topology),
                            cfg.normalize_limbs)


def _extract_one(args):
    seq, prep, kind, sp, dp, subset = args
    out = {}
    if kind in ("sck", "both"):
        out["sck"] = sck_descriptor(prep.for_sck(seq), sp)
    if kind in ("dck", "both"):
        out["dck"] = dck_descriptor(prep.for_dck(seq), subset, dp)
    return out


def extract(sequences, prep, kind, sp=None, dp=None, subset=None, workers=1):
    """Descriptors of every sequence as a list of ``{kind: descriptor}`` dicts."""
    if kind not in KINDS:
        raise InvalidArgument(f"kind must be one of {KINDS}")
    sp, dp = sp or SckParams(), dp or DckParams()
    jobs = [(s, prep, kind, sp, dp, subset) for s in sequences]
    if workers <= 1 or len(jobs) < 2:
        return [_extract_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_extract_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def features(descs, kind):
    """Feature matrix; each descriptor is L2-normalized, ``both`` uses :func:`combine`."""
    if kind == "both":
        return np.stack([classifier.combine(d["sck"], d["dck"]) for d in descs])
    return classifier.l2_normalize(np.stack([d[kind].vector for d in descs]))


def descriptor_sizes(kind, j, sp, dp, subset=None):
    sizes = {}
    if kind in ("sck", "both"):
        sizes["sck"] = sck_size(j, sp.z2, sp.z3)
    if kind in ("dck", "both"):
        jd = len(subset.ids) if subset is not None else j
        sizes["dck"] = dck_size(jd, dp.z2, dp.z3, dp.pair_mode)
    sizes["total"] = sum(sizes.values())
    return sizes


def _select_and_fit(x, y, subjects, grid, tol):
    """Pick C on a subject-disjoint validation half, then refit on everything."""
    uniq = sorted(set(subjects))
    timings = {}
    scores = {}
    c = grid[0]
    if len(grid) > 1:
        fit_s = set(uniq[0::2])
        fit = np.array([s in fit_s for s in subjects])
        if fit.all() or not fit.any() or len(set(y[fit])) < 2:
            raise InvalidArgument("validation split leaves a side without two classes")
        t0 = time.perf_counter()
        c, scores = classifier.select_c(x[fit], y[fit], x[~fit], y[~fit], grid, tol)
        timings["select_s"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    model = classifier.train(x, y, c, tol)
    timings["train_s"] = time.perf_counter() - t0
    return model, scores, timings


def _run_split(cfg, train, test, descs_train=None, descs_test=None):
    kind = cfg.kind
    sp, dp, subset = sck_params(cfg), dck_params(cfg), joint_subset(cfg.joint_subset)
    timings = {}
    prep = None
    if descs_train is None:
        t0 = time.perf_counter()
        prep = fit_preprocessor(cfg, train)
        descs_train = extract(train.sequences, prep, kind, sp, dp, subset, cfg.workers)
        descs_test = extract(test.sequences, prep, kind, sp, dp, subset, cfg.workers)
        timings["extract_s"] = time.perf_counter() - t0
    x_tr, x_te = features(descs_train, kind), features(descs_test, kind)
    y_tr = np.array([s.label for s in train.sequences])
    y_te = np.array([s.label for s in test.sequences])
    model, scores, t = _select_and_fit(
        x_tr, y_tr, [s.subject for s in train.sequences], cfg.c_grid, cfg.tol)
    model.kind = kind
    if prep is not None:
        model.meta["preprocessor"] = prep.to_dict()
    timings.update(t)
    report = classifier.evaluate(model, x_te, y_te, timings)
    report.extra.update({
        "kind": kind,
        "C": model.C,
        "validation_scores": {str(k): v for k, v in scores.items()},
        "sizes": descriptor_sizes(kind, train.joint_count, sp, dp, subset),
        "feature_length": int(x_tr.shape[1]),
        "n_train": len(train),
        "n_test": len(test),
    })
    return report, model


def train_eval(cfg, dataset=None, descriptors=None, return_model=False):
    """Full protocol; returns an :class:`~skelkern.classifier.EvalReport`.

    ``descriptors`` maps ``seq_id`` to ``{kind: descriptor}`` and skips
    extraction (the preprocessor is then whatever produced them).
    With ``return_model`` the result is ``(report, model)``; the model is
    ``None`` under the subset-average protocol, which trains one per subset.
    """
    ds = dataset if dataset is not None else load_dataset(cfg)
    spec = split_spec(cfg)

    def run(sub):
        train, test = cross_subject_split(sub, spec)
        if not len(train) or not len(test):
            raise InvalidArgument("cross-subject split leaves an empty side")
        if descriptors is None:
            return _run_split(cfg, train, test)
        try:
            dtr = [descriptors[s.seq_id] for s in train.sequences]
            dte = [descriptors[s.seq_id] for s in test.sequences]
        except KeyError as exc:
            raise ParseError(f"no descriptor for sequence {exc.args[0]}") from None
        return _run_split(cfg, train, test, dtr, dte)

    if spec.kind == "cross-subject":
        report, model = run(ds)
        report.extra["protocol"] = "cross-subject"
        return (report, model) if return_model else report

    reports = {}
    for name, ids in spec.subsets.items():
        keep = set(ids)
        sub = ds.subset([s for s in ds.sequences if s.label in keep], f"{ds.name}-{name}")
        reports[name], _ = run(sub)
    mean = float(np.mean([r.accuracy for r in reports.values()]))
    first = next(iter(reports.values()))
    out = classifier.EvalReport(
        mean, first.classes, first.confusion, first.per_class,
        {k: sum(r.timings.get(k, 0.0) for r in reports.values()) for k in first.timings},
        dict(first.extra))
    out.extra["protocol"] = "subset-average"
    out.extra["subsets"] = {k: r.to_dict() for k, r in reports.items()}
    return (out, None) if return_model else out


_GRID_KEYS = {
    "grid_sck_gamma": "sck_gamma",
    "grid_sck_sigma2": "sck_sigma2",
    "grid_sck_sigma3": "sck_sigma3",
    "grid_sck_z2": "sck_z2",
    "grid_sck_z3": "sck_z3",
    "grid_dck_gamma": "dck_gamma",
    "grid_dck_sigma2": "dck_sigma2",
    "grid_dck_sigma3": "dck_sigma3",
    "grid_joint_subset": "joint_subset",
}


def gridsearch(cfg, dataset=None):
    """Cartesian sweep over the non-empty ``grid_*`` keys.

    Each cell is scored on the validation half of the training subjects
    (best accuracy over ``c_grid``), then retrained on all training data
    and evaluated on the test split. Returns ``(axes, rows)``; each row is a
    dict with the cell values, ``val_accuracy``, ``C``, ``test_accuracy``
    and ``best`` (exactly one row is flagged).
    """
    axes = {_GRID_KEYS[k]: cfg.values[k] for k in _GRID_KEYS if cfg.values[k]}
    if not axes:
        raise InvalidArgument("empty grid: set at least one grid_* key")
    ds = dataset if dataset is not None else load_dataset(cfg)
    train, test = cross_subject_split(ds, split_spec(cfg))
    fit, val = validation_split(train)
    rows = []
    for combo in itertools.product(*axes.values()):
        cell = dict(zip(axes, combo))
        ccfg = cfg.updated(**cell)
        sp, dp, subset = sck_params(ccfg), dck_params(ccfg), joint_subset(ccfg.joint_subset)
        prep = fit_preprocessor(ccfg, fit)
        dfit = extract(fit.sequences, prep, ccfg.kind, sp, dp, subset, ccfg.workers)
        dval = extract(val.sequences, prep, ccfg.kind, sp, dp, subset, ccfg.workers)
        c, scores = classifier.select_c(
            features(dfit, ccfg.kind), fit.labels, features(dval, ccfg.kind), val.labels,
            ccfg.c_grid, ccfg.tol)
        report, _ = _run_split(ccfg.updated(c_grid=(c,)), train, test)
        rows.append({**cell, "val_accuracy": scores[float(c)], "C": c,
                     "test_accuracy": report.accuracy, "best": False})
    best = max(range(len(rows)), key=lambda n: (rows[n]["val_accuracy"], -n))
    rows[best]["best"] = True
    return list(axes), rows


def _safe(name):
    return re.sub(r"[^A-Za-z0-9_.-]", "_", name) or "seq"


def run_extract(cfg, out_dir, dataset=None):
    """Write one descriptor file per sequence and kind plus ``manifest.csv``.

    The manifest is written last, through a temporary file, so a failed run
    never leaves one behind. Returns the manifest path.
    """
    ds = dataset if dataset is not None else load_dataset(cfg)
    train, _ = cross_subject_split(ds, split_spec(cfg))
    prep = fit_preprocessor(cfg, train)
    sp, dp, subset = sck_params(cfg), dck_params(cfg), joint_subset(cfg.joint_subset)
    descs = extract(ds.sequences, prep, cfg.kind, sp, dp, subset, cfg.workers)
    out_dir = Path(out_dir)
    ddir = out_dir / "descriptors"
    ddir.mkdir(parents=True, exist_ok=True)
    rows = []
    for n, (seq, d) in enumerate(zip(ds.sequences, descs)):
        for kind in sorted(d):
            name = f"{n:05d}_{_safe(seq.seq_id)}.{kind}.skd"
            write_descriptor(ddir / name, d[kind])
            rows.append([f"descriptors/{name}", seq.seq_id, seq.label, seq.subject, kind,
                         d[kind].vector.size])
    fd, tmp = tempfile.mkstemp(dir=out_dir, suffix=".tmp")
    with os.fdopen(fd, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["file", "seq_id", "label", "subject", "kind", "length"])
        w.writerows(rows)
    final = out_dir / "manifest.csv"
    os.replace(tmp, final)
    return final


def read_extracted(manifest):
    """Load a manifest written by :func:`run_extract` as ``seq_id -> {kind: desc}``."""
    manifest = Path(manifest)
    out = {}
    try:
        with open(manifest, newline="") as fh:
            for row in csv.DictReader(fh):
                d = read_descriptor(manifest.parent / row["file"])
                out.setdefault(row["seq_id"], {})[row["kind"]] = d
    except (OSError, KeyError) as exc:
        raise ParseError(f"cannot read extracted descriptors: {exc}", manifest) from None
    return out
