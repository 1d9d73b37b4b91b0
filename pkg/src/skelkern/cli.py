"""Command line entry point: ``skelkern VERB [options]``.

Exit status: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

from . import pipeline
from .bench import run_bench
from .config import DOCS, ConfigError, RunConfig, parse_config, read_config
from .datasets import write_manifest, write_skt1
from .errors import DegenerateSegment, InvalidArgument, NumericalFailure, ParseError
from .serialize import describe, descriptor_to_text, read_descriptor, save_model

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--kind", choices=pipeline.KINDS)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")


def build_parser():
    p = _Parser(prog="skelkern", description="Skeleton sequence kernels and descriptors.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    for verb, text in [
        ("extract", "write descriptor files and a manifest"),
        ("train-eval", "split, select C, train and evaluate"),
        ("gridsearch", "sweep grid_* keys on the validation split"),
        ("bench", "time exact against linearized kernels"),
        ("synth", "write a synthetic dataset as skt1 files"),
    ]:
        _common(sub.add_parser(verb, help=text))
    ins = sub.add_parser("inspect", help="print a descriptor header")
    ins.add_argument("path")
    ins.add_argument("--text", action="store_true", help="dump the full text form")
    sub.add_parser("config", help="print every config key with its default")
    return p


def _load_config(args):
    cfg = read_config(args.config) if args.config else RunConfig()
    if args.set:
        over = parse_config("\n".join(args.set), "--set")
        keys = {s.partition("=")[0].strip() for s in args.set}
        cfg = cfg.updated(**{k: over.values[k] for k in keys})
    changes = {k: getattr(args, k) for k in ("out", "seed", "workers", "kind")
               if getattr(args, k) is not None}
    return cfg.updated(**changes) if changes else cfg


def _out_dir(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_extract(cfg):
    manifest = pipeline.run_extract(cfg, cfg.out)
    print(f"wrote {manifest}")


def cmd_train_eval(cfg):
    descs = pipeline.read_extracted(cfg.descriptors) if cfg.descriptors else None
    ds = pipeline.load_dataset(cfg)
    report, model = pipeline.train_eval(cfg, ds, descs, return_model=True)
    out = _out_dir(cfg)
    if model is not None:
        save_model(out / "model.npz", model)
    (out / "report.json").write_text(report.to_json() + "\n")
    (out / "confusion.txt").write_text(report.confusion_table() + "\n")
    print(report.confusion_table())
    print(f"sizes {report.extra['sizes']}")


def cmd_gridsearch(cfg):
    axes, rows = pipeline.gridsearch(cfg)
    out = _out_dir(cfg)
    cols = axes + ["val_accuracy", "C", "test_accuracy", "best"]
    with open(out / "gridsearch.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(rows)
    for r in rows:
        cells = " ".join(f"{k}={r[k]}" for k in axes)
        flag = "  *" if r["best"] else ""
        print(f"{cells}  val={r['val_accuracy']:.4f} C={r['C']:g} "
              f"test={r['test_accuracy']:.4f}{flag}")


def cmd_bench(cfg):
    res = run_bench(cfg.bench_t, cfg.bench_n, cfg.bench_j, cfg.bench_reps, cfg.seed)
    out = _out_dir(cfg)
    (out / "bench.json").write_text(json.dumps(res.to_dict(), indent=2) + "\n")
    print(res.table())


def cmd_synth(cfg):
    ds = pipeline.load_dataset(cfg.updated(dataset="synth"))
    out = _out_dir(cfg)
    (out / "sequences").mkdir(exist_ok=True)
    rows = []
    for s in ds.sequences:
        rel = f"sequences/{s.seq_id}.skt1"
        write_skt1(out / rel, [s])
        rows.append([rel, s.label, s.subject])
    write_manifest(out / "manifest.csv", rows)
    print(f"wrote {len(rows)} sequences to {out}")


def cmd_inspect(args):
    d = read_descriptor(args.path)
    print(descriptor_to_text(d) if args.text else describe(d), end="" if args.text else "\n")


def cmd_config():
    cfg = RunConfig()
    for line, key in zip(cfg.to_text().splitlines(), DOCS):
        print(f"{line:<45} # {DOCS[key]}")


_VERBS = {
    "extract": cmd_extract,
    "train-eval": cmd_train_eval,
    "gridsearch": cmd_gridsearch,
    "bench": cmd_bench,
    "synth": cmd_synth,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "inspect":
            cmd_inspect(args)
        elif args.verb == "config":
            cmd_config()
        else:
            _VERBS[args.verb](_load_config(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParseError, DegenerateSegment, InvalidArgument, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
