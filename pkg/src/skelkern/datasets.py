"""Loading skeleton datasets, evaluation splits and synthetic actions.

Native ``skt1`` format, one or more records per file::

    SKT1 J M label subject
    x1 y1 z1 x2 y2 z2 ... xJ yJ zJ      # M lines, one per frame

``msr-txt`` is the MSR-Action3D screen+depth layout: 20 lines of
``u v d confidence`` per frame, label and subject taken from the
``aXX_sYY_eZZ`` file name.  A CSV manifest (``path,label,subject``) lists
sequence files for either format.
"""

import csv
import hashlib
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvalidArgument, ParseError
from .preprocess import Sequence

__all__ = [
    "Dataset",
    "SplitSpec",
    "load_native",
    "read_skt1",
    "write_skt1",
    "read_msr_txt",
    "read_manifest",
    "write_manifest",
    "cross_subject_split",
    "validation_split",
    "read_subsets",
    "msr_subsets",
    "synth_actions",
]

FORMATS = ("skt1", "msr-txt")
MSR_JOINTS = 20
_MSR_NAME = re.compile(r"a(\d+)_s(\d+)_e(\d+)")


@dataclass(eq=False)
class Dataset:
    sequences: list
    class_names: list = field(default_factory=list)
    joint_count: int = 0
    name: str = ""

    def __post_init__(self):
        if self.sequences:
            js = {s.joint_count for s in self.sequences}
            if len(js) != 1:
                raise InvalidArgument(f"sequences disagree on joint count: {sorted(js)}")
            self.joint_count = js.pop()
            if min(s.label for s in self.sequences) < 1:
                raise InvalidArgument("labels must be >= 1")
        if not self.class_names:
            k = max((s.label for s in self.sequences), default=0)
            self.class_names = [f"class{c}" for c in range(1, k + 1)]

    def __len__(self):
        return len(self.sequences)

    @property
    def labels(self):
        return np.array([s.label for s in self.sequences])

    @property
    def subjects(self):
        return sorted({s.subject for s in self.sequences})

    def subset(self, sequences, name=None):
        return Dataset(list(sequences), list(self.class_names), self.joint_count,
                       name or self.name)


# -- skt1 ---------------------------------------------------------------------

def _parse_floats(parts, path, lineno):
    try:
        vals = np.array([float(p) for p in parts])
    except ValueError:
        raise ParseError("non-numeric value", path, lineno) from None
    if not np.all(np.isfinite(vals)):
        raise ParseError("non-finite value", path, lineno)
    return vals


def read_skt1(path):
    """Read every record of an skt1 file."""
    path = Path(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    out = []
    n = 0
    while n < len(lines):
        if not lines[n].strip():
            n += 1
            continue
        head = lines[n].split()
        if len(head) != 5 or head[0] != "SKT1":
            raise ParseError("expected header 'SKT1 J M label subject'", path, n + 1)
        try:
            j, m, label, subject = (int(x) for x in head[1:])
        except ValueError:
            raise ParseError("header fields must be integers", path, n + 1) from None
        if j < 1 or m < 1:
            raise ParseError("J and M must be positive", path, n + 1)
        frames = np.empty((m, j, 3))
        for f in range(m):
            lineno = n + 2 + f
            if lineno > len(lines):
                raise ParseError(f"file ended after {f} of {m} frames", path, len(lines))
            parts = lines[lineno - 1].split()
            if len(parts) != 3 * j:
                raise ParseError(f"expected {3 * j} values, found {len(parts)}", path, lineno)
            frames[f] = _parse_floats(parts, path, lineno).reshape(j, 3)
        out.append(Sequence(frames, label=label, subject=subject,
                            seq_id=f"{path.name}#{len(out)}"))
        n += 1 + m
    if not out:
        raise ParseError("no records", path)
    return out


def write_skt1(path, sequences):
    with open(path, "w") as fh:
        for s in sequences:
            m, j, _ = s.frames.shape
            fh.write(f"SKT1 {j} {m} {s.label} {s.subject}\n")
            for frame in s.frames:
                fh.write(" ".join(f"{v:.17g}" for v in frame.ravel()) + "\n")


# -- MSR-Action3D -------------------------------------------------------------

def read_msr_txt(path, label=None, subject=None):
    path = Path(path)
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 4:
                raise ParseError(f"expected 4 values (u v d c), found {len(parts)}", path, lineno)
            rows.append(_parse_floats(parts, path, lineno)[:3])
    if not rows or len(rows) % MSR_JOINTS:
        raise ParseError(f"{len(rows)} joint rows is not a multiple of {MSR_JOINTS}", path)
    if label is None or subject is None:
        hit = _MSR_NAME.search(path.name)
        if not hit:
            raise ParseError("cannot infer label/subject from file name", path)
        label = int(hit.group(1)) if label is None else label
        subject = int(hit.group(2)) if subject is None else subject
    frames = np.array(rows).reshape(-1, MSR_JOINTS, 3)
    return Sequence(frames, label=label, subject=subject, seq_id=path.name)


# -- manifests ----------------------------------------------------------------

def read_manifest(path, fmt="skt1"):
    """Load the files listed in a ``path,label,subject`` CSV manifest.

    Paths are relative to the manifest. For skt1 files the manifest label
    and subject must agree with the record headers.
    """
    path = Path(path)
    seqs = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            if lineno == 1 and row[0].strip().lower() == "path":
                continue
            if len(row) != 3:
                raise ParseError("expected 'path,label,subject'", path, lineno)
            try:
                label, subject = int(row[1]), int(row[2])
            except ValueError:
                raise ParseError("label and subject must be integers", path, lineno) from None
            target = path.parent / row[0].strip()
            if not target.is_file():
                raise ParseError(f"missing sequence file {target}", path, lineno)
            if fmt == "skt1":
                for s in read_skt1(target):
                    if (s.label, s.subject) != (label, subject):
                        raise ParseError("manifest disagrees with file header", path, lineno)
                    seqs.append(s)
            else:
                seqs.append(read_msr_txt(target, label, subject))
    return seqs


def write_manifest(path, entries):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "label", "subject"])
        for row in entries:
            w.writerow(row)


def load_native(path, fmt="skt1"):
    """Load a dataset from a file, a directory or a CSV manifest."""
    if fmt not in FORMATS:
        raise InvalidArgument(f"format must be one of {FORMATS}, got {fmt!r}")
    path = Path(path)
    if not path.exists():
        raise ParseError("no such file or directory", path)
    if path.is_dir():
        pattern = "*.skt1" if fmt == "skt1" else "*.txt"
        files = sorted(path.glob(pattern))
        if not files:
            raise ParseError(f"no {pattern} files", path)
        seqs = []
        for f in files:
            seqs.extend(read_skt1(f) if fmt == "skt1" else [read_msr_txt(f)])
    elif path.suffix == ".csv":
        seqs = read_manifest(path, fmt)
    else:
        seqs = read_skt1(path) if fmt == "skt1" else [read_msr_txt(path)]
    try:
        return Dataset(seqs, name=path.stem)
    except InvalidArgument as exc:
        raise ParseError(str(exc), path) from None


# -- splits -------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    kind: str = "cross-subject"
    train_subjects: tuple = None  # None: odd subject ids
    test_subjects: tuple = None  # None: every subject not used for training
    subsets: dict = None  # subset-average: name -> class ids

    def __post_init__(self):
        if self.kind not in ("cross-subject", "subset-average"):
            raise InvalidArgument(f"unknown split kind {self.kind!r}")
        if self.kind == "subset-average" and not self.subsets:
            raise InvalidArgument("subset-average needs class subsets")
        if self.train_subjects is not None and self.test_subjects is not None:
            overlap = set(self.train_subjects) & set(self.test_subjects)
            if overlap:
                raise InvalidArgument(f"subjects in both train and test: {sorted(overlap)}")

    def resolve(self, subjects):
        subjects = sorted(set(subjects))
        train = (tuple(s for s in subjects if s % 2 == 1) if self.train_subjects is None
                 else tuple(sorted(self.train_subjects)))
        test = (tuple(s for s in subjects if s not in train) if self.test_subjects is None
                else tuple(sorted(self.test_subjects)))
        overlap = set(train) & set(test)
        if overlap:
            raise InvalidArgument(f"subjects in both train and test: {sorted(overlap)}")
        return train, test


def _order_key(seq):
    digest = hashlib.sha1(seq.frames.tobytes()).hexdigest()
    return (seq.label, seq.subject, seq.seq_id, digest)


def cross_subject_split(ds, spec=None):
    """Partition by performer; output order does not depend on input order."""
    spec = spec or SplitSpec()
    train_s, test_s = spec.resolve(ds.subjects)
    train, test = [], []
    for s in sorted(ds.sequences, key=_order_key):
        if s.subject in train_s:
            train.append(s)
        elif s.subject in test_s:
            test.append(s)
        else:
            raise InvalidArgument(f"subject {s.subject} is in neither split")
    return ds.subset(train, f"{ds.name}-train"), ds.subset(test, f"{ds.name}-test")


def validation_split(train):
    """Halve the training subjects (alternating in sorted order) into fit/validation."""
    subjects = train.subjects
    if len(subjects) < 2:
        raise InvalidArgument("need at least two training subjects for validation")
    fit_s = set(subjects[0::2])
    fit = [s for s in train.sequences if s.subject in fit_s]
    val = [s for s in train.sequences if s.subject not in fit_s]
    return train.subset(fit, f"{train.name}-fit"), train.subset(val, f"{train.name}-val")


def read_subsets(path):
    """``NAME: id id ...`` lines; ``#`` comments."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            name, sep, ids = line.partition(":")
            if not sep:
                raise ParseError("expected 'NAME: ids'", path, lineno)
            try:
                out[name.strip()] = tuple(int(x) for x in ids.split())
            except ValueError:
                raise ParseError("class ids must be integers", path, lineno) from None
    return out


def msr_subsets():
    ref = resources.files("skelkern") / "data" / "msr_subsets.txt"
    with resources.as_file(ref) as path:
        return read_subsets(path)


# -- synthetic data -----------------------------------------------------------

def _burst_phase(rng, m, max_repeats):
    """Timeline in which one random window is played ``k`` times."""
    a = rng.uniform(0.1, 0.5)
    b = a + rng.uniform(0.15, 0.35)
    k = int(rng.integers(1, max_repeats + 1))
    pieces = [np.linspace(0.0, a, 50, endpoint=False)]
    pieces += [np.linspace(a, b, 50, endpoint=False)] * k
    pieces.append(np.linspace(b, 1.0, 50))
    path = np.concatenate(pieces)
    pick = np.linspace(0, path.size - 1, m)
    return np.interp(pick, np.arange(path.size), path)


def synth_actions(k, per_class, j, m, noise=0.05, seed=0, n_subjects=10, bursts=0):
    """Sinusoidal joint trajectories with class-specific frequency, phase and amplitude.

    Each subject has its own body scale and global position; sequences get a
    small phase jitter and i.i.d. Gaussian noise of standard deviation
    ``noise``.  With ``bursts > 0`` a random window of the action is
    repeated up to ``bursts`` times within the same ``m`` frames.
    Subjects are assigned round-robin within each class.
    """
    if min(k, per_class, j, m, n_subjects) < 1:
        raise InvalidArgument("sizes must be positive")
    rng = np.random.default_rng(seed)
    rest = rng.normal(0.0, 0.4, (j, 3))
    rest[0] = 0.0
    amp = rng.uniform(0.1, 0.4, (k, j, 3))
    freq = rng.uniform(0.5, 2.0, (k, j, 3))
    phase = rng.uniform(0.0, 2 * np.pi, (k, j, 3))
    body = rng.uniform(0.9, 1.1, n_subjects)
    where = rng.normal(0.0, 0.5, (n_subjects, 3))

    seqs = []
    for c in range(k):
        for n in range(per_class):
            subj = n % n_subjects
            u = _burst_phase(rng, m, bursts) if bursts else np.arange(m) / max(m - 1, 1)
            jitter = rng.normal(0.0, 0.2)
            arg = 2 * np.pi * freq[c] * u[:, None, None] + phase[c] + jitter
            frames = body[subj] * rest + amp[c] * np.sin(arg) + where[subj]
            frames = frames + rng.normal(0.0, noise, frames.shape) if noise > 0 else frames
            seqs.append(Sequence(frames, label=c + 1, subject=subj + 1, seq_id=f"c{c + 1}_n{n}"))
    return Dataset(seqs, [f"action{c}" for c in range(1, k + 1)], j, f"synth-k{k}-s{seed}")
