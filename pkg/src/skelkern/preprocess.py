"""Skeleton sequences and their normalization.

Joint ids are the dataset's own 1-based numbering. A :class:`Sequence`
carries the ids of the joints it currently holds, so selecting a subset
and then looking a joint up by id keeps working.

Two pipelines consume sequences: the position descriptor expects
hip-centred input, the dynamics descriptor expects absolute coordinates.
``Sequence.stage`` records which preprocessing was applied so each
descriptor can refuse the wrong input.
"""

from collections import deque
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from .errors import DegenerateSegment, InvalidArgument, ParseError

RAW = "raw"
CENTERED = "centered"
NORMALIZED = "normalized"  # hip-centred and limb-normalized
STAGES = (RAW, CENTERED, NORMALIZED)


@dataclass(frozen=True, eq=False)
class Sequence:
    """``frames`` has shape ``(M, J, 3)``."""

    frames: np.ndarray
    label: int = 0
    subject: int = 0
    joint_ids: tuple = None
    stage: str = RAW
    seq_id: str = ""

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=np.float64)
        if f.ndim != 3 or f.shape[2] != 3:
            raise InvalidArgument(f"frames must have shape (M, J, 3), got {f.shape}")
        if f.shape[0] < 1 or f.shape[1] < 1:
            raise InvalidArgument("a sequence needs at least one frame and one joint")
        if not np.all(np.isfinite(f)):
            raise InvalidArgument("non-finite joint coordinates")
        ids = tuple(range(1, f.shape[1] + 1)) if self.joint_ids is None else tuple(
            int(i) for i in self.joint_ids)
        if len(ids) != f.shape[1] or len(set(ids)) != len(ids):
            raise InvalidArgument("joint_ids must be distinct and match the joint axis")
        if self.stage not in STAGES:
            raise InvalidArgument(f"unknown stage {self.stage!r}")
        f.setflags(write=False)
        object.__setattr__(self, "frames", f)
        object.__setattr__(self, "joint_ids", ids)

    @property
    def frame_count(self):
        return self.frames.shape[0]

    @property
    def joint_count(self):
        return self.frames.shape[1]

    def index_of(self, joint_id):
        try:
            return self.joint_ids.index(joint_id)
        except ValueError:
            raise InvalidArgument(f"joint {joint_id} not in sequence") from None

    def with_frames(self, frames, **changes):
        return replace(self, frames=frames, **changes)


@dataclass(frozen=True)
class SkeletonTopology:
    """Tree of ``(parent, child)`` edges rooted at the hip joint."""

    edges: tuple
    reference_lengths: tuple = None

    def __post_init__(self):
        edges = tuple((int(p), int(c)) for p, c in self.edges)
        object.__setattr__(self, "edges", edges)
        children = [c for _, c in edges]
        if len(set(children)) != len(children):
            raise InvalidArgument("a joint has more than one parent")
        nodes = {j for e in edges for j in e}
        roots = nodes - set(children)
        if len(roots) != 1:
            raise InvalidArgument(f"topology must have exactly one root, found {sorted(roots)}")
        if len(self.order()) != len(edges):
            raise InvalidArgument("topology edges do not form a tree")
        if self.reference_lengths is not None:
            lengths = tuple(float(x) for x in self.reference_lengths)
            if len(lengths) != len(edges) or min(lengths) <= 0:
                raise InvalidArgument("need one positive reference length per edge")
            object.__setattr__(self, "reference_lengths", lengths)

    @property
    def root(self):
        children = {c for _, c in self.edges}
        return next(p for p, _ in self.edges if p not in children)

    @property
    def joints(self):
        return sorted({j for e in self.edges for j in e})

    def order(self):
        """Edge indices in breadth-first order from the root."""
        kids = {}
        for n, (p, c) in enumerate(self.edges):
            kids.setdefault(p, []).append(n)
        children = {c for _, c in self.edges}
        roots = [p for p, _ in self.edges if p not in children]
        if not roots:
            return []
        out, queue, seen = [], deque([roots[0]]), {roots[0]}
        while queue:
            node = queue.popleft()
            for n in kids.get(node, ()):
                child = self.edges[n][1]
                if child in seen:
                    continue
                seen.add(child)
                out.append(n)
                queue.append(child)
        return out


def read_topology(path):
    """Parse ``parent child`` lines; ``#`` starts a comment."""
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError("expected 'parent child'", path, lineno)
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise ParseError("joint ids must be integers", path, lineno) from None
    try:
        return SkeletonTopology(tuple(edges))
    except InvalidArgument as exc:
        raise ParseError(str(exc), path) from None


def builtin_topology(name):
    """Bundled topologies: ``florence15``, ``kinect20``, ``synth8``."""
    ref = resources.files("skelkern") / "data" / f"{name}.topo"
    if not ref.is_file():
        raise InvalidArgument(f"no bundled topology {name!r}")
    with resources.as_file(ref) as path:
        return read_topology(path)


@dataclass(frozen=True)
class JointSubset:
    name: str
    ids: tuple

    def __post_init__(self):
        ids = tuple(int(i) for i in self.ids)
        if not ids or len(set(ids)) != len(ids):
            raise InvalidArgument(f"subset {self.name} must list distinct joint ids")
        object.__setattr__(self, "ids", ids)


def _r(a, b):
    return list(range(a, b + 1))


FLORENCE_SUBSETS = {
    "A": (6, 9),
    "B": (1, 6, 9),
    "C": (6, 9, 12, 15),
    "D": (4, 6, 7, 9, 11, 14),
    "E": (4, 6, 7, 9, 11, 12, 14, 15),
    "F": tuple(_r(4, 15)),
    "G": (1, *_r(4, 15)),
    "H": (1, 2, *_r(4, 15)),
    "I": tuple(_r(1, 15)),
}


def named_subset(name):
    try:
        return JointSubset(name, FLORENCE_SUBSETS[name])
    except KeyError:
        raise InvalidArgument(f"unknown joint subset {name!r}") from None


def hip_center(seq, hip_id):
    """Subtract the hip joint from every joint, frame by frame."""
    h = seq.index_of(hip_id)
    frames = seq.frames - seq.frames[:, h:h + 1, :]
    stage = seq.stage if seq.stage != RAW else CENTERED
    return seq.with_frames(frames, stage=stage)


def edge_lengths(seq, topology):
    """Per-frame segment lengths, shape ``(M, n_edges)``."""
    p = [seq.index_of(a) for a, _ in topology.edges]
    c = [seq.index_of(b) for _, b in topology.edges]
    return np.linalg.norm(seq.frames[:, c, :] - seq.frames[:, p, :], axis=2)


def fit_reference_lengths(sequences, topology):
    """Mean segment length over all frames of ``sequences``."""
    lengths = np.concatenate([edge_lengths(s, topology) for s in sequences], axis=0)
    return replace(topology, reference_lengths=tuple(lengths.mean(axis=0)))


def normalize_limbs(seq, topology):
    """Rescale every segment to its reference length, keeping its direction.

    The tree is walked from the root, so each child is re-placed relative to
    its already re-placed parent along the original parent->child direction.
    """
    if topology.reference_lengths is None:
        raise InvalidArgument("topology has no reference lengths; fit them first")
    src = seq.frames
    out = src.copy()
    for n in topology.order():
        parent, child = topology.edges[n]
        pi, ci = seq.index_of(parent), seq.index_of(child)
        seg = src[:, ci, :] - src[:, pi, :]
        norm = np.linalg.norm(seg, axis=1)
        if np.any(norm == 0):
            raise DegenerateSegment(parent, child)
        out[:, ci, :] = out[:, pi, :] + seg * (topology.reference_lengths[n] / norm)[:, None]
    return seq.with_frames(out, stage=NORMALIZED)


def select_joints(seq, subset):
    ids = subset.ids if isinstance(subset, JointSubset) else tuple(subset)
    idx = [seq.index_of(i) for i in ids]
    return seq.with_frames(seq.frames[:, idx, :], joint_ids=tuple(ids))


@dataclass(frozen=True)
class CoordinateScaler:
    """Per-axis affine map sending the 1st..99th percentile onto ``[lo, hi]``."""

    offset: tuple
    scale: tuple
    lo: float = -1.0
    hi: float = 1.0

    @classmethod
    def fit(cls, sequences, lo=-1.0, hi=1.0, percentiles=(1.0, 99.0)):
        pts = np.concatenate([s.frames.reshape(-1, 3) for s in sequences], axis=0)
        p_lo, p_hi = np.percentile(pts, percentiles, axis=0)
        span = p_hi - p_lo
        span[span <= 0] = 1.0
        scale = (hi - lo) / span
        offset = lo - p_lo * scale
        return cls(tuple(offset), tuple(scale), lo, hi)

    def apply(self, seq):
        frames = seq.frames * np.asarray(self.scale) + np.asarray(self.offset)
        return seq.with_frames(frames)


@dataclass(frozen=True)
class Preprocessor:
    """Everything fitted on the training split that both pipelines need."""

    hip_id: int
    topology: SkeletonTopology = None
    sck_scaler: CoordinateScaler = None
    dck_scaler: CoordinateScaler = None
    normalize: bool = True

    @classmethod
    def fit(cls, train, hip_id, topology=None, normalize=True):
        if topology is not None and topology.root != hip_id:
            raise InvalidArgument(f"topology is rooted at {topology.root}, not hip {hip_id}")
        centred = [hip_center(s, hip_id) for s in train]
        if normalize and topology is not None:
            topology = fit_reference_lengths(centred, topology)
            centred = [normalize_limbs(s, topology) for s in centred]
        return cls(
            hip_id=hip_id,
            topology=topology,
            sck_scaler=CoordinateScaler.fit(centred),
            dck_scaler=CoordinateScaler.fit(train),
            normalize=normalize and topology is not None,
        )

    def for_sck(self, seq):
        out = hip_center(seq, self.hip_id)
        if self.normalize:
            out = normalize_limbs(out, self.topology)
        return self.sck_scaler.apply(out)

    def for_dck(self, seq):
        if seq.stage != RAW:
            raise InvalidArgument("dynamics descriptor needs unnormalized joints")
        return self.dck_scaler.apply(seq)

    def to_dict(self):
        return {
            "hip_id": self.hip_id,
            "normalize": self.normalize,
            "edges": [list(e) for e in self.topology.edges] if self.topology else None,
            "reference_lengths": list(self.topology.reference_lengths)
            if self.topology and self.topology.reference_lengths else None,
            "sck_scaler": [list(self.sck_scaler.offset), list(self.sck_scaler.scale)],
            "dck_scaler": [list(self.dck_scaler.offset), list(self.dck_scaler.scale)],
        }

    @classmethod
    def from_dict(cls, d):
        topo = None
        if d.get("edges"):
            topo = SkeletonTopology(tuple(map(tuple, d["edges"])), d.get("reference_lengths"))
        return cls(
            hip_id=d["hip_id"],
            topology=topo,
            sck_scaler=CoordinateScaler(*map(tuple, d["sck_scaler"])),
            dck_scaler=CoordinateScaler(*map(tuple, d["dck_scaler"])),
            normalize=d["normalize"],
        )
