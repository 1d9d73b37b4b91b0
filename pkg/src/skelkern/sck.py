"""Sequence compatibility descriptor.

For every joint the frames of a sequence are mapped to the concatenation
of a linearized position kernel (per coordinate) and a linearized temporal
kernel over normalized frame time ``s / M``.  Third-order moments of these
vectors are accumulated into a super-symmetric tensor, each frontal slice
is raised to a power (``gamma``) to damp bursty features, and the upper
simplices of all joints are concatenated.

The dot product of two descriptors approximates a kernel comparing every
frame of one sequence with every frame of the other on the same joint;
:func:`sck_exact` evaluates that kernel directly and serves as the oracle.
"""

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .errors import InvalidArgument
from .kernels import RbfKernel, feature_map, feature_map_3d, gauss, make_grid, out_of_range
from .preprocess import CENTERED, NORMALIZED
from .tensor import SymTensor3, psd_power, simplex_indices, simplex_size

__all__ = [
    "SckParams",
    "SckGrids",
    "SckDescriptor",
    "make_sck_grids",
    "frame_times",
    "frame_vectors",
    "joint_tensor",
    "slice_epn",
    "sck_descriptor",
    "sck_exact",
    "sck_exact_gram",
    "sck_size",
]

NORMALIZERS = ("frames", "none")


@dataclass(frozen=True)
class SckParams:
    sigma2: float = 0.6
    sigma3: float = 0.5
    z2: int = 5
    z3: int = 6
    beta1: float = 0.5
    beta2: float = 0.5
    gamma: float = 0.36
    normalizer: str = "frames"
    margin2: float = 0.0
    margin3: float = 0.0
    order: ClassVar[int] = 3

    def __post_init__(self):
        if not (self.sigma2 > 0 and self.sigma3 > 0):
            raise InvalidArgument("bandwidths must be positive")
        if self.z2 < 1 or self.z3 < 1:
            raise InvalidArgument("pivot counts must be >= 1")
        if self.beta1 < 0 or self.beta2 < 0 or abs(self.beta1 + self.beta2 - 1.0) > 1e-12:
            raise InvalidArgument("beta1, beta2 must be non-negative and sum to 1")
        if not 0.0 < self.gamma <= 1.0:
            raise InvalidArgument(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.normalizer not in NORMALIZERS:
            raise InvalidArgument(f"normalizer must be one of {NORMALIZERS}")

    @property
    def side(self):
        return 3 * self.z2 + self.z3


@dataclass(frozen=True, eq=False)
class SckGrids:
    position: object
    time: object


def make_sck_grids(params):
    """Position pivots on [-1, 1], temporal pivots on [0, 1]."""
    return SckGrids(
        position=make_grid(params.z2, params.sigma2, -1.0, 1.0, params.margin2),
        time=make_grid(params.z3, params.sigma3, 0.0, 1.0, params.margin3),
    )


def frame_times(m):
    """Normalized time stamps ``1/M, 2/M, ..., 1``."""
    return np.arange(1, m + 1) / m


def frame_vectors(seq, joint, params, grids):
    """``(M, 3*Z2 + Z3)`` matrix of weighted position/time feature vectors."""
    x = seq.frames[:, joint, :]
    pos = np.sqrt(params.beta1) * feature_map_3d(grids.position, x)
    tim = np.sqrt(params.beta2) * feature_map(grids.time, frame_times(seq.frame_count))
    return np.concatenate([pos, tim], axis=1)


def _normalizer(params, m):
    return 1.0 / m if params.normalizer == "frames" else 1.0


def joint_tensor(seq, joint, params, grids):
    """Accumulated third-order moment tensor of one joint (0-based index)."""
    if not 0 <= joint < seq.joint_count:
        raise InvalidArgument(f"joint index {joint} out of range for J={seq.joint_count}")
    f = frame_vectors(seq, joint, params, grids)
    idx, _ = simplex_indices(f.shape[1])
    simplex = np.einsum("si,si,si->i", f[:, idx[:, 0]], f[:, idx[:, 1]], f[:, idx[:, 2]])
    return SymTensor3(f.shape[1], simplex * _normalizer(params, seq.frame_count))


def slice_epn(t, gamma):
    """Raise every frontal slice to ``gamma`` and restore super-symmetry.

    Powering slices independently does not keep the tensor super-symmetric,
    so the result is averaged over index permutations before the upper
    simplex is taken.
    """
    if not 0.0 < gamma <= 1.0:
        raise InvalidArgument(f"gamma must lie in (0, 1], got {gamma}")
    dense = t.to_dense()
    slices = psd_power(np.moveaxis(dense, 2, 0), gamma)
    return SymTensor3.from_dense(np.moveaxis(slices, 0, 2), symmetrize=True)


@dataclass(frozen=True, eq=False)
class SckDescriptor:
    vector: np.ndarray
    joint_count: int
    z2: int
    z3: int
    gamma: float
    out_of_range: int = 0
    seq_id: str = ""

    @property
    def block_size(self):
        return simplex_size(3 * self.z2 + self.z3)

    @property
    def per_joint(self):
        return self.vector.reshape(self.joint_count, self.block_size)

    def __len__(self):
        return self.vector.size


def _check_stage(seq):
    if seq.stage not in (CENTERED, NORMALIZED):
        raise InvalidArgument(
            f"sequence compatibility descriptor needs hip-centred input, got stage {seq.stage!r}")


def sck_descriptor(seq, params=None, grids=None, epn=True, check_stage=True):
    """Descriptor of one sequence.

    Parameters
    ----------
    seq : Sequence
        Hip-centred (and usually limb-normalized, rescaled) sequence.
    params : SckParams, optional
    grids : SckGrids, optional
        Built from ``params`` when omitted.
    epn : bool
        Apply slice-wise power normalization. With ``epn=False`` the dot
        product of two descriptors is the plain linearized kernel.

    Returns
    -------
    SckDescriptor
        Blocks of ``C(d+2, 3)`` entries per joint, ``d = 3*Z2 + Z3``, each
        scaled by ``sqrt(multiplicity)`` so dot products equal tensor inner
        products.
    """
    params = params or SckParams()
    grids = grids or make_sck_grids(params)
    if check_stage:
        _check_stage(seq)
    blocks = []
    for joint in range(seq.joint_count):
        t = joint_tensor(seq, joint, params, grids)
        if epn:
            t = slice_epn(t, params.gamma)
        blocks.append(t.weighted())
    return SckDescriptor(
        vector=np.concatenate(blocks),
        joint_count=seq.joint_count,
        z2=params.z2,
        z3=params.z3,
        gamma=params.gamma if epn else 1.0,
        out_of_range=out_of_range(grids.position, seq.frames),
        seq_id=seq.seq_id,
    )


def sck_exact(seq_a, seq_b, params=None):
    """Kernel value computed from true Gaussians over all frame pairs."""
    params = params or SckParams()
    if seq_a.joint_count != seq_b.joint_count:
        raise InvalidArgument("sequences have different joint counts")
    m, n = seq_a.frame_count, seq_b.frame_count
    k2, k3 = RbfKernel(params.sigma2), RbfKernel(params.sigma3)
    temporal = gauss(k3, frame_times(m)[:, None] - frame_times(n)[None, :])
    total = 0.0
    for i in range(seq_a.joint_count):
        diff = seq_a.frames[:, None, i, :] - seq_b.frames[None, :, i, :]
        spatial = gauss(k2, diff).sum(axis=2)
        total += np.sum((params.beta1 * spatial + params.beta2 * temporal) ** params.order)
    return total * _normalizer(params, m) * _normalizer(params, n)


def sck_exact_gram(seqs, params=None):
    """Exact Gram matrix of :func:`sck_exact` over ``seqs``.

    Sequences of equal length are handled a row at a time with all joints
    and columns vectorized; mixed lengths fall back to pairwise calls.
    """
    params = params or SckParams()
    t = len(seqs)
    lengths = {s.frame_count for s in seqs}
    if len(lengths) != 1:
        k = np.empty((t, t))
        for a in range(t):
            for b in range(a, t):
                k[a, b] = k[b, a] = sck_exact(seqs[a], seqs[b], params)
        return k
    if len({s.joint_count for s in seqs}) != 1:
        raise InvalidArgument("sequences have different joint counts")
    m = lengths.pop()
    frames = np.stack([s.frames for s in seqs])  # (T, M, J, 3)
    k2, k3 = RbfKernel(params.sigma2), RbfKernel(params.sigma3)
    times = frame_times(m)
    temporal = params.beta2 * gauss(k3, times[:, None] - times[None, :])  # (M, N)
    k = np.empty((t, t))
    for a in range(t):
        diff = frames[a][None, :, None, :, :] - frames[a:, None, :, :, :]  # (T', M, N, J, 3)
        spatial = gauss(k2, diff).sum(axis=4)
        inner = params.beta1 * spatial + temporal[None, :, :, None]
        row = np.sum(inner ** params.order, axis=(1, 2, 3))
        k[a, a:] = k[a:, a] = row * _normalizer(params, m) ** 2
    return k


def sck_size(j, z2, z3):
    """Descriptor length ``J * C(3*Z2 + Z3 + 2, 3)``."""
    if min(j, z2, z3) < 1:
        raise InvalidArgument("sizes must be positive")
    return j * simplex_size(3 * z2 + z3)
