"""Dynamics compatibility descriptor.

For a pair of joints ``(i, i')`` and every pair of frames ``s > s'`` the
displacement ``x[s, i] - x[s', i']`` is mapped through a per-coordinate
linearized Gaussian and combined with the temporal maps of both frames.
The weighted sum over frame pairs is a non-symmetric ``3Z2 x Z3 x Z3``
tensor; HOSVD power normalization evens out its spectrum before the
blocks of all joint pairs are stacked.

Two stacking modes exist. ``strict`` keeps only pairs of distinct joints.
``paper-size`` also keeps each joint against its own past, restricted to
temporal pivot pairs ``p < p'``, which is what the published descriptor
sizes count.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import InvalidArgument
from .kernels import RbfKernel, feature_map, feature_map_3d, gauss, make_grid, out_of_range
from .preprocess import RAW, JointSubset, select_joints
from .sck import frame_times
from .tensor import hosvd, sgn_power, vec

__all__ = [
    "DckParams",
    "DckGrids",
    "DckDescriptor",
    "make_dck_grids",
    "frame_pairs",
    "pair_tensor",
    "hosvd_epn",
    "joint_pairs",
    "dck_descriptor",
    "dck_exact",
    "dck_size",
]

PAIR_MODES = ("paper-size", "strict")
NORMALIZERS = ("frames", "none")


@dataclass(frozen=True)
class DckParams:
    sigma2: float = 0.6
    sigma3: float = 0.5
    sigma4: float = None  # None: a quarter of the sequence length
    z2: int = 5
    z3: int = 6
    gamma: float = 0.85
    gamma_star: float = 1.0
    pair_mode: str = "paper-size"
    normalizer: str = "frames"  # "frames": 1 / (J * M); "none": 1
    margin2: float = 0.0
    margin3: float = 0.0

    def __post_init__(self):
        if not (self.sigma2 > 0 and self.sigma3 > 0):
            raise InvalidArgument("bandwidths must be positive")
        if self.sigma4 is not None and not self.sigma4 > 0:
            raise InvalidArgument("sigma4 must be positive")
        if self.z2 < 1 or self.z3 < 1:
            raise InvalidArgument("pivot counts must be >= 1")
        for name in ("gamma", "gamma_star"):
            g = getattr(self, name)
            if not 0.0 < g <= 1.0:
                raise InvalidArgument(f"{name} must lie in (0, 1], got {g}")
        if self.pair_mode not in PAIR_MODES:
            raise InvalidArgument(f"pair_mode must be one of {PAIR_MODES}")
        if self.normalizer not in NORMALIZERS:
            raise InvalidArgument(f"normalizer must be one of {NORMALIZERS}")

    def scale(self, j, m):
        """Per-sequence factor applied to every pair tensor."""
        return 1.0 / (j * m) if self.normalizer == "frames" else 1.0

    def locality(self, m):
        """Bandwidth of the frame-gap weight for a sequence of ``m`` frames."""
        return self.sigma4 if self.sigma4 is not None else 0.25 * m


@dataclass(frozen=True, eq=False)
class DckGrids:
    displacement: object
    time: object


def make_dck_grids(params):
    return DckGrids(
        displacement=make_grid(params.z2, params.sigma2, -1.0, 1.0, params.margin2),
        time=make_grid(params.z3, params.sigma3, 0.0, 1.0, params.margin3),
    )


def frame_pairs(m):
    """0-based ``(s, s')`` index arrays over all ``C(m, 2)`` pairs with ``s > s'``."""
    earlier, later = np.triu_indices(m, 1)
    return later, earlier


def pair_tensor(seq, i, ip, params, grids):
    """Weighted displacement/time tensor for joints ``i``, ``ip`` (0-based)."""
    m, j = seq.frame_count, seq.joint_count
    if m < 2:
        raise InvalidArgument("dynamics need at least two frames")
    if not (0 <= i < j and 0 <= ip < j):
        raise InvalidArgument(f"joint pair ({i}, {ip}) out of range for J={j}")
    s, sp = frame_pairs(m)
    weight = gauss(RbfKernel(params.locality(m)), (s - sp).astype(np.float64))
    disp = seq.frames[s, i, :] - seq.frames[sp, ip, :]
    phi = feature_map_3d(grids.displacement, disp)
    t = frame_times(m)
    z_late = feature_map(grids.time, t[s])
    z_early = feature_map(grids.time, t[sp])
    # sum over pairs of w * phi o z_late o z_early, as one matrix product
    z3 = z_late.shape[1]
    zz = (z_late[:, :, None] * z_early[:, None, :]).reshape(len(s), z3 * z3)
    out = ((weight[:, None] * phi).T @ zz).reshape(phi.shape[1], z3, z3)
    return out * params.scale(j, m)


def hosvd_epn(t, gamma, gamma_star=1.0):
    """Power-normalize the HOSVD core by ``gamma``, rebuild, then apply
    an elementwise signed power ``gamma_star``.

    Core entries at or below ``max(shape) * eps * max|core|`` are roundoff
    and are zeroed before the power, which would otherwise inflate them.
    """
    f = hosvd(t)
    core = f.core
    cut = max(core.shape) * np.finfo(np.float64).eps * np.abs(core).max(initial=0.0)
    core = np.where(np.abs(core) > cut, core, 0.0)
    rebuilt = f.reconstruct(sgn_power(core, gamma))
    return sgn_power(rebuilt, gamma_star)


def joint_pairs(j, pair_mode):
    """Stacking order: ``(i, i')`` lexicographic with ``i > i'`` (``>=`` in paper-size)."""
    if pair_mode not in PAIR_MODES:
        raise InvalidArgument(f"pair_mode must be one of {PAIR_MODES}")
    same = pair_mode == "paper-size"
    return [(i, ip) for i in range(j) for ip in range(i + (1 if same else 0))]


def _upper_temporal_mask(z2, z3):
    p, q = np.meshgrid(np.arange(z3), np.arange(z3), indexing="ij")
    mask = np.broadcast_to(p < q, (3 * z2, z3, z3))
    return vec(mask)


@dataclass(frozen=True, eq=False)
class DckDescriptor:
    vector: np.ndarray
    joint_ids: tuple
    z2: int
    z3: int
    gamma: float
    gamma_star: float
    pair_mode: str
    subset_name: str = ""
    out_of_range: int = 0
    seq_id: str = ""

    @property
    def pairs(self):
        return joint_pairs(len(self.joint_ids), self.pair_mode)

    def __len__(self):
        return self.vector.size


def dck_descriptor(seq, subset=None, params=None, grids=None, epn=True, check_stage=True):
    """Descriptor of one sequence from absolute joint coordinates.

    Parameters
    ----------
    seq : Sequence
        Unnormalized (raw stage) joints, possibly rescaled.
    subset : JointSubset or sequence of joint ids, optional
        Joints to use; all joints by default.
    params : DckParams, optional
    grids : DckGrids, optional
    epn : bool
        Apply HOSVD power normalization to each pair tensor.

    Returns
    -------
    DckDescriptor
        Cross-joint blocks are scaled by ``sqrt(2)`` since only ``i > i'``
        is stored. Length follows :func:`dck_size`.
    """
    params = params or DckParams()
    grids = grids or make_dck_grids(params)
    if check_stage and seq.stage != RAW:
        raise InvalidArgument(
            f"dynamics descriptor needs unnormalized joints, got stage {seq.stage!r}")
    name = ""
    if subset is not None:
        name = subset.name if isinstance(subset, JointSubset) else "custom"
        seq = select_joints(seq, subset)
    mask = _upper_temporal_mask(params.z2, params.z3)
    blocks = []
    for i, ip in joint_pairs(seq.joint_count, params.pair_mode):
        t = pair_tensor(seq, i, ip, params, grids)
        if epn:
            t = hosvd_epn(t, params.gamma, params.gamma_star)
        v = vec(t)
        blocks.append(v[mask] if i == ip else np.sqrt(2.0) * v)
    s, sp = frame_pairs(seq.frame_count)
    disp = seq.frames[s][:, :, None, :] - seq.frames[sp][:, None, :, :]
    return DckDescriptor(
        vector=np.concatenate(blocks) if blocks else np.zeros(0),
        joint_ids=seq.joint_ids,
        z2=params.z2,
        z3=params.z3,
        gamma=params.gamma if epn else 1.0,
        gamma_star=params.gamma_star if epn else 1.0,
        pair_mode=params.pair_mode,
        subset_name=name,
        out_of_range=out_of_range(grids.displacement, disp),
        seq_id=seq.seq_id,
    )


def dck_exact(seq_a, seq_b, subset=None, params=None):
    """Strict-mode kernel from true Gaussians (quadruple sum over frames).

    Sums over joint pairs ``i > i'`` (doubled), frame pairs ``s > s'`` and
    ``t > t'``, normalized by ``J**2 * M * N`` (the product of the two
    per-sequence factors).
    """
    params = params or DckParams()
    if subset is not None:
        seq_a, seq_b = select_joints(seq_a, subset), select_joints(seq_b, subset)
    if seq_a.joint_ids != seq_b.joint_ids:
        raise InvalidArgument("sequences use different joints")
    m, n, j = seq_a.frame_count, seq_b.frame_count, seq_a.joint_count
    if m < 2 or n < 2:
        raise InvalidArgument("dynamics need at least two frames")
    s, sp = frame_pairs(m)
    t, tp = frame_pairs(n)
    wa = gauss(RbfKernel(params.locality(m)), (s - sp).astype(np.float64))
    wb = gauss(RbfKernel(params.locality(n)), (t - tp).astype(np.float64))
    k2, k3 = RbfKernel(params.sigma2), RbfKernel(params.sigma3)
    ta, tb = frame_times(m), frame_times(n)
    temporal = (gauss(k3, ta[s][:, None] - tb[t][None, :])
                * gauss(k3, ta[sp][:, None] - tb[tp][None, :]))
    base = wa[:, None] * wb[None, :] * temporal
    total = 0.0
    for i, ip in joint_pairs(j, "strict"):
        da = seq_a.frames[s, i, :] - seq_a.frames[sp, ip, :]
        db = seq_b.frames[t, i, :] - seq_b.frames[tp, ip, :]
        spatial = gauss(k2, da[:, None, :] - db[None, :, :]).sum(axis=2)
        total += np.sum(base * spatial)
    return 2.0 * total * params.scale(j, m) * params.scale(j, n)


def dck_size(j, z2, z3, pair_mode="paper-size"):
    """``3*Z2 * C(J*Z3, 2)`` (paper-size) or ``3*Z2 * Z3**2 * C(J, 2)`` (strict)."""
    if min(j, z2, z3) < 1:
        raise InvalidArgument("sizes must be positive")
    if pair_mode == "paper-size":
        return 3 * z2 * comb(j * z3, 2)
    if pair_mode == "strict":
        return 3 * z2 * z3 * z3 * comb(j, 2)
    raise InvalidArgument(f"pair_mode must be one of {PAIR_MODES}")
