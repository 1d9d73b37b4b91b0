"""Dense order-3 tensor numerics.

A third-order tensor is a plain ``numpy`` array of shape ``(d1, d2, d3)``.
Whenever a tensor is flattened (descriptor payloads, golden files) the
layout is mode-1 fastest, i.e. Fortran order; see :func:`vec`.

Modes are numbered 1, 2, 3 to match the usual tensor notation.

Super-symmetric tensors are kept as :class:`SymTensor3`, which stores only
the upper simplex ``i <= j <= k`` in lexicographic order.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .errors import InvalidArgument, NumericalFailure

__all__ = [
    "SymTensor3",
    "HosvdFactors",
    "as_tensor3",
    "simplex_size",
    "simplex_indices",
    "outer3",
    "outer_asym",
    "vec",
    "unfold",
    "fold",
    "mode_product",
    "hosvd",
    "psd_power",
    "sgn_power",
    "inner",
]


def as_tensor3(t):
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3 or 0 in t.shape:
        raise InvalidArgument(f"expected a non-empty order-3 tensor, got shape {t.shape}")
    return t


def simplex_size(d):
    """Number of unique entries of a super-symmetric ``d x d x d`` tensor."""
    return comb(d + 2, 3)


@lru_cache(maxsize=64)
def _simplex_tables(d):
    i, j, k = np.meshgrid(np.arange(d), np.arange(d), np.arange(d), indexing="ij")
    keep = (i <= j) & (j <= k)
    # meshgrid with indexing="ij" enumerates in lexicographic (C) order already
    idx = np.stack([i[keep], j[keep], k[keep]], axis=1)
    distinct = 1 + (idx[:, 0] != idx[:, 1]) + (idx[:, 1] != idx[:, 2])
    # 1 distinct value -> 1 permutation, 2 -> 3, 3 -> 6
    mult = np.choose(distinct - 1, [1, 3, 6]).astype(np.float64)
    idx.setflags(write=False)
    mult.setflags(write=False)
    return idx, mult


def simplex_indices(d):
    """Return ``(triples, multiplicity)`` for the upper simplex of side ``d``.

    ``triples`` is an ``(n, 3)`` int array of ``i <= j <= k`` in lexicographic
    order and ``multiplicity`` the number of index permutations of each.
    """
    if d < 1:
        raise InvalidArgument("side must be >= 1")
    return _simplex_tables(d)


@dataclass(frozen=True)
class SymTensor3:
    """Super-symmetric order-3 tensor stored as its upper simplex."""

    side: int
    simplex: np.ndarray

    def __post_init__(self):
        if self.side < 1:
            raise InvalidArgument("side must be >= 1")
        if self.simplex.shape != (simplex_size(self.side),):
            raise InvalidArgument(
                f"simplex of side {self.side} needs {simplex_size(self.side)} entries, "
                f"got {self.simplex.shape}"
            )

    def __getitem__(self, ijk):
        i, j, k = sorted(ijk)
        d = self.side
        # offset of the block starting with i, then j, then k
        pos = (comb(d + 2, 3) - comb(d - i + 2, 3)
               + comb(d - i + 1, 2) - comb(d - j + 1, 2)
               + (k - j))
        return self.simplex[pos]

    def to_dense(self):
        d = self.side
        idx, _ = simplex_indices(d)
        out = np.empty((d, d, d))
        a, b, c = idx.T
        for p, q, r in ((a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)):
            out[p, q, r] = self.simplex
        return out

    @classmethod
    def from_dense(cls, t, symmetrize=False):
        """Take the upper simplex of ``t``.

        With ``symmetrize=True`` the tensor is first averaged over all six
        index permutations, otherwise ``t`` is assumed super-symmetric.
        """
        t = as_tensor3(t)
        d = t.shape[0]
        if t.shape != (d, d, d):
            raise InvalidArgument(f"super-symmetric tensor must be cubic, got {t.shape}")
        if symmetrize:
            t = (t + t.transpose(0, 2, 1) + t.transpose(1, 0, 2)
                 + t.transpose(1, 2, 0) + t.transpose(2, 0, 1) + t.transpose(2, 1, 0)) / 6.0
        idx, _ = simplex_indices(d)
        return cls(d, t[idx[:, 0], idx[:, 1], idx[:, 2]].copy())

    def weighted(self):
        """Simplex scaled by sqrt(multiplicity).

        Plain dot products of weighted vectors equal dense inner products.
        """
        _, mult = simplex_indices(self.side)
        return self.simplex * np.sqrt(mult)

    def frobenius(self):
        return float(np.sqrt(inner(self, self)))


def outer3(v):
    """Rank-one super-symmetric tensor ``v o v o v``."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InvalidArgument("outer3 needs a non-empty vector")
    if not np.all(np.isfinite(v)):
        raise InvalidArgument("outer3 input must be finite")
    idx, _ = simplex_indices(v.size)
    return SymTensor3(v.size, v[idx[:, 0]] * v[idx[:, 1]] * v[idx[:, 2]])


def outer_asym(m, v):
    """Tensor whose p-th frontal slice is ``m * v[p]``."""
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if m.ndim != 2 or v.ndim != 1:
        raise InvalidArgument("outer_asym needs a matrix and a vector")
    if not (np.all(np.isfinite(m)) and np.all(np.isfinite(v))):
        raise InvalidArgument("outer_asym inputs must be finite")
    return m[:, :, None] * v[None, None, :]


def vec(t):
    """Flatten with mode 1 varying fastest."""
    return np.asarray(t).ravel(order="F")


def _check_mode(mode):
    if mode not in (1, 2, 3):
        raise InvalidArgument(f"mode must be 1, 2 or 3, got {mode!r}")


def unfold(t, mode):
    """Mode-``mode`` matricization, ``d_mode x (product of the other dims)``.

    Columns enumerate the remaining modes with the lowest mode fastest.
    """
    _check_mode(mode)
    t = as_tensor3(t)
    return np.reshape(np.moveaxis(t, mode - 1, 0), (t.shape[mode - 1], -1), order="F")


def fold(mat, mode, dims):
    """Inverse of :func:`unfold` for a tensor of shape ``dims``."""
    _check_mode(mode)
    dims = tuple(int(x) for x in dims)
    rest = [d for ax, d in enumerate(dims) if ax != mode - 1]
    mat = np.asarray(mat)
    if mat.shape != (dims[mode - 1], rest[0] * rest[1]):
        raise InvalidArgument(f"matrix of shape {mat.shape} does not fold into {dims}")
    t = np.reshape(mat, (dims[mode - 1], *rest), order="F")
    return np.moveaxis(t, 0, mode - 1)


def mode_product(t, m, mode):
    """Multiply ``t`` by matrix ``m`` along ``mode``."""
    _check_mode(mode)
    t = as_tensor3(t)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != t.shape[mode - 1]:
        raise InvalidArgument(
            f"matrix {m.shape} incompatible with mode {mode} of tensor {t.shape}"
        )
    dims = list(t.shape)
    dims[mode - 1] = m.shape[0]
    return fold(m @ unfold(t, mode), mode, dims)


@dataclass(frozen=True)
class HosvdFactors:
    core: np.ndarray
    factors: tuple

    def reconstruct(self, core=None):
        out = self.core if core is None else core
        for k, a in enumerate(self.factors, start=1):
            out = mode_product(out, a, k)
        return out


def _fix_signs(u):
    # largest-magnitude entry of each column made positive
    pivot = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[pivot, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs


def hosvd(t, ranks=None):
    """Higher-order SVD of an order-3 tensor.

    Parameters
    ----------
    t : array_like, shape (d1, d2, d3)
    ranks : tuple of 3 ints, optional
        Keep only the leading singular vectors of each mode. By default the
        factors are square and the decomposition is exact.

    Returns
    -------
    HosvdFactors
        ``core`` and the orthogonal ``factors`` (A1, A2, A3) with
        ``t = core x1 A1 x2 A2 x3 A3``.
    """
    t = as_tensor3(t)
    if not np.all(np.isfinite(t)):
        raise InvalidArgument("hosvd input must be finite")
    if ranks is None:
        ranks = t.shape
    elif len(ranks) != 3 or any(r < 1 or r > d for r, d in zip(ranks, t.shape)):
        raise InvalidArgument(f"ranks {ranks} invalid for shape {t.shape}")

    if not np.any(t):
        factors = tuple(np.eye(d)[:, :r] for d, r in zip(t.shape, ranks))
        return HosvdFactors(np.zeros(tuple(ranks)), factors)

    factors = []
    for mode in (1, 2, 3):
        mat = unfold(t, mode)
        try:
            u = np.linalg.svd(mat, full_matrices=mat.shape[0] > mat.shape[1])[0]
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"SVD of mode-{mode} unfolding did not converge",
                                   mode=mode) from exc
        factors.append(_fix_signs(u)[:, :ranks[mode - 1]])

    core = t
    for mode, a in enumerate(factors, start=1):
        core = mode_product(core, a.T, mode)
    return HosvdFactors(core, tuple(factors))


def _check_gamma(gamma):
    if not (0.0 < gamma <= 1.0):
        raise InvalidArgument(f"exponent must lie in (0, 1], got {gamma}")


def psd_power(m, gamma):
    """Raise a symmetric PSD matrix (or a stack of them) to ``gamma``.

    Eigenvalues at or below the numerical-rank cutoff ``n * eps * max|lam|``
    are roundoff and are set to zero first; a fractional power would
    otherwise inflate them (``1e-16 ** 0.36`` is about ``2e-6``).
    """
    _check_gamma(gamma)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise InvalidArgument(f"expected square matrices, got shape {m.shape}")
    try:
        lam, u = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("eigendecomposition did not converge") from exc
    cut = m.shape[-1] * np.finfo(np.float64).eps * np.abs(lam).max(axis=-1, keepdims=True)
    lam = np.where(lam > cut, lam, 0.0) ** gamma
    out = (u * lam[..., None, :]) @ np.swapaxes(u, -1, -2)
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def sgn_power(t, gamma):
    """Elementwise ``sign(t) * |t| ** gamma``."""
    _check_gamma(gamma)
    t = np.asarray(t, dtype=np.float64)
    return np.sign(t) * np.abs(t) ** gamma


def inner(a, b):
    """Tensor inner product; symmetric tensors are weighted by multiplicity."""
    if isinstance(a, SymTensor3) or isinstance(b, SymTensor3):
        if not (isinstance(a, SymTensor3) and isinstance(b, SymTensor3)):
            raise InvalidArgument("cannot mix SymTensor3 with dense tensors")
        if a.side != b.side:
            raise InvalidArgument(f"side mismatch {a.side} != {b.side}")
        _, mult = simplex_indices(a.side)
        return float(np.sum(mult * a.simplex * b.simplex))
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgument(f"shape mismatch {a.shape} != {b.shape}")
    return float(np.sum(a * b))
