import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from skelkern.errors import InvalidArgument, NumericalFailure
from skelkern.tensor import (
    SymTensor3, fold, hosvd, inner, mode_product, outer3, outer_asym, psd_power, sgn_power,
    simplex_indices, simplex_size, unfold, vec,
)


def dense_outer3(v):
    d = len(v)
    out = np.empty((d, d, d))
    for i in range(d):
        for j in range(d):
            for k in range(d):
                out[i, j, k] = v[i] * v[j] * v[k]
    return out


# -- layout and storage -------------------------------------------------------

def test_vec_is_mode1_fastest():
    t = np.arange(24.0).reshape(2, 3, 4)
    v = vec(t)
    assert v[0] == t[0, 0, 0] and v[1] == t[1, 0, 0] and v[2] == t[0, 1, 0]
    assert v[6] == t[0, 0, 1]


def test_simplex_size_and_multiplicities():
    for d in range(1, 8):
        idx, mult = simplex_indices(d)
        assert len(idx) == simplex_size(d) == d * (d + 1) * (d + 2) // 6
        assert mult.sum() == d ** 3
        assert np.all(idx[:, 0] <= idx[:, 1]) and np.all(idx[:, 1] <= idx[:, 2])


def test_symtensor_rejects_wrong_length():
    with pytest.raises(InvalidArgument):
        SymTensor3(3, np.zeros(9))


def test_symtensor_getitem_matches_dense(rng):
    t = outer3(rng.normal(size=5))
    dense = t.to_dense()
    for ijk in itertools.product(range(5), repeat=3):
        assert t[ijk] == dense[ijk]


def test_dense_expansion_is_supersymmetric(rng):
    dense = SymTensor3(4, rng.normal(size=simplex_size(4))).to_dense()
    for perm in itertools.permutations(range(3)):
        assert np.array_equal(dense, dense.transpose(perm))


# -- outer products -----------------------------------------------------------

def test_outer3_basis_vector():
    t = outer3([1.0, 0.0]).to_dense()
    expect = np.zeros((2, 2, 2))
    expect[0, 0, 0] = 1.0
    assert np.array_equal(t, expect)


def test_outer3_small_arithmetic():
    t = outer3([1.0, 2.0])
    assert t[1, 1, 1] == 8 and t[0, 1, 1] == 4 and t[0, 0, 1] == 2 and t[0, 0, 0] == 1


def test_outer3_matches_triple_loop(rng):
    v = rng.normal(size=4)
    np.testing.assert_allclose(outer3(v).to_dense(), dense_outer3(v), rtol=0, atol=1e-12)


def test_outer3_rejects_empty_and_nonfinite():
    with pytest.raises(InvalidArgument):
        outer3([])
    with pytest.raises(InvalidArgument):
        outer3([1.0, np.nan])


def test_outer_asym_examples(rng):
    assert np.array_equal(outer_asym(np.eye(2), [1.0])[:, :, 0], np.eye(2))
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    t = outer_asym(m, [0.0, 1.0])
    assert not t[:, :, 0].any() and np.array_equal(t[:, :, 1], m)
    m, v = rng.normal(size=(3, 4)), rng.normal(size=5)
    t = outer_asym(m, v)
    for i, j, k in itertools.product(range(3), range(4), range(5)):
        assert abs(t[i, j, k] - m[i, j] * v[k]) <= 1e-14


# -- unfold / fold / mode products -------------------------------------------

def test_unfold_trivial_and_shape():
    assert unfold(np.full((1, 1, 1), 7.0), 1).tolist() == [[7.0]]
    t = np.zeros((3, 4, 5))
    assert unfold(t, 1).shape == (3, 20)
    assert unfold(t, 2).shape == (4, 15)
    assert unfold(t, 3).shape == (5, 12)


def test_unfold_column_order():
    # columns enumerate the other modes with the lowest one fastest
    t = np.arange(24.0).reshape(2, 3, 4)
    u2 = unfold(t, 2)
    assert np.array_equal(u2[:, 0], t[0, :, 0])
    assert np.array_equal(u2[:, 1], t[1, :, 0])
    assert np.array_equal(u2[:, 2], t[0, :, 1])


def test_unfold_bad_mode():
    for mode in (0, 4, "1"):
        with pytest.raises(InvalidArgument):
            unfold(np.zeros((2, 2, 2)), mode)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5), st.integers(1, 5)),
              elements=st.floats(-1e6, 1e6)))
def test_fold_unfold_exact(t):
    for mode in (1, 2, 3):
        assert np.array_equal(fold(unfold(t, mode), mode, t.shape), t)


def test_unfold_of_outer3(rng):
    v = rng.normal(size=4)
    expect = np.outer(v, vec(np.outer(v, v)))
    np.testing.assert_allclose(unfold(outer3(v).to_dense(), 1), expect, atol=1e-12)


def test_mode_product_identity_and_zero(rng):
    t = rng.normal(size=(3, 4, 5))
    for mode, d in zip((1, 2, 3), t.shape):
        assert np.array_equal(mode_product(t, np.eye(d), mode), t)
        assert not mode_product(t, np.zeros((2, d)), mode).any()


def test_mode_product_matches_loop(rng):
    t, m = rng.normal(size=(3, 3, 3)), rng.normal(size=(4, 3))
    out = mode_product(t, m, 2)
    expect = np.zeros((3, 4, 3))
    for i, a, k, j in itertools.product(range(3), range(4), range(3), range(3)):
        expect[i, a, k] += m[a, j] * t[i, j, k]
    np.testing.assert_allclose(out, expect, atol=1e-12)
    np.testing.assert_allclose(unfold(out, 2), m @ unfold(t, 2), atol=1e-12)


def test_mode_product_dimension_mismatch(rng):
    with pytest.raises(InvalidArgument):
        mode_product(rng.normal(size=(3, 3, 3)), np.eye(4), 1)


# -- HOSVD --------------------------------------------------------------------

def _rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


@pytest.mark.parametrize("shape", [(5, 5, 5), (2, 7, 3), (10, 10, 10), (15, 6, 6), (1, 4, 2)])
def test_hosvd_reconstruction_and_orthogonality(rng, shape):
    t = rng.normal(size=shape)
    f = hosvd(t)
    assert _rel(f.reconstruct(), t) <= 1e-8
    for a in f.factors:
        np.testing.assert_allclose(a.T @ a, np.eye(a.shape[1]), atol=1e-10)
    # factors are the left singular vectors of the unfoldings
    for mode, a in enumerate(f.factors, start=1):
        np.testing.assert_allclose(unfold(f.core, mode), a.T @ unfold(t, mode) @ np.kron(
            *[f.factors[k] for k in (2, 1, 0) if k != mode - 1]), atol=1e-9)


def test_hosvd_rank_one():
    v = np.zeros(4)
    v[2] = 1.0
    f = hosvd(outer3(v).to_dense())
    big = np.abs(f.core) > 1e-12
    assert big.sum() == 1 and big[0, 0, 0]
    assert abs(abs(f.core[0, 0, 0]) - 1.0) <= 1e-12


def test_hosvd_zero_tensor():
    f = hosvd(np.zeros((2, 3, 4)))
    assert not f.core.any()
    for a, d in zip(f.factors, (2, 3, 4)):
        assert np.array_equal(a, np.eye(d))


def test_hosvd_sign_convention_deterministic(rng):
    t = rng.normal(size=(4, 5, 3))
    f1, f2 = hosvd(t), hosvd(t.copy())
    for a, b in zip(f1.factors, f2.factors):
        assert np.array_equal(a, b)
        cols = np.abs(a).argmax(axis=0)
        assert np.all(a[cols, np.arange(a.shape[1])] > 0)


def test_hosvd_truncation(rng):
    t = rng.normal(size=(4, 5, 6))
    f = hosvd(t, ranks=(2, 3, 4))
    assert f.core.shape == (2, 3, 4)
    assert [a.shape for a in f.factors] == [(4, 2), (5, 3), (6, 4)]
    with pytest.raises(InvalidArgument):
        hosvd(t, ranks=(5, 1, 1))


def test_hosvd_svd_failure_carries_mode(monkeypatch, rng):
    real = np.linalg.svd
    calls = []

    def flaky(a, *args, **kw):
        calls.append(1)
        if len(calls) == 2:
            raise np.linalg.LinAlgError("no convergence")
        return real(a, *args, **kw)

    monkeypatch.setattr(np.linalg, "svd", flaky)
    with pytest.raises(NumericalFailure) as exc:
        hosvd(rng.normal(size=(3, 3, 3)))
    assert exc.value.mode == 2


def test_hosvd_rejects_nonfinite():
    t = np.zeros((2, 2, 2))
    t[0, 0, 0] = np.inf
    with pytest.raises(InvalidArgument):
        hosvd(t)


# -- matrix and elementwise powers --------------------------------------------

@pytest.mark.parametrize("gamma", [0.1, 0.36, 0.5, 1.0])
def test_psd_power_identity(gamma):
    np.testing.assert_allclose(psd_power(np.eye(4), gamma), np.eye(4), atol=1e-15)


def test_psd_power_diagonal():
    np.testing.assert_allclose(psd_power(np.diag([4.0, 9.0]), 0.5), np.diag([2.0, 3.0]),
                               atol=1e-14)


def test_psd_power_gamma_one_roundtrip(rng):
    a = rng.normal(size=(6, 6))
    m = a @ a.T
    np.testing.assert_allclose(psd_power(m, 1.0), m, atol=1e-10)


def test_psd_power_eigenvalues(rng):
    a = rng.normal(size=(6, 6))
    m = a @ a.T
    lam = np.linalg.eigvalsh(m)
    out = np.linalg.eigvalsh(psd_power(m, 0.36))
    np.testing.assert_allclose(out, lam ** 0.36, rtol=0, atol=1e-9)


def test_psd_power_clamps_roundoff(rng):
    a = rng.normal(size=(6, 4))
    m = a @ a.T  # rank 4: two eigenvalues are roundoff noise of either sign
    out = np.linalg.eigvalsh(psd_power(m, 0.36))
    assert out.min() >= -1e-12
    big = np.sort(np.linalg.eigvalsh(m))[2:]
    np.testing.assert_allclose(np.sort(out)[2:], big ** 0.36, rtol=1e-9)


def test_psd_power_bad_gamma():
    for g in (0.0, -0.5, 1.5):
        with pytest.raises(InvalidArgument):
            psd_power(np.eye(2), g)


def test_sgn_power():
    t = np.array([0.0, 1.0, -1.0])
    for g in (0.2, 0.5, 1.0):
        assert np.array_equal(sgn_power(t, g), t)
    assert sgn_power(np.array([-4.0]), 0.5)[0] == -2.0
    x = np.random.default_rng(0).normal(size=(3, 3, 3))
    assert np.array_equal(sgn_power(x, 1.0), x)


# -- inner products -----------------------------------------------------------

def test_inner_dense(rng):
    t = rng.normal(size=(3, 4, 5))
    assert abs(inner(t, t) - np.linalg.norm(t) ** 2) <= 1e-10
    e1, e2 = np.zeros((2, 2, 2)), np.zeros((2, 2, 2))
    e1[0, 1, 0], e2[1, 0, 0] = 1, 1
    assert inner(e1, e2) == 0.0


@pytest.mark.parametrize("d", range(1, 7))
def test_sym_inner_equals_dense(rng, d):
    a, b = outer3(rng.normal(size=d)), SymTensor3(d, rng.normal(size=simplex_size(d)))
    assert abs(inner(a, b) - inner(a.to_dense(), b.to_dense())) <= 1e-10
    assert abs(a.weighted() @ b.weighted() - inner(a, b)) <= 1e-10


def test_inner_mismatch():
    with pytest.raises(InvalidArgument):
        inner(np.zeros((2, 2, 2)), np.zeros((2, 2, 3)))
    with pytest.raises(InvalidArgument):
        inner(outer3([1.0, 2.0]), outer3([1.0]))
    with pytest.raises(InvalidArgument):
        inner(outer3([1.0]), np.zeros((1, 1, 1)))
