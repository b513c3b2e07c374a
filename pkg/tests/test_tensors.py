import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wignerfluid.tensors import (
    SymTensor,
    canonical_indices,
    decompose_gyrotropic,
    heat_flux_vector,
    isotropic_rank4_residual,
    moments_from_phase_space,
    projection_tensor,
    scalar_pressure,
    symmetrize,
)


def random_sym(rank, rng):
    return symmetrize(rng.normal(size=(3,) * rank), rank)


@pytest.mark.parametrize("rank,count", [(2, 6), (3, 10), (4, 15), (5, 21)])
def test_component_counts(rank, count):
    assert len(canonical_indices(rank)) == count
    assert SymTensor.zeros(rank).ncomp == count


@pytest.mark.parametrize("rank", [2, 3, 4, 5])
def test_access_invariant_under_permutation(rank):
    rng = np.random.default_rng(rank)
    t = SymTensor.from_dense(random_sym(rank, rng))
    dense = t.to_dense()
    for idx in itertools.product(range(3), repeat=rank):
        for perm in itertools.permutations(idx):
            assert t[perm] == dense[idx]


def test_string_access():
    t = SymTensor.from_function(3, lambda idx: 100 * idx[0] + 10 * idx[1] + idx[2])
    assert t["xzz"] == t["zxz"] == t[(0, 2, 2)] == 22


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 4, 5]))
@settings(max_examples=25, deadline=None)
def test_symmetrize_is_idempotent(seed, rank):
    rng = np.random.default_rng(seed)
    a = symmetrize(rng.normal(size=(3,) * rank), rank)
    np.testing.assert_allclose(symmetrize(a, rank), a, rtol=0, atol=1e-14)


def test_symmetrize_equals_permutation_average():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(3, 3, 3))
    expect = sum(np.transpose(a, p) for p in itertools.permutations(range(3))) / 6
    np.testing.assert_allclose(symmetrize(a, 3), expect, atol=1e-15)


def test_batched_roundtrip_and_arithmetic():
    rng = np.random.default_rng(1)
    dense = symmetrize(rng.normal(size=(4, 3, 3, 3, 3)), 4)
    t = SymTensor.from_dense_rank(dense, 4)
    assert t.batch_shape == (4,)
    np.testing.assert_allclose(t.to_dense(), dense, atol=1e-15)
    u = (t + t) * 0.5 - t / 2.0
    np.testing.assert_allclose(u.components, 0.5 * t.components, atol=1e-15)
    np.testing.assert_allclose(t.norm(), np.sqrt((dense**2).sum(axis=(1, 2, 3, 4))), rtol=1e-13)
    assert (-t).allclose(t * -1)
    with pytest.raises(TypeError):
        t + SymTensor.zeros(3, (4,))


def test_bad_component_count():
    with pytest.raises(ValueError):
        SymTensor(2, np.zeros(5))
    with pytest.raises(IndexError):
        SymTensor.zeros(2).position((0, 3))


@pytest.mark.parametrize("complex_", [False, True])
def test_csv_roundtrip(tmp_path, complex_):
    rng = np.random.default_rng(2)
    comps = rng.normal(size=15) + (1j * rng.normal(size=15) if complex_ else 0)
    t = SymTensor(4, comps)
    text = t.to_csv(tmp_path / "t.csv")
    assert text.splitlines()[0] == ("indices,re,im" if complex_ else "indices,value")
    assert text.splitlines()[1].startswith("xxxx,")
    back = SymTensor.from_csv(tmp_path / "t.csv")
    np.testing.assert_array_equal(back.components, t.components)


def test_scalar_pressure():
    assert scalar_pressure(2.5 * np.eye(3)) == pytest.approx(2.5, abs=1e-15)
    assert scalar_pressure(np.diag([1.0, 1.0, 4.0])) == pytest.approx(2.0, abs=1e-15)
    P = random_sym(2, np.random.default_rng(3))
    assert scalar_pressure(SymTensor.from_dense(P)) == pytest.approx(np.diag(P).mean(), abs=1e-15)


def test_heat_flux_vector():
    assert np.all(heat_flux_vector(SymTensor.zeros(3)) == 0)
    Q = SymTensor.zeros(3)
    Q.components[Q.position((2, 2, 2))] = 2.0
    np.testing.assert_allclose(heat_flux_vector(Q), [0, 0, 1])
    Qd = random_sym(3, np.random.default_rng(4))
    brute = np.zeros(3)
    for i, j in itertools.product(range(3), range(3)):
        brute[i] += 0.5 * Qd[j, j, i]
    np.testing.assert_allclose(heat_flux_vector(Qd), brute, atol=1e-15)


def test_projection_tensor_idempotent():
    for axis in [(0, 0, 1), (1, 2, 3)]:
        h = projection_tensor(axis)
        np.testing.assert_allclose(h @ h, h, atol=1e-15)
        assert np.trace(h) == pytest.approx(2.0)


def test_gyrotropic_decomposition():
    d = decompose_gyrotropic(1.7 * np.eye(3))
    assert (d.p_perp, d.p_par) == pytest.approx((1.7, 1.7)) and d.residual < 1e-15
    d = decompose_gyrotropic(np.diag([1.0, 1.0, 3.0]))
    assert (d.p_perp, d.p_par, d.residual) == (1.0, 3.0, 0.0)
    P = np.diag([1.0, 1.0, 3.0])
    P[0, 1] = P[1, 0] = 0.1
    d2 = decompose_gyrotropic(P)
    assert (d2.p_perp, d2.p_par) == (1.0, 3.0)
    assert d2.residual == pytest.approx(math.sqrt(2) * 0.1)


def test_gyrotropic_projection_is_idempotent():
    P = random_sym(2, np.random.default_rng(5))
    axis = (0.3, -0.2, 0.9)
    once = decompose_gyrotropic(P, axis).reconstruct()
    twice = decompose_gyrotropic(once, axis).reconstruct()
    np.testing.assert_allclose(twice, once, atol=1e-14)
    assert decompose_gyrotropic(once, axis).residual < 1e-14


def gaussian_grid(wx, wy, wz, drift=(0.0, 0.0, 0.0), pts=61, span=8.0):
    axes = [np.linspace(d - span * w, d + span * w, pts) for d, w in zip(drift, (wx, wy, wz))]
    V = np.meshgrid(*axes, indexing="ij")
    f = np.exp(-sum((Vi - d) ** 2 / (2 * w**2) for Vi, d, w in zip(V, drift, (wx, wy, wz))))
    f /= (2 * np.pi) ** 1.5 * wx * wy * wz
    return axes, f


def test_isotropic_gaussian_moments():
    v0, n, m = 0.8, 2.0, 1.3
    axes, f = gaussian_grid(v0, v0, v0, drift=(0.1, -0.2, 0.3))
    M = moments_from_phase_space(*axes, n * f, mass=m)
    assert M.n == pytest.approx(n, rel=1e-12)
    np.testing.assert_allclose(M.u, [0.1, -0.2, 0.3], atol=1e-12)
    np.testing.assert_allclose(M.P.to_dense(), m * n * v0**2 * np.eye(3), atol=1e-11)
    assert np.abs(M.Q.components).max() < 1e-12
    alpha, resid = isotropic_rank4_residual(M.R)
    assert alpha == pytest.approx(m * n * v0**4, rel=1e-10)
    assert resid < 1e-10


def test_bi_gaussian_is_gyrotropic():
    axes, f = gaussian_grid(0.5, 0.5, 1.2)
    M = moments_from_phase_space(*axes, f, mass=1.0)
    d = decompose_gyrotropic(M.P)
    assert d.p_perp == pytest.approx(0.25, rel=1e-11)
    assert d.p_par == pytest.approx(1.44, rel=1e-11)
    assert d.residual < 1e-12


def test_unresolved_support_detected():
    axes, f = gaussian_grid(1.0, 1.0, 1.0, span=1.5)
    with pytest.raises(ValueError, match="support"):
        moments_from_phase_space(*axes, f)
    with pytest.raises(ValueError):
        moments_from_phase_space(*axes, f[:-1])


def test_rank5_moment_available():
    axes, f = gaussian_grid(1.0, 1.0, 1.0, pts=41)
    M = moments_from_phase_space(*axes, f, max_rank=5)
    assert M.S is not None and M.S.ncomp == 21
    assert np.abs(M.S.components).max() < 1e-11
