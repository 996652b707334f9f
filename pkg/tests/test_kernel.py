import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biodqpt.errors import DimensionMismatch, NearDefective, SelfOrthogonal
from biodqpt.kernel import (
    biorth_normalize,
    eig_dense,
    expm_apply,
    principal_sqrt,
    principal_sqrt_array,
    spectral_apply,
)
from conftest import random_matrix, random_vector

finite = st.floats(-1e3, 1e3, allow_nan=False)


@pytest.mark.parametrize(
    "z, expected",
    [(4, 2), (-4, 2j), (complex(-4, -0.0), 2j), (-1j, cmath.exp(-0.25j * cmath.pi)), (0, 0)],
)
def test_principal_sqrt_examples(z, expected):
    assert abs(principal_sqrt(z) - expected) < 1e-15


@given(finite, finite)
def test_principal_sqrt_branch(x, y):
    w = principal_sqrt(complex(x, y))
    assert abs(w * w - complex(x, y)) <= 1e-12 * max(1.0, abs(complex(x, y)))
    assert w.real >= 0
    if w.real == 0:
        assert w.imag >= 0


def test_principal_sqrt_array_matches_scalar(rng):
    z = random_vector(rng, 50)
    z[:5] = [-1 - 0j, complex(-2, -0.0), 0, 3, -1j]
    assert np.allclose(principal_sqrt_array(z), [principal_sqrt(v) for v in z], atol=0, rtol=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_eigensystem_invariants(n, seed):
    h = random_matrix(np.random.default_rng(seed), n)
    sys = eig_dense(h)
    assert sys.biorthonormality_error() <= 1e-10
    assert sys.completeness_error() <= 1e-10
    assert sys.reconstruction_error(h) <= 1e-10


def test_eigenvalues_match_lapack(rng):
    for n in range(1, 7):
        for _ in range(20):
            h = random_matrix(rng, n)
            ours = eig_dense(h).energies
            ref = np.linalg.eigvals(h)
            order = np.lexsort((ref.imag, ref.real))
            assert np.max(np.abs(ours - ref[order])) < 1e-10


def test_energies_sorted_by_real_then_imag(rng):
    sys = eig_dense(random_matrix(rng, 5))
    keys = list(zip(sys.energies.real, sys.energies.imag))
    assert keys == sorted(keys)


def test_hermitian_limit_lefts_are_adjoint(rng):
    a = random_matrix(rng, 4)
    h = a + a.conj().T
    sys = eig_dense(h)
    assert np.max(np.abs(sys.energies.imag)) < 1e-12
    assert np.max(np.abs(sys.lefts - sys.rights.conj().T)) < 1e-10


def test_eigenvector_equations_both_sides(rng):
    h = random_matrix(rng, 4)
    sys = eig_dense(h)
    for n in range(4):
        e = sys.energies[n]
        assert np.max(np.abs(h @ sys.right(n) - e * sys.right(n))) < 1e-10
        assert np.max(np.abs(sys.left(n) @ h - e * sys.left(n))) < 1e-10


def test_projectors_are_idempotent_and_orthogonal(rng):
    sys = eig_dense(random_matrix(rng, 3))
    p = [sys.projector(n) for n in range(3)]
    for i in range(3):
        for j in range(3):
            expected = p[i] if i == j else np.zeros((3, 3))
            assert np.max(np.abs(p[i] @ p[j] - expected)) < 1e-10


def test_jordan_block_is_near_defective():
    with pytest.raises(NearDefective):
        eig_dense([[1.0, 1.0], [0.0, 1.0]])


def test_degenerate_identity_is_rejected():
    with pytest.raises(NearDefective):
        eig_dense(np.eye(3))


def test_non_square_input():
    with pytest.raises(DimensionMismatch):
        eig_dense(np.ones((2, 3)))


def test_self_orthogonal_pair():
    with pytest.raises(SelfOrthogonal):
        biorth_normalize([1, 1j], [1, 1j])


def test_biorth_normalize_gives_unit_overlap(rng):
    r, l = biorth_normalize(random_vector(rng, 3), random_vector(rng, 3))
    assert abs(l @ r - 1) < 1e-14


def test_pt_symmetric_two_level_closed_form():
    # [[i g, 1], [1, -i g]] has energies +-sqrt(1 - g^2)
    g = 0.6
    sys = eig_dense([[1j * g, 1], [1, -1j * g]])
    assert np.allclose(sys.energies, [-0.8, 0.8], atol=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_expm_matches_spectral(n, seed, re_z, im_z):
    gen = np.random.default_rng(seed)
    h = random_matrix(gen, n, 0.7)
    v = random_vector(gen, n)
    z = complex(re_z, im_z)
    a = expm_apply(h, z, v)
    b = spectral_apply(eig_dense(h), z, v)
    assert np.max(np.abs(a - b)) <= 1e-9 * max(1.0, np.max(np.abs(b)))


def test_expm_zero_and_composition(rng):
    h = random_matrix(rng, 4)
    v = random_vector(rng, 4)
    assert np.allclose(expm_apply(h, 0, v), v, atol=0)
    once = expm_apply(h, -0.7j, v)
    twice = expm_apply(h, -0.3j, expm_apply(h, -0.4j, v))
    assert np.max(np.abs(once - twice)) < 1e-12 * np.max(np.abs(once)) + 1e-12


def test_expm_against_taylor_of_nilpotent():
    # exp(-z N) v = v - z N v for N^2 = 0; this path has no eigendecomposition
    n = np.array([[0, 1], [0, 0]], dtype=complex)
    v = np.array([0.3, -1.2j])
    assert np.allclose(expm_apply(n, 2.5 - 1j, v), v - (2.5 - 1j) * (n @ v), atol=1e-14)
