import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluxdicke.qop import (
    IDENTITY_2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    NonHermitianError,
    annihilation,
    basis_index,
    embed,
    hermitian_eig,
    kron,
    number_operator,
)


def test_pauli_spectra():
    for s in (SIGMA_X, SIGMA_Y, SIGMA_Z):
        np.testing.assert_allclose(hermitian_eig(s).values, [-1.0, 1.0], atol=1e-15)


def test_two_level_example():
    h = 0.5 * (3 * SIGMA_Z + 4 * SIGMA_X)
    np.testing.assert_allclose(hermitian_eig(h).values, [-2.5, 2.5], atol=1e-14)


def test_rejects_non_hermitian():
    h = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(NonHermitianError) as exc:
        hermitian_eig(h)
    assert exc.value.asymmetry == 1.0


def test_tiny_asymmetry_tolerated():
    h = np.array([[1.0, 2.0], [2.0 + 1e-14, -1.0]])
    dec = hermitian_eig(h)
    np.testing.assert_allclose(dec.values, [-np.sqrt(5), np.sqrt(5)], rtol=1e-13)


def test_subset_matches_full():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(30, 30)) + 1j * rng.normal(size=(30, 30))
    h = a + a.conj().T
    full = hermitian_eig(h)
    part = hermitian_eig(h, n_levels=5)
    np.testing.assert_allclose(part.values, full.values[:5], atol=1e-12)
    assert part.vectors.shape == (30, 5)
    assert hermitian_eig(h, eigvals_only=True).vectors.size == 0


def test_degeneracy_flag():
    assert hermitian_eig(np.eye(3)).degenerate
    assert not hermitian_eig(np.diag([0.0, 1.0, 2.0])).degenerate


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_random_hermitian_residual(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(50, 50)) + 1j * rng.normal(size=(50, 50))
    h = (a + a.conj().T) / 2
    dec = hermitian_eig(h)
    assert dec.residual(h) < 1e-9 * np.linalg.norm(h, 2)
    assert np.all(np.diff(dec.values) >= 0)


def test_annihilation():
    np.testing.assert_array_equal(annihilation(2), [[0.0, 1.0], [0.0, 0.0]])
    np.testing.assert_allclose(np.diag(number_operator(6)), np.arange(6))
    for bad in (1, 0, -3, 2.5):
        with pytest.raises(ValueError):
            annihilation(bad)


@given(st.integers(min_value=2, max_value=20))
def test_truncated_commutator(n):
    a = annihilation(n)
    c = a @ a.T - a.T @ a
    # [a, a^+] = 1 except in the last Fock state
    expect = np.eye(n)
    expect[-1, -1] = 1 - n
    np.testing.assert_allclose(c, expect, atol=1e-12)


def test_embed_and_kron_order():
    dims = (2, 2, 3)
    z1 = embed(SIGMA_Z, 0, dims)
    np.testing.assert_array_equal(z1, kron(SIGMA_Z, IDENTITY_2, np.eye(3)))
    assert basis_index((1, 0, 2), dims) == 1 * 6 + 0 * 3 + 2
    with pytest.raises(IndexError):
        embed(SIGMA_Z, 3, dims)
    with pytest.raises(ValueError):
        embed(np.eye(3), 0, dims)
    with pytest.raises(ValueError):
        kron()


@given(st.integers(0, 2), st.integers(0, 2))
def test_embedded_operators_on_different_slots_commute(i, j):
    dims = (2, 3, 2)
    ops = [SIGMA_X, annihilation(3) + annihilation(3).T, SIGMA_Y]
    a, b = embed(ops[i], i, dims), embed(ops[j], j, dims)
    if i != j:
        np.testing.assert_allclose(a @ b, b @ a, atol=1e-14)
