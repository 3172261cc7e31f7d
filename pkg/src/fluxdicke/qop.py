"""Dense operator algebra: tensor products, truncated bosons, Pauli matrices and a
checked Hermitian eigensolver.

Subsystem order is fixed everywhere as (qubit 1, qubit 2, resonator).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.linalg

HERMITIAN_RTOL = 1e-12
DEGENERACY_TOL = 1e-9

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
IDENTITY_2 = np.eye(2)


class NonHermitianError(ValueError):
    """Raised when a matrix handed to the eigensolver is not Hermitian."""

    def __init__(self, asymmetry: float, scale: float):
        self.asymmetry = asymmetry
        self.scale = scale
        super().__init__(
            f"matrix is not Hermitian: max|H - H^dagger| = {asymmetry:.3e} "
            f"exceeds {HERMITIAN_RTOL:g} * max|H| = {HERMITIAN_RTOL * scale:.3e}"
        )


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues with column eigenvectors.

    ``degenerate`` is set when two neighbouring eigenvalues are closer than
    ``DEGENERACY_TOL``; the eigenvectors of such a subspace are whatever the
    solver returned.
    """

    values: np.ndarray
    vectors: np.ndarray
    degenerate: bool = False

    def __len__(self) -> int:
        return len(self.values)

    def residual(self, h: np.ndarray) -> float:
        """Largest ``||H v_k - lambda_k v_k||`` over the stored pairs."""
        r = h @ self.vectors - self.vectors * self.values[None, :]
        return float(np.max(np.linalg.norm(r, axis=0))) if r.size else 0.0


def kron(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices, left factor most significant."""
    if not ops:
        raise ValueError("kron needs at least one operand")
    return reduce(np.kron, ops)


def hermiticity_defect(h: np.ndarray) -> tuple[float, float]:
    """Return ``(max|H - H^dagger|, max|H|)``."""
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    scale = float(np.max(np.abs(h))) if h.size else 0.0
    asym = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
    return asym, scale


def check_hermitian(h: np.ndarray) -> None:
    asym, scale = hermiticity_defect(h)
    if asym > HERMITIAN_RTOL * scale:
        raise NonHermitianError(asym, scale)


def hermitian_eig(
    h: np.ndarray,
    n_levels: int | None = None,
    eigvals_only: bool = False,
) -> EigenDecomposition:
    """Diagonalize a Hermitian matrix.

    Args:
        h: square Hermitian matrix (real symmetric is fine).
        n_levels: keep only the lowest ``n_levels`` pairs; the solver is then
            asked for a subset, which is cheaper for large matrices.
        eigvals_only: skip eigenvectors (``vectors`` is then an empty array).

    Raises:
        NonHermitianError: if ``max|H - H^dagger| > 1e-12 max|H|``.
    """
    h = np.asarray(h)
    check_hermitian(h)
    dim = h.shape[0]
    subset = None
    if n_levels is not None and n_levels < dim:
        if n_levels < 1:
            raise ValueError("n_levels must be positive")
        subset = [0, n_levels - 1]
    # symmetrize away the sub-tolerance asymmetry so LAPACK sees an exact Hermitian input
    hs = 0.5 * (h + h.conj().T)
    if eigvals_only:
        values = scipy.linalg.eigh(hs, eigvals_only=True, subset_by_index=subset)
        vectors = np.empty((dim, 0), dtype=hs.dtype)
    else:
        values, vectors = scipy.linalg.eigh(hs, subset_by_index=subset)
    order = np.argsort(values, kind="stable")
    values = values[order]
    if vectors.size:
        vectors = vectors[:, order]
    degenerate = bool(len(values) > 1 and np.min(np.diff(values)) < DEGENERACY_TOL)
    return EigenDecomposition(values=values, vectors=vectors, degenerate=degenerate)


def annihilation(n_cut: int) -> np.ndarray:
    """Truncated bosonic lowering operator, ``a[n-1, n] = sqrt(n)``."""
    if int(n_cut) != n_cut or n_cut < 2:
        raise ValueError(f"n_cut must be an integer >= 2, got {n_cut!r}")
    return np.diag(np.sqrt(np.arange(1, int(n_cut), dtype=float)), k=1)


def number_operator(n_cut: int) -> np.ndarray:
    a = annihilation(n_cut)
    return a.T @ a


def embed(op: np.ndarray, slot: int, dims: Sequence[int]) -> np.ndarray:
    """Place ``op`` on subsystem ``slot`` of a product space, identity elsewhere."""
    op = np.asarray(op)
    dims = [int(d) for d in dims]
    if not 0 <= slot < len(dims):
        raise IndexError(f"slot {slot} out of range for {len(dims)} subsystems")
    if op.shape != (dims[slot], dims[slot]):
        raise ValueError(
            f"operator shape {op.shape} does not match subsystem {slot} of dimension {dims[slot]}"
        )
    factors = [np.eye(d) for d in dims]
    factors[slot] = op
    return kron(*factors)


def basis_index(indices: Sequence[int], dims: Sequence[int]) -> int:
    """Flat index of a product basis state, same ordering as :func:`kron`."""
    return int(np.ravel_multi_index(tuple(indices), tuple(dims)))
