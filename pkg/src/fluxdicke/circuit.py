"""Charge-basis quantization of a four-junction flux qubit galvanically coupled to an LC resonator.

Each qubit is described by three phase coordinates (phi_beta, phi_a, phi_b); the
alpha-junction phase is eliminated through the loop constraint.  States are products
of integer charge states ``|n_beta, n_a, n_b>`` with ``|n| <= n_charge``.

The Hamiltonian commutes with complex conjugation followed by charge reflection
``n -> -n``, so in the basis ``{|0>, (|n> + |-n>)/sqrt2, i(|n> - |-n>)/sqrt2}`` it
is real symmetric.  All diagonalizations happen in that basis.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .dicke import DickeParams
from .qop import annihilation, hermitian_eig, kron

CONVERGENCE_RTOL = 1e-4  # relative to E_J


@dataclass(frozen=True)
class JunctionParams:
    """One qubit: junction energies in GHz, area ratios, external flux in flux quanta."""

    e_j: float
    e_c: float
    alpha: float
    beta: float
    phi_e: float = 0.5

    def __post_init__(self):
        if not self.e_j > 0:
            raise ValueError(f"e_j must be positive, got {self.e_j}")
        if not self.e_c > 0:
            raise ValueError(f"e_c must be positive, got {self.e_c}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not np.isfinite(self.phi_e):
            raise ValueError("phi_e must be finite")


@dataclass(frozen=True)
class CircuitParams:
    qubits: tuple[JunctionParams, JunctionParams]
    e_lr: float
    omega_r: float
    n_charge: int = 7

    def __post_init__(self):
        if len(self.qubits) != 2:
            raise ValueError("exactly two qubits are required")
        if not self.e_lr > 0:
            raise ValueError(f"e_lr must be positive, got {self.e_lr}")
        if not self.omega_r > 0:
            raise ValueError(f"omega_r must be positive, got {self.omega_r}")
        if int(self.n_charge) != self.n_charge or self.n_charge < 1:
            raise ValueError(f"n_charge must be a positive integer, got {self.n_charge!r}")

    def qubit(self, k: int) -> JunctionParams:
        if k not in (1, 2):
            raise IndexError(f"qubit index must be 1 or 2, got {k!r}")
        return self.qubits[k - 1]

    def with_flux(self, k: int, phi_e: float) -> "CircuitParams":
        qs = list(self.qubits)
        qs[k - 1] = replace(self.qubit(k), phi_e=float(phi_e))
        return replace(self, qubits=tuple(qs))

    def replace(self, **kw) -> "CircuitParams":
        return replace(self, **kw)


_DEMO_QUBIT = JunctionParams(e_j=20.0, e_c=2.0, alpha=0.7, beta=2.0)
DEMO_CIRCUIT = CircuitParams(qubits=(_DEMO_QUBIT, _DEMO_QUBIT), e_lr=10.0, omega_r=5.0)


def mass_matrix(alpha: float, beta: float) -> np.ndarray:
    """Mass matrix in units of the junction capacitance, coordinates (beta, a, b)."""
    a = alpha
    return np.array([[beta + a, a, a], [a, 1 + a, a], [a, a, 1 + a]])


@lru_cache(maxsize=8)
def _charge_ops(n_charge: int):
    n = np.arange(-n_charge, n_charge + 1)
    d = len(n)
    # <m+1| e^{i phi} |m> = 1
    up = sp.eye(d, k=-1, format="csr")
    k = n[:, None] - n[None, :]
    kk = np.where(k == 0, 1, k)
    phi = np.where(k == 0, 0.0, 1j * (-1.0) ** k / kk)
    phi2 = np.where(k == 0, np.pi**2 / 3, 2.0 * (-1.0) ** k / kk**2)
    return n, up, phi, phi2


def charge_operators(n_charge: int) -> dict:
    """Single-coordinate operators on ``|n| <= n_charge``: number, e^{i phi}, phi, phi^2."""
    n, up, phi, phi2 = _charge_ops(int(n_charge))
    return {"n": np.diag(n.astype(float)), "exp_iphi": up.toarray(), "phi": phi.copy(), "phi2": phi2.copy()}


def _kron3(a, b, c):
    return sp.kron(sp.kron(a, b, format="csr"), c, format="csr")


def _sparse_hamiltonian(q: JunctionParams, e_lr: float, n_charge: int, phi_e: float):
    n, up, _, phi2 = _charge_ops(n_charge)
    d = len(n)
    eye = sp.identity(d, format="csr")
    nb, na, nn = np.meshgrid(n, n, n, indexing="ij")
    v = np.stack([nb.ravel(), na.ravel(), nn.ravel()]).astype(float)
    minv = np.linalg.inv(mass_matrix(q.alpha, q.beta))
    kinetic = 4.0 * q.e_c * np.einsum("ip,ij,jp->p", v, minv, v)
    cos1 = (up + up.T) / 2
    h = sp.diags(kinetic).astype(complex)
    h = h + e_lr * _kron3(sp.csr_matrix(phi2), eye, eye)
    h = h - q.e_j * (q.beta * _kron3(cos1, eye, eye) + _kron3(eye, cos1, eye) + _kron3(eye, eye, cos1))
    s_up = _kron3(up, up, up)
    ph = np.exp(2j * np.pi * phi_e)
    h = h - 0.5 * q.alpha * q.e_j * (ph * s_up.T + np.conj(ph) * s_up)
    return h.tocsr()


def _sparse_flux_derivative(q: JunctionParams, n_charge: int, phi_e: float):
    _, up, _, _ = _charge_ops(n_charge)
    s_up = _kron3(up, up, up)
    ph = np.exp(2j * np.pi * phi_e)
    # d/dphi_e of -alpha E_J cos(2 pi phi_e - sum phi)
    return (-1j * np.pi * q.alpha * q.e_j * (ph * s_up.T - np.conj(ph) * s_up)).tocsr()


def _sparse_phi_beta(n_charge: int):
    n, _, phi, _ = _charge_ops(n_charge)
    eye = sp.identity(len(n), format="csr")
    return _kron3(sp.csr_matrix(phi), eye, eye)


@lru_cache(maxsize=4)
def _real_basis(n_charge: int):
    d = 2 * n_charge + 1
    idx = np.arange(d**3)
    b, a, c = np.unravel_index(idx, (d, d, d))
    mirror = np.ravel_multi_index((d - 1 - b, d - 1 - a, d - 1 - c), (d, d, d))
    lo = idx < mirror
    z = idx[idx == mirror]
    A, B = idx[lo], mirror[lo]
    s = 1 / np.sqrt(2)
    m = len(A)
    rows = np.concatenate([z, A, B, A, B])
    cols = np.concatenate([np.arange(len(z)), len(z) + np.arange(m), len(z) + np.arange(m),
                           len(z) + m + np.arange(m), len(z) + m + np.arange(m)])
    vals = np.concatenate([np.ones(len(z)), np.full(m, s), np.full(m, s), np.full(m, 1j * s), np.full(m, -1j * s)])
    return sp.csc_matrix((vals, (rows, cols)), shape=(d**3, d**3))


def _to_real(op, n_charge: int) -> np.ndarray:
    v = _real_basis(n_charge)
    r = (v.conj().T @ op @ v).toarray()
    scale = np.max(np.abs(r))
    if np.max(np.abs(r.imag)) > 1e-10 * max(scale, 1.0):
        raise RuntimeError("operator lacks the charge-reflection symmetry needed for a real basis")
    return np.ascontiguousarray(r.real)


def build_qubit_hamiltonian(
    p: CircuitParams, k: int, phi_e: float | None = None, n_charge: int | None = None
) -> np.ndarray:
    """Dense complex Hamiltonian of qubit ``k`` on the product charge basis.

    Memory grows as ``(2 n_charge + 1)^6``; the solvers in this module avoid the
    dense complex form and work on the real-symmetric equivalent instead.
    """
    q = p.qubit(k)
    nc = p.n_charge if n_charge is None else int(n_charge)
    fe = q.phi_e if phi_e is None else float(phi_e)
    return _sparse_hamiltonian(q, p.e_lr, nc, fe).toarray()


@dataclass(frozen=True)
class QubitSpectrum:
    levels: np.ndarray
    vectors: np.ndarray  # columns in the real basis
    phi_e: float
    n_charge: int


def qubit_spectrum(
    p: CircuitParams, k: int, n_levels: int = 4, phi_e: float | None = None, n_charge: int | None = None,
    vectors: bool = True,
) -> QubitSpectrum:
    q = p.qubit(k)
    nc = p.n_charge if n_charge is None else int(n_charge)
    fe = q.phi_e if phi_e is None else float(phi_e)
    h = _to_real(_sparse_hamiltonian(q, p.e_lr, nc, fe), nc)
    dec = hermitian_eig(h, n_levels=n_levels, eigvals_only=not vectors)
    return QubitSpectrum(levels=dec.values, vectors=dec.vectors, phi_e=fe, n_charge=nc)


def qubit_levels(p: CircuitParams, k: int, n_levels: int = 4, phi_e: float | None = None,
                 n_charge: int | None = None) -> np.ndarray:
    return qubit_spectrum(p, k, n_levels, phi_e, n_charge, vectors=False).levels


def _fix_phases(vecs: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Flip eigenvector signs so that <0|phi|j> >= 0 for j >= 1."""
    m = vecs.T @ phi @ vecs
    signs = np.ones(vecs.shape[1])
    signs[1:] = np.where(m[0, 1:] < 0, -1.0, 1.0)
    return vecs * signs


def coupling_elements(spec: QubitSpectrum, omega_r: float, e_lr: float) -> np.ndarray:
    """Coupling matrix ``g_ij = sqrt(omega_r E_Lr) <i|phi_beta|j>`` in GHz.

    Eigenvector phases are fixed so that the first row is non-negative.
    """
    phi = _to_real(_sparse_phi_beta(spec.n_charge), spec.n_charge)
    vecs = _fix_phases(spec.vectors, phi)
    g = np.sqrt(omega_r * e_lr) * (vecs.T @ phi @ vecs)
    return 0.5 * (g + g.T)


def charge_convergence(p: CircuitParams, k: int, n_levels: int = 4, phi_e: float | None = None) -> float:
    """Largest shift of the lowest levels when n_charge grows by 2, in GHz."""
    lo = qubit_levels(p, k, n_levels, phi_e)
    hi = qubit_levels(p, k, n_levels, phi_e, n_charge=p.n_charge + 2)
    return float(np.max(np.abs(hi - lo)))


@dataclass(frozen=True)
class QubitReduction:
    """Two-level description of one qubit at its operating flux.

    ``eps`` is positive when the diabatic state with positive <phi_beta> lies
    above the other one; with that orientation the resonator couples to
    ``-g sigma_z`` for qubit 1 and ``+g sigma_z`` for qubit 2, as in the flux-form model.
    """

    levels: np.ndarray
    g_matrix: np.ndarray
    eps: float
    delta: float
    g: float
    ip_phi0: float
    phi_e: float
    convergence_shift: float | None = None
    converged: bool | None = None
    extras: dict = field(default_factory=dict, compare=False)


def two_level_reduce(
    p: CircuitParams, k: int, n_levels: int = 4, phi_e: float | None = None, check_convergence: bool = False
) -> QubitReduction:
    """Reduce qubit ``k`` to (eps, delta, g).

    Raises:
        RuntimeError: if ``check_convergence`` is set and the lowest levels move by
            more than ``1e-4 E_J`` when the charge cutoff grows by 2.
    """
    q = p.qubit(k)
    fe = q.phi_e if phi_e is None else float(phi_e)
    shift = None
    converged = None
    if check_convergence:
        shift = charge_convergence(p, k, n_levels, fe)
        converged = shift < CONVERGENCE_RTOL * q.e_j
        if not converged:
            raise RuntimeError(
                f"qubit {k}: levels shift by {shift:.3e} GHz with n_charge+2, "
                f"above {CONVERGENCE_RTOL:g} E_J; raise n_charge"
            )
    nc = p.n_charge
    phi = _to_real(_sparse_phi_beta(nc), nc)

    sym = qubit_spectrum(p, k, 2, phi_e=0.5)
    vs = _fix_phases(sym.vectors, phi)
    delta = float(sym.levels[1] - sym.levels[0])
    dh = _to_real(_sparse_flux_derivative(q, nc, 0.5), nc)
    d01 = float(vs[:, 0] @ dh @ vs[:, 1])
    eps = 2.0 * d01 * (fe - 0.5)

    spec = sym if fe == 0.5 and n_levels <= 2 else qubit_spectrum(p, k, n_levels, phi_e=fe)
    gm = coupling_elements(spec, p.omega_r, p.e_lr)
    g = float(np.hypot(gm[0, 1], 0.5 * (gm[0, 0] - gm[1, 1])))
    return QubitReduction(
        levels=spec.levels,
        g_matrix=gm,
        eps=eps,
        delta=delta,
        g=g,
        ip_phi0=abs(d01),
        phi_e=fe,
        convergence_shift=shift,
        converged=converged,
    )


def reduction_to_dicke(r1: QubitReduction, r2: QubitReduction, omega_r: float, n_cut: int = 30) -> DickeParams:
    return DickeParams(
        omega_r=omega_r, eps1=r1.eps, eps2=r2.eps, delta1=r1.delta, delta2=r2.delta, g1=r1.g, g2=r2.g, n_cut=n_cut
    )


def multilevel_hamiltonian(r1: QubitReduction, r2: QubitReduction, omega_r: float, n_cut: int) -> np.ndarray:
    """Resonator plus two multilevel atoms in their own eigenbases.

    ``H = sum_k diag(Omega^(k)) + wr a^+a - (G1 - G2)(a + a^+) - (2/wr) G1 G2``,
    the many-level version of the flux-form model; truncating each ``G`` to two
    levels gives back the two-level couplings.
    """
    o1 = np.diag(r1.levels - r1.levels[0])
    o2 = np.diag(r2.levels - r2.levels[0])
    k1, k2 = len(o1), len(o2)
    i1, i2, ir = np.eye(k1), np.eye(k2), np.eye(n_cut)
    a = annihilation(n_cut)
    x = a + a.T
    g1, g2 = r1.g_matrix, r2.g_matrix
    h = kron(o1, i2, ir) + kron(i1, o2, ir) + omega_r * kron(i1, i2, a.T @ a)
    h -= kron(g1, i2, x) - kron(i1, g2, x)
    h -= (2.0 / omega_r) * kron(g1, g2, ir)
    return h


def interaction_terms(e_lr: float) -> dict[tuple[str, str], float]:
    """Bilinear coefficients of the resonator-loop energy ``E_Lr (phi_cr + phi_b1 - phi_b2)^2``.

    Written in terms of ``phi_r = -2 phi_cr`` and keyed by coordinate pairs; the
    squares of phi_b1 and phi_b2 belong to the qubit Hamiltonians and phi_cr^2 to the
    resonator, so only cross terms are returned.
    """
    # expand symbolically: coefficient of x*y in (c0 cr + c1 b1 + c2 b2)^2, then cr -> -r/2
    coeffs = {"cr": 1.0, "b1": 1.0, "b2": -1.0}
    names = list(coeffs)
    out: dict[tuple[str, str], float] = {}
    for i, x in enumerate(names):
        for y in names[i + 1:]:
            c = 2.0 * e_lr * coeffs[x] * coeffs[y]
            key = tuple(sorted(("r" if n == "cr" else n) for n in (x, y)))
            out[key] = c * (-0.5 if "cr" in (x, y) else 1.0)
    return out


def interaction_operator(e_lr: float, phi_b1: np.ndarray, phi_b2: np.ndarray, phi_r: np.ndarray) -> np.ndarray:
    """Interaction as an operator on the product space (b1, b2, r) of the given matrices."""
    i1, i2, ir = (np.eye(len(m)) for m in (phi_b1, phi_b2, phi_r))
    t = interaction_terms(e_lr)
    ops = {"b1": (phi_b1, 0), "b2": (phi_b2, 1), "r": (phi_r, 2)}
    h = np.zeros((len(i1) * len(i2) * len(ir),) * 2, dtype=np.result_type(phi_b1, phi_b2, phi_r))
    for (x, y), c in t.items():
        f = [i1, i2, ir]
        f[ops[x][1]] = ops[x][0]
        f[ops[y][1]] = ops[y][0]
        h = h + c * kron(*f)
    return h


__all__ = [
    "CONVERGENCE_RTOL",
    "CircuitParams",
    "DEMO_CIRCUIT",
    "JunctionParams",
    "QubitReduction",
    "QubitSpectrum",
    "build_qubit_hamiltonian",
    "charge_convergence",
    "charge_operators",
    "coupling_elements",
    "interaction_operator",
    "interaction_terms",
    "mass_matrix",
    "multilevel_hamiltonian",
    "qubit_levels",
    "qubit_spectrum",
    "reduction_to_dicke",
    "two_level_reduce",
]
