"""Two flux qubits coupled to one LC mode.

All energies are linear frequencies in GHz (h = 1).  Two equivalent forms are
built: the flux (persistent-current) basis

    H = wr a^+a + sum_k (eps_k/2) sz_k + (delta_k/2) sx_k
        - (g1 sz_1 - g2 sz_2)(a^+ + a) - (2 g1 g2 / wr) sz_1 sz_2

and the qubit-diagonal (generalized Dicke) frame where each qubit term is
(wq_k/2) sz_k and the coupling direction is Lambda_k = cos(t_k) sx_k + sin(t_k) sz_k.
The resonator zero-point energy is dropped.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .qop import SIGMA_X, SIGMA_Z, annihilation, embed, kron

DEFAULT_N_CUT = 30
QUBIT_LABELS = ("g", "e")


@dataclass(frozen=True)
class DickeParams:
    """Physical model parameters, GHz (value / 2pi)."""

    omega_r: float
    eps1: float
    eps2: float
    delta1: float
    delta2: float
    g1: float
    g2: float
    n_cut: int = DEFAULT_N_CUT

    def __post_init__(self):
        if not self.omega_r > 0:
            raise ValueError(f"omega_r must be positive, got {self.omega_r}")
        if not (self.delta1 > 0 and self.delta2 > 0):
            raise ValueError(f"qubit gaps must be positive, got {self.delta1}, {self.delta2}")
        if self.g1 < 0 or self.g2 < 0:
            raise ValueError(f"couplings must be non-negative, got {self.g1}, {self.g2}")
        if int(self.n_cut) != self.n_cut or self.n_cut < 2:
            raise ValueError(f"n_cut must be an integer >= 2, got {self.n_cut}")
        for name in ("omega_r", "eps1", "eps2", "delta1", "delta2", "g1", "g2"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} is not finite")

    def replace(self, **changes) -> "DickeParams":
        return dataclasses.replace(self, **changes)

    @property
    def dims(self) -> tuple[int, int, int]:
        return (2, 2, int(self.n_cut))

    @property
    def dim(self) -> int:
        return 4 * int(self.n_cut)


# Fitted device values; eps1 is the swept variable and defaults to the symmetry point.
BASELINE = DickeParams(
    omega_r=5.15, eps1=0.0, eps2=-3.22, delta1=1.31, delta2=1.27, g1=3.33, g2=3.45
)


@dataclass(frozen=True)
class MixedAngleParams:
    omega_q1: float
    omega_q2: float
    theta1: float
    theta2: float


def _sgn(x: float) -> float:
    return 1.0 if x >= 0 else -1.0


def qubit_frequency(eps: float, delta: float) -> float:
    """Signed qubit frequency ``sgn(eps) sqrt(eps^2 + delta^2)`` with sgn(0) = +1."""
    return _sgn(eps) * math.hypot(eps, delta)


def mixing_angle(eps: float, delta: float) -> float:
    """Interaction direction ``-arctan(eps / delta)``.

    This matches the rotation that maps the flux form onto the Dicke form only
    for ``eps <= 0``; :func:`frame_angle` is the one the Dicke builder uses.
    """
    return -math.atan(eps / delta)


def frame_angle(eps: float, delta: float) -> float:
    """Angle of the flux operator seen from the qubit eigenframe.

    With the signed qubit frequency, the rotation that takes
    ``eps sz + delta sx`` to ``wq sz`` sends ``sz`` to
    ``cos(t) sx + sin(t) sz`` with ``sin(t) = eps / wq >= 0``, i.e.
    ``t = arctan(|eps| / delta)``.
    """
    return math.atan(abs(eps) / delta)


def mixed_angle_params(p: DickeParams) -> MixedAngleParams:
    return MixedAngleParams(
        omega_q1=qubit_frequency(p.eps1, p.delta1),
        omega_q2=qubit_frequency(p.eps2, p.delta2),
        theta1=frame_angle(p.eps1, p.delta1),
        theta2=frame_angle(p.eps2, p.delta2),
    )


def coupling_ratios(p: DickeParams) -> tuple[float, float]:
    return p.g1 / p.omega_r, p.g2 / p.omega_r


def renormalized_gap(delta: float, g: float, omega_r: float) -> float:
    """Polaron-dressed gap ``delta * exp(-2 (g / omega_r)^2)``."""
    return delta * math.exp(-2.0 * (g / omega_r) ** 2)


@lru_cache(maxsize=16)
def _flux_terms(n_cut: int) -> np.ndarray:
    dims = (2, 2, n_cut)
    a = annihilation(n_cut)
    z1 = embed(SIGMA_Z, 0, dims)
    z2 = embed(SIGMA_Z, 1, dims)
    x = embed(a + a.T, 2, dims)
    terms = np.stack(
        [
            embed(a.T @ a, 2, dims),
            0.5 * z1,
            0.5 * embed(SIGMA_X, 0, dims),
            0.5 * z2,
            0.5 * embed(SIGMA_X, 1, dims),
            z1 @ x,
            z2 @ x,
            z1 @ z2,
        ]
    )
    terms.setflags(write=False)
    return terms


def _coefficients(omega_r, eps1, eps2, delta1, delta2, g1, g2, spin_spin):
    ss = -2.0 * g1 * g2 / omega_r if spin_spin else 0.0
    return np.array([omega_r, eps1, delta1, eps2, delta2, -g1, g2, ss])


def _flux_coefficients(p: DickeParams, spin_spin: bool) -> np.ndarray:
    return _coefficients(p.omega_r, p.eps1, p.eps2, p.delta1, p.delta2, p.g1, p.g2, spin_spin)


def flux_hamiltonian(
    omega_r: float,
    eps1: float,
    eps2: float,
    delta1: float,
    delta2: float,
    g1: float,
    g2: float,
    n_cut: int = DEFAULT_N_CUT,
    spin_spin: bool = True,
) -> np.ndarray:
    """Unvalidated flux-basis builder; accepts ``delta = 0`` for the longitudinal limit."""
    coeffs = _coefficients(omega_r, eps1, eps2, delta1, delta2, g1, g2, spin_spin)
    return np.tensordot(coeffs, _flux_terms(int(n_cut)), axes=1)


def build_h_flux(p: DickeParams, spin_spin: bool = True) -> np.ndarray:
    """Hamiltonian in the persistent-current basis (real symmetric, dim 4 n_cut).

    ``spin_spin=False`` drops the direct qubit-qubit term.
    """
    return np.tensordot(_flux_coefficients(p, spin_spin), _flux_terms(int(p.n_cut)), axes=1)


def build_h_flux_batch(params: Sequence[DickeParams], spin_spin: bool = True) -> np.ndarray:
    """Stack of flux-basis Hamiltonians sharing one ``n_cut``."""
    cuts = {int(p.n_cut) for p in params}
    if len(cuts) != 1:
        raise ValueError(f"batch needs a single n_cut, got {sorted(cuts)}")
    coeffs = np.array([_flux_coefficients(p, spin_spin) for p in params])
    return np.einsum("pk,kij->pij", coeffs, _flux_terms(cuts.pop()), optimize=True)


def build_h_dicke(p: DickeParams, spin_spin: bool = True) -> np.ndarray:
    """Hamiltonian in the qubit-diagonal frame."""
    dims = p.dims
    m = mixed_angle_params(p)
    a = annihilation(p.n_cut)
    lam1 = embed(math.cos(m.theta1) * SIGMA_X + math.sin(m.theta1) * SIGMA_Z, 0, dims)
    lam2 = embed(math.cos(m.theta2) * SIGMA_X + math.sin(m.theta2) * SIGMA_Z, 1, dims)
    x = embed(a + a.T, 2, dims)
    h = (
        p.omega_r * embed(a.T @ a, 2, dims)
        + 0.5 * m.omega_q1 * embed(SIGMA_Z, 0, dims)
        + 0.5 * m.omega_q2 * embed(SIGMA_Z, 1, dims)
        - (p.g1 * lam1 - p.g2 * lam2) @ x
    )
    if spin_spin:
        h = h - (2.0 * p.g1 * p.g2 / p.omega_r) * (lam1 @ lam2)
    return h


def reference_params(p: DickeParams) -> DickeParams:
    """Uncoupled model with polaron-renormalized gaps."""
    return p.replace(
        delta1=renormalized_gap(p.delta1, p.g1, p.omega_r),
        delta2=renormalized_gap(p.delta2, p.g2, p.omega_r),
        g1=0.0,
        g2=0.0,
    )


def build_h_reference(p: DickeParams) -> np.ndarray:
    return build_h_dicke(reference_params(p))


def parity_operator(n_cut: int) -> np.ndarray:
    """``sz_1 sz_2 exp(i pi a^+a)``, a symmetry of the Dicke form at eps1 = eps2 = 0."""
    photon_parity = np.diag((-1.0) ** np.arange(n_cut))
    return kron(SIGMA_Z, SIGMA_Z, photon_parity)


def qubit_eigenbasis(eps: float, delta: float) -> np.ndarray:
    """Columns (|g>, |e>) of ``(eps sz + delta sx)/2`` in the flux basis."""
    w, v = np.linalg.eigh(0.5 * (eps * SIGMA_Z + delta * SIGMA_X))
    return v[:, np.argsort(w)]


def parse_bare_label(label: str) -> tuple[str, str, int]:
    """Split a bare-state label such as ``"gg1"`` or ``"eg0"``."""
    label = label.strip()
    if len(label) < 3 or label[0] not in QUBIT_LABELS or label[1] not in QUBIT_LABELS:
        raise ValueError(f"bad bare-state label {label!r}; expected e.g. 'gg1'")
    try:
        n = int(label[2:])
    except ValueError:
        raise ValueError(f"bad photon number in bare-state label {label!r}") from None
    if n < 0:
        raise ValueError(f"negative photon number in {label!r}")
    return label[0], label[1], n


def bare_state(label: str, p: DickeParams) -> np.ndarray:
    """Product eigenstate of the uncoupled Hamiltonian, expressed in the flux basis.

    |g>/|e> are the lower/upper eigenstates of each qubit term, so the state is
    the same one the Dicke frame labels with ``(wq_k/2) sz_k``.
    """
    q1, q2, n = parse_bare_label(label)
    if n >= p.n_cut:
        raise ValueError(f"photon number {n} in {label!r} outside n_cut={p.n_cut}")
    b1 = qubit_eigenbasis(p.eps1, p.delta1)[:, QUBIT_LABELS.index(q1)]
    b2 = qubit_eigenbasis(p.eps2, p.delta2)[:, QUBIT_LABELS.index(q2)]
    fock = np.zeros(p.n_cut)
    fock[n] = 1.0
    return kron(b1[:, None], b2[:, None], fock[:, None])[:, 0]


def bare_basis(p: DickeParams) -> tuple[list[str], np.ndarray]:
    """All bare labels and the matching unitary (columns are bare states)."""
    labels = [f"{a}{b}{n}" for a in QUBIT_LABELS for b in QUBIT_LABELS for n in range(p.n_cut)]
    u1 = qubit_eigenbasis(p.eps1, p.delta1)
    u2 = qubit_eigenbasis(p.eps2, p.delta2)
    return labels, kron(u1, u2, np.eye(p.n_cut))


def decoupled_energies(p: DickeParams) -> np.ndarray:
    """Sorted spectrum of the g1 = g2 = 0 model."""
    w1 = math.hypot(p.eps1, p.delta1)
    w2 = math.hypot(p.eps2, p.delta2)
    n = np.arange(p.n_cut)
    e = [s1 * w1 / 2 + s2 * w2 / 2 + n * p.omega_r for s1 in (-1, 1) for s2 in (-1, 1)]
    return np.sort(np.concatenate(e))


__all__ = [
    "DEFAULT_N_CUT",
    "DickeParams",
    "MixedAngleParams",
    "BASELINE",
    "bare_basis",
    "bare_state",
    "build_h_dicke",
    "build_h_flux",
    "build_h_flux_batch",
    "build_h_reference",
    "coupling_ratios",
    "decoupled_energies",
    "flux_hamiltonian",
    "frame_angle",
    "mixed_angle_params",
    "mixing_angle",
    "parity_operator",
    "parse_bare_label",
    "qubit_eigenbasis",
    "qubit_frequency",
    "reference_params",
    "renormalized_gap",
]
