"""Closed-form spectrum of the purely longitudinal limit (delta1 = delta2 = 0, g1 = g2 = g).

With no tunnelling both flux operators are conserved, so every atomic sector is a
displaced harmonic oscillator.  ``m_k = -1`` labels the lower-energy (|g>) state
of qubit k, and the displacement index is

    M = sgn(eps2) m2 - sgn(eps1) m1,

so the sector ground state satisfies ``a|0>_M = -M (g/wr) |0>_M``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dicke import flux_hamiltonian
from .qop import hermitian_eig

SPINS = (-1, 1)


def _sgn(x: float) -> int:
    return 1 if x >= 0 else -1


def _check_spin(name: str, value: int) -> None:
    if value not in SPINS:
        raise ValueError(f"{name} must be -1 or +1, got {value!r}")


@dataclass(frozen=True)
class LongitudinalSector:
    m1: int
    m2: int
    sign_eps1: int
    sign_eps2: int
    M: int
    energy_offset: float
    coherent_amplitude: float

    @property
    def atoms(self) -> str:
        return atomic_label(self.m1, self.m2)


def m_value(m1: int, m2: int, sign_eps1: int, sign_eps2: int) -> int:
    for name, v in (("m1", m1), ("m2", m2), ("sign_eps1", sign_eps1), ("sign_eps2", sign_eps2)):
        _check_spin(name, v)
    return sign_eps2 * m2 - sign_eps1 * m1


def atomic_label(m1: int, m2: int) -> str:
    return ("g" if m1 < 0 else "e") + ("g" if m2 < 0 else "e")


def coherent_amplitude(M: int, g: float, omega_r: float) -> float:
    return -M * g / omega_r


def sector_energy(
    eps1: float,
    eps2: float,
    g: float,
    omega_r: float,
    m1: int,
    m2: int,
    n: int,
    spin_spin: bool = False,
) -> float:
    """Energy of the n-th displaced-oscillator level in sector (m1, m2), GHz.

    The default reproduces ``n wr + |eps1| m1/2 + |eps2| m2/2 - M^2 g^2/wr``,
    i.e. the model without the direct qubit-qubit term.  ``spin_spin=True``
    adds ``-(2 g^2/wr) s1 s2`` with ``s_k = sgn(eps_k) m_k`` the flux-operator
    eigenvalue, which makes the sector shift independent of M.
    """
    if int(n) != n or n < 0:
        raise ValueError(f"n must be a non-negative integer, got {n!r}")
    s1, s2 = _sgn(eps1), _sgn(eps2)
    M = m_value(m1, m2, s1, s2)
    e = n * omega_r + abs(eps1) * m1 / 2 + abs(eps2) * m2 / 2 - M * M * g * g / omega_r
    if spin_spin:
        e -= 2.0 * g * g / omega_r * (s1 * m1) * (s2 * m2)
    return e


def sectors(
    eps1: float, eps2: float, g: float, omega_r: float, spin_spin: bool = False
) -> list[LongitudinalSector]:
    s1, s2 = _sgn(eps1), _sgn(eps2)
    out = []
    for m2 in SPINS:
        for m1 in SPINS:
            M = m_value(m1, m2, s1, s2)
            out.append(
                LongitudinalSector(
                    m1=m1,
                    m2=m2,
                    sign_eps1=s1,
                    sign_eps2=s2,
                    M=M,
                    energy_offset=sector_energy(eps1, eps2, g, omega_r, m1, m2, 0, spin_spin),
                    coherent_amplitude=coherent_amplitude(M, g, omega_r),
                )
            )
    return out


def sector_table(sign_eps1: int, sign_eps2: int = -1) -> list[dict]:
    """Sector table for one sign pattern: M, atomic state and photon state.

    The photon state is ``"0"`` for M = 0 and otherwise ``"+alpha"``/``"-alpha"``
    following the sign of ``-M``, with ``alpha = 2 g / wr > 0``.
    """
    rows = []
    for m2 in SPINS:
        for m1 in SPINS:
            M = m_value(m1, m2, sign_eps1, sign_eps2)
            photon = "0" if M == 0 else ("-alpha" if M > 0 else "+alpha")
            rows.append({"m1": m1, "m2": m2, "M": M, "atoms": atomic_label(m1, m2), "photon": photon})
    return rows


def analytic_spectrum(
    eps1: float,
    eps2: float,
    g: float,
    omega_r: float,
    n_max: int,
    spin_spin: bool = False,
) -> np.ndarray:
    """All sector levels with photon index ``0..n_max``, merged and sorted."""
    e = [
        sector_energy(eps1, eps2, g, omega_r, m1, m2, n, spin_spin)
        for m1 in SPINS
        for m2 in SPINS
        for n in range(n_max + 1)
    ]
    return np.sort(np.array(e))


def longitudinal_hamiltonian(
    eps1: float, eps2: float, g: float, omega_r: float, n_cut: int, spin_spin: bool = False
) -> np.ndarray:
    """Flux-basis model with zero gaps and equal couplings."""
    return flux_hamiltonian(omega_r, eps1, eps2, 0.0, 0.0, g, g, n_cut=n_cut, spin_spin=spin_spin)


def sector_indices(m1: int, m2: int, eps1: float, eps2: float, n_cut: int) -> np.ndarray:
    """Flat indices of the flux-basis block belonging to sector (m1, m2)."""
    # sz eigenvalue +1 sits at qubit index 0
    s1, s2 = _sgn(eps1) * m1, _sgn(eps2) * m2
    i1, i2 = (0 if s1 > 0 else 1), (0 if s2 > 0 else 1)
    return (i1 * 2 + i2) * n_cut + np.arange(n_cut)


@dataclass(frozen=True)
class SectorGroundState:
    energy: float
    mean_a: float
    mean_n: float


def numeric_sector_ground(
    eps1: float,
    eps2: float,
    g: float,
    omega_r: float,
    m1: int,
    m2: int,
    n_cut: int = 40,
    spin_spin: bool = False,
) -> SectorGroundState:
    """Diagonalize one sector block numerically and report <a>, <a^+a> of its ground state."""
    h = longitudinal_hamiltonian(eps1, eps2, g, omega_r, n_cut, spin_spin)
    idx = sector_indices(m1, m2, eps1, eps2, n_cut)
    dec = hermitian_eig(h[np.ix_(idx, idx)], n_levels=1)
    psi = dec.vectors[:, 0]
    a = np.diag(np.sqrt(np.arange(1, n_cut, dtype=float)), k=1)
    # the block is real symmetric, so <a> is real and independent of the vector's sign
    mean_a = float(psi @ a @ psi)
    mean_n = float(psi @ (a.T @ a) @ psi)
    return SectorGroundState(energy=float(dec.values[0]), mean_a=mean_a, mean_n=mean_n)


__all__ = [
    "LongitudinalSector",
    "SectorGroundState",
    "analytic_spectrum",
    "atomic_label",
    "coherent_amplitude",
    "longitudinal_hamiltonian",
    "m_value",
    "numeric_sector_ground",
    "sector_energy",
    "sector_indices",
    "sectors",
    "sector_table",
]
