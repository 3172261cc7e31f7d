"""Bias sweeps, crosstalk, bare-state projections and anticrossing search."""
from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .dicke import (
    DickeParams,
    bare_basis,
    bare_state,
    build_h_flux,
    build_h_flux_batch,
    reference_params,
)

DEFAULT_N_LEVELS = 8
DOMINANCE_THRESHOLD = 0.4


@dataclass(frozen=True)
class SweepCalibration:
    """Maps the bias current onto eps1 and models flux crosstalk.

    ``b_plus``/``b_minus`` are per GHz of eps1; ``eps_coeff`` is GHz/mA.
    """

    a_crosstalk: float = 0.0
    b_plus: float = 0.0
    b_minus: float = 0.0
    eps_coeff: float = 201.6
    i_b0: float = 0.547

    def replace(self, **changes) -> "SweepCalibration":
        return dataclasses.replace(self, **changes)

    def b_for(self, eps1: float) -> float:
        return self.b_plus if eps1 >= 0 else self.b_minus

    def without_crosstalk(self) -> "SweepCalibration":
        return self.replace(a_crosstalk=0.0, b_plus=0.0, b_minus=0.0)


BASELINE_CALIBRATION = SweepCalibration(
    a_crosstalk=-9.43e-3, b_plus=0.78e-3, b_minus=0.73e-3, eps_coeff=201.6, i_b0=0.547
)


def bias_to_epsilon(i_b, cal: SweepCalibration):
    """eps1 (GHz) from the bias current (mA); scalars stay scalars."""
    eps = cal.eps_coeff * (np.asarray(i_b, dtype=float) - cal.i_b0)
    return float(eps) if eps.ndim == 0 else eps


def epsilon_to_bias(eps1, cal: SweepCalibration):
    if cal.eps_coeff == 0:
        raise ValueError("eps_coeff is zero; bias map is not invertible")
    i_b = np.asarray(eps1, dtype=float) / cal.eps_coeff + cal.i_b0
    return float(i_b) if i_b.ndim == 0 else i_b


def apply_crosstalk(base: DickeParams, eps1: float, cal: SweepCalibration) -> DickeParams:
    """Model parameters at bias eps1: eps2 -> eps2 + A eps1, wr -> wr (1 + B eps1)."""
    omega_r = base.omega_r * (1.0 + cal.b_for(eps1) * eps1)
    if not omega_r > 0:
        raise ValueError(f"crosstalk drives omega_r to {omega_r:g} GHz at eps1={eps1:g}")
    return base.replace(eps1=float(eps1), eps2=base.eps2 + cal.a_crosstalk * eps1, omega_r=omega_r)


@dataclass(frozen=True)
class SpectrumTable:
    grid: np.ndarray
    energies: np.ndarray  # (points, n_levels), absolute, ascending per row
    params: tuple[DickeParams, ...]
    vectors: np.ndarray | None = None  # (points, dim, n_levels)

    @property
    def n_levels(self) -> int:
        return self.energies.shape[1]

    @property
    def transitions(self) -> np.ndarray:
        """omega_i0 for i = 0..n_levels-1 (column 0 is identically zero)."""
        return self.energies - self.energies[:, :1]

    def omega(self, i: int, j: int) -> np.ndarray:
        """omega_ij = E_j - E_i along the grid."""
        return self.energies[:, j] - self.energies[:, i]


def _model_params(base, cal, eps1, model):
    p = apply_crosstalk(base, eps1, cal)
    return reference_params(p) if model == "reference" else p


def _diagonalize(params: Sequence[DickeParams], n_levels: int, keep_vectors: bool):
    h = build_h_flux_batch(params)
    if keep_vectors:
        w, v = np.linalg.eigh(h)
        return w[:, :n_levels], v[:, :, :n_levels]
    return np.linalg.eigvalsh(h)[:, :n_levels], None


def sweep(
    base: DickeParams,
    cal: SweepCalibration,
    grid: Iterable[float],
    n_levels: int = DEFAULT_N_LEVELS,
    keep_vectors: bool = False,
    model: str = "full",
    workers: int | None = None,
) -> SpectrumTable:
    """Diagonalize the flux-basis model at every eps1 of ``grid``.

    ``model="reference"`` swaps in the uncoupled, gap-renormalized model.
    Results do not depend on grid order or on ``workers``.
    """
    grid = np.asarray(list(grid), dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-D sequence")
    if n_levels < 2:
        raise ValueError("n_levels must be >= 2")
    if model not in ("full", "reference"):
        raise ValueError(f"unknown model {model!r}")
    n_levels = min(n_levels, base.dim)
    params = tuple(_model_params(base, cal, e, model) for e in grid)

    chunk = 64
    pieces = [params[i : i + chunk] for i in range(0, len(params), chunk)]
    if workers and workers > 1 and len(pieces) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda ps: _diagonalize(ps, n_levels, keep_vectors), pieces))
    else:
        results = [_diagonalize(ps, n_levels, keep_vectors) for ps in pieces]
    energies = np.concatenate([r[0] for r in results])
    vectors = np.concatenate([r[1] for r in results]) if keep_vectors else None
    return SpectrumTable(grid=grid, energies=energies, params=params, vectors=vectors)


def levels_at(p: DickeParams, n_levels: int = DEFAULT_N_LEVELS) -> np.ndarray:
    return np.linalg.eigvalsh(build_h_flux(p))[:n_levels]


@dataclass(frozen=True)
class ProjectionTable:
    grid: np.ndarray
    states: tuple[int, ...]
    labels: tuple[str, ...]
    values: np.ndarray  # (points, len(states), len(labels))
    completeness: np.ndarray  # (points, len(states)): sum over the full bare basis

    def get(self, state: int, label: str) -> np.ndarray:
        return self.values[:, self.states.index(state), self.labels.index(label)]


def projections(
    table: SpectrumTable,
    labels: Sequence[str],
    states: Sequence[int] | None = None,
) -> ProjectionTable:
    """P_j^(i) = |<psi_i|j>|^2 on bare product states j along the sweep."""
    if table.vectors is None:
        raise ValueError("projections need a sweep run with keep_vectors=True")
    states = tuple(range(table.n_levels)) if states is None else tuple(int(s) for s in states)
    for s in states:
        if not 0 <= s < table.n_levels:
            raise ValueError(f"state index {s} outside the {table.n_levels} stored levels")
    labels = tuple(labels)
    values = np.empty((len(table.grid), len(states), len(labels)))
    completeness = np.empty((len(table.grid), len(states)))
    for k, p in enumerate(table.params):
        psi = table.vectors[k][:, list(states)]
        kets = np.stack([bare_state(lab, p) for lab in labels], axis=1)
        values[k] = (np.abs(kets.T @ psi) ** 2).T
        _, u = bare_basis(p)
        completeness[k] = np.sum(np.abs(u.T @ psi) ** 2, axis=0)
    return ProjectionTable(
        grid=table.grid, states=states, labels=labels, values=values, completeness=completeness
    )


def atomic_weights(p: DickeParams, vectors: np.ndarray) -> dict[str, np.ndarray]:
    """Weight of each bare atomic configuration (summed over photon number) per column."""
    labels, u = bare_basis(p)
    c = np.abs(u.T @ vectors) ** 2
    w = c.reshape(4, p.n_cut, -1).sum(axis=1)
    return {atoms: w[k] for k, atoms in enumerate(("gg", "ge", "eg", "ee"))}


class MonotoneGapError(ValueError):
    """The gap has no interior minimum inside the search window."""


@dataclass(frozen=True)
class Anticrossing:
    eps1_star: float
    gap_min: float
    half_splitting: float
    branches: tuple[int, int]
    center_frequency: float  # (omega_i0 + omega_j0) / 2 at eps1_star
    omega_i0: float
    omega_j0: float
    n_cut_shift: float  # |gap(n_cut) - gap(2 n_cut)| at eps1_star

    @property
    def converged(self) -> bool:
        return self.n_cut_shift < 1e-4


def _gap(base, cal, i, j, eps1):
    w = levels_at(apply_crosstalk(base, eps1, cal), max(i, j) + 1)
    return w[j] - w[i]


def find_anticrossing(
    base: DickeParams,
    cal: SweepCalibration,
    i: int = 3,
    j: int = 4,
    window: tuple[float, float] = (-3.0, -1.0),
    n_grid: int = 81,
    xtol: float = 1e-5,
) -> Anticrossing:
    """Locate the minimum of ``omega_j0 - omega_i0`` in an eps1 window.

    A coarse scan brackets the minimum, bounded Brent refinement pins eps1 to
    ``xtol`` GHz.  Raises :class:`MonotoneGapError` when the scan minimum sits on
    the window edge.
    """
    if not i < j:
        raise ValueError(f"branch indices must satisfy i < j, got ({i}, {j})")
    lo, hi = sorted(float(x) for x in window)
    scan = sweep(base, cal, np.linspace(lo, hi, n_grid), n_levels=j + 1)
    gaps = scan.omega(i, j)
    k = int(np.argmin(gaps))
    if k == 0 or k == n_grid - 1:
        raise MonotoneGapError(
            f"gap omega_{j}0 - omega_{i}0 is smallest at the window edge eps1={scan.grid[k]:g}; "
            "no interior minimum in [{:g}, {:g}]".format(lo, hi)
        )
    res = minimize_scalar(
        lambda e: _gap(base, cal, i, j, e),
        bounds=(scan.grid[k - 1], scan.grid[k + 1]),
        method="bounded",
        options={"xatol": xtol},
    )
    star = float(res.x)
    w = levels_at(apply_crosstalk(base, star, cal), j + 1)
    gap = float(w[j] - w[i])
    doubled = base.replace(n_cut=2 * base.n_cut)
    gap2 = _gap(doubled, cal, i, j, star)
    return Anticrossing(
        eps1_star=star,
        gap_min=gap,
        half_splitting=gap / 2,
        branches=(i, j),
        center_frequency=float((w[i] + w[j]) / 2 - w[0]),
        omega_i0=float(w[i] - w[0]),
        omega_j0=float(w[j] - w[0]),
        n_cut_shift=float(abs(gap2 - gap)),
    )


@dataclass(frozen=True)
class DressedFrequencies:
    omega_01: float
    omega_02: float
    omega_photon: float
    indices: tuple[int, int, int]
    dominance: tuple[float, float, float]

    @property
    def ambiguous(self) -> bool:
        return min(self.dominance) < DOMINANCE_THRESHOLD

    @property
    def qubit_sum(self) -> float:
        return self.omega_01 + self.omega_02


def _pick_branch(weights: np.ndarray) -> tuple[int, float]:
    excited = weights[1:]
    above = np.nonzero(excited >= DOMINANCE_THRESHOLD)[0]
    k = int(above[0]) if above.size else int(np.argmax(excited))
    return k + 1, float(excited[k])


def dressed_frequencies(
    base: DickeParams,
    cal: SweepCalibration,
    eps1: float,
    n_levels: int = DEFAULT_N_LEVELS,
) -> DressedFrequencies:
    """Transition frequencies of the dressed qubit 1, qubit 2 and photon branches.

    Each branch is the lowest excited eigenstate whose bare atomic configuration
    (eg, ge, gg respectively, summed over photon number) carries at least
    ``DOMINANCE_THRESHOLD`` of its weight.  Summing over photon number keeps the
    coherent-state dressing of the displaced sectors inside the branch.
    """
    p = apply_crosstalk(base, eps1, cal)
    w, v = np.linalg.eigh(build_h_flux(p))
    w, v = w[:n_levels], v[:, :n_levels]
    weights = atomic_weights(p, v)
    picks = [_pick_branch(weights[a]) for a in ("eg", "ge", "gg")]
    freqs = [float(w[k] - w[0]) for k, _ in picks]
    return DressedFrequencies(
        omega_01=freqs[0],
        omega_02=freqs[1],
        omega_photon=freqs[2],
        indices=tuple(k for k, _ in picks),
        dominance=tuple(d for _, d in picks),
    )


def fock_convergence(p: DickeParams, n_levels: int = 10) -> float:
    """Largest shift of the lowest ``n_levels`` eigenvalues when n_cut is doubled."""
    a = levels_at(p, n_levels)
    b = levels_at(p.replace(n_cut=2 * p.n_cut), n_levels)
    return float(np.max(np.abs(a - b)))


def reference_deviation(
    base: DickeParams,
    cal: SweepCalibration,
    grid: Sequence[float],
    n_lines: int = 6,
    min_detuning: float = 0.5,
) -> tuple[float, int]:
    """Compare full and uncoupled-reference transition lines away from crossings.

    At each grid point the sorted lines ``omega_i0`` (i = 1..n_lines) of both
    models are paired by index.  A pair counts only if its reference line is
    more than ``min_detuning`` GHz from every other reference line, which keeps
    the comparison out of anticrossing windows.  Returns the largest deviation
    (GHz) and the number of pairs compared.
    """
    full = sweep(base, cal, grid, n_levels=n_lines + 1).transitions[:, 1:]
    ref_table = sweep(base, cal, grid, n_levels=n_lines + 2, model="reference").transitions
    ref = ref_table[:, 1 : n_lines + 1]
    worst, count = 0.0, 0
    for k in range(len(full)):
        lines = ref_table[k, 1:]
        for i in range(n_lines):
            others = np.delete(lines, i)
            if np.min(np.abs(others - ref[k, i])) <= min_detuning:
                continue
            worst = max(worst, abs(full[k, i] - ref[k, i]))
            count += 1
    return worst, count


__all__ = [
    "Anticrossing",
    "DEFAULT_N_LEVELS",
    "DressedFrequencies",
    "MonotoneGapError",
    "ProjectionTable",
    "SpectrumTable",
    "SweepCalibration",
    "BASELINE_CALIBRATION",
    "apply_crosstalk",
    "atomic_weights",
    "bias_to_epsilon",
    "dressed_frequencies",
    "epsilon_to_bias",
    "find_anticrossing",
    "fock_convergence",
    "levels_at",
    "projections",
    "reference_deviation",
    "sweep",
]
