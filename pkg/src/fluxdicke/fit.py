"""Least-squares recovery of model and calibration parameters from spectral peak lists."""
from __future__ import annotations

import csv
import dataclasses
import io
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .dicke import DEFAULT_N_CUT, DickeParams, _flux_terms
from .spectrum import SweepCalibration

log = logging.getLogger(__name__)

PARAM_NAMES = (
    "omega_r",
    "g1",
    "g2",
    "delta1",
    "delta2",
    "eps2",
    "eps_coeff",
    "i_b0",
    "a_crosstalk",
    "b_plus",
    "b_minus",
)
PARAM_UNITS = {
    "omega_r": "GHz",
    "g1": "GHz",
    "g2": "GHz",
    "delta1": "GHz",
    "delta2": "GHz",
    "eps2": "GHz",
    "eps_coeff": "GHz/mA",
    "i_b0": "mA",
    "a_crosstalk": "1",
    "b_plus": "1/GHz",
    "b_minus": "1/GHz",
}
STAGE1_NAMES = PARAM_NAMES[:8]
CROSSTALK_NAMES = PARAM_NAMES[8:]

BOUNDS = {
    "omega_r": (1e-6, 20.0),
    "g1": (0.0, 20.0),
    "g2": (0.0, 20.0),
    "delta1": (1e-6, 20.0),
    "delta2": (1e-6, 20.0),
    "eps2": (-20.0, 20.0),
    "eps_coeff": (1e-6, 1e4),
    "i_b0": (-100.0, 100.0),
    "a_crosstalk": (-0.1, 0.1),
    "b_plus": (-0.01, 0.01),
    "b_minus": (-0.01, 0.01),
}
# simplex scale used when the starting value is zero
_ZERO_SCALE = {"a_crosstalk": 1e-3, "b_plus": 1e-4, "b_minus": 1e-4, "eps2": 0.1, "i_b0": 1e-3}

# omega_i0 for i = 1..6 and omega_12; ties resolve to the earlier entry
DEFAULT_LINES = ((0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (1, 2))


@dataclass(frozen=True)
class FitParams:
    omega_r: float
    g1: float
    g2: float
    delta1: float
    delta2: float
    eps2: float
    eps_coeff: float
    i_b0: float
    a_crosstalk: float = 0.0
    b_plus: float = 0.0
    b_minus: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES], dtype=float)

    @classmethod
    def from_array(cls, x) -> "FitParams":
        x = np.asarray(x, dtype=float)
        if x.shape != (len(PARAM_NAMES),):
            raise ValueError(f"expected {len(PARAM_NAMES)} values, got shape {x.shape}")
        return cls(**{n: float(v) for n, v in zip(PARAM_NAMES, x)})

    @classmethod
    def from_models(cls, p: DickeParams, cal: SweepCalibration) -> "FitParams":
        return cls(
            omega_r=p.omega_r, g1=p.g1, g2=p.g2, delta1=p.delta1, delta2=p.delta2, eps2=p.eps2,
            eps_coeff=cal.eps_coeff, i_b0=cal.i_b0, a_crosstalk=cal.a_crosstalk,
            b_plus=cal.b_plus, b_minus=cal.b_minus,
        )

    def to_models(self, n_cut: int = DEFAULT_N_CUT) -> tuple[DickeParams, SweepCalibration]:
        p = DickeParams(self.omega_r, 0.0, self.eps2, self.delta1, self.delta2, self.g1, self.g2, n_cut=n_cut)
        cal = SweepCalibration(self.a_crosstalk, self.b_plus, self.b_minus, self.eps_coeff, self.i_b0)
        return p, cal

    def replace(self, **kw) -> "FitParams":
        return dataclasses.replace(self, **kw)

    def check_bounds(self) -> None:
        for n in PARAM_NAMES:
            lo, hi = BOUNDS[n]
            v = getattr(self, n)
            if not lo <= v <= hi:
                raise ValueError(f"{n}={v:g} outside bounds [{lo:g}, {hi:g}]")


BASELINE_FIT = FitParams(
    omega_r=5.15, g1=3.33, g2=3.45, delta1=1.31, delta2=1.27, eps2=-3.22,
    eps_coeff=201.6, i_b0=0.547, a_crosstalk=-9.43e-3, b_plus=0.78e-3, b_minus=0.73e-3,
)


@dataclass(frozen=True)
class PeakData:
    """Peak positions versus bias.

    ``kind`` says whether ``bias`` holds bias currents in mA (``"i_b"``) or eps1 in
    GHz (``"eps1"``).  With ``"eps1"`` the current-to-flux map is not needed and its
    two parameters are held fixed during a fit.
    """

    bias: np.ndarray
    omega: np.ndarray
    weight: np.ndarray | None = None
    kind: str = "i_b"

    def __post_init__(self):
        b = np.asarray(self.bias, dtype=float).ravel()
        w = np.asarray(self.omega, dtype=float).ravel()
        wt = np.ones_like(w) if self.weight is None else np.asarray(self.weight, dtype=float).ravel()
        if not (len(b) == len(w) == len(wt)):
            raise ValueError("bias, omega and weight must have equal length")
        if self.kind not in ("i_b", "eps1"):
            raise ValueError(f"kind must be 'i_b' or 'eps1', got {self.kind!r}")
        if len(w) == 0:
            raise ValueError("no peak records")
        if not np.all(np.isfinite(b)) or not np.all(np.isfinite(w)):
            raise ValueError("bias and omega must be finite")
        if np.any(w <= 0):
            raise ValueError("omega_peak must be positive")
        if np.any(wt < 0) or not np.any(wt > 0):
            raise ValueError("weights must be non-negative and not all zero")
        object.__setattr__(self, "bias", b)
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "weight", wt)

    def __len__(self) -> int:
        return len(self.omega)

    def eps1(self, eps_coeff: float, i_b0: float) -> np.ndarray:
        return self.bias.copy() if self.kind == "eps1" else eps_coeff * (self.bias - i_b0)

    def with_omega(self, omega) -> "PeakData":
        return PeakData(self.bias, omega, self.weight, self.kind)

    @property
    def column(self) -> str:
        return "i_b_ma" if self.kind == "i_b" else "eps1_ghz"

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"{self.column},omega_ghz,weight\n")
        for b, w, wt in zip(self.bias, self.omega, self.weight):
            buf.write(f"{b:.12g},{w:.12g},{wt:.12g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PeakData":
        """Parse CSV with header ``i_b_ma|eps1_ghz, omega_ghz[, weight]``; ``#`` lines are skipped."""
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines:
            raise ValueError("empty peak file")
        rows = list(csv.reader(lines))
        header = [h.strip() for h in rows[0]]
        if header[0] == "i_b_ma":
            kind = "i_b"
        elif header[0] == "eps1_ghz":
            kind = "eps1"
        else:
            raise ValueError(f"first column must be i_b_ma or eps1_ghz, got {header[0]!r}")
        if len(header) < 2 or header[1] != "omega_ghz":
            raise ValueError("second column must be omega_ghz")
        has_w = len(header) > 2
        if has_w and header[2] != "weight":
            raise ValueError(f"third column must be weight, got {header[2]!r}")
        b, w, wt = [], [], []
        for lineno, r in enumerate(rows[1:], start=2):
            try:
                b.append(float(r[0]))
                w.append(float(r[1]))
                wt.append(float(r[2]) if has_w else 1.0)
            except (IndexError, ValueError) as exc:
                raise ValueError(f"peak record {lineno}: {exc}") from None
        return cls(np.array(b), np.array(w), np.array(wt), kind)

    @classmethod
    def read(cls, path) -> "PeakData":
        with open(path, encoding="utf-8") as fh:
            return cls.from_csv(fh.read())


def _model_energies(x: np.ndarray, eps1: np.ndarray, n_cut: int, n_levels: int) -> np.ndarray:
    omega_r, g1, g2, d1, d2, e2, _, _, a, bp, bm = x
    b = np.where(eps1 >= 0, bp, bm)
    wr = omega_r * (1.0 + b * eps1)
    ones = np.ones_like(eps1)
    coeffs = np.stack(
        [wr, eps1, d1 * ones, e2 + a * eps1, d2 * ones, -g1 * ones, g2 * ones, -2.0 * g1 * g2 / wr], axis=1
    )
    h = np.einsum("pk,kij->pij", coeffs, _flux_terms(int(n_cut)), optimize=True)
    return np.linalg.eigvalsh(h)[:, :n_levels]


def model_lines(
    params: FitParams, eps1, n_cut: int = DEFAULT_N_CUT, lines: Sequence[tuple[int, int]] = DEFAULT_LINES
) -> np.ndarray:
    """Transition frequencies ``E_j - E_i`` for each requested (i, j), shape (points, lines)."""
    eps1 = np.atleast_1d(np.asarray(eps1, dtype=float))
    n_levels = max(max(l) for l in lines) + 1
    e = _model_energies(params.as_array(), eps1, n_cut, n_levels)
    i = np.array([l[0] for l in lines])
    j = np.array([l[1] for l in lines])
    return e[:, j] - e[:, i]


def assign_lines(model: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Index of the nearest model line per record (first one wins on ties)."""
    return np.argmin(np.abs(model - omega[:, None]), axis=1)


class _Objective:
    def __init__(self, data: PeakData, n_cut: int, lines):
        self.data = data
        self.n_cut = int(n_cut)
        self.lines = tuple(tuple(l) for l in lines)
        self.n_levels = max(max(l) for l in self.lines) + 1
        self.li = np.array([l[0] for l in self.lines])
        self.lj = np.array([l[1] for l in self.lines])
        self.wsum = float(np.sum(data.weight))
        self.n_eval = 0
        if data.kind == "eps1":
            self.ubias, self.inverse = np.unique(data.bias, return_inverse=True)

    def residuals(self, x: np.ndarray) -> np.ndarray:
        self.n_eval += 1
        d = self.data
        if d.kind == "eps1":
            ueps, inv = self.ubias, self.inverse
        else:
            ub, inv = np.unique(d.bias, return_inverse=True)
            ueps = x[6] * (ub - x[7])
        with np.errstate(all="ignore"):
            try:
                e = _model_energies(x, ueps, self.n_cut, self.n_levels)
            except np.linalg.LinAlgError:
                return np.full(len(d), 1e3)
        m = (e[:, self.lj] - e[:, self.li])[inv]
        k = assign_lines(m, d.omega)
        r = m[np.arange(len(d)), k] - d.omega
        return np.where(np.isfinite(r), r, 1e3)

    def mse(self, x: np.ndarray) -> float:
        r = self.residuals(x)
        return float(np.sum(self.data.weight * r * r) / self.wsum)


def residual(
    params: FitParams, data: PeakData, n_cut: int = DEFAULT_N_CUT, lines: Sequence[tuple[int, int]] = DEFAULT_LINES
) -> float:
    """Weighted rms distance (GHz) from each peak to its nearest model line."""
    return math.sqrt(_Objective(data, n_cut, lines).mse(params.as_array()))


def synth_peaks(
    params: FitParams,
    grid,
    lines: Sequence[tuple[int, int]] = ((0, 1), (0, 2), (0, 3), (0, 4)),
    noise_sigma: float = 0.0,
    seed: int = 0,
    kind: str = "i_b",
    n_cut: int = DEFAULT_N_CUT,
) -> PeakData:
    """Peaks lying on the chosen model lines, optionally with Gaussian frequency noise.

    ``grid`` holds bias currents (mA) or eps1 values (GHz) according to ``kind``.
    """
    grid = np.asarray(grid, dtype=float).ravel()
    eps1 = grid if kind == "eps1" else params.eps_coeff * (grid - params.i_b0)
    m = model_lines(params, eps1, n_cut, lines)
    omega = m.ravel()
    bias = np.repeat(grid, len(lines))
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        omega = omega + rng.normal(0.0, noise_sigma, size=omega.shape)
    return PeakData(bias, omega, None, kind)


@dataclass(frozen=True)
class FitOptions:
    n_cut: int = DEFAULT_N_CUT
    lines: tuple = DEFAULT_LINES
    stages: tuple[int, ...] = (1, 2)
    max_fev: int = 6000  # per stage, summed over restarts
    restarts: int = 4
    xatol: float = 1e-7  # in units of the per-parameter simplex scale
    fatol: float = 1e-16  # GHz^2
    initial_step: float = 0.05
    seed: int = 0
    fixed: tuple[str, ...] = ()

    def __post_init__(self):
        bad = [n for n in self.fixed if n not in PARAM_NAMES]
        if bad:
            raise ValueError(f"unknown parameter(s) to fix: {bad}")
        if not set(self.stages) <= {1, 2} or not self.stages:
            raise ValueError("stages must be a non-empty subset of (1, 2)")


@dataclass(frozen=True)
class FitResult:
    params: FitParams
    residual_rms: float
    stage: str
    converged: bool
    n_fev: int
    history: tuple[float, ...]
    sensitivity: dict = field(default_factory=dict)
    free: tuple[str, ...] = ()
    previous: "FitResult | None" = None

    @property
    def monotone(self) -> bool:
        h = np.asarray(self.history)
        return bool(np.all(np.diff(h) <= 1e-15 * np.maximum(1.0, np.abs(h[:-1])))) if len(h) > 1 else True

    def to_keyvalue(self) -> str:
        out = [
            f"stage={self.stage}",
            f"converged={str(self.converged).lower()}",
            f"residual_rms_ghz={self.residual_rms:.12g}",
            f"n_fev={self.n_fev}",
        ]
        for n in PARAM_NAMES:
            out.append(f"{n}={getattr(self.params, n):.12g}")
        for n, s in self.sensitivity.items():
            out.append(f"sensitivity.{n}={s:.6g}")
        return "\n".join(out) + "\n"

    @staticmethod
    def csv_header() -> str:
        return ",".join(PARAM_NAMES + ("residual_rms_ghz", "stage", "converged"))

    def csv_row(self) -> str:
        vals = [f"{getattr(self.params, n):.12g}" for n in PARAM_NAMES]
        return ",".join(vals + [f"{self.residual_rms:.12g}", self.stage, str(self.converged).lower()])


def _scales(x0: np.ndarray, names: Sequence[str]) -> np.ndarray:
    s = []
    for n in names:
        v = abs(x0[PARAM_NAMES.index(n)])
        s.append(v if v > 0 else _ZERO_SCALE.get(n, 1.0))
    return np.array(s)


def step_sensitivity(obj: _Objective, x: np.ndarray, names: Sequence[str], rel: float = 1e-3) -> dict:
    """rms change (GHz) when each parameter moves by ``rel`` of its scale, larger side reported."""
    base = math.sqrt(obj.mse(x))
    sc = _scales(x, names)
    out = {}
    for n, s in zip(names, sc):
        k = PARAM_NAMES.index(n)
        worst = 0.0
        for sgn in (1.0, -1.0):
            xx = x.copy()
            xx[k] = np.clip(xx[k] + sgn * rel * s, *BOUNDS[n])
            worst = max(worst, abs(math.sqrt(obj.mse(xx)) - base))
        out[n] = worst
    return out


def _run_stage(obj: _Objective, x0: np.ndarray, free: Sequence[str], opts: FitOptions, rng):
    idx = np.array([PARAM_NAMES.index(n) for n in free])
    scale = _scales(x0, free)
    lo = np.array([BOUNDS[n][0] for n in free])
    hi = np.array([BOUNDS[n][1] for n in free])
    center = x0[idx].copy()

    def full(u):
        x = x0.copy()
        x[idx] = center + u * scale
        return x

    def f(u):
        return obj.mse(full(u))

    bounds = list(zip((lo - center) / scale, (hi - center) / scale))
    history: list[float] = []
    best_u = np.zeros(len(idx))
    best_f = f(best_u)
    history.append(best_f)
    used = 0
    step = opts.initial_step
    converged = False
    for attempt in range(opts.restarts + 1):
        budget = opts.max_fev - used
        if budget <= len(idx) + 1:
            break
        # random rotation of the simplex edges on restarts, seeded for reproducibility
        if attempt == 0:
            basis = np.eye(len(idx))
        else:
            basis, _ = np.linalg.qr(rng.normal(size=(len(idx), len(idx))))
        simplex = np.vstack([best_u, best_u + step * basis])
        simplex = np.clip(simplex, [b[0] for b in bounds], [b[1] for b in bounds])

        def cb(intermediate_result):
            # the simplex never accepts a worse best vertex; keep the running minimum as a check
            history.append(float(intermediate_result.fun))

        res = minimize(
            f, best_u, method="Nelder-Mead", bounds=bounds, callback=cb,
            options={"initial_simplex": simplex, "maxfev": budget, "xatol": opts.xatol,
                     "fatol": opts.fatol, "adaptive": len(idx) > 4},
        )
        used += res.nfev
        improved = best_f - res.fun
        if res.fun <= best_f:
            best_u, best_f = res.x, float(res.fun)
        log.debug("restart %d: mse=%.3e nfev=%d", attempt, best_f, res.nfev)
        if res.status == 0 and attempt > 0 and improved <= max(opts.fatol, 1e-12 * best_f):
            converged = True
            break
        step = max(step * 0.3, 100 * opts.xatol)
    return full(best_u), best_f, used, converged, history


def fit(initial: FitParams, data: PeakData, options: FitOptions | None = None) -> FitResult:
    """Two-stage simplex fit.

    Stage 1 frees the eight model and bias-map parameters with crosstalk held at
    zero; stage 2 starts from stage 1 and also frees the three crosstalk
    coefficients, which begin at their values in ``initial``.

    Returns the last stage's result; earlier stages hang off ``previous``.
    """
    opts = options or FitOptions()
    initial.check_bounds()
    obj = _Objective(data, opts.n_cut, opts.lines)
    fixed = set(opts.fixed)
    if data.kind == "eps1":
        fixed |= {"eps_coeff", "i_b0"}
    rng = np.random.default_rng(opts.seed)
    x = initial.as_array()
    result = None
    for stage in opts.stages:
        names = STAGE1_NAMES if stage == 1 else PARAM_NAMES
        free = tuple(n for n in names if n not in fixed)
        if len(data) < 3 * len(free):
            warnings.warn(f"{len(data)} records for {len(free)} free parameters; fit may be ill-posed", stacklevel=2)
        xs = x.copy()
        if stage == 1:
            xs[8:] = 0.0
        elif result is not None:
            xs[8:] = initial.as_array()[8:]
        xbest, fbest, nfev, conv, hist = _run_stage(obj, xs, free, opts, rng)
        rms_hist = tuple(math.sqrt(max(h, 0.0)) for h in hist)
        sens = step_sensitivity(obj, xbest, free)
        result = FitResult(
            params=FitParams.from_array(xbest),
            residual_rms=math.sqrt(obj.mse(xbest)),
            stage="8-param" if stage == 1 else "11-param",
            converged=conv,
            n_fev=nfev,
            history=rms_hist,
            sensitivity=sens,
            free=free,
            previous=result,
        )
        x = xbest
    return result


__all__ = [
    "BOUNDS",
    "DEFAULT_LINES",
    "FitOptions",
    "FitParams",
    "FitResult",
    "PARAM_NAMES",
    "PARAM_UNITS",
    "PeakData",
    "BASELINE_FIT",
    "assign_lines",
    "fit",
    "model_lines",
    "residual",
    "step_sensitivity",
    "synth_peaks",
]
