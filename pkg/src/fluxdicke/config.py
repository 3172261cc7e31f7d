"""Sectioned ``key = value`` run configuration.

Example::

    [model]
    omega_r = 5.15
    eps2 = -3.22

    [sweep]
    start = -6
    stop = 6
    points = 241

Blank lines and ``#`` comments are ignored.  Every key must belong to the schema
below; unknown sections or keys, duplicates and malformed values are reported
with the offending line number.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .circuit import CircuitParams, JunctionParams
from .dicke import DickeParams
from .spectrum import SweepCalibration


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "yes", "on", "1"):
        return True
    if v in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _int_list(s: str) -> tuple[int, ...]:
    return tuple(int(x) for x in s.replace(",", " ").split())


def _opt_float(s: str) -> float | None:
    return None if s.lower() == "none" else float(s)


def _str_list(s: str) -> tuple[str, ...]:
    return tuple(x for x in s.replace(",", " ").split())


def _choice(*options: str) -> Callable[[str], str]:
    def parse(s: str) -> str:
        v = s.strip().lower()
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {s!r}")
        return v

    return parse


# section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple[Callable[[str], Any], Any]]] = {
    "model": {
        "omega_r": (float, 5.15),
        "eps1": (float, 0.0),
        "eps2": (float, -3.22),
        "delta1": (float, 1.31),
        "delta2": (float, 1.27),
        "g1": (float, 3.33),
        "g2": (float, 3.45),
        "n_cut": (int, 30),
    },
    "calibration": {
        "a_crosstalk": (float, -9.43e-3),
        "b_plus": (float, 0.78e-3),
        "b_minus": (float, 0.73e-3),
        "eps_coeff": (float, 201.6),
        "i_b0": (float, 0.547),
    },
    "sweep": {
        "start": (float, -6.0),
        "stop": (float, 6.0),
        "points": (int, 241),
        "unit": (_choice("ghz", "ma"), "ghz"),
        "n_levels": (int, 8),
        "reference": (_bool, False),
        "check_fock": (_bool, True),
    },
    "anticross": {
        "i": (int, 3),
        "j": (int, 4),
        "window_lo": (float, -3.0),
        "window_hi": (float, -1.0),
        "n_grid": (int, 81),
        "xtol": (float, 1e-5),
    },
    "project": {
        "eps1": (float, -2.4),
        "states": (_int_list, (3, 4)),
        "labels": (_str_list, ("gg1", "ee0")),
        "n_levels": (int, 8),
        "tolerance": (float, 1e-9),
    },
    "oracle": {
        "eps1": (float, -1.5),
        "eps2": (float, -3.22),
        "g": (float, 3.33),
        "omega_r": (float, 5.15),
        "n_cut": (int, 60),
        "n_max": (int, 3),
        "spin_spin": (_bool, False),
        "tolerance": (float, 1e-9),
        "amplitude_tolerance": (float, 1e-6),
    },
    "fit": {
        "data": (str, ""),
        "n_cut": (int, 30),
        "stages": (_int_list, (1, 2)),
        "max_fev": (int, 6000),
        "restarts": (int, 4),
        "seed": (int, 0),
        "truth": (_choice("none", "model"), "none"),
        "tolerance": (float, 0.01),
        "compare": (_str_list, ()),
    },
    "fit_initial": {
        "omega_r": (_opt_float, None),
        "g1": (_opt_float, None),
        "g2": (_opt_float, None),
        "delta1": (_opt_float, None),
        "delta2": (_opt_float, None),
        "eps2": (_opt_float, None),
        "eps_coeff": (_opt_float, None),
        "i_b0": (_opt_float, None),
        "a_crosstalk": (_opt_float, None),
        "b_plus": (_opt_float, None),
        "b_minus": (_opt_float, None),
    },
    "circuit": {
        "e_j1": (float, 20.0),
        "e_c1": (float, 2.0),
        "alpha1": (float, 0.7),
        "beta1": (float, 2.0),
        "phi_e1": (float, 0.5),
        "e_j2": (float, 20.0),
        "e_c2": (float, 2.0),
        "alpha2": (float, 0.7),
        "beta2": (float, 2.0),
        "phi_e2": (float, 0.5),
        "e_lr": (float, 10.0),
        "omega_r": (float, 5.0),
        "n_charge": (int, 7),
        "n_levels": (int, 4),
        "check_convergence": (_bool, True),
    },
}


@dataclass(frozen=True)
class RunConfig:
    values: dict[str, dict[str, Any]]
    source: str = "<config>"
    base_dir: Path = Path(".")

    def section(self, name: str) -> dict[str, Any]:
        return self.values[name]

    @property
    def model(self) -> DickeParams:
        m = self.values["model"]
        return DickeParams(
            omega_r=m["omega_r"], eps1=m["eps1"], eps2=m["eps2"], delta1=m["delta1"],
            delta2=m["delta2"], g1=m["g1"], g2=m["g2"], n_cut=m["n_cut"],
        )

    @property
    def calibration(self) -> SweepCalibration:
        return SweepCalibration(**self.values["calibration"])

    @property
    def circuit(self) -> CircuitParams:
        c = self.values["circuit"]
        qs = tuple(
            JunctionParams(e_j=c[f"e_j{k}"], e_c=c[f"e_c{k}"], alpha=c[f"alpha{k}"], beta=c[f"beta{k}"],
                           phi_e=c[f"phi_e{k}"])
            for k in (1, 2)
        )
        return CircuitParams(qubits=qs, e_lr=c["e_lr"], omega_r=c["omega_r"], n_charge=c["n_charge"])

    def resolve_path(self, value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    def render(self) -> str:
        """Fully resolved config in the input format; stable across runs."""
        out = []
        for sec, keys in SCHEMA.items():
            out.append(f"[{sec}]")
            for k in keys:
                out.append(f"{k} = {_format(self.values[sec][k])}")
            out.append("")
        return "\n".join(out)

    def digest(self) -> str:
        return hashlib.sha256(self.render().encode("utf-8")).hexdigest()[:16]


def _format(v: Any) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, tuple):
        return ", ".join(str(x) for x in v)
    return str(v)


def defaults() -> dict[str, dict[str, Any]]:
    return {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}


def parse_config(text: str, source: str = "<config>", base_dir: Path | str = ".") -> RunConfig:
    values = defaults()
    seen: set[tuple[str, str]] = set()
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno, source)
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno, source)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, source)
        if section is None:
            raise ConfigError("key outside of any section", lineno, source)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno, source)
        if (section, key) in seen:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", lineno, source)
        seen.add((section, key))
        parser, _ = SCHEMA[section][key]
        try:
            values[section][key] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {section}.{key}: {exc}", lineno, source) from None
    cfg = RunConfig(values=values, source=source, base_dir=Path(base_dir))
    try:
        cfg.model
        cfg.calibration
        cfg.circuit
    except ValueError as exc:
        raise ConfigError(str(exc), None, source) from None
    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return parse_config("", "<defaults>")
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_config(text, str(path), path.parent)
