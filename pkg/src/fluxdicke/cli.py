"""Command-line entry point: ``fluxdicke <command> --config FILE --out DIR``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import circuit, fit, longitudinal, spectrum
from .config import ConfigError, RunConfig, load_config
from .dicke import coupling_ratios

log = logging.getLogger("fluxdicke")

FOCK_TOL = 1e-4  # GHz


def _fmt(x) -> str:
    return f"{x:.12g}"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header: list[str], rows, cfg: RunConfig, command: str) -> str:
    lines = [f"# fluxdicke {command} config_digest={cfg.digest()}", ",".join(header)]
    for r in rows:
        lines.append(",".join(v if isinstance(v, str) else _fmt(v) for v in r))
    return "\n".join(lines) + "\n"


class _Run:
    """Collects outputs of one command and writes them at the end."""

    def __init__(self, cfg: RunConfig, out: Path, command: str):
        self.cfg, self.out, self.command = cfg, out, command
        self.summary: list[str] = []
        self.ok = True

    def say(self, line: str) -> None:
        self.summary.append(line)
        print(line)

    def check(self, name: str, passed: bool, detail: str) -> None:
        self.say(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        self.ok &= bool(passed)

    def write(self, name: str, text: str) -> None:
        _atomic_write(self.out / name, text)

    def finish(self) -> int:
        self.write(f"{self.command}_config.txt", self.cfg.render())
        head = f"# fluxdicke {self.command} config_digest={self.cfg.digest()}\n"
        self.write(f"{self.command}_summary.txt", head + "\n".join(self.summary) + "\n")
        return 0 if self.ok else 1


def _grid(cfg: RunConfig) -> tuple[np.ndarray, np.ndarray]:
    s = cfg.section("sweep")
    if s["points"] < 1:
        raise ConfigError("sweep.points must be at least 1", None, cfg.source)
    raw = np.linspace(s["start"], s["stop"], s["points"])
    cal = cfg.calibration
    if s["unit"] == "ma":
        return spectrum.bias_to_epsilon(np.atleast_1d(raw), cal), np.atleast_1d(raw)
    return raw, spectrum.epsilon_to_bias(raw, cal)


def cmd_sweep(cfg: RunConfig, run: _Run, threads: int | None) -> None:
    s = cfg.section("sweep")
    eps1, i_b = _grid(cfg)
    base, cal = cfg.model, cfg.calibration
    n = s["n_levels"]
    header = ["eps1_ghz", "i_b_ma"] + [f"omega_{k}0_ghz" for k in range(1, n)]
    for model in ("full", "reference") if s["reference"] else ("full",):
        table = spectrum.sweep(base, cal, eps1, n_levels=n, model=model, workers=threads)
        rows = [[e, b, *t[1:]] for e, b, t in zip(eps1, i_b, table.transitions)]
        name = "sweep.csv" if model == "full" else "sweep_reference.csv"
        run.write(name, _csv(header, rows, cfg, "sweep"))
        run.say(f"{model} model: {len(eps1)} points, {n} levels -> {name}")
    if s["reference"]:
        worst, count = spectrum.reference_deviation(base, cal, eps1, n_lines=min(6, n - 1))
        run.say(f"reference deviation away from crossings: {worst * 1e3:.3f} MHz over {count} line pairs")
    if s["check_fock"]:
        probes = sorted({float(eps1[0]), float(eps1[len(eps1) // 2]), float(eps1[-1])})
        shift = max(spectrum.fock_convergence(spectrum.apply_crosstalk(base, e, cal), n) for e in probes)
        run.check("fock", shift < FOCK_TOL, f"doubling n_cut moves levels by {shift:.2e} GHz (limit {FOCK_TOL:g})")


def cmd_anticross(cfg: RunConfig, run: _Run) -> None:
    a = cfg.section("anticross")
    base, cal = cfg.model, cfg.calibration
    r1, r2 = coupling_ratios(base)
    run.say(f"g1/omega_r = {r1:.4f}")
    run.say(f"g2/omega_r = {r2:.4f}")
    ac = spectrum.find_anticrossing(
        base, cal, a["i"], a["j"], (a["window_lo"], a["window_hi"]), a["n_grid"], a["xtol"]
    )
    df = spectrum.dressed_frequencies(base, cal, ac.eps1_star)
    run.say(f"eps1_star = {ac.eps1_star:.6f} GHz")
    run.say(f"half_splitting = {ac.half_splitting * 1e3:.3f} MHz")
    run.say(f"center_frequency = {ac.center_frequency:.6f} GHz")
    run.say(f"omega_01 + omega_02 = {df.qubit_sum:.6f} GHz ({df.omega_01:.6f} + {df.omega_02:.6f})")
    run.check("n_cut", ac.converged, f"gap shift on doubling n_cut {ac.n_cut_shift:.2e} GHz")
    if df.ambiguous:
        run.say(f"warning: dressed branch weights {df.dominance} below threshold")
    header = ["eps1_star_ghz", "half_splitting_ghz", "gap_ghz", "center_ghz", f"omega_{ac.branches[0]}0_ghz",
              f"omega_{ac.branches[1]}0_ghz", "omega_01_ghz", "omega_02_ghz", "n_cut_shift_ghz"]
    row = [ac.eps1_star, ac.half_splitting, ac.gap_min, ac.center_frequency, ac.omega_i0, ac.omega_j0,
           df.omega_01, df.omega_02, ac.n_cut_shift]
    run.write("anticross.csv", _csv(header, [row], cfg, "anticross"))


def cmd_project(cfg: RunConfig, run: _Run, threads: int | None) -> None:
    pr = cfg.section("project")
    base, cal = cfg.model, cfg.calibration
    eps1, _ = _grid(cfg)
    states, labels = pr["states"], pr["labels"]
    table = spectrum.sweep(base, cal, eps1, n_levels=pr["n_levels"], keep_vectors=True, workers=threads)
    proj = spectrum.projections(table, labels, states)
    header = ["eps1_ghz"] + [f"P_{lab}^({s})" for s in states for lab in labels]
    rows = [[e, *proj.values[k].ravel()] for k, e in enumerate(eps1)]
    run.write("project.csv", _csv(header, rows, cfg, "project"))

    one = spectrum.sweep(base, cal, [pr["eps1"]], n_levels=pr["n_levels"], keep_vectors=True)
    p1 = spectrum.projections(one, labels, states)
    for s in states:
        parts = ", ".join(f"P_{lab}^({s}) = {p1.get(s, lab)[0]:.4f}" for lab in labels)
        run.say(f"eps1 = {pr['eps1']:g} GHz: {parts}")
    defect = float(max(np.max(np.abs(proj.completeness - 1)), np.max(np.abs(p1.completeness - 1))))
    run.check("completeness", defect <= pr["tolerance"], f"max |sum_j P_j - 1| = {defect:.2e}")


def cmd_oracle(cfg: RunConfig, run: _Run) -> None:
    o = cfg.section("oracle")
    e1, e2, g, wr, nc = o["eps1"], o["eps2"], o["g"], o["omega_r"], o["n_cut"]
    ss = o["spin_spin"]
    n_keep = 4 * (o["n_max"] + 1)
    analytic = longitudinal.analytic_spectrum(e1, e2, g, wr, nc // 2, ss)[:n_keep]
    h = longitudinal.longitudinal_hamiltonian(e1, e2, g, wr, nc, ss)
    numeric = np.linalg.eigvalsh(h)[:n_keep]
    err = float(np.max(np.abs(analytic - numeric)))
    run.check("analytic = numeric", err <= o["tolerance"], f"max |dE| = {err:.2e} GHz over {n_keep} levels")
    rows = []
    worst_a = 0.0
    for sec in longitudinal.sectors(e1, e2, g, wr, ss):
        gs = longitudinal.numeric_sector_ground(e1, e2, g, wr, sec.m1, sec.m2, nc, ss)
        worst_a = max(worst_a, abs(gs.mean_a - sec.coherent_amplitude))
        rows.append([sec.atoms, str(sec.M), sec.energy_offset, gs.energy, sec.coherent_amplitude, gs.mean_a])
        run.say(f"sector {sec.atoms}: M = {sec.M:+d}, <a> = {gs.mean_a:+.6f} (analytic {sec.coherent_amplitude:+.6f})")
    run.check("coherent amplitude", worst_a <= o["amplitude_tolerance"], f"max |<a> + M g/wr| = {worst_a:.2e}")
    header = ["atoms", "M", "energy_analytic_ghz", "energy_numeric_ghz", "mean_a_analytic", "mean_a_numeric"]
    run.write("oracle.csv", _csv(header, rows, cfg, "oracle"))
    for s1 in (-1, 1):
        desc = "; ".join(f"M={r['M']:+d}: {r['atoms']},{r['photon']}" for r in longitudinal.sector_table(s1))
        run.say(f"sectors for sgn(eps1)={s1:+d}, sgn(eps2)=-1: {desc}")


def _initial_fit_params(cfg: RunConfig) -> fit.FitParams:
    truth = fit.FitParams.from_models(cfg.model, cfg.calibration)
    over = {k: v for k, v in cfg.section("fit_initial").items() if v is not None}
    return truth.replace(**over)


def cmd_fit(cfg: RunConfig, run: _Run, seed: int | None) -> None:
    f = cfg.section("fit")
    if not f["data"]:
        raise ConfigError("fit.data must name a peak CSV file", None, cfg.source)
    data = fit.PeakData.read(cfg.resolve_path(f["data"]))
    opts = fit.FitOptions(
        n_cut=f["n_cut"], stages=f["stages"], max_fev=f["max_fev"], restarts=f["restarts"],
        seed=f["seed"] if seed is None else seed,
    )
    initial = _initial_fit_params(cfg)
    run.say(f"{len(data)} peak records from {f['data']}")
    res = fit.fit(initial, data, opts)
    stages = []
    r = res
    while r is not None:
        stages.append(r)
        r = r.previous
    stages.reverse()
    for st in stages:
        run.say(f"stage {st.stage}: rms = {st.residual_rms * 1e3:.4f} MHz after {st.n_fev} evaluations")
    run.check("optimizer", res.converged, "simplex restarts stopped improving" if res.converged else "budget exhausted")
    run.check("monotone", all(st.monotone for st in stages), "best objective never increased")
    run.write("fit_result.txt", res.to_keyvalue())
    run.write("fit_result.csv", _csv(fit.FitResult.csv_header().split(","),
                                     [st.csv_row().split(",") for st in stages], cfg, "fit"))
    if f["truth"] == "model":
        truth = fit.FitParams.from_models(cfg.model, cfg.calibration)
        names = f["compare"] or fit.PARAM_NAMES
        unknown = [n for n in names if n not in fit.PARAM_NAMES]
        if unknown:
            raise ConfigError(f"fit.compare names unknown parameters {unknown}", None, cfg.source)
        rows, worst = [], 0.0
        for n in names:
            t, v = getattr(truth, n), getattr(res.params, n)
            rel = abs(v - t) / abs(t) if t != 0 else abs(v)
            worst = max(worst, rel)
            rows.append([n, t, v, rel])
            run.say(f"  {n:12s} truth {t:<12.6g} fit {v:<12.6g} rel {rel:.2e}")
        run.write("fit_compare.csv", _csv(["param", "truth", "fit", "rel_error"], rows, cfg, "fit"))
        run.check("recovery", worst <= f["tolerance"], f"worst relative error {worst:.2e} (limit {f['tolerance']:g})")


def cmd_quantize(cfg: RunConfig, run: _Run) -> None:
    c = cfg.section("circuit")
    p = cfg.circuit
    reds = []
    rows = []
    for k in (1, 2):
        try:
            r = circuit.two_level_reduce(p, k, c["n_levels"], check_convergence=c["check_convergence"])
        except RuntimeError as exc:
            run.check(f"qubit {k} charge cutoff", False, str(exc))
            return
        reds.append(r)
        if r.converged is not None:
            run.check(f"qubit {k} charge cutoff", r.converged, f"n_charge+2 shifts levels by {r.convergence_shift:.2e} GHz")
        run.say(f"qubit {k}: phi_e = {r.phi_e:g}, eps = {r.eps:.6f}, delta = {r.delta:.6f}, g = {r.g:.6f} GHz, "
                f"I_p Phi0 = {r.ip_phi0:.6f} GHz")
        rows.append([str(k), r.phi_e, r.eps, r.delta, r.g, r.ip_phi0, *(r.levels - r.levels[0])])
    header = ["qubit", "phi_e", "eps_ghz", "delta_ghz", "g_ghz", "ip_phi0_ghz"] + [
        f"omega_{i}_ghz" for i in range(len(reds[0].levels))
    ]
    run.write("quantize.csv", _csv(header, rows, cfg, "quantize"))
    d = circuit.reduction_to_dicke(reds[0], reds[1], p.omega_r)
    run.say(f"two-level model: omega_r={d.omega_r:g} eps1={d.eps1:.6g} eps2={d.eps2:.6g} delta1={d.delta1:.6g} "
            f"delta2={d.delta2:.6g} g1={d.g1:.6g} g2={d.g2:.6g}")


COMMANDS = ("sweep", "anticross", "project", "oracle", "fit", "quantize")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fluxdicke", description="Two flux qubits coupled to an LC resonator.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="run configuration (defaults used when omitted)")
    ap.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
    ap.add_argument("--threads", type=int, default=None, help="worker threads for grid sweeps")
    ap.add_argument("--seed", type=int, default=None, help="override the fit seed")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
        run = _Run(cfg, args.out, args.command)
        if args.command == "sweep":
            cmd_sweep(cfg, run, args.threads)
        elif args.command == "anticross":
            cmd_anticross(cfg, run)
        elif args.command == "project":
            cmd_project(cfg, run, args.threads)
        elif args.command == "oracle":
            cmd_oracle(cfg, run)
        elif args.command == "fit":
            cmd_fit(cfg, run, args.seed)
        else:
            cmd_quantize(cfg, run)
        return run.finish()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
