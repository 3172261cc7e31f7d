"""Regenerate the bundled synthetic peak lists (baseline parameters, n_cut = 20).

    python3 configs/make_peaks.py
"""
from pathlib import Path

import numpy as np

from fluxdicke.fit import BASELINE_FIT, synth_peaks

HERE = Path(__file__).resolve().parent
N_CUT = 20
SPAN = 6.0  # GHz of eps1 on each side of the symmetry point
POINTS = 31
NOISE_SEED = 7
NOISE_SIGMA = 0.002  # GHz


def bias_grid():
    half = SPAN / BASELINE_FIT.eps_coeff
    return np.linspace(BASELINE_FIT.i_b0 - half, BASELINE_FIT.i_b0 + half, POINTS)


def make(noise_sigma=0.0):
    return synth_peaks(BASELINE_FIT, bias_grid(), noise_sigma=noise_sigma, seed=NOISE_SEED, n_cut=N_CUT)


def main():
    (HERE / "peaks_synthetic.csv").write_text(make().to_csv(), encoding="utf-8")
    (HERE / "peaks_noisy.csv").write_text(make(NOISE_SIGMA).to_csv(), encoding="utf-8")


if __name__ == "__main__":
    main()
