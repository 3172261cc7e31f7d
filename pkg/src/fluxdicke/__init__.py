"""Spectra of two flux qubits coupled to an LC resonator in the ultrastrong regime."""
from .dicke import (
    BASELINE,
    DickeParams,
    build_h_dicke,
    build_h_flux,
    build_h_reference,
    coupling_ratios,
    mixed_angle_params,
    reference_params,
    renormalized_gap,
)
from .fit import BASELINE_FIT, FitOptions, FitParams, FitResult, PeakData, residual, synth_peaks
from .spectrum import (
    BASELINE_CALIBRATION,
    SweepCalibration,
    dressed_frequencies,
    find_anticrossing,
    projections,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "DickeParams",
    "FitOptions",
    "FitParams",
    "FitResult",
    "PeakData",
    "SweepCalibration",
    "BASELINE",
    "BASELINE_CALIBRATION",
    "BASELINE_FIT",
    "build_h_dicke",
    "build_h_flux",
    "build_h_reference",
    "coupling_ratios",
    "dressed_frequencies",
    "find_anticrossing",
    "mixed_angle_params",
    "projections",
    "reference_params",
    "renormalized_gap",
    "residual",
    "sweep",
    "synth_peaks",
]
