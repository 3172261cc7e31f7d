import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluxdicke.circuit import (
    DEMO_CIRCUIT,
    JunctionParams,
    build_qubit_hamiltonian,
    charge_operators,
    coupling_elements,
    interaction_operator,
    interaction_terms,
    mass_matrix,
    multilevel_hamiltonian,
    qubit_levels,
    qubit_spectrum,
    reduction_to_dicke,
    two_level_reduce,
)
from fluxdicke.dicke import build_h_flux
from fluxdicke.qop import hermiticity_defect

SMALL = DEMO_CIRCUIT.replace(n_charge=5)


def test_param_validation():
    with pytest.raises(ValueError):
        JunctionParams(e_j=0.0, e_c=1.0, alpha=0.7, beta=2.0)
    with pytest.raises(ValueError):
        JunctionParams(e_j=1.0, e_c=1.0, alpha=-0.1, beta=2.0)
    with pytest.raises(ValueError):
        DEMO_CIRCUIT.replace(e_lr=0.0)
    with pytest.raises(ValueError):
        DEMO_CIRCUIT.replace(n_charge=0)
    with pytest.raises(IndexError):
        DEMO_CIRCUIT.qubit(3)
    assert DEMO_CIRCUIT.with_flux(2, 0.51).qubit(2).phi_e == 0.51
    assert DEMO_CIRCUIT.with_flux(2, 0.51).qubit(1).phi_e == 0.5


def test_mass_matrix():
    m = mass_matrix(0.7, 2.0)
    np.testing.assert_allclose(m, m.T)
    assert m[0, 0] == pytest.approx(2.7) and m[1, 1] == pytest.approx(1.7) and m[0, 1] == pytest.approx(0.7)
    assert np.all(np.linalg.eigvalsh(m) > 0)


def test_charge_operators():
    ops = charge_operators(4)
    d = 9
    assert ops["n"].shape == (d, d)
    # e^{i phi} raises the charge by one
    e = ops["exp_iphi"]
    v = np.zeros(d)
    v[4] = 1.0
    assert np.argmax(e @ v) == 5
    np.testing.assert_allclose(ops["phi"], ops["phi"].conj().T)
    np.testing.assert_allclose(np.diag(ops["phi2"]), np.pi**2 / 3)
    # phi^2 of the periodic sawtooth is not the square of the truncated phi matrix, but is close on low charges
    assert abs((ops["phi"] @ ops["phi"])[4, 4] - ops["phi2"][4, 4]) < 0.5


def test_hamiltonian_hermitian():
    h = build_qubit_hamiltonian(DEMO_CIRCUIT.replace(n_charge=3), 1, phi_e=0.47)
    asym, scale = hermiticity_defect(h)
    assert asym <= 1e-12 * scale
    assert h.shape == (343, 343)


def test_real_basis_preserves_spectrum():
    p = DEMO_CIRCUIT.replace(n_charge=3)
    h = build_qubit_hamiltonian(p, 1, phi_e=0.53)
    full = np.linalg.eigvalsh(h)[:4]
    np.testing.assert_allclose(qubit_levels(p, 1, 4, phi_e=0.53), full, atol=1e-9)


@settings(max_examples=6, deadline=None)
@given(st.floats(0.0, 0.05))
def test_flux_reflection_symmetry(d):
    a = qubit_levels(SMALL, 1, 4, phi_e=0.5 + d)
    b = qubit_levels(SMALL, 1, 4, phi_e=0.5 - d)
    np.testing.assert_allclose(a, b, atol=1e-8)


@settings(max_examples=4, deadline=None)
@given(st.floats(0.4, 0.6), st.integers(-2, 2))
def test_flux_periodicity(fe, k):
    np.testing.assert_allclose(
        qubit_levels(SMALL, 1, 3, phi_e=fe), qubit_levels(SMALL, 1, 3, phi_e=fe + k), atol=1e-8
    )


def test_symmetry_point_reduction():
    r = two_level_reduce(SMALL, 1, n_levels=3, phi_e=0.5)
    assert r.eps == 0.0
    assert r.delta == pytest.approx(r.levels[1] - r.levels[0])
    assert abs(r.g_matrix[0, 0]) < 1e-9 and abs(r.g_matrix[1, 1]) < 1e-9
    assert r.g_matrix[0, 1] > 0
    assert r.g == pytest.approx(r.g_matrix[0, 1])
    np.testing.assert_allclose(r.g_matrix, r.g_matrix.T, atol=1e-10 * np.abs(r.g_matrix).max())


def test_coupling_phase_convention():
    spec = qubit_spectrum(SMALL, 1, 4, phi_e=0.52)
    g = coupling_elements(spec, SMALL.omega_r, SMALL.e_lr)
    assert np.all(g[0, 1:] >= 0)
    # longitudinal part appears away from the symmetry point
    assert abs(g[0, 0] - g[1, 1]) > 0.1


def test_eps_sign_follows_flux():
    lo = two_level_reduce(SMALL, 1, 2, phi_e=0.49)
    hi = two_level_reduce(SMALL, 1, 2, phi_e=0.51)
    assert lo.eps == pytest.approx(-hi.eps)
    assert hi.eps != 0.0
    assert hi.ip_phi0 > 0


def test_two_level_gap_within_one_percent():
    for fe in (0.502, 0.51, 0.52):
        r = two_level_reduce(SMALL, 1, 2, phi_e=fe)
        assert abs(r.eps) <= r.delta
        assert math.hypot(r.eps, r.delta) == pytest.approx(r.levels[1] - r.levels[0], rel=0.01)


def test_demo_gap_frozen():
    # frozen from the charge-basis diagonalization at n_charge 7; 9 agrees to 1e-5 GHz
    r = two_level_reduce(DEMO_CIRCUIT, 1, 2)
    assert r.delta == pytest.approx(2.70822, abs=1e-4)


def test_interaction_terms():
    t = interaction_terms(3.0)
    assert t == {("b1", "r"): -3.0, ("b2", "r"): 3.0, ("b1", "b2"): -6.0}


def test_interaction_operator_matches_expansion():
    # E_Lr (phi_cr + phi_b1 - phi_b2)^2 minus the single-coordinate squares, with phi_r = -2 phi_cr
    rng = np.random.default_rng(0)
    mats = []
    for n in (2, 3, 2):
        a = rng.normal(size=(n, n))
        mats.append(a + a.T)
    b1, b2, r = mats
    e = 1.7
    i1, i2, ir = (np.eye(len(m)) for m in mats)
    K = lambda x, y, z: np.kron(np.kron(x, y), z)
    cr = -0.5 * K(i1, i2, r)
    s = cr + K(b1, i2, ir) - K(i1, b2, ir)
    squares = cr @ cr + K(b1 @ b1, i2, ir) + K(i1, b2 @ b2, ir)
    np.testing.assert_allclose(interaction_operator(e, b1, b2, r), e * (s @ s - squares), atol=1e-12)
    # compared with -E(b1 r - b2 r + b1 b2) the qubit-qubit term carries an extra factor 2
    lit = -e * (K(b1, i2, r) - K(i1, b2, r) + K(b1, b2, ir))
    np.testing.assert_allclose(interaction_operator(e, b1, b2, r) - lit, -e * K(b1, b2, ir), atol=1e-12)


def test_truncation_valid_at_weak_coupling():
    p = DEMO_CIRCUIT.replace(e_lr=0.5, n_charge=5).with_flux(1, 0.505).with_flux(2, 0.497)
    r1 = two_level_reduce(p, 1, 6)
    r2 = two_level_reduce(p, 2, 6)
    assert max(r1.g, r2.g) / p.omega_r < 0.1
    n_cut = 12
    em = np.linalg.eigvalsh(multilevel_hamiltonian(r1, r2, p.omega_r, n_cut))
    ef = np.linalg.eigvalsh(build_h_flux(reduction_to_dicke(r1, r2, p.omega_r, n_cut)))
    tm, tf = em - em[0], ef - ef[0]
    # lines below the third qubit level exist in both models
    cutoff = min(r1.levels[2] - r1.levels[0], r2.levels[2] - r2.levels[0]) - 0.5
    keep = tm[1:][tm[1:] < cutoff]
    assert len(keep) >= 4
    np.testing.assert_allclose(tf[1 : 1 + len(keep)], keep, rtol=0.05)


def test_multilevel_reduces_to_two_level_model():
    # two atom levels with purely transverse coupling is the flux-form model in its eigenbasis
    p = DEMO_CIRCUIT.replace(n_charge=3)
    r = two_level_reduce(p, 1, 2)
    h = multilevel_hamiltonian(r, r, 5.0, 6)
    d = reduction_to_dicke(r, r, 5.0, 6)
    np.testing.assert_allclose(np.linalg.eigvalsh(h) - np.linalg.eigvalsh(h)[0],
                               np.linalg.eigvalsh(build_h_flux(d)) - np.linalg.eigvalsh(build_h_flux(d))[0],
                               atol=1e-9)
