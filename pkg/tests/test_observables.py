import numpy as np
import pytest
from math import comb

from qpme.evolution import propagate_imag, propagate_real, spectral_decompose
from qpme.hilbert import ModelParams, build_hamiltonian
from qpme.observables import (
    charge_sector_probs,
    charge_variance,
    eigenstate_overlap_hist,
    energy_expectation,
    entanglement_asymmetry,
    partial_trace,
    symmetry_resolved_rdm,
    von_neumann_entropy,
)
from qpme.states import tilted_ferromagnet, tilted_neel

from conftest import random_state

rng = np.random.default_rng(404)


def partial_trace_oracle(psi, l, L):
    """Definition-based double loop over subsystem/environment indices."""
    da, db = 2**l, 2 ** (L - l)
    rho = np.zeros((da, da), dtype=complex)
    for a in range(da):
        for ap in range(da):
            rho[a, ap] = sum(psi[a * db + b] * np.conj(psi[ap * db + b]) for b in range(db))
    return rho


def binomial_subsystem_entropy(l, theta):
    """Shannon entropy of the binomial subsystem charge distribution."""
    pdown = np.sin(theta / 2) ** 2
    probs = np.array([comb(l, k) * pdown**k * (1 - pdown) ** (l - k) for k in range(l + 1)])
    probs = probs[probs > 0]
    return -(probs @ np.log(probs))


def test_partial_trace_against_oracle(rng):
    psi = random_state(rng, 4)
    for l in (1, 2, 3):
        rho = partial_trace(psi, l)
        assert np.abs(rho - partial_trace_oracle(psi, l, 4)).max() < 1e-12
        assert abs(np.trace(rho).real - 1) < 1e-10
        assert np.abs(rho - rho.conj().T).max() < 1e-12
        assert np.linalg.eigvalsh(rho).min() > -1e-10


def test_partial_trace_bell_and_product():
    bell = np.zeros(4, dtype=complex)
    bell[0b00] = bell[0b11] = 1 / np.sqrt(2)
    assert np.abs(partial_trace(bell, 1) - np.eye(2) / 2).max() < 1e-12
    psi = tilted_ferromagnet(5, 0.4)
    for l in range(1, 5):
        rho = partial_trace(psi, l)
        assert np.trace(rho @ rho).real == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        partial_trace(psi, 5)


def test_entropy_values():
    assert von_neumann_entropy(np.diag([1.0, 0.0]).astype(complex)) == pytest.approx(0.0, abs=1e-12)
    assert von_neumann_entropy(np.eye(4, dtype=complex) / 4) == pytest.approx(np.log(4), abs=1e-12)
    expected = -(0.75 * np.log(0.75) + 0.25 * np.log(0.25))
    assert von_neumann_entropy(np.diag([0.75, 0.25]).astype(complex)) == pytest.approx(expected, abs=1e-12)
    with pytest.raises(ValueError):
        von_neumann_entropy(np.diag([1.1, -0.1]).astype(complex))


def test_symmetry_resolved_rdm_algebra(rng):
    plus = 0.5 * np.ones((2, 2), dtype=complex)
    assert np.abs(symmetry_resolved_rdm(plus) - np.diag([0.5, 0.5])).max() < 1e-14
    psi = random_state(rng, 4)
    rho = partial_trace(psi, 2)
    resolved = symmetry_resolved_rdm(rho)
    assert np.abs(symmetry_resolved_rdm(resolved) - resolved).max() == 0.0  # idempotent
    assert np.trace(resolved) == pytest.approx(np.trace(rho))
    assert np.allclose(np.diag(resolved), np.diag(rho))
    # already block diagonal -> unchanged
    assert np.abs(symmetry_resolved_rdm(resolved) - resolved).max() == 0.0


def test_ea_zero_for_charge_eigenvectors():
    psi = tilted_neel(6, 0.0)
    for l in range(1, 6):
        assert entanglement_asymmetry(psi, l) < 1e-10
    # superposition within one charge sector is still a Q eigenvector
    psi = np.zeros(2**4, dtype=complex)
    psi[0b0101] = 0.6
    psi[0b0110] = 0.8
    for l in (1, 2, 3):
        assert abs(entanglement_asymmetry(psi, l)) < 1e-10


def test_ea_matches_binomial_oracle():
    for theta in (0.05 * np.pi, 0.2 * np.pi, 0.45 * np.pi):
        psi = tilted_ferromagnet(6, theta)
        for l in (1, 2, 4):
            assert entanglement_asymmetry(psi, l) == pytest.approx(
                binomial_subsystem_entropy(l, theta), abs=1e-9
            )


def test_ea_nonnegative_fuzz(rng):
    for _ in range(300):
        L = int(rng.integers(2, 7))
        psi = random_state(rng, L)
        for l in range(1, L):
            assert entanglement_asymmetry(psi, l) >= -1e-10


def test_energy_expectation(rng):
    p = ModelParams(L=4, gamma=0.6, mu=-0.5, fields=rng.uniform(-1, 1, 4))
    H = build_hamiltonian(p)
    sd = spectral_decompose(H)
    gs = sd.eigenvectors[:, 0].astype(complex)
    assert energy_expectation(gs, H) == pytest.approx(sd.eigenvalues[0], abs=1e-10)
    ferro = np.zeros(16, dtype=complex)
    ferro[0] = 1.0
    assert energy_expectation(ferro, H) == pytest.approx(0.5 * 4 + p.fields.sum(), abs=1e-12)
    psi = random_state(rng, 4)
    c = sd.eigenvectors.conj().T @ psi
    assert energy_expectation(psi, H) == pytest.approx(float(sd.eigenvalues @ np.abs(c) ** 2), abs=1e-10)
    with pytest.raises(ValueError):
        energy_expectation(random_state(rng, 3), H)


def test_charge_variance_cases():
    assert charge_variance(tilted_neel(6, 0.0)) == pytest.approx(0.0, abs=1e-12)
    for theta in (0.1 * np.pi, 0.3 * np.pi):
        psi = tilted_ferromagnet(5, theta)
        assert charge_variance(psi) == pytest.approx(5 * np.sin(theta) ** 2, abs=1e-10)
    basis = np.zeros(2**4, dtype=complex)
    basis[0b0011] = 1.0
    assert charge_variance(basis) == pytest.approx(0.0, abs=1e-12)


def test_charge_sector_probs(rng):
    probs = charge_sector_probs(tilted_neel(4, 0.0))
    assert probs[0] == pytest.approx(1.0)
    assert sum(probs.values()) == pytest.approx(1.0, abs=1e-12)
    # tilted ferromagnet follows the binomial law
    L, theta = 6, 0.1 * np.pi
    probs = charge_sector_probs(tilted_ferromagnet(L, theta))
    pdown = np.sin(theta / 2) ** 2
    for Q, value in probs.items():
        k = (L - Q) // 2  # number of down spins
        assert value == pytest.approx(comb(L, k) * pdown**k * (1 - pdown) ** (L - k), abs=1e-12)
    psi = random_state(rng, 5)
    assert sum(charge_sector_probs(psi).values()) == pytest.approx(1.0, abs=1e-10)


def test_variance_consistent_with_sector_probs(rng):
    for _ in range(20):
        L = int(rng.integers(2, 7))
        psi = random_state(rng, L)
        probs = charge_sector_probs(psi)
        qs = np.array(sorted(probs))
        ps = np.array([probs[q] for q in qs])
        var = (qs.astype(float) ** 2) @ ps - (qs @ ps) ** 2
        assert charge_variance(psi) == pytest.approx(var, abs=1e-10)


def test_overlap_histogram(rng):
    p = ModelParams(L=4, gamma=0.2, fields=rng.uniform(-1, 1, 4))
    sd = spectral_decompose(build_hamiltonian(p))
    n = 7
    eigstate = sd.eigenvectors[:, n].astype(complex)
    hist = eigenstate_overlap_hist(eigstate, sd, bins=10)
    assert hist.weights.sum() == pytest.approx(1.0, abs=1e-10)
    assert (hist.weights > 1e-12).sum() == 1
    # equal superposition of two eigenstates -> two half bins
    pair = (sd.eigenvectors[:, 2] + sd.eigenvectors[:, 12]) / np.sqrt(2)
    hist = eigenstate_overlap_hist(pair.astype(complex), sd, bins=60)
    occupied = hist.weights[hist.weights > 1e-12]
    assert np.allclose(occupied, [0.5, 0.5])
    psi = random_state(rng, 4)
    hist = eigenstate_overlap_hist(psi, sd, bins=16)
    assert hist.weights.sum() == pytest.approx(1.0, abs=1e-10)
    assert hist.mean_energy() == pytest.approx(energy_expectation(psi, build_hamiltonian(p)), abs=0.5)
    with pytest.raises(ValueError):
        eigenstate_overlap_hist(psi, sd, bins=np.linspace(sd.eigenvalues[0] + 0.5, sd.eigenvalues[-1], 5))


def test_ea_constant_under_symmetric_evolution_when_zero(rng):
    # a Q eigenvector stays a Q eigenvector under H_sym, so EA stays 0
    p = ModelParams(L=4, gamma=1.0, fields=rng.uniform(-1, 1, 4))
    sd = spectral_decompose(build_hamiltonian(p))
    psi = tilted_neel(4, 0.0)
    for t in (0.7, 3.0):
        out = propagate_real(psi, sd, t)
        for l in (1, 2, 3):
            assert entanglement_asymmetry(out, l) < 1e-10


def test_energy_conserved_real_nonincreasing_imag(rng):
    p = ModelParams(L=5, gamma=0.7, fields=rng.uniform(-1, 1, 5))
    H = build_hamiltonian(p)
    sd = spectral_decompose(H)
    psi = random_state(rng, 5)
    e0 = energy_expectation(psi, H)
    assert energy_expectation(propagate_real(psi, sd, 11.0), H) == pytest.approx(e0, abs=1e-10)
    last = e0
    for tau in (0.1, 0.5, 2.0, 10.0):
        e = energy_expectation(propagate_imag(psi, sd, tau), H)
        assert e <= last + 1e-9
        last = e
