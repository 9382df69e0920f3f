"""Frozen expected values for the worked examples, checked against the
independent oracles before any package code is trusted with them."""

import math

import numpy as np
import pytest

import oracles

LN2 = 0.6931471805599453
LN3 = 1.0986122886681098
LN_8_5 = 0.47000362924573563
MAXENT_QUARTER = 0.5623351446188083  # ln(3)/4 + ln(4/3)


def test_renyi2_three_quarters_one_quarter():
    # sum p^2 = 9/16 + 1/16 = 5/8; H_2 = -ln(5/8) = ln(8/5)
    assert oracles.renyi([0.75, 0.25], 2) == pytest.approx(LN_8_5, abs=1e-14)


def test_gibbs_two_level_quarter_energy():
    # energies (0, 1), mean energy 1/4 -> weights (3/4, 1/4), beta = ln 3
    w = oracles.gibbs_weights([0.0, 1.0], LN3)
    assert np.allclose(w, [0.75, 0.25], atol=1e-14)
    assert oracles.mean_energy([0.0, 1.0], LN3) == pytest.approx(0.25, abs=1e-14)


def test_maxent_value_two_level():
    # S(gibbs) = beta*E + ln Z = ln3/4 + ln(4/3)
    w = oracles.gibbs_weights([0.0, 1.0], LN3)
    assert oracles.shannon(w) == pytest.approx(MAXENT_QUARTER, abs=1e-14)
    Z = 1.0 + math.exp(-LN3)
    assert LN3 * 0.25 + math.log(Z) == pytest.approx(MAXENT_QUARTER, abs=1e-14)


def test_bell_pair_invariants():
    psi = np.zeros(4)
    psi[0] = psi[3] = 1 / math.sqrt(2)
    assert np.allclose(oracles.schmidt_coefficients(psi, 2, 2), [0.5, 0.5])
    rho = np.outer(psi, psi)
    rA = oracles.partial_trace(rho, 2, 2, 0)
    assert np.allclose(rA, np.eye(2) / 2)
    assert oracles.vn_entropy(rA) == pytest.approx(LN2, abs=1e-12)
    assert oracles.vn_entropy(rho) == pytest.approx(0.0, abs=1e-12)


def test_functional_calculus_example():
    # exp(-beta H) with H eigenvalues (0, 1), beta = ln 3 -> (1, 1/3)
    vals = np.exp(-LN3 * np.array([0.0, 1.0]))
    assert np.allclose(vals, [1.0, 1.0 / 3.0], atol=1e-14)


def test_transition_matrix_mutually_unbiased():
    # computational vs Hadamard basis on a qubit: all overlaps 1/2
    H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    T = np.abs(H) ** 2
    assert np.allclose(T, 0.5)
    assert np.allclose(T.sum(axis=0), 1) and np.allclose(T.sum(axis=1), 1)


def test_incomparable_pair():
    p = [0.6, 0.2, 0.2]
    q = [0.5, 0.5, 0.0]
    assert not oracles.majorizes(p, q)
    assert not oracles.majorizes(q, p)
    assert not oracles.doubly_stochastic_exists(p, q)
    assert not oracles.doubly_stochastic_exists(q, p)


def test_majorization_matches_doubly_stochastic_lp():
    rng = np.random.default_rng(7)
    for _ in range(40):
        p = rng.dirichlet(np.ones(4))
        q = rng.dirichlet(np.ones(4))
        assert oracles.majorizes(p, q) == oracles.doubly_stochastic_exists(p, q)


def test_relative_entropy_oracle_basics():
    rng = np.random.default_rng(3)
    rho = oracles.random_density(rng, 3)
    assert oracles.quantum_relative_entropy(rho, rho) == pytest.approx(0, abs=1e-10)
    psi = oracles.random_pure(rng, 3)
    chi = np.eye(3) / 3
    assert oracles.quantum_relative_entropy(psi, chi) == pytest.approx(
        math.log(3), abs=1e-10)
    # orthogonal pure states: infinite
    e0 = np.diag([1.0, 0.0, 0.0])
    e1 = np.diag([0.0, 1.0, 0.0])
    assert oracles.quantum_relative_entropy(e0, e1) == math.inf


def test_doubled_counterexample_spectra():
    # both states have spectrum (1/2, 1/2, 0, 0) but different sector masses
    rho_blocks = [np.eye(2) / 2, np.zeros((2, 2))]
    sig_blocks = [np.diag([0.5, 0.0]), np.diag([0.5, 0.0])]
    spec_rho = np.sort(np.concatenate([oracles.spectrum(b) for b in rho_blocks]))[::-1]
    spec_sig = np.sort(np.concatenate([oracles.spectrum(b) for b in sig_blocks]))[::-1]
    assert np.allclose(spec_rho, [0.5, 0.5, 0.0, 0.0])
    assert np.allclose(spec_rho, spec_sig)
    assert [np.trace(b).real for b in rho_blocks] == [1.0, 0.0]
    assert [np.trace(b).real for b in sig_blocks] == [0.5, 0.5]
