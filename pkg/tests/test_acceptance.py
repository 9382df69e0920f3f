"""Acceptance gate.

Each test exercises one headline guarantee end to end at its stated
tolerance, under seed 0.  Run with -v to get one pass/fail line per
guarantee.
"""
import math
import time

import numpy as np

from gptt import resource, symmetry, thermo, zoo
from gptt.core import StateVec, tensor_states
from gptt.embedding import blocks_to_vec
from gptt.spectral import diagonalize
import oracles

SEED = 0

cl3 = zoo.build_model("classical", d=3)
cl4 = zoo.build_model("classical", d=4)
q2 = zoo.build_model("quantum", n=2)
q3 = zoo.build_model("quantum", n=3)
q4 = zoo.build_model("quantum", n=4)
rebit = zoo.build_model("rebit")
dq2 = zoo.build_model("doubled_quantum", n=2)
ec22 = zoo.build_model("extended_classical", N=2, n=2)


def rand_state(m, r):
    return StateVec(m.state_sampler(m, r), m)


def test_a01_spectra_match_independent_eigensolver():
    """200 random density blocks on 2..4 levels, against plain eigvalsh,
    agreement within 1e-8 in under 5 seconds."""
    r = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(200):
        n = 2 + i % 3
        m = {2: q2, 3: q3, 4: q4}[n]
        rho = oracles.random_density(r, n)
        s = StateVec(blocks_to_vec([rho], m.structure), m)
        mine = np.asarray(diagonalize(s).eigenvalues)
        ref = oracles.spectrum(rho)
        worst = max(worst, float(np.abs(mine - ref).max()))
    elapsed = time.perf_counter() - t0
    assert worst < 1e-8
    assert elapsed < 5.0


def test_a02_invariant_state_spectrum_is_flat():
    """diagonalize(chi) = (1/d, ..., 1/d) on every builtin that
    diagonalizes, within 1e-9."""
    models = [
        cl3, cl4, zoo.build_model("classical", d=5),
        q2, q3, q4, rebit,
        zoo.build_model("real_quantum", n=3),
        dq2, zoo.build_model("doubled_quantum", n=3),
        ec22, zoo.build_model("extended_classical", N=3, n=2),
        zoo.build_model("square_bit"), zoo.build_model("diamond_bit"),
    ]
    for m in models:
        vals = np.asarray(diagonalize(m.invariant_state).eigenvalues)
        assert np.abs(vals - 1.0 / m.capacity).max() < 1e-9, m.model_id


def test_a03_unital_conversion_iff_majorization():
    """500 qutrit pairs: the synthesis verdict equals both the prefix-sum
    test and an independent doubly-stochastic LP; built channels fix chi
    and hit the target within 1e-8."""
    r = np.random.default_rng(SEED)
    yes = no = 0
    for i in range(500):
        rho = rand_state(q3, r)
        if i % 5 == 0:
            # mixing toward chi always loses in the prefix-sum order
            t = float(r.uniform(0.2, 0.9))
            sigma = StateVec(t * rho.coords + (1 - t) * q3.chi, q3)
        else:
            sigma = rand_state(q3, r)
        out = resource.build_unital_channel(rho, sigma)
        p = np.asarray(diagonalize(rho).eigenvalues)
        q = np.asarray(diagonalize(sigma).eigenvalues)
        assert (out.answer == "yes") == oracles.majorizes(p, q)
        assert (out.answer == "yes") == oracles.doubly_stochastic_exists(p, q)
        if out.answer == "yes":
            yes += 1
            M = out.channel.matrix
            assert np.abs(M @ q3.chi - q3.chi).max() < 1e-8
            assert np.abs(M @ rho.coords - sigma.coords).max() < 1e-8
        else:
            no += 1
    assert yes >= 50 and no >= 50  # both branches exercised


def test_a04_birkhoff_reconstruction():
    """100 doubly stochastic matrices (d up to 6) rebuilt within 1e-9
    from at most (d-1)^2 + 1 permutations."""
    r = np.random.default_rng(SEED)
    for i in range(100):
        d = 2 + i % 5
        D = np.zeros((d, d))
        k = int(r.integers(1, (d - 1) ** 2 + 2))
        for wj in r.dirichlet(np.ones(k)):
            D[np.arange(d), r.permutation(d)] += wj
        terms = resource.birkhoff_decompose(D)
        assert len(terms) <= (d - 1) ** 2 + 1
        R = resource.permutations_to_matrix(terms, d)
        assert np.abs(R - D).max() < 1e-9


def test_a05_doubled_qubit_separates_rare_from_unital():
    """Equal spectra, different sector weights: unital says yes, mixtures
    of reversibles cannot do it."""
    rho = StateVec(np.array([.5, .5, 0, 0, 0, 0, 0, 0]), dq2)
    sigma = StateVec(np.array([.5, 0, 0, 0, .5, 0, 0, 0]), dq2)
    for s in (rho, sigma):
        vals = np.asarray(diagonalize(s).eigenvalues)
        assert np.abs(vals - np.array([.5, .5, 0, 0])).max() < 1e-9
    assert np.abs(zoo.sector_weights(rho) - np.array([1.0, 0.0])).max() < 1e-12
    assert np.abs(zoo.sector_weights(sigma) - np.array([.5, .5])).max() < 1e-12
    assert resource.convertible(rho, sigma, "unital").answer == "yes"
    verdict = resource.convertible(rho, sigma, "rare")
    assert verdict.answer == "no"
    assert verdict.certificate is not None


def test_a06_restricted_trit_has_no_distinguishable_states():
    rt = zoo.build_model("restricted_trit")
    pure = [StateVec(v / float(rt.unit_effect @ v), rt)
            for v in rt.state_cone.generators]
    for i in range(3):
        for j in range(i + 1, 3):
            rep = symmetry.perfectly_distinguishable_search(
                rt, [pure[i], pure[j]])
            assert not rep["found"] and rep["certified_none"]
    rep = symmetry.perfectly_distinguishable_search(rt, pure)
    assert not rep["found"] and rep["certified_none"]


def test_a07_polytope_reversibility_axioms():
    square = zoo.build_model("square_bit")
    rep = resource.check_unrestricted_reversibility(square)
    assert rep["permutability"] is True
    assert rep["strong_symmetry"] is False
    diamond = zoo.build_model("diamond_bit")
    inv = symmetry.invariant_state(diamond)
    assert inv["unique"]
    assert not symmetry.is_transitive(diamond)


def test_a08_entropy_properties_across_families():
    """Renyi order-monotonicity, additivity on products, Klein
    non-negativity with its equality case, and Schur-concavity against
    the unital verdict: 300 draws per family, all within 1e-8."""
    alphas = [0.0, 0.5, 1.0, 2.0, math.inf]
    for m in (cl3, q3, rebit, dq2, ec22):
        comp = zoo.compose_systems(m, m)
        r = np.random.default_rng(SEED)
        for i in range(300):
            rho = rand_state(m, r)
            sig = rand_state(m, r)
            vals = [thermo.entropy(rho, a) for a in alphas]
            assert all(vals[k] >= vals[k + 1] - 1e-8 for k in range(4))
            joint = tensor_states(comp, rho, sig)
            assert abs(thermo.entropy(joint) - thermo.entropy(rho)
                       - thermo.entropy(sig)) < 1e-8
            rel = thermo.relative_entropy(rho, sig)
            assert rel >= 0.0
            if rel < 1e-10:
                assert np.abs(rho.coords - sig.coords).max() < 1e-5
            if i % 10 == 0:
                assert thermo.relative_entropy(rho, rho) < 1e-8
            out = resource.build_unital_channel(rho, sig)
            if out.answer == "yes":
                assert thermo.entropy(sig) >= thermo.entropy(rho) - 1e-8
                assert thermo.entropy(sig, 2.0) >= thermo.entropy(rho, 2.0) - 1e-8


def test_a09_subadditivity_and_triangle():
    """200 random joint states, half on two qubits, half on a doubled
    composite."""
    r = np.random.default_rng(SEED)
    for base in (q2, dq2):
        comp = zoo.compose_systems(base, base)
        for _ in range(100):
            ent = thermo.bipartite_entropies(rand_state(comp, r))
            sa, sb, sab = ent["marginal_0"], ent["marginal_1"], ent["joint"]
            assert sab <= sa + sb + 1e-8
            assert sab >= abs(sa - sb) - 1e-8


def test_a10_spectral_measurement_minimizes_schur_concave_stats():
    """On a 3-level system the eigenbasis readout attains the minimum of
    every audited Schur-concave statistic over 200 random fine-grained
    measurements."""
    r = np.random.default_rng(SEED)
    rho = rand_state(q3, r)
    stats = (thermo.shannon, lambda p: -float(np.sum(np.asarray(p) ** 2)))
    for f in stats:
        rep = thermo.monotone_audit(rho, f, n_random=200, rng=r)
        assert rep["spectral_attains_minimum"]
        assert not rep["violations"]
        assert min(rep["measured_values"]) >= rep["spectral_value"] - 1e-8


def test_a11_gibbs_states_and_max_entropy():
    h = np.zeros(q3.vector_dim)
    h[1], h[2] = 1.0, 2.0  # energies (0, 1, 2)
    flat = thermo.gibbs_state(q3, h, 0.0)
    assert np.abs(flat.coords - q3.chi).max() < 1e-12
    r = np.random.default_rng(SEED)
    for _ in range(20):
        e = float(r.uniform(0.05, 1.95))
        beta = thermo.beta_from_energy(q3, h, e)
        g = thermo.gibbs_state(q3, h, beta)
        assert abs(thermo.mean_energy(g, h) - e) < 1e-10
        lnz = thermo.log_partition(q3, h, beta)
        assert abs(thermo.entropy(g) - (beta * e + lnz)) < 1e-9
    rep = thermo.max_entropy_audit(q3, h, 0.8, n_samples=100,
                                   rng=np.random.default_rng(SEED))
    assert rep["identity_residual"] < 1e-9
    assert rep["shell_samples"] == 100
    assert rep["all_below"]
    assert rep["max_shell_entropy"] <= rep["entropy"] + 1e-8


def test_a12_landauer_ledger_closes():
    """100 random reversible interactions on qubit x qubit, three bath
    temperatures each: the energy identity closes to 1e-7, the bound and
    the second-law combination hold."""
    comp = zoo.compose_systems(q2, q2)
    h = np.zeros(q2.vector_dim)
    h[1] = 1.0
    r = np.random.default_rng(SEED)
    for _ in range(100):
        rho = rand_state(q2, r)
        U = comp.group.sampler(comp, r)
        for beta in (0.5, 1.0, 2.0):
            led = thermo.landauer_ledger(U, rho, h, beta, comp)
            assert led.equality_residual <= 1e-7
            assert led.bound_satisfied
            assert led.second_law_residual >= -1e-9


def test_a13_erasure_at_zero_energy_cost():
    """Erasing a maximally mixed qubit against its purifying memory moves
    no energy while the system entropy falls by ln 2."""
    demo = thermo.erasure_demo(q2.invariant_state, beta=1.0)
    assert abs(demo["delta_E_env"]) <= 1e-10
    assert abs(demo["system_entropy_before"] - math.log(2)) < 1e-9
    assert demo["system_entropy_after"] < 1e-9
    assert abs(demo["conditional_before"] + math.log(2)) < 1e-9
    assert demo["bound_satisfied"]
    assert abs(demo["assisted_bound_rhs"] + math.log(2)) < 1e-12  # kT = 1


def test_a14_invariant_states_compose():
    pairs = [(cl3, cl4), (q2, q3), (dq2, dq2)]
    for a, b in pairs:
        rep = symmetry.informational_equilibrium_check(a, b)
        assert rep["holds"]
        assert rep["residual"] <= 1e-8


def test_a15_rare_synthesis_with_verified_witnesses():
    """200 majorisation-ordered qutrit pairs: the mixture of reversibles
    hits the target within 1e-8 and every witness element is checked
    reversible (orthogonal action, unitary presentation, fixes chi)."""
    r = np.random.default_rng(SEED)
    eye = np.eye(q3.vector_dim)
    for _ in range(200):
        rho = rand_state(q3, r)
        p = np.asarray(diagonalize(rho).eigenvalues)
        D = np.zeros((3, 3))
        for wj in r.dirichlet(np.ones(4)):
            D[np.arange(3), r.permutation(3)] += wj
        q = D @ p  # majorized by p by construction
        basis = diagonalize(rand_state(q3, r)).eigenstates
        sigma = StateVec(sum(qi * b.coords for qi, b in zip(q, basis)), q3)
        out = resource.build_rare_channel(rho, sigma)
        assert out.answer == "yes"
        M = out.channel.matrix
        assert np.abs(M @ rho.coords - sigma.coords).max() < 1e-8
        wts = out.channel.witness["weights"]
        revs = out.channel.witness["reversibles"]
        assert abs(float(np.sum(wts)) - 1.0) < 1e-9
        assert np.all(wts > -1e-12)
        mix = sum(wk * ch.matrix for wk, ch in zip(wts, revs))
        assert np.abs(mix - M).max() < 1e-12
        for ch in revs:
            assert "reversible" in ch.tags
            V = ch.matrix
            assert np.abs(V.T @ V - eye).max() < 1e-8
            assert np.abs(V @ q3.chi - q3.chi).max() < 1e-10
            U = ch.kraus[0]
            assert np.abs(U.conj().T @ U - np.eye(3)).max() < 1e-10
