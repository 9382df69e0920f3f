import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gptt import resource, zoo
from gptt.core import GPTError, StateVec, UnsupportedModelError, apply_channel
from gptt.embedding import blocks_to_vec
from gptt.spectral import diagonalize
from oracles import doubly_stochastic_exists, majorizes as oracle_majorizes

rng = np.random.default_rng(17)

q3 = zoo.build_model("quantum", n=3)
cl4 = zoo.build_model("classical", d=4)
dq2 = zoo.build_model("doubled_quantum", n=2)
ec22 = zoo.build_model("extended_classical", N=2, n=2)


def rand_state(m, r=rng):
    return StateVec(m.state_sampler(m, r), m)


def random_simplex(r, d):
    return r.dirichlet(np.ones(d))


def random_ds(r, d, k=12):
    M = np.zeros((d, d))
    for _ in range(k):
        M[np.arange(d), r.permutation(d)] += 1.0 / k
    return M


class TestMajorization:
    def test_reflexive(self):
        p = [0.5, 0.3, 0.2]
        assert resource.majorizes(p, p)

    def test_uniform_is_bottom(self):
        r = np.random.default_rng(0)
        for _ in range(20):
            p = random_simplex(r, 5)
            assert resource.majorizes(p, np.full(5, 0.2))

    def test_point_mass_is_top(self):
        r = np.random.default_rng(1)
        for _ in range(20):
            p = random_simplex(r, 5)
            assert resource.majorizes([1, 0, 0, 0, 0], p)

    def test_incomparable_pair(self):
        assert not resource.majorizes([0.6, 0.2, 0.2], [0.5, 0.5, 0.0])
        assert not resource.majorizes([0.5, 0.5, 0.0], [0.6, 0.2, 0.2])

    def test_sum_mismatch(self):
        with pytest.raises(ValueError):
            resource.majorizes([0.7, 0.3], [0.5, 0.4])

    def test_padding(self):
        assert resource.majorizes([0.7, 0.3], [0.7, 0.2, 0.1])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000))
    def test_agrees_with_ds_lp(self, seed):
        r = np.random.default_rng(seed)
        d = int(r.integers(2, 6))
        p, q = random_simplex(r, d), random_simplex(r, d)
        assert resource.majorizes(p, q) == doubly_stochastic_exists(p, q)
        assert resource.majorizes(p, q) == oracle_majorizes(p, q)


class TestBirkhoff:
    @pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
    def test_round_trip_and_bound(self, d):
        r = np.random.default_rng(d)
        for _ in range(20):
            M = random_ds(r, d, k=int(r.integers(1, 30)))
            terms = resource.birkhoff_decompose(M)
            back = resource.permutations_to_matrix(terms, d)
            assert np.abs(back - M).max() < 1e-9
            assert len(terms) <= (d - 1) ** 2 + 1
            assert abs(sum(w for w, _ in terms) - 1) < 1e-9
            assert all(w > 0 for w, _ in terms)

    def test_identity(self):
        terms = resource.birkhoff_decompose(np.eye(4))
        assert len(terms) == 1 and abs(terms[0][0] - 1) < 1e-12

    def test_rejects_non_ds(self):
        with pytest.raises(ValueError):
            resource.birkhoff_decompose(np.array([[0.5, 0.5], [0.5, 0.4]]))


class TestTChain:
    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000))
    def test_maps_exactly(self, seed):
        r = np.random.default_rng(seed)
        d = int(r.integers(2, 7))
        p = np.sort(random_simplex(r, d))[::-1]
        D0 = random_ds(r, d)
        q = np.sort(D0 @ p)[::-1]
        D = resource.t_transform_chain(p, q)
        assert np.abs(D @ p - q).max() < 1e-10
        assert np.abs(D.sum(axis=0) - 1).max() < 1e-10
        assert np.abs(D.sum(axis=1) - 1).max() < 1e-10
        assert D.min() > -1e-12


class TestUnitalSynthesis:
    @pytest.mark.parametrize("model", [q3, cl4, dq2],
                             ids=lambda m: m.model_id)
    def test_channel_hits_comparable_targets(self, model):
        r = np.random.default_rng(23)
        for _ in range(8):
            rho = rand_state(model, r)
            d = diagonalize(rho)
            D0 = random_ds(r, model.capacity)
            qspec = np.sort(D0 @ np.asarray(d.eigenvalues))[::-1]
            sigma = StateVec(sum(float(w) * s.coords
                                 for w, s in zip(qspec, d.eigenstates)), model)
            out = resource.build_unital_channel(rho, sigma)
            assert out.answer == "yes"
            moved = apply_channel(out.channel, rho)
            assert np.abs(moved.coords - sigma.coords).max() < 1e-8
            chi = model.invariant_state
            fixed = apply_channel(out.channel, chi)
            assert np.abs(fixed.coords - chi.coords).max() < 1e-8

    def test_no_comes_with_prefix_certificate(self):
        d = diagonalize(rand_state(q3, np.random.default_rng(2)))
        lo = StateVec(sum(w * s.coords for w, s in
                          zip([0.5, 0.5, 0.0], d.eigenstates)), q3)
        hi = StateVec(sum(w * s.coords for w, s in
                          zip([0.6, 0.2, 0.2], d.eigenstates)), q3)
        out = resource.build_unital_channel(lo, hi)
        assert out.answer == "no"
        cert = out.certificate
        assert cert["source_prefix"] < cert["target_prefix"]

    def test_exactness_against_lp(self):
        r = np.random.default_rng(29)
        base = diagonalize(rand_state(q3, r))
        for _ in range(60):
            p = np.sort(random_simplex(r, 3))[::-1]
            q = np.sort(random_simplex(r, 3))[::-1]
            rho = StateVec(sum(float(w) * s.coords
                               for w, s in zip(p, base.eigenstates)), q3)
            sig = StateVec(sum(float(w) * s.coords
                               for w, s in zip(q, base.eigenstates)), q3)
            verdict = resource.convertible(rho, sig, "unital").answer
            assert (verdict == "yes") == doubly_stochastic_exists(p, q)


class TestRareSynthesis:
    def test_mixture_of_verified_reversibles(self):
        r = np.random.default_rng(31)
        for _ in range(6):
            rho = rand_state(q3, r)
            d = diagonalize(rho)
            qspec = np.sort(random_ds(r, 3) @ np.asarray(d.eigenvalues))[::-1]
            target_basis = diagonalize(rand_state(q3, r)).eigenstates
            sigma = StateVec(sum(float(w) * s.coords
                                 for w, s in zip(qspec, target_basis)), q3)
            out = resource.build_rare_channel(rho, sigma)
            assert out.answer == "yes"
            moved = apply_channel(out.channel, rho)
            assert np.abs(moved.coords - sigma.coords).max() < 1e-8
            w = out.channel.witness
            assert abs(float(np.sum(w["weights"])) - 1) < 1e-9
            for U in w["reversibles"]:
                assert "reversible" in U.tags
                K = U.kraus[0]
                assert np.abs(K @ K.conj().T - np.eye(K.shape[0])).max() < 1e-8

    def test_gate_on_unflagged_model(self):
        rho, sig = rand_state(dq2), rand_state(dq2)
        with pytest.raises(UnsupportedModelError, match="not sufficient"):
            resource.build_rare_channel(rho, sig)


class TestSectorVerdicts:
    def setup_method(self):
        st_ = dq2.structure
        self.rho = StateVec(blocks_to_vec(
            [np.eye(2) / 2, np.zeros((2, 2))], st_), dq2)
        self.sigma = StateVec(blocks_to_vec(
            [np.diag([0.5, 0.0]), np.diag([0.5, 0.0])], st_), dq2)
        self.swapped = StateVec(blocks_to_vec(
            [np.zeros((2, 2)), np.eye(2) / 2], st_), dq2)

    def test_counterexample_pair(self):
        assert resource.convertible(self.rho, self.sigma, "unital").answer == "yes"
        out = resource.convertible(self.rho, self.sigma, "rare")
        assert out.answer == "no"
        assert "sector" in out.certificate["reason"]

    def test_equivalence_under_sector_swap(self):
        assert resource.rare_equivalent_doubled(self.rho, self.swapped)
        assert not resource.rare_equivalent_doubled(self.rho, self.sigma)
        out = resource.convertible(self.rho, self.swapped, "rare")
        assert out.answer == "yes"
        moved = apply_channel(out.channel, self.rho)
        assert np.abs(moved.coords - self.swapped.coords).max() < 1e-9

    def test_pure_source_always_converts(self):
        r = np.random.default_rng(41)
        psi = StateVec(dq2.pure_sampler(dq2, r), dq2)
        tgt = rand_state(dq2, r)
        out = resource.convertible(psi, tgt, "rare")
        assert out.answer == "yes"
        moved = apply_channel(out.channel, psi)
        assert np.abs(moved.coords - tgt.coords).max() < 1e-8

    def test_invariant_state_always_reachable(self):
        r = np.random.default_rng(43)
        for model in (dq2, ec22):
            rho = rand_state(model, r)
            out = resource.convertible(rho, model.invariant_state, "rare")
            assert out.answer == "yes"
            moved = apply_channel(out.channel, rho)
            assert np.abs(moved.coords - model.chi).max() < 1e-8

    def test_honest_unknown(self):
        st_ = dq2.structure
        a = StateVec(blocks_to_vec(
            [np.diag([0.6, 0.1]), np.diag([0.2, 0.1])], st_), dq2)
        b = StateVec(blocks_to_vec(
            [np.diag([0.4, 0.2]), np.diag([0.25, 0.15])], st_), dq2)
        assert resource.convertible(a, b, "rare").answer == "unknown"

    def test_majorization_failure_is_no_for_rare(self):
        st_ = dq2.structure
        flat = dq2.invariant_state
        peaked = StateVec(blocks_to_vec(
            [np.diag([0.7, 0.3]), np.zeros((2, 2))], st_), dq2)
        out = resource.convertible(flat, peaked, "rare")
        assert out.answer == "no"
        assert "prefix_index" in out.certificate

    def test_noisy_sandwich(self):
        assert resource.convertible(self.rho, self.swapped, "noisy").answer == "yes"
        assert resource.convertible(self.rho, self.sigma, "noisy").answer == "unknown"
        flat = dq2.invariant_state
        st_ = dq2.structure
        peaked = StateVec(blocks_to_vec(
            [np.diag([0.7, 0.3]), np.zeros((2, 2))], st_), dq2)
        assert resource.convertible(flat, peaked, "noisy").answer == "no"


class TestAxioms:
    @pytest.mark.parametrize("kind,kwargs,expect", [
        ("quantum", dict(n=2), (True, True)),
        ("quantum", dict(n=3), (True, True)),
        ("classical", dict(d=4), (True, True)),
        ("rebit", dict(), (True, True)),
        ("doubled_quantum", dict(n=2), (False, False)),
        ("extended_classical", dict(N=2, n=2), (False, False)),
        ("extended_classical", dict(N=3, n=1), (True, True)),
        ("square_bit", dict(), (True, False)),
    ])
    def test_axiom_table(self, kind, kwargs, expect):
        m = zoo.build_model(kind, **kwargs)
        rep = resource.check_unrestricted_reversibility(m)
        assert (rep["permutability"], rep["strong_symmetry"]) == expect

    def test_doubled_counterexample_is_verified(self):
        rep = resource.check_unrestricted_reversibility(dq2)
        assert rep["counterexample_verified"]

    def test_square_witness_reported(self):
        rep = resource.check_unrestricted_reversibility(
            zoo.build_model("square_bit"))
        assert "strong_symmetry_counterexample" in rep
