"""Entropies, equilibrium states, and energy bookkeeping for erasure.

All entropies use natural logarithms; Boltzmann's constant defaults to 1,
so kT = 1/beta.  Everything here routes through the diagonalization
machinery, which keeps the formulas meaningful beyond quantum models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .core import (
    EffectVec,
    GPTError,
    ModelSpec,
    Observable,
    StateVec,
    UnsupportedModelError,
    apply_channel,
    lift_channel,
    marginal,
    pairing,
    tensor_states,
)
from .spectral import dagger, diagonalize, functional_calculus, transition_matrix
from . import zoo


@dataclass(frozen=True)
class ThermoConfig:
    boltzmann_k: float = 1.0

    def kT(self, beta: float) -> float:
        if beta == 0:
            return math.inf
        return self.boltzmann_k / beta


DEFAULT_THERMO = ThermoConfig()


# ---------------------------------------------------------------------------
# entropies


def _entropy_of_distribution(p: np.ndarray, alpha: float) -> float:
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    total = p.sum()
    if total <= 0:
        raise ValueError("empty distribution")
    p = p / total
    support = p[p > 1e-12]
    if alpha < 0:
        raise ValueError("order must be nonnegative")
    if alpha == 0:
        return math.log(len(support))
    if alpha == 1:
        return float(-(support * np.log(support)).sum())
    if math.isinf(alpha):
        return float(-math.log(support.max()))
    return float(math.log((support ** alpha).sum()) / (1.0 - alpha))


def entropy(state: StateVec, alpha: float = 1.0) -> float:
    """Entropy of the spectrum; alpha picks the Renyi order (1 = Shannon)."""
    return _entropy_of_distribution(diagonalize(state).eigenvalues, alpha)


def relative_entropy(rho: StateVec, sigma: StateVec,
                     tol: float = 1e-10) -> float:
    """Divergence of rho from sigma via the cross-basis overlap matrix.

    Infinite when rho assigns weight outside sigma's support.
    """
    dr = diagonalize(rho)
    ds = diagonalize(sigma)
    # T[i, j] = weight of rho-eigenstate j on sigma-eigenstate i
    T = transition_matrix(dr, ds)
    p = np.clip(dr.eigenvalues, 0.0, None)
    q = np.clip(ds.eigenvalues, 0.0, None)
    total = 0.0
    for j, pj in enumerate(p):
        if pj <= 1e-12:
            continue
        total += pj * math.log(pj)
        for i, qi in enumerate(q):
            w = T[i, j]
            if w <= tol:
                continue
            if qi <= 1e-12:
                return math.inf
            total -= pj * w * math.log(qi)
    return max(total, 0.0)


def bipartite_entropies(comp_state: StateVec) -> dict:
    """Joint, marginal, mutual, and conditional entropies of a composite."""
    sA = entropy(marginal(comp_state, 0))
    sB = entropy(marginal(comp_state, 1))
    sAB = entropy(comp_state)
    return {
        "joint": sAB,
        "marginal_0": sA,
        "marginal_1": sB,
        "mutual": sA + sB - sAB,
        "conditional_0_given_1": sAB - sB,
        "conditional_1_given_0": sAB - sA,
    }


# ---------------------------------------------------------------------------
# measurement monotones


def measurement_distribution(state: StateVec, effects,
                             check_completeness: bool = True) -> np.ndarray:
    coords = [e.coords if isinstance(e, EffectVec) else np.asarray(e, float)
              for e in effects]
    if check_completeness:
        total = sum(coords)
        if np.abs(total - state.model.unit_effect).max() > 1e-8:
            raise GPTError("effects do not sum to the unit")
    p = np.array([float(c @ state.coords) for c in coords])
    return np.clip(p, 0.0, None)


def _merge_proportional(effects, probs):
    """Sum the probabilities of effects that are scalar multiples of each
    other: they are the same outcome read off more than once."""
    coords = [e.coords if isinstance(e, EffectVec) else np.asarray(e, float)
              for e in effects]
    groups: list = []
    out: list = []
    for c, p in zip(coords, probs):
        norm = np.abs(c).max()
        placed = False
        for gi, rep in enumerate(groups):
            scale = norm / np.abs(rep).max()
            if scale > 0 and np.abs(c - scale * rep).max() <= 1e-10 * max(1, norm):
                out[gi] += p
                placed = True
                break
        if not placed:
            groups.append(c)
            out.append(p)
    return np.asarray(out)


def monotone_audit(state: StateVec, f: Callable[[np.ndarray], float],
                   n_random: int = 20, rng=None,
                   extra_povms: Optional[list] = None) -> dict:
    """Check that the eigenbasis measurement minimizes a Schur-concave
    statistic over complete fine-grained measurements.

    Random competing measurements are dagger bases of reversibly rotated
    maximal sets; proportional effects are merged before evaluating f.
    """
    model = state.model
    rng = np.random.default_rng(0) if rng is None else rng
    diag = diagonalize(state)
    p_spec = np.clip(diag.eigenvalues, 0.0, None)
    base_val = f(p_spec)
    competitors = []
    canonical = zoo.pure_maximal_set(model)
    for _ in range(n_random):
        U = model.group.sampler(model, rng)
        basis = [apply_channel(U, s) for s in canonical]
        effs = [dagger(s) for s in basis]
        probs = measurement_distribution(state, effs)
        competitors.append(_merge_proportional(effs, probs))
    if extra_povms:
        for povm in extra_povms:
            probs = measurement_distribution(state, povm)
            competitors.append(_merge_proportional(povm, probs))
    vals = [f(c) for c in competitors]
    violations = [v for v in vals if v < base_val - 1e-8]
    return {
        "spectral_value": base_val,
        "measured_values": vals,
        "minimum": min(vals + [base_val]),
        "spectral_attains_minimum": len(violations) == 0,
        "violations": violations,
    }


def shannon(p) -> float:
    return _entropy_of_distribution(p, 1.0)


# ---------------------------------------------------------------------------
# equilibrium states


def _energy_levels(model: ModelSpec, hamiltonian) -> np.ndarray:
    if isinstance(hamiltonian, Observable):
        hamiltonian = hamiltonian.coords
    return np.asarray(hamiltonian, dtype=float)


def gibbs_state(model: ModelSpec, hamiltonian, beta: float) -> StateVec:
    """Equilibrium state exp(-beta H)/Z in the energy eigenbasis.

    The weights are stabilized against overflow; beta of +-inf selects the
    uniform mixture on the extremal energy eigenspace.
    """
    if model.structure is None:
        raise UnsupportedModelError(
            "equilibrium construction needs an eigenbasis calculus")
    h = _energy_levels(model, hamiltonian)
    if math.isinf(beta):
        ext = _spectrum_of_levels(model, h)
        target = ext.min() if beta > 0 else ext.max()
        x = functional_calculus(
            model, h, lambda e: 1.0 if abs(e - target) <= 1e-12 else 0.0)
        z = float(model.unit_effect @ x)
        return StateVec(x / z, model)
    e0 = float(_spectrum_of_levels(model, h).min())
    x = functional_calculus(model, h, lambda e: math.exp(-beta * (e - e0)))
    z = float(model.unit_effect @ x)
    return StateVec(x / z, model)


def _spectrum_of_levels(model: ModelSpec, h: np.ndarray) -> np.ndarray:
    from .embedding import vec_to_blocks

    vals = []
    for B in vec_to_blocks(np.asarray(h, dtype=float), model.structure):
        vals.extend(np.linalg.eigvalsh(B))
    return np.asarray(vals)


def mean_energy(state: StateVec, hamiltonian) -> float:
    h = _energy_levels(state.model, hamiltonian)
    return float(h @ state.coords)


def log_partition(model: ModelSpec, hamiltonian, beta: float) -> float:
    levels = _spectrum_of_levels(model, _energy_levels(model, hamiltonian))
    return float(logsumexp(-beta * levels))


def beta_from_energy(model: ModelSpec, hamiltonian, energy: float,
                     tol: float = 1e-10) -> float:
    """Inverse temperature whose equilibrium state has the given mean
    energy; +-inf at the spectrum edges."""
    levels = _spectrum_of_levels(model, _energy_levels(model, hamiltonian))
    lo, hi = float(levels.min()), float(levels.max())
    if energy < lo - 1e-9 or energy > hi + 1e-9:
        raise ValueError(f"energy {energy} outside the reachable band "
                         f"[{lo}, {hi}]")
    if abs(hi - lo) <= 1e-12:
        return 0.0
    if energy <= lo + 1e-12:
        return math.inf
    if energy >= hi - 1e-12:
        return -math.inf

    def gap(beta):
        ref = lo if beta >= 0 else hi
        w = np.exp(-beta * (levels - ref))
        w /= w.sum()
        return float(w @ levels) - energy

    b = 1.0
    while gap(-b) * gap(b) > 0:
        b *= 2.0
        if b > 1e8:
            raise GPTError("no bracketing inverse temperature found")
    beta = brentq(gap, -b, b, xtol=1e-14, rtol=8.9e-16, maxiter=200)
    if abs(gap(beta)) > tol:
        raise GPTError(f"energy residual {gap(beta):.2e} above tolerance")
    return float(beta)


def max_entropy_audit(model: ModelSpec, hamiltonian, energy: float,
                      n_samples: int = 0, rng=None) -> dict:
    """Verify the equilibrium state maximizes entropy on its energy shell.

    Checks the identity S = beta*E + log Z, and optionally compares against
    sampled states brought onto the shell by a closed-form two-point mixture.
    """
    beta = beta_from_energy(model, hamiltonian, energy)
    gamma = gibbs_state(model, hamiltonian, beta)
    s_gamma = entropy(gamma)
    if math.isinf(beta):
        identity_residual = math.nan
    else:
        lnz = log_partition(model, hamiltonian, beta)
        identity_residual = abs(s_gamma - (beta * energy + lnz))
    report = {
        "beta": beta,
        "gibbs": gamma,
        "entropy": s_gamma,
        "identity_residual": identity_residual,
        "shell_samples": 0,
        "max_shell_entropy": -math.inf,
        "all_below": True,
    }
    if n_samples:
        rng = np.random.default_rng(0) if rng is None else rng
        h = _energy_levels(model, hamiltonian)
        lows, highs = [], []
        tries = 0
        while (len(lows) < n_samples or len(highs) < n_samples) and tries < 50 * n_samples:
            tries += 1
            s = StateVec(model.state_sampler(model, rng), model)
            (lows if mean_energy(s, h) <= energy else highs).append(s)
        best = -math.inf
        count = 0
        for a, b_ in zip(lows[:n_samples], highs[:n_samples]):
            ea, eb = mean_energy(a, h), mean_energy(b_, h)
            if abs(eb - ea) <= 1e-14:
                continue
            w = (eb - energy) / (eb - ea)
            mix = StateVec(w * a.coords + (1 - w) * b_.coords, model)
            count += 1
            s_mix = entropy(mix)
            best = max(best, s_mix)
            if s_mix > s_gamma + 1e-8:
                report["all_below"] = False
        report["shell_samples"] = count
        report["max_shell_entropy"] = best
    return report


# ---------------------------------------------------------------------------
# erasure bookkeeping


@dataclass(frozen=True)
class ThermoLedger:
    delta_E_env: float
    entropy_drop_system: float
    mutual_term: float
    relent_term: float
    kT: float
    equality_residual: float
    bound_satisfied: bool
    second_law_residual: float
    details: dict = field(default_factory=dict)

    @property
    def bound_rhs(self) -> float:
        return self.kT * self.entropy_drop_system


def landauer_ledger(joint_channel, rho_S: StateVec, env_hamiltonian,
                    beta: float, comp: ModelSpec,
                    config: ThermoConfig = DEFAULT_THERMO) -> ThermoLedger:
    """Account for the energy pushed into a thermal environment.

    The environment starts in equilibrium at the given inverse temperature;
    the joint channel acts on system x environment.  For reversible joint
    dynamics the dumped energy splits exactly into the system's entropy
    drop, the forged correlations, and the environment's displacement from
    equilibrium, each weighted by kT.
    """
    if comp.composite is None or len(comp.composite.factors) != 2:
        raise GPTError("a two-part composite is required")
    model_E = comp.composite.factors[1]
    h = _energy_levels(model_E, env_hamiltonian)
    gamma = gibbs_state(model_E, h, beta)
    joint_in = tensor_states(comp, rho_S, gamma)
    joint_out = apply_channel(joint_channel, joint_in)
    out_S = marginal(joint_out, 0)
    out_E = marginal(joint_out, 1)

    dE_env = mean_energy(out_E, h) - mean_energy(gamma, h)
    s_in = entropy(rho_S)
    s_out = entropy(out_S)
    drop = s_in - s_out
    mutual = entropy(out_S) + entropy(out_E) - entropy(joint_out)
    relent = relative_entropy(out_E, gamma)
    kT = config.kT(beta)

    if math.isinf(relent) or math.isinf(kT):
        residual = math.nan
    else:
        residual = abs(dE_env - kT * (drop + mutual + relent))
    bound_ok = (dE_env >= kT * drop - 1e-7) if not math.isinf(kT) else True
    second_law = (s_out - s_in) + (entropy(out_E) - entropy(gamma))
    return ThermoLedger(
        delta_E_env=dE_env,
        entropy_drop_system=drop,
        mutual_term=mutual,
        relent_term=relent,
        kT=kT,
        equality_residual=residual,
        bound_satisfied=bool(bound_ok),
        second_law_residual=second_law,
        details={
            "S_system_in": s_in, "S_system_out": s_out,
            "S_env_out": entropy(out_E), "S_env_in": entropy(gamma),
            "joint_entropy_out": entropy(joint_out),
            "joint_entropy_in": entropy(joint_in),
        },
    )


def erasure_demo(rho_S: StateVec, beta: float,
                 env_model: Optional[ModelSpec] = None,
                 env_hamiltonian=None,
                 config: ThermoConfig = DEFAULT_THERMO) -> dict:
    """Erase a mixed state at zero energy cost using a memory that holds
    its purification.

    A reversible acting on system+memory alone sends the purifying state
    to a fixed pure product; the environment is a spectator, so no energy
    moves while the system's entropy falls to zero.  The memory pays: the
    conditional entropy of the system given the memory starts negative at
    minus the system entropy, and that credit funds the erasure.
    """
    model_S = rho_S.model
    s_rho = entropy(rho_S)
    if s_rho <= 1e-10:
        raise GPTError("input is already pure; nothing to erase")
    from .spectral import purify

    comp_SM, psi = purify(rho_S)
    model_M = comp_SM.composite.factors[1]

    # fixed pure product target inside the same composite sector
    basis_S = zoo.pure_maximal_set(model_S)
    basis_M = zoo.pure_maximal_set(model_M)
    target = tensor_states(comp_SM, basis_S[0], basis_M[0])
    U_SM = zoo.reversible_sending(comp_SM, psi, target)

    if env_model is None:
        env_model = model_M
    if env_hamiltonian is None:
        energies = np.arange(env_model.capacity, dtype=float)
        h = np.zeros(env_model.vector_dim)
        for k, s in enumerate(zoo.pure_maximal_set(env_model)):
            h += energies[k] * dagger(s).coords
        env_hamiltonian = h

    triple = zoo.compose_systems(comp_SM, env_model)
    lifted = lift_channel(triple, U_SM, 0)
    ledger = landauer_ledger(lifted, psi, env_hamiltonian, beta, triple,
                             config)

    before = bipartite_entropies(psi)
    out_SM = apply_channel(U_SM, psi)
    after = bipartite_entropies(out_SM)
    kT = config.kT(beta)
    return {
        "ledger": ledger,
        "delta_E_env": ledger.delta_E_env,
        "system_entropy_before": s_rho,
        "system_entropy_after": after["marginal_0"],
        "conditional_before": before["conditional_0_given_1"],
        "conditional_after": after["conditional_0_given_1"],
        "memory_entropy_before": before["marginal_1"],
        "memory_entropy_after": after["marginal_1"],
        "memory_not_degraded": after["marginal_1"] <= before["marginal_1"] + 1e-9,
        "assisted_bound_rhs": (-kT * s_rho) if not math.isinf(kT) else -math.inf,
        "bound_satisfied": ledger.delta_E_env >= (
            -kT * s_rho - 1e-9 if not math.isinf(kT) else -math.inf),
    }
