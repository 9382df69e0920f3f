"""Pure-state decompositions and everything built on top of them.

A diagonalization writes a state as a convex combination of jointly
perfectly distinguishable pure states.  Matrix models get it from block
eigendecompositions; generic models get the peeling construction, which
repeatedly strips the largest pure-state weight and must reach a pure
remainder within the model's capacity.  Both routes report eigenvalues in
descending order, each paired with an identifying effect when the model
supplies one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .core import (
    DiagonalizationError,
    EffectVec,
    GPTError,
    ModelSpec,
    Observable,
    StateVec,
    UnsupportedModelError,
    _kron_to_coords,
    as_coords,
    pairing,
)
from .embedding import block_eigh, pure_block_vec, vec_to_blocks
from . import zoo

EIG_GROUP_TOL = 1e-8


def _canonical_phase(v: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    for c in v:
        if abs(c) > tol:
            return v * (abs(c) / c)
    return v


def _lex_key(x: np.ndarray):
    return tuple(np.round(x, 10))


@dataclass(frozen=True, eq=False)
class Diagonalization:
    """Spectrum and eigenbasis of a state, padded to a maximal basis."""

    model: ModelSpec
    eigenvalues: np.ndarray
    eigenstates: tuple
    dagger_effects: Optional[tuple]

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def reduced(self):
        """Distinct eigenvalues with multiplicities and group projectors."""
        groups = []
        i = 0
        ev = self.eigenvalues
        while i < len(ev):
            j = i
            while j + 1 < len(ev) and ev[i] - ev[j + 1] < EIG_GROUP_TOL:
                j += 1
            proj = sum(s.coords for s in self.eigenstates[i: j + 1])
            groups.append((float(ev[i: j + 1].mean()), j - i + 1, proj))
            i = j + 1
        return groups

    def reconstruct(self) -> np.ndarray:
        return sum(p * s.coords for p, s in zip(self.eigenvalues, self.eigenstates))


@dataclass(frozen=True, eq=False)
class PeelStep:
    p_star: float
    eigenstate: StateVec
    remainder: Optional[StateVec]


def max_eigenvalue_peel(state: StateVec) -> PeelStep:
    """Largest weight of a pure state inside the given state.

    Matrix models read it off a block eigendecomposition; ray-cone models
    maximize, over pure states, the weight that can be removed while
    staying inside the cone.
    """
    model = state.model
    x = state.coords
    if model.structure is not None:
        best = None
        for b, val, vec in block_eigh(x, model.structure):
            cand = (val, b, _canonical_phase(vec))
            if best is None or cand[0] > best[0] + 1e-14:
                best = cand
            elif abs(cand[0] - best[0]) <= 1e-14:
                cb = pure_block_vec(model.structure, cand[1], cand[2])
                bb = pure_block_vec(model.structure, best[1], best[2])
                if _lex_key(cb) < _lex_key(bb):
                    best = cand
        p_star, b, vec = best
        alpha = StateVec(pure_block_vec(model.structure, b, vec), model)
    else:
        V = model.state_cone.generators
        u = model.unit_effect
        verts = V / (V @ u)[:, None]
        G = model.state_cone.generators
        k = G.shape[0]
        best = None
        for v in sorted(verts, key=_lex_key):
            # max p with x - p v in the state cone
            A_eq = np.hstack([G.T, v[:, None]])
            res = linprog(c=np.concatenate([np.zeros(k), [-1.0]]),
                          A_eq=A_eq, b_eq=x,
                          bounds=[(0.0, None)] * k + [(0.0, None)],
                          method="highs")
            if res.success:
                p = float(res.x[-1])
                if best is None or p > best[0] + 1e-12:
                    best = (p, v)
        if best is None:
            raise DiagonalizationError("no pure component found", residue=1.0)
        p_star, v = best
        alpha = StateVec(v, model)
    if p_star >= 1.0 - 1e-11:
        return PeelStep(1.0, alpha, None)
    sigma = StateVec((x - p_star * alpha.coords) / (1.0 - p_star), model)
    return PeelStep(float(p_star), alpha, sigma)


def _complete_matrix_basis(model: ModelSpec, used: list) -> list:
    """Pure states spanning the orthocomplement of the used eigenvectors."""
    st = model.structure
    out = []
    for b, n in enumerate(st.dims):
        P = np.eye(n, dtype=complex if st.field == "C" else float)
        for (bb, vec) in used:
            if bb == b:
                P = P - np.outer(vec, vec.conj())
        w, V = np.linalg.eigh(P)
        for i in range(n):
            if w[i] > 0.5:
                out.append(StateVec(
                    pure_block_vec(st, b, _canonical_phase(V[:, i])), model))
    return out


def _complete_polytope_basis(model: ModelSpec, used: list) -> list:
    verts = model.state_cone.generators
    u = model.unit_effect
    verts = verts / (verts @ u)[:, None]
    current = [s.coords for s in used]
    out = []
    for v in sorted(verts, key=_lex_key):
        if len(current) >= model.capacity:
            break
        if any(np.abs(v - c).max() < 1e-9 for c in current):
            continue
        eff = zoo._ray_distinguishing_effects(
            model.effect_cone.generators, u, current + [v])
        if eff is not None:
            current.append(v)
            out.append(StateVec(v, model))
    return out


def _support_vectors(model: ModelSpec, states) -> list:
    """(block, vector) of each pure state; only valid for matrix models."""
    st = model.structure
    out = []
    for s in states:
        found = None
        for B, b in zip(vec_to_blocks(s.coords, st), range(st.block_count)):
            w, V = np.linalg.eigh(B)
            if w[-1] > 0.5:
                found = (b, V[:, -1])
        out.append(found)
    return out


def diagonalize(state: StateVec, method: str = "auto") -> Diagonalization:
    """Decompose a state into perfectly distinguishable pure states.

    method 'fast' uses per-block eigendecomposition (matrix models only);
    'peel' strips maximal pure weights one at a time and works on any
    model whose state actually admits such a decomposition.  Failures
    raise DiagonalizationError carrying the undecomposed residue.
    """
    model = state.model
    if method == "auto":
        method = "fast" if model.structure is not None else "peel"
    if method == "fast":
        if model.structure is None:
            raise UnsupportedModelError(
                f"{model.model_id} has no block eigendecomposition")
        entries = []
        for b, val, vec in block_eigh(state.coords, model.structure):
            vec = _canonical_phase(vec)
            coords = pure_block_vec(model.structure, b, vec)
            entries.append((max(val, 0.0), coords))
        entries.sort(key=lambda e: (-round(e[0], 12), _lex_key(e[1])))
        eigenstates = tuple(StateVec(c, model) for _, c in entries)
        values = np.array([v for v, _ in entries])
    else:
        values_l, eigenstates_l = [], []
        cur, weight = state, 1.0
        done = False
        for _ in range(model.capacity):
            step = max_eigenvalue_peel(cur)
            values_l.append(step.p_star * weight)
            eigenstates_l.append(step.eigenstate)
            if step.remainder is None:
                done = True
                break
            weight *= (1.0 - step.p_star)
            cur = step.remainder
        if not done:
            raise DiagonalizationError(
                f"state of {model.model_id} admits no decomposition into "
                f"{model.capacity} perfectly distinguishable pure states",
                residue=weight,
                partial=(np.asarray(values_l), tuple(eigenstates_l)),
            )
        if len(eigenstates_l) < model.capacity:
            if model.structure is not None:
                used = _support_vectors(model, eigenstates_l)
                extra = _complete_matrix_basis(model, used)
            else:
                extra = _complete_polytope_basis(model, eigenstates_l)
            eigenstates_l.extend(extra)
            values_l.extend([0.0] * len(extra))
        if len(eigenstates_l) != model.capacity:
            raise DiagonalizationError(
                "could not complete the eigenbasis to a maximal set",
                residue=0.0)
        order = sorted(range(len(values_l)),
                       key=lambda i: (-round(values_l[i], 12),
                                      _lex_key(eigenstates_l[i].coords)))
        values = np.array([values_l[i] for i in order])
        eigenstates = tuple(eigenstates_l[i] for i in order)
    if model.structure is not None:
        daggers = tuple(EffectVec(s.coords, model) for s in eigenstates)
    else:
        daggers = None
    return Diagonalization(model, values, eigenstates, daggers)


# ---------------------------------------------------------------------------
# dagger and functional calculus


def dagger(state: StateVec) -> EffectVec:
    """The effect certain on the given state and vanishing on its complement.

    In the self-dual embedding used by all matrix models it shares the
    state's coordinates.
    """
    if state.model.structure is None:
        raise UnsupportedModelError(
            f"{state.model.model_id} has no dagger correspondence")
    return EffectVec(state.coords, state.model)


def dagger_extend(diag: Diagonalization, values) -> np.ndarray:
    """Coordinates of sum_i values_i (identifying effect of eigenstate i)."""
    values = np.asarray(values, dtype=float)
    if values.shape != (len(diag.eigenstates),):
        raise ValueError("one value per eigenstate required")
    return sum(v * s.coords for v, s in zip(values, diag.eigenstates))


def functional_calculus(model: ModelSpec, x, fn) -> np.ndarray:
    """Apply fn to the spectrum of a block-Hermitian vector.

    Raises GPTError when fn produces a non-finite value (for instance a
    logarithm evaluated at zero).
    """
    if model.structure is None:
        raise UnsupportedModelError(
            f"{model.model_id} has no functional calculus")
    x = as_coords(x)
    st = model.structure
    out_blocks = []
    for B in vec_to_blocks(x, st):
        w, V = np.linalg.eigh(B)
        try:
            fw = np.array([fn(v) for v in w], dtype=float)
        except ValueError as exc:
            raise GPTError(f"functional calculus failed on the spectrum: {exc}")
        if not np.all(np.isfinite(fw)):
            raise GPTError("functional calculus produced a non-finite value")
        out_blocks.append((V * fw) @ V.conj().T)
    from .embedding import blocks_to_vec

    return blocks_to_vec(out_blocks, st)


def transition_matrix(diag_from: Diagonalization,
                      diag_to: Diagonalization) -> np.ndarray:
    """T[i, j] = identifying effect of target state i on source state j.

    For two maximal bases of the same model this matrix is doubly
    stochastic.
    """
    if diag_to.dagger_effects is None:
        raise UnsupportedModelError("target basis has no identifying effects")
    d = len(diag_to.dagger_effects)
    T = np.empty((d, len(diag_from.eigenstates)))
    for i, eff in enumerate(diag_to.dagger_effects):
        for j, s in enumerate(diag_from.eigenstates):
            T[i, j] = pairing(eff, s)
    return np.clip(T, 0.0, None)


# ---------------------------------------------------------------------------
# bipartite pure states


def schmidt_coefficients(state: StateVec, tol: float = 1e-8) -> np.ndarray:
    """Squared Schmidt weights of a pure bipartite state, descending.

    These are the shared nonvanishing marginal spectra.
    """
    model = state.model
    if model.composite is None:
        raise UnsupportedModelError("needs a composite-model state")
    from .core import _block_to_kron

    M = _block_to_kron(model, state.coords)
    w, V = np.linalg.eigh(M)
    if w[-1] < 1.0 - tol:
        raise GPTError("Schmidt weights need a pure state "
                       f"(largest weight {w[-1]:.6f})")
    psi = V[:, -1]
    mA, mB = model.composite.factors
    C = psi.reshape(mA.structure.hilbert_dim, mB.structure.hilbert_dim)
    s = np.linalg.svd(C, compute_uv=False)
    return np.sort(s * s)[::-1]


def purify(state: StateVec):
    """Pure bipartite extension of a state over a second copy of its model.

    Returns (composite model, pure composite state) with first marginal
    equal to the input.  Classical and polytope models admit none.
    """
    model = state.model
    if model.structure is None or model.kind == "classical":
        raise UnsupportedModelError(
            f"{model.model_id} does not admit purification")
    comp = zoo.compose_systems(model, model)
    st = model.structure
    N = st.block_count
    offsB = st.hilbert_offsets()
    diag = diagonalize(state)
    sup = _support_vectors(model, diag.eigenstates)
    dH = st.hilbert_dim
    psi = np.zeros(dH * dH, dtype=complex if st.field == "C" else float)
    counters = [0] * N
    offsA = st.hilbert_offsets()
    for p, (b, vec) in zip(diag.eigenvalues, sup):
        if p <= 1e-14:
            continue
        l = (-b) % max(N, 1)
        r = counters[b]
        counters[b] += 1
        b_index = offsB[l] + r
        amp = math.sqrt(p)
        for i, c in enumerate(vec):
            psi[(offsA[b] + i) * dH + b_index] += amp * c
    rho = np.outer(psi, psi.conj())
    coords = _kron_to_coords(comp, rho)
    return comp, StateVec(coords, comp)
