"""Builtin model families and composite-system construction.

Matrix families (states = block-Hermitian matrices): classical, quantum,
rebit, doubled quantum, extended classical.  Polytope families (states =
convex polytopes given by vertices): square bit, restricted trit, diamond
bit.  Composites exist for matrix families only; sectorized families
compose by grouping sector pairs by residue, which makes the composite
dimension exceed the product of the factors' dimensions.
"""

from __future__ import annotations

import json

import numpy as np

from .core import (
    ChannelMap,
    CompositeInfo,
    ConeSpec,
    EffectVec,
    GPTError,
    GroupSpec,
    ModelCompatibilityError,
    ModelFlags,
    ModelSpec,
    StateVec,
    UnsupportedModelError,
    cone_membership,
)
from .embedding import (
    BlockStructure,
    blocks_to_vec,
    conjugation_matrix,
    pure_block_vec,
    vec_to_blocks,
)
from scipy.optimize import linprog
import dataclasses


# ---------------------------------------------------------------------------
# samplers


def _ginibre_block(rng: np.random.Generator, n: int, field: str) -> np.ndarray:
    G = rng.normal(size=(n, n))
    if field == "C":
        G = G + 1j * rng.normal(size=(n, n))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def _haar_unitary(rng: np.random.Generator, n: int, field: str) -> np.ndarray:
    Z = rng.normal(size=(n, n))
    if field == "C":
        Z = Z + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    ph = d / np.abs(d)
    return Q * ph


def _matrix_state_sampler(model: ModelSpec, rng: np.random.Generator) -> np.ndarray:
    st = model.structure
    w = rng.dirichlet(np.ones(st.block_count))
    blocks = [w[b] * _ginibre_block(rng, n, st.field)
              for b, n in enumerate(st.dims)]
    return blocks_to_vec(blocks, st)


def _matrix_pure_sampler(model: ModelSpec, rng: np.random.Generator) -> np.ndarray:
    st = model.structure
    probs = np.asarray(st.dims, dtype=float) / st.hilbert_dim
    b = int(rng.choice(st.block_count, p=probs))
    n = st.dims[b]
    psi = rng.normal(size=n)
    if st.field == "C":
        psi = psi + 1j * rng.normal(size=n)
    return pure_block_vec(st, b, psi)


def _polytope_state_sampler(model: ModelSpec, rng: np.random.Generator) -> np.ndarray:
    V = model.state_cone.generators
    w = rng.dirichlet(np.ones(V.shape[0]))
    x = V.T @ w
    return x / float(model.unit_effect @ x)


def _polytope_pure_sampler(model: ModelSpec, rng: np.random.Generator) -> np.ndarray:
    V = model.state_cone.generators
    v = V[int(rng.integers(V.shape[0]))]
    return v / float(model.unit_effect @ v)


# ---------------------------------------------------------------------------
# group machinery


def close_group(generators, cap: int = 10_000, tol: float = 1e-9):
    """BFS closure of (matrix, kraus-or-None) pairs under composition."""

    def key(M):
        return np.round(M / tol).astype(np.int64).tobytes()

    gens = [(np.asarray(M, dtype=float), K) for M, K in generators]
    dim = gens[0][0].shape[0]
    eye = np.eye(dim)
    have_kraus = all(K is not None for _, K in gens)
    ident = (eye, np.eye(gens[0][1].shape[0]) if have_kraus else None)
    elements = {key(eye): ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for M, K in frontier:
            for G, KG in gens:
                M2 = G @ M
                k2 = key(M2)
                if k2 in elements:
                    continue
                K2 = KG @ K if (K is not None and KG is not None) else None
                elements[k2] = (M2, K2)
                nxt.append((M2, K2))
                if len(elements) > cap:
                    raise GPTError(f"group closure exceeded {cap} elements")
        frontier = nxt
    return list(elements.values())


def _finite_group_sampler(model: ModelSpec, rng: np.random.Generator) -> ChannelMap:
    elems = _closure_cache(model)
    M, K = elems[int(rng.integers(len(elems)))]
    return model.make_reversible(M, kraus=None if K is None else [K])


_CLOSURES: dict = {}


def _closure_cache(model: ModelSpec):
    cached = _CLOSURES.get(model.model_id)
    if cached is None:
        cached = close_group([(M, K) for M, K in model.group.generators])
        _CLOSURES[model.model_id] = cached
    return cached


def _sector_perm_kraus(dims, perm) -> np.ndarray:
    """Total-Hilbert permutation sending sector j onto sector perm[j]."""
    offs = []
    acc = 0
    for n in dims:
        offs.append(acc)
        acc += n
    dH = acc
    K = np.zeros((dH, dH))
    for j, n in enumerate(dims):
        t = perm[j]
        if dims[t] != n:
            raise ValueError("sector permutation must preserve dimensions")
        K[offs[t]: offs[t] + n, offs[j]: offs[j] + n] = np.eye(n)
    return K


def _block_unitary_kraus(dims, unitaries) -> np.ndarray:
    from scipy.linalg import block_diag

    return block_diag(*[np.asarray(U) for U in unitaries])


def _matrix_group_sampler(model: ModelSpec, rng: np.random.Generator) -> ChannelMap:
    st = model.structure
    Us = [_haar_unitary(rng, n, st.field) for n in st.dims]
    K = _block_unitary_kraus(st.dims, Us)
    if model.flags.sectorized and st.block_count > 1:
        perm = rng.permutation(st.block_count)
        K = _sector_perm_kraus(st.dims, perm) @ K
    M = conjugation_matrix([K], st)
    return model.make_reversible(M, kraus=[K])


# ---------------------------------------------------------------------------
# distinguishability search


def _support_projector(x: np.ndarray, structure: BlockStructure, tol=1e-9):
    from scipy.linalg import block_diag

    projs = []
    for B in vec_to_blocks(x, structure):
        w, V = np.linalg.eigh(B)
        keep = V[:, w > tol]
        projs.append(keep @ keep.conj().T)
    return block_diag(*projs)


def _ray_distinguishing_effects(G: np.ndarray, u: np.ndarray, xs: list):
    """LP feasibility for a distinguishing measurement over ray generators."""
    G = np.asarray(G, dtype=float)
    u = np.asarray(u, dtype=float)
    m = len(xs)
    k = G.shape[0]
    D = G.shape[1]
    # variables: W[i, :] >= 0 with effect_i = G^T W[i]
    nvar = m * k
    A_rows, b_vals = [], []
    for j, x in enumerate(xs):
        gx = G @ x
        for i in range(m):
            row = np.zeros(nvar)
            row[i * k: (i + 1) * k] = gx
            A_rows.append(row)
            b_vals.append(1.0 if i == j else 0.0)
    for c in range(D):
        row = np.zeros(nvar)
        for i in range(m):
            row[i * k: (i + 1) * k] = G[:, c]
        A_rows.append(row)
        b_vals.append(u[c])
    res = linprog(c=np.zeros(nvar), A_eq=np.asarray(A_rows),
                  b_eq=np.asarray(b_vals), bounds=[(0.0, None)] * nvar,
                  method="highs")
    if not res.success:
        return None
    W = res.x.reshape(m, k)
    return [G.T @ W[i] for i in range(m)]


def distinguishing_effects(model: ModelSpec, states, tol: float = 1e-9):
    """Effects perfectly distinguishing the given states, or None.

    Matrix models: exists iff the supports are pairwise orthogonal, and the
    effects are support projectors (remainder folded into the first).
    Ray-cone models: feasibility LP over effect-cone generators; an
    infeasible LP certifies that no distinguishing measurement exists.
    """
    xs = [np.asarray(s.coords if isinstance(s, StateVec) else s, dtype=float)
          for s in states]
    m = len(xs)
    if m == 0:
        raise ValueError("need at least one state")
    if model.structure is not None:
        st = model.structure
        projs = [_support_projector(x, st, tol) for x in xs]
        for i in range(m):
            for j in range(i + 1, m):
                if np.abs(projs[i] @ projs[j]).max() > 1e-7:
                    return None
        from .embedding import total_to_vec

        rest = np.eye(st.hilbert_dim) - sum(projs)
        effects = []
        for i, P in enumerate(projs):
            Q = P + rest if i == 0 else P
            effects.append(EffectVec(total_to_vec(Q, st), model))
        return effects
    raw = _ray_distinguishing_effects(model.effect_cone.generators,
                                      model.unit_effect, xs)
    if raw is None:
        return None
    return [EffectVec(f, model) for f in raw]


def _polytope_capacity(vertices, effect_gens, u, dim) -> tuple:
    """Largest jointly distinguishable vertex subset (exhaustive, small sets)."""
    from itertools import combinations

    u = np.asarray(u, dtype=float)
    verts = [np.asarray(v, dtype=float) / float(u @ v) for v in vertices]
    for size in range(len(verts), 1, -1):
        for combo in combinations(range(len(verts)), size):
            eff = _ray_distinguishing_effects(effect_gens, u,
                                              [verts[i] for i in combo])
            if eff is not None:
                return ([verts[i] for i in combo], eff)
    return ([verts[0]], None)


# ---------------------------------------------------------------------------
# builders


def _matrix_model(kind: str, params: dict, model_id: str, dims, field: str,
                  flags: ModelFlags, group: GroupSpec) -> ModelSpec:
    st = BlockStructure(tuple(dims), field)
    D = st.coord_dim
    d = st.hilbert_dim
    u = blocks_to_vec([np.eye(n) for n in st.dims], st)
    cone = ConeSpec("psd", D, structure=st)
    return ModelSpec(
        model_id=model_id,
        kind=kind,
        params=params,
        vector_dim=D,
        capacity=d,
        unit_effect=u,
        chi=u / d,
        state_cone=cone,
        effect_cone=cone,
        flags=flags,
        structure=st,
        group=group,
        pure_sampler=_matrix_pure_sampler,
        state_sampler=_matrix_state_sampler,
    )


def _polytope_model(kind: str, params: dict, model_id: str,
                    state_vertices, effect_generators, unit_effect,
                    group_matrices, flags=None) -> ModelSpec:
    V = np.asarray(state_vertices, dtype=float)
    G = np.asarray(effect_generators, dtype=float)
    u = np.asarray(unit_effect, dtype=float)
    D = V.shape[1]
    state_cone = ConeSpec("rays", D, generators=V)
    effect_cone = ConeSpec("rays", D, generators=G)
    for M in group_matrices:
        M = np.asarray(M, dtype=float)
        if np.abs(M.T @ u - u).max() > 1e-9:
            raise GPTError("group generator does not preserve the unit effect")
        for v in V:
            if not state_cone.contains(M @ v, 1e-9):
                raise GPTError("group generator does not preserve the state cone")
    verts = V / (V @ u)[:, None]
    chi = verts.mean(axis=0)
    basis, _ = _polytope_capacity(verts, G, u, D)
    group = GroupSpec(
        kind="finite",
        name=f"{kind}-group",
        generators=tuple((np.asarray(M, dtype=float), None) for M in group_matrices),
        sampler=_finite_group_sampler,
    )
    return ModelSpec(
        model_id=model_id,
        kind=kind,
        params=params,
        vector_dim=D,
        capacity=len(basis),
        unit_effect=u,
        chi=chi,
        state_cone=state_cone,
        effect_cone=effect_cone,
        flags=flags or ModelFlags(False, False, False),
        structure=None,
        group=group,
        pure_sampler=_polytope_pure_sampler,
        state_sampler=_polytope_state_sampler,
    )


def _classical_group(d: int) -> GroupSpec:
    gens = []
    if d >= 2:
        swap = np.eye(d)
        swap[[0, 1]] = swap[[1, 0]]
        gens.append((swap, swap))
    if d >= 3:
        cyc = np.roll(np.eye(d), 1, axis=0)
        gens.append((cyc, cyc))
    if not gens:
        gens.append((np.eye(d), np.eye(d)))
    return GroupSpec(kind="finite", name=f"permutations:{d}",
                     generators=tuple(gens), sampler=_finite_group_sampler)


def build_model(kind: str, **params) -> ModelSpec:
    """Construct a builtin model.

    Kinds and parameters: classical(d), quantum(n), rebit, real_quantum(n),
    doubled_quantum(n), extended_classical(N, n), square_bit,
    restricted_trit, diamond_bit.
    """
    if kind == "classical":
        d = int(params["d"])
        if d < 1:
            raise ValueError("d must be positive")
        return _matrix_model(
            kind, {"d": d}, f"classical:{d}", [1] * d, "R",
            ModelFlags(is_sharp_with_purification=False,
                       unrestricted_reversibility=True,
                       sectorized=False),
            _classical_group(d),
        )
    if kind == "quantum":
        n = int(params["n"])
        if n < 2:
            raise ValueError("n must be at least 2")
        return _matrix_model(
            kind, {"n": n}, f"quantum:{n}", [n], "C",
            ModelFlags(True, True, False),
            GroupSpec(kind="parametric", name=f"unitary:{n}",
                      sampler=_matrix_group_sampler),
        )
    if kind in ("rebit", "real_quantum"):
        n = 2 if kind == "rebit" else int(params["n"])
        return _matrix_model(
            kind, ({} if kind == "rebit" else {"n": n}),
            "rebit" if kind == "rebit" else f"real_quantum:{n}",
            [n], "R",
            ModelFlags(True, True, False),
            GroupSpec(kind="parametric", name=f"orthogonal:{n}",
                      sampler=_matrix_group_sampler),
        )
    if kind == "doubled_quantum":
        n = int(params["n"])
        if n < 2:
            raise ValueError("n must be at least 2")
        S = _sector_perm_kraus([n, n], [1, 0])
        st = BlockStructure((n, n), "C")
        gen = (conjugation_matrix([S], st), S)
        return _matrix_model(
            kind, {"n": n}, f"doubled_quantum:{n}", [n, n], "C",
            ModelFlags(is_sharp_with_purification=True,
                       unrestricted_reversibility=False,
                       sectorized=True),
            GroupSpec(kind="parametric", name=f"doubled_unitary:{n}",
                      generators=(gen,), sampler=_matrix_group_sampler),
        )
    if kind == "extended_classical":
        N = int(params["N"])
        n = int(params["n"])
        if N < 1 or n < 1:
            raise ValueError("N and n must be positive")
        dims = [n] * N
        gens = []
        if N >= 2:
            st = BlockStructure(tuple(dims), "C")
            shift = _sector_perm_kraus(dims, [(j + 1) % N for j in range(N)])
            gens.append((conjugation_matrix([shift], st), shift))
            swap01 = _sector_perm_kraus(
                dims, [1, 0] + list(range(2, N)))
            gens.append((conjugation_matrix([swap01], st), swap01))
        return _matrix_model(
            kind, {"N": N, "n": n}, f"extended_classical:{N}x{n}", dims, "C",
            ModelFlags(is_sharp_with_purification=True,
                       unrestricted_reversibility=False,
                       sectorized=True),
            GroupSpec(kind="parametric", name=f"sector_unitary:{N}x{n}",
                      generators=tuple(gens), sampler=_matrix_group_sampler),
        )
    if kind == "square_bit":
        rot = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        refl = np.diag([1.0, -1.0, 1.0])
        return _polytope_model(
            kind, {}, "square_bit",
            state_vertices=[[1, 1, 1], [1, -1, 1], [-1, 1, 1], [-1, -1, 1]],
            effect_generators=[[1, 0, 1], [-1, 0, 1], [0, 1, 1], [0, -1, 1]],
            unit_effect=[0, 0, 1],
            group_matrices=[rot, refl],
        )
    if kind == "diamond_bit":
        return _polytope_model(
            kind, {}, "diamond_bit",
            state_vertices=[[1, 0, 1], [-1, 0, 1], [0, 0.5, 1], [0, -0.5, 1]],
            effect_generators=[[1, 2, 1], [1, -2, 1], [-1, 2, 1], [-1, -2, 1]],
            unit_effect=[0, 0, 1],
            group_matrices=[np.diag([-1.0, 1.0, 1.0]), np.diag([1.0, -1.0, 1.0])],
        )
    if kind == "restricted_trit":
        swap = np.eye(3)[[1, 0, 2]]
        cyc = np.eye(3)[[2, 0, 1]]
        return _polytope_model(
            kind, {}, "restricted_trit",
            state_vertices=np.eye(3),
            effect_generators=[[1, 0.5, 0.5], [0.5, 1, 0.5], [0.5, 0.5, 1]],
            unit_effect=[1, 1, 1],
            group_matrices=[swap, cyc],
        )
    raise ValueError(f"unknown model kind {kind!r}")


def parse_model_string(text: str) -> ModelSpec:
    """Parse 'kind' or 'kind:p1' or 'kind:p1,p2' or 'kind:p1xp2'."""
    if ":" not in text:
        return build_model(text.strip())
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    nums = [int(t) for t in rest.replace("x", ",").split(",") if t.strip()]
    if kind == "classical":
        return build_model(kind, d=nums[0])
    if kind in ("quantum", "doubled_quantum", "real_quantum"):
        return build_model(kind, n=nums[0])
    if kind == "extended_classical":
        return build_model(kind, N=nums[0], n=nums[1])
    raise ValueError(f"cannot parse model string {text!r}")


# ---------------------------------------------------------------------------
# composites


def _residue_perm(stA: BlockStructure, stB: BlockStructure):
    """Basis permutation for sector-grouped composition.

    Composite sector k collects the factor sector pairs (j, l) with
    j + l = k modulo the larger sector count, the sum running over the
    system with fewer sectors.  Returns (composite dims, perm) with
    perm[block_position] = kron index.
    """
    NA, NB = stA.block_count, stB.block_count
    nA, nB = stA.dims[0], stB.dims[0]
    M = max(NA, NB)
    Nmin = min(NA, NB)
    offsA = stA.hilbert_offsets()
    offsB = stB.hilbert_offsets()
    dHB = stB.hilbert_dim
    a_small = NA <= NB
    perm = []
    for k in range(M):
        for js in range(Nmin):
            lo = (k - js) % M
            j, l = (js, lo) if a_small else (lo, js)
            for i in range(nA):
                for m_ in range(nB):
                    a = offsA[j] + i
                    b = offsB[l] + m_
                    perm.append(a * dHB + b)
    dims = [nA * nB * Nmin] * M
    return dims, np.asarray(perm, dtype=int)


def compose_systems(mA: ModelSpec, mB: ModelSpec) -> ModelSpec:
    """Bipartite composite of two matrix models of the same family."""
    if mA.structure is None or mB.structure is None:
        raise UnsupportedModelError(
            "polytope models are single-system; no composite is defined")
    kA, kB = mA.kind, mB.kind
    comp_id = f"({mA.model_id})x({mB.model_id})"
    if kA == "classical" and kB == "classical":
        base = build_model("classical", d=mA.capacity * mB.capacity)
        perm = np.arange(base.structure.hilbert_dim)
        rule = "product"
    elif kA == "quantum" and kB == "quantum":
        base = build_model("quantum", n=mA.capacity * mB.capacity)
        perm = np.arange(base.structure.hilbert_dim)
        rule = "product"
    elif kA in ("rebit", "real_quantum") and kB in ("rebit", "real_quantum"):
        base = build_model("real_quantum", n=mA.capacity * mB.capacity)
        perm = np.arange(base.structure.hilbert_dim)
        rule = "product"
    elif kA == "doubled_quantum" and kB == "doubled_quantum":
        dims, perm = _residue_perm(mA.structure, mB.structure)
        base = build_model("doubled_quantum", n=dims[0])
        rule = "residue"
    elif kA == "extended_classical" and kB == "extended_classical":
        dims, perm = _residue_perm(mA.structure, mB.structure)
        base = build_model("extended_classical", N=len(dims), n=dims[0])
        rule = "residue"
    else:
        raise ModelCompatibilityError(
            f"no composite rule for {kA} with {kB}")
    info = CompositeInfo(factors=(mA, mB), perm=perm, rule=rule)
    return dataclasses.replace(base, model_id=comp_id, composite=info)


def swap_channel(comp: ModelSpec) -> ChannelMap:
    """Reversible exchange of the two (identical) factors of a composite."""
    info = comp.composite
    if info is None:
        raise ModelCompatibilityError("swap needs a composite model")
    mA, mB = info.factors
    if mA.model_id != mB.model_id:
        raise UnsupportedModelError("swap is defined for identical factors")
    dH = mA.structure.hilbert_dim
    W = np.zeros((dH * dH, dH * dH))
    for a in range(dH):
        for b in range(dH):
            W[b * dH + a, a * dH + b] = 1.0
    K = W[np.ix_(info.perm, info.perm)]
    M = conjugation_matrix([K], comp.structure)
    return comp.make_reversible(M, kraus=[K])


# ---------------------------------------------------------------------------
# sector and basis helpers


def sector_weights(state: StateVec) -> np.ndarray:
    """Probability carried by each superselection sector (block traces)."""
    model = state.model
    if model.structure is None:
        raise UnsupportedModelError(f"{model.model_id} has no sector structure")
    return np.array([float(np.trace(B).real)
                     for B in vec_to_blocks(state.coords, model.structure)])


def pure_maximal_set(model: ModelSpec) -> list:
    """A maximal set of jointly perfectly distinguishable pure states."""
    if model.capacity < 2:
        raise GPTError("no perfectly distinguishable states")
    if model.structure is not None:
        st = model.structure
        out = []
        for b, n in enumerate(st.dims):
            for i in range(n):
                e = np.zeros(n)
                e[i] = 1.0
                out.append(StateVec(pure_block_vec(st, b, e), model))
        return out
    u = model.unit_effect
    verts = model.state_cone.generators
    verts = verts / (verts @ u)[:, None]
    basis, _ = _polytope_capacity(verts, model.effect_cone.generators, u,
                                  model.vector_dim)
    return [StateVec(v, model) for v in basis]


# ---------------------------------------------------------------------------
# transporting pure states with reversibles


def pure_support(state: StateVec):
    """(sector, unit vector) carrying a pure matrix-model state."""
    st = state.model.structure
    if st is None:
        raise UnsupportedModelError("no sector support for polytope models")
    for b, B in enumerate(vec_to_blocks(state.coords, st)):
        w, V = np.linalg.eigh(B)
        if w[-1] > 1.0 - 1e-7:
            return b, V[:, -1]
    raise GPTError("state is not pure")


def _unitary_with_first_column(v: np.ndarray, field: str) -> np.ndarray:
    v = np.asarray(v, dtype=complex if field == "C" else float)
    n = len(v)
    Q, R = np.linalg.qr(np.hstack([v[:, None], np.eye(n, dtype=v.dtype)]))
    Q = Q.copy()
    Q[:, 0] = Q[:, 0] * (R[0, 0] / abs(R[0, 0]))
    return Q


def _unitary_sending_vec(va, vb, field) -> np.ndarray:
    Qa = _unitary_with_first_column(va, field)
    Qb = _unitary_with_first_column(vb, field)
    return Qb @ Qa.conj().T


def reversible_sending(model: ModelSpec, s_from: StateVec,
                       s_to: StateVec) -> ChannelMap:
    """A reversible mapping one pure state onto another.

    Uses an in-sector rotation, preceded by a cyclic sector shift when the
    two states live in different sectors.
    """
    st = model.structure
    if st is None:
        raise UnsupportedModelError("reversible transport needs a matrix model")
    ja, va = pure_support(s_from)
    jb, vb = pure_support(s_to)
    from scipy.linalg import block_diag

    dtype = complex if st.field == "C" else float
    blocks = [np.eye(n, dtype=dtype) for n in st.dims]
    if ja == jb:
        blocks[ja] = _unitary_sending_vec(va, vb, st.field)
        K = block_diag(*blocks)
    else:
        blocks[ja] = _unitary_sending_vec(va, vb, st.field)
        delta = (jb - ja) % st.block_count
        perm = [(j + delta) % st.block_count for j in range(st.block_count)]
        K = _sector_perm_kraus(st.dims, perm) @ block_diag(*blocks)
    return model.make_reversible(conjugation_matrix([K], st), kraus=[K])


def basis_aligning_reversible(model: ModelSpec, from_states,
                              to_states) -> ChannelMap:
    """A reversible mapping each pure state of one maximal basis onto the
    corresponding member of another.

    Exists only when the induced sector transport is a permutation; the
    sectorized families make that a real obstruction.
    """
    st = model.structure
    if st is None:
        raise UnsupportedModelError("basis alignment needs a matrix model")
    if len(from_states) != len(to_states):
        raise ValueError("bases must have equal size")
    sup_a = [pure_support(s) for s in from_states]
    sup_b = [pure_support(s) for s in to_states]
    sector_map = {}
    for (ja, _), (jb, _) in zip(sup_a, sup_b):
        if sector_map.setdefault(ja, jb) != jb:
            raise GPTError("no reversible aligns these bases: "
                           "inconsistent sector transport")
    if len(set(sector_map.values())) != len(sector_map):
        raise GPTError("no reversible aligns these bases: "
                       "sector transport is not a permutation")
    dH = st.hilbert_dim
    offs = st.hilbert_offsets()
    dtype = complex if st.field == "C" else float
    K = np.zeros((dH, dH), dtype=dtype)
    for (ja, va), (jb, vb) in zip(sup_a, sup_b):
        ta = np.zeros(dH, dtype=dtype)
        ta[offs[ja]: offs[ja] + len(va)] = va
        tb = np.zeros(dH, dtype=dtype)
        tb[offs[jb]: offs[jb] + len(vb)] = vb
        K += np.outer(tb, ta.conj())
    if np.abs(K @ K.conj().T - np.eye(dH)).max() > 1e-8:
        raise GPTError("basis alignment produced a non-reversible map")
    return model.make_reversible(conjugation_matrix([K], st), kraus=[K])


# ---------------------------------------------------------------------------
# serialization


def model_to_json(model: ModelSpec) -> dict:
    if model.kind == "polytope":
        return {
            "kind": "polytope",
            "vector_dim": model.vector_dim,
            "unit_effect": model.unit_effect.tolist(),
            "state_vertices": model.state_cone.generators.tolist(),
            "effect_generators": model.effect_cone.generators.tolist(),
            "group_generators": [M.tolist() for M, _ in model.group.generators],
        }
    if model.composite is not None:
        raise UnsupportedModelError("composites are not serializable; "
                                    "serialize the factors")
    return {"kind": model.kind, "params": dict(model.params)}


def model_from_json(data: dict) -> ModelSpec:
    kind = data["kind"]
    if kind != "polytope":
        return build_model(kind, **data.get("params", {}))
    return _polytope_model(
        "polytope", {}, "polytope:custom",
        state_vertices=data["state_vertices"],
        effect_generators=data["effect_generators"],
        unit_effect=data["unit_effect"],
        group_matrices=[np.asarray(M, dtype=float)
                        for M in data.get("group_generators", [])]
        or [np.eye(int(data["vector_dim"]))],
    )


def load_model(path: str) -> ModelSpec:
    with open(path) as fh:
        return model_from_json(json.load(fh))


def save_model(model: ModelSpec, path: str):
    with open(path, "w") as fh:
        json.dump(model_to_json(model), fh, indent=2)
        fh.write("\n")
