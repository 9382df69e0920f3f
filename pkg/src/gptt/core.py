"""Core state/effect/channel layer for finite-dimensional probabilistic models.

A model lives in a real vector space of dimension D.  States are cone
elements normalized against the unit effect, effects are dual-cone elements
dominated by the unit, and channels are linear maps that preserve the unit
effect.  Two cone representations are supported: positivity of Hermitian
blocks (matrix models) and finitely generated ray cones (polytope models).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import linprog

from .embedding import (
    BlockStructure,
    blocks_to_vec,
    conjugation_matrix,
    vec_to_blocks,
    vec_to_total,
    total_to_vec,
)

DEFAULT_TOL = 1e-9


class GPTError(Exception):
    """Base error for model-layer failures."""


class ConeError(GPTError):
    """A vector left its cone (invalid state, effect, or channel output)."""


class NormalizationError(GPTError):
    pass


class ModelCompatibilityError(GPTError):
    """Objects from different models were mixed, or a composite is undefined."""


class DiagonalizationError(GPTError):
    """No pure-state decomposition with the required structure exists.

    Carries the undecomposed residue so callers can inspect how far the
    peeling got.
    """

    def __init__(self, message: str, residue: float | None = None, partial=None):
        super().__init__(message)
        self.residue = residue
        self.partial = partial


class UnsupportedModelError(GPTError):
    """The requested operation is not available for this model family."""


def as_coords(x) -> np.ndarray:
    if isinstance(x, (StateVec, EffectVec, Observable)):
        return x.coords
    return np.asarray(x, dtype=float)


# ---------------------------------------------------------------------------
# Cones


@dataclass(frozen=True, eq=False)
class ConeSpec:
    """A proper cone, either finitely generated or a product of PSD blocks.

    kind 'rays': generators are rows of `generators`; membership and the
    signed margin come from a small LP against a fixed interior direction.
    kind 'psd': membership means every Hermitian block has nonnegative
    spectrum; the margin is the smallest block eigenvalue.
    """

    kind: str
    dim: int
    generators: Optional[np.ndarray] = None
    structure: Optional[BlockStructure] = None
    interior_direction: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        if self.kind == "rays":
            G = np.asarray(self.generators, dtype=float)
            if G.ndim != 2 or G.shape[1] != self.dim:
                raise ValueError("generator matrix must be (k, dim)")
            norms = np.linalg.norm(G, axis=1)
            if np.any(norms < 1e-12):
                raise ValueError("zero generator ray")
            object.__setattr__(self, "generators", G)
            if np.linalg.matrix_rank(G, tol=1e-10) < self.dim:
                raise ValueError("cone is not full-dimensional")
            self._check_pointed(G)
            e = (G / norms[:, None]).sum(axis=0)
            e = e / np.linalg.norm(e)
            object.__setattr__(self, "interior_direction", e)
        elif self.kind == "psd":
            if self.structure is None:
                raise ValueError("psd cone needs a block structure")
            if self.structure.coord_dim != self.dim:
                raise ValueError("block structure does not match dim")
        else:
            raise ValueError(f"unknown cone kind {self.kind!r}")

    @staticmethod
    def _check_pointed(G: np.ndarray):
        # pointed iff no nontrivial nonnegative combination of rays vanishes
        k = G.shape[0]
        res = linprog(
            c=-np.ones(k),
            A_eq=G.T,
            b_eq=np.zeros(G.shape[1]),
            bounds=[(0.0, 1.0)] * k,
            method="highs",
        )
        if not res.success or res.fun < -1e-9:
            raise ValueError("cone contains a line (not pointed)")

    def margin(self, x) -> float:
        """Largest m with x - m * (interior direction) still in the cone.

        Nonnegative exactly on cone members; for psd cones this is the
        minimum block eigenvalue.
        """
        x = as_coords(x)
        if x.shape != (self.dim,):
            raise ValueError("vector has wrong dimension")
        if self.kind == "psd":
            worst = np.inf
            for B in vec_to_blocks(x, self.structure):
                w = np.linalg.eigvalsh(B)
                worst = min(worst, float(w[0]))
            return worst
        G = self.generators
        k = G.shape[0]
        # variables: ray weights c >= 0, margin m free; G^T c + m e = x
        A_eq = np.hstack([G.T, self.interior_direction[:, None]])
        res = linprog(
            c=np.concatenate([np.zeros(k), [-1.0]]),
            A_eq=A_eq,
            b_eq=x,
            bounds=[(0.0, None)] * k + [(None, None)],
            method="highs",
        )
        if not res.success:
            raise GPTError(f"cone margin LP failed: {res.message}")
        return float(res.x[-1])

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        return self.margin(x) >= -tol


def cone_membership(model: "ModelSpec", x, which: str = "state",
                    tol: float = DEFAULT_TOL):
    """Membership test with a signed separation margin.

    Returns (inside, margin); margin >= -tol counts as inside.
    """
    cone = model.state_cone if which == "state" else model.effect_cone
    m = cone.margin(as_coords(x))
    return (m >= -tol, m)


# ---------------------------------------------------------------------------
# Model description


@dataclass(frozen=True)
class ModelFlags:
    is_sharp_with_purification: bool = False
    unrestricted_reversibility: bool = False
    sectorized: bool = False


@dataclass(frozen=True, eq=False)
class GroupSpec:
    """Reversible transformations of a model.

    kind 'finite': `generators` (matrix, kraus-or-None pairs) generate the
    whole group under composition.  kind 'parametric': `sampler` draws a
    random reversible; generators may still list structural elements such
    as sector swaps.
    """

    kind: str
    name: str
    generators: tuple = ()
    sampler: Optional[Callable] = None  # (model, rng) -> ChannelMap


@dataclass(frozen=True, eq=False)
class CompositeInfo:
    """How a bipartite model relates to its factors.

    `perm` lists, for each total-Hilbert basis index in the composite's
    block order, the corresponding index of the factor-kron ordered basis.
    """

    factors: tuple
    perm: np.ndarray
    rule: str  # 'product' or 'residue'


@dataclass(frozen=True, eq=False)
class ModelSpec:
    model_id: str
    kind: str
    params: dict
    vector_dim: int
    capacity: int
    unit_effect: np.ndarray
    chi: np.ndarray
    state_cone: ConeSpec
    effect_cone: ConeSpec
    flags: ModelFlags
    structure: Optional[BlockStructure] = None
    group: Optional[GroupSpec] = None
    composite: Optional[CompositeInfo] = None
    pure_sampler: Optional[Callable] = None   # (model, rng) -> coords
    state_sampler: Optional[Callable] = None  # (model, rng) -> coords

    def __post_init__(self):
        u = np.asarray(self.unit_effect, dtype=float)
        u.setflags(write=False)
        object.__setattr__(self, "unit_effect", u)
        c = np.asarray(self.chi, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "chi", c)

    def __repr__(self):
        return f"ModelSpec({self.model_id}, D={self.vector_dim}, d={self.capacity})"

    @property
    def unit(self) -> "EffectVec":
        return EffectVec(self.unit_effect, self)

    @property
    def invariant_state(self) -> "StateVec":
        return StateVec(self.chi, self)

    def make_reversible(self, matrix: np.ndarray, kraus=None,
                        witness=None) -> "ChannelMap":
        return ChannelMap(
            matrix=np.asarray(matrix, dtype=float),
            model_in=self,
            model_out=self,
            tags=frozenset({"reversible", "unital", "rare"}),
            kraus=None if kraus is None else tuple(kraus),
            witness=witness,
        )


def _same_model(a: ModelSpec, b: ModelSpec):
    if a is not b and a.model_id != b.model_id:
        raise ModelCompatibilityError(
            f"objects belong to different models: {a.model_id} vs {b.model_id}"
        )


# ---------------------------------------------------------------------------
# States, effects, observables


@dataclass(frozen=True, eq=False)
class StateVec:
    """Normalized state: cone member with unit pairing against the unit effect."""

    coords: np.ndarray
    model: ModelSpec

    def __post_init__(self):
        x = np.asarray(self.coords, dtype=float)
        if x.shape != (self.model.vector_dim,):
            raise ValueError("state has wrong dimension")
        x = x.copy()
        x.setflags(write=False)
        object.__setattr__(self, "coords", x)
        ok, margin = cone_membership(self.model, x, "state")
        if not ok:
            raise ConeError(f"state outside cone (margin {margin:.3e})")
        p = float(self.model.unit_effect @ x)
        if abs(p - 1.0) > 1e-7:
            raise NormalizationError(f"state has unit pairing {p!r}, expected 1")

    @classmethod
    def normalized(cls, model: ModelSpec, raw) -> "StateVec":
        raw = as_coords(raw)
        p = float(model.unit_effect @ raw)
        if p < 1e-12:
            raise NormalizationError("vector has vanishing normalization")
        return cls(raw / p, model)

    def __repr__(self):
        return f"StateVec({self.model.model_id}, {np.array2string(self.coords, precision=4)})"


@dataclass(frozen=True, eq=False)
class EffectVec:
    """Proper effect: in the effect cone, with its complement also in it."""

    coords: np.ndarray
    model: ModelSpec

    def __post_init__(self):
        f = np.asarray(self.coords, dtype=float)
        if f.shape != (self.model.vector_dim,):
            raise ValueError("effect has wrong dimension")
        f = f.copy()
        f.setflags(write=False)
        object.__setattr__(self, "coords", f)
        ok, margin = cone_membership(self.model, f, "effect")
        if not ok:
            raise ConeError(f"effect outside cone (margin {margin:.3e})")
        ok, margin = cone_membership(self.model, self.model.unit_effect - f, "effect")
        if not ok:
            raise ConeError(f"effect exceeds the unit (margin {margin:.3e})")

    def __repr__(self):
        return f"EffectVec({self.model.model_id}, {np.array2string(self.coords, precision=4)})"


@dataclass(frozen=True, eq=False)
class Observable:
    """Real linear functional on states; no positivity constraints.

    Used for Hamiltonians and other quantities built from a spectral basis.
    """

    coords: np.ndarray
    model: ModelSpec

    def __post_init__(self):
        f = np.asarray(self.coords, dtype=float)
        if f.shape != (self.model.vector_dim,):
            raise ValueError("observable has wrong dimension")
        f = f.copy()
        f.setflags(write=False)
        object.__setattr__(self, "coords", f)


def pairing(effect, state) -> float:
    """Probability pairing; the embedding makes it a plain dot product."""
    if isinstance(effect, (EffectVec, Observable)) and isinstance(state, StateVec):
        _same_model(effect.model, state.model)
    return float(as_coords(effect) @ as_coords(state))


def state_norm(model: ModelSpec, x) -> float:
    """Base norm of a state-space vector.

    For matrix models this is the total absolute spectrum (sum of |eigenvalue|
    over all blocks).  For ray-cone models it is the optimal positive/negative
    decomposition weight found by LP.
    """
    x = as_coords(x)
    if model.structure is not None:
        total = 0.0
        for B in vec_to_blocks(x, model.structure):
            total += float(np.abs(np.linalg.eigvalsh(B)).sum())
        return total
    # min (u|p) + (u|m) over x = p - m with p, m in the state cone
    G = model.state_cone.generators
    k = G.shape[0]
    u = model.unit_effect
    c = np.concatenate([G @ u, G @ u])
    A_eq = np.hstack([G.T, -G.T])
    res = linprog(c=c, A_eq=A_eq, b_eq=x, bounds=[(0.0, None)] * (2 * k),
                  method="highs")
    if not res.success:
        raise GPTError(f"base-norm LP failed: {res.message}")
    return float(res.fun)


def effect_norm(model: ModelSpec, f) -> float:
    """Observable norm: the largest absolute value over normalized states.

    For matrix models this is the largest absolute block eigenvalue.
    """
    f = as_coords(f)
    if model.structure is not None:
        worst = 0.0
        for B in vec_to_blocks(f, model.structure):
            w = np.linalg.eigvalsh(B)
            worst = max(worst, float(np.abs(w).max()))
        return worst
    verts = model.state_cone.generators
    u = model.unit_effect
    vals = []
    for v in verts:
        p = float(u @ v)
        if p > 1e-12:
            vals.append(abs(float(f @ v)) / p)
    return max(vals)


# ---------------------------------------------------------------------------
# Channels


@dataclass(frozen=True, eq=False)
class ChannelMap:
    """Linear map between model state spaces that preserves the unit effect.

    Tags record structure the builder certifies: 'reversible', 'unital',
    'rare' (mixture of reversibles), 'measure_and_prepare'.  `witness`
    carries the certifying data.  `kraus` holds total-Hilbert-space Kraus
    operators when the map has a matrix-model presentation; they make
    tensoring exact.
    """

    matrix: np.ndarray
    model_in: ModelSpec
    model_out: ModelSpec
    tags: frozenset = frozenset()
    kraus: Optional[tuple] = None
    witness: Optional[dict] = None

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        if M.shape != (self.model_out.vector_dim, self.model_in.vector_dim):
            raise ValueError("channel matrix has wrong shape")
        M = M.copy()
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)
        resid = float(np.abs(M.T @ self.model_out.unit_effect
                             - self.model_in.unit_effect).max())
        if resid > DEFAULT_TOL:
            raise ConeError(f"channel does not preserve the unit effect "
                            f"(residual {resid:.3e})")
        if "unital" in self.tags:
            r = float(np.abs(M @ self.model_in.chi - self.model_out.chi).max())
            if r > 1e-8:
                raise ConeError(f"channel tagged unital moves the invariant "
                                f"state (residual {r:.3e})")

    def __call__(self, state: StateVec) -> StateVec:
        return apply_channel(self, state)

    def __repr__(self):
        t = ",".join(sorted(self.tags)) or "-"
        return (f"ChannelMap({self.model_in.model_id}->{self.model_out.model_id},"
                f" tags={t})")


def apply_channel(channel: ChannelMap, state: StateVec) -> StateVec:
    _same_model(channel.model_in, state.model)
    y = channel.matrix @ state.coords
    ok, margin = cone_membership(channel.model_out, y, "state")
    if not ok:
        raise ConeError(f"channel output left the state cone (margin {margin:.3e})")
    return StateVec(y, channel.model_out)


def compose(outer: ChannelMap, inner: ChannelMap) -> ChannelMap:
    """outer after inner."""
    _same_model(outer.model_in, inner.model_out)
    tags = set()
    for t in ("reversible", "unital", "rare"):
        if t in outer.tags and t in inner.tags:
            tags.add(t)
    if "measure_and_prepare" in outer.tags or "measure_and_prepare" in inner.tags:
        tags.add("measure_and_prepare")
    kraus = None
    if outer.kraus is not None and inner.kraus is not None:
        prods = [K2 @ K1 for K2 in outer.kraus for K1 in inner.kraus]
        if len(prods) <= 64:
            kraus = tuple(prods)
    return ChannelMap(
        matrix=outer.matrix @ inner.matrix,
        model_in=inner.model_in,
        model_out=outer.model_out,
        tags=frozenset(tags),
        kraus=kraus,
    )


# ---------------------------------------------------------------------------
# Composite-system operations (the composite model itself is built in zoo)


def _require_composite(model: ModelSpec) -> CompositeInfo:
    if model.composite is None:
        raise ModelCompatibilityError(f"{model.model_id} is not a composite model")
    return model.composite


def _block_to_kron(model: ModelSpec, x: np.ndarray) -> np.ndarray:
    """Total-Hilbert matrix of composite coords, in factor-kron basis order."""
    info = _require_composite(model)
    M_block = vec_to_total(x, model.structure)
    dH = M_block.shape[0]
    M_kron = np.zeros_like(M_block)
    M_kron[np.ix_(info.perm, info.perm)] = M_block
    return M_kron


def _kron_to_coords(model: ModelSpec, M_kron: np.ndarray,
                    tol: float = 1e-8) -> np.ndarray:
    info = _require_composite(model)
    M_block = M_kron[np.ix_(info.perm, info.perm)]
    x, resid = total_to_vec(M_block, model.structure, check_tol=tol)
    if resid > tol:
        raise ConeError(f"matrix violates the composite sector structure "
                        f"(off-block residual {resid:.3e})")
    return x


def tensor_states(comp: ModelSpec, a: StateVec, b: StateVec) -> StateVec:
    info = _require_composite(comp)
    mA, mB = info.factors
    _same_model(mA, a.model)
    _same_model(mB, b.model)
    MA = vec_to_total(a.coords, mA.structure)
    MB = vec_to_total(b.coords, mB.structure)
    return StateVec(_kron_to_coords(comp, np.kron(MA, MB)), comp)


def marginal(comp_state: StateVec, which: int) -> StateVec:
    """Reduced state of factor 0 or 1 of a composite model's state."""
    model = comp_state.model
    info = _require_composite(model)
    if which not in (0, 1):
        raise ValueError("which must be 0 or 1")
    mA, mB = info.factors
    dA = mA.structure.hilbert_dim
    dB = mB.structure.hilbert_dim
    M = _block_to_kron(model, comp_state.coords).reshape(dA, dB, dA, dB)
    if which == 0:
        R = np.einsum("ijkj->ik", M)
        target = mA
    else:
        R = np.einsum("ijil->jl", M)
        target = mB
    x, resid = total_to_vec(R, target.structure, check_tol=1e-7)
    if resid > 1e-7:
        raise ConeError(f"marginal violates the factor sector structure "
                        f"(residual {resid:.3e})")
    return StateVec(x, target)


def _lifted_kraus(comp: ModelSpec, kraus_A, kraus_B) -> list:
    info = _require_composite(comp)
    out = []
    for KA in kraus_A:
        for KB in kraus_B:
            K_kron = np.kron(KA, KB)
            out.append(K_kron[np.ix_(info.perm, info.perm)])
    return out


def tensor_channels(comp_in: ModelSpec, comp_out: ModelSpec,
                    chan_A: ChannelMap, chan_B: ChannelMap) -> ChannelMap:
    """Product channel acting factor-wise on composite models.

    Both composites must be built from the channels' endpoint models; the
    factors must carry Kraus presentations.
    """
    info_in = _require_composite(comp_in)
    info_out = _require_composite(comp_out)
    _same_model(info_in.factors[0], chan_A.model_in)
    _same_model(info_in.factors[1], chan_B.model_in)
    _same_model(info_out.factors[0], chan_A.model_out)
    _same_model(info_out.factors[1], chan_B.model_out)
    if chan_A.kraus is None or chan_B.kraus is None:
        raise UnsupportedModelError(
            "tensoring needs Kraus presentations of both factors")
    if comp_in is not comp_out and comp_in.model_id != comp_out.model_id:
        raise UnsupportedModelError("factor-wise maps must preserve the "
                                    "composite model in this version")
    kraus = _lifted_kraus(comp_in, chan_A.kraus, chan_B.kraus)
    M = conjugation_matrix(kraus, comp_in.structure)
    tags = set()
    for t in ("reversible", "unital", "rare"):
        if t in chan_A.tags and t in chan_B.tags:
            tags.add(t)
    return ChannelMap(matrix=M, model_in=comp_in, model_out=comp_out,
                      tags=frozenset(tags),
                      kraus=tuple(kraus) if len(kraus) <= 64 else None)


def lift_channel(comp: ModelSpec, chan: ChannelMap, which: int) -> ChannelMap:
    """Act with a single-factor channel on one leg of a composite."""
    info = _require_composite(comp)
    other = info.factors[1 - which]
    ident = other.make_reversible(
        np.eye(other.vector_dim),
        kraus=[np.eye(other.structure.hilbert_dim)],
    )
    if which == 0:
        return tensor_channels(comp, comp, chan, ident)
    return tensor_channels(comp, comp, ident, chan)
