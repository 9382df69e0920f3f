"""Group-action utilities: invariant states, transitivity, twirling.

Finite reversible groups are handled exhaustively through their closure;
the continuous families use randomized probes of the sampler, which cut
the fixed-point space to its true dimension with probability one.
"""

from __future__ import annotations

import warnings

import numpy as np

from .core import (
    GPTError,
    ModelSpec,
    StateVec,
    apply_channel,
    tensor_states,
)
from . import zoo

_CONTINUOUS_KINDS = ("quantum", "rebit", "real_quantum", "doubled_quantum",
                     "extended_classical")


def _group_probe_matrices(model: ModelSpec, n_probes: int = 40, seed: int = 0):
    if model.group.kind == "finite":
        return [M for M, _ in zoo._closure_cache(model)]
    rng = np.random.default_rng(seed)
    return [model.group.sampler(model, rng).matrix for _ in range(n_probes)]


def invariant_state(model: ModelSpec, n_probes: int = 40) -> dict:
    """Fixed points of the reversible group, normalized to states.

    Returns the unique invariant state when the fixed-point space meets the
    normalization plane in a single point, otherwise the basis of the
    invariant family and a non-uniqueness flag.
    """
    mats = _group_probe_matrices(model, n_probes)
    D = model.vector_dim
    stack = np.vstack([M - np.eye(D) for M in mats])
    _, s, Vt = np.linalg.svd(stack)
    # the stack always has at least D rows, so s has exactly D entries
    basis = Vt[s <= 1e-9]
    dim = basis.shape[0]
    if dim == 0:
        raise GPTError("group action has no fixed direction")
    if dim == 1:
        v = basis[0]
        scale = float(model.unit_effect @ v)
        if abs(scale) < 1e-12:
            raise GPTError("fixed direction is not normalizable")
        state = StateVec(v / scale, model)
        return {"unique": True, "state": state, "dimension": 1,
                "matches_reference": bool(
                    np.abs(state.coords - model.chi).max() <= 1e-9)}
    return {"unique": False, "dimension": int(dim), "basis": basis,
            "state": model.invariant_state}


def is_transitive(model: ModelSpec, n_probes: int = 60) -> bool:
    """Whether the reversible group carries every pure state to every other."""
    kind = model.kind
    if kind in ("quantum", "rebit", "real_quantum", "classical"):
        return True
    if kind in ("doubled_quantum", "extended_classical"):
        # block rotations act transitively inside a sector and the cyclic
        # shifts connect the equal-dimension sectors
        return True
    verts = model.state_cone.generators
    u = model.unit_effect
    pts = [v / float(u @ v) for v in verts]
    elems = zoo._closure_cache(model)
    ref = pts[0]
    for p in pts[1:]:
        if not any(np.abs(M @ ref - p).max() <= 1e-8 for M, _ in elems):
            return False
    return True


def twirl(state: StateVec, n_probes: int = 40) -> StateVec:
    """Group-average of a state.

    Exact over finite closures; for the continuous families the average
    lands on the unique invariant state.  A multi-dimensional fixed-point
    space triggers a warning and an orthogonal projection instead.
    """
    model = state.model
    if model.group.kind == "finite":
        mats = [M for M, _ in zoo._closure_cache(model)]
        avg = sum(M @ state.coords for M in mats) / len(mats)
        return StateVec(avg, model)
    report = invariant_state(model, n_probes)
    if report["unique"]:
        return report["state"]
    warnings.warn("invariant family is not unique; projecting onto it")
    B = report["basis"]
    proj = B.T @ np.linalg.solve(B @ B.T, B @ state.coords)
    scale = float(model.unit_effect @ proj)
    return StateVec(proj / scale, model)


def informational_equilibrium_check(model_a: ModelSpec, model_b: ModelSpec,
                                    tol: float = 1e-8) -> dict:
    """Whether the product of invariant states is the composite's invariant
    state."""
    comp = zoo.compose_systems(model_a, model_b)
    prod = tensor_states(comp, model_a.invariant_state,
                         model_b.invariant_state)
    resid = float(np.abs(prod.coords - comp.chi).max())
    return {"holds": resid <= tol, "residual": resid, "composite": comp}


def perfectly_distinguishable_search(model: ModelSpec, states) -> dict:
    """Measurement telling the given states apart with certainty, if any.

    The matrix families reduce to support orthogonality and the ray models
    to a feasibility program, so a miss is a certificate of impossibility,
    not a search failure.
    """
    effects = zoo.distinguishing_effects(model, list(states))
    if effects is None:
        return {"found": False, "effects": None, "certified_none": True}
    return {"found": True, "effects": effects, "certified_none": False}
