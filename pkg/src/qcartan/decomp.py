"""Highest/lowest-weight extraction, generated submodules, Cartan components,
fusion multiplicities.

All kernels are computed weight-block by weight-block (never on the whole
space): the stacked generator matrix restricted to a block is small, and the
rank certificates are much sharper there.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import repn
from .numerics import (AmbiguousRank, DEFAULT_TOL, InvariantViolation,
                       ToleranceProfile, nullspace, projector)
from .qcore import Weight, simple_root, weyl_dim

__all__ = [
    "HighestWeightReport",
    "highest_weight_space",
    "lowest_weight_space",
    "p_h_projector",
    "p_l_projector",
    "generate_submodule",
    "cartan_component",
    "cartan_projection",
    "fusion_multiplicities",
    "s_invariant_dim",
]


@dataclass
class HighestWeightReport:
    """Extreme-weight vectors grouped by weight; columns are full-dimension."""

    components: list  # [(Weight, ndarray of shape (dim, mult)), ...]
    total: int

    @property
    def multiplicities(self) -> dict:
        return {w: cols.shape[1] for w, cols in self.components}

    def basis_matrix(self, dim: int) -> np.ndarray:
        if not self.components:
            return np.zeros((dim, 0))
        return np.hstack([cols for _, cols in self.components])

    def vectors_of(self, w: Weight) -> np.ndarray:
        for wt, cols in self.components:
            if wt == w:
                return cols
        raise KeyError(f"no extreme vectors of weight {w}")


def _fix_signs(cols: np.ndarray) -> np.ndarray:
    """First coordinate of magnitude > 1e-12 * max is made positive."""
    out = cols.copy()
    for j in range(out.shape[1]):
        c = out[:, j]
        nz = np.nonzero(np.abs(c) > 1e-12 * np.max(np.abs(c)))[0]
        if nz.size and c[nz[0]] < 0:
            out[:, j] = -c
    return out


def _extreme_weight_space(V, raising: bool, tol: ToleranceProfile) -> HighestWeightReport:
    mats = V.E if raising else V.F
    sgn = 1 if raising else -1
    blocks = V.weight_blocks()
    components = []
    total = 0
    for wt in sorted(blocks.keys(), reverse=True):
        idx = blocks[wt]
        stacked = []
        for i in range(1, V.N):
            target = tuple(np.asarray(wt) + sgn * simple_root(i, V.N).as_array())
            rows = blocks.get(target)
            if rows is not None:
                stacked.append(mats[i][np.ix_(rows, idx)])
        if stacked:
            K = nullspace(np.vstack(stacked), tol)
        else:
            K = np.eye(len(idx))
        if K.shape[1] == 0:
            continue
        cols = np.zeros((V.dim, K.shape[1]))
        cols[idx, :] = K
        components.append((Weight(wt), _fix_signs(cols)))
        total += K.shape[1]
    report = HighestWeightReport(components, total)
    _check_completeness(V, report, raising)
    return report


def _check_completeness(V, report: HighestWeightReport, raising: bool):
    # Highest-weight vectors sit at dominant weights; lowest-weight vectors at
    # anti-dominant ones (the longest Weyl element negates and reverses the
    # fundamental coordinates).  Either way the isotypic dimensions must tile
    # the module exactly.
    s = 0
    for w, cols in report.components:
        if raising:
            if not w.is_dominant:
                raise InvariantViolation(f"extreme vector at non-dominant weight {w}")
            dom = w
        else:
            dom = Weight(tuple(-c for c in reversed(w.coords)))
            if not dom.is_dominant:
                raise InvariantViolation(f"extreme vector at non-anti-dominant weight {w}")
        s += cols.shape[1] * weyl_dim(dom)
    if s != V.dim:
        raise InvariantViolation(
            f"isotypic dimensions sum to {s}, module has dim {V.dim}"
        )


def highest_weight_space(V, tol: ToleranceProfile = DEFAULT_TOL) -> HighestWeightReport:
    """Joint kernel of all E_i, grouped by weight."""
    return _extreme_weight_space(V, raising=True, tol=tol)


def lowest_weight_space(V, tol: ToleranceProfile = DEFAULT_TOL) -> HighestWeightReport:
    """Joint kernel of all F_i, grouped by weight."""
    return _extreme_weight_space(V, raising=False, tol=tol)


def p_h_projector(V, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    return projector(highest_weight_space(V, tol).basis_matrix(V.dim), tol)


def p_l_projector(V, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    return projector(lowest_weight_space(V, tol).basis_matrix(V.dim), tol)


def generate_submodule(V, seed, tol: ToleranceProfile = DEFAULT_TOL):
    """Close a highest-weight seed under the F_i; returns (QModule, ModuleMap).

    The seed becomes basis vector 0 of the result exactly (phase fix). The
    basis is grown level-by-level down the weight filtration with modified
    Gram-Schmidt (two passes); accept/drop decisions are gap-guarded.  All
    arithmetic (orbit, orthonormalization, generator projection, the final
    relation check) runs in V's dtype, so feeding an extended-precision
    module yields an extended-precision submodule.
    """
    seed = np.asarray(seed, dtype=V.dtype).reshape(-1)
    nrm = np.linalg.norm(seed)
    if nrm == 0:
        raise ValueError("zero seed")
    seed = seed / nrm
    for i in range(1, V.N):
        if np.linalg.norm(V.E[i] @ seed) > 1e3 * tol.identity_tol:
            raise ValueError("seed is not a highest weight vector")
    support = np.nonzero(np.abs(seed) > 1e-13)[0]
    wts = V.weights[support]
    if not (wts == wts[0]).all():
        raise ValueError("seed is not weight-homogeneous")
    hw = Weight(tuple(int(c) for c in wts[0]))
    if not hw.is_dominant:
        raise ValueError(f"seed weight {hw} is not dominant")
    expected = weyl_dim(hw)

    Q = np.empty((V.dim, expected), dtype=V.dtype)
    Q[:, 0] = seed
    k = 1
    drop_band_hi = tol.nullspace_rel_tol * tol.gap_ratio_min
    # Candidates whose norm is rounding noise relative to the operator scale
    # (F_i applied to a unit vector) must be discarded before the remainder
    # ratio test: a pure-noise vector survives projection with rem ~ 1 and
    # would masquerade as a new direction.
    fscale = {i: max(float(np.linalg.norm(V.F[i])), 1.0) for i in range(1, V.N)}
    frontier = [0]
    while frontier:
        new_frontier = []
        for i in range(1, V.N):
            cand = V.F[i] @ Q[:, frontier]
            for j in range(cand.shape[1]):
                w = cand[:, j]
                scale = np.linalg.norm(w)
                if scale <= tol.nullspace_rel_tol * fscale[i]:
                    continue
                if scale < drop_band_hi * fscale[i]:
                    raise AmbiguousRank(
                        f"generate_submodule: candidate norm {scale:.3e} in the "
                        f"ambiguous band relative to generator scale"
                    )
                for _ in range(2):
                    w = w - Q[:, :k] @ (Q[:, :k].T @ w)
                rem = np.linalg.norm(w) / scale
                if rem <= tol.nullspace_rel_tol:
                    continue
                if rem < drop_band_hi:
                    raise AmbiguousRank(
                        f"generate_submodule: residual ratio {rem:.3e} in the "
                        f"ambiguous band at weight step {i}"
                    )
                if k >= expected:
                    raise InvariantViolation(
                        f"submodule of weight {hw} exceeds Weyl dimension {expected}"
                    )
                Q[:, k] = w / np.linalg.norm(w)
                new_frontier.append(k)
                k += 1
        frontier = new_frontier
    if k != expected:
        raise InvariantViolation(
            f"submodule of weight {hw} has dim {k}, Weyl formula says {expected}"
        )

    E = {i: Q.T @ V.E[i] @ Q for i in range(1, V.N)}
    F = {i: Q.T @ V.F[i] @ Q for i in range(1, V.N)}
    wmat = np.empty((expected, V.N - 1), dtype=np.int64)
    for c in range(expected):
        wmat[c] = V.weights[int(np.argmax(np.abs(Q[:, c])))]
    sub = repn.QModule(V.N, V.q, wmat, E, F, highest_weight=hw, hw_index=0,
                       dtype=V.dtype)
    repn.check_module(sub, tol, raise_on_fail=True)
    return sub, repn.ModuleMap(source=sub, target=V, matrix=Q)


def cartan_component(A, B, tensor_module=None, tol: ToleranceProfile = DEFAULT_TOL):
    """The copy of V_{lam+mu} inside A ox B generated by xi_lam ox xi_mu.

    Returns (QModule, ModuleMap isometry into the tensor product).
    """
    if A.highest_weight is None or B.highest_weight is None:
        raise ValueError("cartan_component needs simple inputs with fixed h.w. vectors")
    T = tensor_module if tensor_module is not None else repn.tensor(A, B)
    seed = np.kron(A.hw_vector, B.hw_vector)
    return generate_submodule(T, seed, tol)


def cartan_projection(A, B, tensor_module=None, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    _, emb = cartan_component(A, B, tensor_module, tol)
    return emb.matrix @ emb.matrix.T


def fusion_multiplicities(Vl, Vm, tol: ToleranceProfile = DEFAULT_TOL) -> dict:
    """nu -> multiplicity of V_nu in Vl ox Vm, with the classical upper bound
    (and its equality criterion) enforced as invariants."""
    if Vl.highest_weight is None or Vm.highest_weight is None:
        raise ValueError("fusion_multiplicities needs simple inputs")
    mu = Vm.highest_weight
    T = repn.tensor(Vl, Vm)
    report = highest_weight_space(T, tol)
    mults = report.multiplicities

    lam_weights = [Weight(w) for w in Vl.weight_blocks().keys()]
    criterion = all(
        lp(i) + mu(i) >= -1 for lp in lam_weights for i in range(1, Vl.N)
    )
    for nu, m in mults.items():
        bound = len(Vl.weight_blocks().get((nu - mu).coords, ()))
        if m > bound:
            raise InvariantViolation(
                f"multiplicity {m} of {nu} exceeds weight-multiplicity bound {bound}"
            )
    if criterion:
        for lp in lam_weights:
            nu = mu + lp
            if not nu.is_dominant:
                continue
            bound = len(Vl.weight_blocks()[lp.coords])
            if mults.get(nu, 0) != bound:
                raise InvariantViolation(
                    f"equality criterion met but mult({nu}) = "
                    f"{mults.get(nu, 0)} != {bound}"
                )
    return mults


def s_invariant_dim(V, S, wt: Weight, tol: ToleranceProfile = DEFAULT_TOL) -> int:
    """dim of the weight-wt subspace killed by E_i and F_i for i in S."""
    blocks = V.weight_blocks()
    idx = blocks.get(wt.coords)
    if idx is None:
        return 0
    stacked = []
    for i in S:
        for mats, sgn in ((V.E, 1), (V.F, -1)):
            target = tuple(np.asarray(wt.coords) + sgn * simple_root(i, V.N).as_array())
            rows = blocks.get(target)
            if rows is not None:
                stacked.append(mats[i][np.ix_(rows, idx)])
    if not stacked:
        return len(idx)
    return nullspace(np.vstack(stacked), tol).shape[1]
