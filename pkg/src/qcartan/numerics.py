"""Dense real linear algebra with explicit tolerance contracts.

Every rank decision (nullspace dimension, dependent-vector drop) carries a
spectral-gap certificate; if the singular values do not separate cleanly the
operation raises AmbiguousRank instead of silently thresholding. This matters
because the convergence quantities measured downstream genuinely approach 0
and must never be confused with numerical noise.

Real scalars throughout: with the sign conventions used by the representation
layer every generator matrix, coproduct and R-matrix factor is real for q > 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "AmbiguousRank",
    "InvariantViolation",
    "ToleranceProfile",
    "DEFAULT_TOL",
    "operator_norm",
    "nullspace",
    "orthonormalize",
    "projector",
]


class AmbiguousRank(Exception):
    """Spectral-gap certificate failed: the kernel dimension cannot be trusted."""


class InvariantViolation(Exception):
    """A mathematical invariant that should hold by construction was violated."""


@dataclass(frozen=True)
class ToleranceProfile:
    nullspace_rel_tol: float = 1e-9
    gap_ratio_min: float = 1e3
    identity_tol: float = 1e-9

    def __post_init__(self):
        if not (self.nullspace_rel_tol > 0 and self.identity_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.gap_ratio_min > 1:
            raise ValueError("gap_ratio_min must exceed 1")


DEFAULT_TOL = ToleranceProfile()


def operator_norm(M) -> float:
    """Largest singular value (0 for empty matrices)."""
    M = np.asarray(M, dtype=np.float64)
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[0])


def nullspace(M, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of {v : Mv = 0}, gap-certified.

    Splits singular values at nullspace_rel_tol * sigma_max and demands the
    two classes be separated by a ratio >= gap_ratio_min.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError("nullspace expects a matrix")
    m, n = M.shape
    if n == 0:
        return np.zeros((0, 0))
    if m == 0 or not M.any():
        return np.eye(n)
    _, s, Vt = np.linalg.svd(M)
    smax = s[0]
    if smax == 0.0:
        return np.eye(n)
    cut = tol.nullspace_rel_tol * smax
    r = int(np.count_nonzero(s > cut))
    if 0 < r < len(s):
        # certificate: smallest kept / largest dropped
        dropped = s[r]
        if dropped > 0 and s[r - 1] / dropped < tol.gap_ratio_min:
            raise AmbiguousRank(
                f"nullspace gap {s[r - 1]:.3e}/{dropped:.3e} below "
                f"gap_ratio_min={tol.gap_ratio_min:g}"
            )
    return Vt[r:].T.copy()


def _as_columns(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        return np.array(vectors, dtype=np.float64)
    cols = [np.asarray(v, dtype=np.float64).reshape(-1) for v in vectors]
    if not cols:
        return np.zeros((0, 0))
    return np.stack(cols, axis=1)


def orthonormalize(vectors, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """Modified Gram-Schmidt with reorthogonalization; returns columns.

    Preserves already-orthonormal input exactly (up to sign: none is flipped).
    Linearly dependent inputs are dropped; deciding 'dependent vs kept' is
    gap-guarded like nullspace.
    """
    V = _as_columns(vectors)
    if V.size == 0:
        return V
    keep = []
    drop_band_hi = tol.nullspace_rel_tol * tol.gap_ratio_min
    for j in range(V.shape[1]):
        v = V[:, j]
        scale = np.linalg.norm(v)
        if scale == 0.0:
            continue
        w = v.copy()
        for _ in range(2):  # MGS pass + one reorthogonalization
            for u in keep:
                w = w - (u @ w) * u
        rem = np.linalg.norm(w) / scale
        if rem <= tol.nullspace_rel_tol:
            continue
        if rem < drop_band_hi:
            raise AmbiguousRank(
                f"orthonormalize: residual ratio {rem:.3e} inside the ambiguous "
                f"band ({tol.nullspace_rel_tol:g}, {drop_band_hi:g})"
            )
        keep.append(w / np.linalg.norm(w))
    if not keep:
        return np.zeros((V.shape[0], 0))
    return np.stack(keep, axis=1)


def projector(onb, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """Q Q^T for an orthonormal set Q (columns). Input is checked, not fixed."""
    Q = _as_columns(onb)
    if Q.shape[1] == 0:
        return np.zeros((Q.shape[0], Q.shape[0]))
    G = Q.T @ Q
    err = np.max(np.abs(G - np.eye(Q.shape[1])))
    if err > tol.identity_tol:
        raise ValueError(f"projector: input not orthonormal (Gram residual {err:.3e})")
    return Q @ Q.T
