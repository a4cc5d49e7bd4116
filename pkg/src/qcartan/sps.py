"""Cartan subproduct chains, truncated Fock spaces, shift operators, psi/Theta.

A chain holds the modules V_{n*lam} for n = 0..M together with two families of
isometric structure maps: the left maps w_n : V_{(n+1)lam} -> V_lam (x) V_{n lam}
(each level is literally constructed as the submodule generated by the product
of highest weight vectors, so the left phase law w_n xi_{(n+1)lam} =
xi_lam (x) xi_{n lam} holds *bit-exactly*: in chain coordinates every highest
weight vector is the 0-th basis vector and the seed column of w_n is one-hot),
and the right maps w'_n : V_{(n+1)lam} -> V_{n lam} (x) V_lam obtained as the
(n,1) pair isometries.

Pair isometries w_{k,l} : V_{(k+l)lam} -> V_{k lam} (x) V_{l lam} are built by
composing the w maps left-greedily and re-orthonormalizing once (polar
correction); coassociativity is then certified numerically rather than assumed.

Truncated Fock space operators are kept block-per-level (BlockOp): creation
S_xi, its adjoint, right creation R_xi, level projectors, the compression maps
psi_{n,n+k} and the transfer operator Theta.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import decomp, repn
from .numerics import (DEFAULT_TOL, InvariantViolation, ToleranceProfile,
                       nullspace, operator_norm)
from .qcore import Weight, fundamental_weight, pairing, q_int, weyl_dim

__all__ = [
    "CartanChain",
    "build_chain",
    "GeneralWeightBuilder",
    "FockSpace",
    "BlockOp",
    "creation",
    "annihilation",
    "right_creation",
    "level_projector",
    "psi",
    "theta",
    "eq_comm_residual",
]


def _apply_left(W: np.ndarray, X: np.ndarray, dright: int) -> np.ndarray:
    """(W (x) 1_dright) @ X without forming the Kronecker product."""
    p, m = W.shape
    c = X.shape[1]
    Xr = X.reshape(m, dright, c)
    return np.tensordot(W, Xr, axes=([1], [0])).reshape(p * dright, c)


def _apply_right(W: np.ndarray, X: np.ndarray, dleft: int) -> np.ndarray:
    """(1_dleft (x) W) @ X without forming the Kronecker product."""
    p, m = W.shape
    c = X.shape[1]
    Xr = X.reshape(dleft, m, c)
    return np.einsum("ai,bic->bac", W, Xr).reshape(dleft * p, c)


def _polar(G: np.ndarray) -> np.ndarray:
    """Nearest isometry to G (tall matrix with near-unit singular values)."""
    U, s, Vt = np.linalg.svd(G, full_matrices=False)
    if s.size and s[-1] < 0.5:
        raise InvariantViolation(
            f"pair-isometry composition nearly rank-deficient (sigma_min={s[-1]:.3e})"
        )
    return U @ Vt


def _auto_work_dtype(lam: Weight, q: float, M: int, tol: ToleranceProfile):
    """float64, or longdouble when deep levels would drown the relation gate.

    The top level of a chain carries generator entries of q-integer size
    roughly [steps/2]_q where steps = M * (number of fundamental-weight
    steps in lam); the checked relations multiply three of those together,
    so float64 roundoff in the construction approaches 32 * s^3 * eps.
    Once that is within an order of magnitude of identity_tol the whole
    level recursion is carried out in extended precision and each level is
    rounded to float64 exactly once, instead of compounding double-precision
    drift level by level.
    """
    qm = max(float(q), 1.0 / float(q))
    steps = M * sum(lam.coords)
    scale = q_int(steps // 2 + 2, qm)
    noise = 32.0 * scale ** 3 * float(np.finfo(np.float64).eps)
    if noise > tol.identity_tol / 8.0:
        return np.dtype(np.longdouble)
    return np.dtype(np.float64)


class CartanChain:
    """Levels V_{n*lam}, n = 0..M, with left/right structure isometries.

    levels[n]   -- QModule for V_{n lam} (level 0 is the trivial module)
    w[n]        -- left isometry V_{(n+1)lam} -> V_lam (x) V_{n lam}, n <= M-1
    All highest weight vectors are basis vector 0 of their level.
    """

    def __init__(self, lam: Weight, q: float, M: int,
                 tol: ToleranceProfile = DEFAULT_TOL, base=None, work_dtype=None):
        if not lam.is_dominant or all(c == 0 for c in lam.coords):
            raise ValueError(f"chain weight must be dominant nonzero, got {lam}")
        if M < 1:
            raise ValueError("chain needs at least one level above the vacuum")
        self.lam = lam
        self.q = float(q)
        self.M = int(M)
        self.tol = tol
        self.N = lam.N
        if base is None:
            base = GeneralWeightBuilder(self.N, q, tol).module(lam)
        if base.hw_index != 0:
            raise ValueError("chain base module must carry its h.w. vector at index 0")
        self.base = base
        dl = base.dim
        if work_dtype is None:
            work_dtype = _auto_work_dtype(lam, self.q, self.M, tol)
        self.work_dtype = np.dtype(work_dtype)
        widened = self.work_dtype != np.float64

        # The level recursion runs in work_dtype; public levels and
        # isometries are always float64 (rounded once per level, with the
        # relation gate re-applied to what is actually stored).
        self.levels = [repn.trivial_module(self.N, self.q), base]
        self.w = [np.eye(dl)]  # V_lam -> V_lam (x) V_0
        base_work = repn.as_dtype(base, self.work_dtype)
        prev_work = base_work
        for n in range(1, M):
            T = repn.tensor(base_work, prev_work)
            seed = np.zeros(T.dim, dtype=self.work_dtype)
            seed[0] = 1.0  # xi_lam (x) xi_{n lam} in chain coordinates
            sub, emb = decomp.generate_submodule(T, seed, tol)
            if sub.dim != weyl_dim(lam * (n + 1)):
                raise InvariantViolation("chain level dimension mismatch")
            if widened:
                pub = repn.as_dtype(sub, np.float64)
                repn.check_module(pub, tol, raise_on_fail=True)
                self.levels.append(pub)
                self.w.append(np.asarray(emb.matrix, dtype=np.float64))
            else:
                self.levels.append(sub)
                self.w.append(emb.matrix)
            prev_work = sub

        self._pair_cache: dict = {}
        self._lowest_cache: dict = {}

    @classmethod
    def from_parts(cls, lam: Weight, q: float, M: int, tol: ToleranceProfile,
                   levels: list, w: list) -> "CartanChain":
        """Reassemble a chain from stored levels and isometries (no rebuild).

        Only shape bookkeeping is checked here; callers that read the parts
        from disk must re-verify substance (check_module per level and
        coassociativity) before trusting the instance.
        """
        if len(levels) != M + 1 or len(w) != M:
            raise ValueError("need M+1 levels and M isometries")
        self = cls.__new__(cls)
        self.lam = lam
        self.q = float(q)
        self.M = int(M)
        self.tol = tol
        self.N = lam.N
        self.base = levels[1]
        self.work_dtype = np.dtype(np.float64)
        self.levels = list(levels)
        self.w = [np.asarray(m, dtype=np.float64) for m in w]
        dl = self.base.dim
        for n, mat in enumerate(self.w):
            want = (dl * levels[n].dim, levels[n + 1].dim)
            if mat.shape != want:
                raise ValueError(f"isometry {n} has shape {mat.shape}, want {want}")
        self._pair_cache = {}
        self._lowest_cache = {}
        return self

    # -- basic accessors ---------------------------------------------------

    @property
    def dims(self) -> list:
        return [lv.dim for lv in self.levels]

    def hw_vector(self, n: int) -> np.ndarray:
        v = np.zeros(self.levels[n].dim)
        v[0] = 1.0
        return v

    def lowest_vector(self, n: int) -> np.ndarray:
        """Unit lowest weight vector of level n (cached; sign-fixed)."""
        if n not in self._lowest_cache:
            cols = decomp.lowest_weight_space(self.levels[n], self.tol).basis_matrix(
                self.levels[n].dim)
            if cols.shape[1] != 1:
                raise InvariantViolation(
                    f"level {n} has {cols.shape[1]} lowest weight vectors")
            self._lowest_cache[n] = cols[:, 0]
        return self._lowest_cache[n]

    # -- pair isometries ----------------------------------------------------

    def pair_isometry(self, k: int, l: int) -> np.ndarray:
        """w_{k,l}: V_{(k+l)lam} -> V_{k lam} (x) V_{l lam}, polar-corrected."""
        if k + l > self.M:
            raise ValueError(f"pair ({k},{l}) exceeds truncation {self.M}")
        if k == 0 or l == 0:
            return np.eye(self.levels[k + l].dim)
        if k == 1:
            return self.w[l]
        key = (k, l)
        if key not in self._pair_cache:
            dl = self.base.dim
            dlev = [lv.dim for lv in self.levels]
            X = self.w[k + l - 1]                       # -> V_lam (x) V_{(k+l-1)lam}
            X = _apply_right(self.pair_isometry(k - 1, l), X, dl)
            X = _apply_left(self.w[k - 1].T, X, dlev[l])
            W = _polar(X)
            res = np.max(np.abs(W.T @ W - np.eye(W.shape[1])))
            if res > self.tol.identity_tol:
                raise InvariantViolation(f"pair isometry ({k},{l}) not isometric: {res:.3e}")
            self._pair_cache[key] = W
        return self._pair_cache[key]

    def right_isometry(self, n: int) -> np.ndarray:
        """w'_n: V_{(n+1)lam} -> V_{n lam} (x) V_lam."""
        return self.pair_isometry(n, 1)

    def coassociativity_residual(self, k: int, l: int, n: int) -> float:
        """|| (w_{k,l} (x) 1) w_{k+l,n} - (1 (x) w_{l,n}) w_{k,l+n} ||."""
        if min(k, l, n) == 0:
            return 0.0
        dlev = [lv.dim for lv in self.levels]
        left = _apply_left(self.pair_isometry(k, l), self.pair_isometry(k + l, n), dlev[n])
        right = _apply_right(self.pair_isometry(l, n), self.pair_isometry(k, l + n), dlev[k])
        return operator_norm(left - right)

    def certify_coassociativity(self, max_total: int | None = None) -> float:
        """Max residual over all k,l,n >= 1 with k+l+n <= max_total."""
        t = self.M if max_total is None else min(max_total, self.M)
        worst = 0.0
        for k in range(1, t - 1):
            for l in range(1, t - k):
                for n in range(1, t - k - l + 1):
                    worst = max(worst, self.coassociativity_residual(k, l, n))
        return worst

    def __repr__(self):
        return (f"CartanChain(lam={self.lam}, q={self.q}, M={self.M}, "
                f"dims={self.dims})")


def build_chain(lam: Weight, q: float, M: int,
                tol: ToleranceProfile = DEFAULT_TOL) -> CartanChain:
    return CartanChain(lam, q, M, tol)


class GeneralWeightBuilder:
    """Simple modules V_mu for dominant mu, built by peeling fundamental weights.

    V_{omega_1} is the defining module; V_{omega_k} is extracted from
    V_{omega_1} (x) V_{omega_{k-1}} as the (multiplicity one) highest weight
    component at omega_k; a general V_mu is the top component of
    V_{omega_i} (x) V_{mu - omega_i} for the smallest i with mu(i) > 0.
    Every module from the builder has its h.w. vector at index 0.
    """

    def __init__(self, N: int, q: float, tol: ToleranceProfile = DEFAULT_TOL):
        self.N = int(N)
        self.q = float(q)
        self.tol = tol
        self._cache: dict = {}

    def fundamental(self, k: int):
        if not 1 <= k <= self.N - 1:
            raise ValueError(f"fundamental index {k} out of range for rank {self.N - 1}")
        key = fundamental_weight(k, self.N).coords
        if key not in self._cache:
            if k == 1:
                self._cache[key] = repn.standard_module(self.N, self.q)
            else:
                T = repn.tensor(repn.standard_module(self.N, self.q),
                                self.fundamental(k - 1))
                seed = decomp.highest_weight_space(T, self.tol).vectors_of(
                    fundamental_weight(k, self.N))
                if seed.shape[1] != 1:
                    raise InvariantViolation(
                        f"fundamental weight {k} not multiplicity one in the tensor step")
                sub, _ = decomp.generate_submodule(T, seed[:, 0], self.tol)
                self._cache[key] = sub
        return self._cache[key]

    def module(self, mu: Weight):
        if mu.N != self.N:
            raise ValueError("weight rank mismatch")
        if not mu.is_dominant:
            raise ValueError(f"{mu} is not dominant")
        if all(c == 0 for c in mu.coords):
            return repn.trivial_module(self.N, self.q)
        if mu.coords not in self._cache:
            i = next(k for k in range(1, self.N) if mu(k) > 0)
            A = self.fundamental(i)
            B = self.module(mu - fundamental_weight(i, self.N))
            sub, _ = decomp.cartan_component(A, B, tol=self.tol)
            self._cache[mu.coords] = sub
        return self._cache[mu.coords]


# -- truncated Fock space -------------------------------------------------


class FockSpace:
    """Direct sum of the chain levels 0..M with block index arithmetic."""

    def __init__(self, chain: CartanChain, M: int | None = None):
        self.chain = chain
        self.M = chain.M if M is None else min(M, chain.M)
        self.dims = [lv.dim for lv in chain.levels[: self.M + 1]]
        self.offsets = np.concatenate([[0], np.cumsum(self.dims)])

    @property
    def dim(self) -> int:
        return int(self.offsets[-1])

    def level_slice(self, n: int) -> slice:
        return slice(int(self.offsets[n]), int(self.offsets[n + 1]))


@dataclass
class BlockOp:
    """Level-homogeneous operator on a truncated Fock space.

    blocks[n] maps level n to level n + shift; absent blocks are zero.
    """

    fock: FockSpace
    shift: int
    blocks: dict = field(default_factory=dict)

    def _zero(self, n: int) -> np.ndarray:
        return np.zeros((self.fock.dims[n + self.shift], self.fock.dims[n]))

    def block(self, n: int) -> np.ndarray:
        b = self.blocks.get(n)
        return self._zero(n) if b is None else b

    def __matmul__(self, other: "BlockOp") -> "BlockOp":
        out = BlockOp(self.fock, self.shift + other.shift)
        for n, b in other.blocks.items():
            m = n + other.shift
            if m in self.blocks:
                out.blocks[n] = self.blocks[m] @ b
        return out

    def _combine(self, other: "BlockOp", sign: float) -> "BlockOp":
        if self.shift != other.shift:
            raise ValueError("cannot add block operators of different shifts")
        out = BlockOp(self.fock, self.shift)
        for n in set(self.blocks) | set(other.blocks):
            out.blocks[n] = self.block(n) + sign * other.block(n)
        return out

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __rmul__(self, scalar: float) -> "BlockOp":
        out = BlockOp(self.fock, self.shift)
        for n, b in self.blocks.items():
            out.blocks[n] = scalar * b
        return out

    def adjoint(self) -> "BlockOp":
        out = BlockOp(self.fock, -self.shift)
        for n, b in self.blocks.items():
            out.blocks[n + self.shift] = b.T
        return out

    def level_norm(self, n: int) -> float:
        b = self.blocks.get(n)
        return 0.0 if b is None else operator_norm(b)

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.fock.dim, self.fock.dim))
        for n, b in self.blocks.items():
            A[self.fock.level_slice(n + self.shift), self.fock.level_slice(n)] = b
        return A

    @staticmethod
    def identity(fock: FockSpace) -> "BlockOp":
        return BlockOp(fock, 0, {n: np.eye(d) for n, d in enumerate(fock.dims)})


def _creation_block(chain: CartanChain, xi: np.ndarray, n: int) -> np.ndarray:
    """w_n^T (xi (x) .) : V_{n lam} -> V_{(n+1)lam}."""
    dl = chain.base.dim
    dn = chain.levels[n].dim
    dn1 = chain.levels[n + 1].dim
    Wr = chain.w[n].reshape(dl, dn, dn1)
    return np.tensordot(xi, Wr, axes=([0], [0])).T


def _right_creation_block(chain: CartanChain, xi: np.ndarray, n: int) -> np.ndarray:
    """w'_n^T (. (x) xi) : V_{n lam} -> V_{(n+1)lam}."""
    dl = chain.base.dim
    dn = chain.levels[n].dim
    dn1 = chain.levels[n + 1].dim
    Wr = chain.right_isometry(n).reshape(dn, dl, dn1)
    return np.tensordot(xi, Wr, axes=([0], [1])).T


def creation(chain: CartanChain, xi: np.ndarray, M: int | None = None,
             fock: FockSpace | None = None) -> BlockOp:
    """Left shift S_xi; the top truncation level maps to zero."""
    if fock is None:
        fock = FockSpace(chain, M)
    xi = np.asarray(xi, dtype=np.float64)
    op = BlockOp(fock, 1)
    for n in range(fock.M):
        op.blocks[n] = _creation_block(chain, xi, n)
    return op


def annihilation(chain: CartanChain, zeta: np.ndarray, M: int | None = None,
                 fock: FockSpace | None = None) -> BlockOp:
    return creation(chain, zeta, M, fock).adjoint()


def right_creation(chain: CartanChain, xi: np.ndarray, M: int | None = None,
                   fock: FockSpace | None = None) -> BlockOp:
    if fock is None:
        fock = FockSpace(chain, M)
    xi = np.asarray(xi, dtype=np.float64)
    op = BlockOp(fock, 1)
    for n in range(fock.M):
        op.blocks[n] = _right_creation_block(chain, xi, n)
    return op


def level_projector(fock: FockSpace, n: int) -> BlockOp:
    return BlockOp(fock, 0, {n: np.eye(fock.dims[n])})


def psi(chain: CartanChain, n: int, k: int, T: np.ndarray) -> np.ndarray:
    """Compression w_{n,k}^T (T (x) 1) w_{n,k} : B(V_{n lam}) -> B(V_{(n+k)lam})."""
    W = chain.pair_isometry(n, k)
    dk = chain.levels[k].dim
    return W.T @ _apply_left(T, W, dk)


def theta(chain: CartanChain, X: BlockOp) -> BlockOp:
    """Transfer operator: Theta(X)_{n+1} = sum_i R_i|_n X_n R_i|_n^T (level 0 -> 0)."""
    if X.shift != 0:
        raise ValueError("theta acts on block-diagonal operators")
    fock = X.fock
    out = BlockOp(fock, 0)
    dl = chain.base.dim
    for n, b in X.blocks.items():
        if n >= fock.M:
            continue
        acc = None
        for i in range(dl):
            R = _right_creation_block(chain, np.eye(dl)[i], n)
            term = R @ b @ R.T
            acc = term if acc is None else acc + term
        m = n + 1
        out.blocks[m] = acc if m not in out.blocks else out.blocks[m] + acc
    return out


def eq_comm_residual(chain: CartanChain, sigma: np.ndarray, n: int) -> float:
    """Per-level residual of S_zeta S_xi = q^{-(lam,lam)} S^(2) sigma(zeta (x) xi).

    sigma is the braiding matrix on V_lam (x) V_lam; the identity is checked on
    the full basis grid (zeta, xi) at level n (needs n + 2 <= M).
    """
    dl = chain.base.dim
    qfac = chain.q ** (-pairing(chain.lam, chain.lam))
    P = [[_creation_block(chain, np.eye(dl)[a], n + 1)
          @ _creation_block(chain, np.eye(dl)[b], n) for b in range(dl)]
         for a in range(dl)]
    worst = 0.0
    for i in range(dl):
        for j in range(dl):
            rhs = None
            col = sigma[:, i * dl + j]
            for a in range(dl):
                for b in range(dl):
                    cab = col[a * dl + b]
                    if cab == 0.0:
                        continue
                    term = cab * P[a][b]
                    rhs = term if rhs is None else rhs + term
            D = P[i][j] - qfac * rhs
            worst = max(worst, float(np.max(np.abs(D))))
    return worst
