"""Closed-form q-symmetric monomial model for the defining-weight chain.

The degree-n space H_n has the orthogonal basis of sorted monomials
e_1^{d_1} ... e_N^{d_N} (d_i >= 0, sum d_i = n) with squared norm
q^D * prod_i [d_i]_q! / [n]_q!,  D = sum_{i<j} d_i d_j.

Creation by a basis letter is a generalized permutation in this basis, so all
operator relations restrict to per-monomial scalar identities; the residual
functions below exploit that and never build matrices.  Matrices are only
assembled where a basis change is the point (creation_closed /
annihilation_closed / chain_intertwiner).

Basis order: monomials of a fixed degree are listed lexicographically
descending in d, so e_1^n comes first and lines up with the chain's 0-th
basis vector.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .numerics import InvariantViolation
from .qcore import Weight, q_factorial, q_int

__all__ = [
    "monomials",
    "monomial_index",
    "monomial_norm_sq",
    "creation_closed",
    "annihilation_closed",
    "q_arveson_residuals",
    "cuntz_pimsner_residual",
    "chain_intertwiner",
    "component_overlap",
]


@lru_cache(maxsize=None)
def monomials(N: int, n: int) -> tuple:
    """All exponent vectors of degree n, lexicographically descending."""
    if N == 1:
        return ((n,),)
    out = []
    for d1 in range(n, -1, -1):
        for rest in monomials(N - 1, n - d1):
            out.append((d1,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def monomial_index(N: int, n: int) -> dict:
    return {d: i for i, d in enumerate(monomials(N, n))}


def monomial_norm_sq(d, q: float) -> float:
    d = tuple(int(x) for x in d)
    n = sum(d)
    D = (n * n - sum(x * x for x in d)) // 2
    num = 1.0
    for x in d:
        num *= q_factorial(x, q)
    return q ** D * num / q_factorial(n, q)


def _d_prev(d, i: int) -> int:
    """Sum of exponents strictly left of letter i (1-based)."""
    return sum(d[: i - 1])


def _s(i: int, d, q: float, n: int) -> float:
    """Creation scalar: S_i u_d = _s(i,d) u_{d+delta_i} on unit monomials."""
    return (q ** (-_d_prev(d, i)) * q ** ((n - d[i - 1]) / 2.0)
            * np.sqrt(q_int(d[i - 1] + 1, q) / q_int(n + 1, q)))


def creation_closed(i: int, n: int, q: float, N: int) -> np.ndarray:
    """Matrix of S_i : H_n -> H_{n+1} in the unit monomial bases."""
    src = monomials(N, n)
    tgt = monomial_index(N, n + 1)
    A = np.zeros((len(tgt), len(src)))
    for c, d in enumerate(src):
        e = list(d)
        e[i - 1] += 1
        A[tgt[tuple(e)], c] = _s(i, d, q, n)
    return A


def annihilation_closed(i: int, n: int, q: float, N: int) -> np.ndarray:
    """Matrix of S_i* : H_n -> H_{n-1}, from the displayed adjoint formula.

    Entry q^{D_N - D_i} [d_i]_q / [D_N]_q on raw monomials, rescaled by the
    norm ratio; kept as an independent evaluation path so that agreement with
    creation_closed(...).T is a real check, not a tautology.
    """
    src = monomials(N, n)
    tgt = monomial_index(N, n - 1)
    A = np.zeros((len(tgt), len(src)))
    for c, d in enumerate(src):
        if d[i - 1] == 0:
            continue
        e = list(d)
        e[i - 1] -= 1
        Di = sum(d[:i])
        raw = q ** (n - Di) * q_int(d[i - 1], q) / q_int(n, q)
        scale = np.sqrt(monomial_norm_sq(e, q) / monomial_norm_sq(d, q))
        A[tgt[tuple(e)], c] = raw * scale
    return A


def _scalar_tables(N: int, n: int, q: float):
    """Vectorized diagonal scalars on H_n.

    Returns (ss[i] = scalar of S_i* S_i, tt[i] = scalar of S_i S_i*), both
    (count, N) arrays over the monomial list.
    """
    D = np.array(monomials(N, n), dtype=np.float64)
    prev = np.cumsum(D, axis=1) - D  # exponent mass strictly left of each letter
    qn1 = q_int(n + 1, q)
    ss = q ** (-2.0 * prev) * q ** (n - D) * np.vectorize(
        lambda x: q_int(x + 1, q))(D) / qn1
    if n == 0:
        tt = np.zeros_like(D)
    else:
        qn = q_int(n, q)
        tt = np.where(D >= 1,
                      q ** (-2.0 * prev) * q ** (n - D)
                      * np.vectorize(lambda x: q_int(x, q))(D) / qn,
                      0.0)
    return ss, tt


def q_arveson_residuals(n: int, q: float, N: int) -> dict:
    """Max per-monomial residuals of the two level-n commutation identities.

    (a) S_i* S_j = ([n]/[n+1]) S_j S_i*          (i != j)
    (b) S_i* S_i = q([n]/[n+1]) S_i S_i*
                   + (q - 1/q)([n]/[n+1]) sum_{j>i} S_j S_j* + q^{-n}/[n+1].
    Both sides are generalized permutations, so the operator norm of the
    difference is the max over monomials of the scalar mismatch.
    """
    mons = monomials(N, n)
    ratio = q_int(n, q) / q_int(n + 1, q) if n >= 1 else 0.0
    off = 0.0
    if n >= 1:
        for d in mons:
            for i in range(1, N + 1):
                if d[i - 1] == 0:
                    continue
                for j in range(1, N + 1):
                    if j == i:
                        continue
                    e = list(d)
                    e[j - 1] += 1
                    e[i - 1] -= 1
                    lhs = _s(j, d, q, n) * _s(i, tuple(e), q, n)
                    f = list(d)
                    f[i - 1] -= 1
                    rhs = ratio * _s(i, tuple(f), q, n - 1) * _s(j, tuple(f), q, n - 1)
                    off = max(off, abs(lhs - rhs))
    ss, tt = _scalar_tables(N, n, q)
    const = q ** (-float(n)) / q_int(n + 1, q)
    diag = 0.0
    for i in range(N):
        tail = tt[:, i + 1:].sum(axis=1)
        resid = ss[:, i] - q * ratio * tt[:, i] - (q - 1.0 / q) * ratio * tail - const
        diag = max(diag, float(np.max(np.abs(resid))))
    return {"off_diag": off, "diag": diag}


def cuntz_pimsner_residual(n: int, q: float, N: int) -> dict:
    """Residuals on H_n of the limit relations (branch chosen by q vs 1).

    q >= 1: s_i s_j = q s_j s_i (i<j); s_i* s_j = q^{-1} s_j s_i* (i != j);
            s_i* s_i = s_i s_i* + (1 - q^{-2}) sum_{j>i} s_j s_j*.
    q <= 1: same exchange; s_i* s_j = q s_j s_i*;
            s_i* s_i = s_i s_i* + (1 - q^2) sum_{j<i} s_j s_j*.
    Also reports the resolution-of-identity residual of sum_i s_i s_i* = 1.
    """
    mons = monomials(N, n)
    ge1 = q >= 1.0
    exch = 0.0
    star = 0.0
    for d in mons:
        for i in range(1, N + 1):
            for j in range(i + 1, N + 1):
                di = list(d)
                di[i - 1] += 1
                dj = list(d)
                dj[j - 1] += 1
                lhs = _s(j, d, q, n) * _s(i, tuple(dj), q, n + 1)
                rhs = q * _s(i, d, q, n) * _s(j, tuple(di), q, n + 1)
                exch = max(exch, abs(lhs - rhs))
        if n >= 1:
            for i in range(1, N + 1):
                if d[i - 1] == 0:
                    continue
                for j in range(1, N + 1):
                    if j == i:
                        continue
                    e = list(d)
                    e[j - 1] += 1
                    e[i - 1] -= 1
                    lhs = _s(j, d, q, n) * _s(i, tuple(e), q, n)
                    f = list(d)
                    f[i - 1] -= 1
                    fac = (1.0 / q) if ge1 else q
                    rhs = fac * _s(i, tuple(f), q, n - 1) * _s(j, tuple(f), q, n - 1)
                    star = max(star, abs(lhs - rhs))
    ss, tt = _scalar_tables(N, n, q)
    diag = 0.0
    for i in range(N):
        if ge1:
            tail = (1.0 - q ** -2.0) * tt[:, i + 1:].sum(axis=1)
        else:
            tail = (1.0 - q ** 2.0) * tt[:, :i].sum(axis=1)
        resid = ss[:, i] - tt[:, i] - tail
        diag = max(diag, float(np.max(np.abs(resid))))
    resolution = float(np.max(np.abs(tt.sum(axis=1) - 1.0))) if n >= 1 else 1.0
    return {"exchange": exch, "star_exchange": star, "diag": diag,
            "resolution": resolution}


def chain_intertwiner(chain, n: int) -> np.ndarray:
    """Map H_n -> V_{n w1} sending unit monomials to normalized shift words.

    Column for d is (S_1^{d_1} ... S_N^{d_N} vacuum) / ||e^d||; the claim under
    test is that these columns are orthonormal (so the matrix is a unitary
    intertwiner of the two models).  Words are built by peeling the leftmost
    letter, memoized level by level.
    """
    from . import sps

    N = chain.N
    if chain.base.dim != N or chain.lam != Weight.from_partition([1] + [0] * (N - 1)):
        raise ValueError("the closed-form model matches the defining-weight chain only")
    if n > chain.M - 1 and n != 0:
        raise ValueError("chain truncation too small")
    eye = np.eye(N)
    vecs = {(0,) * N: np.ones(1)}
    for k in range(1, n + 1):
        nxt = {}
        for d in monomials(N, k):
            i = next(a for a in range(N) if d[a] > 0)
            e = list(d)
            e[i] -= 1
            blk = sps._creation_block(chain, eye[i], k - 1)
            nxt[d] = blk @ vecs[tuple(e)]
        vecs = nxt
    cols = [vecs[d] / np.sqrt(monomial_norm_sq(d, chain.q)) for d in monomials(N, n)]
    return np.column_stack(cols)


def component_overlap(chain, m: int, k: int, n: int) -> float:
    """|<zeta^k (x) xi_{n w1}, xi^{(n,k)}>| for the rank-one chain (N = 2).

    zeta^k is the unit vector q^{-k(m-k)/2} ([m]!/([k]![m-k]!))^{1/2}
    e_1^k e_2^{m-k} of H_m = V_{m w1}, and xi^{(n,k)} is the extracted highest
    weight vector of the component of V_{m w1} (x) V_{n w1} whose highest
    weight (n+2k-m) matches the weight of zeta^k (x) e_1^n (needs n >= m).
    """
    from . import decomp, repn

    if chain.N != 2:
        raise ValueError("defined for rank one only")
    q = chain.q
    if not 0 <= k <= m or not 0 <= n <= chain.M or m > chain.M:
        raise ValueError("indices out of range")
    d = (k, m - k)
    gamma = (q ** (-k * (m - k) / 2.0)
             * np.sqrt(q_factorial(m, q) / (q_factorial(k, q) * q_factorial(m - k, q)))
             * np.sqrt(monomial_norm_sq(d, q)))
    U = chain_intertwiner(chain, m)
    zeta = gamma * U[:, monomial_index(2, m)[d]]
    T = repn.tensor(chain.levels[m], chain.levels[n])
    cols = decomp.highest_weight_space(T, chain.tol).vectors_of(Weight((n + 2 * k - m,)))
    if cols.shape[1] != 1:
        raise InvariantViolation("component not multiplicity one")
    dn = chain.levels[n].dim
    # xi_{n lam} is one-hot at 0, so the pairing only reads rows (a, 0)
    return float(abs(zeta @ cols[::dn, 0]))
