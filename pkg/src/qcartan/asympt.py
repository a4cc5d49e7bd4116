"""Convergence and defect measurements along Cartan subproduct chains.

Everything here is a norm of a concrete finite-dimensional matrix:

  a(n) = ||(1 - 1 (x) P^h_{n lam}) P^h_{lam, n lam}||
  b(n) = ||f_{lam, n lam} ((1 - P^h_lam) (x) P^h_{n lam})||
  c(n) = ||P^h_{lam, n lam} - 1 (x) P^h_{n lam}||

together with the lowest-weight duals a_l, b_l, geometric rate fits, the
projector-factorization estimate for the chain isometries, the defect of
star-commutation against the braiding, right/left creation commutators,
vacuum-state limits, and the level-compression (compactification) defect.

Chain coordinates keep every highest weight vector one-hot at index 0, so
the h-quantities reduce to row/column slicing of the chain isometries; the
l-quantities contract against explicitly extracted lowest weight vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qcore import Weight, pairing
from .numerics import (DEFAULT_TOL, InvariantViolation, ToleranceProfile,
                       operator_norm)
from . import decomp, repn
from .braiding import braid_sigma, braid_sigma_inverse
from .sps import (CartanChain, FockSpace, BlockOp, build_chain, creation,
                  right_creation, psi, _apply_left, _apply_right)

GUARD_LEVELS = 2      # rows this close to the truncation are never reported
BURN_IN_ROWS = 2      # rate fits drop this many initial rows
ZERO_FLOOR = 1e-14    # below this a column counts as converged to zero
GEOMETRIC_RESID = 2e-2  # max log-residual for the geometric-decay flag


# ---------------------------------------------------------------------------
# conjecture scan
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceTable:
    """Per-level conjecture quantities for one chain (rows below guard band)."""

    lam: Weight
    q: float
    M: int
    ns: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    a_l: np.ndarray
    b_l: np.ndarray
    tol: ToleranceProfile = field(default=DEFAULT_TOL, repr=False)

    COLUMNS = ("a", "b", "c", "a_l", "b_l")

    def column(self, name: str) -> np.ndarray:
        if name not in self.COLUMNS:
            raise KeyError(f"no column {name!r}; have {self.COLUMNS}")
        return getattr(self, name)

    def __len__(self) -> int:
        return len(self.ns)


def _hw_basis(T, tol: ToleranceProfile) -> np.ndarray:
    return decomp.highest_weight_space(T, tol).basis_matrix(T.dim)


def _lw_basis(T, tol: ToleranceProfile) -> np.ndarray:
    return decomp.lowest_weight_space(T, tol).basis_matrix(T.dim)


def _a_one_hot(Q: np.ndarray, dsub: int) -> float:
    """||(1 - 1 (x) e0 e0^T) Q|| for Q with orthonormal columns."""
    Qz = Q.copy()
    Qz[::dsub, :] = 0.0
    return operator_norm(Qz)


def _a_lowest(Q: np.ndarray, ell: np.ndarray, dleft: int) -> float:
    """||(1 - 1 (x) ell ell^T) Q||."""
    dsub = ell.shape[0]
    r = Q.shape[1]
    Qr = Q.reshape(dleft, dsub, r)
    coef = np.einsum("abr,b->ar", Qr, ell)
    Qz = Qr - coef[:, None, :] * ell[None, :, None]
    return operator_norm(Qz.reshape(dleft * dsub, r))


def _b_one_hot(W: np.ndarray, dsub: int) -> float:
    """||f ((1 - e0 e0^T) (x) e0 e0^T)|| for a component isometry W."""
    return operator_norm(W[dsub::dsub, :])


def _b_lowest(W: np.ndarray, ell_left: np.ndarray, ell: np.ndarray) -> float:
    """||f ((1 - l l^T) (x) l' l'^T)|| via contraction against l'."""
    dleft = ell_left.shape[0]
    dsub = ell.shape[0]
    W3 = W.reshape(dleft, dsub, -1)
    G = np.einsum("abc,b->ac", W3, ell)
    return operator_norm(G - np.outer(ell_left, ell_left @ G))


def _rank_should_stabilize(lam: Weight, weights: np.ndarray, n: int) -> bool:
    """True once n*lam + nu is dominant for every weight nu of the base."""
    shifted = n * lam.as_array()[None, :] + weights
    return bool(np.all(shifted >= 0))


def conjecture_scan(lam: Weight = None, q: float = None, M: int = None,
                    chain: CartanChain = None,
                    tol: ToleranceProfile = DEFAULT_TOL) -> ConvergenceTable:
    """Scan a(n), b(n), c(n) and the lowest-weight duals for n below M-2.

    Raises InvariantViolation when any structural property fails: entries
    must be norms of contractions (<= 1), c(n) must dominate a(n) and (up
    to slack) b(n), the Cartan projector must kill P^h_{lam,n lam} minus
    the product projector, and for regular lam the rank of P^h_{lam,n lam}
    must equal dim V_lam once all shifted weights are dominant.
    """
    if chain is None:
        chain = build_chain(lam, q, M, tol)
    else:
        lam, q, M, tol = chain.lam, chain.q, chain.M, chain.tol
    base = chain.base
    dl = base.dim
    ell_lam = chain.lowest_vector(1)
    regular = all(c > 0 for c in lam.coords)

    ns, A, B, C, AL, BL = [], [], [], [], [], []
    for n in range(1, M - GUARD_LEVELS + 1):
        lev = chain.levels[n]
        dn = lev.dim
        T = repn.tensor(base, lev)
        Qh = _hw_basis(T, tol)
        Ql = _lw_basis(T, tol)
        wn = chain.w[n]
        ell_n = chain.lowest_vector(n)

        a = _a_one_hot(Qh, dn)
        b = _b_one_hot(wn, dn)
        D = Qh @ Qh.T
        D[::dn, ::dn] -= np.eye(dl)
        c = float(np.max(np.abs(np.linalg.eigvalsh(D))))
        a_l = _a_lowest(Ql, ell_n, dl)
        b_l = _b_lowest(wn, ell_lam, ell_n)

        for name, val in (("a", a), ("b", b), ("c", c), ("a_l", a_l), ("b_l", b_l)):
            if not -1e-12 <= val <= 1.0 + 1e-9:
                raise InvariantViolation(f"{name}({n}) = {val} outside [0, 1]")
        if c + 1e-9 < a:
            raise InvariantViolation(f"c({n}) = {c} < a({n}) = {a}")
        if b > c + 1e-7:
            raise InvariantViolation(f"b({n}) = {b} > c({n}) = {c} + slack")

        # f_{lam,n lam} (P^h_{lam,n lam} - P^h_lam (x) P^h_{n lam}) = 0
        M4 = (wn.T @ Qh) @ Qh.T
        M4[:, 0] -= wn[0, :]
        r4 = operator_norm(M4)
        if r4 > 1e-8:
            raise InvariantViolation(
                f"Cartan projector does not absorb the product projector "
                f"at n={n}: residual {r4:.3e}")

        if regular and _rank_should_stabilize(lam, base.weights, n) \
                and Qh.shape[1] != dl:
            raise InvariantViolation(
                f"rank P^h = {Qh.shape[1]} != dim V_lam = {dl} at n={n}")

        ns.append(n)
        A.append(a); B.append(b); C.append(c); AL.append(a_l); BL.append(b_l)

    return ConvergenceTable(lam, q, M, np.array(ns),
                            np.array(A), np.array(B), np.array(C),
                            np.array(AL), np.array(BL), tol)


# ---------------------------------------------------------------------------
# rate fits
# ---------------------------------------------------------------------------

@dataclass
class RateFit:
    column: str
    t_hat: float
    c_hat: float
    window: tuple
    residual: float
    geometric: bool
    converged_to_zero: bool = False


def fit_geometric(ns, values, column: str = "") -> RateFit:
    """Least squares of log(values) against n; t_hat = exp(slope)."""
    ns = np.asarray(ns, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if len(ns) < 4:
        raise ValueError("need at least 4 rows for a rate fit")
    if np.min(values) <= 0.0 or np.max(values) < ZERO_FLOOR:
        return RateFit(column, 0.0, 0.0, (int(ns[0]), int(ns[-1])),
                       0.0, True, converged_to_zero=True)
    logs = np.log(values)
    slope, intercept = np.polyfit(ns, logs, 1)
    resid = float(np.max(np.abs(logs - (slope * ns + intercept))))
    return RateFit(column, float(np.exp(slope)), float(np.exp(intercept)),
                   (int(ns[0]), int(ns[-1])), resid,
                   resid <= GEOMETRIC_RESID)


def rate_fit(table, column: str, n_min: int = None, n_max: int = None) -> RateFit:
    """Geometric fit of a table column; defaults drop BURN_IN_ROWS rows."""
    ns = np.asarray(table.ns)
    ys = table.column(column) if hasattr(table, "column") else table[column]
    if n_min is None:
        n_min = int(ns[BURN_IN_ROWS]) if len(ns) > BURN_IN_ROWS else int(ns[0])
    if n_max is None:
        n_max = int(ns[-1])
    mask = (ns >= n_min) & (ns <= n_max)
    if int(mask.sum()) < 4:
        raise ValueError(f"window [{n_min}, {n_max}] keeps {int(mask.sum())} "
                         "rows; need >= 4")
    return fit_geometric(ns[mask], np.asarray(ys)[mask], column)


# ---------------------------------------------------------------------------
# f-estimate
# ---------------------------------------------------------------------------

def f_estimate_check(chain: CartanChain, n: int,
                     table: ConvergenceTable = None) -> tuple:
    """(lhs, rhs, holds) for ||f_{n+1} - (f_n (x) 1)(1 (x) f_n)|| <= a(n) + b(n-1).

    Both projectors are transported to V_lam (x) V_{n lam} coordinates: the
    left side becomes ||w'_n w_n^T - (w_{n-1}^T (x) 1)(1 (x) w'_{n-1})||.
    """
    if n < 2:
        raise ValueError("needs n >= 2")
    if n > chain.M - 1:
        raise ValueError(f"n={n} exceeds last isometry {chain.M - 1}")
    dl = chain.base.dim
    dn = chain.levels[n].dim
    term1 = chain.right_isometry(n) @ chain.w[n].T
    X = _apply_right(chain.right_isometry(n - 1), np.eye(dl * dn), dl)
    term2 = _apply_left(chain.w[n - 1].T, X, dl)
    lhs = operator_norm(term1 - term2)

    if table is not None and n in table.ns and (n - 1) in table.ns:
        a_n = float(table.a[list(table.ns).index(n)])
        b_prev = float(table.b[list(table.ns).index(n - 1)])
    else:
        T = repn.tensor(chain.base, chain.levels[n])
        a_n = _a_one_hot(_hw_basis(T, chain.tol), dn)
        b_prev = _b_one_hot(chain.w[n - 1], chain.levels[n - 1].dim)
    rhs = a_n + b_prev
    return lhs, rhs, bool(lhs <= rhs + 1e-7)


# ---------------------------------------------------------------------------
# star-commutation defect
# ---------------------------------------------------------------------------

@dataclass
class DefectNorms:
    """Two norms of a map (V_lam-bar (x) V_lam) -> B(V_mu); see module doc.

    basis_max is the max operator norm over an orthonormal domain basis
    (a lower bound for the map norm); matricized is the 2->2 norm with
    Hilbert-Schmidt codomain (an upper bound up to a sqrt(dim) factor).
    """

    basis_max: float
    matricized: float


@dataclass
class StarCommuteReport:
    lam: Weight
    mu: Weight
    q: float
    defect_h: DefectNorms
    bound_combo_h: float
    defect_l: DefectNorms
    bound_combo_l: float
    hw_fixed_point_residual: float


def _sigma_pair(base, tol: ToleranceProfile) -> tuple:
    """(sigma_h_inv, sigma_l): both map V_lam-bar (x) V_lam -> V_lam (x) V_lam-bar.

    The creation pairing zeta-bar |-> L_zeta^* identifies the conjugate basis
    with the module basis index-by-index.  That identification is equivariant
    for the conjugate action E -> -F, F -> -E, which differs from the
    unitarity-normalized contragredient (repn.contragredient) by the diagonal
    change of basis diag(q^{-(rho, wt)}).  Transport both braiding matrices
    through that diagonal so they act on the pairing's coordinates: the
    element at row (a', b'), column (b, a) picks up d_b / d_{b'} with
    d_x = q^{-(rho, wt(e_x))}.  Without the transport the defect norms stall
    at O(q - q^{-1}) instead of decaying.
    """
    from .qcore import rho

    bar = repn.contragredient(base)
    dl = base.dim
    rh = rho(base.N)
    d = np.array([base.q ** (-pairing(rh, Weight(tuple(w)))) for w in base.weights])
    idx = np.arange(dl * dl)
    scale = (1.0 / d[idx % dl])[:, None] * d[idx // dl][None, :]
    sig_h_inv = braid_sigma_inverse(base, bar, tol) * scale
    sig_l = braid_sigma(bar, base).matrix * scale
    return sig_h_inv, sig_l


def _defect_maps(W: np.ndarray, G: np.ndarray, dl: int, dmu: int,
                 sigma: np.ndarray, qfac: float) -> DefectNorms:
    """Norms of x -> B(x) - qfac * A(sigma x) on the (dl x dl)-dim domain."""
    dnu = W.shape[0] // dl
    Wb = W.reshape(dl, dnu, W.shape[1])
    Gb = G.reshape(dl, dmu, G.shape[1])
    Astack = np.einsum("aim,bin->abmn", Wb, Wb)   # A[a,b] = W_a^T W_b : dmu x dmu
    worst = 0.0
    cols = np.empty((dmu * dmu, dl * dl))
    for b in range(dl):
        for a in range(dl):
            Bmat = Gb[b] @ Gb[a].T
            s = sigma[:, b * dl + a].reshape(dl, dl)
            D = Bmat - qfac * np.tensordot(s, Astack, axes=([0, 1], [0, 1]))
            worst = max(worst, operator_norm(D))
            cols[:, b * dl + a] = D.reshape(-1)
    return DefectNorms(worst, operator_norm(cols))


def _bound_combo(Q_mu: np.ndarray, W: np.ndarray, G: np.ndarray,
                 dmu: int, dnu: int) -> float:
    """b(lam, mu) + b(lam, mu-lam) + a(lam, mu), highest-weight version."""
    return (_b_one_hot(G, dmu) + _b_one_hot(W, dnu) + _a_one_hot(Q_mu, dmu))


def _bound_combo_l(Q_mu_l: np.ndarray, W: np.ndarray, G: np.ndarray,
                   ell_lam: np.ndarray, ell_mu: np.ndarray,
                   ell_nu: np.ndarray, dl: int) -> float:
    return (_b_lowest(G, ell_lam, ell_mu) + _b_lowest(W, ell_lam, ell_nu)
            + _a_lowest(Q_mu_l, ell_mu, dl))


def _lowest_unit(V, tol: ToleranceProfile) -> np.ndarray:
    cols = decomp.lowest_weight_space(V, tol).basis_matrix(V.dim)
    if cols.shape[1] != 1:
        raise InvariantViolation("module has no unique lowest weight line")
    return cols[:, 0]


def _star_commute_from_isometries(base, Vmu, W, G, ell_nu, lam, mu, q,
                                  tol: ToleranceProfile,
                                  sigmas: tuple = None) -> StarCommuteReport:
    dl, dmu, dnu = base.dim, Vmu.dim, W.shape[0] // base.dim
    if sigmas is None:
        sigmas = _sigma_pair(base, tol)
    sig_h_inv, sig_l = sigmas
    qq = pairing(lam, lam)
    defect_h = _defect_maps(W, G, dl, dmu, sig_h_inv, q ** (-qq))
    defect_l = _defect_maps(W, G, dl, dmu, sig_l, q ** (+qq))

    T = repn.tensor(base, Vmu)
    bound_h = _bound_combo(_hw_basis(T, tol), W, G, dmu, dnu)
    ell_lam = _lowest_unit(base, tol)
    ell_mu = _lowest_unit(Vmu, tol)
    bound_l = _bound_combo_l(_lw_basis(T, tol), W, G, ell_lam, ell_mu,
                             ell_nu, dl)

    # highest-weight fixed point: B(xi-bar (x) xi) xi_mu = xi_mu = A(...) xi_mu
    e0 = np.zeros(dmu); e0[0] = 1.0
    rB = np.linalg.norm(G[:dmu, :] @ (G[:dmu, :].T @ e0) - e0)
    rA = np.linalg.norm(W[:dnu, :].T @ (W[:dnu, :] @ e0) - e0)
    return StarCommuteReport(lam, mu, q, defect_h, bound_h, defect_l, bound_l,
                             max(float(rB), float(rA)))


def star_commute_defect_chain(chain: CartanChain, n: int,
                              sigmas: tuple = None) -> StarCommuteReport:
    """Star-commutation defect at mu = n*lam, using the chain isometries."""
    if not 1 <= n <= chain.M - 1:
        raise ValueError(f"need 1 <= n <= {chain.M - 1}")
    return _star_commute_from_isometries(
        chain.base, chain.levels[n], chain.w[n - 1], chain.w[n],
        chain.lowest_vector(n - 1), chain.lam, chain.lam * n, chain.q,
        chain.tol, sigmas)


def star_commute_defect(lam: Weight, mu: Weight, q: float,
                        tol: ToleranceProfile = DEFAULT_TOL,
                        builder=None, sigmas: tuple = None) -> StarCommuteReport:
    """Defect of L_zeta* L_xi against q^{-(lam,lam)} L_xi L_zeta* braided.

    mu - lam must be dominant.  V_mu is realized as the Cartan component of
    V_lam (x) V_{mu-lam}; the creation maps come from the two component
    isometries W: V_mu -> V_lam (x) V_{mu-lam} and G: V_{mu+lam} -> V_lam (x) V_mu.
    """
    from .sps import GeneralWeightBuilder

    nu = mu - lam
    if not nu.is_dominant:
        raise ValueError(f"mu - lam = {nu} is not dominant")
    if builder is None:
        builder = GeneralWeightBuilder(lam.N, q, tol)
    base = builder.module(lam)
    Vnu = builder.module(nu)
    Vmu, embW = decomp.cartan_component(base, Vnu, tol=tol)
    _, embG = decomp.cartan_component(base, Vmu, tol=tol)
    ell_nu = _lowest_unit(Vnu, tol) if Vnu.dim > 1 else np.ones(1)
    return _star_commute_from_isometries(base, Vmu, embW.matrix, embG.matrix,
                                         ell_nu, lam, mu, q, tol, sigmas)


# ---------------------------------------------------------------------------
# commutator decay, vacuum limits, compactification
# ---------------------------------------------------------------------------

def commutator_decay(chain: CartanChain, M: int = None) -> tuple:
    """(ns, worst): worst = max over basis pairs of ||[S_a^*, R_b]|_n||."""
    top = chain.M if M is None else min(M, chain.M)
    fock = FockSpace(chain, top)
    dl = chain.base.dim
    eye = np.eye(dl)
    S = [creation(chain, eye[a], fock=fock) for a in range(dl)]
    R = [right_creation(chain, eye[b], fock=fock) for b in range(dl)]
    ns = np.arange(0, top - GUARD_LEVELS + 1)
    worst = np.zeros(len(ns))
    for idx, n in enumerate(ns):
        w = 0.0
        for a in range(dl):
            for b in range(dl):
                term = S[a].block(n).T @ R[b].block(n)
                if n >= 1:
                    term = term - R[b].block(n - 1) @ S[a].block(n - 1).T
                w = max(w, operator_norm(term))
        worst[idx] = w
    return ns, worst


def vacuum_limits(chain: CartanChain, xi: np.ndarray, zeta: np.ndarray,
                  M: int = None) -> dict:
    """Vacuum expectations omega_n against the target <xi, xi_lam><xi_lam, zeta>.

    creation_first[n]      = omega_n(S_xi S_zeta^*)   (exact at every level)
    annihilation_first[n]  = omega_n(S_zeta^* S_xi)   (converges geometrically)
    """
    top = chain.M if M is None else min(M, chain.M)
    fock = FockSpace(chain, top)
    Sx = creation(chain, np.asarray(xi, dtype=np.float64), fock=fock)
    Sz = creation(chain, np.asarray(zeta, dtype=np.float64), fock=fock)
    ns = np.arange(1, top - GUARD_LEVELS + 1)
    cf = np.zeros(len(ns))
    af = np.zeros(len(ns))
    for idx, n in enumerate(ns):
        cf[idx] = float(Sx.block(n - 1)[0, :] @ Sz.block(n - 1)[0, :])
        af[idx] = float(Sx.block(n)[:, 0] @ Sz.block(n)[:, 0])
    target = float(xi[0]) * float(zeta[0])
    return {
        "n": ns,
        "creation_first": cf,
        "annihilation_first": af,
        "target": target,
        "residual_creation": np.abs(cf - target),
        "residual_annihilation": np.abs(af - target),
    }


def compactification_defect(chain: CartanChain, x: BlockOp, n: int,
                            kmax: int) -> float:
    """sup_{0 <= k <= kmax} ||psi_{n,n+k}(x_n) - x_{n+k}|| (guard-banded)."""
    if x.shift != 0:
        raise ValueError("defined for block-diagonal operators")
    top = min(x.fock.M, chain.M) - GUARD_LEVELS
    worst = 0.0
    for k in range(0, kmax + 1):
        if n + k > top:
            break
        worst = max(worst, operator_norm(psi(chain, n, k, x.block(n))
                                         - x.block(n + k)))
    return worst


def compactification_table(chain: CartanChain, x: BlockOp, kmax: int,
                           n_min: int = 1) -> tuple:
    """(ns, defects) with a full k-range 0..kmax at every reported n."""
    top = min(x.fock.M, chain.M) - GUARD_LEVELS
    ns = np.arange(n_min, top - kmax + 1)
    if len(ns) == 0:
        raise ValueError("no levels left after the guard band; lower kmax")
    vals = np.array([compactification_defect(chain, x, int(n), kmax)
                     for n in ns])
    return ns, vals
