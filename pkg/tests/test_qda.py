"""Closed-form monomial model: norms, shift matrices, relation residuals."""

import math

import numpy as np
import pytest

from qcartan import qda, sps
from qcartan.numerics import operator_norm
from qcartan.qcore import q_factorial, q_int


def test_monomial_enumeration():
    for N in (2, 3, 4):
        for n in range(6):
            mons = qda.monomials(N, n)
            assert len(mons) == math.comb(n + N - 1, N - 1)
            assert all(sum(d) == n and len(d) == N for d in mons)
            assert mons[0] == (n,) + (0,) * (N - 1)
            assert list(mons) == sorted(mons, reverse=True)
            idx = qda.monomial_index(N, n)
            assert all(mons[idx[d]] == d for d in mons)


def test_monomial_norms_against_hand_values():
    for n in range(6):
        assert qda.monomial_norm_sq((n, 0), 1.5) == 1.0
    # q = 1 reduces to the inverse multinomial coefficient
    assert np.isclose(qda.monomial_norm_sq((2, 1), 1.0), 1.0 / 3.0, atol=1e-15)
    assert np.isclose(qda.monomial_norm_sq((1, 1, 1), 1.0), 1.0 / 6.0, atol=1e-15)
    # [1]![1]! q^{1*1} / [2]! = q / [2]
    q = 1.5
    assert np.isclose(qda.monomial_norm_sq((1, 1), q), q / q_int(2, q), atol=1e-15)
    assert abs(qda.monomial_norm_sq((1, 1), 1.5) - 0.6923076923076924) <= 1e-15
    d = (2, 3, 1)
    n = sum(d)
    want = (1.5 ** 11) * (q_factorial(2, 1.5) * q_factorial(3, 1.5)
                          / q_factorial(n, 1.5))
    assert np.isclose(qda.monomial_norm_sq(d, 1.5), want, atol=1e-12)


def test_annihilation_is_adjoint_of_creation():
    # the two matrices come from different formulas; agreement is a theorem
    for N, q in ((2, 1.5), (3, 1.5), (3, 1.0), (4, 0.8)):
        for n in range(1, 6):
            for i in range(1, N + 1):
                A = qda.annihilation_closed(i, n, q, N)
                B = qda.creation_closed(i, n - 1, q, N)
                assert operator_norm(A - B.T) <= 1e-12


def test_shift_relation_residuals_small():
    for N in (2, 3):
        for q in (1.0, 1.5, 0.7):
            for n in range(0, 10):
                res = qda.q_arveson_residuals(n, q, N)
                assert res["off_diag"] <= 1e-12
                assert res["diag"] <= 1e-12


def test_limit_relations_exact_and_asymptotic():
    q, N = 1.5, 3
    assert qda.cuntz_pimsner_residual(0, q, N)["resolution"] == 1.0
    star, diag = [], []
    for n in range(1, 16):
        res = qda.cuntz_pimsner_residual(n, q, N)
        assert res["exchange"] <= 1e-12
        assert res["resolution"] <= 1e-12
        star.append(res["star_exchange"])
        diag.append(res["diag"])
    # the starred relations only hold in the deep-level limit
    assert star[0] > 1e-2 and diag[0] > 1e-2
    assert star[-1] <= 1e-5 and diag[-1] <= 1e-5
    assert star[-1] < star[4] < star[0]
    assert diag[-1] < diag[4] < diag[0]


def test_chain_intertwiner_is_unitary(chains):
    for key in (((1,), 1.5, 8), ((1, 0), 1.5, 6)):
        ch = chains(*key)
        for n in range(0, 6):
            U = qda.chain_intertwiner(ch, n)
            assert U.shape[0] == U.shape[1] == len(qda.monomials(ch.N, n))
            assert np.max(np.abs(U.T @ U - np.eye(U.shape[1]))) <= 1e-10


def test_chain_intertwiner_carries_shifts(chains):
    ch = chains((1, 0), 1.5, 6)
    fock = sps.FockSpace(ch)
    eye = np.eye(ch.N)
    for n in range(0, 4):
        U0 = qda.chain_intertwiner(ch, n)
        U1 = qda.chain_intertwiner(ch, n + 1)
        for i in range(1, ch.N + 1):
            S = sps.creation(ch, eye[i - 1], fock=fock)
            lhs = S.block(n) @ U0
            rhs = U1 @ qda.creation_closed(i, n, ch.q, ch.N)
            assert operator_norm(lhs - rhs) <= 1e-10


def test_chain_intertwiner_rejects_other_chains(chains):
    ch2 = chains((2,), 1.5, 8)
    with pytest.raises(ValueError):
        qda.chain_intertwiner(ch2, 2)
    ch = chains((1,), 1.5, 8)
    with pytest.raises(ValueError):
        qda.chain_intertwiner(ch, 9)


def test_component_overlap_values(chains):
    ch = chains((1,), 1.5, 8)
    # k = m pairs two copies of the same extreme vector
    assert abs(qda.component_overlap(ch, 3, 3, 4) - 1.0) <= 1e-12
    vals = [qda.component_overlap(ch, 3, 1, n) for n in range(3, 7)]
    assert abs(vals[1] - 0.948163856) <= 1e-6
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert all(0.0 < v < 1.0 for v in vals)
    with pytest.raises(ValueError):
        qda.component_overlap(ch, 3, 4, 4)
    with pytest.raises(ValueError):
        qda.component_overlap(ch, 3, 1, 9)
    with pytest.raises(ValueError):
        qda.component_overlap(chains((1, 0), 1.5, 6), 2, 1, 3)
