from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from isomeasure.algebra import build_spin_rep, mat_exp
from isomeasure.cartan import (CartanForm, PovmDirection, cartan_decompose, cartan_invariants,
                               lift_kraus, lifted_povm_batch, polar_decompose, povm_direction,
                               povm_element, purity)
from conftest import random_sl2c, random_su2

seeds = st.integers(0, 10**6)


def test_identity_and_diagonal():
    f = cartan_decompose(np.eye(2))
    assert f.a == 0 and np.allclose(f.U, np.eye(2)) and np.allclose(f.V, np.eye(2))
    f = cartan_decompose(np.diag([np.e, 1 / np.e]))
    assert f.a == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(f.U, np.eye(2)) and np.allclose(f.V, np.eye(2))


@given(seeds)
def test_construct_then_decompose(seed):
    rng = np.random.default_rng(seed)
    V0, U0 = random_su2(rng), random_su2(rng)
    K = CartanForm(V0, 1.3, U0).recompose()
    f = cartan_decompose(K)
    assert f.a == pytest.approx(1.3, abs=1e-9)
    assert np.allclose(f.recompose(), K, atol=1e-9)
    assert np.allclose(povm_direction(f.U).n_hat, povm_direction(U0).n_hat, atol=1e-9)
    assert np.allclose(f.V @ f.U, V0 @ U0, atol=1e-9)
    assert f.U[0, 0].imag == 0 and f.U[0, 0].real >= 0


@given(seeds)
def test_roundtrip_random_kraus(seed):
    K = random_sl2c(np.random.default_rng(seed), 2.0)
    f = cartan_decompose(K)
    assert np.allclose(f.recompose(), K, atol=1e-9 * max(1, np.abs(K).max()))
    for M in (f.U, f.V):
        assert np.allclose(M.conj().T @ M, np.eye(2), atol=1e-10)
        assert np.linalg.det(M) == pytest.approx(1, abs=1e-10)
    again = cartan_decompose(f.recompose())
    assert again.a == pytest.approx(f.a, abs=1e-9)


@pytest.mark.parametrize("bad", [np.diag([2.0, 2.0]), np.full((2, 2), np.nan), np.eye(3)])
def test_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        cartan_decompose(bad)


def test_polar_examples(rng):
    V = random_su2(rng)
    W, S = polar_decompose(V)
    assert np.allclose(W, V, atol=1e-9) and np.allclose(S, np.eye(2), atol=1e-9)
    H = mat_exp(np.array([[0.4, 0.3 - 0.2j], [0.3 + 0.2j, -0.4]]))
    W, S = polar_decompose(H)
    assert np.allclose(W, np.eye(2), atol=1e-9) and np.allclose(S, H, atol=1e-9)
    K = random_sl2c(rng)
    W, S = polar_decompose(K)
    assert np.allclose(W @ S, K, atol=1e-9)
    assert np.all(np.linalg.eigvalsh(W.conj().T @ K) > 0)


def test_povm_element(rng):
    assert np.allclose(povm_element(np.eye(2)), np.eye(2))
    assert np.allclose(povm_element(np.diag([np.e, 1 / np.e])), np.diag([np.e**2, np.e**-2]))
    K = random_sl2c(rng, 1.5)
    ev = np.linalg.eigvalsh(povm_element(K))
    assert ev[1] / ev[0] == pytest.approx(np.exp(2 * cartan_decompose(K).a), rel=1e-9)
    Om = random_su2(rng)
    assert np.allclose(povm_element(Om @ K), povm_element(K), atol=1e-9)


def test_purity():
    assert purity(0.0) == 1.0
    assert purity(8.0) == pytest.approx(1.125e-7, rel=1e-3)
    with pytest.raises(ValueError):
        purity(-0.1)
    rep = build_spin_rep(Fraction(3, 2))
    E = lifted_povm_batch(np.array([0.7]), np.array([[0.6, 0.0, 0.8]]), rep)[0]
    ev = np.sort(np.linalg.eigvalsh(E))[::-1]
    assert ev[1] / ev[0] == pytest.approx(purity(0.7, rep), rel=1e-10)


def test_povm_direction(half):
    assert np.allclose(povm_direction(np.eye(2)).n_hat, [1, 0, 0])
    U = mat_exp(-0.5j * np.pi * half.Jy)
    # (z, x, y) order; the top eigenvector of U^dag e^{2aJz} U points along -x
    assert np.allclose(povm_direction(U).n_hat, [0, -1, 0], atol=1e-12)
    G = mat_exp(0.7j * half.Jz)
    assert np.allclose(povm_direction(G @ U).n_hat, povm_direction(U).n_hat, atol=1e-12)
    with pytest.raises(ValueError):
        PovmDirection(np.array([1.0, 1.0, 0.0]))


@given(seeds)
def test_direction_is_top_eigenvector(seed):
    K = random_sl2c(np.random.default_rng(seed), 1.0)
    a, nu, nv = cartan_invariants(K[None])
    E = K.conj().T @ K
    w, Q = np.linalg.eigh(E)
    top = Q[:, 1]
    c = np.conj(top[0]) * top[1]
    n = np.array([abs(top[0]) ** 2 - abs(top[1]) ** 2, 2 * c.real, 2 * c.imag])
    assert np.allclose(nu[0], n, atol=1e-8)
    assert a[0] == pytest.approx(cartan_decompose(K).a, abs=1e-9)


def test_lift_examples(rng):
    r1, r2 = build_spin_rep(1), build_spin_rep(2)
    assert np.allclose(lift_kraus(CartanForm(np.eye(2), 0.0, np.eye(2)), r1), np.eye(3))
    assert np.allclose(lift_kraus(CartanForm(np.eye(2), 1.0, np.eye(2)), r1), np.diag([np.e, 1, 1 / np.e]))
    f = CartanForm(random_su2(rng), 0.9, random_su2(rng))
    s = np.linalg.svd(lift_kraus(f, r2), compute_uv=False)
    assert np.allclose(s, np.exp(0.9 * np.array([2, 1, 0, -1, -2])), rtol=1e-8)
    with pytest.raises(OverflowError):
        lift_kraus(CartanForm(np.eye(2), 30.0, np.eye(2)), build_spin_rep(25))


@pytest.mark.parametrize("j", [0.5, 1, 1.5, 2])
def test_lifted_singular_value_law(j, rng):
    rep = build_spin_rep(j)
    for _ in range(5):
        f = cartan_decompose(random_sl2c(rng, 1.2))
        s = np.linalg.svd(lift_kraus(f, rep), compute_uv=False)
        assert np.allclose(s, np.exp(f.a * rep.m_values), rtol=1e-8)


def test_lifted_povm_matches_lift(rng):
    rep = build_spin_rep(1)
    K = random_sl2c(rng, 1.0)
    f = cartan_decompose(K)
    L = lift_kraus(f, rep)
    a, nu, _ = cartan_invariants(K[None])
    assert np.allclose(lifted_povm_batch(a, nu, rep)[0], L.conj().T @ L, atol=1e-9)
