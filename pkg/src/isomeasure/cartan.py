"""Cartan (SVD) and polar forms of SL(2,C) Kraus operators.

A Kraus operator factors as K = V exp(a Jz) U with V, U in SU(2) and a >= 0.
V is the postmeasurement unitary, U the premeasurement unitary and a the
radial coordinate on the hyperboloid of POVM elements E = K^dagger K.

Gauge: the factorization is unique up to U -> exp(i chi Jz) U together with
V -> V exp(-i chi Jz).  We fix it by making U[0, 0] real and non-negative.
At a = 0 the SVD carries no information, so U = I and V = K.

Sign convention for directions: ``povm_direction`` returns n with
U^dagger sigma_z U = n.sigma, i.e. the top eigenvector of E.  For
U = exp(-i pi Jy / 2) this gives n = -x.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import SpinRep, _check_finite, _require_su2, su2_lift

A_ZERO = 1e-14
DET_TOL = 1e-8
LIFT_OVERFLOW = 300.0


@dataclass(frozen=True)
class CartanForm:
    V: np.ndarray
    a: float
    U: np.ndarray

    def recompose(self) -> np.ndarray:
        h = np.exp(self.a / 2)
        return self.V @ np.diag([h, 1 / h]) @ self.U


@dataclass(frozen=True)
class PovmDirection:
    n_hat: np.ndarray  # (z, x, y)

    def __post_init__(self):
        if abs(np.linalg.norm(self.n_hat) - 1) > 1e-12:
            raise ValueError("POVM direction must be a unit vector")


def _as_kraus(K) -> np.ndarray:
    K = _check_finite(np.asarray(K, dtype=complex), "K")
    if K.shape != (2, 2):
        raise ValueError(f"Kraus point must be 2x2, got {K.shape}")
    d = np.linalg.det(K)
    if abs(d - 1) > DET_TOL:
        raise ValueError(f"Kraus point must have unit determinant, got det = {d}")
    return K / np.sqrt(d)


def cartan_decompose(K) -> CartanForm:
    """Return (V, a, U) with K = V exp(a Jz) U in the fixed gauge."""
    K = _as_kraus(K)
    Us, s, Vh = np.linalg.svd(K)
    a = 2 * np.log(s[0])
    if a < A_ZERO:
        return CartanForm(V=K.copy(), a=0.0, U=np.eye(2, dtype=complex))
    half = np.exp(-0.5j * np.angle(np.linalg.det(Us)))
    V = Us * half
    U = Vh / half
    # exp(i chi Jz) U with chi chosen to rotate U[0, 0] onto the positive axis
    g = np.exp(-1j * np.angle(U[0, 0])) if abs(U[0, 0]) > 0 else 1.0
    U = U * np.array([[g], [1 / g]])
    V = V * np.array([[1 / g, g]])
    U[0, 0] = abs(U[0, 0])
    return CartanForm(V=V, a=float(a), U=U)


def polar_decompose(K) -> tuple[np.ndarray, np.ndarray]:
    """K = W sqrtE with W = V U unitary and sqrtE = U^dagger exp(a Jz) U positive."""
    f = cartan_decompose(K)
    h = np.exp(f.a / 2)
    sqrtE = f.U.conj().T @ np.diag([h, 1 / h]) @ f.U
    return f.V @ f.U, sqrtE


def povm_element(K) -> np.ndarray:
    K = _as_kraus(K)
    return K.conj().T @ K


def purity(a: float, rep: SpinRep | None = None) -> float:
    """Ratio of the two largest eigenvalues of E in any spin-j irrep: e^{-2a}."""
    if a < 0:
        raise ValueError("radial coordinate must be non-negative")
    return float(np.exp(-2 * a))


def povm_direction(U) -> PovmDirection:
    U = _require_su2(U)
    return PovmDirection(n_hat=_bloch_of(U.conj().T[:, 0]))


def _bloch_of(psi: np.ndarray) -> np.ndarray:
    """Bloch vector of a normalized spinor (or stack), (z, x, y) order."""
    p0, p1 = psi[..., 0], psi[..., 1]
    c = np.conj(p0) * p1
    n = np.stack([np.abs(p0) ** 2 - np.abs(p1) ** 2, 2 * c.real, 2 * c.imag], axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def cartan_invariants(K: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauge invariants (a, n_U, n_V) for a stack of SL(2,C) matrices.

    n_U is the POVM direction (top eigenvector of K^dagger K) and n_V = R(V) z
    the top eigenvector of K K^dagger.  No input validation; the ensemble
    code calls this on arrays it produced itself.
    """
    Us, s, Vh = np.linalg.svd(np.asarray(K, dtype=complex))
    a = np.log(s[..., 0] / s[..., 1])
    n_u = _bloch_of(np.conj(Vh[..., 0, :]))
    n_v = _bloch_of(Us[..., :, 0])
    return a, n_u, n_v


def lift_kraus(form: CartanForm, rep: SpinRep) -> np.ndarray:
    """su2_lift(V) exp(a Jz^(j)) su2_lift(U); singular values e^{a m}."""
    if form.a * rep.j > LIFT_OVERFLOW:
        raise OverflowError(
            f"a*j = {form.a * rep.j:.1f} exceeds {LIFT_OVERFLOW}; "
            "only log singular values a*m are available"
        )
    mid = np.exp(form.a * rep.m_values)
    return su2_lift(form.V, rep) @ (mid[:, None] * su2_lift(form.U, rep))


def lifted_povm_batch(a: np.ndarray, n_hat: np.ndarray, rep: SpinRep) -> np.ndarray:
    """Stack of E_j = exp(2a n.J^(j)) built from eigh of n.J, shape (N, dim, dim)."""
    a = np.asarray(a, dtype=float)
    nJ = np.einsum("nk,kij->nij", np.asarray(n_hat), np.stack(rep.gens))
    w, Q = np.linalg.eigh(nJ)
    return (Q * np.exp(2 * a[:, None] * w)[:, None, :]) @ np.conj(np.swapaxes(Q, -1, -2))
