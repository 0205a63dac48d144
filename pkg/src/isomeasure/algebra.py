"""Spin-j representations of su(2) and the matrix helpers built on them.

Index convention
----------------
Every generator tuple, 3-vector of Wiener increments and 3x3 frame or
rotation matrix in this package is ordered (z, x, y).  ``GEN_ORDER`` spells
this out and ``SpinRep.gens`` returns the generators in that order.  Bloch
vectors in :mod:`isomeasure.coherent` are the one exception: they use the
usual (x, y, z) order because they are consumed by spherical-angle code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg

GEN_ORDER = ("z", "x", "y")
J_MAX = 25

# Levi-Civita symbol in (z, x, y) order; (z, x, y) is a cyclic relabelling of
# (x, y, z), so eps[0, 1, 2] = +1 as usual.
EPS = np.zeros((3, 3, 3))
for _a, _b, _c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    EPS[_a, _b, _c] = 1.0
    EPS[_b, _a, _c] = -1.0

PAULI = (
    np.array([[1, 0], [0, -1]], dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
)


def _as_spin(j) -> Fraction:
    try:
        two_j = Fraction(j) * 2
    except (TypeError, ValueError) as exc:
        raise ValueError(f"spin must be a half-integer, got {j!r}") from exc
    if two_j.denominator != 1 or two_j <= 0:
        raise ValueError(f"spin must be a positive half-integer, got {j!r}")
    if two_j > 2 * J_MAX:
        raise ValueError(f"spin {j} exceeds the supported maximum j = {J_MAX}")
    return two_j / 2


@dataclass(frozen=True)
class SpinRep:
    """Spin-j irrep with basis ordered m = j, j-1, ..., -j."""

    j: float
    dim: int
    Jx: np.ndarray = field(repr=False)
    Jy: np.ndarray = field(repr=False)
    Jz: np.ndarray = field(repr=False)
    casimir: float
    dynkin: float

    @property
    def gens(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Generators in (z, x, y) order."""
        return (self.Jz, self.Jx, self.Jy)

    @property
    def m_values(self) -> np.ndarray:
        return self.j - np.arange(self.dim)

    @property
    def j_plus(self) -> np.ndarray:
        return self.Jx + 1j * self.Jy

    @property
    def j_minus(self) -> np.ndarray:
        return self.Jx - 1j * self.Jy

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)


def build_spin_rep(j) -> SpinRep:
    """Build the spin-``j`` representation from ladder operators.

    ``j`` may be an int, float or ``Fraction``; anything that is not a positive
    half-integer (or exceeds ``J_MAX``) raises ``ValueError``.
    """
    spin = _as_spin(j)
    jf = float(spin)
    dim = int(2 * spin) + 1
    m = jf - np.arange(dim)
    # <m+1|J+|m> sits one row above the diagonal because m decreases with index.
    up = np.sqrt(jf * (jf + 1) - m[1:] * (m[1:] + 1))
    jp = np.diag(up, k=1).astype(complex)
    jm = jp.conj().T
    Jx = (jp + jm) / 2
    Jy = (jp - jm) / 2j
    Jz = np.diag(m).astype(complex)
    casimir = jf * (jf + 1)
    return SpinRep(
        j=jf,
        dim=dim,
        Jx=Jx,
        Jy=Jy,
        Jz=Jz,
        casimir=casimir,
        dynkin=3.0 / (jf * (jf + 1) * (2 * jf + 1)),
    )


def defining_rep() -> SpinRep:
    return build_spin_rep(Fraction(1, 2))


def _check_finite(X: np.ndarray, name: str = "matrix") -> np.ndarray:
    X = np.asarray(X)
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} has non-finite entries")
    return X


def _sinhc(s: np.ndarray) -> np.ndarray:
    """sinh(s)/s for complex s, with a series near zero."""
    s = np.asarray(s, dtype=complex)
    small = np.abs(s) < 1e-4
    safe = np.where(small, 1.0, s)
    s2 = s * s
    return np.where(small, 1 + s2 / 6 + s2 * s2 / 120, np.sinh(safe) / safe)


def exp_traceless_2x2(X: np.ndarray) -> np.ndarray:
    """Closed-form exponential of (a stack of) traceless 2x2 matrices.

    Uses X^2 = s^2 I with s^2 = -det X, so e^X = cosh(s) I + sinh(s)/s X.
    Works on arrays of shape (..., 2, 2).
    """
    X = np.asarray(X, dtype=complex)
    s2 = -(X[..., 0, 0] * X[..., 1, 1] - X[..., 0, 1] * X[..., 1, 0])
    s = np.sqrt(s2)
    c = np.cosh(s)
    k = _sinhc(s)
    out = k[..., None, None] * X
    out[..., 0, 0] += c
    out[..., 1, 1] += c
    return out


def mat_exp(X) -> np.ndarray:
    """Matrix exponential; closed form for traceless 2x2, scipy's Pade otherwise."""
    X = _check_finite(np.asarray(X, dtype=complex))
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"mat_exp needs a square matrix, got shape {X.shape}")
    if X.shape == (2, 2):
        tr = X[0, 0] + X[1, 1]
        if abs(tr) <= 1e-14 * max(1.0, np.abs(X).max()):
            return exp_traceless_2x2(X - tr / 2 * np.eye(2))
        return np.exp(tr / 2) * exp_traceless_2x2(X - tr / 2 * np.eye(2))
    return scipy.linalg.expm(X)


def expi_hermitian(H: np.ndarray, theta: float = 1.0) -> np.ndarray:
    """exp(-i theta H) for Hermitian H via eigh; exactly unitary up to rounding."""
    w, Q = np.linalg.eigh(H)
    return (Q * np.exp(-1j * theta * w)) @ Q.conj().T


def is_special_unitary(V: np.ndarray, tol: float = 1e-10) -> bool:
    V = np.asarray(V)
    if V.shape != (2, 2) or not np.all(np.isfinite(V)):
        return False
    return bool(
        np.abs(V.conj().T @ V - np.eye(2)).max() <= tol
        and abs(np.linalg.det(V) - 1) <= tol
    )


def _require_su2(V: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    V = _check_finite(np.asarray(V, dtype=complex), "V")
    if not is_special_unitary(V, tol):
        raise ValueError("expected a 2x2 special-unitary matrix")
    return V


def adjoint_rotation(V, tol: float = 1e-10) -> np.ndarray:
    """SO(3) matrix R with V J_mu V^-1 = sum_nu J_nu R[nu, mu], (z, x, y) order."""
    V = _require_su2(V, tol)
    return adjoint_rotation_batch(V[None])[0]


def adjoint_rotation_batch(V: np.ndarray) -> np.ndarray:
    """Unchecked adjoint rotation for a stack of SU(2) matrices, shape (..., 3, 3).

    Uses tr(J_a J_b) = delta_ab / 2 in the defining rep, so
    R[nu, mu] = 2 tr(J_nu V J_mu V^dagger) = tr(s_nu V s_mu V^dagger) / 2.
    """
    V = np.asarray(V, dtype=complex)
    Vh = np.conj(np.swapaxes(V, -1, -2))
    R = np.empty(V.shape[:-2] + (3, 3))
    for mu in range(3):
        conj = V @ PAULI[mu] @ Vh
        for nu in range(3):
            R[..., nu, mu] = 0.5 * np.einsum("ij,...ji->...", PAULI[nu], conj).real
    return R


def su2_axis_angle(V) -> tuple[float, np.ndarray]:
    """(theta, n) with V = exp(-i theta n.sigma/2), theta in [0, 2 pi], n in (z, x, y).

    The axis comes from the eigenvectors of the Hermitian part i(V - V^dagger)/2
    = sin(theta/2) n.sigma and the angle from the phase V takes on them, which
    stays well conditioned at theta = pi where quaternion division is not.
    """
    V = _require_su2(V)
    H = 0.5j * (V - V.conj().T)
    if np.abs(H).max() < 1e-15:
        # V = +-I; any axis works.
        theta = 0.0 if V[0, 0].real > 0 else 2 * np.pi
        return theta, np.array([1.0, 0.0, 0.0])
    w, P = np.linalg.eigh(H)
    top = P[:, 1]  # eigenvalue +|sin(theta/2)| -> eigenvector of n.sigma with +1
    proj = np.outer(top, top.conj())
    nsig = 2 * proj - np.eye(2)
    n = np.array([0.5 * np.trace(s @ nsig).real for s in PAULI])
    n /= np.linalg.norm(n)
    phase = np.angle(top.conj() @ V @ top)  # = -theta/2 modulo 2 pi
    theta = float(np.mod(-2 * phase, 4 * np.pi))
    if theta > 2 * np.pi:
        theta, n = 4 * np.pi - theta, -n
    return theta, n


def su2_lift(V, rep: SpinRep) -> np.ndarray:
    """Lift V = exp(-i theta n.sigma/2) to exp(-i theta n.J) in ``rep``."""
    theta, n = su2_axis_angle(V)
    nJ = sum(n[k] * rep.gens[k] for k in range(3))
    return expi_hermitian(nJ, theta)


def _exp_nilpotent(N: np.ndarray) -> np.ndarray:
    """Terminating Taylor sum for a nilpotent matrix."""
    out = np.eye(N.shape[0], dtype=complex)
    term = out
    for k in range(1, N.shape[0]):
        term = term @ N / k
        out = out + term
    return out


@dataclass(frozen=True)
class CartanWeylReport:
    j: float
    raising: float
    lowering: float
    ladder: float
    parabolic: float

    @property
    def max_residual(self) -> float:
        return max(self.raising, self.lowering, self.ladder, self.parabolic)


def cartan_weyl_check(rep: SpinRep, xs=(0.0, 0.3, -1.1, 1.7)) -> CartanWeylReport:
    """Residuals of [Jz, J+-] = +-J+-, [J+, J-] = 2Jz and the parabolic identity

    e^{x J+} J- e^{-x J+} = J- + 2x Jz - x^2 J+

    for each sampled ``x``.  J+ is nilpotent so the exponentials are finite sums.
    """
    Jp, Jm, Jz = rep.j_plus, rep.j_minus, rep.Jz

    def comm(A, B):
        return A @ B - B @ A

    def res(A):
        return float(np.abs(A).max())

    parabolic = 0.0
    for x in xs:
        lhs = _exp_nilpotent(x * Jp) @ Jm @ _exp_nilpotent(-x * Jp)
        parabolic = max(parabolic, res(lhs - (Jm + 2 * x * Jz - x * x * Jp)))
    return CartanWeylReport(
        j=rep.j,
        raising=res(comm(Jz, Jp) - Jp),
        lowering=res(comm(Jz, Jm) + Jm),
        ladder=res(comm(Jp, Jm) - 2 * Jz),
        parabolic=parabolic,
    )


def structure_residuals(rep: SpinRep) -> dict[str, float]:
    """Commutator, Casimir, Hermiticity and Dynkin residuals for ``rep``."""
    g = rep.gens
    comm = 0.0
    dyn = 0.0
    for a in range(3):
        for b in range(3):
            lhs = g[a] @ g[b] - g[b] @ g[a]
            rhs = sum(1j * EPS[a, b, c] * g[c] for c in range(3))
            comm = max(comm, float(np.abs(lhs - rhs).max()))
            dyn = max(dyn, abs(rep.dynkin * np.trace(g[a] @ g[b]) - (a == b)))
    cas = sum(x @ x for x in g) - rep.casimir * np.eye(rep.dim)
    herm = max(float(np.abs(x - x.conj().T).max()) for x in g)
    return {
        "commutator": comm,
        "casimir": float(np.abs(cas).max()),
        "hermiticity": herm,
        "dynkin": float(dyn),
    }
