"""Spin coherent states, their POVM, Q-functions and product-state tomography.

Bloch vectors here are (x, y, z), matching the polar angles (theta, phi).
The sphere measure d mu is normalized to total mass 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import SpinRep, expi_hermitian


@dataclass(frozen=True)
class SphereDirection:
    theta: float
    phi: float

    def __post_init__(self):
        if not (0 <= self.theta <= np.pi) or not np.isfinite(self.phi):
            raise ValueError(f"bad direction theta={self.theta}, phi={self.phi}")
        object.__setattr__(self, "phi", float(self.phi) % (2 * np.pi))

    @classmethod
    def from_vector(cls, n) -> "SphereDirection":
        n = np.asarray(n, dtype=float)
        r = np.linalg.norm(n)
        if r == 0:
            raise ValueError("zero vector has no direction")
        return cls(float(np.arctan2(np.hypot(n[0], n[1]), n[2])), float(np.arctan2(n[1], n[0])))

    @property
    def n_hat(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])


@dataclass(frozen=True)
class SphereQuadrature:
    nodes: tuple[SphereDirection, ...]
    weights: np.ndarray
    degree: int

    @property
    def thetas(self) -> np.ndarray:
        return np.array([d.theta for d in self.nodes])

    @property
    def phis(self) -> np.ndarray:
        return np.array([d.phi for d in self.nodes])


def sphere_quadrature(degree: int) -> SphereQuadrature:
    """Gauss-Legendre in cos(theta) times a uniform phi grid, exact to ``degree``."""
    if degree < 0:
        raise ValueError("degree must be non-negative")
    n_theta = (degree + 2) // 2
    n_phi = degree + 1
    x, w = np.polynomial.legendre.leggauss(n_theta)
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    nodes, weights = [], []
    for xi, wi in zip(x, w):
        for p in phis:
            nodes.append(SphereDirection(float(np.arccos(xi)), float(p)))
            weights.append(wi / 2 / n_phi)
    return SphereQuadrature(nodes=tuple(nodes), weights=np.array(weights), degree=degree)


def displacement(rep: SpinRep, n: SphereDirection) -> np.ndarray:
    """D(n) = exp(-i theta (Jy cos phi - Jx sin phi))."""
    H = rep.Jy * np.cos(n.phi) - rep.Jx * np.sin(n.phi)
    return expi_hermitian(H, n.theta)


def scs_state(rep: SpinRep, n: SphereDirection) -> np.ndarray:
    top = np.zeros(rep.dim, dtype=complex)
    top[0] = 1.0  # m = j comes first in the basis
    return displacement(rep, n) @ top


def scs_povm_resolution(rep: SpinRep, quad: SphereQuadrature) -> float:
    """Max entrywise deviation of (2j+1) sum_k w_k |n_k><n_k| from the identity.

    Under-resolved quadratures (degree < 2j) give a visibly non-zero deviation.
    """
    acc = np.zeros((rep.dim, rep.dim), dtype=complex)
    for w, n in zip(quad.weights, quad.nodes):
        psi = scs_state(rep, n)
        acc += w * np.outer(psi, psi.conj())
    return float(np.abs(rep.dim * acc - np.eye(rep.dim)).max())


def _check_density(rho, dim: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dim, dim):
        raise ValueError("density matrix does not match the representation")
    if np.abs(rho - rho.conj().T).max() > 1e-10:
        raise ValueError("density matrix must be Hermitian")
    return rho


def q_function(rep: SpinRep, rho, n: SphereDirection) -> float:
    rho = _check_density(rho, rep.dim)
    psi = scs_state(rep, n)
    return float(rep.dim * np.real(psi.conj() @ rho @ psi))


def q_normalization(rep: SpinRep, rho, quad: SphereQuadrature | None = None) -> float:
    """Quadrature of Q over the sphere; equals tr(rho) when the degree is at least 2j."""
    quad = quad or sphere_quadrature(int(round(2 * rep.j)))
    return float(sum(w * q_function(rep, rho, n) for w, n in zip(quad.weights, quad.nodes)))


def _frame(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors completing m to a right-handed frame."""
    helper = np.array([1.0, 0, 0]) if abs(m[0]) < 0.9 else np.array([0, 1.0, 0])
    e1 = np.cross(helper, m)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(m, e1)


def sample_product_q(bloch_vectors, n_samples: int, seed: int = 0) -> np.ndarray:
    """Draw directions from Q of a pure product state of qubits.

    Each qubit is sampled from the density 1 + n.m against d mu: cos of the
    angle to m is 2 sqrt(u) - 1 and the azimuth about m is uniform.  Returns
    an array (n_samples, n_qubits, 2) of (theta, phi).
    """
    m = np.atleast_2d(np.asarray(bloch_vectors, dtype=float))
    if m.shape[1] != 3 or np.any(np.abs(np.linalg.norm(m, axis=1) - 1) > 1e-10):
        raise ValueError("Bloch vectors must be unit 3-vectors")
    if n_samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random((n_samples, len(m)))
    az = 2 * np.pi * rng.random((n_samples, len(m)))
    c = 2 * np.sqrt(u) - 1
    s = np.sqrt(np.clip(1 - c * c, 0, None))
    out = np.empty((n_samples, len(m), 2))
    for q, mq in enumerate(m):
        e1, e2 = _frame(mq)
        v = (c[:, q, None] * mq + (s[:, q] * np.cos(az[:, q]))[:, None] * e1
             + (s[:, q] * np.sin(az[:, q]))[:, None] * e2)
        out[:, q, 0] = np.arccos(np.clip(v[:, 2], -1, 1))
        out[:, q, 1] = np.arctan2(v[:, 1], v[:, 0]) % (2 * np.pi)
    return out


def y_factor(mu: int, theta, phi) -> np.ndarray:
    """Y_0 = 1 and Y_k = 3 n_k, the single-qubit P-function weights of the Paulis."""
    theta, phi = np.asarray(theta), np.asarray(phi)
    if mu == 0:
        return np.ones_like(theta, dtype=float)
    if mu == 1:
        return 3 * np.sin(theta) * np.cos(phi)
    if mu == 2:
        return 3 * np.sin(theta) * np.sin(phi)
    if mu == 3:
        return 3 * np.cos(theta)
    raise ValueError(f"Pauli index must be 0..3, got {mu}")


def estimate_k_local(samples, pauli_string) -> tuple[float, float]:
    """Mean and standard error of prod_i Y_{mu_i}(n_i) over the samples."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 3 or samples.shape[0] == 0:
        raise ValueError("need a non-empty (n_samples, n_qubits, 2) array")
    pauli_string = tuple(int(p) for p in pauli_string)
    if len(pauli_string) != samples.shape[1]:
        raise ValueError("Pauli string length must equal the number of qubits")
    vals = np.ones(samples.shape[0])
    for q, mu in enumerate(pauli_string):
        vals = vals * y_factor(mu, samples[:, q, 0], samples[:, q, 1])
    n = len(vals)
    err = float(vals.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return float(vals.mean()), err


def product_expectation(bloch_vectors, pauli_string) -> float:
    """Exact expectation of a Pauli string in a pure product state."""
    out = 1.0
    for m, mu in zip(np.atleast_2d(bloch_vectors), pauli_string):
        out *= 1.0 if mu == 0 else float(m[mu - 1])
    return out


def sample_rows(samples) -> list[list[float]]:
    """CSV rows (qubit_index, theta, phi, sample_index)."""
    samples = np.asarray(samples)
    return [[q, float(samples[i, q, 0]), float(samples[i, q, 1]), i]
            for i in range(samples.shape[0]) for q in range(samples.shape[1])]


SAMPLE_COLUMNS = ["qubit_index", "theta", "phi", "sample_index"]
