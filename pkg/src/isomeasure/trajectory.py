"""Seeded Wiener paths and direct SL(2,C) integration of the Kraus operator.

Each step multiplies K on the left by exp(sqrt(gamma) J.dW) in the defining
representation, evaluated in closed form, so K never leaves SL(2,C).  The
scalar drift exp(-J^2 gamma dt) is left out of K; it only rescales every
POVM element by exp(-2 gamma t j(j+1)) and is re-applied where a check needs it.

Increments are stored as (n_steps, 3) arrays in (z, x, y) order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .algebra import PAULI, SpinRep, exp_traceless_2x2, mat_exp
from .cartan import cartan_decompose, lift_kraus

MAX_STEPS = 10**9
RENORM_EVERY = 1000
WEAK_LIMIT = 0.01


@dataclass(frozen=True)
class SimConfig:
    gamma: float = 1.0
    dt: float = 1e-3
    T: float = 1.0
    seed: int = 0
    checkpoint_times: tuple[float, ...] = ()

    def __post_init__(self):
        if not (self.gamma > 0 and self.dt > 0 and self.T >= 0):
            raise ValueError("need gamma > 0, dt > 0 and T >= 0")
        if self.gamma * self.dt > WEAK_LIMIT * (1 + 1e-12):
            raise ValueError(
                f"gamma*dt = {self.gamma * self.dt:g} exceeds the weak-measurement "
                f"limit {WEAK_LIMIT}"
            )
        if self.T / self.dt > MAX_STEPS:
            raise OverflowError(f"T/dt = {self.T / self.dt:.3g} steps is too many")
        for t in self.checkpoint_times:
            if not 0 <= t <= self.T * (1 + 1e-12):
                raise ValueError(f"checkpoint {t} outside [0, {self.T}]")
        object.__setattr__(self, "checkpoint_times", tuple(float(t) for t in self.checkpoint_times))

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    def checkpoint_steps(self) -> list[int]:
        return [int(round(t / self.dt)) for t in self.checkpoint_times]


@dataclass(frozen=True)
class WienerPath:
    dt: float
    n_steps: int
    seed: int
    increments: np.ndarray = field(repr=False)
    offset: int = 0  # global index of the first increment
    index: int | None = None  # trajectory index within an ensemble

    def segment(self, start: int, stop: int) -> "WienerPath":
        inc = self.increments[start:stop]
        return replace(self, n_steps=len(inc), increments=inc, offset=self.offset + start)


def path_rng(seed: int, index: int | None = None) -> np.random.Generator:
    """Generator for one trajectory.

    Path ``index`` of an ensemble gets child ``index`` of SeedSequence(seed), the
    stream SeedSequence(seed).spawn() would hand out.  Unlike seed XOR index,
    ensembles with different master seeds never share paths.
    """
    if index is None:
        return np.random.Generator(np.random.PCG64(int(seed)))
    if index < 0:
        raise ValueError("path index must be non-negative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


def sample_wiener_path(config: SimConfig, index: int | None = None) -> WienerPath:
    n = config.n_steps
    rng = path_rng(config.seed, index)
    inc = rng.standard_normal((n, 3)) * np.sqrt(config.dt)
    return WienerPath(dt=config.dt, n_steps=n, seed=config.seed, increments=inc, index=index)


def _generator(dW, gamma: float) -> np.ndarray:
    dW = np.asarray(dW, dtype=float)
    return 0.5 * np.sqrt(gamma) * sum(dW[..., k, None, None] * PAULI[k] for k in range(3))


def step_kraus(K, dW, gamma: float) -> np.ndarray:
    """exp(sqrt(gamma) J.dW) K in the defining rep."""
    dW = np.asarray(dW, dtype=float)
    if not np.all(np.isfinite(dW)):
        raise ValueError("non-finite Wiener increment")
    return exp_traceless_2x2(_generator(dW, gamma)) @ np.asarray(K, dtype=complex)



def kraus_sweep(K: np.ndarray, dW: np.ndarray, gamma: float, offset: int = 0,
                snapshots=()) -> tuple[np.ndarray, dict[int, np.ndarray]]:
    """Advance a stack of Kraus operators through a block of increments.

    K has shape (N, 2, 2) and dW shape (N, n, 3).  ``offset`` is the global index
    of dW[:, 0]; determinant renormalization fires when the global step count
    reaches a multiple of ``RENORM_EVERY``, which keeps split runs bitwise equal
    to unsplit ones.  ``snapshots`` are local step counts (0..n) to record.
    """
    K = np.array(K, dtype=complex)
    k00, k01, k10, k11 = K[:, 0, 0], K[:, 0, 1], K[:, 1, 0], K[:, 1, 1]
    want = set(int(s) for s in snapshots)
    saved: dict[int, np.ndarray] = {}
    half = 0.5 * np.sqrt(gamma)

    def pack():
        return np.stack([np.stack([k00, k01], -1), np.stack([k10, k11], -1)], -2)

    if 0 in want:
        saved[0] = pack()
    n = dW.shape[1]
    for i in range(n):
        vz = half * dW[:, i, 0]
        vx = half * dW[:, i, 1]
        vy = half * dW[:, i, 2]
        r = np.sqrt(vz * vz + vx * vx + vy * vy)
        c = np.cosh(r)
        s = np.where(r > 0, np.sinh(r) / np.where(r > 0, r, 1.0), 1.0)
        m00 = c + s * vz
        m11 = c - s * vz
        m01 = s * (vx - 1j * vy)
        m10 = s * (vx + 1j * vy)
        k00, k01, k10, k11 = (
            m00 * k00 + m01 * k10,
            m00 * k01 + m01 * k11,
            m10 * k00 + m11 * k10,
            m10 * k01 + m11 * k11,
        )
        if (offset + i + 1) % RENORM_EVERY == 0:
            root = np.sqrt(k00 * k11 - k01 * k10)
            k00, k01, k10, k11 = k00 / root, k01 / root, k10 / root, k11 / root
        if i + 1 in want:
            saved[i + 1] = pack()
    return pack(), saved


def integrate_kraus(path: WienerPath, gamma: float, checkpoints=(), K0=None) -> list[np.ndarray]:
    """Ordered product of step exponentials, newest factor leftmost.

    ``checkpoints`` are times measured from the start of ``path``.  Returns the
    Kraus operator at each checkpoint, followed by the final one.
    """
    T = path.n_steps * path.dt
    steps = []
    for t in checkpoints:
        if not 0 <= t <= T * (1 + 1e-12):
            raise ValueError(f"checkpoint {t} outside [0, {T}]")
        steps.append(int(round(t / path.dt)))
    K = np.eye(2, dtype=complex) if K0 is None else np.asarray(K0, dtype=complex)
    final, saved = kraus_sweep(K[None], path.increments[None], gamma, path.offset, steps)
    return [saved[s][0] for s in steps] + [final[0]]


def mmcsd_residual(K, K_next, dW, gamma: float, dt: float | None = None) -> float:
    """Frobenius norm of (dK K^-1 - (dK K^-1)^2 / 2) - sqrt(gamma) J.dW.

    For an exact group step this equals |X^3|/3 + O(X^4), so it scales as dt^{3/2}.
    ``dt`` is accepted for interface symmetry; the residual depends on dW only.
    """
    K = np.asarray(K, dtype=complex)
    D = (np.asarray(K_next, dtype=complex) - K) @ np.linalg.inv(K)
    return float(np.linalg.norm(D - 0.5 * D @ D - _generator(dW, gamma)))


def anisotropic_step(K, A, dW, gamma: float, eps, rep: SpinRep, dt: float):
    """One step of the anisotropic measurement split as L_hat = K_hat A_hat.

    K_hat' = exp(sum_mu sqrt(gamma (1 + eps_mu)) J_mu dW^mu) K_hat in the
    defining rep, and A_hat' = exp(-gamma dt lift(K_hat')^-1 (eps Q) lift(K_hat')) A_hat
    in ``rep`` with eps Q = sum_mu eps_mu J_mu^2.
    """
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (3,) or abs(eps.sum()) > 1e-12:
        raise ValueError("anisotropies must be three numbers summing to zero")
    scaled = np.asarray(dW, dtype=float) * np.sqrt(1 + eps)
    K_next = step_kraus(K, scaled, gamma)
    epsQ = sum(e * g @ g for e, g in zip(eps, rep.gens))
    if not np.any(eps):
        return K_next, np.array(A, dtype=complex)
    Lk = lift_kraus(cartan_decompose(K_next), rep)
    gen = -gamma * dt * np.linalg.solve(Lk, epsQ @ Lk)
    return K_next, mat_exp(gen) @ np.asarray(A, dtype=complex)


def single_observable_superop_check(rep: SpinRep, gamma: float, t: float, rho,
                                    n_samples: int, seed: int = 0) -> float:
    """Monte Carlo of the single-shot Gaussian measurement of Jz against its dephasing map.

    Averages L rho L^dagger with L = exp(sqrt(gamma) W Jz - gamma t Jz^2), W ~ N(0, t),
    and compares with rho_mn exp(-gamma t (m - n)^2 / 2).  Returns the max entrywise
    absolute difference.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (rep.dim, rep.dim):
        raise ValueError("density matrix does not match the representation")
    if np.abs(rho - rho.conj().T).max() > 1e-10 or abs(np.trace(rho) - 1) > 1e-10:
        raise ValueError("density matrix must be Hermitian with unit trace")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValueError("density matrix must be positive semidefinite")
    if n_samples < 1:
        raise ValueError("need at least one sample")
    m = rep.m_values
    msum = m[:, None] + m[None, :]
    W = path_rng(seed).standard_normal(n_samples) * np.sqrt(t)
    # L is diagonal, so (L rho L^dag)_mn = rho_mn exp(sqrt(g) W (m+n) - g t (m^2+n^2))
    weights = np.zeros((rep.dim, rep.dim))
    for s in np.unique(msum):
        weights[msum == s] = np.mean(np.exp(np.sqrt(gamma) * W * s))
    est = rho * weights * np.exp(-gamma * t * (m[:, None] ** 2 + m[None, :] ** 2))
    exact = rho * np.exp(-gamma * t * (m[:, None] - m[None, :]) ** 2 / 2)
    return float(np.abs(est - exact).max())


def kraus_checkpoint_rows(times, Ks) -> list[list[float]]:
    """Rows for the checkpoint CSV: t, then Re/Im of K00, K01, K10, K11."""
    rows = []
    for t, K in zip(times, Ks):
        flat = np.asarray(K).reshape(4)
        rows.append([float(t)] + [v for z in flat for v in (z.real, z.imag)])
    return rows


KRAUS_COLUMNS = ["t", "re_k00", "im_k00", "re_k01", "im_k01",
                 "re_k10", "im_k10", "re_k11", "im_k11"]
