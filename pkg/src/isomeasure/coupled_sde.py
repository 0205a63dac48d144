"""Coupled SDEs for the Cartan coordinates (V, a, U) in the moving frame.

With dW_move = R(V)^T dW (R from ``adjoint_rotation``):

    da = gamma dt coth a + sqrt(gamma) dW_move^z
    U' = exp(-i dPhi) U,   dPhi = (Jx sqrt(gamma) dW_move^y - Jy sqrt(gamma) dW_move^x) csch a
    V' = V exp(+i dPsi),   dPsi = same with coth a

The default scheme is Euler-Maruyama in a with exact group exponentials for
U and V.  ``scheme="milstein"`` adds the O(dt) terms that the BCH expansion of
exp(Y) exp(a Jz) produces from products of the same moving-frame increments
y = sqrt(gamma) dW_move (no Levy areas, matching the piecewise-constant record
the direct integrator sees):

    a' = a + y_z + coth(a) (y_x^2 + y_y^2) / 2
    phi = (y_y, -y_x) csch(a) (1 - y_z coth a)
    psi = (y_y, -y_x) [coth(a) (1 - y_z coth a) + y_z / 2]

Its expected drift equals the Euler one, and it is strong order 1 against the
direct integrator instead of order 1/2.  SU(2) elements
are carried internally as spinor pairs (p, q) for the matrix [[p, -q*], [q, p*]],
which makes products cheap and re-projection onto SU(2) a normalization.

The coth/csch terms are singular at a = 0, so paths that start at the
identity run in the direct Kraus integrator until a exceeds ``HANDOFF_A``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import _require_su2, adjoint_rotation
from .cartan import cartan_decompose, cartan_invariants
from .trajectory import WienerPath, kraus_sweep

A_FLOOR = 0.05
HANDOFF_A = 0.3


@dataclass(frozen=True)
class CoupledState:
    V: np.ndarray
    a: float
    U: np.ndarray

    def kraus(self) -> np.ndarray:
        h = np.exp(self.a / 2)
        return self.V @ np.diag([h, 1 / h]) @ self.U


def _to_pq(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return M[..., 0, 0].copy(), M[..., 1, 0].copy()


def _from_pq(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.stack([np.stack([p, -np.conj(q)], -1), np.stack([q, np.conj(p)], -1)], -2)


def _mul(p1, q1, p2, q2):
    return p1 * p2 - np.conj(q1) * q2, q1 * p2 + np.conj(p1) * q2


def _moving(p, q, dW):
    """R(V)^T dW for V = (p, q), returned as (z, x, y) components."""
    z = dW[..., 0]
    w = dW[..., 1] + 1j * dW[..., 2]
    mz = z * (np.abs(p) ** 2 - np.abs(q) ** 2) + 2 * (w * p * np.conj(q)).real
    mxy = w * p * p - np.conj(w) * q * q - 2 * z * p * q
    return mz, mxy.real, mxy.imag


def moving_frame_increments(dW, V) -> np.ndarray:
    """dW_move = R(V)^{-1} dW."""
    V = _require_su2(V)
    return adjoint_rotation(V).T @ np.asarray(dW, dtype=float)


def _rotation_pq(fx, fy, sign):
    """exp(sign * i (fx Jx + fy Jy)) as (p, q)."""
    r = np.hypot(fx, fy)
    c = np.cos(r / 2)
    s = np.where(r > 0, np.sin(r / 2) / np.where(r > 0, r, 1.0), 0.5)
    return c + 0j, -sign * s * (fy - 1j * fx)


def coupled_sweep(pv, qv, a, pu, qu, dW, gamma: float, dt: float, snapshots=(),
                  scheme: str = "euler"):
    with np.errstate(invalid="ignore"):
        return _coupled_sweep(pv, qv, a, pu, qu, dW, gamma, dt, snapshots, scheme)


def _coupled_sweep(pv, qv, a, pu, qu, dW, gamma, dt, snapshots, scheme):
    """Advance stacks of coupled states through dW of shape (N, n, 3).

    Returns the final (pv, qv, a, pu, qu) and a dict of snapshots keyed by local
    step count.  Paths whose a drops to the floor are flagged with NaN from then on.
    """
    if scheme not in ("euler", "milstein"):
        raise ValueError(f"unknown scheme {scheme!r}")
    pv, qv, pu, qu = (np.array(x, dtype=complex) for x in (pv, qv, pu, qu))
    a = np.array(a, dtype=float)
    sg = np.sqrt(gamma)
    want = set(int(s) for s in snapshots)
    saved = {}
    if 0 in want:
        saved[0] = (pv.copy(), qv.copy(), a.copy(), pu.copy(), qu.copy())
    for i in range(dW.shape[1]):
        mz, mx, my = _moving(pv, qv, dW[:, i])
        csch = 1 / np.sinh(a)
        coth = np.cosh(a) * csch
        yz, yx, yy = sg * mz, sg * mx, sg * my
        if scheme == "milstein":
            f = 1 - coth * yz
            a_new = a + yz + 0.5 * coth * (yx * yx + yy * yy)
            ru = _rotation_pq(yy * csch * f, -yx * csch * f, -1)
            rv = _rotation_pq(yy * (coth * f + 0.5 * yz), -yx * (coth * f + 0.5 * yz), +1)
        else:
            a_new = a + gamma * dt * coth + yz
            ru = _rotation_pq(yy * csch, -yx * csch, -1)
            rv = _rotation_pq(yy * coth, -yx * coth, +1)
        pu, qu = _mul(ru[0], ru[1], pu, qu)
        pv, qv = _mul(pv, qv, rv[0], rv[1])
        nu = np.sqrt(np.abs(pu) ** 2 + np.abs(qu) ** 2)
        nv = np.sqrt(np.abs(pv) ** 2 + np.abs(qv) ** 2)
        pu, qu, pv, qv = pu / nu, qu / nu, pv / nv, qv / nv
        a = np.where(a_new > A_FLOOR, a_new, np.nan)
        if i + 1 in want:
            saved[i + 1] = (pv.copy(), qv.copy(), a.copy(), pu.copy(), qu.copy())
    return (pv, qv, a, pu, qu), saved


def step_coupled(s: CoupledState, dW, gamma: float, dt: float) -> CoupledState:
    if not s.a > A_FLOOR:
        raise ValueError(
            f"a = {s.a:g} is at or below the floor {A_FLOOR}; use the direct integrator"
        )
    pv, qv = _to_pq(_require_su2(s.V, 1e-8))
    pu, qu = _to_pq(_require_su2(s.U, 1e-8))
    dW = np.asarray(dW, dtype=float).reshape(1, 1, 3)
    (pv, qv, a, pu, qu), _ = coupled_sweep(
        pv[None], qv[None], [s.a], pu[None], qu[None], dW, gamma, dt
    )
    if np.isnan(a[0]):
        raise ValueError("step pushed a below the floor; use the direct integrator")
    return CoupledState(V=_from_pq(pv, qv)[0], a=float(a[0]), U=_from_pq(pu, qu)[0])


def drift_only_a(a0: float, gamma: float, t) -> np.ndarray:
    """Solution of da/dt = gamma coth a: cosh a(t) = cosh(a0) e^{gamma t}."""
    return np.arccosh(np.cosh(a0) * np.exp(gamma * np.asarray(t)))


def coupled_invariants(pv, qv, a, pu, qu):
    """(a, n_U, n_V, W) from stacked spinor pairs; directions in (z, x, y)."""
    n_u = np.stack([np.abs(pu) ** 2 - np.abs(qu) ** 2, (-2 * pu * qu).real,
                    (-2 * pu * qu).imag], -1)
    c = 2 * np.conj(pv) * qv
    n_v = np.stack([np.abs(pv) ** 2 - np.abs(qv) ** 2, c.real, c.imag], -1)
    W = _from_pq(*_mul(pv, qv, pu, qu))
    return a, n_u, n_v, W


def _direct_invariants(K):
    a, n_u, n_v = cartan_invariants(K)
    W = np.empty_like(K)
    for k in range(len(K)):
        f = cartan_decompose(K[k] / np.sqrt(np.linalg.det(K[k])))
        W[k] = f.V @ f.U
    return a, n_u, n_v, W


def _angle(n1, n2):
    return np.arccos(np.clip(np.sum(n1 * n2, -1), -1, 1))


def compare_integrators(dW: np.ndarray, dt: float, a0: float, gamma: float,
                        checkpoint_steps=None, scheme: str = "milstein") -> dict[str, np.ndarray]:
    """Run both integrators on identical increments (N, n, 3) from K0 = exp(a0 Jz).

    Returns per-checkpoint, per-path arrays of |delta a|, direction angle and
    polar-unitary distance.  Paths that hit the floor in the coupled run are NaN.
    """
    N, n, _ = dW.shape
    steps = [n] if checkpoint_steps is None else list(checkpoint_steps)
    K0 = np.broadcast_to(np.diag([np.exp(a0 / 2), np.exp(-a0 / 2)]).astype(complex), (N, 2, 2))
    _, direct = kraus_sweep(K0, dW, gamma, 0, steps)
    one = np.ones(N, dtype=complex)
    zero = np.zeros(N, dtype=complex)
    _, coupled = coupled_sweep(one, zero, np.full(N, a0), one, zero, dW, gamma, dt, steps,
                               scheme=scheme)
    out = {"da": [], "angle": [], "w_dist": []}
    for s in steps:
        ad, nud, _, Wd = _direct_invariants(direct[s])
        ac, nuc, _, Wc = coupled_invariants(*coupled[s])
        bad = np.isnan(ac)
        out["da"].append(np.abs(ad - ac))
        out["angle"].append(np.where(bad, np.nan, _angle(nud, nuc)))
        out["w_dist"].append(np.where(bad, np.nan, np.linalg.norm(Wd - Wc, axis=(-2, -1))))
    return {k: np.array(v) for k, v in out.items()} | {"steps": np.array(steps)}


def coarsen(dW: np.ndarray) -> np.ndarray:
    """Sum consecutive increment pairs: the same Brownian path at twice the step."""
    n = dW.shape[-2] // 2 * 2
    return dW[..., 0:n:2, :] + dW[..., 1:n:2, :]


@dataclass(frozen=True)
class CrossValidation:
    n_paths: int
    n_floored: int  # paths that reached a <= A_FLOOR in either run; excluded below
    scheme: str
    median_da: float
    median_angle: float
    max_da: float
    max_angle: float
    max_w_dist: float
    rms_da_fine: float
    rms_da_coarse: float
    rms_angle_fine: float
    rms_angle_coarse: float

    @property
    def halving_ratio(self) -> float:
        """RMS |delta a| at 2 dt over RMS |delta a| at dt."""
        return self.rms_da_coarse / self.rms_da_fine

    @property
    def angle_halving_ratio(self) -> float:
        return self.rms_angle_coarse / self.rms_angle_fine


def cross_validate_batch(dW: np.ndarray, dt: float, a0: float, gamma: float,
                         scheme: str = "milstein") -> CrossValidation:
    """Compare the integrators at the end of the path, at dt and at 2 dt."""
    if a0 < HANDOFF_A:
        raise ValueError(f"start the comparison at a0 >= {HANDOFF_A}")
    fine = compare_integrators(dW, dt, a0, gamma, scheme=scheme)
    coarse = compare_integrators(coarsen(dW), 2 * dt, a0, gamma, scheme=scheme)
    da, ang, wd = fine["da"][-1], fine["angle"][-1], fine["w_dist"][-1]
    cda, cang = coarse["da"][-1], coarse["angle"][-1]
    ok = ~(np.isnan(da) | np.isnan(cda))
    if not ok.any():
        raise RuntimeError("every path reached the floor; raise a0 or shorten T")

    def rms(x):
        return float(np.sqrt(np.mean(x[ok] ** 2)))

    return CrossValidation(
        n_paths=dW.shape[0],
        n_floored=int((~ok).sum()),
        scheme=scheme,
        median_da=float(np.median(da[ok])),
        median_angle=float(np.median(ang[ok])),
        max_da=float(da[ok].max()),
        max_angle=float(ang[ok].max()),
        max_w_dist=float(wd[ok].max()),
        rms_da_fine=rms(da),
        rms_da_coarse=rms(cda),
        rms_angle_fine=rms(ang),
        rms_angle_coarse=rms(cang),
    )


def cross_validate(path: WienerPath, K0_a: float, gamma: float,
                   scheme: str = "milstein") -> CrossValidation:
    return cross_validate_batch(path.increments[None], path.dt, K0_a, gamma, scheme)


def integrate_with_handoff(path: WienerPath, gamma: float, checkpoints=(),
                           scheme: str = "euler") -> list[CoupledState]:
    """Direct integrator near the origin, coupled SDE away from it.

    Starts at K = I in the direct integrator, switches to the coupled SDE once
    a > HANDOFF_A and switches back if a falls below HANDOFF_A / 2, which keeps
    the coupled run clear of the floor.  Returns the state at each checkpoint
    followed by the final state.
    """
    want = sorted(int(round(t / path.dt)) for t in checkpoints)
    out: list[CoupledState] = []
    K = np.eye(2, dtype=complex)
    state = None  # (pv, qv, a, pu, qu) while in the coupled regime

    def snapshot():
        if state is None:
            f = cartan_decompose(K / np.sqrt(np.linalg.det(K)))
            return CoupledState(f.V, f.a, f.U)
        pv, qv, a, pu, qu = state
        return CoupledState(_from_pq(pv, qv)[0], float(a[0]), _from_pq(pu, qu)[0])

    for i in range(path.n_steps):
        inc = path.increments[None, i:i + 1]
        if state is None:
            K = kraus_sweep(K[None], inc, gamma, path.offset + i)[0][0]
            if cartan_invariants(K[None])[0][0] > HANDOFF_A:
                f = cartan_decompose(K / np.sqrt(np.linalg.det(K)))
                pv, qv = _to_pq(f.V)
                pu, qu = _to_pq(f.U)
                state = (pv[None], qv[None], np.array([f.a]), pu[None], qu[None])
        else:
            state, _ = coupled_sweep(*state, inc, gamma, path.dt, scheme=scheme)
            if not state[2][0] > HANDOFF_A / 2:
                K = snapshot().kraus() if not np.isnan(state[2][0]) else None
                if K is None:
                    raise RuntimeError("coupled step jumped through the floor; reduce dt")
                state = None
        while want and want[0] == i + 1:
            out.append(snapshot())
            want.pop(0)
    for _ in want:  # checkpoint at t = 0
        out.insert(0, CoupledState(np.eye(2, dtype=complex), 0.0, np.eye(2, dtype=complex)))
    out.append(snapshot())
    return out
