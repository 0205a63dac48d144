"""Killing form, frame matrices, curvature tables and SL(2,R) picture data.

Indices run over (z, x, y).  Greek indices label hyperboloid directions with
generators J_mu; Latin indices label the fiber with L_a = -i J_a.  The
Dynkin factor lambda_j makes every trace identity independent of j.

The full metric on SL(2,C) has the fiber block -kappa, so it is Minkowski
in signature.  Only the positive blocks and the light cone of the SL(2,R)
picture enter the checks below; the signature is reported as metadata.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .algebra import EPS, SpinRep, mat_exp

METRIC_SIGNATURE = {"hyperboloid": (1, 1, 1), "fiber": (-1, -1, -1)}


@dataclass(frozen=True)
class FrameMatrices:
    a: float
    C: np.ndarray
    S: np.ndarray
    P: np.ndarray
    G: np.ndarray
    omega: np.ndarray
    g: np.ndarray

    def G_inverse(self) -> np.ndarray:
        if self.a <= 0:
            raise ZeroDivisionError("G is singular at a = 0")
        return np.linalg.inv(self.G)


def frame_matrices(a: float) -> FrameMatrices:
    if a < 0:
        raise ValueError("radial coordinate must be non-negative")
    ch, sh = np.cosh(a), np.sinh(a)
    C = np.diag([1.0, ch, ch])
    S = np.zeros((3, 3))
    S[1, 2], S[2, 1] = -sh, sh
    P = np.diag([1.0, 0.0, 0.0])
    G = S + P
    kappa = np.eye(3)
    g = G.T @ kappa @ G
    closed = np.diag([1.0, sh * sh, sh * sh])
    if np.abs(g - closed).max() > 1e-12 * max(1.0, sh * sh):
        raise ArithmeticError("metric congruence disagrees with the closed form")
    return FrameMatrices(a=float(a), C=C, S=S, P=P, G=G, omega=C - P, g=g)


def euler_conjugation_check(a: float, rep: SpinRep) -> float:
    """Max residual of exp(a Jz) L_alpha exp(-a Jz) = L_b C^b_alpha + J_mu S^mu_alpha."""
    fm = frame_matrices(a)
    J = rep.gens
    L = [-1j * x for x in J]
    fwd = mat_exp(a * J[0])
    back = mat_exp(-a * J[0])
    worst = 0.0
    for al in range(3):
        lhs = fwd @ L[al] @ back
        rhs = sum(L[b] * fm.C[b, al] + J[b] * fm.S[b, al] for b in range(3))
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


def killing_form_check(rep: SpinRep) -> float:
    """Max residual of lambda tr(J_mu J_nu) = delta and of the epsilon contraction."""
    J = rep.gens
    tr = np.array([[np.trace(x @ y).real for y in J] for x in J])
    contraction = 0.5 * np.einsum("mab,nab->mn", EPS, EPS)
    return float(max(np.abs(rep.dynkin * tr - np.eye(3)).max(),
                     np.abs(contraction - np.eye(3)).max()))


# Bracket coefficients in the J basis: [X, Y] = sum_f k_f J_f.
# [J, J] = i eps J, [L, L] = -i eps J, [J, L] = eps J.
_BRACKET = {("J", "J"): 1j * EPS, ("L", "L"): -1j * EPS,
            ("J", "L"): EPS.astype(complex), ("L", "J"): EPS.astype(complex)}


@dataclass(frozen=True)
class CurvatureTables:
    """Each table is a (3,3,3,3) array indexed in the order of its name."""

    fiber: np.ndarray        # R_cadb
    hyperboloid: np.ndarray  # R_{mu alpha nu beta}
    mixed_fiber: np.ndarray  # R_{c a mu alpha}
    mixed: np.ndarray        # R_{alpha a beta b}
    symmetric_space: np.ndarray  # lambda tr([J_alpha,J_mu][J_beta,J_nu]) as [mu,alpha,nu,beta]
    route_residual: float
    factor_four_residual: float
    signature: dict


def _trace_table(rep: SpinRep, kinds, sign: float) -> np.ndarray:
    """sign * lambda/4 * tr([X_i, X_j][X_k, X_l]) for the four index kinds."""
    basis = {"J": rep.gens, "L": [-1j * x for x in rep.gens]}
    out = np.zeros((3, 3, 3, 3))
    for i, j, k, l in product(range(3), repeat=4):
        A, B, C, D = (basis[t][n] for t, n in zip(kinds, (i, j, k, l)))
        val = np.trace((A @ B - B @ A) @ (C @ D - D @ C))
        out[i, j, k, l] = sign * 0.25 * rep.dynkin * val.real
    return out


def _contraction_table(kinds, sign: float) -> np.ndarray:
    k1 = _BRACKET[kinds[0], kinds[1]]
    k2 = _BRACKET[kinds[2], kinds[3]]
    return sign * 0.25 * np.einsum("ijf,klf->ijkl", k1, k2).real


def curvature_components(rep: SpinRep) -> CurvatureTables:
    # (bracket kinds, sign, permutation to the named index order)
    # R_cadb = 1/4 lam tr([L_a,L_c][L_b,L_d])      -> brackets (a,c),(b,d)
    # R_mu al nu be = 1/4 lam tr([J_al,J_mu][J_be,J_nu])
    # R_c a mu al = -1/4 lam tr([J_al,J_mu][L_a,L_c])
    # R_al a be b = -1/4 lam tr([J_al,L_a][J_be,L_b])
    specs = {
        "fiber": (("L", "L", "L", "L"), 1.0, "acbd->cadb"),
        "hyperboloid": (("J", "J", "J", "J"), 1.0, "amBn->maBn"),
        "mixed_fiber": (("J", "J", "L", "L"), -1.0, "zmac->cazm"),
        "mixed": (("J", "L", "J", "L"), -1.0, "zaBb->zaBb"),
    }
    tables, worst = {}, 0.0
    for name, (kinds, sign, perm) in specs.items():
        by_trace = _trace_table(rep, kinds, sign)
        by_eps = _contraction_table(kinds, sign)
        worst = max(worst, float(np.abs(by_trace - by_eps).max()))
        tables[name] = np.einsum(perm, by_trace)
    # Symmetric-space curvature lambda tr([J_al,J_mu][J_be,J_nu]) stored as [mu,al,nu,be]
    sym = np.einsum("amBn->maBn", 4.0 * _trace_table(rep, ("J",) * 4, 1.0))
    four = float(np.abs(sym - 4.0 * tables["hyperboloid"]).max())
    return CurvatureTables(symmetric_space=sym, route_residual=worst,
                           factor_four_residual=four, signature=dict(METRIC_SIGNATURE),
                           **tables)


def epsilon_identity_residual(rep: SpinRep) -> float:
    """lambda tr([J_al,J_mu][J_be,J_nu]) against d_{al nu} d_{mu be} - d_{al be} d_{mu nu}."""
    d = np.eye(3)
    target = np.einsum("an,mb->ambn", d, d) - np.einsum("ab,mn->ambn", d, d)
    got = 4.0 * _trace_table(rep, ("J",) * 4, 1.0)  # indices [al, mu, be, nu]
    return float(np.abs(got - target).max())


# SL(2,R) torus picture.  Vectors are given in the chart (a, u, v) with
# u = psi + phi (vertical) and v = psi - phi (horizontal).  In display units the
# horizontal axis is scaled by tanh(a/2), which puts the null direction at 45 degrees.
VIZ_VECTORS = ("d_a", "e_y", "Lt_y", "f_y", "nabla_y", "Jt_xpsi", "null")
VIZ_COLUMNS = (["a", "aspect_ratio"]
               + [f"{n}_{c}" for n in VIZ_VECTORS for c in ("a", "u", "v")]
               + [f"{n}_{c}" for n in VIZ_VECTORS[1:] for c in ("dx", "dy")])


def sl2r_vectors(a: float) -> dict[str, np.ndarray]:
    ch = np.cosh(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        coth = ch / np.sinh(a) if a > 0 else np.nan
        csch = 1 / np.sinh(a) if a > 0 else np.nan
    Lt = np.array([0.0, 1.0, 1.0])       # d/dpsi at fixed a, phi
    ey = np.array([0.0, 1.0, -1.0])      # d/dphi at fixed a, psi
    Jt = Lt * coth - ey * csch
    return {
        "d_a": np.array([1.0, 0.0, 0.0]),
        "e_y": ey,
        "Lt_y": Lt,
        "f_y": ey - Lt,
        "nabla_y": ey - Lt * ch,
        "Jt_xpsi": Jt,
        "null": Lt + Jt,
    }


def sl2r_viz_export(a_values, n_points: int = 1) -> list[list[float]]:
    """Rows for the torus CSV, one per a (``n_points`` a values are interpolated
    between consecutive entries when larger than 1).  a = 0 is allowed: the
    torus collapses, and coth/csch entries become NaN."""
    a_values = np.asarray(a_values, dtype=float).ravel()
    if a_values.size == 0 or np.any(a_values < 0) or not np.all(np.isfinite(a_values)):
        raise ValueError("a values must be finite and non-negative")
    if n_points < 1:
        raise ValueError("n_points must be positive")
    if n_points > 1 and a_values.size > 1:
        grid = [np.linspace(lo, hi, n_points, endpoint=False)
                for lo, hi in zip(a_values[:-1], a_values[1:])]
        a_values = np.concatenate(grid + [a_values[-1:]])
    rows = []
    for a in a_values:
        r = float(np.tanh(a / 2))
        vecs = sl2r_vectors(a)
        row = [float(a), r]
        for n in VIZ_VECTORS:
            row.extend(float(x) for x in vecs[n])
        for n in VIZ_VECTORS[1:]:
            row.extend([r * float(vecs[n][2]), float(vecs[n][1])])
        rows.append(row)
    return rows


def null_angle_deg(a: float) -> float:
    """Display angle of the null vector above the horizontal; 45 for every a > 0."""
    v = sl2r_vectors(a)["null"]
    return float(np.degrees(np.arctan2(v[1], np.tanh(a / 2) * v[2])))


def minkowski_check(a: float) -> float:
    """Lt_y and Jt_xpsi have equal length and are Minkowski-orthogonal on the torus.

    On the torus the metric in (u, v) is read off from the display scaling:
    ds^2 = du^2 - r^2 dv^2 up to an overall factor with r = tanh(a/2).
    Returns the larger of the two residuals |<L,L> + <J,J>| and |<L,J>|.
    """
    r = np.tanh(a / 2)
    eta = np.diag([1.0, -r * r])
    vec = sl2r_vectors(a)
    L, J = vec["Lt_y"][1:], vec["Jt_xpsi"][1:]
    return float(max(abs(L @ eta @ L + J @ eta @ J), abs(L @ eta @ J)))
