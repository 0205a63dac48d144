"""Radial Fokker-Planck solver for the spin-purity distribution P_t(a).

    dP/dt = -gamma d/da[coth(a) P] + (gamma/2) d^2P/da^2
          = (gamma/2) d/da[ sinh^2(a) d/da( P / sinh^2(a) ) ]

Finite volumes on cells of width h.  The face flux is

    F_{i+1/2} = -(gamma/2) s_{i+1/2} (P_{i+1}/s_{i+1} - P_i/s_i) / h,   s = sinh^2 a,

so P proportional to sinh^2 a has zero flux on every face.  Faces at a = 0 and
a = a_max carry no flux.  Steps are backward Euler: the update matrix is an
M-matrix, which keeps P positive for any dt, and its columns telescope, which
conserves mass to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.special
import scipy.stats

from .algebra import SpinRep

MASS_TOL = 1e-6
CFL_MAX = 0.5


@dataclass(frozen=True)
class RadialGrid:
    a_max: float
    n_cells: int
    a_min: float = 0.0

    def __post_init__(self):
        if self.a_min != 0.0:
            raise ValueError("the radial grid starts at a = 0")
        if not (self.a_max > 0 and self.n_cells >= 2):
            raise ValueError("need a_max > 0 and at least two cells")

    @classmethod
    def for_time(cls, gammaT: float, h: float = 0.01) -> "RadialGrid":
        """Grid that contains the mass up to gammaT with a comfortable margin."""
        a_max = gammaT + 8 * np.sqrt(gammaT) + 4
        n = int(np.ceil(a_max / h))
        return cls(a_max=n * h, n_cells=n)

    @property
    def h(self) -> float:
        return self.a_max / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.h

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.h


@dataclass(frozen=True)
class RadialDistribution:
    grid: RadialGrid
    values: np.ndarray = field(repr=False)
    time: float
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_cells,):
            raise ValueError("values do not match the grid")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("density must be finite and non-negative")

    def mass(self) -> float:
        return float(self.values.sum() * self.grid.h)

    def mean(self) -> float:
        return float(np.sum(self.grid.centers * self.values) * self.grid.h)

    def var(self) -> float:
        a = self.grid.centers
        m = self.mean()
        return float(np.sum((a - m) ** 2 * self.values) * self.grid.h)

    def cell_masses(self) -> np.ndarray:
        return self.values * self.grid.h


def _log_sinh(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x + np.log1p(-np.exp(-2 * x)) - np.log(2)


def _from_cdf(cdf, grid: RadialGrid) -> np.ndarray:
    masses = np.diff(cdf(grid.edges))
    masses = np.clip(masses, 0, None)
    return masses / masses.sum() / grid.h


def warm_start(gamma: float, t0: float, grid: RadialGrid) -> RadialDistribution:
    """Exact flat-space radial law at small time: chi with 3 dof, scale sqrt(gamma t0).

    Cell values are exact cell masses of that law divided by h, renormalized on the grid.
    """
    if t0 <= 0:
        raise ValueError("t0 must be positive; a point mass at a = 0 is not representable")
    if gamma * t0 > 0.05:
        raise ValueError(f"gamma*t0 = {gamma * t0:g} is too late for the flat-space warm start")
    law = scipy.stats.chi(3, scale=np.sqrt(gamma * t0))
    return RadialDistribution(grid, _from_cdf(law.cdf, grid), t0, {"source": "warm_start"})


def chi3_density(a, gamma: float, t: float) -> np.ndarray:
    """sqrt(2/pi) a^2 exp(-a^2 / 2 gamma t) / (gamma t)^{3/2}."""
    s = gamma * t
    a = np.asarray(a, dtype=float)
    return np.sqrt(2 / np.pi) * a * a * np.exp(-a * a / (2 * s)) / s**1.5


def _exact_cdf(x, s: float) -> np.ndarray:
    """CDF of (a/s)[n(a; s, s) - n(a; -s, s)] on a >= 0, n the normal pdf of variance s."""
    x = np.asarray(x, dtype=float)
    r = np.sqrt(s)
    norm = scipy.stats.norm

    def part(mu):
        # integral over [0, x] of a n(a; mu, s)
        return mu * (norm.cdf((x - mu) / r) - norm.cdf(-mu / r)) - s * (
            norm.pdf((x - mu) / r) - norm.pdf(-mu / r)
        ) / r

    return (part(s) - part(-s)) / s


def exact_radial_law(gamma: float, t: float, grid: RadialGrid) -> RadialDistribution:
    """Closed-form P_t(a) from the heat kernel of hyperbolic 3-space.

    The radial generator (gamma/2)(d^2/da^2 + 2 coth a d/da) is gamma/2 times the
    radial Laplacian of H^3, whose kernel gives, with s = gamma t,

        P_t(a) = sqrt(2/pi) s^{-3/2} e^{-s/2} a sinh(a) e^{-a^2 / 2s}
               = (a/s) [n(a; s, s) - n(a; -s, s)].

    For large s the mean is s + 1 and the variance s - 1.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    s = gamma * t
    return RadialDistribution(grid, _from_cdf(lambda x: _exact_cdf(x, s), grid), t,
                              {"source": "exact"})


def exact_density(a, gamma: float, t: float) -> np.ndarray:
    s = gamma * t
    a = np.asarray(a, dtype=float)
    r = np.sqrt(s)
    return (a / s) * (scipy.stats.norm.pdf((a - s) / r) - scipy.stats.norm.pdf((a + s) / r)) / r


def exact_moments(gamma: float, t: float) -> tuple[float, float]:
    """(mean, variance) of the exact radial law by quadrature."""
    s = gamma * t
    hi = s + 12 * np.sqrt(s) + 12
    m1 = scipy.integrate.quad(lambda a: a * exact_density(a, gamma, t), 0, hi, limit=200)[0]
    m2 = scipy.integrate.quad(lambda a: a * a * exact_density(a, gamma, t), 0, hi, limit=200)[0]
    return m1, m2 - m1 * m1


def _flux_coefficients(grid: RadialGrid, gamma: float):
    """Interior-face coefficients (lo, hi) with F_{i+1/2} = lo_i P_i - hi_i P_{i+1}."""
    c = grid.centers
    f = grid.edges[1:-1]
    ls_f = 2 * _log_sinh(f)
    k = 0.5 * gamma / grid.h
    lo = k * np.exp(ls_f - 2 * _log_sinh(c[:-1]))
    hi = k * np.exp(ls_f - 2 * _log_sinh(c[1:]))
    return lo, hi


def face_flux(P: RadialDistribution, gamma: float) -> np.ndarray:
    """Flux through every face, including the zero boundary faces."""
    lo, hi = _flux_coefficients(P.grid, gamma)
    v = P.values
    inner = lo * v[:-1] - hi * v[1:]
    return np.concatenate([[0.0], inner, [0.0]])


def flux_form_rhs(P: RadialDistribution, gamma: float) -> np.ndarray:
    return -np.diff(face_flux(P, gamma)) / P.grid.h


def advective_form_rhs(P: RadialDistribution, gamma: float) -> np.ndarray:
    """-gamma d/da[coth a P] + (gamma/2) P'' by centered differences (interior cells only)."""
    a, v, h = P.grid.centers, P.values, P.grid.h
    out = np.full_like(v, np.nan)
    g = v / np.tanh(a)
    out[1:-1] = -gamma * (g[2:] - g[:-2]) / (2 * h) + 0.5 * gamma * (v[2:] - 2 * v[1:-1] + v[:-2]) / h**2
    return out


def _operator_bands(grid: RadialGrid, gamma: float, diffusion: bool) -> np.ndarray:
    """Banded form (3, n) of the semi-discrete operator M with dP/dt = M P."""
    n = grid.n_cells
    if diffusion:
        lo, hi = _flux_coefficients(grid, gamma)
    else:
        # Upwind pure advection at velocity gamma coth(a) > 0.
        lo = gamma / np.tanh(grid.edges[1:-1])
        hi = np.zeros(n - 1)
    # dP_i/dt = (F_{i-1/2} - F_{i+1/2}) / h
    ab = np.zeros((3, n))
    ab[1, :-1] -= lo / grid.h
    ab[1, 1:] -= hi / grid.h
    ab[0, 1:] = hi / grid.h  # P_{i+1} into cell i
    ab[2, :-1] = lo / grid.h  # P_i into cell i+1
    return ab


def fp_solve(P0: RadialDistribution, gamma: float, T: float, dt: float,
             diffusion: bool = True, check_grid: bool = True) -> RadialDistribution:
    """Advance P0 from its own time to absolute time T with backward-Euler steps."""
    grid = P0.grid
    if gamma * dt / grid.h > CFL_MAX:
        raise ValueError(f"gamma*dt/h = {gamma * dt / grid.h:g} exceeds {CFL_MAX}")
    span = T - P0.time
    if span < -1e-12:
        raise ValueError("target time precedes the initial distribution")
    if check_grid and grid.a_max < gamma * T + 6 * np.sqrt(gamma * T):
        raise ValueError("grid too short to contain the mass at time T")
    if abs(P0.mass() - 1) > MASS_TOL:
        raise ValueError("initial distribution is not normalized")
    n_steps = max(0, int(round(span / dt)))
    ab = -dt * _operator_bands(grid, gamma, diffusion)
    ab[1] += 1.0
    v = P0.values.copy()
    worst = 0.0
    for k in range(n_steps):
        v = scipy.linalg.solve_banded((1, 1), ab, v, check_finite=False)
        err = abs(v.sum() * grid.h - 1)
        worst = max(worst, err)
        if err > MASS_TOL:
            raise RuntimeError(f"mass drifted by {err:.2e} at step {k + 1}")
    v = np.clip(v, 0, None)
    info = {"source": "fp_solve", "gamma": gamma, "dt": dt, "steps": n_steps,
            "max_mass_error": worst, "diffusion": diffusion}
    return RadialDistribution(grid, v, P0.time + n_steps * dt, info)


def gaussian_asymptote(gamma: float, T: float, grid: RadialGrid, shift: float = 0.0) -> RadialDistribution:
    """N(gamma T + shift, gamma T) restricted to the grid and renormalized.

    ``shift = log 2`` gives the drift-corrected centering arccosh(e^{gamma T}) ~ gamma T + log 2.
    """
    if gamma * T < 3:
        raise ValueError("the Gaussian form is a late-time asymptote; need gamma*T >= 3")
    law = scipy.stats.norm(loc=gamma * T + shift, scale=np.sqrt(gamma * T))
    return RadialDistribution(grid, _from_cdf(law.cdf, grid), T, {"source": "gaussian", "shift": shift})


def l1_distance(P: RadialDistribution, Q: RadialDistribution) -> float:
    if P.grid != Q.grid:
        raise ValueError("distributions live on different grids")
    return float(np.abs(P.values - Q.values).sum() * P.grid.h)


def shifted_gaussian_l1(gammaT: float, shift: float = np.log(2)) -> float:
    """L1 distance between N(mu, s^2) and N(mu + shift, s^2): 2 (2 Phi(shift / 2s) - 1)."""
    return float(2 * (2 * scipy.stats.norm.cdf(shift / (2 * np.sqrt(gammaT))) - 1))


def tail_probability(P: RadialDistribution, eps: float) -> float:
    """Prob(purity > eps) = integral of P over [0, log(1/sqrt(eps))], trapezoid rule."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    L = -0.5 * np.log(eps)
    a = P.grid.centers
    inside = a < L
    x = np.concatenate([[0.0], a[inside]])
    y = np.concatenate([[0.0], P.values[inside]])
    if L < P.grid.a_max:
        x = np.append(x, L)
        y = np.append(y, np.interp(L, a, P.values, left=0.0))
    else:
        x = np.append(x, P.grid.a_max)
        y = np.append(y, P.values[-1])
    return float(min(1.0, np.trapezoid(y, x)))


class CollapseBound(NamedTuple):
    half_erfc: float
    final_bound: float


def erfc_bound(gammaT: float, eps: float) -> CollapseBound:
    """(1/2) erfc((gammaT - L)/sqrt(2 gammaT)) with L = log(1/sqrt(eps)), and its Mills bound.

    The Mills-ratio bound Q(z) < phi(z)/z with z = (gammaT - L)/sqrt(gammaT)
    reduces to sqrt(2/(pi gammaT)) exp(-gammaT/8) when eps = exp(-gammaT).
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if gammaT <= 0:
        raise ValueError("gammaT must be positive")
    L = -0.5 * np.log(eps)
    if gammaT <= L:
        raise ValueError("the bound needs gammaT > log(1/sqrt(eps))")
    half = 0.5 * scipy.special.erfc((gammaT - L) / np.sqrt(2 * gammaT))
    z = (gammaT - L) / np.sqrt(gammaT)
    final = np.exp(-0.5 * z * z) / (z * np.sqrt(2 * np.pi))
    return CollapseBound(float(half), float(final))


def log_trace_exp(a, j: float) -> np.ndarray:
    """log Tr exp(2a Jz) = log[sinh((2j+1)a) / sinh(a)]; j = 0 gives 0."""
    a = np.asarray(a, dtype=float)
    if j == 0:
        return np.zeros_like(a)
    safe = np.where(a > 0, a, 1.0)
    val = _log_sinh((2 * j + 1) * safe) - _log_sinh(safe)
    return np.where(a > 0, val, np.log(2 * j + 1))


@dataclass(frozen=True)
class TraceIdentity:
    lhs: float
    rhs: float
    truncation: float  # integrand mass in the outer tenth of the grid, relative to lhs

    @property
    def rel_error(self) -> float:
        return abs(self.lhs / self.rhs - 1)


def trace_identity(P: RadialDistribution, j: float, gamma: float, t: float,
                   enforce_guard: bool = True) -> TraceIdentity:
    """Compare int P Tr exp(2a Jz) da with (2j+1) exp(2 gamma t j(j+1))."""
    if enforce_guard and (gamma * t > 1 or j > 2):
        raise ValueError("the integrand is tail-dominated; need gamma*t <= 1 and j <= 2")
    if abs(P.time - t) > 1e-9 * max(1.0, t):
        raise ValueError(f"distribution is at t = {P.time}, not {t}")
    a = P.grid.centers
    with np.errstate(divide="ignore"):
        log_w = np.log(P.values) + log_trace_exp(a, j) + np.log(P.grid.h)
    lhs = float(np.exp(scipy.special.logsumexp(log_w)))
    rhs = float((2 * j + 1) * np.exp(2 * gamma * t * j * (j + 1)))
    outer = a > 0.9 * P.grid.a_max
    tail = float(np.exp(scipy.special.logsumexp(log_w[outer]))) if outer.any() else 0.0
    res = TraceIdentity(lhs, rhs, tail / lhs)
    if res.truncation > 0.1:
        raise RuntimeError(
            f"outer tenth of the grid carries {res.truncation:.1%} of the integral; widen a_max"
        )
    return res


def trace_identity_check(P: RadialDistribution, rep: SpinRep, gamma: float, t: float) -> float:
    return trace_identity(P, rep.j, gamma, t).rel_error


def distribution_rows(P: RadialDistribution) -> list[list[float]]:
    return [[float(a), float(p)] for a, p in zip(P.grid.centers, P.values)]
