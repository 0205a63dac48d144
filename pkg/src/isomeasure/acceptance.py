"""The eleven acceptance checks, shared by the test suite and ``isomeasure verify``.

Each check returns a Verdict with the measured numbers and the thresholds it
was held to.  Status is "pass", "fail" or "inconclusive"; the last is used
only when a heavy-tailed estimator is too noisy to decide.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import coherent, fokker_planck as fp, geometry
from .algebra import build_spin_rep, structure_residuals
from .coupled_sde import cross_validate_batch
from .povm_stats import (completeness_check, freeze_out, histogram_vs_fp,
                         purity_tail_empirical, run_ensemble)
from .trajectory import SimConfig, sample_wiener_path, single_observable_superop_check

# Default thresholds; any of them can be overridden by name.
TOLERANCES = {
    "c1_mean_lo": 6 + np.log(2) - 0.1,
    "c1_mean_hi": 6 + np.log(2) + 0.1,
    "c1_var_lo": 5.1,
    "c1_var_hi": 6.9,
    "c2_tail_8": 0.1038,
    "c2_tail_16": 0.0270,
    "c3_l1": 0.05,
    "c4_dev": 0.05,
    "c4_rel_std": 0.05,
    "c5_median_da": 0.05,
    "c5_median_angle": 0.05,
    "c5_ratio": np.sqrt(2),
    "c6_resolution": 1e-10,
    "c6_negative": 1e-3,
    "c7_residual": 1e-10,
    "c8_dev": 0.02,
    "c9_u_drift": 0.1,
    "c9_ratio": 10.0,
    "c10_sigmas": 4.0,
    "c11_rel": 0.05,
}

NAMES = {
    1: "ballistic mean and diffusive variance",
    2: "exponential collapse bound",
    3: "Fokker-Planck vs Kraus ensemble",
    4: "POVM completeness",
    5: "cross-integrator validation",
    6: "SCS POVM resolution",
    7: "algebra and geometry identities",
    8: "single-observable superoperator",
    9: "U freeze-out and V wander",
    10: "multiqubit tomography",
    11: "trace identity",
}


@dataclass(frozen=True)
class AcceptanceConfig:
    seed: int = 20240
    workers: int | None = 1
    path_scale: float = 1.0  # multiplies every path count; below 1 gives a quick smoke run
    tolerances: dict = field(default_factory=dict)

    def tol(self, name: str) -> float:
        if name not in TOLERANCES:
            raise KeyError(f"unknown tolerance {name}")
        return float(self.tolerances.get(name, TOLERANCES[name]))

    def paths(self, n: int) -> int:
        return max(10, int(round(n * self.path_scale)))


@dataclass
class Verdict:
    criterion: int
    name: str
    status: str
    measured: dict
    thresholds: dict
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def line(self) -> str:
        parts = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{self.status.upper():>12}] criterion {self.criterion:2d} ({self.name}): {parts}"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def _verdict(n: int, ok: bool, measured: dict, thresholds: dict, inconclusive: bool = False) -> Verdict:
    status = "inconclusive" if inconclusive else ("pass" if ok else "fail")
    return Verdict(n, NAMES[n], status, measured, thresholds)


def check_1(cfg: AcceptanceConfig) -> Verdict:
    c = SimConfig(gamma=1.0, dt=1e-3, T=6.0, seed=cfg.seed + 1)
    stats = run_ensemble(c, cfg.paths(20000), workers=cfg.workers)
    mean, var = stats.moments(6.0)
    lo, hi = cfg.tol("c1_mean_lo"), cfg.tol("c1_mean_hi")
    vlo, vhi = cfg.tol("c1_var_lo"), cfg.tol("c1_var_hi")
    exact_mean, exact_var = fp.exact_moments(1.0, 6.0)
    ok = lo <= mean <= hi and vlo <= var <= vhi
    return _verdict(1, ok, {"mean_a": mean, "var_a": var, "n_paths": stats.n_paths,
                            "exact_law_mean": exact_mean, "exact_law_var": exact_var},
                    {"mean": [lo, hi], "var": [vlo, vhi]})


def check_2(cfg: AcceptanceConfig) -> Verdict:
    c = SimConfig(gamma=1.0, dt=1e-3, T=16.0, seed=cfg.seed + 2, checkpoint_times=(8.0,))
    stats = run_ensemble(c, cfg.paths(100000), workers=cfg.workers)
    e8, b8 = purity_tail_empirical(stats, 8.0)
    e16, b16 = purity_tail_empirical(stats, 16.0)
    t8, t16 = cfg.tol("c2_tail_8"), cfg.tol("c2_tail_16")
    return _verdict(2, e8 <= t8 and e16 <= t16,
                    {"tail_8": e8, "tail_16": e16, "bound_8": b8, "bound_16": b16,
                     "n_paths": stats.n_paths},
                    {"tail_8": t8, "tail_16": t16})


def _fp_from_warm_start(gamma: float, t0: float, T: float, h: float = 0.01, dt: float = 2e-3):
    grid = fp.RadialGrid.for_time(gamma * T, h)
    P0 = fp.warm_start(gamma, t0, grid)
    return fp.fp_solve(P0, gamma, T, dt)


def check_3(cfg: AcceptanceConfig) -> Verdict:
    times = (0.02, 2.0, 5.0)
    c = SimConfig(gamma=1.0, dt=1e-3, T=5.0, seed=cfg.seed + 3, checkpoint_times=times)
    stats = run_ensemble(c, cfg.paths(50000), workers=cfg.workers)
    measured = {}
    grid = fp.RadialGrid.for_time(0.02)
    measured["l1_t0.02_chi3"] = histogram_vs_fp(stats, fp.warm_start(1.0, 0.02, grid))
    for t in times[1:]:
        measured[f"l1_t{t:g}"] = histogram_vs_fp(stats, _fp_from_warm_start(1.0, 0.02, t))
    tol = cfg.tol("c3_l1")
    ok = all(v <= tol for v in measured.values())
    measured["n_paths"] = stats.n_paths
    return _verdict(3, ok, measured, {"l1": tol})


def check_4(cfg: AcceptanceConfig) -> Verdict:
    c = SimConfig(gamma=1.0, dt=1e-3, T=0.5, seed=cfg.seed + 4)
    stats = run_ensemble(c, cfg.paths(100000), workers=cfg.workers)
    dev_tol, std_tol = cfg.tol("c4_dev"), cfg.tol("c4_rel_std")
    measured, ok, unsure = {}, True, False
    for j in (0.5, 1.0):
        r = completeness_check(stats, build_spin_rep(j), 1.0, 0.5)
        measured[f"dev_j{j:g}"] = r.deviation
        measured[f"rel_std_j{j:g}"] = r.jackknife_rel_std
        unsure |= r.inconclusive
        ok &= r.deviation <= dev_tol and r.jackknife_rel_std <= std_tol
    measured["n_paths"] = stats.n_paths
    return _verdict(4, ok, measured, {"deviation": dev_tol, "rel_std": std_tol},
                    inconclusive=unsure)


def check_5(cfg: AcceptanceConfig) -> Verdict:
    n = 100
    c = SimConfig(gamma=1.0, dt=1e-4, T=3.0, seed=cfg.seed + 5)
    dW = np.stack([sample_wiener_path(c, index=i).increments for i in range(n)])
    cv = cross_validate_batch(dW, c.dt, 0.3, c.gamma, scheme="milstein")
    euler = cross_validate_batch(dW, c.dt, 0.3, c.gamma, scheme="euler")
    tda, tang, tr = cfg.tol("c5_median_da"), cfg.tol("c5_median_angle"), cfg.tol("c5_ratio")
    ok = cv.median_da <= tda and cv.median_angle <= tang and cv.halving_ratio >= tr
    return _verdict(5, ok, {"median_da": cv.median_da, "median_angle": cv.median_angle,
                            "halving_ratio": cv.halving_ratio, "n_floored": cv.n_floored,
                            "euler_median_da": euler.median_da,
                            "euler_halving_ratio": euler.halving_ratio},
                    {"median_da": tda, "median_angle": tang, "halving_ratio": tr})


def _spins(upto: float = 5.0):
    return [Fraction(k, 2) for k in range(1, int(2 * upto) + 1)]


def check_6(cfg: AcceptanceConfig) -> Verdict:
    worst, weakest = 0.0, np.inf
    for j in _spins():
        rep = build_spin_rep(j)
        d = int(2 * j)
        worst = max(worst, coherent.scs_povm_resolution(rep, coherent.sphere_quadrature(d)))
        if d >= 2:
            weakest = min(weakest, coherent.scs_povm_resolution(rep, coherent.sphere_quadrature(d - 1)))
    tr, tn = cfg.tol("c6_resolution"), cfg.tol("c6_negative")
    return _verdict(6, worst <= tr and weakest > tn,
                    {"max_resolution_error": worst, "min_underresolved_error": weakest},
                    {"resolution": tr, "negative_control_min": tn})


def identity_residuals(upto: float = 5.0) -> dict[str, float]:
    """Worst residual of each algebra and geometry identity over j = 1/2 .. upto."""
    out: dict[str, float] = {}

    def keep(name, v):
        out[name] = max(out.get(name, 0.0), float(v))

    for j in _spins(upto):
        rep = build_spin_rep(j)
        for k, v in structure_residuals(rep).items():
            keep(k, v)
        for a in (0.0, 0.7, 1.3, 3.0):
            keep("euler_conjugation", geometry.euler_conjugation_check(a, rep))
        keep("killing_form", geometry.killing_form_check(rep))
        curv = geometry.curvature_components(rep)
        keep("curvature_routes", curv.route_residual)
        keep("curvature_factor_4", curv.factor_four_residual)
        keep("epsilon_identity", geometry.epsilon_identity_residual(rep))
    for a in (0.0, 0.5, 1.0, 2.0):
        fm = geometry.frame_matrices(a)
        keep("metric_closed_form", np.abs(fm.g - np.diag([1, np.sinh(a) ** 2, np.sinh(a) ** 2])).max())
    return out


def check_7(cfg: AcceptanceConfig) -> Verdict:
    res = identity_residuals()
    tol = cfg.tol("c7_residual")
    return _verdict(7, max(res.values()) <= tol, res, {"residual": tol})


def check_8(cfg: AcceptanceConfig) -> Verdict:
    rep = build_spin_rep(1)
    psi = coherent.scs_state(rep, coherent.SphereDirection(1.1, 0.4))
    rho = 0.7 * np.outer(psi, psi.conj()) + 0.3 * np.eye(3) / 3
    dev = single_observable_superop_check(rep, 1.0, 0.5, rho, cfg.paths(100000), seed=cfg.seed + 8)
    tol = cfg.tol("c8_dev")
    return _verdict(8, dev <= tol, {"max_deviation": dev}, {"max_deviation": tol})


def check_9(cfg: AcceptanceConfig) -> Verdict:
    c = SimConfig(gamma=1.0, dt=1e-3, T=8.0, seed=cfg.seed + 9, checkpoint_times=(4.0,))
    stats = run_ensemble(c, cfg.paths(10000), workers=cfg.workers)
    du, dv = freeze_out(stats, 4.0, 8.0)
    tu, tr = cfg.tol("c9_u_drift"), cfg.tol("c9_ratio")
    return _verdict(9, du <= tu and dv >= tr * du,
                    {"u_drift": du, "v_drift": dv, "ratio": dv / du if du > 0 else float("inf"),
                     "n_paths": stats.n_paths},
                    {"u_drift": tu, "ratio": tr})


TOMOGRAPHY_STATE = np.array([
    [0.0, 0.0, 1.0],
    [np.sin(1.0) * np.cos(0.3), np.sin(1.0) * np.sin(0.3), np.cos(1.0)],
    [np.sin(2.2) * np.cos(4.0), np.sin(2.2) * np.sin(4.0), np.cos(2.2)],
])


def check_10(cfg: AcceptanceConfig) -> Verdict:
    N = cfg.paths(100000)
    samples = coherent.sample_product_q(TOMOGRAPHY_STATE, N, seed=cfg.seed + 10)
    sig = cfg.tol("c10_sigmas")
    worst_z, worst_se_ratio, n_strings = 0.0, 0.0, 0
    for s in np.ndindex(4, 4, 4):
        k = sum(1 for m in s if m)
        if k == 0:
            continue
        est, se = coherent.estimate_k_local(samples, s)
        truth = coherent.product_expectation(TOMOGRAPHY_STATE, s)
        worst_z = max(worst_z, abs(est - truth) / se)
        worst_se_ratio = max(worst_se_ratio, se / (3**k / np.sqrt(N)))
        n_strings += 1
    return _verdict(10, worst_z <= sig and worst_se_ratio <= 1.0,
                    {"max_z": worst_z, "max_se_over_bound": worst_se_ratio, "n_strings": n_strings},
                    {"sigmas": sig, "se_over_bound": 1.0})


def check_11(cfg: AcceptanceConfig) -> Verdict:
    P = _fp_from_warm_start(1.0, 0.02, 0.5)
    rel = fp.trace_identity(P, 0.5, 1.0, 0.5).rel_error
    tol = cfg.tol("c11_rel")
    return _verdict(11, rel <= tol, {"rel_error": rel}, {"rel_error": tol})


CHECKS = {1: check_1, 2: check_2, 3: check_3, 4: check_4, 5: check_5, 6: check_6,
          7: check_7, 8: check_8, 9: check_9, 10: check_10, 11: check_11}


def run_check(n: int, cfg: AcceptanceConfig | None = None) -> Verdict:
    cfg = cfg or AcceptanceConfig()
    t0 = time.perf_counter()
    v = CHECKS[n](cfg)
    v.seconds = time.perf_counter() - t0
    return v


def run_all(cfg: AcceptanceConfig | None = None, only=None, echo=None) -> list[Verdict]:
    out = []
    for n in sorted(only or CHECKS):
        v = run_check(n, cfg)
        if echo:
            echo(v.line())
        out.append(v)
    return out


def exit_code(verdicts) -> int:
    """0 all pass, 1 any failure, 2 no failures but something inconclusive."""
    statuses = {v.status for v in verdicts}
    if "fail" in statuses:
        return 1
    if "inconclusive" in statuses:
        return 2
    return 0
