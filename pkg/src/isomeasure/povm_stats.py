"""Kraus-trajectory ensembles and the statistical checks run on them.

An ensemble stores, for each checkpoint, the gauge invariants of every path:
the radial coordinate a, the POVM direction n_U and the V-direction n_V, all
directions in (z, x, y) order.  Path i is driven by child i of SeedSequence(master_seed),
so any single path can be regenerated on its own.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .algebra import SpinRep
from .cartan import cartan_invariants, lifted_povm_batch
from .fokker_planck import RadialDistribution, erfc_bound
from .trajectory import SimConfig, kraus_sweep, path_rng

MAX_PATH_STEPS = 5 * 10**10
BATCH_PATHS = 2048
BLOCK_STEPS = 1000
EARLY_WINDOW = 0.1  # in units of 1/gamma
INCONCLUSIVE_REL_STD = 0.10
JACKKNIFE_GROUPS = 100


@dataclass(frozen=True)
class EnsembleStats:
    config: SimConfig
    n_paths: int
    times: tuple[float, ...]
    a: np.ndarray = field(repr=False)    # (n_times, n_paths)
    n_u: np.ndarray = field(repr=False)  # (n_times, n_paths, 3)
    n_v: np.ndarray = field(repr=False)
    early_dw: np.ndarray = field(repr=False)  # (n_paths, 3) Wiener increment over the early window
    early_window: float = EARLY_WINDOW

    @property
    def master_seed(self) -> int:
        return self.config.seed

    def index_of(self, t: float) -> int:
        for k, s in enumerate(self.times):
            if abs(s - t) <= 1e-9 * max(1.0, abs(t)):
                return k
        raise KeyError(f"no checkpoint at t = {t}; have {self.times}")

    def moments(self, t: float) -> tuple[float, float]:
        a = self.a[self.index_of(t)]
        return float(a.mean()), float(a.var(ddof=1)) if len(a) > 1 else 0.0

    def histogram(self, t: float, width: float, a_max: float | None = None):
        """Normalized bin masses of a(t) on [0, a_max) with the given bin width."""
        a = self.a[self.index_of(t)]
        top = a_max if a_max is not None else a.max() + width
        edges = np.arange(0.0, top + width, width)
        counts, edges = np.histogram(a, bins=edges)
        return counts / len(a), edges

    def summary(self) -> dict:
        out = []
        for k, t in enumerate(self.times):
            a = self.a[k]
            out.append({"t": t, "mean_a": float(a.mean()), "var_a": float(a.var(ddof=1)) if len(a) > 1 else 0.0,
                        "min_a": float(a.min()), "max_a": float(a.max())})
        return {"n_paths": self.n_paths, "master_seed": self.master_seed, "checkpoints": out}


def _checkpoint_times(config: SimConfig) -> tuple[float, ...]:
    return tuple(sorted(set(config.checkpoint_times) | {config.T}))


def _run_batch(config: SimConfig, start: int, stop: int, times: tuple[float, ...]):
    n = stop - start
    steps = [int(round(t / config.dt)) for t in times]
    early = max(1, int(round(EARLY_WINDOW / (config.gamma * config.dt))))
    rngs = [path_rng(config.seed, i) for i in range(start, stop)]
    K = np.tile(np.eye(2, dtype=complex), (n, 1, 1))
    snaps: dict[int, np.ndarray] = {}
    early_dw = np.zeros((n, 3))
    if 0 in steps:
        snaps[0] = K.copy()
    done, total = 0, config.n_steps
    sq = np.sqrt(config.dt)
    while done < total:
        m = min(BLOCK_STEPS, total - done)
        dW = np.stack([r.standard_normal((m, 3)) for r in rngs]) * sq
        if done < early:
            early_dw += dW[:, : early - done].sum(axis=1)
        local = [s - done for s in steps if done < s <= done + m]
        K, saved = kraus_sweep(K, dW, config.gamma, offset=done, snapshots=local)
        for s, v in saved.items():
            snaps[s + done] = v
        done += m
    a = np.empty((len(times), n))
    nu = np.empty((len(times), n, 3))
    nv = np.empty((len(times), n, 3))
    for k, s in enumerate(steps):
        a[k], nu[k], nv[k] = cartan_invariants(snaps[s])
    return a, nu, nv, early_dw


def run_ensemble(config: SimConfig, n_paths: int, workers: int | None = 1,
                 batch_paths: int = BATCH_PATHS) -> EnsembleStats:
    """Integrate n_paths Kraus trajectories from K = I and record invariants.

    Checkpoints are config.checkpoint_times plus T.  Results do not depend on
    ``workers`` or ``batch_paths``.  ``workers=None`` uses every available CPU.
    """
    if n_paths < 1:
        raise ValueError("need at least one path")
    if n_paths * max(config.n_steps, 1) > MAX_PATH_STEPS:
        raise MemoryError(f"{n_paths} paths x {config.n_steps} steps exceeds {MAX_PATH_STEPS:.0e}")
    times = _checkpoint_times(config)
    bounds = [(s, min(s + batch_paths, n_paths)) for s in range(0, n_paths, batch_paths)]
    workers = workers or os.cpu_count() or 1
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_batch, [config] * len(bounds), *zip(*bounds),
                                  [times] * len(bounds)))
    else:
        parts = [_run_batch(config, s, e, times) for s, e in bounds]
    return EnsembleStats(
        config=config, n_paths=n_paths, times=times,
        a=np.concatenate([p[0] for p in parts], axis=1),
        n_u=np.concatenate([p[1] for p in parts], axis=1),
        n_v=np.concatenate([p[2] for p in parts], axis=1),
        early_dw=np.concatenate([p[3] for p in parts], axis=0),
    )


@dataclass(frozen=True)
class CompletenessResult:
    j: float
    t: float
    deviation: float            # max |eigenvalue - 1|
    eigenvalues: np.ndarray
    jackknife_rel_std: float
    inconclusive: bool


def _jackknife_std(values: np.ndarray, stat, groups: int = JACKKNIFE_GROUPS) -> float:
    """Delete-one-group jackknife standard error of stat(mean over paths)."""
    n = len(values)
    g = min(groups, n)
    if g < 2:
        return float("inf")
    chunks = np.array_split(np.arange(n), g)
    sums = np.stack([values[c].sum(axis=0) for c in chunks])
    total = sums.sum(axis=0)
    reps = np.array([stat((total - sums[k]) / (n - len(chunks[k]))) for k in range(g)])
    return float(np.sqrt((g - 1) / g * ((reps - reps.mean(axis=0)) ** 2).sum(axis=0)).max())


def completeness_check(stats: EnsembleStats, rep: SpinRep, gamma: float, t: float,
                       allow_heavy_tail: bool = False) -> CompletenessResult:
    """exp(-2 gamma t j(j+1)) times the path mean of lift(K)^dagger lift(K).

    The weights are lognormal-like, so the default regime is j <= 1 and
    gamma t <= 0.5 max(1, 1/j); beyond it pass ``allow_heavy_tail`` and more paths.
    A jackknife relative error above 10% marks the result inconclusive.
    """
    j = rep.j
    if not allow_heavy_tail and (j > 1 or gamma * t > 0.5 * max(1.0, 1.0 / j) + 1e-12):
        raise ValueError("outside the default heavy-tail regime; set allow_heavy_tail")
    k = stats.index_of(t)
    if t == 0:
        return CompletenessResult(j, t, 0.0, np.ones(rep.dim), 0.0, False)
    E = lifted_povm_batch(stats.a[k], stats.n_u[k], rep) * np.exp(-2 * gamma * t * j * (j + 1))
    ev = np.linalg.eigvalsh(E.mean(axis=0))
    rel = _jackknife_std(E, lambda M: np.linalg.eigvalsh(M)) / max(abs(ev).max(), 1e-300)
    return CompletenessResult(j=j, t=t, deviation=float(np.abs(ev - 1).max()), eigenvalues=ev,
                              jackknife_rel_std=rel, inconclusive=bool(rel > INCONCLUSIVE_REL_STD))


@dataclass(frozen=True)
class IsotropyReport:
    n: int
    mean_norm: float
    mean_threshold: float
    second_moment: np.ndarray
    max_diag_z: float   # max |M_kk - 1/3| / sigma_diag
    max_off_z: float    # max |M_kl| / sigma_off
    eigenvalues: np.ndarray

    @property
    def first_moment_ok(self) -> bool:
        return self.mean_norm <= self.mean_threshold

    @property
    def second_moment_ok(self) -> bool:
        return self.max_diag_z <= 5 and self.max_off_z <= 5

    @property
    def passed(self) -> bool:
        return self.first_moment_ok and self.second_moment_ok


def sphere_uniformity(n: np.ndarray) -> IsotropyReport:
    """Moment tests for uniformity on S^2: |mean| <= 4/sqrt(N) and M within 5 sigma of I/3.

    For a uniform direction Var(n_k^2) = 4/45 and Var(n_k n_l) = 1/15.
    """
    n = np.asarray(n, dtype=float)
    N = len(n)
    M = n.T @ n / N
    sd_diag = np.sqrt(4 / 45 / N)
    sd_off = np.sqrt(1 / 15 / N)
    off = M[~np.eye(3, dtype=bool)]
    return IsotropyReport(
        n=N, mean_norm=float(np.linalg.norm(n.mean(axis=0))), mean_threshold=4 / np.sqrt(N),
        second_moment=M, max_diag_z=float(np.abs(np.diag(M) - 1 / 3).max() / sd_diag),
        max_off_z=float(np.abs(off).max() / sd_off), eigenvalues=np.linalg.eigvalsh(M),
    )


def isotropy_check(stats: EnsembleStats, t: float, which: str = "u", mask=None) -> IsotropyReport:
    k = stats.index_of(t)
    n = {"u": stats.n_u, "v": stats.n_v}[which][k]
    return sphere_uniformity(n if mask is None else n[np.asarray(mask)])


def isotropy_negative_control(stats: EnsembleStats, t: float) -> IsotropyReport:
    """Uniformity test on the paths whose early z-increment was positive.

    The conditioning uses the Wiener increment over the first 0.1/gamma, which
    biases n_U towards +z; the first-moment test is expected to fail.
    """
    return isotropy_check(stats, t, "u", mask=stats.early_dw[:, 0] > 0)


def rebin_width(h: float, std: float) -> float:
    """Histogram bin: a whole number of FP cells, about a quarter standard deviation."""
    return h * max(1, int(round(std / (4 * h))))


def histogram_vs_fp(stats: EnsembleStats, fp: RadialDistribution, t: float | None = None) -> float:
    """L1 distance between the a-histogram and the FP cell masses on a common rebinned grid."""
    t = fp.time if t is None else t
    if abs(fp.time - t) > 1e-9 * max(1.0, t):
        raise ValueError(f"FP time {fp.time} does not match requested t = {t}")
    k = stats.index_of(t)
    a = stats.a[k]
    h = fp.grid.h
    if fp.grid.a_min != 0:
        raise ValueError("FP grid must start at a = 0")
    factor = int(round(rebin_width(h, float(a.std())) / h))
    cells = fp.cell_masses()
    n_bins = int(np.ceil(len(cells) / factor))
    fp_bins = np.add.reduceat(cells, np.arange(0, len(cells), factor))
    idx = np.minimum((a / (h * factor)).astype(int), n_bins)  # overflow bin past a_max
    emp = np.bincount(idx, minlength=n_bins + 1) / len(a)
    fp_bins = np.append(fp_bins, 0.0)
    return float(np.abs(emp - fp_bins).sum())


def _angles(n1: np.ndarray, n2: np.ndarray) -> np.ndarray:
    return np.arctan2(np.linalg.norm(np.cross(n1, n2), axis=-1), np.einsum("...k,...k", n1, n2))


@dataclass(frozen=True)
class Decorrelation:
    times: tuple[float, ...]
    corr_u: np.ndarray  # (n_times, n_times) of E[n_U(t) . n_U(t')]
    corr_v: np.ndarray

    def drift(self, stats: EnsembleStats, t1: float, t2: float) -> tuple[float, float]:
        """Mean angle (rad) moved by n_U and n_V between two checkpoints."""
        i, k = stats.index_of(t1), stats.index_of(t2)
        return (float(_angles(stats.n_u[i], stats.n_u[k]).mean()),
                float(_angles(stats.n_v[i], stats.n_v[k]).mean()))


def uv_decorrelation(stats: EnsembleStats) -> Decorrelation:
    if len(stats.times) < 2:
        raise ValueError("need at least two checkpoints")
    cu = np.einsum("ink,mnk->im", stats.n_u, stats.n_u) / stats.n_paths
    cv = np.einsum("ink,mnk->im", stats.n_v, stats.n_v) / stats.n_paths
    return Decorrelation(times=stats.times, corr_u=cu, corr_v=cv)


def freeze_out(stats: EnsembleStats, t1: float, t2: float) -> tuple[float, float]:
    """Mean angular drift of (n_U, n_V) between t1 and t2."""
    return uv_decorrelation(stats).drift(stats, t1, t2)


def purity_tail_empirical(stats: EnsembleStats, gammaT: float) -> tuple[float, float]:
    """Fraction of paths with a(T) < gamma T / 2, paired with the collapse bound."""
    T = gammaT / stats.config.gamma
    a = stats.a[stats.index_of(T)]
    emp = float(np.mean(a < gammaT / 2))
    if gammaT <= 0:
        return emp, float("inf")
    return emp, erfc_bound(gammaT, np.exp(-gammaT)).final_bound


def path_rows(stats: EnsembleStats) -> list[list[float]]:
    """Raw per-path CSV rows: t, path, a, n_u (z,x,y), n_v (z,x,y)."""
    rows = []
    for k, t in enumerate(stats.times):
        for i in range(stats.n_paths):
            rows.append([t, i, float(stats.a[k, i]), *map(float, stats.n_u[k, i]),
                         *map(float, stats.n_v[k, i])])
    return rows


PATH_COLUMNS = ["t", "path", "a", "nu_z", "nu_x", "nu_y", "nv_z", "nv_x", "nv_y"]
