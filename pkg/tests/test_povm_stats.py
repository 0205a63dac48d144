import numpy as np
import pytest

from isomeasure.algebra import build_spin_rep
from isomeasure.cartan import cartan_invariants
from isomeasure.fokker_planck import (RadialGrid, erfc_bound, exact_radial_law, fp_solve,
                                      warm_start)
from isomeasure.povm_stats import (PATH_COLUMNS, EnsembleStats, completeness_check, freeze_out,
                                   histogram_vs_fp, isotropy_check, isotropy_negative_control,
                                   path_rows, purity_tail_empirical, rebin_width, run_ensemble,
                                   sphere_uniformity, uv_decorrelation)
from isomeasure.trajectory import SimConfig, integrate_kraus, sample_wiener_path


@pytest.fixture(scope="module")
def small():
    cfg = SimConfig(gamma=1.0, dt=2e-3, T=0.5, seed=99, checkpoint_times=(0.0, 0.25))
    return run_ensemble(cfg, 300, batch_paths=128)


@pytest.fixture(scope="module")
def iso():
    cfg = SimConfig(gamma=1.0, dt=2e-3, T=3.0, seed=5, checkpoint_times=(1.0,))
    return run_ensemble(cfg, 4000)


def test_single_path_matches_integrate_kraus():
    cfg = SimConfig(gamma=1.3, dt=1e-3, T=0.7, seed=21, checkpoint_times=(0.3,))
    stats = run_ensemble(cfg, 1)
    Ks = integrate_kraus(sample_wiener_path(cfg, 0), cfg.gamma, checkpoints=(0.3,))
    a, nu, nv = cartan_invariants(np.stack(Ks))
    assert np.array_equal(stats.a[:, 0], a)
    assert np.array_equal(stats.n_u[:, 0], nu)
    assert np.array_equal(stats.n_v[:, 0], nv)


def test_paths_regenerate_from_index(small):
    cfg = small.config
    i = 173
    K = integrate_kraus(sample_wiener_path(cfg, i), cfg.gamma)[-1]
    a, _, _ = cartan_invariants(K[None])
    assert small.a[-1, i] == a[0]


def test_batching_and_workers_do_not_change_results(small):
    other = run_ensemble(small.config, 300, batch_paths=50)
    assert np.array_equal(other.a, small.a)
    pooled = run_ensemble(small.config, 300, workers=2, batch_paths=100)
    assert np.array_equal(pooled.a, small.a)
    assert np.array_equal(pooled.n_v, small.n_v)
    assert np.array_equal(pooled.early_dw, small.early_dw)


def test_reruns_are_identical(small):
    again = run_ensemble(small.config, 300, batch_paths=128)
    assert np.array_equal(again.n_u, small.n_u)


def test_ensemble_errors():
    cfg = SimConfig(gamma=1.0, dt=1e-3, T=1.0)
    with pytest.raises(ValueError):
        run_ensemble(cfg, 0)
    with pytest.raises(MemoryError):
        run_ensemble(cfg, 10**8)


def test_checkpoints_and_moments(small):
    assert small.times == (0.0, 0.25, 0.5)
    assert np.all(small.a[0] == 0)
    m, v = small.moments(0.5)
    assert m > 0 and v > 0
    with pytest.raises(KeyError):
        small.index_of(0.3)


def test_histogram_mass(small):
    p, edges = small.histogram(0.5, 0.05)
    assert p.sum() == pytest.approx(1.0)
    assert edges[0] == 0.0


def test_summary_shape(small):
    s = small.summary()
    assert s["n_paths"] == 300 and s["master_seed"] == 99
    assert [c["t"] for c in s["checkpoints"]] == [0.0, 0.25, 0.5]


def test_completeness_at_zero(small):
    r = completeness_check(small, build_spin_rep(0.5), 1.0, 0.0)
    assert r.deviation == 0.0 and not r.inconclusive


@pytest.mark.parametrize("j", [0.5, 1.0])
def test_completeness_small_ensemble(j):
    cfg = SimConfig(gamma=1.0, dt=1e-3, T=0.5, seed=3)
    stats = run_ensemble(cfg, 10_000)
    r = completeness_check(stats, build_spin_rep(j), 1.0, 0.5)
    assert not r.inconclusive
    assert r.deviation <= max(0.05, 5 * r.jackknife_rel_std)


def test_completeness_guard(small):
    with pytest.raises(ValueError):
        completeness_check(small, build_spin_rep(1.5), 1.0, 0.5)
    r = completeness_check(small, build_spin_rep(1.5), 1.0, 0.5, allow_heavy_tail=True)
    assert r.eigenvalues.shape == (4,)


def test_inconclusive_flag():
    cfg = SimConfig(gamma=1.0, dt=2e-3, T=2.0, seed=8)
    stats = run_ensemble(cfg, 200)
    r = completeness_check(stats, build_spin_rep(2.0), 1.0, 2.0, allow_heavy_tail=True)
    assert r.inconclusive


def test_uniform_directions_pass():
    rng = np.random.default_rng(0)
    n = rng.standard_normal((20_000, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    r = sphere_uniformity(n)
    assert r.passed
    assert np.all(np.abs(r.eigenvalues - 1 / 3) <= 0.02)


def test_biased_directions_fail():
    rng = np.random.default_rng(0)
    n = rng.standard_normal((20_000, 3)) + [0.1, 0, 0]
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    assert not sphere_uniformity(n).first_moment_ok
    squashed = rng.standard_normal((20_000, 3)) * [1, 1, 0.8]
    squashed /= np.linalg.norm(squashed, axis=1, keepdims=True)
    assert not sphere_uniformity(squashed).second_moment_ok


def test_isotropy_of_ensemble(iso):
    for t in (1.0, 3.0):
        assert isotropy_check(iso, t, "u").passed
        assert isotropy_check(iso, t, "v").passed
    assert isotropy_check(iso, 3.0).mean_norm <= 4 / np.sqrt(4000)


def test_isotropy_negative_control(iso):
    r = isotropy_negative_control(iso, 3.0)
    assert not r.first_moment_ok
    assert r.n < iso.n_paths


def test_rebin_width():
    assert rebin_width(0.01, 0.001) == 0.01
    assert rebin_width(0.01, 1.0) == pytest.approx(0.25)


def fake_stats(sample, t):
    n = len(sample)
    cfg = SimConfig(gamma=1.0, dt=1e-3, T=t)
    z = np.zeros((1, n, 3))
    return EnsembleStats(cfg, n, (t,), sample[None], z, z, np.zeros((n, 3)))


def test_histogram_vs_fp_self_consistency():
    grid = RadialGrid.for_time(2.0)
    P = exact_radial_law(1.0, 2.0, grid)
    rng = np.random.default_rng(1)
    n = 200_000
    cells = rng.choice(grid.n_cells, size=n, p=P.cell_masses() / P.cell_masses().sum())
    sample = grid.edges[cells] + grid.h * rng.random(n)
    d = histogram_vs_fp(fake_stats(sample, 2.0), P)
    n_bins = grid.a_max / rebin_width(grid.h, sample.std())
    assert d <= 2 * np.sqrt(n_bins / n)


def test_histogram_overflow_counts():
    grid = RadialGrid(a_max=1.0, n_cells=100)
    P = warm_start(1.0, 0.02, grid)
    d = histogram_vs_fp(fake_stats(np.full(1000, 5.0), 0.02), P)
    assert d == pytest.approx(2.0)


def test_histogram_time_mismatch(small):
    P = warm_start(1.0, 0.02, RadialGrid(2.0, 200))
    with pytest.raises(ValueError):
        histogram_vs_fp(small, P, 0.5)


def test_histogram_at_small_time():
    cfg = SimConfig(gamma=1.0, dt=1e-3, T=0.02, seed=17)
    stats = run_ensemble(cfg, 50_000)
    P = warm_start(1.0, 0.02, RadialGrid(a_max=3.0, n_cells=300))
    assert histogram_vs_fp(stats, P) <= 0.05


def test_ensemble_matches_fp_at_moderate_time():
    cfg = SimConfig(gamma=1.0, dt=2e-3, T=1.0, seed=23)
    stats = run_ensemble(cfg, 20_000)
    grid = RadialGrid.for_time(1.0)
    P = fp_solve(warm_start(1.0, 0.02, grid), 1.0, 1.0, 2e-3)
    assert histogram_vs_fp(stats, P) <= 0.05


@pytest.mark.xfail(strict=True, reason="true mean is gammaT + 1, not gammaT + ln 2")
def test_ensemble_mean_is_gammaT_plus_ln2():
    cfg = SimConfig(gamma=1.0, dt=2e-3, T=6.0, seed=31)
    m, v = run_ensemble(cfg, 3000).moments(6.0)
    assert m == pytest.approx(6 + np.log(2), abs=0.1)
    assert v == pytest.approx(6.0, rel=0.15)


def test_decorrelation_diagonal(small):
    d = uv_decorrelation(small)
    assert np.allclose(np.diag(d.corr_u), 1.0)
    assert np.allclose(np.diag(d.corr_v), 1.0)
    assert np.allclose(d.corr_u, d.corr_u.T)


def test_decorrelation_needs_two_checkpoints():
    stats = run_ensemble(SimConfig(gamma=1.0, dt=1e-3, T=0.1), 5)
    with pytest.raises(ValueError):
        uv_decorrelation(stats)


def test_u_freezes_while_v_wanders():
    cfg = SimConfig(gamma=1.0, dt=2e-3, T=6.0, seed=41, checkpoint_times=(3.0,))
    stats = run_ensemble(cfg, 1000)
    du, dv = freeze_out(stats, 3.0, 6.0)
    assert du <= 0.3
    assert dv >= 5 * du


def test_purity_tail(iso):
    emp, bound = purity_tail_empirical(iso, 3.0)
    assert bound == pytest.approx(erfc_bound(3.0, np.exp(-3.0)).final_bound)
    assert emp <= bound


def test_purity_tail_at_zero(small):
    emp, bound = purity_tail_empirical(small, 0.0)
    assert emp == 0.0 and bound == float("inf")


def test_path_rows(small):
    rows = path_rows(small)
    assert len(rows) == 3 * 300
    assert len(rows[0]) == len(PATH_COLUMNS)
    assert rows[-1][1] == 299 and rows[-1][2] == small.a[-1, -1]
