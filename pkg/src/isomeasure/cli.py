"""Command-line front end.

    isomeasure <command> [--gamma G] [--dt DT] [--T T] [--seed S] [--paths N]
               [--j J[,J...]] [--out DIR] [--workers W] [--config FILE]
               [--tolerance NAME=VALUE ...]

Commands: trajectory, ensemble, fp, verify, geometry, viz, tomography.
Config files hold one key=value per line with # comments; flags win over the file.
Exit codes: 0 pass, 1 failure, 2 inconclusive only, 3 usage error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import acceptance, coherent, fokker_planck as fp, geometry, io
from .algebra import build_spin_rep
from .cartan import cartan_invariants
from .povm_stats import (PATH_COLUMNS, completeness_check, isotropy_check, path_rows,
                         rebin_width, run_ensemble)
from .trajectory import (KRAUS_COLUMNS, SimConfig, integrate_kraus, kraus_checkpoint_rows,
                         sample_wiener_path)

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 3
COMMANDS = ("trajectory", "ensemble", "fp", "verify", "geometry", "viz", "tomography")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    gamma: float = 1.0
    dt: float = 1e-3
    T: float = 1.0
    seed: int = 0
    n_paths: int = 1000
    j: tuple[float, ...] = ()
    checkpoints: tuple[float, ...] = ()
    out: str = "out"
    workers: int | None = 1
    tolerances: dict = field(default_factory=dict)
    every: int = 1
    h: float = 0.01
    a_values: tuple[float, ...] = (0.0, 1.3169578969248166, 2.0634370688955608, 4.0)
    bloch: tuple[tuple[float, float, float], ...] = ((0.0, 0.0, 1.0), (1.0, 0.0, 0.0), (0.0, 0.0, 1.0))
    strings: tuple[tuple[int, ...], ...] = ()
    only: tuple[int, ...] = ()
    scale: float = 1.0
    raw: bool = False

    def sim(self) -> SimConfig:
        return SimConfig(gamma=self.gamma, dt=self.dt, T=self.T, seed=self.seed,
                         checkpoint_times=self.checkpoints)


# ---- parsing ---------------------------------------------------------------

def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(Fraction(x.strip())) for x in text.replace(";", ",").split(",") if x.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(";", ",").split(",") if x.strip())


def _vectors(text: str) -> tuple[tuple[float, ...], ...]:
    out = []
    for chunk in text.split(";"):
        v = _floats(chunk)
        if len(v) != 3:
            raise UsageError(f"Bloch vector needs three components: {chunk!r}")
        out.append(v)
    return tuple(out)


def _strings(text: str) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(c) for c in s.strip()) for s in text.split(",") if s.strip())


def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def _workers(text: str):
    v = int(text)
    return None if v <= 0 else v


PARSERS = {
    "gamma": float, "dt": float, "T": float, "seed": int, "n_paths": int, "j": _floats,
    "checkpoints": _floats, "out": str, "workers": _workers, "every": int, "h": float,
    "a_values": _floats, "bloch": _vectors, "strings": _strings, "only": _ints,
    "scale": float, "raw": _bool,
}
ALIASES = {"paths": "n_paths", "a-values": "a_values", "a": "a_values"}


def _tolerance(text: str) -> tuple[str, float]:
    if "=" not in text:
        raise UsageError(f"tolerance must be NAME=VALUE, got {text!r}")
    k, v = text.split("=", 1)
    k = k.strip()
    if k not in acceptance.TOLERANCES:
        raise UsageError(f"unknown tolerance {k!r}")
    return k, float(v)


def read_config_file(path) -> dict:
    """key=value lines; '#' starts a comment; 'tolerance.NAME = x' sets a tolerance."""
    values: dict = {"tolerances": {}}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key.startswith("tolerance.") or key == "tolerance":
            name, v = _tolerance(val if key == "tolerance" else f"{key[10:]}={val}")
            values["tolerances"][name] = v
            continue
        key = ALIASES.get(key, key)
        if key not in PARSERS:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        try:
            values[key] = PARSERS[key](val)
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"{path}:{n}: bad value for {key}: {exc}") from exc
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isomeasure", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--gamma", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--paths", dest="n_paths", type=int)
    p.add_argument("--j", type=str, help="comma list, fractions allowed (1/2,1,3/2)")
    p.add_argument("--checkpoints", type=str, help="comma list of times")
    p.add_argument("--out", type=str)
    p.add_argument("--workers", type=str, help="worker processes; 0 means all CPUs")
    p.add_argument("--tolerance", action="append", default=[], metavar="NAME=VALUE")
    p.add_argument("--every", type=int, help="trajectory: keep every k-th step")
    p.add_argument("--h", type=float, help="fp: radial cell width")
    p.add_argument("--a-values", dest="a_values", type=str, help="viz: comma list of a")
    p.add_argument("--bloch", type=str, help="tomography: 'x,y,z;x,y,z;...'")
    p.add_argument("--strings", type=str, help="tomography: Pauli strings like 310,022")
    p.add_argument("--only", type=str, help="verify: comma list of criteria")
    p.add_argument("--scale", type=float, help="verify: multiply every path count")
    p.add_argument("--raw", action="store_true", default=None, help="ensemble: per-path CSV")
    return p


def parse_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    values = read_config_file(ns.config) if ns.config else {"tolerances": {}}
    tol = dict(values.pop("tolerances"))
    try:
        for f in fields(RunConfig):
            raw = getattr(ns, f.name, None)
            if f.name in ("command", "tolerances") or raw is None:
                continue
            values[f.name] = PARSERS[f.name](raw) if isinstance(raw, str) and f.name != "out" else raw
        for t in ns.tolerance:
            k, v = _tolerance(t)
            tol[k] = v
        cfg = RunConfig(command=ns.command, tolerances=tol, **values)
        if cfg.command not in ("geometry", "viz", "tomography", "verify"):
            cfg.sim()
    except UsageError:
        raise
    except (ValueError, OverflowError, TypeError, ZeroDivisionError) as exc:
        raise UsageError(str(exc)) from exc
    return cfg


# ---- commands --------------------------------------------------------------

class _Outputs:
    """Tracks written files so a failed command leaves nothing half-written."""

    def __init__(self, cfg: RunConfig):
        self.dir = Path(cfg.out)
        self.cfg = asdict(cfg)
        self.files: list[Path] = []

    def csv(self, name, columns, rows):
        self.files.append(io.write_csv(self.dir / name, columns, rows, self.cfg))
        return self.files[-1]

    def json(self, name, payload):
        self.files.append(io.write_json(self.dir / name, payload, self.cfg))
        return self.files[-1]

    def discard(self):
        for f in self.files:
            f.unlink(missing_ok=True)


def cmd_trajectory(cfg: RunConfig, out: _Outputs) -> int:
    sim = cfg.sim()
    path = sample_wiener_path(sim)
    every = max(1, cfg.every)
    steps = list(range(every, sim.n_steps + 1, every))
    times = [s * sim.dt for s in steps]
    Ks = integrate_kraus(path, sim.gamma, checkpoints=times)[:-1] if steps else []
    rows = kraus_checkpoint_rows(times, Ks)
    if Ks:
        a, nu, nv = cartan_invariants(np.array(Ks))
        for r, s, ak, u, v in zip(rows, steps, a, nu, nv):
            r[1:1] = list(map(float, path.increments[s - 1]))
            r.extend([float(ak), *map(float, u), *map(float, v)])
    cols = (["t", "dW_z", "dW_x", "dW_y"] + KRAUS_COLUMNS[1:]
            + ["a", "nu_z", "nu_x", "nu_y", "nv_z", "nv_x", "nv_y"])
    out.csv("trajectory.csv", cols, rows)
    return EXIT_PASS


def cmd_ensemble(cfg: RunConfig, out: _Outputs) -> int:
    stats = run_ensemble(cfg.sim(), cfg.n_paths, workers=cfg.workers)
    summary = stats.summary()
    for cp in summary["checkpoints"]:
        a = stats.a[stats.index_of(cp["t"])]
        width = rebin_width(cfg.h, float(a.std()) if len(a) > 1 else cfg.h)
        masses, edges = stats.histogram(cp["t"], width)
        cp["histogram"] = {"edges": edges, "mass": masses}
        if cp["t"] > 0:
            cp["exact_law_mean"], cp["exact_law_var"] = fp.exact_moments(cfg.gamma, cp["t"])
    for j in cfg.j:
        rep = build_spin_rep(j)
        for cp in summary["checkpoints"]:
            t = cp["t"]
            if 0 < cfg.gamma * t <= 0.5 * max(1.0, 1.0 / j) and j <= 1:
                r = completeness_check(stats, rep, cfg.gamma, t)
                cp.setdefault("completeness", []).append(
                    {"j": j, "deviation": r.deviation, "jackknife_rel_std": r.jackknife_rel_std,
                     "inconclusive": r.inconclusive})
    iso = isotropy_check(stats, cfg.T)
    summary["isotropy_at_T"] = {
        "mean_norm": iso.mean_norm, "mean_threshold": iso.mean_threshold,
        "max_diag_z": iso.max_diag_z, "max_off_z": iso.max_off_z, "z_threshold": 5.0,
        "verdict": "pass" if iso.passed else "fail",
    }
    out.json("ensemble_summary.json", summary)
    if cfg.raw:
        out.csv("ensemble_paths.csv", PATH_COLUMNS, path_rows(stats))
    return EXIT_PASS


def cmd_fp(cfg: RunConfig, out: _Outputs) -> int:
    gT = cfg.gamma * cfg.T
    if cfg.T <= 0.02 / cfg.gamma:
        raise UsageError("fp needs gamma*T above the warm-start time 0.02")
    t0 = 0.02 / cfg.gamma
    grid = fp.RadialGrid.for_time(gT, cfg.h)
    dt = min(cfg.dt, 0.5 * cfg.h / cfg.gamma)
    P = fp.fp_solve(fp.warm_start(cfg.gamma, t0, grid), cfg.gamma, cfg.T, dt)
    exact = fp.exact_radial_law(cfg.gamma, P.time, grid)
    summary = {"time": P.time, "mass": P.mass(), "mass_error": abs(P.mass() - 1),
               "max_mass_error": P.info["max_mass_error"], "mean": P.mean(), "var": P.var(),
               "l1_vs_exact_law": fp.l1_distance(P, exact)}
    if gT > 0.5:
        eps = float(np.exp(-gT))
        summary["collapse"] = {"tail": fp.tail_probability(P, eps),
                               "bound": fp.erfc_bound(gT, eps).final_bound}
    out.csv("fp.csv", ["a", "P"], fp.distribution_rows(P))
    out.json("fp_summary.json", summary)
    return EXIT_PASS


def cmd_verify(cfg: RunConfig, out: _Outputs) -> int:
    # --seed shifts the fixed acceptance seed, so seed 0 reproduces the reference run
    acfg = acceptance.AcceptanceConfig(seed=acceptance.AcceptanceConfig.seed + cfg.seed,
                                       workers=cfg.workers, path_scale=cfg.scale,
                                       tolerances=cfg.tolerances)
    only = cfg.only or None
    for n in only or ():
        if n not in acceptance.CHECKS:
            raise UsageError(f"no criterion {n}")
    verdicts = acceptance.run_all(acfg, only=only, echo=print)
    code = acceptance.exit_code(verdicts)
    out.json("verdicts.json", {
        "acceptance_seed": acfg.seed, "path_scale": acfg.path_scale,
        "verdicts": [asdict(v) for v in verdicts],
        "overall": {0: "pass", 1: "fail", 2: "inconclusive"}[code],
    })
    return code


def cmd_geometry(cfg: RunConfig, out: _Outputs) -> int:
    upto = max(cfg.j) if cfg.j else 5.0
    res = acceptance.identity_residuals(upto)
    fm = geometry.frame_matrices(1.0)
    out.json("geometry.json", {"j_max": upto, "residuals": res, "tolerance": 1e-10,
                               "metric_signature": geometry.METRIC_SIGNATURE,
                               "frame_matrices_a1": asdict(fm)})
    for k, v in res.items():
        print(f"{k:22s} {v:.3e}")
    return EXIT_PASS if max(res.values()) <= 1e-10 else EXIT_FAIL


def cmd_viz(cfg: RunConfig, out: _Outputs) -> int:
    rows = geometry.sl2r_viz_export(cfg.a_values)
    out.csv("sl2r_viz.csv", geometry.VIZ_COLUMNS, rows)
    return EXIT_PASS


def cmd_tomography(cfg: RunConfig, out: _Outputs) -> int:
    bloch = np.array(cfg.bloch, dtype=float)
    try:
        samples = coherent.sample_product_q(bloch, cfg.n_paths, cfg.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    strings = cfg.strings or tuple(s for s in np.ndindex(*(4,) * len(bloch)) if any(s))
    results = []
    for s in strings:
        if len(s) != len(bloch):
            raise UsageError(f"string {s} does not match {len(bloch)} qubits")
        est, se = coherent.estimate_k_local(samples, s)
        results.append({"string": "".join(map(str, s)), "estimate": est, "std_error": se,
                        "n": cfg.n_paths, "exact": coherent.product_expectation(bloch, s)})
    out.json("tomography.json", {"estimates": results})
    if cfg.raw:
        out.csv("tomography_samples.csv", coherent.SAMPLE_COLUMNS, coherent.sample_rows(samples))
    return EXIT_PASS


HANDLERS = {"trajectory": cmd_trajectory, "ensemble": cmd_ensemble, "fp": cmd_fp,
            "verify": cmd_verify, "geometry": cmd_geometry, "viz": cmd_viz,
            "tomography": cmd_tomography}


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"isomeasure: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse
        return EXIT_PASS if exc.code == 0 else EXIT_USAGE
    out = _Outputs(cfg)
    try:
        return HANDLERS[cfg.command](cfg, out)
    except UsageError as exc:
        out.discard()
        print(f"isomeasure {cfg.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OverflowError, MemoryError) as exc:
        out.discard()
        print(f"isomeasure {cfg.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BaseException:
        out.discard()
        raise


if __name__ == "__main__":
    sys.exit(main())
