"""Configuration parsing, experiment orchestration and output persistence.

Configs are line-based ``key = value`` text.  Any key can be overridden from
the environment with the ``ZLAB_`` prefix (``ZLAB_DT=0.005`` overrides
``dt``).  Every run writes a ``manifest.json`` describing the config, grid,
tolerances, seeds, timing and a SHA-256 digest of every output file.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
import os
import time
import warnings
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from . import bilinear as bl
from . import diagnostics as dg
from . import estimates as es
from . import evolution as ev
from . import littlewood_paley as lp
from . import norms
from . import spectral as sp
from .errors import ConfigError, VerificationFailure, ZlabError

ENV_PREFIX = "ZLAB_"
DIGEST = "sha256"
SOLVER_KEYS = ("gamma", "n_r", "r_max", "dt", "T")
SUBCOMMANDS = ("simulate", "picard", "compare", "verify symbols", "verify lp",
               "verify estimates", "norms", "scatter")
DEFAULT_MODES = {"simulate": "physical", "picard": "paper", "compare": "paper",
                 "scatter": "physical"}

# resolution margin: data spectrum above rho_max / 2 and physical mass beyond
# r_max / 2 must be negligible
TAIL_TOL = 1e-10
# largest data size accepted by the normal-form solver
SMALLNESS_MAX = 0.1


@dataclass(frozen=True)
class SimConfig:
    """Every key a config file may set, with defaults for the optional ones."""

    gamma: float = 1.0
    n_r: int = 256
    r_max: float = 32.0
    dt: float = 0.01
    T: float = 1.0
    eps: float = 0.03
    mode: str = ""
    rho_data: float = 1e-2
    snapshot_every: int = 1
    picard_tol: float = 1e-8
    picard_max_iter: int = 50
    seed: int = 0
    n_a: int = 64
    nonlinear: bool = True
    u_width: float = 1.0
    n_width: float = 1.0
    n_weight: float = 1.0
    n1_weight: float = 0.0
    u_phase: float = 0.0
    symbol_samples: int = 10_000
    symbol_j_max: int = 10
    lp_pairs: int = 50
    ensemble_samples: int = 50
    ensemble_n_r: int = 128
    lemmas: str = "all"
    stability_tol: float = 0.2
    probe_samples: int = 24
    probe_b_hi: float = 2.0
    probe_b_hi_wide: float = 8.0
    norm_space: str = "sobolev"
    norm_s: float = 1.0
    norm_q: float = 2.0
    norm_time_p: float = math.inf
    norm_field: str = "u"
    input: str = ""

    def solver_config(self, subcommand: str = "simulate") -> ev.SolverConfig:
        mode = self.mode or DEFAULT_MODES.get(subcommand, "physical")
        return ev.SolverConfig(
            dt=self.dt, T=self.T, gamma=self.gamma, mode=mode,
            snapshot_every=self.snapshot_every, eps=self.eps, picard_tol=self.picard_tol,
            picard_max_iter=self.picard_max_iter, rho_data=self.rho_data,
            nonlinear=self.nonlinear, n_a=self.n_a)

    def grid(self) -> sp.RadialGrid:
        return sp.build_grid(self.n_r, self.r_max)

    def initial_data(self):
        return ev.gaussian_data(self.grid(), self.gamma, self.rho_data, u_width=self.u_width,
                                n_width=self.n_width, n_weight=self.n_weight,
                                n1_weight=self.n1_weight, u_phase=self.u_phase)


_TYPES = {f.name: f.type for f in fields(SimConfig)}


def _convert(key: str, raw: str):
    kind = _TYPES[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind}", key=key) from None
    return raw


def _read_pairs(text: str) -> dict:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'", key=None)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"unknown key {key!r}", key=key)
        if key in pairs:
            raise ConfigError(f"duplicate key {key!r}", key=key)
        pairs[key] = value
    return pairs


def _validate(cfg: SimConfig, subcommand: str | None) -> None:
    if not -1.0 <= cfg.gamma <= 1.0:
        raise ConfigError("gamma must lie in [-1, 1]", key="gamma")
    if cfg.n_r < 8:
        raise ConfigError("n_r must be at least 8", key="n_r")
    if not (cfg.r_max > 0 and math.isfinite(cfg.r_max)):
        raise ConfigError("r_max must be positive", key="r_max")
    if not cfg.eps > 0:
        raise ConfigError("eps must be positive", key="eps")
    if cfg.mode not in ("",) + ev.MODES:
        raise ConfigError(f"mode must be one of {ev.MODES}", key="mode")
    if cfg.norm_field not in ("u", "N"):
        raise ConfigError("norm_field must be 'u' or 'N'", key="norm_field")
    if not cfg.symbol_j_max >= 3:
        raise ConfigError("symbol_j_max must be >= 3", key="symbol_j_max")
    if cfg.lemmas != "all":
        for lemma in cfg.lemmas.split(","):
            if lemma.strip() not in es.REGISTRY:
                raise ConfigError(f"unknown lemma {lemma.strip()!r}", key="lemmas")
    try:
        norms.NormSpec(cfg.norm_space, cfg.norm_s, cfg.norm_q, cfg.norm_time_p)
    except ValueError as exc:
        raise ConfigError(str(exc), key="norm_space") from None
    if subcommand not in ("simulate", "picard", "compare", "scatter"):
        return
    solver = cfg.solver_config(subcommand)
    if solver.n_steps % solver.snapshot_every:
        raise ConfigError("T / dt must be a multiple of snapshot_every", key="snapshot_every")
    if subcommand == "scatter" and (solver.n_steps // solver.snapshot_every) % 4:
        raise ConfigError("scatter needs snapshots at T/4 and T/2: the number of snapshot "
                          "intervals must be a multiple of 4", key="snapshot_every")
    if subcommand in ("picard", "compare"):
        if solver.mode != "paper":
            raise ConfigError("the normal-form solver is paper mode only", key="mode")
        if not 0 < cfg.rho_data <= SMALLNESS_MAX:
            raise ConfigError(f"rho_data must lie in (0, {SMALLNESS_MAX}] for the normal-form "
                              "solver", key="rho_data")
    grid = cfg.grid()
    u0, N0 = cfg.initial_data()
    for name, f in (("u0", u0), ("N0", N0)):
        # domain truncation also leaks into the spectrum, so test it first
        mass = grid.r_weights * np.abs(f.physical().values) ** 2
        if mass.sum() > 0 and mass[grid.r > 0.5 * grid.r_max].sum() > TAIL_TOL * mass.sum():
            raise ConfigError(f"{name} is not localized inside r_max / 2: increase r_max",
                              key="r_max")
        if sp.spectral_tail_fraction(f, 0.5 * grid.rho_max) > TAIL_TOL:
            raise ConfigError(f"{name} is under-resolved: increase n_r", key="n_r")


def parse_config(text: str, subcommand: str | None = "simulate", env=None) -> SimConfig:
    """Parse ``key = value`` text, apply ``ZLAB_`` overrides and validate.

    ``subcommand`` selects the required keys and the checks that apply:
    solver subcommands need gamma, n_r, r_max, dt and T and check the
    initial data against the grid; ``None`` skips both.

    Raises
    ------
    ConfigError
        For empty input, unknown or duplicate keys, type mismatches and
        violated invariants; ``key`` names the offending key.
    """
    pairs = _read_pairs(text)
    if not pairs:
        raise ConfigError("empty config", key=None)
    env = os.environ if env is None else env
    for key in _TYPES:
        name = ENV_PREFIX + key.upper()
        if name in env:
            pairs[key] = env[name]
    if subcommand in ("simulate", "picard", "compare") or (subcommand == "scatter"
                                                           and not pairs.get("input")):
        missing = [k for k in SOLVER_KEYS if k not in pairs]
        if missing:
            raise ConfigError(f"missing required key {missing[0]!r}", key=missing[0])
    cfg = SimConfig(**{k: _convert(k, v) for k, v in pairs.items()})
    _validate(cfg, subcommand)
    return cfg


# --- persistence -----------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def file_digest(path: Path) -> str:
    h = hashlib.new(DIGEST)
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def save_trajectory(out: Path, traj: ev.Trajectory, gamma: float) -> None:
    """Snapshots as text, plus ``trajectory.npz`` for exact reloading."""
    snap_dir = out / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    for i in range(len(traj)):
        st = traj.state(i)
        sp.write_snapshot(snap_dir / f"snap_{i:05d}.txt", st.u, st.N, gamma=gamma, t=st.t)
    np.savez(out / "trajectory.npz", times=traj.times, u=traj.u, N=traj.N,
             n_r=traj.grid.n_r, r_max=traj.grid.r_max,
             meta=json.dumps(traj.meta, sort_keys=True, default=str))


def load_trajectory(path) -> ev.Trajectory:
    """Load a trajectory saved by a run directory (or a ``.npz`` file)."""
    path = Path(path)
    if path.is_dir():
        path = path / "trajectory.npz"
    if not path.exists():
        raise ConfigError(f"no trajectory at {path}", key="input")
    with np.load(path) as z:
        grid = sp.build_grid(int(z["n_r"]), float(z["r_max"]))
        meta = json.loads(str(z["meta"]))
        return ev.Trajectory(grid, z["times"], z["u"], z["N"], meta)


def write_conservation(out: Path, traj: ev.Trajectory, gamma: float) -> dg.ConservationSeries:
    series = dg.conservation_report(traj, gamma)
    write_csv(out / "conservation.csv", ["t", "mass", "energy"], series.rows())
    return series


@dataclass
class RunResult:
    exit_code: int
    out: Path
    metrics: dict
    lines: list


class _Run:
    """Collects metrics and report lines, then writes the manifest."""

    def __init__(self, subcommand: str, cfg: SimConfig, out: Path, threads: int):
        self.subcommand = subcommand
        self.cfg = cfg
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.threads = threads
        self.metrics: dict = {}
        self.lines: list = []
        self.grids: dict = {}
        self.started = _dt.datetime.now(_dt.timezone.utc)
        self.clock = time.perf_counter()

    def say(self, line: str) -> None:
        self.lines.append(line)

    def finish(self, exit_code: int = 0) -> RunResult:
        if self.lines:
            (self.out / "report.txt").write_text("\n".join(self.lines) + "\n")
        inventory = {}
        for p in sorted(self.out.rglob("*")):
            if p.is_file() and p.name != "manifest.json":
                inventory[p.relative_to(self.out).as_posix()] = file_digest(p)
        manifest = {
            "subcommand": self.subcommand,
            "version": __version__,
            "config": asdict(self.cfg),
            "grids": self.grids,
            "tolerances": tolerances(self.cfg),
            "seeds": {"seed": self.cfg.seed},
            "threads": self.threads,
            "wall_clock": {"started": self.started.isoformat(),
                           "elapsed_s": time.perf_counter() - self.clock},
            "metrics": self.metrics,
            "digest_algorithm": DIGEST,
            "files": inventory,
            "exit_code": exit_code,
        }
        with open(self.out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=_json_default)
        return RunResult(exit_code, self.out, self.metrics, self.lines)


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return str(x)


def tolerances(cfg: SimConfig) -> dict:
    return {
        "spectral": {"zero_mode_tol": 1e-8, "tail_tol": TAIL_TOL},
        "littlewood_paley": {"unresolved_warn": 1e-8},
        "bilinear": {"n_a": cfg.n_a, "refine": 16, "guard": 1e-9, "window": bl.WINDOW,
                     "drop_tol": bl.DROP_TOL},
        "evolution": {"picard_tol": cfg.picard_tol, "picard_max_iter": cfg.picard_max_iter,
                      "blowup_fraction": 0.01, "cadence": cfg.dt * cfg.snapshot_every},
        "estimates": {"stability_tol": cfg.stability_tol},
    }


# --- subcommands -----------------------------------------------------------

def _simulate(run: _Run):
    cfg = run.cfg
    solver = cfg.solver_config("simulate")
    u0, N0 = cfg.initial_data()
    traj = ev.run_direct(solver, u0, N0)
    run.grids["main"] = traj.grid.describe()
    save_trajectory(run.out, traj, cfg.gamma)
    cons = write_conservation(run.out, traj, cfg.gamma)
    times, rs, rw = ev.duhamel_residual(traj, cfg.gamma)
    write_csv(run.out / "convergence.csv", ["t", "duhamel_res_S", "duhamel_res_W"],
              zip(times, rs, rw))
    run.metrics.update(mass_drift=cons.mass_drift, energy_drift=cons.energy_drift,
                       duhamel_res_S=float(rs.max()), duhamel_res_W=float(rw.max()),
                       cadence=traj.cadence)
    run.say(f"simulate mode={solver.mode} steps={solver.n_steps} snapshots={len(traj)} "
            f"mass_drift={cons.mass_drift:.3e} energy_drift={cons.energy_drift:.3e}")
    return 0


def _picard(run: _Run, out: Path | None = None):
    cfg = run.cfg
    out = out or run.out
    out.mkdir(parents=True, exist_ok=True)
    solver = cfg.solver_config("picard")
    u0, N0 = cfg.initial_data()
    traj, log = ev.picard_solve(solver, u0, N0)
    run.grids["main"] = traj.grid.describe()
    save_trajectory(out, traj, cfg.gamma)
    write_conservation(out, traj, cfg.gamma)
    write_csv(out / "convergence.csv", ["iteration", "diff", "factor"], log.rows())
    run.metrics.update(picard_iterations=len(log.iterations), picard_converged=log.converged,
                       contraction_factor=log.contraction_factor, cadence=traj.cadence)
    run.say(f"picard iterations={len(log.iterations)} converged={log.converged} "
            f"contraction_factor={log.contraction_factor:.3e}")
    return traj


def _picard_cmd(run: _Run):
    _picard(run)
    return 0


def _compare(run: _Run):
    cfg = run.cfg
    pic = _picard(run, run.out / "picard")
    solver = cfg.solver_config("compare")
    u0, N0 = cfg.initial_data()
    direct = ev.run_direct(solver, u0, N0)
    save_trajectory(run.out / "direct", direct, cfg.gamma)
    w = norms.bracket(direct.grid, 1.0)
    du = norms.spectral_l2_values(direct.grid, (direct.u - pic.u) * w)
    write_csv(run.out / "agreement.csv", ["t", "h1_difference"], zip(direct.times, du))
    rows = []
    summary = {}
    for name, traj in (("picard", pic), ("direct", direct)):
        t, rs, rw = ev.pde_residual(traj, cfg.gamma, mode="paper")
        summary[name] = (float(rs.max()), float(rw.max()))
        rows.append((t, rs, rw))
    write_csv(run.out / "residual.csv",
              ["t", "picard_res_S", "picard_res_W", "direct_res_S", "direct_res_W"],
              zip(rows[0][0], rows[0][1], rows[0][2], rows[1][1], rows[1][2]))
    agreement = float(du.max())
    run.metrics.update(h1_difference=agreement, picard_pde_residual=max(summary["picard"]),
                       direct_pde_residual=max(summary["direct"]))
    run.say(f"compare agreement ||du||_LinfH1={agreement:.3e} "
            f"picard_residual={max(summary['picard']):.3e} "
            f"direct_residual={max(summary['direct']):.3e}")
    return 0


def _verify_symbols(run: _Run):
    cfg = run.cfg
    js = [j for j in range(-cfg.symbol_j_max, cfg.symbol_j_max + 1) if abs(j) >= 3]
    rows = bl.verify_symbol_bounds(js, n_samples=cfg.symbol_samples, seed=cfg.seed)
    write_csv(run.out / "symbols.csv", ["j", "case", "samples", "min_ratio", "max_m"],
              ((r.j, r.case, r.samples, r.min_ratio, r.max_m) for r in rows))
    run.say(f"{'j':>4s} {'case':>5s} {'samples':>8s} {'min_ratio':>12s} {'max_m':>12s}")
    run.lines.extend(r.line() for r in rows)
    worst = min(r.min_ratio for r in rows)
    run.metrics["min_ratio"] = worst
    run.say(f"PASS symbol bounds: min ratio {worst:.6f} >= 1")
    return 0


LP_PARTITION_TOL = 1e-12
LP_LEAKAGE_TOL = 1e-10
LP_RECONSTRUCTION_TOL = 1e-8


def _verify_lp(run: _Run):
    from .ensembles import BandRange

    cfg = run.cfg
    grid = cfg.grid()
    run.grids["main"] = grid.describe()
    rng = np.random.default_rng([cfg.seed, 7])
    band = BandRange(2.0 * grid.drho, 0.2 * grid.rho_max, 0.25, 2)
    report = lp.lp_report(grid)
    residuals = []
    for _ in range(cfg.lp_pairs):
        f, g = band.sample(grid, rng), band.sample(grid, rng)
        residuals.append(lp.lp_report(grid, f, g)["reconstruction_residual"])
    leak = max(report["leakage"].values())
    rec = max(residuals)
    run.say(f"bands {report['j_min']}..{report['j_max']} ({len(report['bands'])} on grid)")
    run.say(f"partition_of_unity_max_deviation {report['partition_deviation']:.3e}")
    for j, v in report["leakage"].items():
        run.say(f"leakage j={j:>3d} {v:.3e}")
    run.say(f"reconstruction_residual_max {rec:.3e} over {cfg.lp_pairs} pairs")
    run.metrics.update(partition_deviation=report["partition_deviation"], leakage=leak,
                       reconstruction_residual=rec)
    ok = (report["partition_deviation"] < LP_PARTITION_TOL and leak < LP_LEAKAGE_TOL
          and rec < LP_RECONSTRUCTION_TOL)
    run.say(("PASS" if ok else "FAIL") + " littlewood-paley checks")
    if not ok:
        raise VerificationFailure("Littlewood-Paley checks failed")
    return 0


def estimate_stability(cfg: SimConfig, n_r: int | None = None):
    """Ensemble maxima at n_r and 2 n_r for each selected estimate."""
    n_r = n_r or cfg.ensemble_n_r
    ids = sorted(es.REGISTRY) if cfg.lemmas == "all" else [s.strip() for s in cfg.lemmas.split(",")]
    base = es.EnsembleConfig(n_samples=cfg.ensemble_samples, seed=cfg.seed, n_r=n_r)
    rows = []
    for lemma in ids:
        a = es.estimate_ratio(lemma, base, gamma=cfg.gamma, eps=cfg.eps)
        b = es.estimate_ratio(lemma, base.with_grid(2 * n_r), gamma=cfg.gamma, eps=cfg.eps)
        rel = abs(b.max - a.max) / a.max if a.max > 0 else (0.0 if b.max == 0 else math.inf)
        finite = (a.nonfinite == 0 and b.nonfinite == 0 and math.isfinite(a.max)
                  and math.isfinite(b.max) and a.ratios.size > 0 and b.ratios.size > 0)
        rows.append({"lemma": lemma, "max": a.max, "median": a.median, "max_doubled": b.max,
                     "rel_change": rel, "skipped": a.skipped + b.skipped,
                     "ok": finite and rel <= cfg.stability_tol})
    return rows


def probe_growth(cfg: SimConfig, s_values=(0.4, 0.5, 0.6)):
    """Threshold probe maxima for the base and widened ensembles."""
    base = es.ProbeConfig(n_samples=cfg.probe_samples, seed=cfg.seed, b_hi=cfg.probe_b_hi)
    wide = es.ProbeConfig(n_samples=cfg.probe_samples, seed=cfg.seed, b_hi=cfg.probe_b_hi_wide)
    a = es.threshold_probe(s_values, base)
    b = es.threshold_probe(s_values, wide)
    return {s: (a[s], b[s], b[s] / a[s]) for s in s_values}


def _verify_estimates(run: _Run):
    cfg = run.cfg
    rows = estimate_stability(cfg)
    write_csv(run.out / "estimates.csv",
              ["lemma", "max", "median", "max_doubled", "rel_change", "skipped", "ok"],
              ((r["lemma"], r["max"], r["median"], r["max_doubled"], r["rel_change"],
                r["skipped"], r["ok"]) for r in rows))
    for r in rows:
        run.say(f"{'PASS' if r['ok'] else 'FAIL'} {r['lemma']:<9s} max={r['max']:.6g} "
                f"max(2n_r)={r['max_doubled']:.6g} rel_change={r['rel_change']:.3e}")
    probe = probe_growth(cfg)
    write_csv(run.out / "probe.csv", ["s", "max_base", "max_wide", "growth"],
              ((s, *v) for s, v in probe.items()))
    growth_low = probe[0.4][2]
    growth_high = probe[0.6][2]
    probe_ok = growth_low > 1.0 and growth_low > growth_high and growth_high <= 1.0 + cfg.stability_tol
    for s, (x, y, g) in probe.items():
        run.say(f"probe s={s} max_base={x:.6g} max_wide={y:.6g} growth={g:.4f}")
    run.say(f"{'PASS' if probe_ok else 'FAIL'} threshold probe")
    run.metrics.update(estimates_ok=all(r["ok"] for r in rows), probe_ok=probe_ok,
                       probe_growth_low=growth_low, probe_growth_high=growth_high)
    if not (run.metrics["estimates_ok"] and probe_ok):
        raise VerificationFailure("estimate-ratio suite failed")
    return 0


def _source_trajectory(run: _Run, subcommand: str):
    cfg = run.cfg
    if cfg.input:
        traj = load_trajectory(cfg.input)
    else:
        traj = ev.run_direct(cfg.solver_config(subcommand), *cfg.initial_data())
    run.grids["main"] = traj.grid.describe()
    return traj


def _norms(run: _Run):
    cfg = run.cfg
    if not cfg.input:
        raise ConfigError("norms needs an input trajectory", key="input")
    traj = _source_trajectory(run, "norms")
    spec = norms.NormSpec(cfg.norm_space, cfg.norm_s, cfg.norm_q, cfg.norm_time_p)
    stack = getattr(traj, cfg.norm_field)
    values = [spec.evaluate(sp.RadialField(traj.grid, stack[i], sp.SPECTRAL))
              for i in range(len(traj))]
    write_csv(run.out / "norms.csv", ["t", "value"], zip(traj.times, values))
    total = norms.time_lp(traj.times, np.array(values), cfg.norm_time_p)
    run.metrics.update(space_time_norm=total, cadence=traj.cadence)
    run.say(f"norm {cfg.norm_space}(s={cfg.norm_s}, q={cfg.norm_q}) of {cfg.norm_field}: "
            f"L^{cfg.norm_time_p}_t = {total:.6e} (cadence {traj.cadence})")
    return 0


def _scatter(run: _Run):
    cfg = run.cfg
    traj = _source_trajectory(run, "scatter")
    gamma = float(traj.meta.get("gamma", cfg.gamma))
    rep = dg.scattering_report(traj, gamma, n_a=cfg.n_a)
    write_csv(run.out / "scatter.csv", ["t", "omega_norm", "theta_norm", "omega_l2", "theta_l2"],
              rep.rows())
    last = len(traj) - 1
    write_csv(run.out / "profiles.csv", ["t", "f_to_final", "g_to_final"],
              ((t, rep.cauchy_f[i, last], rep.cauchy_g[i, last]) for i, t in enumerate(rep.times)))
    summary = rep.dyadic_summary()
    run.metrics.update(summary)
    run.say("scatter " + " ".join(f"{k}={v:.6e}" for k, v in summary.items()))
    return 0


_DISPATCH = {
    "simulate": _simulate,
    "picard": _picard_cmd,
    "compare": _compare,
    "verify symbols": _verify_symbols,
    "verify lp": _verify_lp,
    "verify estimates": _verify_estimates,
    "norms": _norms,
    "scatter": _scatter,
}


def run(subcommand: str, cfg: SimConfig, out, threads: int = 1) -> RunResult:
    """Execute one subcommand and write its outputs and manifest under ``out``.

    Module errors propagate after the manifest is written with the error's
    exit code.
    """
    if subcommand not in _DISPATCH:
        raise ConfigError(f"unknown subcommand {subcommand!r}; choose from {SUBCOMMANDS}")
    sp.set_workers(threads)
    r = _Run(subcommand, cfg, out, threads)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            code = _DISPATCH[subcommand](r)
        if caught:
            r.metrics["warnings"] = sorted({str(w.message) for w in caught})
    except ZlabError as exc:
        r.metrics["error"] = {"type": type(exc).__name__, "message": str(exc)}
        r.finish(exc.exit_code)
        raise
    return r.finish(code)
