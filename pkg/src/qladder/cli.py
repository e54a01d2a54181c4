"""Command-line front end.

    qladder stationary --config cfg.json --out out/
    qladder density    --config cfg.json --out out/
    qladder bellman    --config cfg.json --out out/
    qladder brw        --config cfg.json --seed 1 --replicas 10 --out runs/
    qladder analyze    --config cfg.json --out report/

Exit codes: 0 success, 2 validation error, 3 I/O or manifest error,
4 numeric failure (non-convergence, no stationary solution, ...).
All outputs are computed in memory first and written only on success.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import backend_name
from .analysis import (
    estimate_front_profile,
    estimate_velocity,
    excursion_report,
    find_gamma_c,
    fit_decay_slope,
    predict_L0,
    predict_N0,
    predict_vL,
    predict_vN,
)
from .bellman import EconomicParams, solve_leapfrog_imitation, solve_leapfrog_only
from .brw import GENERATOR_ID, SEED_MIXING, BRWParams, KeepTopN, ParticleState, WindowL, run_replicas
from .density import DensityModelConfig, solve_stationary_density
from .errors import LadderError, ManifestError, ParameterError
from .ladder import LadderConfig, second_eigenvalue_modulus, stationary_exogenous

_MISSING = object()


def fmt(x):
    """Locale-free number formatting; integral floats below 2**53 print as integers."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


def json_text(obj):
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.bool_):
        return bool(x)
    raise TypeError(type(x).__name__)


class Block:
    """Parameter block that records every value it hands out."""

    def __init__(self, name, data):
        if not isinstance(data, dict):
            raise ParameterError(f"config block '{name}' must be an object")
        self.name = name
        self.data = data
        self.used = {}

    def get(self, key, default=_MISSING, kind=float):
        if key in self.data:
            raw = self.data[key]
        elif default is _MISSING:
            raise ParameterError(f"missing required parameter '{self.name}.{key}'")
        else:
            raw = default
        try:
            val = raw if kind is None or raw is None else kind(raw)
        except (TypeError, ValueError) as exc:
            raise ParameterError(f"parameter '{self.name}.{key}' is invalid: {raw!r}") from exc
        if kind is int and raw is not None and float(raw) != val:
            raise ParameterError(f"parameter '{self.name}.{key}' must be an integer")
        self.used[key] = val
        return val


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ParameterError("config must be a JSON object")
    return cfg


def block(cfg, name):
    if name not in cfg:
        raise ParameterError(f"config has no '{name}' block")
    return Block(name, cfg[name])


# ------------------------------------------------------------------ commands


def cmd_stationary(cfg, args):
    b = block(cfg, "ladder")
    q = b.get("q", kind=lambda v: [float(x) for x in v])
    config = LadderConfig(b.get("m", kind=int), b.get("a"), tuple(q))
    f = stationary_exogenous(config)
    lam2 = second_eigenvalue_modulus(config)
    files = {
        "stationary.csv": csv_text(["level", "density"], zip(range(1, config.m + 1), f)),
        "summary.json": json_text({
            "command": "stationary",
            "parameters": b.used,
            "Q": config.Q,
            "second_eigenvalue_modulus": lam2,
            "density": f,
        }),
    }
    return files


def cmd_density(cfg, args):
    b = block(cfg, "density")
    m = b.get("m", kind=int)
    a = b.get("a")
    qs = b.get("q_m", kind=lambda v: [float(x) for x in (v if isinstance(v, list) else [v])])
    files, rows, summary = {}, [], []
    for i, q_m in enumerate(qs):
        sol = solve_stationary_density(DensityModelConfig(m, a, q_m))
        files[f"density_{i:03d}.csv"] = csv_text(["level", "x"], zip(range(1, m + 1), sol.x))
        rows.append((q_m, sol.mu, sol.x1, sol.at_boundary))
        summary.append({"q_m": q_m, "mu": sol.mu, "x1": sol.x1, "at_boundary": sol.at_boundary,
                        "file": f"density_{i:03d}.csv"})
    files["summary.csv"] = csv_text(["q_m", "mu", "x1", "at_boundary"], rows)
    files["summary.json"] = json_text({"command": "density", "parameters": b.used, "solutions": summary})
    return files


def cmd_bellman(cfg, args):
    b = block(cfg, "bellman")
    params = EconomicParams(b.get("a"), b.get("lambda"), b.get("beta0"), b.get("C"))
    m = b.get("m", kind=int)
    j_min = b.get("j_min", kind=int)
    tol = b.get("tol", 1e-10)
    q_m = b.get("q_m", None)
    out = {"command": "bellman", "parameters": b.used, "beta": params.beta}
    files = {}
    if q_m is None:
        sol = solve_leapfrog_only(params, m, j_min, tol)
    else:
        coupled = solve_leapfrog_imitation(params, m, q_m, j_min, tol, b.get("max_outer", 100, int))
        sol = coupled.values
        out["visited_support_sizes"] = list(coupled.visited)
        files["density.csv"] = csv_text(["j", "f"], zip(sol.levels, coupled.f))
    out.update(j0=sol.j0, support_size=sol.support_size, sweeps=len(sol.residuals))
    files["values.csv"] = csv_text(["j", "V", "V_LF", "V_NLF"], zip(sol.levels, sol.V, sol.V_LF, sol.V_NLF))
    files["summary.json"] = json_text(out)
    return files


def _policy(b):
    kind = b.get("policy", kind=str)
    if kind == "N":
        return KeepTopN(b.get("N", kind=int))
    if kind == "L":
        return WindowL(b.get("L", kind=int))
    raise ParameterError("brw.policy must be 'N' or 'L'")


def cmd_brw(cfg, args):
    b = block(cfg, "brw")
    params = BRWParams(b.get("a"), b.get("mu"))
    policy = _policy(b)
    steps = b.get("steps", kind=int)
    snapshot_every = args.snapshot_every if args.snapshot_every is not None else b.get("snapshot_every", 0, int)
    b.used["snapshot_every"] = snapshot_every
    default_firms = policy.N if isinstance(policy, KeepTopN) else 1
    firms = b.get("initial_firms", default_firms, int)
    base_seed = args.seed if args.seed is not None else cfg.get("base_seed", _MISSING)
    if base_seed is _MISSING:
        raise ParameterError("base_seed is required (config 'base_seed' or --seed)")
    replicas = args.replicas if args.replicas is not None else cfg.get("replicas", 1)
    base_seed, replicas = int(base_seed), int(replicas)
    if replicas < 1 or steps < 1 or firms < 1:
        raise ParameterError("replicas, steps and initial_firms must be positive")
    initial = ParticleState.point_mass(firms, 0)
    records = run_replicas(initial, params, policy, steps, base_seed, replicas, snapshot_every, args.workers)
    files = {}
    for i, rec in enumerate(records):
        d = f"replica_{i:03d}"
        files[f"{d}/trajectory.csv"] = csv_text(
            ["step", "y_max", "y_min", "N"], zip(rec.steps, rec.y_max, rec.y_min, rec.total))
        rows = []
        for t, c in zip(rec.snapshot_steps, rec.snapshots):
            tail = np.cumsum(c[::-1])[::-1]
            rows.extend((t, z, c[z], tail[z] / tail[0]) for z in range(c.size))
        files[f"{d}/snapshots.csv"] = csv_text(["step", "z", "count", "h"], rows)
        files[f"{d}/run.json"] = json_text({"replica": i, "seed_entropy": [base_seed, i], **rec.meta})
    files["manifest.json"] = json_text({
        "command": "brw",
        "version": __version__,
        "parameters": b.used,
        "base_seed": base_seed,
        "replicas": replicas,
        "generator": GENERATOR_ID,
        "seed_mixing": SEED_MIXING,
        "backend": backend_name(),
        "replica_dirs": [f"replica_{i:03d}" for i in range(replicas)],
    })
    return files


def _read_manifest(run_dir):
    path = Path(run_dir) / "manifest.json"
    try:
        man = json.loads(path.read_text(encoding="utf-8"))
        p = man["parameters"]
        dirs = man["replica_dirs"]
        p["a"], p["mu"], p["policy"], p["steps"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ManifestError(f"missing or corrupt run manifest {path}: {exc}") from exc
    return man, dirs


def _read_replica(run_dir, d):
    base = Path(run_dir) / d
    try:
        traj = np.loadtxt(base / "trajectory.csv", delimiter=",", skiprows=1, ndmin=2)
        snap = np.loadtxt(base / "snapshots.csv", delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ManifestError(f"cannot read replica {base}: {exc}") from exc
    snaps = []
    if snap.size:
        steps = snap[:, 0]
        for t in np.unique(steps):
            rows = snap[steps == t]
            snaps.append((int(t), rows[np.argsort(rows[:, 1]), 2]))
    return traj, snaps


def cmd_analyze(cfg, args):
    b = block(cfg, "analyze")
    run_dir = b.get("run_dir", kind=str)
    burn_in = b.get("burn_in", kind=int)
    threshold = b.get("excursion_threshold", 2.0)
    man, dirs = _read_manifest(run_dir)
    p = man["parameters"]
    params = BRWParams(float(p["a"]), float(p["mu"]))
    prof = find_gamma_c(params)
    is_n = p["policy"] == "N"
    size = int(p["N"] if is_n else p["L"])
    predicted = predict_vN(prof, size) if is_n else predict_vL(prof, size)
    vel_rows, v_hats, supports, pops, snaps, excursions = [], [], [], [], [], []
    L0 = predict_L0(prof, size) if is_n else float(size)
    for i, d in enumerate(dirs):
        traj, rsnaps = _read_replica(run_dir, d)
        v, se = estimate_velocity(traj[:, 1], burn_in)
        v_hats.append(v)
        vel_rows.append((i, size, predicted, v, se))
        supports.append(float(np.mean(traj[burn_in:, 1] - traj[burn_in:, 2])))
        pops.append(float(np.mean(traj[burn_in:, 3])))
        snaps.extend(c for t, c in rsnaps if t > burn_in)
        if is_n:
            from .brw import TrajectoryRecord

            rec = TrajectoryRecord(traj[:, 1].astype(np.int64), traj[:, 2].astype(np.int64), traj[:, 3],
                                   np.empty(0), [], None)
            excursions.append(excursion_report(rec, L0, threshold, burn_in))
    v_mean = float(np.mean(v_hats))
    verdict = {
        "speed_profile": {"gamma_c": prof.gamma_c, "v_c": prof.v_c, "v_second": prof.v_second},
        "policy": p["policy"],
        "size": size,
        "burn_in": burn_in,
        "v_hat_mean": v_mean,
        "v_hat_below_v_c": bool(all(v < prof.v_c for v in v_hats)),
        "predicted_velocity": predicted,
    }
    files = {"velocity.csv": csv_text(["replica", "N_or_L", "predicted", "measured", "stderr"], vel_rows)}
    if is_n:
        gap = prof.v_c - predicted
        verdict.update(
            L0=L0,
            mean_support=float(np.mean(supports)),
            support_minus_L0=float(np.mean(supports)) - L0,
            velocity_within_band=bool(abs(v_mean - predicted) <= 0.5 * gap),
            velocity_band_ratio=abs(v_mean - predicted) / gap,
            excursions=excursions,
        )
    else:
        mean_pop = float(np.mean(pops))
        verdict.update(
            N0=predict_N0(prof, size),
            mean_population=mean_pop,
            log_population_per_L=math.log(mean_pop) / size,
            population_law_within_25pct=bool(abs(math.log(mean_pop) / size - prof.gamma_c) <= 0.25 * prof.gamma_c),
        )
    if len(snaps) >= 100:
        fp = estimate_front_profile(snaps, N=size if is_n else None)
        files["profile.csv"] = csv_text(["z", "h"], zip(fp.z, fp.h))
        try:
            slope = fit_decay_slope(fp)
            verdict["decay_slope"] = slope
            verdict["decay_slope_within_15pct"] = bool(abs(slope + prof.gamma_c) <= 0.15 * prof.gamma_c)
        except ParameterError as exc:
            verdict["decay_slope_error"] = str(exc)
    verdict["parameters"] = b.used
    files["verdict.json"] = json_text(verdict)
    return files


COMMANDS = {
    "stationary": cmd_stationary,
    "density": cmd_density,
    "bellman": cmd_bellman,
    "brw": cmd_brw,
    "analyze": cmd_analyze,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="qladder", description="Quality-ladder growth models.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--out", default=None, help="output directory (config 'output_dir' otherwise)")
        sp.add_argument("--seed", type=int, default=None, help="base seed (overrides config)")
        sp.add_argument("--replicas", type=int, default=None)
        sp.add_argument("--snapshot-every", type=int, default=None, dest="snapshot_every")
        sp.add_argument("--workers", type=int, default=1, help="threads for replicas")
    return parser


def write_files(out_dir, files):
    out = Path(out_dir)
    try:
        for rel, text in files.items():
            path = out / rel
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise ManifestError(f"cannot write outputs to {out}: {exc}") from exc


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out_dir = args.out if args.out is not None else cfg.get("output_dir")
        if out_dir is None:
            raise ParameterError("output directory required (--out or config 'output_dir')")
        files = COMMANDS[args.command](cfg, args)
        write_files(out_dir, files)
    except LadderError as exc:
        print(f"qladder {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
