"""Command-line benchmark harness.

Subcommands: ``circular`` and ``lowrank`` run seeded batches and emit report
files, ``landscape`` rasterizes the residual norm of the reduced system at a
fixed multiplier, ``solve`` runs a single serialized instance, ``replay``
re-runs a batch from its manifest.

Report layout per output directory: ``results.csv`` holds the deterministic
per-instance columns and is byte-identical across reruns with the same flags;
wall-clock seconds go to ``times.csv`` (and the manifest) so timing noise
never touches the replayable file.  Figures are rendered next to the CSVs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys

import numpy as np
import scipy

from . import cones, instance_io, ncp, plots, problems, solver

MANIFEST_FORMAT = "conewton-manifest v1"

DEFAULT_OMEGAS = "pi/12,pi/6,pi/4,pi/3"


# ---------------------------------------------------------------------------
# small helpers

def parse_angle(token: str) -> float:
    """Angles as decimals or fractions of pi: '0.5', 'pi/6', '5pi/12'."""
    token = token.strip().lower()
    if "pi" in token:
        head, _, tail = token.partition("pi")
        num = float(head) if head else 1.0
        den = float(tail[1:]) if tail.startswith("/") else 1.0
        return num * math.pi / den
    return float(token)


def _float_list(text: str):
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _int_list(text: str):
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _cap_jobs(jobs: int, tasks: int) -> int:
    cap = os.environ.get("CONEWTON_THREADS")
    if cap:
        jobs = min(jobs, max(1, int(cap)))
    return max(1, min(jobs, tasks))


def _fmt(value: float) -> str:
    return "%.17g" % float(value)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


def _write_json_rows(path, dicts) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(dicts, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _environment() -> dict:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
    }


def _write_manifest(out_dir, command, flags, seeds, config, results,
                    generator=None) -> None:
    doc = {
        "format": MANIFEST_FORMAT,
        "command": command,
        "flags": flags,
        "seeds": seeds,
        "config": config.to_dict(),
        "results": results,
        "environment": _environment(),
    }
    if generator is not None:
        doc["generator_metadata"] = problems.generator_metadata(generator)
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="ascii") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _run_pool(worker, tasks, jobs):
    jobs = _cap_jobs(jobs, len(tasks))
    if jobs <= 1:
        return [worker(t) for t in tasks]
    import multiprocessing as mp

    with mp.Pool(processes=jobs) as pool:
        return pool.map(worker, tasks)


def _config_from_args(args, progress_default=None) -> solver.SolverConfig:
    progress = getattr(args, "progress_eps", progress_default)
    return solver.SolverConfig(
        c=args.armijo_c, tol=args.tol, maxiter=args.maxiter,
        maxiter_ls=args.maxiter_ls, progress_eps=progress)


# ---------------------------------------------------------------------------
# circular batch

def _circular_task(task):
    (n, m, omega, seed, start, cfg_dict) = task
    config = solver.SolverConfig(**cfg_dict)
    inst = problems.generate_circular(n, m, omega, seed)
    prob = problems.build_circular(inst)
    y0, s0 = problems.starting_point(start, seed, n, m,
                                     primal_cone=cones.circular(n, omega))
    report = solver.solve(prob, y0, s0, config)
    return {
        "seed": seed,
        "omega": plots.angle_label(omega),
        "start": start,
        "status": report.status,
        "residual": _fmt(report.final_h_norm),
        "iters": report.iterations,
        "wall_time": report.wall_time,
        "step_counts": report.step_counts(),
    }


def run_circular(flags: dict, out_dir: str) -> list:
    os.makedirs(out_dir, exist_ok=True)
    omegas = [parse_angle(tok) for tok in flags["omegas"].split(",")]
    seeds = [flags["seed_base"] + k for k in range(flags["seeds"])]
    config = solver.SolverConfig(**flags["config"])
    tasks = [(flags["n"], flags["m"], omega, seed, flags["start"],
              flags["config"])
             for omega in omegas for seed in seeds]
    results = _run_pool(_circular_task, tasks, flags["jobs"])

    header = ["seed", "omega", "start", "status", "residual", "iters"]
    rows = [[r["seed"], r["omega"], r["start"], r["status"], r["residual"],
             r["iters"]] for r in results]
    _write_csv(os.path.join(out_dir, "results.csv"), header, rows)
    _write_csv(os.path.join(out_dir, "times.csv"),
               ["seed", "omega", "start", "seconds"],
               [[r["seed"], r["omega"], r["start"], "%.4g" % r["wall_time"]]
                for r in results])
    if flags.get("format") == "json":
        _write_json_rows(os.path.join(out_dir, "results.json"),
                         [{k: r[k] for k in header} for r in results])
    _write_manifest(out_dir, "circular", flags, seeds, config, results,
                    generator="circular")
    plots.circular_residual_figure(results,
                                   os.path.join(out_dir, "residuals.png"))
    return results


def cmd_circular(args) -> int:
    config = _config_from_args(args)
    flags = {
        "n": args.n,
        "m": args.m if args.m is not None else max(1, round(args.n / 4)),
        "omegas": args.omegas,
        "seeds": args.seeds,
        "seed_base": args.seed_base,
        "start": args.start,
        "jobs": args.jobs,
        "format": args.format,
        "config": config.to_dict(),
    }
    results = run_circular(flags, args.out)
    solved = sum(1 for r in results if r["status"] == solver.SOLVED)
    print(f"circular batch: {solved}/{len(results)} Solved; "
          f"reports in {args.out}")
    return 0


# ---------------------------------------------------------------------------
# low-rank completion batch

def lowrank_solve_instance(n, p, r_max, seed, draws, cfg_dict,
                           esc_draws=0, esc_maxiter=None, finish_maxiter=0):
    """Attempt ladder for one completion instance.

    Runs the two largest-row rank-one starts and then the pinned-magnitude
    perturbation draws under the base iteration budget, followed by the
    escalated perturbation draws (coefficients 0.35 and 0.60) under the
    esc_maxiter budget, stopping at the first Solved report.  When every
    attempt fails and finish_maxiter > 0, the most advanced endpoint is
    continued under that larger budget; the continuation either converges
    late or grinds the reported residual further down.  Returns (strategy,
    report, total_wall_time) for the best outcome; the strategy label names
    the attempt that produced the winning endpoint, with escalated draws
    marked by their coefficient.
    """
    config = solver.SolverConfig(**cfg_dict)
    esc_config = (config if esc_maxiter is None else
                  solver.SolverConfig(**dict(cfg_dict, maxiter=esc_maxiter)))
    inst = problems.generate_completion(n, p, r_max, seed)
    prob = problems.build_lowrank(inst)
    attempts = ([("rowrank1", k, 0.1, config) for k in (0, 1)]
                + [("perturb", j, 0.1, config) for j in range(draws)]
                + [("perturb", j, coeff, esc_config)
                   for coeff in (0.35, 0.60)
                   for j in range(1, esc_draws + 1)])
    best = best_key = None
    total_time = 0.0
    for strategy, draw, coeff, cfg in attempts:
        w0, lam0 = problems.completion_start(inst, strategy, draw=draw,
                                             coeff=coeff)
        report = solver.solve(prob, w0, lam0, cfg)
        total_time += report.wall_time
        label = strategy if coeff == 0.1 else "%s+%g" % (strategy, coeff)
        key = (report.status == solver.SOLVED, -report.final_h_norm)
        if best_key is None or key > best_key:
            best, best_key = (label, report), key
        if report.status == solver.SOLVED:
            break  # later draws only explore alternatives, never improve Solved
    strategy, report = best
    if report.status != solver.SOLVED and finish_maxiter > 0:
        fin_cfg = solver.SolverConfig(**dict(cfg_dict, maxiter=finish_maxiter))
        fin = solver.solve(prob, report.x, report.lam, fin_cfg)
        total_time += fin.wall_time
        if (fin.status == solver.SOLVED, -fin.final_h_norm) > best_key:
            report = fin
    return strategy, report, total_time


def _lowrank_task(task):
    (n, p, r_max, seed, draws, esc_draws, esc_maxiter, finish_maxiter,
     cfg_dict) = task
    strategy, report, total_time = lowrank_solve_instance(
        n, p, r_max, seed, draws, cfg_dict, esc_draws, esc_maxiter,
        finish_maxiter)
    return {
        "seed": seed,
        "p": "%g" % p,
        "r_max": r_max,
        "start": strategy,
        "status": report.status,
        "residual": _fmt(report.final_h_norm),
        "iters": report.iterations,
        "wall_time": total_time,
        "step_counts": report.step_counts(),
    }


_LOWRANK_THRESHOLDS = (0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 60.0, 120.0, 300.0)


def run_lowrank(flags: dict, out_dir: str) -> list:
    os.makedirs(out_dir, exist_ok=True)
    seeds = [flags["seed_base"] + k for k in range(flags["seeds"])]
    config = solver.SolverConfig(**flags["config"])
    draws = int(flags.get("perturb_draws", 1))
    esc_draws = int(flags.get("escalated_draws", 0))
    esc_maxiter = flags.get("esc_maxiter")
    finish = int(flags.get("finish_maxiter", 0))
    tasks = [(flags["n"], p, r_max, seed, draws, esc_draws, esc_maxiter,
              finish, flags["config"])
             for r_max in flags["ranks"] for p in flags["p_values"]
             for seed in seeds]
    results = _run_pool(_lowrank_task, tasks, flags["jobs"])

    header = ["seed", "p", "r_max", "start", "status", "residual", "iters"]
    rows = [[r["seed"], r["p"], r["r_max"], r["start"], r["status"],
             r["residual"], r["iters"]] for r in results]
    _write_csv(os.path.join(out_dir, "results.csv"), header, rows)
    _write_csv(os.path.join(out_dir, "times.csv"),
               ["seed", "p", "r_max", "seconds"],
               [[r["seed"], r["p"], r["r_max"], "%.4g" % r["wall_time"]]
                for r in results])

    summary = []
    for r_max in flags["ranks"]:
        for p in flags["p_values"]:
            cell = [r for r in results
                    if r["r_max"] == r_max and r["p"] == "%g" % p]
            total = len(cell)
            for thr in _LOWRANK_THRESHOLDS:
                hit = sum(1 for r in cell
                          if r["status"] == solver.SOLVED
                          and r["wall_time"] <= thr)
                pct = 100.0 * hit / total if total else 0.0
                summary.append([r_max, "%g" % p, "%g" % thr, "%.1f" % pct])
    _write_csv(os.path.join(out_dir, "summary.csv"),
               ["r_max", "p", "threshold_seconds", "solved_pct"], summary)
    if flags.get("format") == "json":
        _write_json_rows(os.path.join(out_dir, "results.json"),
                         [{k: r[k] for k in header} for r in results])
    _write_manifest(out_dir, "lowrank", flags, seeds, config, results,
                    generator="completion")
    plots.lowrank_time_figure(results, [r["wall_time"] for r in results],
                              os.path.join(out_dir, "times.png"))
    return results


def cmd_lowrank(args) -> int:
    config = _config_from_args(args, progress_default=args.progress_eps)
    flags = {
        "n": args.n,
        "p_values": _float_list(args.p),
        "ranks": _int_list(args.rank),
        "seeds": args.seeds,
        "seed_base": args.seed_base,
        "jobs": args.jobs,
        "format": args.format,
        "time_cap": args.time_cap,
        "perturb_draws": args.perturb_draws,
        "escalated_draws": args.escalated_draws,
        "esc_maxiter": args.esc_maxiter,
        "finish_maxiter": args.finish_maxiter,
        "config": config.to_dict(),
    }
    results = run_lowrank(flags, args.out)
    solved = sum(1 for r in results if r["status"] == solver.SOLVED)
    print(f"completion grid: {solved}/{len(results)} Solved; "
          f"reports in {args.out}")
    return 0


# ---------------------------------------------------------------------------
# residual landscape

def _project_circ_grid(y1, y2, tau):
    """Vectorized 2-D circular-cone projection over a meshgrid."""
    s = np.abs(y2)
    t = (y1 + tau * s) / (1.0 + tau * tau)
    inside = s <= tau * y1
    polar = tau * s <= -y1
    sgn = np.sign(y2)
    p1 = np.where(inside, y1, np.where(polar, 0.0, t))
    p2 = np.where(inside, y2, np.where(polar, 0.0, tau * t * sgn))
    return p1, p2


def run_landscape(flags: dict, out_dir: str) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    omega = parse_angle(flags["omega"])
    tau = math.tan(omega)
    a = np.array(flags["a"], dtype=float)
    b = float(flags["b"])
    c = np.array(flags["c"], dtype=float)
    if a.size != 2 or c.size != 2:
        raise SystemExit("landscape requires a two-dimensional instance")

    inst = problems.CircularConeInstance(
        n=2, m=1, omega=omega, seed=0, a=a.reshape(1, 2),
        b=np.array([b]), c=c, x_hat=np.zeros(2))
    prob = problems.build_circular(inst)
    config = solver.SolverConfig(**flags["config"])
    report = solver.solve(prob, np.zeros(2), np.zeros(1), config)

    overlays = []
    if flags["multiplier"] == "optimal":
        if report.status != solver.SOLVED:
            raise SystemExit(
                f"could not compute the optimal multiplier: {report.status}")
        sigma = float(report.lam[0])
        overlays.append(("solution", [float(report.x[0]), float(report.x[1])]))
    elif flags["multiplier"] == "nonoptimal":
        sigma = _nonoptimal_sigma(a, c, omega)
    else:
        sigma = float(flags["sigma"])

    w = c - a * sigma
    # stationary point of the fixed-multiplier landscape: y = -w with
    # projection zero, available whenever w is strictly dual-interior
    if w[0] > 0 and abs(w[1]) < w[0] / tau - 1e-12:
        overlays.append(("stationary", [-float(w[0]), -float(w[1])]))

    lo1, hi1, lo2, hi2 = flags["range"]
    res = flags["resolution"]
    x1 = np.linspace(lo1, hi1, res)
    x2 = np.linspace(lo2, hi2, res)
    g1, g2 = np.meshgrid(x1, x2)
    p1, p2 = _project_circ_grid(g1, g2, tau)
    feas = a[0] * p1 + a[1] * p2 - b
    h_norm = np.sqrt((w[0] + g1 - p1) ** 2 + (w[1] + g2 - p2) ** 2
                     + feas ** 2)

    rows = []
    for i in range(res):
        for j in range(res):
            rows.append([_fmt(x1[j]), _fmt(x2[i]), _fmt(h_norm[i, j])])
    _write_csv(os.path.join(out_dir, "grid.csv"),
               ["x1", "x2", "h_norm"], rows)

    for pt in _zero_crossings(x1, x2, feas):
        overlays.append(("feasible", [float(pt[0]), float(pt[1])]))
    ray_r = np.linspace(0.0, math.hypot(hi1 - lo1, hi2 - lo2), 64)[1:]
    scale = 1.0 / math.hypot(1.0, tau)
    for r in ray_r:
        overlays.append(("ray", [r * scale, r * tau * scale]))
        overlays.append(("ray", [r * scale, -r * tau * scale]))
    _write_csv(os.path.join(out_dir, "overlays.csv"), ["kind", "x1", "x2"],
               [[kind, _fmt(pt[0]), _fmt(pt[1])] for kind, pt in overlays])

    flags = dict(flags)
    flags["sigma_used"] = sigma
    grid_min = float(h_norm.min())
    arg = np.unravel_index(int(h_norm.argmin()), h_norm.shape)
    result = {
        "sigma": sigma,
        "grid_min": grid_min,
        "grid_argmin": [float(x1[arg[1]]), float(x2[arg[0]])],
        "feasible_samples": sum(1 for k, _ in overlays if k == "feasible"),
    }
    _write_manifest(out_dir, "landscape", flags, [], config, [result])
    plots.landscape_figure(
        x1, x2, h_norm,
        [(k, p) for k, p in overlays if k != "ray"],
        os.path.join(out_dir, "landscape.png"), tau=tau)
    return result


def _nonoptimal_sigma(a, c, omega):
    """Multiplier whose slack c - A^T sigma is strictly dual-interior, making
    the fixed-multiplier landscape carry a stationary point with residual |b|.
    Deterministic coarse grid search."""
    cot = 1.0 / math.tan(omega)
    best, margin = None, 0.0
    for sigma in np.linspace(-8.0, 8.0, 3201):
        w = c - a * sigma
        gap = w[0] * cot - abs(w[1])
        if gap > margin:
            best, margin = float(sigma), gap
    if best is None:
        raise SystemExit("no strictly dual-interior multiplier found for "
                         "this instance; pass --sigma explicitly")
    return best


def _zero_crossings(x1, x2, field):
    """Linear sign-change interpolation along grid edges; field[i, j] is the
    value at (x1[j], x2[i])."""
    pts = []
    n2, n1 = field.shape
    for i in range(n2):
        for j in range(n1 - 1):
            f0, f1 = field[i, j], field[i, j + 1]
            if f0 == 0.0:
                pts.append((x1[j], x2[i]))
            elif f0 * f1 < 0.0:
                t = f0 / (f0 - f1)
                pts.append((x1[j] + t * (x1[j + 1] - x1[j]), x2[i]))
    for j in range(n1):
        for i in range(n2 - 1):
            f0, f1 = field[i, j], field[i + 1, j]
            if f0 * f1 < 0.0:
                t = f0 / (f0 - f1)
                pts.append((x1[j], x2[i] + t * (x2[i + 1] - x2[i])))
    return pts


def cmd_landscape(args) -> int:
    config = _config_from_args(args)
    flags = {
        "omega": args.omega,
        "a": _float_list(args.a),
        "b": args.b,
        "c": _float_list(args.c),
        "multiplier": "value" if args.sigma is not None else args.multiplier,
        "sigma": args.sigma,
        "range": _float_list(args.range),
        "resolution": args.resolution,
        "jobs": args.jobs,
        "format": args.format,
        "config": config.to_dict(),
    }
    if len(flags["range"]) != 4:
        raise SystemExit("--range needs four numbers: x1min,x1max,x2min,x2max")
    result = run_landscape(flags, args.out)
    print(f"landscape: sigma={result['sigma']:g} grid min "
          f"{result['grid_min']:.3e} at {result['grid_argmin']}; "
          f"{result['feasible_samples']} feasibility samples; "
          f"reports in {args.out}")
    return 0


# ---------------------------------------------------------------------------
# single-instance solve

def cmd_solve(args) -> int:
    try:
        inst = instance_io.read_instance(args.instance)
    except instance_io.InstanceFormatError as err:
        print(f"{args.instance}: {err}", file=sys.stderr)
        return 64
    except OSError as err:
        print(f"{args.instance}: {err}", file=sys.stderr)
        return 66

    config = _config_from_args(args)
    if isinstance(inst, problems.CircularConeInstance):
        prob = problems.build_circular(inst)
        start = args.start or "SP0"
        x0, lam0 = problems.starting_point(
            start, inst.seed, inst.n, inst.m,
            primal_cone=cones.circular(inst.n, inst.omega))
    else:
        prob = problems.build_lowrank(inst)
        start = args.start or "rowrank1"
        if start in ("rowrank1", "perturb"):
            x0, lam0 = problems.completion_start(inst, start)
        else:
            x0, lam0 = problems.starting_point(start, inst.seed,
                                               prob.x_dim, prob.m)
    report = solver.solve(prob, x0, lam0, config)

    if isinstance(inst, problems.CircularConeInstance):
        _, _, _, cert, _ = problems.circular_round_trip(
            inst, report.x, report.lam)
    else:
        _, _, cert = ncp.recover_kkt(prob, report.x, report.lam)

    print(f"status: {report.status}")
    print(f"residual: {report.final_h_norm:.6e}")
    print(f"iterations: {report.iterations}")
    print(f"stationarity: {cert.stationarity_norm:.6e}")
    print(f"primal_feasibility: {cert.primal_feas_gap:.6e}")
    print(f"dual_feasibility: {cert.dual_feas_gap:.6e}")
    print(f"complementarity: {cert.complementarity:.6e}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        flags = {"instance": os.path.abspath(args.instance), "start": start,
                 "config": config.to_dict()}
        result = {
            "status": report.status,
            "residual": _fmt(report.final_h_norm),
            "iterations": report.iterations,
            "wall_time": report.wall_time,
            "step_counts": report.step_counts(),
        }
        _write_manifest(args.out, "solve", flags, [inst.seed], config,
                        [result])
    if report.status == solver.SOLVED:
        return 0
    if report.status == solver.STRONGLY_STATIONARY:
        return 2
    return 3


# ---------------------------------------------------------------------------
# manifest replay

def cmd_replay(args) -> int:
    with open(args.manifest, "r", encoding="ascii") as fh:
        doc = json.load(fh)
    if doc.get("format") != MANIFEST_FORMAT:
        print(f"{args.manifest}: not a {MANIFEST_FORMAT} file",
              file=sys.stderr)
        return 64
    command = doc["command"]
    flags = doc["flags"]
    if command == "circular":
        run_circular(flags, args.out)
    elif command == "lowrank":
        run_lowrank(flags, args.out)
    elif command == "landscape":
        run_landscape(flags, args.out)
    else:
        print(f"{args.manifest}: command {command!r} cannot be replayed",
              file=sys.stderr)
        return 64
    print(f"replayed {command} into {args.out}")
    return 0


# ---------------------------------------------------------------------------
# argument wiring

def _add_common(sub, default_maxiter=100):
    sub.add_argument("--out", default="reports", help="output directory")
    sub.add_argument("--seed-base", type=int, default=0)
    sub.add_argument("--jobs", type=int, default=1,
                     help="parallel solves (capped by CONEWTON_THREADS)")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--tol", type=float, default=1e-8)
    sub.add_argument("--maxiter", type=int, default=default_maxiter)
    sub.add_argument("--maxiter-ls", type=int, default=20)
    sub.add_argument("--armijo-c", type=float, default=0.1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conewton",
        description="semi-smooth Newton benchmarks for conic programs")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("circular", help="equality-constrained programs "
                          "over a circular cone, batch run")
    _add_common(sub)
    sub.add_argument("--n", type=int, default=200)
    sub.add_argument("--m", type=int, default=None,
                     help="equality rows (default: n/4 rounded)")
    sub.add_argument("--omegas", default=DEFAULT_OMEGAS)
    sub.add_argument("--seeds", type=int, default=10)
    sub.add_argument("--start", default="SP0",
                     choices=("SP0", "SP1", "SP2", "SP3"))
    sub.set_defaults(func=cmd_circular)

    sub = subs.add_parser("lowrank", help="low-rank matrix completion grid")
    _add_common(sub, default_maxiter=800)
    sub.add_argument("--n", type=int, default=10)
    sub.add_argument("--p", default="0.1,0.2,0.3",
                     help="mask densities, comma separated")
    sub.add_argument("--rank", default="1,2,3",
                     help="rank bounds, comma separated")
    sub.add_argument("--seeds", type=int, default=20)
    sub.add_argument("--progress-eps", type=float, default=1e-8)
    sub.add_argument("--perturb-draws", type=int, default=5,
                     help="pinned-magnitude noise realizations tried by the "
                          "perturb start")
    sub.add_argument("--escalated-draws", type=int, default=4,
                     help="extra perturb draws per escalated magnitude "
                          "coefficient (0.35 and 0.60)")
    sub.add_argument("--esc-maxiter", type=int, default=1500,
                     help="iteration budget for each escalated draw")
    sub.add_argument("--finish-maxiter", type=int, default=6000,
                     help="extra iteration budget spent continuing the best "
                          "endpoint of a fully unsolved instance (0 disables)")
    sub.add_argument("--time-cap", type=float, default=300.0,
                     help="nominal per-instance cap recorded in the manifest; "
                          "determinism is preserved by iteration budgets")
    sub.set_defaults(func=cmd_lowrank)

    sub = subs.add_parser("landscape", help="residual-norm grid of the "
                          "reduced system at a fixed multiplier")
    _add_common(sub)
    sub.add_argument("--omega", default="pi/4")
    sub.add_argument("--a", default="1,1", help="equality row, 2 entries")
    sub.add_argument("--b", type=float, default=1.0)
    sub.add_argument("--c", default="1,0", help="objective vector, 2 entries")
    sub.add_argument("--multiplier", choices=("optimal", "nonoptimal"),
                     default="optimal")
    sub.add_argument("--sigma", type=float, default=None,
                     help="fixed multiplier value (overrides --multiplier)")
    sub.add_argument("--range", default="-2,2,-2,2")
    sub.add_argument("--resolution", type=int, default=201)
    sub.set_defaults(func=cmd_landscape)

    sub = subs.add_parser("solve", help="solve one serialized instance")
    _add_common(sub)
    sub.add_argument("--instance", required=True)
    sub.add_argument("--start", default=None)
    sub.set_defaults(func=cmd_solve, out=None)

    sub = subs.add_parser("replay", help="re-run a batch from manifest.json")
    sub.add_argument("manifest")
    sub.add_argument("--out", default="reports-replay")
    sub.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
