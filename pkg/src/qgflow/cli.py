"""Command-line entry point ``qg``."""
import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import fields
from .analysis import analyticity_radius, decay_rate_fit, trajectory_radii
from .config import load_config
from .dynamics import monitors, picard_solve, simulate
from .errors import InsufficientDataError, QGError
from .gevrey import gevrey_transform, k_g_e1_norms
from .io import diagnostics_csv, emit_report, read_snapshot, read_trajectory, write_snapshot, write_trajectory
from .littlewood_paley import build_frame
from .verify import SUITES, format_results, run_verify

log = logging.getLogger("qgflow")


def build_datum(cfg):
    d = cfg.datum
    g = cfg.solver.grid
    kind = d["datum"]
    if kind == "two_mode":
        return fields.two_mode(g, d["amplitude"])
    if kind == "single_mode":
        k1, k2 = (int(k) for k in d["datum_mode"])
        return fields.single_mode(g, k1, k2, d["amplitude"])
    if kind == "annulus":
        return fields.random_annulus(g, d["datum_kmin"], d["datum_kmax"], d["amplitude"], seed=cfg.seed)
    if kind == "broadband":
        return fields.broadband(g, d["amplitude"], d["datum_slope"], seed=cfg.seed)
    if kind == "square_waves":
        return fields.square_waves(g, d["amplitude"], d["datum_width"])
    raise ValueError(kind)


def _outdir(args, cfg):
    out = Path(args.output_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args):
    cfg = load_config(args.config)
    out = _outdir(args, cfg)
    traj = simulate(build_datum(cfg), cfg.solver)
    diag = dict(traj.diagnostics)
    mon = monitors(traj)
    diag["balance_relative"] = mon["balance_relative"]
    diag["h1_margin"] = mon["h1_margin"]
    cols = list(diag)
    (out / "diagnostics.csv").write_text(diagnostics_csv(diag, cols))
    write_trajectory(out / "run.qgt", traj)
    write_snapshot(out / "final.qgsf", traj.snapshots[-1], float(traj.times[-1]), cfg.solver.params.gamma)
    print(f"run: {len(traj)} snapshots to t={traj.times[-1]:.6g}; outputs in {out}")
    return 0


def cmd_picard(args):
    cfg = load_config(args.config)
    out = _outdir(args, cfg)
    traj, state = picard_solve(build_datum(cfg), cfg.solver)
    write_trajectory(out / "picard.qgt", traj)
    lines = ["iterate,residual"] + [f"{i + 1},{format(r, '.17g')}" for i, r in enumerate(state.residual_history)]
    (out / "picard_residuals.csv").write_text("\n".join(lines) + "\n")
    ratios = state.contraction_ratios()
    worst = float(ratios.max()) if ratios.size else 0.0
    print(f"picard: {state.iterate_index} iterates, converged={state.converged}, "
          f"final residual {state.residual_history[-1]:.3e}, worst contraction ratio {worst:.3g}")
    return 0 if state.converged else 1


def cmd_analyze(args):
    cfg = load_config(args.spec)
    traj = read_trajectory(args.traj, cfg.solver.params.kappa, cfg.solver.params.alpha)
    big = gevrey_transform(traj, cfg.gevrey, noise_floor=cfg.noise_floor or None, on_overflow="skip")
    for t, shell in big.extras["refused"]:
        log.warning("Gevrey weight refused at t=%.6g (shell |k|_1=%d)", t, shell)
    if len(big) == 0:
        raise InsufficientDataError("every snapshot exceeds the Gevrey cap")
    radii = {r.time: r for r in trajectory_radii(traj, cfg.noise_floor or 1e-14)}
    frame = build_frame(traj.grid)
    reports = []
    for spec in cfg.norms:
        rep = k_g_e1_norms(big, spec, frame, [radii[t] for t in big.times])
        try:
            fit = decay_rate_fit(traj, 1, "linf")
            rep.decay_slopes = {"k1_linf": fit.slope, "k1_linf_r2": fit.r2, "k1_linf_power_law": fit.power_law}
        except InsufficientDataError as e:
            log.info("decay fit skipped: %s", e)
        reports.append(rep)
    out = Path(args.out) if args.out else Path(args.traj).with_suffix("")
    out.parent.mkdir(parents=True, exist_ok=True)
    for i, rep in enumerate(reports):
        stem = out if len(reports) == 1 else out.with_name(f"{out.name}_{i}")
        if args.format in ("json", "both"):
            Path(f"{stem}.json").write_bytes(emit_report(rep, "json"))
        if args.format in ("csv", "both"):
            Path(f"{stem}.csv").write_bytes(emit_report(rep, "csv"))
        print(f"analyze: K={rep.k_norm} G={rep.g_norm} E1={rep.e1_norm} -> {stem}.*")
    return 0


def _parse_tol(items):
    out = {}
    for item in items or []:
        name, _, value = item.partition("=")
        out[name] = float(value)
    return out


def cmd_verify(args):
    results = run_verify(args.suite, seed=args.seed, tolerances=_parse_tol(args.tol))
    print(format_results(results))
    failed = [r for r in results if not r.passed]
    print(f"{args.suite}: {len(results) - len(failed)}/{len(results)} passed")
    return 1 if failed else 0


def cmd_inspect(args):
    f, t, gamma = read_snapshot(args.path)
    r = analyticity_radius(f, t)
    info = {
        "n": f.grid.n, "box_length": f.grid.box_length, "time": t, "gamma": gamma,
        "mean": float(f.coeffs[0, 0].real), "l2": f.l2(), "linf_grid": float(np.abs(f.values()).max()),
        "hermitian_defect": f.hermitian_defect(), "radius": r.radius, "radius_fit_quality": r.fit_quality,
    }
    print(json.dumps({k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in info.items()}, indent=2))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="qg", description="Dissipative QG pseudo-spectral suite")
    p.add_argument("--threads", type=int, help="cap FFT worker threads (sets QG_THREADS)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate a configured run")
    r.add_argument("--config", required=True)
    r.add_argument("--output-dir")
    r.set_defaults(func=cmd_run)

    pc = sub.add_parser("picard", help="solve the mild formulation by Picard iteration")
    pc.add_argument("--config", required=True)
    pc.add_argument("--output-dir")
    pc.set_defaults(func=cmd_picard)

    a = sub.add_parser("analyze", help="Gevrey norms, radii and decay fits of a trajectory")
    a.add_argument("--traj", required=True)
    a.add_argument("--spec", required=True)
    a.add_argument("--out", help="output path stem (default: trajectory path without suffix)")
    a.add_argument("--format", choices=("json", "csv", "both"), default="both")
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("verify", help="run an invariant suite")
    v.add_argument("suite", choices=SUITES)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--tol", action="append", metavar="NAME=VALUE", help="tighten a tolerance")
    v.set_defaults(func=cmd_verify)

    i = sub.add_parser("inspect-snapshot", help="print a snapshot header and summary")
    i.add_argument("path")
    i.set_defaults(func=cmd_inspect)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads is not None:
        os.environ["QG_THREADS"] = str(max(1, args.threads))
    try:
        return args.func(args)
    except QGError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
