"""Command-line front end: ``ekdiff {mwright,ek,green,solve,simulate,verify}``.

Exit codes: 0 success, 1 verification failure, 2 usage or parameter
error, 3 numerical failure.  CSV files use '.' decimals, '\\n' line
endings, shortest round-trip floats and '#' for comment lines.  Every
run that writes files finishes by writing a JSON manifest next to them.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, ekops, greenfn, mwright, sampler, solver, verify
from ._svg import line_plot
from .errors import DiracOrder, DomainError, EKDiffError

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def fmt(v) -> str:
    """Shortest decimal string that parses back to the same double."""
    return repr(float(v))


def write_csv(path: Path, header, rows, comments=()):
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(c if isinstance(c, str) else fmt(c) for c in row) + "\n")
        for c in comments:
            fh.write(f"# {c}\n")


def _emit_csv(out, header, rows, comments=()):
    if out is None or str(out) == "-":
        sys.stdout.write(",".join(header) + "\n")
        for row in rows:
            sys.stdout.write(",".join(c if isinstance(c, str) else fmt(c) for c in row) + "\n")
        for c in comments:
            sys.stdout.write(f"# {c}\n")
        return None
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_csv(path, header, rows, comments)
    return path


def write_manifest(path: Path, command: str, params: dict, outputs, started: float, seed=None):
    manifest = {
        "command": command,
        "parameters": params,
        "seed": seed,
        "version": __version__,
        "outputs": [str(p) for p in outputs],
        "duration_seconds": round(time.perf_counter() - started, 6),
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="ascii")
    return path


def _range(text: str):
    try:
        a, b = text.split(":")
        return float(a), float(b)
    except ValueError:
        raise UsageError(f"--range expects a:b, got {text!r}") from None


def _params(args) -> greenfn.DiffusionParams:
    return greenfn.DiffusionParams(args.alpha, args.beta)


# ---------------------------------------------------------------------------
# commands


def cmd_mwright(args, started):
    lo, hi = _range(args.range)
    if args.n < 1 or hi < lo or lo < 0:
        raise UsageError("need n >= 1 and 0 <= a <= b")
    order = mwright.WrightOrder(args.nu)
    if order.is_dirac:
        raise DiracOrder("nu = 1: M_1 is the Dirac mass at z = 1 and has no pointwise values")
    z = np.linspace(lo, hi, args.n)
    vals = np.atleast_1d(mwright.mwright_eval(args.nu, z))
    path = _emit_csv(args.out, ("z", "M_nu"), zip(z, vals))
    if path is not None:
        params = {"nu": args.nu, "range": [lo, hi], "n": args.n}
        write_manifest(path.with_name(path.name + ".manifest.json"), "mwright", params, [path], started)


_PHI = {
    "power": lambda c: ekops.SampledFunction.power(c),
    "exp": lambda c: ekops.SampledFunction(lambda t: np.exp(-c * t)),
    "cos": lambda c: ekops.SampledFunction(lambda t: np.cos(c * t)),
}


def cmd_ek(args, started):
    lo, hi = _range(args.range)
    if args.n < 1 or not 0 < lo <= hi:
        raise UsageError("need n >= 1 and 0 < a <= b")
    p = ekops.EKParams(args.gamma, args.mu, args.eta)
    phi = _PHI[args.phi](args.c)
    t = np.linspace(lo, hi, args.n)
    if args.op == "integral":
        vals = np.atleast_1d(ekops.ek_integral(p, phi, t))
    else:
        vals = np.array([ekops.ek_derivative(p, phi, float(ti)) for ti in t])
    header = ["t", "value"]
    rows = [[ti, v] for ti, v in zip(t, vals)]
    if args.phi == "power" and args.op == "integral":
        k = ekops.ek_power_oracle(p, args.c)
        header.append("power_law_oracle")
        for row in rows:
            row.append(k * row[0] ** args.c)
    path = _emit_csv(args.out, header, rows)
    if path is not None:
        params = {"op": args.op, "gamma": p.gamma, "mu": p.mu, "eta": p.eta, "phi": args.phi, "c": args.c,
                  "range": [lo, hi], "n": args.n}
        write_manifest(path.with_name(path.name + ".manifest.json"), "ek", params, [path], started)


def cmd_green(args, started):
    p = _params(args)
    if not args.t > 0:
        raise UsageError("--t must be positive")
    x_max = args.x_max if args.x_max is not None else greenfn.profile_extent(p, args.t)
    x = np.linspace(-x_max, x_max, args.nx)
    g = np.atleast_1d(greenfn.ggbm_green(p, x, args.t))
    var = greenfn.green_variance(p, args.t)
    path = _emit_csv(args.out, ("x", "G"), zip(x, g), [f"variance={fmt(var)}"])
    outputs = [path] if path is not None else []
    if args.svg:
        svg = Path(args.svg)
        svg.write_text(line_plot([(f"t={args.t:g}", x, g)], f"Green function alpha={p.alpha:g} beta={p.beta:g}",
                                 "x", "G(x,t)"), encoding="ascii")
        outputs.append(svg)
    if outputs:
        first = outputs[0]
        params = {"alpha": p.alpha, "beta": p.beta, "t": args.t, "x_max": x_max, "nx": args.nx}
        write_manifest(first.with_name(first.name + ".manifest.json"), "green", params, outputs, started)


def cmd_solve(args, started):
    p = _params(args)
    t_end = args.t_end
    if args.x_max is not None:
        grid = solver.Grid1D(-args.x_max, args.x_max, args.nx)
    else:
        grid = solver.default_grid(p, t_end, args.nx)
    t0 = args.t0 if args.t0 is not None else max(0.01, solver.min_resolved_t0(p, grid))
    cfg = solver.SolverConfig(p, grid, t0=t0, t_end=t_end, nt=args.nt, scheme=args.scheme,
                              mesh=args.mesh, sampling=args.sampling)
    field = solver.solve(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    levels = list(range(0, cfg.nt, max(1, args.every)))
    if levels[-1] != cfg.nt - 1:
        levels.append(cfg.nt - 1)
    width = max(4, len(str(cfg.nt - 1)))
    for k in levels:
        path = out / f"level_{k:0{width}d}.csv"
        write_csv(path, ("x", "P"), zip(field.x, field.values[k]), [f"t={fmt(field.times[k])}"])
        outputs.append(path)
    diag = out / "diagnostics.csv"
    write_csv(diag, ("t", "mass", "variance"), zip(field.times, field.mass, field.variance))
    outputs.append(diag)
    if args.svg:
        svg = out / "solution.svg"
        show = sorted(set(np.linspace(0, cfg.nt - 1, 5).round().astype(int)))
        series = [(f"t={field.times[k]:.3g}", field.x, field.values[k]) for k in show]
        svg.write_text(line_plot(series, f"P(x,t) alpha={p.alpha:g} beta={p.beta:g}", "x", "P"), encoding="ascii")
        outputs.append(svg)
    params = {"alpha": p.alpha, "beta": p.beta, "t0": t0, "t_end": t_end, "nt": cfg.nt,
              "x_min": grid.x_min, "x_max": grid.x_max, "nx": grid.nx, "scheme": cfg.scheme,
              "mesh": cfg.mesh, "sampling": cfg.sampling, "ic_mode": cfg.ic_mode}
    write_manifest(out / "manifest.json", "solve", params, outputs, started)
    if not args.quiet:
        ref = greenfn.ggbm_green(p, field.x, t_end)
        print(f"{len(levels)} levels written to {out}; L1 distance to the Green function at t_end "
              f"{field.l1_error(ref):.3e}; mass drift {np.max(np.abs(field.mass_drift)):.1e}")


def cmd_simulate(args, started):
    p = _params(args)
    if args.nodes < 2:
        raise UsageError("--nodes must be at least 2")
    t = np.linspace(0.0, args.t_end, args.nodes)
    cfg = sampler.EnsembleConfig(p, t, args.paths, args.seed)
    ens = sampler.ggbm_paths(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = ["path", "tau"] + [f"x{k}" for k in range(t.size)]
    paths_csv = out / "paths.csv"
    rows = ([str(i), tau, *row] for i, (tau, row) in enumerate(zip(ens.tau, ens.paths)))
    write_csv(paths_csv, header, rows, ["columns x<k> hold the path at t = " + " ".join(fmt(v) for v in t)])
    outputs = [paths_csv]
    if args.paths >= 100:
        st = sampler.ensemble_stats(ens, keep=False)
        with np.errstate(divide="ignore", invalid="ignore"):
            amp = np.where(t > 0, st.variance_curve / t ** p.alpha, math.nan)
        stats_csv = out / "stats.csv"
        law = 2.0 / math.gamma(p.beta + 1.0)
        write_csv(stats_csv, ("t", "variance", "variance_over_t_alpha", "slope"),
                  ((ti, v, a, st.loglog_slope) for ti, v, a in zip(t, st.variance_curve, amp)),
                  [f"predicted variance_over_t_alpha={fmt(law)}", f"predicted slope={fmt(p.alpha)}"])
        outputs.append(stats_csv)
        if args.svg:
            svg = out / "variance.svg"
            pos = t > 0
            series = [("ensemble", t[pos], st.variance_curve[pos]),
                      ("2 t^alpha / Gamma(beta+1)", t[pos], law * t[pos] ** p.alpha)]
            svg.write_text(line_plot(series, f"variance alpha={p.alpha:g} beta={p.beta:g}", "t", "<x^2>"),
                           encoding="ascii")
            outputs.append(svg)
        if not args.quiet:
            print(f"{args.paths} paths written to {out}; log-log slope {st.loglog_slope:.4f} (alpha = {p.alpha:g})")
    elif not args.quiet:
        print(f"{args.paths} paths written to {out}; statistics need at least 100 paths")
    params = {"alpha": p.alpha, "beta": p.beta, "paths": args.paths, "nodes": args.nodes, "t_end": args.t_end,
              "fbm_method": cfg.fbm_method, "streams": ens.rng_provenance["streams"]}
    write_manifest(out / "manifest.json", "simulate", params, outputs, started, seed=args.seed)


def cmd_verify(args, started):
    report = None if args.quiet else (lambda r: print(r.line, flush=True))
    results = verify.run_checks(args.level, fault=args.inject_fault, report=report)
    n_fail = sum(not r.passed for r in results)
    if not args.quiet:
        print(f"{len(results) - n_fail} passed, {n_fail} failed")
    for r in results:
        if not r.passed:
            print(f"FAILED: {r.key}", file=sys.stderr)
    return EXIT_VERIFY if n_fail else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ekdiff", description="Erdelyi-Kober fractional diffusion toolkit")
    ap.add_argument("--version", action="version", version=f"ekdiff {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def family(sp):
        sp.add_argument("--alpha", type=float, required=True, help="time-stretching exponent, 0 < alpha <= 2")
        sp.add_argument("--beta", type=float, required=True, help="memory order, 0 < beta <= 1")

    sp = sub.add_parser("mwright", help="tabulate the M-Wright function")
    sp.add_argument("--nu", type=float, required=True)
    sp.add_argument("--range", default="0:5", help="z interval a:b")
    sp.add_argument("--n", type=int, default=101, help="number of rows")
    sp.add_argument("--out", help="CSV file (stdout if omitted)")
    sp.set_defaults(func=cmd_mwright)

    sp = sub.add_parser("ek", help="apply an Erdelyi-Kober integral or derivative to a test function")
    sp.add_argument("--op", choices=("integral", "derivative"), default="integral")
    sp.add_argument("--gamma", type=float, default=0.0)
    sp.add_argument("--mu", type=float, required=True)
    sp.add_argument("--eta", type=float, default=1.0)
    sp.add_argument("--phi", choices=tuple(_PHI), default="power", help="t^c, exp(-c t) or cos(c t)")
    sp.add_argument("--c", type=float, default=1.0)
    sp.add_argument("--range", default="0.1:2", help="t interval a:b with a > 0")
    sp.add_argument("--n", type=int, default=20, help="number of rows")
    sp.add_argument("--out", help="CSV file (stdout if omitted)")
    sp.set_defaults(func=cmd_ek)

    sp = sub.add_parser("green", help="tabulate the Green function at one time")
    family(sp)
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--x-max", type=float, help="half-width (default: where G falls to 1e-12 of its peak)")
    sp.add_argument("--nx", type=int, default=801)
    sp.add_argument("--out", help="CSV file (stdout if omitted)")
    sp.add_argument("--svg", help="also write a plot to this file")
    sp.set_defaults(func=cmd_green)

    sp = sub.add_parser("solve", help="solve the governing integral equation from the Green function at t0")
    family(sp)
    sp.add_argument("--t0", type=float, help="start time (default: 0.01 or the smallest resolved value)")
    sp.add_argument("--t-end", type=float, default=1.0)
    sp.add_argument("--nt", type=int, default=200, help="time levels in stretched time, ends included")
    sp.add_argument("--nx", type=int, default=401)
    sp.add_argument("--x-max", type=float, help="half-width (default: 6 standard deviations at t_end)")
    sp.add_argument("--every", type=int, default=1, help="write every k-th level (the last is always written)")
    sp.add_argument("--scheme", choices=solver.SCHEMES, default="linear")
    sp.add_argument("--mesh", choices=solver.MESHES, default="uniform")
    sp.add_argument("--sampling", choices=solver.SAMPLINGS, default="cell")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--svg", action="store_true", help="also write solution.svg")
    sp.add_argument("--quiet", action="store_true")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("simulate", help="sample ggBm paths")
    family(sp)
    sp.add_argument("--paths", type=int, default=10000)
    sp.add_argument("--nodes", type=int, default=33, help="time nodes on [0, t_end], t = 0 included")
    sp.add_argument("--t-end", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--svg", action="store_true", help="also write variance.svg")
    sp.add_argument("--quiet", action="store_true")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="run the self-checks")
    sp.add_argument("--level", choices=("quick", "full"), default="quick")
    sp.add_argument("--inject-fault", help=argparse.SUPPRESS)
    sp.add_argument("--quiet", action="store_true")
    sp.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    started = time.perf_counter()
    try:
        code = args.func(args, started)
    except (UsageError, DomainError) as exc:
        print(f"ekdiff {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EKDiffError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"ekdiff {args.command}: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"ekdiff {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if code is None else code


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
