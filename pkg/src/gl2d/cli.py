"""Command-line front end.

Subcommands: solve, sweep, spectral, blowup, check-identity, report.
Configuration comes from a TOML file (--config), with command-line flags
overriding config keys; unknown config keys are rejected.  Every output file
starts with a provenance header (tool version, config hash, seed), and
identical invocations produce byte-identical outputs.

Exit codes: 0 all verdicts pass; 1 a verdict failed; 2 usage/config error;
3 solver or eigensolver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:            # python < 3.11
    import tomli as tomllib

from . import __version__
from .errors import ConfigError, SolverError
from .grid import Grid
from .harness import SweepConfig, reaggregate, run_sweep
from .identities import curl_transform_check, ibp_identity_report, lemma_intparts_ratio
from .io import config_hash, provenance_lines, save_frame, save_state
from .norms import argmax_distance
from .solver import SolveOptions, grid_for, solve_cascade
from .spectral import (FiberProblem, halfplane_ground_state, landau_levels,
                       mu_of_xi, nonlinear_limit_probe, theta0)
from .blowup import limit_residual, rescale

EXIT_OK, EXIT_VERDICT, EXIT_USAGE, EXIT_NOCONV = 0, 1, 2, 3

_KNOWN_SECTIONS = {
    "solve": {"kappa", "H", "n", "L", "grad_tol", "max_iter", "init", "seed",
              "noise_amp", "method"},
    "sweep": {"kappas", "rhos", "Lx", "Ly", "points_per_length", "n_min", "n_max",
              "grad_tol", "max_iter", "alpha", "p", "corner_exclusion", "seed",
              "out_dir", "jobs", "save_states", "include_nonconverged",
              "trend_verdict", "ratio_spread_max", "dist_bound", "lam_min", "lam_max"},
    "spectral": {"tol", "T", "n", "R", "ppu", "lam", "S", "geometry", "count", "seed"},
    "blowup": {"kappa", "H", "n", "L", "R", "ppu", "point", "seed", "grad_tol"},
    "check_identity": {"kappa", "H", "ns", "L", "p1", "p2", "R0", "t_max",
                       "chart_n", "seed", "grad_tol"},
}


def _load_config(path, section):
    if path is None:
        return {}
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}")
    cfg = raw.get(section, {})
    for other in raw:
        if other not in _KNOWN_SECTIONS:
            raise ConfigError(f"unknown config section [{other}]")
    unknown = set(cfg) - _KNOWN_SECTIONS[section]
    if unknown:
        raise ConfigError(f"unknown config key(s) in [{section}]: {sorted(unknown)}")
    return cfg


def _merge(cfg, args, keys):
    """Flags override config; config overrides defaults (None flags skipped)."""
    out = dict(cfg)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    return out


def _write_kv(path, pairs, cfg_hash, seed):
    lines = provenance_lines(cfg_hash, seed)
    lines += [f"{k},{v}" for k, v in pairs]
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def _cmd_solve(args):
    cfg = _merge(_load_config(args.config, "solve"), args,
                 ["kappa", "H", "n", "L", "grad_tol", "init", "seed", "noise_amp"])
    kappa = float(cfg.get("kappa", 4.0))
    H = float(cfg.get("H", 4.0))
    L = float(cfg.get("L", 1.5))
    seed = int(cfg.get("seed", 1234))
    n = cfg.get("n")
    grid = (Grid(int(n), int(n), L, L) if n
            else grid_for(kappa, H, L, points_per_length=6))
    opts = SolveOptions(grad_tol=float(cfg.get("grad_tol", 1e-5)),
                        init=str(cfg.get("init", "seeded-noise")),
                        noise_amp=float(cfg.get("noise_amp", 0.1)), seed=seed)
    state, rr, stats = solve_cascade(grid, kappa, H, opts)
    from .harness import evaluate, evaluate_asymptotic
    rep = evaluate(state, rr)
    rep.update(evaluate_asymptotic(state))
    os.makedirs(args.out, exist_ok=True)
    h = config_hash(cfg)
    save_state(os.path.join(args.out, "state.npz"), state, opts,
               extra={"stats": {k: v for k, v in stats.items() if k != "levels"}})
    pairs = [("kappa", kappa), ("H", H), ("grid_n", grid.nx),
             ("converged", int(stats["converged"])), ("energy", f"{stats['energy']:.17g}"),
             ("sup_psi", f"{float(np.abs(state.psi).max()):.17g}")]
    pairs += [(f"{k}_ratio", f"{e.ratio:.17g}") for k, e in rep.items()]
    _write_kv(os.path.join(args.out, "solve.csv"), pairs, h, seed)
    print(f"converged={stats['converged']} energy={stats['energy']:.6f} "
          f"sup|psi|={float(np.abs(state.psi).max()):.6f}")
    if not stats["converged"]:
        return EXIT_NOCONV
    return EXIT_OK


def _cmd_sweep(args):
    cfg = _merge(_load_config(args.config, "sweep"), args,
                 ["seed", "jobs", "out_dir", "grad_tol"])
    if args.kappas:
        cfg["kappas"] = [float(x) for x in args.kappas.split(",")]
    if args.rhos:
        cfg["rhos"] = [float(x) for x in args.rhos.split(",")]
    if "kappas" not in cfg or "rhos" not in cfg:
        raise ConfigError("sweep requires kappas and rhos (config or flags)")
    if args.out != ".":
        cfg["out_dir"] = args.out
    cfg.setdefault("out_dir", "sweep_out")
    sc = SweepConfig(kappas=tuple(cfg.pop("kappas")), rhos=tuple(cfg.pop("rhos")),
                     **{k: v for k, v in cfg.items()})
    result = run_sweep(sc)
    bad = [r for r in result.rows if r.errored or not r.converged]
    for name, v in result.verdicts.items():
        if v.get("evaluated", False):
            print(f"{name}: {'PASS' if v.get('pass') else 'FAIL'} "
                  f"({json.dumps({k: vv for k, vv in v.items() if k not in ('evaluated', 'groups')}, default=str)})")
    print(f"outputs: {result.paths['csv']}")
    if any(r.errored for r in result.rows):
        return EXIT_NOCONV
    if not result.passed:
        return EXIT_VERDICT
    if bad and not sc.include_nonconverged:
        return EXIT_NOCONV
    return EXIT_OK


def _cmd_spectral(args):
    cfg = _merge(_load_config(args.config, "spectral"), args, ["seed"])
    os.makedirs(args.out, exist_ok=True)
    h = config_hash(cfg)
    seed = int(cfg.get("seed", 99))
    rc = EXIT_OK
    did = False
    if args.theta0:
        did = True
        res = theta0(float(cfg.get("tol", 1e-6)), float(cfg.get("T", 12.0)),
                     int(cfg.get("n", 2000)))
        print(f"theta0={res.theta0:.8f} xi_opt={res.xi_opt:.8f}")
        lines = provenance_lines(h, seed) + ["xi,mu,n,T"]
        lines += [f"{xi:.17g},{mu:.17g},{res.meta['n']},{res.meta['T']:.17g}"
                  for xi, mu in res.mu_samples]
        with open(os.path.join(args.out, "mu_table.csv"), "w") as f:
            f.write("\n".join(lines) + "\n")
        if not (0 < res.theta0 < 1):
            rc = EXIT_VERDICT
    if args.landau:
        did = True
        vals = landau_levels(int(cfg.get("count", 3)), float(cfg.get("T", 12.0)),
                             int(cfg.get("n", 4000)))
        print("landau levels:", " ".join(f"{v:.6f}" for v in vals))
        _write_kv(os.path.join(args.out, "landau.csv"),
                  [(f"level_{i}", f"{v:.17g}") for i, v in enumerate(vals)], h, seed)
    if args.mu_table and not args.theta0:
        did = True
        T, n = float(cfg.get("T", 12.0)), int(cfg.get("n", 2000))
        lines = provenance_lines(h, seed) + ["xi,mu,n,T"]
        for xi in np.linspace(-2.0, 4.0, 121):
            lines.append(f"{xi:.17g},{mu_of_xi(FiberProblem(float(xi), T, n)):.17g},{n},{T:.17g}")
        with open(os.path.join(args.out, "mu_table.csv"), "w") as f:
            f.write("\n".join(lines) + "\n")
        print(f"mu table written to {args.out}/mu_table.csv")
    if args.halfplane:
        did = True
        val = halfplane_ground_state(float(cfg.get("R", 12.0)), int(cfg.get("ppu", 8)))
        print(f"halfplane ground energy: {val:.8f}")
        if not (0 < val < 1):
            rc = EXIT_VERDICT
    if args.probe:
        did = True
        pr = nonlinear_limit_probe(float(cfg.get("lam", 0.5)), float(cfg.get("S", 1.0)),
                                   float(cfg.get("R", 8.0)),
                                   str(cfg.get("geometry", "halfplane")),
                                   ppu=int(cfg.get("ppu", 8)), seed=seed)
        print(f"probe sup|phi|={pr.sup_norm:.3e} coercive={pr.coercive} "
              f"mu_R={pr.mu_R:.6f} converged={pr.converged}")
        if not pr.coercive and not pr.converged:
            rc = EXIT_NOCONV
    if not did:
        raise ConfigError("spectral: choose at least one of "
                          "--theta0/--landau/--mu-table/--halfplane/--probe")
    return rc


def _cmd_blowup(args):
    cfg = _merge(_load_config(args.config, "blowup"), args,
                 ["kappa", "H", "n", "L", "R", "seed", "grad_tol"])
    kappa = float(cfg.get("kappa", 8.0))
    H = float(cfg.get("H", 8.0))
    L = float(cfg.get("L", 1.0))
    R = float(cfg.get("R", 4.0))
    seed = int(cfg.get("seed", 1234))
    n = cfg.get("n")
    grid = (Grid(int(n), int(n), L, L) if n
            else grid_for(kappa, H, L, points_per_length=8))
    opts = SolveOptions(grad_tol=float(cfg.get("grad_tol", 1e-5)), seed=seed)
    state, rr, stats = solve_cascade(grid, kappa, H, opts)
    if not stats["converged"]:
        print("solver did not converge", file=sys.stderr)
        return EXIT_NOCONV
    os.makedirs(args.out, exist_ok=True)
    h = config_hash(cfg)
    points = []
    P, dist = argmax_distance(grid, state.psi)
    points.append(("argmax", P))
    if args.point:
        x, y = (float(v) for v in args.point.split(","))
        points.append(("point", (x, y)))
    pairs = [("kappa", kappa), ("H", H), ("grid_n", grid.nx)]
    for tag, pt in points:
        fr = rescale(state, pt, R, ppu=int(cfg.get("ppu", 8)))
        resid = limit_residual(fr)
        save_frame(os.path.join(args.out, f"frame_{tag}.npz"), fr)
        pairs += [(f"{tag}_case", fr.case), (f"{tag}_residual", f"{resid:.17g}"),
                  (f"{tag}_S", f"{fr.S:.17g}")]
        print(f"{tag}: case={fr.case} P=({pt[0]:.4f},{pt[1]:.4f}) "
              f"limit residual={resid:.4e}")
    _write_kv(os.path.join(args.out, "blowup.csv"), pairs, h, seed)
    return EXIT_OK


def _cmd_check_identity(args):
    cfg = _merge(_load_config(args.config, "check_identity"), args,
                 ["kappa", "H", "L", "p1", "p2", "seed", "grad_tol"])
    kappa = float(cfg.get("kappa", 4.0))
    H = float(cfg.get("H", 4.0))
    L = float(cfg.get("L", 2.0))
    seed = int(cfg.get("seed", 1234))
    ns = [int(v) for v in str(cfg.get("ns", "64,128")).split(",")]
    p1, p2 = float(cfg.get("p1", 1.0)), float(cfg.get("p2", math.inf))
    os.makedirs(args.out, exist_ok=True)
    h = config_hash(cfg)
    opts = SolveOptions(grad_tol=float(cfg.get("grad_tol", 1e-5)), seed=seed)
    pairs = []
    gaps = []
    rc = EXIT_OK
    for n in ns:
        grid = Grid(n, n, L, L)
        state, rr, stats = solve_cascade(grid, kappa, H, opts)
        if not stats["converged"]:
            rc = EXIT_NOCONV
        rep = ibp_identity_report(state)
        ratio = lemma_intparts_ratio(state, p1, p2)
        gaps.append(rep.gap)
        pairs += [(f"gap_{n}", f"{rep.gap:.17g}"), (f"lemma_ratio_{n}", f"{ratio:.17g}"),
                  (f"bc_ok_{n}", int(rep.bc_ok))]
        print(f"n={n}: ibp gap={rep.gap:.4e} lemma ratio={ratio:.4f} bc_ok={rep.bc_ok}")
    # chart transformation study
    dev = curl_transform_check(float(cfg.get("R0", 1.0)), float(cfg.get("t_max", 0.5)),
                               lambda x, y: (-y / 2, x / 2),
                               lambda x, y: np.ones_like(x),
                               n=int(cfg.get("chart_n", 256)))
    pairs.append(("curl_chart_deviation", f"{dev:.17g}"))
    print(f"curl transform deviation: {dev:.3e}")
    _write_kv(os.path.join(args.out, "identity.csv"), pairs, h, seed)
    if len(gaps) >= 2 and not all(a > b for a, b in zip(gaps, gaps[1:])):
        rc = max(rc, EXIT_VERDICT)
    return rc


def _cmd_report(args):
    verdicts = reaggregate(args.inputs)
    ok = True
    for name, v in verdicts.items():
        if v.get("evaluated", False):
            print(f"{name}: {'PASS' if v.get('pass') else 'FAIL'}")
            ok &= bool(v.get("pass"))
    out = os.path.join(args.out, "verdicts.json")
    os.makedirs(args.out, exist_ok=True)
    with open(out, "w") as f:
        json.dump(verdicts, f, indent=1, sort_keys=True, default=str)
        f.write("\n")
    return EXIT_OK if ok else EXIT_VERDICT


def build_parser():
    p = argparse.ArgumentParser(prog="gl2d",
                                description="2D Ginzburg-Landau numerical laboratory")
    p.add_argument("--version", action="version", version=f"gl2d {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="TOML config file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--jobs", type=int, default=None)

    sp = sub.add_parser("solve", help="one GL solve plus estimate report")
    common(sp)
    for flag, typ in [("--kappa", float), ("--H", float), ("--n", int),
                      ("--L", float), ("--grad-tol", float), ("--init", str),
                      ("--noise-amp", float)]:
        sp.add_argument(flag, dest=flag.lstrip("-").replace("-", "_"), type=typ)
    sp.set_defaults(func=_cmd_solve)

    sp = sub.add_parser("sweep", help="run a (kappa, H) sweep")
    common(sp)
    sp.add_argument("--kappas", help="comma-separated kappa values")
    sp.add_argument("--rhos", help="comma-separated kappa/H values")
    sp.add_argument("--grad-tol", dest="grad_tol", type=float)
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("spectral", help="spectral constants and probes")
    common(sp)
    sp.add_argument("--theta0", action="store_true")
    sp.add_argument("--landau", action="store_true")
    sp.add_argument("--mu-table", dest="mu_table", action="store_true")
    sp.add_argument("--halfplane", action="store_true")
    sp.add_argument("--probe", action="store_true")
    sp.set_defaults(func=_cmd_spectral)

    sp = sub.add_parser("blowup", help="rescale at argmax (and a given point)")
    common(sp)
    for flag, typ in [("--kappa", float), ("--H", float), ("--n", int),
                      ("--L", float), ("--R", float), ("--grad-tol", float)]:
        sp.add_argument(flag, dest=flag.lstrip("-").replace("-", "_"), type=typ)
    sp.add_argument("--point", help="x,y of an extra rescaling point")
    sp.set_defaults(func=_cmd_blowup)

    sp = sub.add_parser("check-identity", help="integration-by-parts and chart checks")
    common(sp)
    for flag, typ in [("--kappa", float), ("--H", float), ("--L", float),
                      ("--p1", float), ("--p2", float), ("--grad-tol", float)]:
        sp.add_argument(flag, dest=flag.lstrip("-").replace("-", "_"), type=typ)
    sp.add_argument("--ns", help="comma-separated grid sizes")
    sp.set_defaults(func=_cmd_check_identity)

    sp = sub.add_parser("report", help="re-aggregate an existing sweep CSV")
    common(sp)
    sp.add_argument("--inputs", required=True, help="sweep.csv to re-aggregate")
    sp.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0,) else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
