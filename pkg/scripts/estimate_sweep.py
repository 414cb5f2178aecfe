#!/usr/bin/env python3
"""Elliptic-estimate sweep: solve over a (kappa, rho) grid and report the
ratio families with boundedness verdicts.

    python3 scripts/estimate_sweep.py [out_dir] [kappas] [rhos]

defaults: out_dir=sweep_out, kappas=2,4,8,16, rhos=1.0
"""

import sys

from gl2d.harness import SweepConfig, run_sweep


def main(argv):
    out = argv[1] if len(argv) > 1 else "sweep_out"
    kappas = tuple(float(x) for x in (argv[2] if len(argv) > 2 else "2,4,8,16").split(","))
    rhos = tuple(float(x) for x in (argv[3] if len(argv) > 3 else "1.0").split(","))
    cfg = SweepConfig(kappas=kappas, rhos=rhos, n_min=128, n_max=256,
                      grad_tol=3e-5, seed=101, out_dir=out)
    res = run_sweep(cfg)
    for row in res.rows:
        tag = "ok" if row.converged else "NOT CONVERGED"
        print(f"kappa={row.kappa:<5g} H={row.H:<7.3f} n={row.grid_n:<4d} [{tag}] "
              + "  ".join(f"{f}={row.report[f].ratio:7.3f}"
                          for f in ("dd1", "caf1", "caf2", "a2", "af1")
                          if row.report and f in row.report))
    print()
    for name, v in res.verdicts.items():
        if v.get("evaluated"):
            extra = f" spread={v['spread']:.2f}" if "spread" in v else ""
            print(f"{name}: {'PASS' if v.get('pass') else 'FAIL'}{extra}")
    print(f"\nwrote {res.paths['csv']}, {res.paths['json']}, ratio_*.dat, plot_ratios.gp")
    return 0 if res.passed else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv))
