"""Inequality evaluation on solver outputs and deterministic (kappa, H) sweeps.

Every estimate row records LHS, RHS (with every existential constant set to
1) and their ratio; a sweep's pass/fail verdicts only ever assert boundedness
of ratio families (max/min <= 10 across converged rows) or monotone trends,
never closeness to a specific constant.

Families evaluated per state:

    infini   sup |psi|                      <=  1
    cine     ||p_{kB A} psi||_2             <=  kappa ||psi||_2
    ineqimp  ||curl A - 1||_2               <=  (1/H) ||psi||_inf ||psi||_2
    dd1      sum ||D_j D_k psi||_2          <=  (1 + kH + k^2) ||psi||_2
    caf1     ||curl A - 1||_{C^0,a}         <=  (1+kH+k^2)/(kH) ||psi||_2 ||psi||_inf
    caf2     ||curl A - 1||_{W^1,p}         <=  same
    a2       ||A - F||_{W^2,p}              <=  same
    af1      ||A - F||_{C^1,a}              <=  same

and in the asymptotic regime (kappa >= 4, kappa/H in a fixed band):

    first    sup |p psi|                    <=  sqrt(kH) ||psi||_inf
    second   ||curl A - 1||_{C^1}           <=  ||psi||_inf^2 / sqrt(kH)
    third    ||curl A - 1||_{C^2}           <=  ||psi||_inf^2
    prop41   sup |psi|  (decay metric for the near-critical trend)
    prop44   sqrt(kH) * dist(argmax, wall)  <=  1   (C measured, not asserted)
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import ConfigError
from .grid import covariant_diff, discrete_curl, second_covariant
from .io import config_hash, provenance_lines, save_state
from .norms import NormSpec, argmax_distance, cell_lattice, norm
from .poisson import reference_potential
from .solver import (GLState, ResidualReport, SolveOptions, grid_for, residuals,
                     solve_cascade)

FAMILIES = ("infini", "cine", "ineqimproved", "dd1", "caf1", "caf2", "a2", "af1")
ASYMPTOTIC = ("first", "second", "third", "prop41", "prop44")
BOUNDED_FAMILIES = ("dd1", "caf1", "caf2", "a2", "af1")


@dataclass
class EstimateRow:
    id: str
    lhs: float
    rhs: float
    flag: str = "ok"              # ok | indeterminate | out-of-regime | degenerate
    meta: dict = field(default_factory=dict)

    @property
    def ratio(self):
        if self.flag != "ok" or self.rhs == 0.0:
            return float("nan")
        return self.lhs / self.rhs


class EstimateReport(dict):
    """Mapping id -> EstimateRow, insertion ordered."""

    def add(self, id_, lhs, rhs, flag="ok", **meta):
        if lhs < 0 or rhs < 0:
            raise ValueError(f"{id_}: LHS/RHS must be nonnegative")
        if rhs == 0.0 and flag == "ok":
            flag = "indeterminate"
        self[id_] = EstimateRow(id_, float(lhs), float(rhs), flag, meta)
        return self[id_]


def _l2w(grid, f):
    return float(np.sqrt((grid.node_weights() * np.abs(f) ** 2).sum()))


def _kinetic_l2(state: GLState):
    g = state.grid
    dx = covariant_diff(g, state.psi, state.A, state.B, 1)
    dy = covariant_diff(g, state.psi, state.A, state.B, 2)
    return float(np.sqrt((g.xedge_weights() * np.abs(dx) ** 2).sum()
                         + (g.yedge_weights() * np.abs(dy) ** 2).sum()))


def _dpsi_sup(state: GLState):
    """sup over cells of |(D psi)| with both components averaged to centers."""
    g = state.grid
    dx = covariant_diff(g, state.psi, state.A, state.B, 1)
    dy = covariant_diff(g, state.psi, state.A, state.B, 2)
    d1c = 0.5 * (np.abs(dx[:, :-1]) ** 2 + np.abs(dx[:, 1:]) ** 2)
    d2c = 0.5 * (np.abs(dy[:-1, :]) ** 2 + np.abs(dy[1:, :]) ** 2)
    return float(np.sqrt((d1c + d2c).max()))


def evaluate(state: GLState, residual_report: ResidualReport, alpha=0.5, p=4.0,
             corner_exclusion=False, F=None) -> EstimateReport:
    """Theorem-level estimate rows for one state (residual report required)."""
    if residual_report is None:
        raise ConfigError("evaluate requires the state's residual report")
    g = state.grid
    kappa, H, B = state.kappa, state.H, state.B
    rep = EstimateReport()
    sup_psi = float(np.abs(state.psi).max())
    l2_psi = _l2w(g, state.psi)
    degenerate = sup_psi <= 1e-12

    rep.add("infini", sup_psi, 1.0, meta={})
    rep.add("cine", _kinetic_l2(state), kappa * l2_psi,
            flag="ok" if not degenerate else "degenerate")

    cm1 = discrete_curl(g, state.A) - 1.0
    lvl = cell_lattice(g, cm1)
    rep.add("ineqimproved", norm(g, lvl, NormSpec("Lp", p=2)),
            (1.0 / H) * sup_psi * l2_psi,
            flag="ok" if not degenerate else "degenerate")

    dd = 0.0
    for j, k in ((1, 1), (1, 2), (2, 1), (2, 2)):
        d = second_covariant(g, state.psi, state.A, B, j, k)
        w = g.node_weights() if j == k else np.full(g.cell_shape, g.cell_area)
        dd += math.sqrt(float((w * np.abs(d) ** 2).sum()))
    poly = 1.0 + kappa * H + kappa ** 2
    rep.add("dd1", dd, poly * l2_psi, flag="ok" if not degenerate else "degenerate")

    rhs_elliptic = poly / (kappa * H) * l2_psi * sup_psi
    flag = "ok" if not degenerate else "degenerate"
    rep.add("caf1", norm(g, lvl, NormSpec("Cn_alpha", n=0, alpha=alpha,
                                          corner_exclusion=corner_exclusion)),
            rhs_elliptic, flag=flag, alpha=alpha, corner_exclusion=corner_exclusion)
    rep.add("caf2", norm(g, lvl, NormSpec("W1p", p=p,
                                          corner_exclusion=corner_exclusion)),
            rhs_elliptic, flag=flag, p=p)
    if F is None:
        F = reference_potential(g)
    AmF = state.A - F
    rep.add("a2", norm(g, AmF, NormSpec("W2p", p=p, corner_exclusion=corner_exclusion)),
            rhs_elliptic, flag=flag, p=p)
    rep.add("af1", norm(g, AmF, NormSpec("Cn_alpha", n=1, alpha=alpha,
                                         corner_exclusion=corner_exclusion)),
            rhs_elliptic, flag=flag, alpha=alpha)
    return rep


def evaluate_asymptotic(state: GLState, lam_min=0.5, lam_max=2.0,
                        kappa_min=4.0) -> EstimateReport:
    """Asymptotic-regime rows; out-of-regime states are reported but flagged."""
    g = state.grid
    kappa, H = state.kappa, state.H
    b = math.sqrt(kappa * H)
    rep = EstimateReport()
    sup_psi = float(np.abs(state.psi).max())
    if sup_psi <= 1e-12:
        for id_ in ASYMPTOTIC:
            rep.add(id_, 0.0, 0.0, flag="degenerate")
        return rep
    in_regime = kappa >= kappa_min and lam_min <= kappa / H <= lam_max
    flag = "ok" if in_regime else "out-of-regime"

    cm1 = discrete_curl(g, state.A) - 1.0
    lvl = cell_lattice(g, cm1)
    rep.add("first", _dpsi_sup(state), b * sup_psi, flag=flag)
    rep.add("second", norm(g, lvl, NormSpec("C1")), sup_psi ** 2 / b, flag=flag)
    rep.add("third", norm(g, lvl, NormSpec("C2")), sup_psi ** 2, flag=flag)
    rep.add("prop41", sup_psi, 1.0, flag=flag)
    _, dist = argmax_distance(g, state.psi)
    rep.add("prop44", b * dist, 1.0, flag=flag)
    return rep


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepConfig:
    kappas: tuple
    rhos: tuple                      # rho = kappa / H
    Lx: float = 1.5
    Ly: float = 1.5
    points_per_length: float = 6.0
    n_min: int = 64
    n_max: int = 256
    grad_tol: float = 3e-5
    max_iter: int = 20000
    alpha: float = 0.5
    p: float = 4.0
    corner_exclusion: bool = False
    seed: int = 2024
    out_dir: str = "sweep_out"
    jobs: int = 1
    save_states: bool = False
    include_nonconverged: bool = False   # let non-minimizing remnants into verdicts
    trend_verdict: bool = False          # assert sup|psi| strictly decreasing in kappa
    ratio_spread_max: float = 10.0
    dist_bound: float = 5.0
    lam_min: float = 0.5
    lam_max: float = 2.0

    def __post_init__(self):
        if any(k <= 0 for k in self.kappas) or any(r <= 0 for r in self.rhos):
            raise ConfigError("kappas and rhos must be positive")
        if self.points_per_length < 6:
            raise ConfigError("resolution rule requires >= 6 points per magnetic length")

    def to_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["kappas"] = list(self.kappas)
        d["rhos"] = list(self.rhos)
        return d

    def content_dict(self):
        """Configuration that determines the numbers (hash input): everything
        except where the files go and how many workers produced them."""
        d = self.to_dict()
        d.pop("out_dir")
        d.pop("jobs")
        return d


@dataclass
class SweepRow:
    kappa: float
    H: float
    rho: float
    grid_n: int
    converged: bool
    errored: bool = False
    error: str = ""
    energy: float = float("nan")
    report: EstimateReport | None = None
    residuals: ResidualReport | None = None


@dataclass
class SweepResult:
    rows: list
    verdicts: dict
    config: SweepConfig
    paths: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(v.get("pass", True) for v in self.verdicts.values()
                   if v.get("evaluated", True))


def _solve_row(cfg: SweepConfig, idx: int, kappa: float, rho: float):
    H = kappa / rho
    grid = grid_for(kappa, H, cfg.Lx, cfg.Ly, cfg.points_per_length,
                    cfg.n_min, cfg.n_max)
    opts = SolveOptions(grad_tol=cfg.grad_tol, max_iter=cfg.max_iter,
                        seed=cfg.seed + idx)
    row = SweepRow(kappa, H, rho, grid.nx, converged=False)
    try:
        state, rr, stats = solve_cascade(grid, kappa, H, opts)
        row.converged = bool(stats["converged"])
        row.energy = float(stats["energy"])
        rep = evaluate(state, rr, alpha=cfg.alpha, p=cfg.p,
                       corner_exclusion=cfg.corner_exclusion)
        rep.update(evaluate_asymptotic(state, cfg.lam_min, cfg.lam_max))
        row.report = rep
        row.residuals = rr
        return row, state
    except Exception as exc:   # row failures must not kill the sweep
        row.errored = True
        row.error = f"{type(exc).__name__}: {exc}"
        return row, None


def _verdicts(cfg: SweepConfig, rows) -> dict:
    usable = [r for r in rows if not r.errored
              and (r.converged or cfg.include_nonconverged)]
    verdicts = {}
    for fam in BOUNDED_FAMILIES:
        ratios = [r.report[fam].ratio for r in usable
                  if fam in (r.report or {}) and r.report[fam].flag == "ok"
                  and np.isfinite(r.report[fam].ratio) and r.report[fam].ratio > 0]
        if len(ratios) >= 2:
            spread = max(ratios) / min(ratios)
            verdicts[f"theorem31_{fam}"] = {
                "evaluated": True, "spread": spread,
                "pass": spread <= cfg.ratio_spread_max, "n": len(ratios)}
        else:
            verdicts[f"theorem31_{fam}"] = {"evaluated": False, "n": len(ratios)}
    for fam in ("first", "second", "third"):
        ratios = [r.report[fam].ratio for r in usable
                  if fam in (r.report or {}) and r.report[fam].flag == "ok"
                  and np.isfinite(r.report[fam].ratio) and r.report[fam].ratio > 0]
        if len(ratios) >= 2:
            spread = max(ratios) / min(ratios)
            verdicts[f"prop43_{fam}"] = {
                "evaluated": True, "spread": spread,
                "pass": spread <= cfg.ratio_spread_max, "n": len(ratios)}
        else:
            verdicts[f"prop43_{fam}"] = {"evaluated": False, "n": len(ratios)}

    dists = [r.report["prop44"].lhs for r in usable
             if "prop44" in (r.report or {}) and r.report["prop44"].flag == "ok"]
    if dists:
        verdicts["prop44_bounded"] = {"evaluated": True, "max": max(dists),
                                      "pass": max(dists) <= cfg.dist_bound}
    else:
        verdicts["prop44_bounded"] = {"evaluated": False}

    trends = {}
    by_rho = {}
    for r in usable:
        by_rho.setdefault(r.rho, []).append(r)
    for rho, group in sorted(by_rho.items()):
        group = sorted(group, key=lambda r: r.kappa)
        sups = [g.report["infini"].lhs for g in group if g.report]
        if len(sups) >= 2:
            trends[str(rho)] = {"sups": sups,
                                "decreasing": all(a > b for a, b in zip(sups, sups[1:]))}
    verdicts["prop42_trend"] = {
        "evaluated": bool(trends) and cfg.trend_verdict,
        "groups": trends,
        "pass": all(t["decreasing"] for t in trends.values()) if trends else False,
    }
    return verdicts


def _csv_lines(cfg: SweepConfig, rows, cfg_hash):
    ids = list(FAMILIES) + list(ASYMPTOTIC)
    header = ["kappa", "H", "rho", "grid_n", "converged", "errored", "energy"]
    for id_ in ids:
        header += [f"{id_}_lhs", f"{id_}_rhs", f"{id_}_ratio", f"{id_}_flag"]
    lines = provenance_lines(cfg_hash, cfg.seed) + [",".join(header)]
    for r in rows:
        vals = [format(r.kappa, ".17g"), format(r.H, ".17g"),
                format(r.rho, ".17g"), str(r.grid_n),
                str(int(r.converged)), str(int(r.errored)),
                format(r.energy, ".17g")]
        for id_ in ids:
            if r.report and id_ in r.report:
                e = r.report[id_]
                vals += [format(e.lhs, ".17g"), format(e.rhs, ".17g"),
                         format(e.ratio, ".17g"), e.flag]
            else:
                vals += ["nan", "nan", "nan", "missing"]
        lines.append(",".join(vals))
    return lines


def _dat_files(cfg: SweepConfig, rows, out_dir, cfg_hash):
    paths = {}
    for fam in BOUNDED_FAMILIES + ("first", "second", "third", "prop44"):
        lines = provenance_lines(cfg_hash, cfg.seed)
        lines.append("# kappa H ratio")
        for r in rows:
            if r.report and fam in r.report and np.isfinite(r.report[fam].ratio):
                lines.append(f"{r.kappa:.17g} {r.H:.17g} {r.report[fam].ratio:.17g}")
        p = os.path.join(out_dir, f"ratio_{fam}.dat")
        with open(p, "w") as f:
            f.write("\n".join(lines) + "\n")
        paths[fam] = p
    gp = os.path.join(out_dir, "plot_ratios.gp")
    with open(gp, "w") as f:
        f.write("\n".join(provenance_lines(cfg_hash, cfg.seed)) + "\n")
        f.write("set logscale x\nset xlabel 'kappa'\nset ylabel 'ratio'\n")
        f.write("plot " + ", ".join(
            f"'ratio_{fam}.dat' using 1:3 with linespoints title '{fam}'"
            for fam in BOUNDED_FAMILIES) + "\n")
    paths["gnuplot"] = gp
    return paths


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Execute the sweep; deterministic row order and byte-stable outputs."""
    tasks = [(i, k, rho) for i, (k, rho) in enumerate(
        (k, r) for k in sorted(cfg.kappas) for r in sorted(cfg.rhos))]
    results = [None] * len(tasks)
    if cfg.jobs > 1:
        import concurrent.futures as cf
        with cf.ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            futs = {ex.submit(_solve_row, cfg, i, k, rho): i for i, k, rho in tasks}
            for fut in cf.as_completed(futs):
                results[futs[fut]] = fut.result()
    else:
        for i, k, rho in tasks:
            results[i] = _solve_row(cfg, i, k, rho)
    rows = [r for r, _ in results]
    states = [s for _, s in results]

    verdicts = _verdicts(cfg, rows)
    os.makedirs(cfg.out_dir, exist_ok=True)
    cfg_h = config_hash(cfg.content_dict())
    csv_path = os.path.join(cfg.out_dir, "sweep.csv")
    with open(csv_path, "w") as f:
        f.write("\n".join(_csv_lines(cfg, rows, cfg_h)) + "\n")
    json_path = os.path.join(cfg.out_dir, "sweep.json")
    payload = {
        "tool": f"gl2d {__version__}", "config_hash": cfg_h, "seed": cfg.seed,
        "config": cfg.to_dict(),
        "rows": [{
            "kappa": r.kappa, "H": r.H, "rho": r.rho, "grid_n": r.grid_n,
            "converged": r.converged, "errored": r.errored, "error": r.error,
            "energy": r.energy,
            "estimates": {k: {"lhs": e.lhs, "rhs": e.rhs, "ratio": e.ratio,
                              "flag": e.flag} for k, e in (r.report or {}).items()},
            "residuals": (asdict_residuals(r.residuals) if r.residuals else None),
        } for r in rows],
        "verdicts": verdicts,
    }
    with open(json_path, "w") as f:
        json.dump(payload, f, indent=1, sort_keys=True, default=_json_default)
        f.write("\n")
    paths = {"csv": csv_path, "json": json_path}
    paths.update(_dat_files(cfg, rows, cfg.out_dir, cfg_h))
    if cfg.save_states:
        for (i, k, rho), st in zip(tasks, states):
            if st is not None:
                save_state(os.path.join(cfg.out_dir, f"state_{i:03d}.npz"), st,
                           SolveOptions(grad_tol=cfg.grad_tol, seed=cfg.seed + i))
    return SweepResult(rows, verdicts, cfg, paths)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, float) and math.isnan(o):
        return None
    raise TypeError(f"not JSON serializable: {type(o)}")


def asdict_residuals(rr: ResidualReport):
    return {"r_psi": rr.r_psi, "r_A": rr.r_A,
            "r_bc_psi": rr.r_bc_psi, "r_bc_curl": rr.r_bc_curl}


def reaggregate(csv_path: str, cfg: SweepConfig | None = None) -> dict:
    """Recompute verdicts from an existing sweep CSV (the `report` command)."""
    rows = []
    with open(csv_path) as f:
        lines = [l.rstrip("\n") for l in f if not l.startswith("#")]
    header = lines[0].split(",")
    for line in lines[1:]:
        parts = line.split(",")
        rec = dict(zip(header, parts))
        row = SweepRow(float(rec["kappa"]), float(rec["H"]), float(rec["rho"]),
                       int(rec["grid_n"]), bool(int(rec["converged"])),
                       errored=bool(int(rec["errored"])))
        rep = EstimateReport()
        for id_ in list(FAMILIES) + list(ASYMPTOTIC):
            if f"{id_}_lhs" in rec and rec[f"{id_}_flag"] != "missing":
                rep.add(id_, float(rec[f"{id_}_lhs"]), float(rec[f"{id_}_rhs"]),
                        flag=rec[f"{id_}_flag"])
        row.report = rep
        rows.append(row)
    if cfg is None:
        cfg = SweepConfig(kappas=tuple(sorted({r.kappa for r in rows})) or (1.0,),
                          rhos=tuple(sorted({r.rho for r in rows})) or (1.0,))
    return _verdicts(cfg, rows)
