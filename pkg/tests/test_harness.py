import json
import os
import time

import numpy as np
import pytest

from gl2d.errors import ConfigError
from gl2d.harness import (EstimateReport, SweepConfig, evaluate,
                          evaluate_asymptotic, reaggregate, run_sweep)
from gl2d.solver import GLState, residuals


def test_evaluate_requires_residuals(F_128):
    g, F = F_128
    st = GLState(g, np.zeros(g.node_shape, complex), F, 2.0, 2.0)
    with pytest.raises(ConfigError):
        evaluate(st, None)


def test_normal_state_rows_flagged(F_128):
    g, F = F_128
    st = GLState(g, np.zeros(g.node_shape, complex), F, 2.0, 2.0)
    rep = evaluate(st, residuals(st), F=F)
    assert rep["infini"].lhs == 0.0 and rep["infini"].flag == "ok"
    for fam in ("cine", "dd1", "caf1", "caf2", "a2", "af1"):
        assert rep[fam].flag in ("degenerate", "indeterminate")
        assert not np.isfinite(rep[fam].ratio)
    asym = evaluate_asymptotic(st)
    assert all(r.flag == "degenerate" for r in asym.values())


def test_phase_constant_leaves_report_invariant(minimizer_k4_64, F_128):
    state, report, _, _ = minimizer_k4_64
    from gl2d.poisson import PoissonOptions, reference_potential
    F = reference_potential(state.grid, PoissonOptions(tol=1e-12))
    rep1 = evaluate(state, report, F=F)
    rotated = GLState(state.grid, state.psi * np.exp(1j * 0.83), state.A,
                      state.kappa, state.H)
    rep2 = evaluate(rotated, residuals(rotated), F=F)
    for k in rep1:
        assert abs(rep1[k].lhs - rep2[k].lhs) <= 1e-9 * (1 + rep1[k].lhs)
        assert abs(rep1[k].rhs - rep2[k].rhs) <= 1e-9 * (1 + rep1[k].rhs)


def test_out_of_regime_flagging(minimizer_k4_64):
    state, _, _, _ = minimizer_k4_64
    rep = evaluate_asymptotic(state, lam_min=0.5, lam_max=2.0, kappa_min=8.0)
    assert all(r.flag == "out-of-regime" for r in rep.values())


def test_report_indeterminate_never_infinite():
    rep = EstimateReport()
    row = rep.add("x", 1.0, 0.0)
    assert row.flag == "indeterminate"
    assert not np.isfinite(row.ratio)


def test_empty_sweep_succeeds(tmp_path):
    cfg = SweepConfig(kappas=(), rhos=(), out_dir=str(tmp_path / "empty"))
    res = run_sweep(cfg)
    assert res.rows == []
    assert res.passed
    assert os.path.exists(res.paths["csv"])


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        SweepConfig(kappas=(2.0, -1.0), rhos=(1.0,))
    with pytest.raises(ConfigError):
        SweepConfig(kappas=(2.0,), rhos=(1.0,), points_per_length=4)


@pytest.fixture(scope="module")
def smoke_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("smoke")
    cfg = SweepConfig(kappas=(2.0, 4.0), rhos=(1.0,), Lx=2.0, Ly=2.0,
                      n_min=64, n_max=64, grad_tol=1e-5, seed=11,
                      out_dir=str(out))
    t0 = time.time()
    res = run_sweep(cfg)
    return cfg, res, time.time() - t0


def test_smoke_sweep_fast_and_finite(smoke_sweep):
    cfg, res, elapsed = smoke_sweep
    assert elapsed < 60.0
    assert len(res.rows) == 2
    for row in res.rows:
        assert row.converged and not row.errored
        for fam in ("infini", "cine", "dd1"):
            assert np.isfinite(row.report[fam].ratio)


def test_sweep_outputs_have_provenance(smoke_sweep):
    cfg, res, _ = smoke_sweep
    with open(res.paths["csv"]) as f:
        head = [next(f) for _ in range(3)]
    assert head[0].startswith("# gl2d ")
    assert head[1].startswith("# config ")
    assert head[2].startswith("# seed ")
    payload = json.load(open(res.paths["json"]))
    assert payload["seed"] == cfg.seed
    assert "verdicts" in payload


def test_sweep_determinism(smoke_sweep, tmp_path):
    cfg, res, _ = smoke_sweep
    cfg2 = SweepConfig(**{**cfg.to_dict(), "kappas": tuple(cfg.kappas),
                          "rhos": tuple(cfg.rhos), "out_dir": str(tmp_path / "rerun")})
    res2 = run_sweep(cfg2)
    a = open(res.paths["csv"], "rb").read()
    b = open(res2.paths["csv"], "rb").read()
    assert a == b


def test_reaggregate_matches(smoke_sweep):
    cfg, res, _ = smoke_sweep
    verdicts = reaggregate(res.paths["csv"], cfg)
    for k, v in res.verdicts.items():
        if v.get("evaluated", False) and "spread" in v:
            assert abs(verdicts[k]["spread"] - v["spread"]) < 1e-12
            assert verdicts[k]["pass"] == v["pass"]
