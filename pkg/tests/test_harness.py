import json
import math

import numpy as np
import pytest

from netspill.errors import ParameterError
from netspill.harness import (ScenarioConfig, format_config, load_config, metrics, parse_config,
                              preset_names, run_hierarchical_scenario,
                              run_missing_ties_scenario, run_scenario)


def small(**kw):
    base = dict(n=60, p=0.2, prob_reps=300, reps=20, seed=5)
    base.update(kw)
    return ScenarioConfig(**base)


def test_metrics_hand():
    m = metrics([1.0, 2.0, 3.0], [1.0, 1.0, 1.0], 2.0)
    assert m.bias == 0.0
    assert m.sd == 1.0
    assert m.rmse == pytest.approx(math.sqrt(2 / 3), abs=1e-15)
    assert m.mean_se == 1.0
    assert m.reps == 3


def test_metrics_constant_estimates():
    m = metrics([4.0] * 5, [0.0] * 5, 3.0)
    assert m.sd == 0.0 and m.rmse == 1.0 == m.bias
    assert m.coverage == 0.0


def test_metrics_exact_estimates():
    m = metrics([2.0] * 4, [0.0] * 4, 2.0)
    assert (m.bias, m.sd, m.rmse, m.mean_se, m.coverage) == (0.0, 0.0, 0.0, 0.0, 1.0)


def test_metrics_undefined_replicates():
    m = metrics([1.0, np.nan, 3.0], [1.0, np.nan, 1.0], 2.0)
    assert m.reps == 2 and m.undefined == 1
    err = metrics([np.nan, np.nan], [np.nan, np.nan], 2.0)
    assert math.isnan(err.bias) and err.undefined == 2
    with pytest.raises(ParameterError):
        metrics([1.0], [1.0], 1.0)


def test_parse_config():
    cfg = parse_config("""
        # comment
        kind = exposure
        n = 50      # trailing comment
        psi = 2/3
        design = bernoulli, cluster
        restrict = false
    """)
    assert cfg.n == 50 and cfg.psi == pytest.approx(2 / 3)
    assert cfg.design == ("bernoulli", "cluster")
    assert cfg.restrict is False
    assert parse_config(format_config(cfg)) == cfg


@pytest.mark.parametrize("text", ["n 5", "colour = red", "n = five", "kind = other",
                                  "reps = 0", "kind = misspec\nassumed = full"])
def test_parse_config_errors(text):
    with pytest.raises(ParameterError):
        parse_config(text)


def test_presets_load():
    names = preset_names()
    assert {"ht_vs_hajek", "misspec", "missing_ties", "unit_vs_cluster", "hierarchical",
            "toy_hierarchical"} <= set(names)
    for n in names:
        load_config(n)
    cfg = load_config("ht_vs_hajek", reps=7, seed=None)
    assert cfg.reps == 7 and cfg.seed == 2019


def test_exposure_scenario_rows(tmp_path):
    res = run_scenario(small())
    assert len(res.summary) == 6
    assert {(r.estimand, r.estimator) for r in res.summary} == {
        (f"tau({k},d00)", e) for k in ("d11", "d10", "d01") for e in ("HT", "Hajek")}
    res.write(tmp_path)
    header = (tmp_path / "replicates.csv").read_text().splitlines()[0].split(",")
    for col in ("rep", "estimand", "estimator", "estimate", "variance", "ci_low", "ci_high"):
        assert col in header
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["config"]["n"] == 60 and "numpy" in meta["versions"]


def test_thread_count_does_not_change_output(tmp_path):
    a = run_scenario(small(threads=1)).write(tmp_path / "a")
    b = run_scenario(small(threads=3)).write(tmp_path / "b")
    assert (a / "replicates.csv").read_bytes() == (b / "replicates.csv").read_bytes()
    assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()


def test_misspec_matrix():
    cfg = small(kind="misspec", truth=("hop1", "hop2"), assumed=("none", "hop1", "hop2"),
                spillover=("positive", "negative"), estimators=("hajek",), reps=5,
                variance=False)
    res = run_scenario(cfg)
    assert len(res.summary) == 12
    assert {r.estimand for r in res.summary} == {"tau(1,0)"}
    cells = {(r.cell["truth"], r.cell["assumed"], r.cell["spillover"]) for r in res.summary}
    assert len(cells) == 12


def test_missing_ties_single_proportion():
    res = run_missing_ties_scenario(small(estimators=("hajek",), reps=5), [0.25])
    assert {r.cell["proportion"] for r in res.summary} == {0.25}
    assert len(res.summary) == 3


def test_cluster_scenario():
    res = run_scenario(small(design=("bernoulli", "cluster"), p=0.5, assumed=("full",),
                             contrasts=("regime",), reps=5))
    assert {r.cell["design"] for r in res.summary} == {"bernoulli", "cluster"}


def test_impossible_contrast_reported_before_loop():
    with pytest.raises(ParameterError):
        run_scenario(small(truth=("hop2",), assumed=("hop1",), contrasts=("d10:d00",)))


def test_redraw_flag():
    res = run_scenario(small(redraw_dgp=True, reps=6, estimators=("hajek",)))
    truths = {r["true_value"] for r in res.replicates if r["estimand"] == "tau(d11,d00)"}
    assert len(truths) > 1


def test_toy_hierarchical():
    res = run_hierarchical_scenario(load_config("toy_hierarchical", reps=20))
    assert {r.estimand for r in res.summary} == {"direct_psi", "direct_phi", "indirect",
                                                "total", "overall"}
    assert res.meta["identity_max_deviation"] <= 1e-12
