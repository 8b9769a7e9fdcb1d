"""Compare Horvitz-Thompson and Hajek estimators on a 400-unit small world.

Uses the ``ht_vs_hajek`` preset at reduced size so it finishes in well
under a minute; pass the preset to ``netspill simulate`` for the full run.
"""

from netspill.harness import load_config, run_scenario

cfg = load_config("ht_vs_hajek", reps=300, prob_reps=3000)
res = run_scenario(cfg)
print(f"{'estimand':<14}{'estimator':<8}{'truth':>8}{'bias':>9}{'SD':>8}{'MeanSE':>8}{'cover':>7}")
for r in res.summary:
    print(f"{r.estimand:<14}{r.estimator:<8}{r.true_value:8.3f}{r.bias:9.4f}{r.sd:8.3f}"
          f"{r.mean_se:8.3f}{r.coverage:7.2f}")
