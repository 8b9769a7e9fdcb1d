"""Replication engine for design-based simulation studies.

A scenario fixes one network and one table of potential outcomes, computes
exposure probabilities once per (design, analysis network, assumed mapping)
and then repeatedly draws an assignment, realizes outcomes under the true
mapping and analyzes them under the assumed one. Every replicate gets its
own seed derived from ``(master seed, replicate index)``, so results do not
depend on how replicates are scheduled across threads.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np
import scipy
from scipy.stats import norm

from . import __version__
from .design import (bernoulli_assignment, cluster_randomization, complete_randomization,
                     enumerate_support, epsilon_net_clustering, n_treated,
                     two_stage_assignment)
from .errors import ParameterError
from .estimators import hajek_contrast, ht_contrast
from .exposure import LADDER, Exposure, ExposureMapping, condition_indices, exposure_probabilities
from .hierarchical import EFFECTS, HierarchicalDataset, marginal_effects
from .netgraph import generate_small_world, load_graph, remove_ties
from .outcomes import (DGPSpec, dilated_baseline, dilated_outcomes, hierarchical_outcomes,
                       regime_estimand, true_estimand)

log = logging.getLogger(__name__)

# stream ids for SeedSequence([seed, stream, ...])
_GRAPH, _PROBS, _DGP, _TIES, _CLUSTER, _REP = range(6)


# -- configuration --------------------------------------------------------

@dataclass
class ScenarioConfig:
    """Flat scenario description; every field maps to one config-file key."""

    name: str = "scenario"
    kind: str = "exposure"
    # network
    n: int = 400
    mean_degree: int = 4
    rewire_prob: float = 0.1
    graph_file: str = ""
    # design
    design: tuple = ("complete",)
    p: float = 0.1
    epsilon: int = 3
    cluster_mode: str = "bernoulli"
    # outcomes
    truth: tuple = ("hop1",)
    spillover: tuple = ("positive",)
    multipliers: tuple = ()
    kappa: float = 0.1
    redraw_dgp: bool = False
    # analysis
    assumed: tuple = ("hop1",)
    contrasts: tuple = ("d11:d00", "d10:d00", "d01:d00")
    estimators: tuple = ("ht", "hajek")
    restrict: bool = True
    variance: bool = True
    alpha: float = 0.05
    proportions: tuple = (0.0,)
    # replication
    prob_reps: int = 10000
    reps: int = 3000
    seed: int = 2019
    threads: int = 1
    # two-stage designs
    n_groups: int = 6
    group_size: int = 75
    groups_per_tract: int = 2
    psi: float = 2 / 3
    phi: float = 1 / 3
    share_psi: float = 0.5
    levels: tuple = ("group",)

    def validate(self):
        if self.kind not in ("exposure", "misspec", "missing_ties", "hierarchical"):
            raise ParameterError(f"unknown scenario kind {self.kind!r}")
        for name in ("reps", "prob_reps", "threads"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be positive")
        if self.reps < 2:
            raise ParameterError("need at least two replicates for metrics")
        if self.kind == "hierarchical":
            for lvl in self.levels:
                if lvl not in ("group", "tract"):
                    raise ParameterError(f"unknown level {lvl!r}")
            return self
        for d in self.design:
            if d not in ("complete", "bernoulli", "cluster"):
                raise ParameterError(f"unknown design {d!r}")
        for m in self.truth:
            ExposureMapping.parse(m)
        for m in self.assumed:
            ExposureMapping.parse(m)
        if self.kind == "misspec":
            bad = [m for m in (*self.truth, *self.assumed) if m not in LADDER]
            if bad:
                raise ParameterError(f"misspecification mappings must be on the ladder: {bad}")
        for s in self.spillover:
            if s not in ("positive", "negative"):
                raise ParameterError(f"unknown spillover {s!r}")
        for prop in self.proportions:
            if not 0 <= prop <= 1:
                raise ParameterError("proportions must lie in [0, 1]")
        return self


_TUPLE_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _coerce(key, raw):
    default = getattr(ScenarioConfig, key) if hasattr(ScenarioConfig, key) else None
    ftype = _TUPLE_TYPES[key]
    if ftype == "tuple":
        items = [s.strip() for s in raw.split(",") if s.strip()]
        if key in ("multipliers", "proportions"):
            return tuple(float(eval_fraction(s)) for s in items)
        return tuple(items)
    if ftype == "bool":
        v = raw.strip().lower()
        if v not in ("true", "false", "1", "0", "yes", "no"):
            raise ParameterError(f"{key}: expected a boolean, got {raw!r}")
        return v in ("true", "1", "yes")
    if ftype == "int":
        return int(raw)
    if ftype == "float":
        return float(eval_fraction(raw))
    return raw.strip() if default is not None else raw


def eval_fraction(s):
    """Parse ``0.25`` or ``2/3``."""
    s = s.strip()
    if "/" in s:
        num, den = s.split("/", 1)
        return float(num) / float(den)
    return float(s)


def parse_config(text, name="scenario"):
    """Parse flat ``key = value`` text; ``#`` starts a comment."""
    values = {"name": name}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _TUPLE_TYPES:
            raise ParameterError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _coerce(key, val)
        except ValueError as exc:
            raise ParameterError(f"line {lineno}: bad value for {key}: {exc}") from None
    return ScenarioConfig(**values).validate()


def format_config(cfg):
    lines = []
    for f in fields(ScenarioConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def preset_names():
    files = resources.files("netspill").joinpath("presets").iterdir()
    return sorted(p.name[:-4] for p in files if p.name.endswith(".cfg"))


def load_config(source, **overrides):
    """Load a preset by name or a config file by path, then apply overrides."""
    path = Path(source)
    if path.is_file():
        cfg = parse_config(path.read_text(), name=path.stem)
    else:
        res = resources.files("netspill").joinpath("presets", f"{source}.cfg")
        if not res.is_file():
            raise ParameterError(
                f"no preset or config file {source!r}; presets: {', '.join(preset_names())}")
        cfg = parse_config(res.read_text(), name=str(source))
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **overrides).validate()


# -- metrics --------------------------------------------------------------

@dataclass
class MetricsRow:
    estimand: str
    estimator: str
    true_value: float
    mean: float
    bias: float
    sd: float
    rmse: float
    mean_se: float
    coverage: float
    reps: int
    undefined: int = 0
    cell: dict = field(default_factory=dict)

    @property
    def mcse(self):
        """Monte Carlo standard error of the mean estimate."""
        return self.sd / math.sqrt(self.reps)

    def as_dict(self):
        d = asdict(self)
        cell = d.pop("cell")
        return {**cell, **d}


def metrics(estimates, variances, true_value, alpha=0.05, cell=None, estimand="",
            estimator=""):
    """Bias, SD, RMSE, mean standard error and CI coverage over replicates.

    ``true_value`` may be a scalar or one value per replicate. Replicates
    whose estimate is NaN are excluded and counted in ``undefined``.
    """
    est = np.asarray(estimates, dtype=float)
    var = np.asarray(variances, dtype=float) if variances is not None else np.full(est.shape, np.nan)
    truth = np.broadcast_to(np.asarray(true_value, dtype=float), est.shape)
    if len(est) < 2:
        raise ParameterError("metrics need at least two replicates")
    ok = np.isfinite(est)
    n_ok = int(ok.sum())
    if n_ok < 2:
        log.warning("%s/%s: fewer than two defined replicates", estimand, estimator)
        nan = math.nan
        return MetricsRow(estimand, estimator, float(truth.mean()), nan, nan, nan, nan, nan,
                          nan, n_ok, int(len(est) - n_ok), dict(cell or {}))
    e, v, t = est[ok], var[ok], truth[ok]
    err = e - t
    bias = float(err.mean())
    sd = float(e.std(ddof=1)) if np.all(t == t[0]) else float(err.std(ddof=1))
    rmse = float(math.sqrt(np.mean(err**2)))
    check = bias**2 + sd**2 * (n_ok - 1) / n_ok
    if abs(rmse**2 - check) > 1e-9 * max(1.0, rmse**2):
        raise RuntimeError(f"RMSE identity violated: {rmse**2} vs {check}")
    vok = np.isfinite(v) & (v >= 0)
    mean_se = float(np.sqrt(v[vok]).mean()) if vok.any() else math.nan
    if vok.any():
        half = norm.ppf(1 - alpha / 2) * np.sqrt(v[vok])
        coverage = float(np.mean((e[vok] - half <= t[vok]) & (t[vok] <= e[vok] + half)))
    else:
        coverage = math.nan
    return MetricsRow(estimand, estimator, float(t.mean()), float(e.mean()), bias, sd, rmse,
                      mean_se, coverage, n_ok, int(len(est) - n_ok), dict(cell or {}))


# -- scenario plumbing ----------------------------------------------------

def _rng(seed, *stream):
    return np.random.default_rng(np.random.SeedSequence([seed, *stream]))


class _Design:
    """A unit- or cluster-level design over ``n`` units."""

    def __init__(self, kind, n, p, clustering=None, cluster_mode="bernoulli"):
        self.kind, self.n, self.p = kind, n, p
        self.clustering = clustering
        self.cluster_mode = cluster_mode

    def draw(self, rng):
        if self.kind == "complete":
            return complete_randomization(self.n, self.p, 1, rng).vectors[0]
        if self.kind == "bernoulli":
            return bernoulli_assignment(self.n, self.p, 1, rng).vectors[0]
        return cluster_randomization(self.clustering, self.p, 1, rng,
                                     mode=self.cluster_mode).vectors[0]

    def probability_draws(self, R, rng):
        """``R`` distinct draws, or the full support when it is smaller than ``R``."""
        if self.kind == "complete":
            support = math.comb(self.n, n_treated(self.n, self.p))
            if support <= R:
                return enumerate_support(self.n, self.p)
            return complete_randomization(self.n, self.p, R, rng, allow_repetitions=False)
        if self.kind == "bernoulli":
            return bernoulli_assignment(self.n, self.p, R, rng, distinct=True)
        return cluster_randomization(self.clustering, self.p, R, rng,
                                     mode=self.cluster_mode, distinct=True)


@dataclass
class _Contrast:
    k: str
    l: str
    estimand: str
    truth: float


@dataclass
class _Cell:
    labels: dict
    design: str
    truth_key: tuple
    graph: object
    mapping: ExposureMapping
    probs: object
    contrasts: list


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    summary: list
    replicates: list
    meta: dict = field(default_factory=dict)

    def rows(self, **match):
        """Metrics rows whose fields or cell labels equal ``match``."""
        out = []
        for r in self.summary:
            d = r.as_dict()
            if all(str(d.get(k)) == str(v) for k, v in match.items()):
                out.append(r)
        return out

    def row(self, **match):
        found = self.rows(**match)
        if len(found) != 1:
            raise KeyError(f"{len(found)} rows match {match}")
        return found[0]

    def write(self, out_dir, fmt="csv"):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_table(out / f"summary.{fmt}", [r.as_dict() for r in self.summary], fmt)
        _write_table(out / f"replicates.{fmt}", self.replicates, fmt)
        with (out / "meta.json").open("w") as fh:
            json.dump(self.meta, fh, indent=2, sort_keys=True, default=str)
        return out


def _write_table(path, rows, fmt):
    if fmt == "json":
        with path.open("w") as fh:
            json.dump(rows, fh, indent=1, default=_jsonable)
        return
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, restval="")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return str(x)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    return v


def _meta(cfg, extra=None):
    m = {
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(cfg).items()},
        "versions": {"netspill": __version__, "python": sys.version.split()[0],
                     "numpy": np.__version__, "scipy": scipy.__version__,
                     "platform": platform.platform()},
    }
    m.update(extra or {})
    return m


def _network(cfg):
    if cfg.graph_file:
        return load_graph(cfg.graph_file)
    return generate_small_world(cfg.n, cfg.mean_degree, cfg.rewire_prob,
                                np.random.SeedSequence([cfg.seed, _GRAPH]))


def _parse_contrast(spec, mapping):
    if spec == "regime":
        return mapping.top, mapping.bottom
    k, l = spec.split(":")
    return mapping.code(k.strip()), mapping.code(l.strip())


def _build_cells(cfg, g):
    """Designs, true outcome tables and analysis cells for a network scenario."""
    designs = {}
    for name in cfg.design:
        if name == "cluster":
            clus = epsilon_net_clustering(g, cfg.epsilon, np.random.SeedSequence([cfg.seed, _CLUSTER]))
            designs[name] = _Design("cluster", g.n, cfg.p, clus, cfg.cluster_mode)
        else:
            designs[name] = _Design(name, g.n, cfg.p)

    base = dilated_baseline(g, cfg.kappa, np.random.SeedSequence([cfg.seed, _DGP]))
    tables = {}
    for truth in cfg.truth:
        for sp in cfg.spillover:
            spec = DGPSpec(truth, cfg.multipliers or None, cfg.kappa, sp)
            tables[(truth, sp)] = dilated_outcomes(base, spec.mapping, spec.resolved_multipliers())

    if cfg.kind == "missing_ties":
        graphs = {prop: remove_ties(g, prop, np.random.SeedSequence([cfg.seed, _TIES]))
                  for prop in cfg.proportions}
    else:
        graphs = {None: g}

    probs = {}
    cells = []
    for di, (dname, design) in enumerate(designs.items()):
        draws = design.probability_draws(cfg.prob_reps, _rng(cfg.seed, _PROBS, di))
        for prop, ag in graphs.items():
            for assumed in cfg.assumed:
                mapping = ExposureMapping.parse(assumed)
                key = (dname, prop, mapping.kind)
                if key not in probs:
                    log.info("exposure probabilities: design=%s mapping=%s R=%d",
                             dname, mapping.kind, draws.r)
                    probs[key] = exposure_probabilities(ag, draws, mapping,
                                                        want_joint=cfg.variance)
                for (truth, sp), table in tables.items():
                    contrasts = []
                    specs = ("regime",) if cfg.kind == "misspec" else cfg.contrasts
                    for cs in specs:
                        k, l = _parse_contrast(cs, mapping)
                        if cs == "regime" or (mapping.kind != table.mapping.kind
                                              and (k, l) == (mapping.top, mapping.bottom)):
                            contrasts.append(_Contrast(k, l, "tau(1,0)",
                                                       regime_estimand(table, g)))
                        elif mapping.kind == table.mapping.kind:
                            contrasts.append(_Contrast(k, l, f"tau({k},{l})",
                                                       true_estimand(table, k, l)))
                        else:
                            raise ParameterError(
                                f"contrast {cs} under assumed {mapping.kind} has no estimand "
                                f"under truth {table.mapping.kind}")
                    labels = {"design": dname, "truth": truth, "assumed": mapping.kind,
                              "spillover": sp}
                    if prop is not None:
                        labels["proportion"] = prop
                    cells.append(_Cell(labels, dname, (truth, sp), ag, mapping, probs[key],
                                       contrasts))
    return designs, tables, base, cells


def _analyze(cell, exposure, y, estimators, cfg, rng):
    out = []
    for c in cell.contrasts:
        for est in estimators:
            if est == "ht":
                rep = ht_contrast(exposure, y, cell.probs, c.k, c.l, restrict=cfg.restrict,
                                  variance="max" if cfg.variance else "none", alpha=cfg.alpha)
            else:
                rep = hajek_contrast(exposure, y, cell.probs, c.k, c.l, restrict=cfg.restrict,
                                     variance="linearized" if cfg.variance else "none",
                                     alpha=cfg.alpha)
            out.append((c, rep))
    return out


def run_scenario(cfg):
    """Run an exposure-mapping scenario (also misspecification and missing ties)."""
    cfg = cfg.validate()
    if cfg.kind == "hierarchical":
        return run_hierarchical_scenario(cfg)
    g = _network(cfg)
    designs, tables, base, cells = _build_cells(cfg, g)
    estimators = [e.lower() for e in cfg.estimators]
    true_maps = {t: ExposureMapping.parse(t) for t in cfg.truth}

    def one(r):
        rng = _rng(cfg.seed, _REP, r)
        zs = {name: d.draw(rng) for name, d in designs.items()}
        if cfg.redraw_dgp:
            b = dilated_baseline(g, cfg.kappa, rng)
            tabs = {key: dilated_outcomes(b, t.mapping, t.values[:, 0] / base[0])
                    for key, t in tables.items()}
        else:
            tabs = tables
        ys = {}
        for dname, z in zs.items():
            for (truth, sp), table in tabs.items():
                idx = condition_indices(g, z, true_maps[truth])
                ys[(dname, truth, sp)] = table.values[idx, np.arange(g.n)]
        rows = []
        for ci, cell in enumerate(cells):
            exp = Exposure(cell.mapping, condition_indices(cell.graph, zs[cell.design],
                                                           cell.mapping))
            y = ys[(cell.design, *cell.truth_key)]
            for c, rep in _analyze(cell, exp, y, estimators, cfg, rng):
                truth = c.truth
                if cfg.redraw_dgp:
                    t = tabs[cell.truth_key]
                    truth = (regime_estimand(t, g) if c.estimand == "tau(1,0)"
                             else true_estimand(t, c.k, c.l))
                rows.append((r, ci, c.estimand, rep, truth))
        return rows

    results = _run_reps(one, cfg.reps, cfg.threads)
    return _summarize(cfg, cells, results, extra={"graph": {"n": g.n, "edges": g.n_edges},
                                                  "baseline_mean": float(base.mean())})


def run_missing_ties_scenario(cfg, proportions=None):
    if proportions is not None:
        cfg = replace(cfg, proportions=tuple(proportions))
    return run_scenario(replace(cfg, kind="missing_ties"))


def _run_reps(fn, reps, threads):
    if threads <= 1:
        chunks = [fn(r) for r in range(reps)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(fn, range(reps)))
    # pool.map preserves order; flatten by replicate index
    return [row for chunk in chunks for row in chunk]


def _summarize(cfg, cells, results, extra=None):
    replicates = []
    groups = {}
    for r, ci, estimand, rep, truth in results:
        cell = cells[ci]
        key = (ci, estimand, rep.estimator, rep.k, rep.l)
        groups.setdefault(key, []).append((rep, truth))
        replicates.append({
            "rep": r, **cell.labels, "estimand": estimand,
            "estimator": rep.estimator, "contrast": f"{rep.k}:{rep.l}",
            "estimate": rep.point, "variance": rep.variance,
            "ci_low": rep.ci_low, "ci_high": rep.ci_high, "true_value": truth,
        })
    summary = []
    for (ci, estimand, estimator, k, l), items in groups.items():
        labels = dict(cells[ci].labels, contrast=f"{k}:{l}")
        summary.append(metrics([x.point for x, _ in items], [x.variance for x, _ in items],
                               [t for _, t in items], cfg.alpha, labels, estimand, estimator))
    return ScenarioResult(cfg, summary, replicates, _meta(cfg, extra))


# -- two-stage designs ----------------------------------------------------

def run_hierarchical_scenario(cfg):
    """Two-stage design replications for each outcome level in ``cfg.levels``.

    Analysis always assumes partial interference at the group level; with
    ``tract`` level outcomes that assumption is violated.
    """
    cfg = cfg.validate()
    group_of = np.repeat(np.arange(cfg.n_groups), cfg.group_size)
    tract_of = group_of // cfg.groups_per_tract
    outs = {}
    for lvl in cfg.levels:
        m = tuple(cfg.multipliers) if cfg.multipliers else (2.0, 1.5, 1.25, 1.0)
        outs[lvl] = hierarchical_outcomes(group_of, cfg.psi, cfg.phi, m, lvl, tract_of,
                                          np.random.SeedSequence([cfg.seed, _DGP]))
    truths = {lvl: o.estimands() for lvl, o in outs.items()}

    def one(r):
        rng = _rng(cfg.seed, _REP, r)
        a = two_stage_assignment(group_of, cfg.psi, cfg.phi, cfg.share_psi, rng)
        arm = a.unit_arm()
        rows = []
        for lvl, o in outs.items():
            y = o.realize(a.z, arm)
            rep = marginal_effects(HierarchicalDataset.from_assignment(a, y), cfg.alpha)
            rows.append((r, lvl, rep))
        return rows

    results = _run_reps(one, cfg.reps, cfg.threads)
    replicates, groups = [], {}
    max_dev = 0.0
    for r, lvl, rep in results:
        max_dev = max(max_dev, abs(rep.total - (rep.direct_psi + rep.indirect)))
        for e in EFFECTS:
            lo, hi = rep.ci[e]
            replicates.append({"rep": r, "level": lvl, "estimand": e, "estimator": "group_means",
                               "estimate": rep.effect(e), "variance": rep.variance(e),
                               "ci_low": lo, "ci_high": hi, "true_value": truths[lvl][e]})
            groups.setdefault((lvl, e), []).append(rep)
    summary = []
    for (lvl, e), reps in groups.items():
        summary.append(metrics([x.effect(e) for x in reps], [x.variance(e) for x in reps],
                               truths[lvl][e], cfg.alpha, {"level": lvl}, e, "group_means"))
    return ScenarioResult(cfg, summary, replicates,
                          _meta(cfg, {"identity_max_deviation": max_dev, "estimands": truths}))
