"""Command-line interface: ``netspill <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .design import (AssignmentSet, bernoulli_assignment, cluster_randomization,
                     complete_randomization, enumerate_support, epsilon_net_clustering,
                     load_assignments, load_clustering, n_treated, save_assignments,
                     save_clustering)
from .errors import InconsistentProbabilityError, ParameterError, ParseError
from .estimators import estimate_contrast
from .exposure import (ExposureMapping, exposure_probabilities, load_probabilities,
                       map_exposures, save_probabilities)
from .harness import load_config, preset_names, run_scenario
from .hierarchical import load_hierarchical, marginal_effects
from .netgraph import generate_small_world, load_graph, save_graph
from .outcomes import load_observed


def _common(p, reps=True):
    p.add_argument("--seed", type=int, default=None, help="master seed")
    if reps:
        p.add_argument("--reps", type=int, default=None, help="number of replicates")
        p.add_argument("--prob-reps", type=int, default=None,
                       help="assignment draws for exposure probabilities")
    p.add_argument("--out", default=None, help="output file or directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=1)


def build_parser():
    ap = argparse.ArgumentParser(prog="netspill",
                                 description="Spillover effect estimation on networks.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("graph", help="generate or inspect a network")
    gsub = g.add_subparsers(dest="graph_command", required=True)
    gen = gsub.add_parser("gen", help="small-world network")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--mean-degree", type=int, default=4)
    gen.add_argument("--rewire-prob", type=float, default=0.1)
    gen.add_argument("--dense", action="store_true", help="write an adjacency matrix")
    _common(gen, reps=False)
    info = gsub.add_parser("info", help="summary statistics of a network file")
    info.add_argument("graph")
    _common(info, reps=False)

    a = sub.add_parser("assign", help="draw treatment assignments")
    a.add_argument("--n", type=int, required=True)
    a.add_argument("--p", type=float, required=True)
    a.add_argument("--design", choices=("complete", "bernoulli"), default="complete")
    a.add_argument("--distinct", action="store_true", help="no repeated vectors")
    a.add_argument("--enumerate", action="store_true", help="full support (complete only)")
    _common(a)

    c = sub.add_parser("cluster", help="epsilon-net clustering")
    c.add_argument("graph")
    c.add_argument("--epsilon", type=int, default=3)
    _common(c, reps=False)

    pr = sub.add_parser("probs", help="exposure probabilities")
    pr.add_argument("graph")
    pr.add_argument("--p", type=float, required=True)
    pr.add_argument("--hop", default="hop1", help="exposure mapping: 0, 1, 2 or full")
    pr.add_argument("--design", choices=("complete", "bernoulli", "cluster"),
                    default="complete")
    pr.add_argument("--clusters", help="clustering file for the cluster design")
    pr.add_argument("--enumerate", choices=("auto", "yes", "no"), default="auto",
                    help="use the full support when it is small enough")
    pr.add_argument("--no-joint", action="store_true")
    _common(pr)

    e = sub.add_parser("expose", help="exposure condition of each unit")
    e.add_argument("graph")
    grp = e.add_mutually_exclusive_group(required=True)
    grp.add_argument("--assignment", help="assignment file (first replicate is used)")
    grp.add_argument("--treated", help="comma-separated treated unit ids")
    e.add_argument("--one-based", action="store_true", help="ids are numbered from 1")
    e.add_argument("--hop", default="1")
    _common(e, reps=False)

    est = sub.add_parser("estimate", help="HT or Hajek contrast from observed data")
    est.add_argument("graph")
    est.add_argument("--assignment", required=True)
    est.add_argument("--outcomes", required=True, help="CSV with header unit,y")
    est.add_argument("--probs", required=True, help="probability file from 'probs'")
    est.add_argument("--contrast", action="append", required=True,
                     help="k:l, repeatable; codes or labels")
    est.add_argument("--estimator", choices=("ht", "hajek", "both"), default="both")
    est.add_argument("--restrict", action="store_true",
                     help="only units with positive probability in both conditions")
    est.add_argument("--alpha", type=float, default=0.05)
    _common(est, reps=False)

    h = sub.add_parser("hier-estimate", help="marginal effects in a two-stage design")
    h.add_argument("data", help="group,group_tr,indiv_tr,obs_outcome")
    h.add_argument("--alpha", type=float, default=0.05)
    _common(h, reps=False)

    s = sub.add_parser("simulate", help="run a preset or config-file scenario")
    s.add_argument("scenario", help=f"preset name or config file")
    _common(s)
    return ap


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_graph(args):
    if args.graph_command == "gen":
        g = generate_small_world(args.n, args.mean_degree, args.rewire_prob, args.seed)
        if args.out:
            save_graph(g, args.out, dense=args.dense)
        else:
            import tempfile
            with tempfile.TemporaryDirectory() as tmp:
                p = Path(tmp) / "g.csv"
                save_graph(g, p, dense=args.dense)
                sys.stdout.write(p.read_text())
        return 0
    g = load_graph(args.graph)
    deg = g.degrees
    info = {"n": g.n, "edges": g.n_edges, "mean_degree": float(deg.mean()) if g.n else 0.0,
            "min_degree": int(deg.min()) if g.n else 0, "max_degree": int(deg.max()) if g.n else 0,
            "mean_second_degree": float(g.second_degrees.mean()) if g.n else 0.0}
    if args.format == "json":
        _emit(json.dumps(info) + "\n", args.out)
    else:
        _emit("".join(f"{k},{v}\n" for k, v in info.items()), args.out)
    return 0


def _save_or_print(save, obj, out):
    if out:
        save(obj, out)
    else:
        import tempfile
        with tempfile.TemporaryDirectory() as tmp:
            p = Path(tmp) / "x.csv"
            save(obj, p)
            sys.stdout.write(p.read_text())


def _cmd_assign(args):
    r = args.reps or 1
    if args.enumerate:
        if args.design != "complete":
            raise ParameterError("--enumerate needs the complete design")
        a = enumerate_support(args.n, args.p)
    elif args.design == "complete":
        a = complete_randomization(args.n, args.p, r, args.seed,
                                   allow_repetitions=not args.distinct)
    else:
        a = bernoulli_assignment(args.n, args.p, r, args.seed, distinct=args.distinct)
    _save_or_print(save_assignments, a, args.out)
    return 0


def _cmd_cluster(args):
    g = load_graph(args.graph)
    c = epsilon_net_clustering(g, args.epsilon, args.seed)
    _save_or_print(save_clustering, c, args.out)
    print(f"clusters={c.n_clusters}", file=sys.stderr)
    return 0


def _cmd_probs(args):
    g = load_graph(args.graph)
    mapping = ExposureMapping.parse(args.hop)
    R = args.prob_reps or 10000
    if args.design == "complete":
        support = math.comb(g.n, n_treated(g.n, args.p))
        use_enum = args.enumerate == "yes" or (args.enumerate == "auto" and support <= R)
        if use_enum:
            a = enumerate_support(g.n, args.p)
        else:
            a = complete_randomization(g.n, args.p, R, args.seed, allow_repetitions=False)
    elif args.design == "bernoulli":
        if args.enumerate == "yes":
            raise ParameterError("enumeration is only available for complete randomization")
        support = 2 ** g.n
        a = bernoulli_assignment(g.n, args.p, R, args.seed, distinct=True)
    else:
        if not args.clusters:
            raise ParameterError("--clusters is required for the cluster design")
        c = load_clustering(args.clusters)
        support = 2 ** c.n_clusters
        a = cluster_randomization(c, args.p, R, args.seed, distinct=True)
    probs = exposure_probabilities(g, a, mapping, want_joint=not args.no_joint)
    print(f"support_size={support} replicates={probs.replicates} exact={probs.exact}")
    if args.out:
        save_probabilities(probs, args.out)
    return 0


def _cmd_expose(args):
    g = load_graph(args.graph)
    if args.assignment:
        z = load_assignments(args.assignment).vectors[0]
    else:
        ids = [int(x) for x in args.treated.split(",") if x.strip()]
        ids = [i - 1 for i in ids] if args.one_based else ids
        if any(i < 0 or i >= g.n for i in ids):
            raise ParameterError("treated id out of range")
        z = np.zeros(g.n, dtype=np.uint8)
        z[ids] = 1
    if len(z) != g.n:
        raise ParameterError(f"assignment has {len(z)} units, network has {g.n}")
    e = map_exposures(g, z, args.hop)
    base = 1 if args.one_based else 0
    rows = [{"unit": i + base, "z": int(z[i]), "condition": c, "label": lab}
            for i, (c, lab) in enumerate(zip(e.codes(), e.labels()))]
    if args.format == "json":
        text = "".join(json.dumps(r) + "\n" for r in rows)
    else:
        text = "unit,z,condition,label\n" + "".join(
            f"{r['unit']},{r['z']},{r['condition']},{r['label']}\n" for r in rows)
    _emit(text, args.out)
    return 0


def _cmd_estimate(args):
    g = load_graph(args.graph)
    z = load_assignments(args.assignment).vectors[0]
    y = load_observed(args.outcomes)
    probs = load_probabilities(args.probs)
    if not (len(z) == len(y) == probs.n == g.n):
        raise ParameterError("network, assignment, outcomes and probabilities disagree on n")
    e = map_exposures(g, z, probs.mapping)
    kinds = ("ht", "hajek") if args.estimator == "both" else (args.estimator,)
    lines = []
    for spec in args.contrast:
        if ":" not in spec:
            raise ParameterError(f"contrast {spec!r} must look like k:l")
        k, l = spec.split(":", 1)
        for kind in kinds:
            if kind == "ht" and probs.joint is not None:
                variance = "conservative"
            elif kind == "ht":
                variance = "none"
            else:
                variance = "linearized" if probs.joint is not None else "none"
            rep = estimate_contrast(e, y, probs, k, l, estimator=kind, restrict=args.restrict,
                                    variance=variance, alpha=args.alpha)
            lines.append(json.dumps(rep.as_dict()))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_hier(args):
    d = load_hierarchical(args.data)
    rep = marginal_effects(d, args.alpha)
    _emit(json.dumps(rep.as_dict(), indent=1) + "\n", args.out)
    return 0


def _cmd_simulate(args):
    cfg = load_config(args.scenario, seed=args.seed, reps=args.reps,
                      prob_reps=args.prob_reps, threads=args.threads)
    res = run_scenario(cfg)
    out = Path(args.out or f"out_{cfg.name}")
    res.write(out, args.format)
    for row in res.summary:
        d = row.as_dict()
        cell = " ".join(f"{k}={d[k]}" for k in row.cell)
        print(f"{cell} {row.estimand} {row.estimator}: bias={row.bias:.4g} sd={row.sd:.4g} "
              f"rmse={row.rmse:.4g} mean_se={row.mean_se:.4g} coverage={row.coverage:.3f}")
    print(f"wrote {out}/summary.{args.format}, replicates.{args.format}, meta.json")
    return 0


_COMMANDS = {"graph": _cmd_graph, "assign": _cmd_assign, "cluster": _cmd_cluster,
             "probs": _cmd_probs, "expose": _cmd_expose, "estimate": _cmd_estimate,
             "hier-estimate": _cmd_hier, "simulate": _cmd_simulate}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (ParameterError, ParseError, InconsistentProbabilityError, FileNotFoundError) as exc:
        print(f"netspill: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
