"""Randomization designs: unit-level, enumerated, graph-cluster and two-stage."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse.csgraph as csgraph

from .errors import ParameterError, ParseError
from .netgraph import bfs_distances

DEFAULT_ENUMERATION_CAP = 10**6


def n_treated(n, p):
    # Python's round() is half-to-even, which pins support sizes unambiguously.
    return int(round(p * n))


@dataclass(frozen=True, eq=False)
class AssignmentSet:
    """``R`` treatment vectors drawn from (or enumerating) one design.

    ``vectors`` is an ``(R, n)`` uint8 array. ``design_kind`` is one of
    ``complete``, ``bernoulli``, ``cluster`` or ``enumerated``.
    """

    vectors: np.ndarray
    design_kind: str
    p: float
    distinct: bool = False

    def __post_init__(self):
        v = np.ascontiguousarray(self.vectors, dtype=np.uint8)
        if v.ndim != 2:
            raise ParameterError("assignment vectors must form a 2-d array")
        if np.any(v > 1):
            raise ParameterError("assignment entries must be 0 or 1")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def n(self):
        return self.vectors.shape[1]

    @property
    def r(self):
        return self.vectors.shape[0]

    @property
    def exact(self):
        return self.design_kind == "enumerated"

    def __len__(self):
        return self.r

    def __getitem__(self, i):
        return self.vectors[i]


@dataclass(frozen=True)
class Clustering:
    labels: np.ndarray
    centers: np.ndarray

    @property
    def n_clusters(self):
        return len(self.centers)

    def members(self, c):
        return np.nonzero(self.labels == c)[0]


@dataclass(frozen=True)
class HierarchicalAssignment:
    group_of: np.ndarray
    group_arm: dict
    z: np.ndarray
    psi: float
    phi: float

    def unit_arm(self):
        """1 for units in psi-arm groups, 0 for phi-arm groups."""
        return np.array([self.group_arm[g] for g in self.group_of], dtype=np.int8)


def _unique_rows(rows, r, n, rng, draw):
    """Collect ``r`` distinct rows from repeated calls to ``draw``."""
    seen = set()
    out = []
    for row in rows:
        key = row.tobytes()
        if key not in seen:
            seen.add(key)
            out.append(row)
            if len(out) == r:
                break
    while len(out) < r:
        batch = draw(max(r - len(out), 16))
        for row in batch:
            key = row.tobytes()
            if key not in seen:
                seen.add(key)
                out.append(row)
                if len(out) == r:
                    break
    return np.array(out, dtype=np.uint8).reshape(r, n)


def _complete_draws(n, m, count, rng):
    keys = rng.random((count, n))
    idx = np.argpartition(keys, m - 1, axis=1)[:, :m] if 0 < m < n else None
    z = np.zeros((count, n), dtype=np.uint8)
    if m == n:
        z[:] = 1
    elif m > 0:
        np.put_along_axis(z, idx, 1, axis=1)
    return z


def complete_randomization(n, p, r=1, seed=None, allow_repetitions=True):
    """Treat exactly ``round(p * n)`` units, uniformly over all such subsets."""
    if not 0.0 < p < 1.0:
        raise ParameterError("p must lie strictly between 0 and 1")
    m = n_treated(n, p)
    if m < 1:
        raise ParameterError(f"round(p*n) = {m}; at least one treated unit required")
    support = math.comb(n, m)
    rng = np.random.default_rng(seed)
    if allow_repetitions:
        return AssignmentSet(_complete_draws(n, m, r, rng), "complete", p, distinct=False)
    if r > support:
        raise ParameterError(
            f"cannot draw {r} distinct assignments from a support of size {support}")
    if support <= DEFAULT_ENUMERATION_CAP and r > support // 2:
        # dense regime: sample rows of the enumerated support directly
        full = _enumerate_complete(n, m)
        pick = np.sort(rng.choice(support, size=r, replace=False))
        vecs = full[rng.permutation(pick)]
    else:
        vecs = _unique_rows(_complete_draws(n, m, r, rng), r, n, rng,
                            lambda k: _complete_draws(n, m, k, rng))
    return AssignmentSet(vecs, "complete", p, distinct=True)


def bernoulli_assignment(n, p, r=1, seed=None, distinct=False):
    """Independent coin flips with success probability ``p`` for every unit."""
    if not 0.0 < p < 1.0:
        raise ParameterError("p must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)

    def draw(k):
        return (rng.random((k, n)) < p).astype(np.uint8)

    if not distinct:
        return AssignmentSet(draw(r), "bernoulli", p)
    if n < 63 and r > 2**n:
        raise ParameterError(f"cannot draw {r} distinct vectors over {2**n} possibilities")
    return AssignmentSet(_unique_rows(draw(r), r, n, rng, draw), "bernoulli", p, distinct=True)


def _enumerate_complete(n, m):
    support = math.comb(n, m)
    out = np.zeros((support, n), dtype=np.uint8)
    for row, combo in enumerate(itertools.combinations(range(n), m)):
        out[row, list(combo)] = 1
    return out


def enumerate_support(n, p, cap=DEFAULT_ENUMERATION_CAP):
    """All vectors of the complete-randomization design, each with probability 1/|support|."""
    m = n_treated(n, p)
    support = math.comb(n, m)
    if support > cap:
        raise ParameterError(
            f"support has {support} assignments (cap {cap}); use Monte Carlo draws instead")
    return AssignmentSet(_enumerate_complete(n, m), "enumerated", p, distinct=True)


def epsilon_net_clustering(g, epsilon, seed=None, order=None):
    """Partition ``g`` around a greedy maximal epsilon-net.

    Units are scanned in ``order`` (a seeded permutation when omitted); a
    unit becomes a center when it is at least ``epsilon`` hops from every
    center chosen so far. Every unit then joins its nearest center, with
    ties going to the lowest center id.
    """
    if epsilon < 1:
        raise ParameterError("epsilon must be at least 1")
    n = g.n
    if order is None:
        order = np.random.default_rng(seed).permutation(n)
    order = np.asarray(order)
    if sorted(order.tolist()) != list(range(n)):
        raise ParameterError("order must be a permutation of the units")

    a = g.adjacency
    blocked = np.zeros(n, dtype=bool)
    centers = []
    radius = epsilon - 1
    for u in order:
        if blocked[u]:
            continue
        centers.append(int(u))
        # block everything within radius, walking through already blocked units too
        blocked[bfs_distances(g, int(u), limit=radius) >= 0] = True

    centers = np.array(sorted(centers), dtype=np.int64)
    dist = csgraph.dijkstra(a, directed=False, unweighted=True, indices=centers,
                            limit=radius + 0.5)
    dist = np.atleast_2d(dist)
    # argmin returns the first minimum, i.e. the lowest center id
    labels = np.argmin(dist, axis=0).astype(np.int64)
    return Clustering(labels=labels, centers=centers)


def cluster_randomization(c, p, r=1, seed=None, mode="bernoulli", distinct=False):
    """Randomize clusters, then copy each cluster's bit to its members."""
    k = c.n_clusters
    if mode == "bernoulli":
        top = bernoulli_assignment(k, p, r, seed, distinct=distinct)
    elif mode == "complete":
        top = complete_randomization(k, p, r, seed, allow_repetitions=not distinct)
    else:
        raise ParameterError(f"unknown cluster randomization mode {mode!r}")
    vecs = top.vectors[:, c.labels]
    return AssignmentSet(vecs, "cluster", p, distinct=top.distinct)


def two_stage_assignment(group_of, psi, phi, share_psi=0.5, seed=None):
    """Two-stage saturation design.

    Stage one assigns ``round(share_psi * G)`` groups to the ``psi`` arm by
    complete randomization over groups; stage two treats exactly
    ``round(saturation * n_g)`` units inside each group.
    """
    group_of = np.asarray(group_of)
    for s in (psi, phi, share_psi):
        if not 0.0 <= s <= 1.0:
            raise ParameterError("saturations and share_psi must lie in [0, 1]")
    groups, sizes = np.unique(group_of, return_counts=True)
    n_psi = n_treated(len(groups), share_psi)
    if n_psi < 1:
        raise ParameterError("round(share_psi * G) must be at least 1")
    for sat, name in ((psi, "psi"), (phi, "phi")):
        counts = np.array([n_treated(s, sat) for s in sizes])
        if np.any(counts == 0) or np.any(counts == sizes):
            raise ParameterError(
                f"{name}={sat:g} leaves a group without treated or without control units")

    rng = np.random.default_rng(seed)
    psi_groups = set(rng.choice(groups, size=n_psi, replace=False).tolist())
    group_arm = {g.item(): int(g.item() in psi_groups) for g in groups}
    z = np.zeros(len(group_of), dtype=np.uint8)
    for g in groups:
        members = np.nonzero(group_of == g)[0]
        sat = psi if group_arm[g.item()] else phi
        m = n_treated(len(members), sat)
        z[rng.choice(members, size=m, replace=False)] = 1
    return HierarchicalAssignment(group_of=group_of, group_arm=group_arm, z=z, psi=psi, phi=phi)


# -- file formats ---------------------------------------------------------

def save_assignments(a, path):
    with Path(path).open("w", newline="") as fh:
        fh.write(f"# design={a.design_kind} p={a.p} distinct={int(a.distinct)}\n")
        w = csv.writer(fh)
        w.writerow(["rep", "unit", "z"])
        for rep, row in enumerate(a.vectors):
            for unit, z in enumerate(row):
                w.writerow([rep, unit, int(z)])


def load_assignments(path):
    path = Path(path)
    meta = {"design": "complete", "p": "nan", "distinct": "0"}
    cells = {}
    with path.open() as fh:
        header_seen = False
        for lineno, ln in enumerate(fh, start=1):
            ln = ln.strip()
            if not ln:
                continue
            if ln.startswith("#"):
                for tok in ln[1:].split():
                    if "=" in tok:
                        key, val = tok.split("=", 1)
                        meta[key] = val
                continue
            if not header_seen:
                if ln.replace(" ", "") != "rep,unit,z":
                    raise ParseError("expected header rep,unit,z", line=lineno, path=path)
                header_seen = True
                continue
            try:
                rep, unit, z = (int(x) for x in ln.split(","))
            except ValueError:
                raise ParseError(f"bad row {ln!r}", line=lineno, path=path) from None
            if z not in (0, 1):
                raise ParseError("z must be 0 or 1", line=lineno, path=path)
            cells[(rep, unit)] = z
    if not cells:
        raise ParseError("no assignment rows", path=path)
    r = max(k[0] for k in cells) + 1
    n = max(k[1] for k in cells) + 1
    if len(cells) != r * n:
        raise ParseError(f"expected {r * n} rows for {r} reps x {n} units, found {len(cells)}",
                         path=path)
    vecs = np.zeros((r, n), dtype=np.uint8)
    for (rep, unit), z in cells.items():
        vecs[rep, unit] = z
    return AssignmentSet(vecs, meta["design"], float(meta["p"]), bool(int(meta["distinct"])))


def save_clustering(c, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["unit", "cluster", "is_center"])
        centers = set(c.centers.tolist())
        for unit, lab in enumerate(c.labels):
            w.writerow([unit, int(lab), int(unit in centers)])


def load_clustering(path):
    path = Path(path)
    with path.open() as fh:
        rows = list(csv.DictReader(fh))
    if not rows or set(rows[0]) != {"unit", "cluster", "is_center"}:
        raise ParseError("expected header unit,cluster,is_center", path=path)
    n = len(rows)
    labels = np.zeros(n, dtype=np.int64)
    centers = {}
    for lineno, row in enumerate(rows, start=2):
        unit, lab, isc = int(row["unit"]), int(row["cluster"]), int(row["is_center"])
        labels[unit] = lab
        if isc:
            centers[lab] = unit
    return Clustering(labels=labels, centers=np.array([centers[k] for k in sorted(centers)]))
