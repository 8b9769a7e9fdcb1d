"""Undirected interference networks: generation, perturbation and file I/O."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError, ParseError


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on units ``0..n-1``.

    ``edges`` is an ``(E, 2)`` integer array with ``u < v`` in every row,
    sorted lexicographically. Use :meth:`from_edges` to build one from
    arbitrary pairs.
    """

    n: int
    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if e.size:
            if e.min() < 0 or e.max() >= self.n:
                raise ParameterError("edge endpoint outside [0, n)")
            if np.any(e[:, 0] == e[:, 1]):
                raise ParameterError("self-loops are not allowed")
            if np.any(e[:, 0] > e[:, 1]):
                raise ParameterError("edges must be stored with u < v")
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @classmethod
    def from_edges(cls, n, pairs):
        pairs = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs,
                           dtype=np.int64).reshape(-1, 2)
        if pairs.size and np.any(pairs[:, 0] == pairs[:, 1]):
            raise ParameterError("self-loops are not allowed")
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        e = np.unique(np.column_stack([lo, hi]), axis=0) if pairs.size else pairs
        return cls(int(n), e)

    @classmethod
    def from_adjacency(cls, a):
        a = np.asarray(a.toarray() if sp.issparse(a) else a)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ParameterError("adjacency matrix must be square")
        if not np.array_equal(a, a.T):
            raise ParameterError("adjacency matrix must be symmetric")
        if np.any(np.diag(a) != 0):
            raise ParameterError("adjacency matrix must have a zero diagonal")
        u, v = np.nonzero(np.triu(a, 1))
        return cls(a.shape[0], np.column_stack([u, v]))

    @property
    def n_edges(self):
        return len(self.edges)

    @cached_property
    def adjacency(self):
        """Symmetric CSR adjacency matrix with int8 entries."""
        e = self.edges
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        data = np.ones(len(rows), dtype=np.int8)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    @cached_property
    def second_degree(self):
        """CSR indicator of pairs at shortest-path distance exactly two."""
        a = self.adjacency.astype(np.int32)
        two = (a @ a).tocsr()
        two.data[:] = 1
        two = two - two.multiply(a)
        two.setdiag(0)
        two.eliminate_zeros()
        two = (two > 0).astype(np.int8)
        return two.tocsr()

    @cached_property
    def degrees(self):
        return np.asarray(self.adjacency.sum(axis=1)).ravel().astype(np.int64)

    @cached_property
    def second_degrees(self):
        """Number of units at distance exactly two, per unit."""
        return np.asarray(self.second_degree.sum(axis=1)).ravel().astype(np.int64)

    def neighbors(self, i):
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]].copy()

    def edge_set(self):
        return {(int(u), int(v)) for u, v in self.edges}

    def to_dense(self):
        return self.adjacency.toarray().astype(np.int8)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n, self.edges.tobytes()))

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.n_edges})"


def generate_small_world(n, mean_degree=4, rewire_prob=0.1, seed=None):
    """Watts-Strogatz small-world graph with an exact edge count.

    Starts from a ring lattice where each unit links to ``mean_degree / 2``
    neighbours on each side, then rewires each lattice edge ``(u, v)`` with
    probability ``rewire_prob`` to ``(u, w)`` with ``w`` drawn uniformly
    among units that are neither ``u`` nor already adjacent to ``u``.
    """
    if mean_degree < 0 or mean_degree % 2:
        raise ParameterError(f"mean_degree must be a non-negative even integer, got {mean_degree}")
    if mean_degree >= n:
        raise ParameterError(f"mean_degree ({mean_degree}) must be smaller than n ({n})")
    if not 0.0 <= rewire_prob <= 1.0:
        raise ParameterError("rewire_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    half = mean_degree // 2
    nbrs = [set() for _ in range(n)]
    lattice = []
    for j in range(1, half + 1):
        for u in range(n):
            v = (u + j) % n
            nbrs[u].add(v)
            nbrs[v].add(u)
            lattice.append((u, v))

    for u, v in lattice:
        if rng.random() >= rewire_prob:
            continue
        if len(nbrs[u]) >= n - 1:
            continue
        # rejection: re-draw until the new endpoint is valid
        while True:
            w = int(rng.integers(n))
            if w != u and w not in nbrs[u]:
                break
        nbrs[u].discard(v)
        nbrs[v].discard(u)
        nbrs[u].add(w)
        nbrs[w].add(u)

    pairs = [(u, v) for u in range(n) for v in nbrs[u] if u < v]
    return Graph.from_edges(n, pairs)


def second_degree_set(g, i):
    """Units at shortest-path distance exactly 2 from ``i``."""
    if not 0 <= i < g.n:
        raise ParameterError(f"unit {i} outside [0, {g.n})")
    row = g.second_degree.getrow(i)
    return set(int(j) for j in row.indices)


def remove_ties(g, proportion, seed=None):
    """Drop ``round(proportion * E)`` edges chosen uniformly without replacement.

    The edges are removed in the order of a seeded permutation, so for a
    fixed seed a larger proportion removes a superset of the edges removed
    by a smaller one.
    """
    if not 0.0 <= proportion <= 1.0:
        raise ParameterError("proportion must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    order = rng.permutation(g.n_edges)
    k = int(round(proportion * g.n_edges))
    keep = np.sort(order[k:])
    return Graph(g.n, g.edges[keep])


def bfs_distances(g, source, limit=None):
    """Hop distances from ``source``; unreachable units get -1."""
    a = g.adjacency
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[source] = 0
    frontier = np.array([source])
    d = 0
    while frontier.size and (limit is None or d < limit):
        d += 1
        nxt = np.unique(np.concatenate([a.indices[a.indptr[u]:a.indptr[u + 1]] for u in frontier]))
        nxt = nxt[dist[nxt] < 0]
        dist[nxt] = d
        frontier = nxt
    return dist


# -- file formats ---------------------------------------------------------

def save_graph(g, path, dense=False):
    """Write ``g`` as an edge-list CSV (default) or dense 0/1 CSV."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        if dense:
            w = csv.writer(fh)
            for row in g.to_dense():
                w.writerow(int(x) for x in row)
        else:
            fh.write(f"# n={g.n}\n")
            w = csv.writer(fh)
            w.writerow(["u", "v"])
            for u, v in g.edges:
                w.writerow([int(u), int(v)])


def load_graph(path):
    """Read an edge list or a dense 0/1 matrix (comma or whitespace separated)."""
    path = Path(path)
    with path.open() as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty graph file", path=path)
    first = next((i for i, ln in enumerate(lines) if ln.strip() and not ln.startswith("#")), None)
    if first is None:
        raise ParseError("no data rows", path=path)
    if lines[first].replace(" ", "") == "u,v":
        return _parse_edge_list(lines, first, path)
    return _parse_dense(lines, path)


def _parse_edge_list(lines, header_idx, path):
    declared = None
    for lineno, ln in enumerate(lines[:header_idx], start=1):
        s = ln.lstrip("#").strip()
        if s.startswith("n="):
            try:
                declared = int(s[2:])
            except ValueError:
                raise ParseError(f"bad n declaration {s!r}", line=lineno, path=path) from None
    pairs = []
    linenos = []
    for lineno, ln in enumerate(lines[header_idx + 1:], start=header_idx + 2):
        if not ln.strip() or ln.startswith("#"):
            continue
        parts = [p.strip() for p in ln.split(",")]
        if len(parts) != 2:
            raise ParseError("expected two columns u,v", line=lineno, path=path)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer unit id in {ln!r}", line=lineno, path=path) from None
        if u < 0 or v < 0:
            raise ParseError("negative unit id", line=lineno, path=path)
        if u == v:
            raise ParseError(f"self-loop on unit {u}", line=lineno, path=path)
        if u > v:
            raise ParseError("edge rows must satisfy u < v", line=lineno, path=path)
        if declared is not None and v >= declared:
            raise ParseError(f"unit id {v} >= declared n={declared}", line=lineno, path=path)
        pairs.append((u, v))
        linenos.append(lineno)
    seen = {}
    for (u, v), lineno in zip(pairs, linenos):
        if (u, v) in seen:
            raise ParseError(f"duplicate edge ({u},{v})", line=lineno, path=path)
        seen[(u, v)] = lineno
    n = declared if declared is not None else (max((v for _, v in pairs), default=-1) + 1)
    return Graph.from_edges(n, pairs)


def _parse_dense(lines, path):
    rows = []
    linenos = []
    for lineno, ln in enumerate(lines, start=1):
        if not ln.strip() or ln.startswith("#"):
            continue
        try:
            vals = [int(x) for x in ln.replace(",", " ").split()]
        except ValueError:
            raise ParseError(f"non-integer entry in {ln!r}", line=lineno, path=path) from None
        if any(x not in (0, 1) for x in vals):
            raise ParseError("dense entries must be 0 or 1", line=lineno, path=path)
        rows.append(vals)
        linenos.append(lineno)
    n = len(rows)
    for r, lineno in zip(rows, linenos):
        if len(r) != n:
            raise ParseError(f"row has {len(r)} entries, expected {n}", line=lineno, path=path)
    a = np.array(rows, dtype=np.int8)
    for i, lineno in enumerate(linenos):
        if a[i, i]:
            raise ParseError(f"self-loop on unit {i} (diagonal entry)", line=lineno, path=path)
        bad = np.nonzero(a[i] != a[:, i])[0]
        if bad.size:
            raise ParseError(f"asymmetric entry ({i},{bad[0]})", line=lineno, path=path)
    return Graph.from_adjacency(a)
