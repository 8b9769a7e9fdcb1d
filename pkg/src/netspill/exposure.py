"""Exposure mappings and generalized probabilities of exposure.

A mapping turns an assignment vector plus the network into one discrete
condition per unit. Conditions are identified by short codes (``d11``,
``d10``, ...) and carry human-readable labels; both are accepted wherever
a condition is named.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ParameterError, ParseError

_HOP1_LABELS = ("dir_ind1", "isol_dir", "ind1", "no")
_HOP2_LABELS = ("dir_ind1_ind2", "dir_ind1", "dir_ind2", "isol_dir",
                "ind1_ind2", "ind1", "ind2", "no")
_NONE_LABELS = ("treated", "control")
_FULL_LABELS = ("all_treated", "all_control", "mixed")

LADDER = ("none", "hop1", "hop2")


def _bit_codes(width):
    # condition order: all-ones first, all-zeros last (d11, d10, d01, d00)
    return tuple("d" + format((1 << width) - 1 - k, f"0{width}b") for k in range(1 << width))


@dataclass(frozen=True)
class ExposureMapping:
    """One of ``none``, ``hop1``, ``hop2`` or ``full``.

    ``full`` is the full-neighbourhood mapping used with graph cluster
    randomization: a unit is ``d1full`` when it and all of its peers are
    treated, ``d0full`` when none are, and ``dmixed`` otherwise.
    """

    kind: str

    def __post_init__(self):
        if self.kind not in ("none", "hop1", "hop2", "full"):
            raise ParameterError(f"unknown exposure mapping {self.kind!r}")

    @classmethod
    def parse(cls, value):
        if isinstance(value, ExposureMapping):
            return value
        v = str(value).strip().lower()
        aliases = {"0": "none", "1": "hop1", "2": "hop2", "hop0": "none"}
        return cls(aliases.get(v, v))

    @cached_property
    def codes(self):
        if self.kind == "none":
            return ("d1", "d0")
        if self.kind == "hop1":
            return _bit_codes(2)
        if self.kind == "hop2":
            return _bit_codes(3)
        return ("d1full", "d0full", "dmixed")

    @cached_property
    def labels(self):
        return {"none": _NONE_LABELS, "hop1": _HOP1_LABELS,
                "hop2": _HOP2_LABELS, "full": _FULL_LABELS}[self.kind]

    @property
    def K(self):
        return len(self.codes)

    @property
    def top(self):
        """Condition reached when every unit is treated."""
        return self.codes[0]

    @property
    def bottom(self):
        """Condition reached when no unit is treated."""
        return self.codes[1] if self.kind == "full" else self.codes[-1]

    def index(self, cond):
        """Position of ``cond`` given as code, label or integer index."""
        if isinstance(cond, (int, np.integer)):
            if not 0 <= cond < self.K:
                raise ParameterError(f"condition index {cond} out of range for {self.kind}")
            return int(cond)
        if cond in self.codes:
            return self.codes.index(cond)
        if cond in self.labels:
            return self.labels.index(cond)
        raise ParameterError(f"unknown condition {cond!r} for mapping {self.kind}")

    def code(self, cond):
        return self.codes[self.index(cond)]

    def label(self, cond):
        return self.labels[self.index(cond)]


@dataclass(frozen=True, eq=False)
class Exposure:
    """Realized condition per unit; ``matrix`` gives the one-hot ``n x K`` view."""

    mapping: ExposureMapping
    index: np.ndarray

    @property
    def n(self):
        return len(self.index)

    @property
    def matrix(self):
        m = np.zeros((self.n, self.mapping.K), dtype=np.int8)
        m[np.arange(self.n), self.index] = 1
        return m

    def indicator(self, cond):
        return self.index == self.mapping.index(cond)

    def codes(self):
        return [self.mapping.codes[k] for k in self.index]

    def labels(self):
        return [self.mapping.labels[k] for k in self.index]


def condition_indices(g, z, mapping):
    """Condition index for every unit under each assignment.

    ``z`` may be a single vector of length ``n`` or an ``(R, n)`` array;
    the result has the same leading shape.
    """
    mapping = ExposureMapping.parse(mapping)
    z = np.asarray(z)
    single = z.ndim == 1
    zz = np.atleast_2d(z)
    if zz.shape[1] != g.n:
        raise ParameterError(f"assignment length {zz.shape[1]} does not match n={g.n}")
    zz = zz.astype(np.int8, copy=False)
    own = zz.astype(np.int16)

    if mapping.kind == "none":
        idx = 1 - own
    elif mapping.kind == "full":
        a = g.adjacency.astype(np.int32)
        treated_nbrs = np.asarray((a @ zz.T.astype(np.int32))).T
        deg = g.degrees[None, :]
        all1 = (own == 1) & (treated_nbrs == deg)
        all0 = (own == 0) & (treated_nbrs == 0)
        idx = np.where(all1, 0, np.where(all0, 1, 2))
    else:
        a = g.adjacency.astype(np.int32)
        hit1 = (np.asarray(a @ zz.T.astype(np.int32)).T > 0).astype(np.int16)
        if mapping.kind == "hop1":
            idx = (1 - own) * 2 + (1 - hit1)
        else:
            a2 = g.second_degree.astype(np.int32)
            hit2 = (np.asarray(a2 @ zz.T.astype(np.int32)).T > 0).astype(np.int16)
            idx = (1 - own) * 4 + (1 - hit1) * 2 + (1 - hit2)
    idx = idx.astype(np.int8)
    return idx[0] if single else idx


def map_exposures(g, z, mapping):
    """Exposure condition of each unit under the single assignment ``z``."""
    mapping = ExposureMapping.parse(mapping)
    z = np.asarray(z)
    if z.ndim != 1:
        raise ParameterError("map_exposures takes a single assignment vector")
    return Exposure(mapping, condition_indices(g, z, mapping))


@dataclass(eq=False)
class ExposureProbabilities:
    """Individual and (optionally) pairwise exposure probabilities.

    ``individual[k, i]`` is the probability that unit ``i`` is in condition
    ``k``; ``joint[k, l, i, j]`` that ``i`` is in ``k`` and ``j`` in ``l``.
    ``draws`` keeps the per-draw condition indices when requested, which
    the simulation variant of the constant-effects variance resamples.
    """

    mapping: ExposureMapping
    individual: np.ndarray
    joint: np.ndarray | None
    replicates: int
    exact: bool
    draws: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self):
        return self.individual.shape[1]

    def pi(self, cond):
        return self.individual[self.mapping.index(cond)]

    def pij(self, k, l):
        if self.joint is None:
            raise ParameterError(
                "joint exposure probabilities were not computed; pass want_joint=True")
        return self.joint[self.mapping.index(k), self.mapping.index(l)]


def exposure_probabilities(g, assignments, mapping, want_joint=True, keep_draws=False,
                           chunk=2048):
    """Share of assignment vectors that put each unit (pair) in each condition.

    Counts are tallied as integers over chunks of draws and divided once at
    the end, so sharding the draws cannot change the result. When
    ``assignments`` is the enumerated support the probabilities are exact.
    """
    mapping = ExposureMapping.parse(mapping)
    vecs = assignments.vectors
    R, n = vecs.shape
    if n != g.n:
        raise ParameterError(f"assignment length {n} does not match n={g.n}")
    if R == 0:
        raise ParameterError("need at least one assignment vector")
    K = mapping.K
    counts = np.zeros((K, n), dtype=np.int64)
    jcounts = np.zeros((K * n, K * n), dtype=np.int64) if want_joint else None
    kept = np.empty((R, n), dtype=np.int8) if keep_draws else None

    for start in range(0, R, chunk):
        idx = condition_indices(g, vecs[start:start + chunk], mapping)
        if keep_draws:
            kept[start:start + len(idx)] = idx
        for k in range(K):
            counts[k] += (idx == k).sum(axis=0)
        if want_joint:
            onehot = np.zeros((len(idx), K * n), dtype=np.float32)
            cols = idx.astype(np.int64) * n + np.arange(n)[None, :]
            np.put_along_axis(onehot, cols, 1.0, axis=1)
            # float32 products of 0/1 entries are exact below 2**24 per chunk
            jcounts += np.rint(onehot.T @ onehot).astype(np.int64)

    individual = counts / R
    joint = None
    if want_joint:
        joint = (jcounts / R).reshape(K, n, K, n).transpose(0, 2, 1, 3).copy()
    return ExposureProbabilities(mapping, individual, joint, R, assignments.exact, kept)


def misspecify(true_mapping, assumed_mapping):
    """Correspondence between true and assumed conditions along none/hop1/hop2.

    Returns ``{true_code: [assumed codes]}``. A coarser assumed mapping merges
    several true conditions into one; a finer one splits each true condition
    into several. Codes correspond by truncating the finer code's bits.
    """
    t = ExposureMapping.parse(true_mapping)
    a = ExposureMapping.parse(assumed_mapping)
    if t.kind not in LADDER or a.kind not in LADDER:
        raise ParameterError("misspecification is only defined on the none/hop1/hop2 ladder")
    wt, wa = len(t.codes[0]) - 1, len(a.codes[0]) - 1
    if wa <= wt:
        return {c: ["d" + c[1:1 + wa]] for c in t.codes}
    return {c: [s for s in a.codes if s[1:1 + wt] == c[1:]] for c in t.codes}


# -- file formats ---------------------------------------------------------

def save_probabilities(probs, path, joint=True):
    m = probs.mapping
    with Path(path).open("w", newline="") as fh:
        fh.write(f"# mapping={m.kind} n={probs.n} replicates={probs.replicates} "
                 f"exact={int(probs.exact)}\n")
        w = csv.writer(fh)
        with_joint = joint and probs.joint is not None
        if with_joint:
            w.writerow(["unit", "condition", "prob", "unit_j", "condition_j"])
        else:
            w.writerow(["unit", "condition", "prob"])
        for i in range(probs.n):
            for k, code in enumerate(m.codes):
                row = [i, code, repr(float(probs.individual[k, i]))]
                w.writerow(row + ["", ""] if with_joint else row)
        if with_joint:
            K = m.K
            for k in range(K):
                for l in range(K):
                    ii, jj = np.nonzero(probs.joint[k, l])
                    for i, j in zip(ii, jj):
                        w.writerow([i, m.codes[k], repr(float(probs.joint[k, l, i, j])),
                                    j, m.codes[l]])


def load_probabilities(path):
    path = Path(path)
    meta = {}
    with path.open() as fh:
        lines = fh.read().splitlines()
    body = []
    for lineno, ln in enumerate(lines, start=1):
        if ln.startswith("#"):
            for tok in ln[1:].split():
                if "=" in tok:
                    key, val = tok.split("=", 1)
                    meta[key] = val
        elif ln.strip():
            body.append((lineno, ln))
    if "mapping" not in meta or "n" not in meta:
        raise ParseError("missing '# mapping=... n=...' metadata line", path=path)
    mapping = ExposureMapping.parse(meta["mapping"])
    n = int(meta["n"])
    header = [h.strip() for h in body[0][1].split(",")]
    if header[:3] != ["unit", "condition", "prob"]:
        raise ParseError("expected header unit,condition,prob", line=body[0][0], path=path)
    has_joint = "unit_j" in header
    K = mapping.K
    individual = np.zeros((K, n))
    joint = np.zeros((K, K, n, n)) if has_joint else None
    for lineno, ln in body[1:]:
        parts = ln.split(",")
        try:
            rec = dict(zip(header, parts))
            i = int(rec["unit"])
            k = mapping.index(rec["condition"])
            prob = float(rec["prob"])
            if has_joint and rec.get("unit_j", ""):
                j = int(rec["unit_j"])
                l = mapping.index(rec["condition_j"])
                joint[k, l, i, j] = prob
            else:
                individual[k, i] = prob
        except (ValueError, KeyError, ParameterError) as exc:
            raise ParseError(f"bad probability row ({exc})", line=lineno, path=path) from None
    return ExposureProbabilities(mapping, individual, joint,
                                 int(meta.get("replicates", 0)),
                                 bool(int(meta.get("exact", 0))))
