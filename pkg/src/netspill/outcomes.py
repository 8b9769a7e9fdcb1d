"""Data-generating processes for the simulation studies.

Potential outcomes follow a *dilated effects* pattern: every condition's
outcome is a fixed multiple of the unit's untreated baseline.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParameterError, ParseError
from .exposure import ExposureMapping, condition_indices

# Multipliers listed in the mapping's condition order (all-ones first,
# all-zeros last, which is always 1).
POSITIVE_MULTIPLIERS = {
    "none": (1.5, 1.0),
    "hop1": (2.0, 1.5, 1.25, 1.0),
    "hop2": (2.25, 2.0, 1.75, 1.5, 1.5, 1.25, 1.125, 1.0),
}
NEGATIVE_MULTIPLIERS = {
    "none": (1.5, 1.0),
    "hop1": (1.25, 1.5, 0.75, 1.0),
    # additive: 1 + 0.5*own - 0.25*any_peer - 0.125*any_peer_of_peer
    "hop2": (1.125, 1.25, 1.375, 1.5, 0.625, 0.75, 0.875, 1.0),
}
# cells (treated, psi), (treated, phi), (control, psi), (control, phi)
HIERARCHICAL_MULTIPLIERS = (2.0, 1.5, 1.25, 1.0)


def default_multipliers(kind, spillover="positive"):
    table = {"positive": POSITIVE_MULTIPLIERS, "negative": NEGATIVE_MULTIPLIERS}
    if spillover not in table:
        raise ParameterError(f"spillover must be 'positive' or 'negative', got {spillover!r}")
    if kind not in table[spillover]:
        raise ParameterError(f"no default multipliers for mapping {kind!r}")
    return table[spillover][kind]


@dataclass(frozen=True)
class DGPSpec:
    """Dilated-effects data-generating process on a network."""

    interference: str = "hop1"
    multipliers: tuple | None = None
    kappa: float = 0.1
    spillover: str = "positive"
    seed: int | None = None

    @property
    def mapping(self):
        return ExposureMapping.parse(self.interference)

    def resolved_multipliers(self):
        m = self.multipliers
        if m is None:
            m = default_multipliers(self.mapping.kind, self.spillover)
        return _check_multipliers(m, self.mapping)


def _check_multipliers(mult, mapping):
    mult = tuple(float(x) for x in mult)
    K = mapping.K
    if len(mult) == K - 1 and mapping.kind != "full":
        mult = mult + (1.0,)
    if len(mult) != K:
        raise ParameterError(f"expected {K} multipliers for mapping {mapping.kind}, got {len(mult)}")
    if mult[mapping.index(mapping.bottom)] != 1.0:
        raise ParameterError("the multiplier of the all-zero condition must be 1")
    return mult


@dataclass(frozen=True, eq=False)
class PotentialOutcomeTable:
    """``values[k, i]`` is unit ``i``'s potential outcome in condition ``k``."""

    mapping: ExposureMapping
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != self.mapping.K:
            raise ParameterError(f"table must have {self.mapping.K} rows")
        if not np.all(np.isfinite(v)):
            raise ParameterError("potential outcomes must be finite")
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return self.values.shape[1]

    def column(self, cond):
        return self.values[self.mapping.index(cond)]

    def mean(self, cond):
        return float(self.column(cond).mean())


def dilated_baseline(g, kappa=0.1, seed=None):
    """Untreated outcomes ``|eps| + kappa * (deg1 + deg2)`` with standard normal ``eps``."""
    if kappa < 0:
        raise ParameterError("kappa must be non-negative")
    rng = np.random.default_rng(seed)
    eps = np.abs(rng.standard_normal(g.n))
    return eps + kappa * (g.degrees + g.second_degrees)


def dilated_outcomes(baseline, mapping="hop1", multipliers=None):
    mapping = ExposureMapping.parse(mapping)
    if multipliers is None:
        multipliers = default_multipliers(mapping.kind)
    mult = _check_multipliers(multipliers, mapping)
    baseline = np.asarray(baseline, dtype=float)
    return PotentialOutcomeTable(mapping, np.outer(mult, baseline))


def generate_outcomes(g, spec):
    """Baseline plus dilated table for ``spec`` on graph ``g``."""
    base = dilated_baseline(g, spec.kappa, spec.seed)
    return dilated_outcomes(base, spec.mapping, spec.resolved_multipliers())


def realize_observed(exposure, table):
    """``Y_i = sum_k I(D_i = d_k) y_i(d_k)``."""
    idx = exposure.index if hasattr(exposure, "index") else np.asarray(exposure)
    if idx.ndim == 2:
        # one-hot matrix
        if idx.shape != (table.n, table.mapping.K):
            raise ParameterError("exposure matrix shape does not match the table")
        return (idx * table.values.T).sum(axis=1)
    if len(idx) != table.n:
        raise ParameterError("exposure length does not match the table")
    return table.values[idx, np.arange(table.n)]


def true_estimand(table, k, l, units=None):
    """Finite-population contrast ``mean_i y_i(d_k) - mean_i y_i(d_l)``."""
    a, b = table.column(k), table.column(l)
    if units is not None:
        a, b = a[units], b[units]
    return float(a.mean() - b.mean())


def regime_estimand(table, g):
    """Average effect of moving from nobody treated to everybody treated.

    Each unit's outcome under the all-ones and all-zeros assignments is
    looked up through the table's own (true) mapping.
    """
    ones = condition_indices(g, np.ones(g.n, dtype=np.uint8), table.mapping)
    zeros = condition_indices(g, np.zeros(g.n, dtype=np.uint8), table.mapping)
    i = np.arange(g.n)
    return float(table.values[ones, i].mean() - table.values[zeros, i].mean())


@dataclass(frozen=True, eq=False)
class HierarchicalOutcomes:
    """Stratified-interference outcomes for two-stage designs.

    A unit's multiplier depends on its own treatment and on how saturated
    its neighbourhood is: at ``group`` level that is its own group's arm,
    at ``tract`` level the share of its tract's units sitting in psi-arm
    groups, which moves the multiplier linearly between the phi and psi
    cells.
    """

    baseline: np.ndarray
    group_of: np.ndarray
    psi: float
    phi: float
    multipliers: tuple = HIERARCHICAL_MULTIPLIERS
    level: str = "group"
    tract_of: np.ndarray | None = None

    def __post_init__(self):
        if self.level not in ("group", "tract"):
            raise ParameterError("level must be 'group' or 'tract'")
        if self.level == "tract" and self.tract_of is None:
            raise ParameterError("tract-level outcomes need a unit-to-tract map")
        if len(self.multipliers) != 4:
            raise ParameterError("hierarchical multipliers are (1,psi), (1,phi), (0,psi), (0,phi)")

    def psi_weight(self, unit_arm):
        """Position of each unit's exposure between phi (0) and psi (1)."""
        unit_arm = np.asarray(unit_arm, dtype=float)
        if self.psi == self.phi:
            return np.ones_like(unit_arm)
        if self.level == "group":
            return unit_arm
        tracts = np.asarray(self.tract_of)
        w = np.empty_like(unit_arm)
        for t in np.unique(tracts):
            m = tracts == t
            w[m] = unit_arm[m].mean()
        return w

    def multiplier(self, z, weight):
        m1psi, m1phi, m0psi, m0phi = self.multipliers
        z = np.asarray(z)
        treated = m1phi + weight * (m1psi - m1phi)
        control = m0phi + weight * (m0psi - m0phi)
        return np.where(z == 1, treated, control)

    def realize(self, z, unit_arm):
        return self.baseline * self.multiplier(z, self.psi_weight(unit_arm))

    def estimands(self):
        """True direct/indirect/total/overall effects with full saturation.

        Group-level averages are averaged over groups. The overall effect
        uses each group's exact treated share under complete randomization.
        """
        m1psi, m1phi, m0psi, m0phi = self.multipliers
        groups = np.unique(self.group_of)
        gb = np.array([self.baseline[self.group_of == g].mean() for g in groups])
        sizes = np.array([(self.group_of == g).sum() for g in groups])
        s_psi = np.array([round(self.psi * s) / s for s in sizes])
        s_phi = np.array([round(self.phi * s) / s for s in sizes])
        yb = gb.mean()
        over_psi = (gb * (s_psi * m1psi + (1 - s_psi) * m0psi)).mean()
        over_phi = (gb * (s_phi * m1phi + (1 - s_phi) * m0phi)).mean()
        return {
            "direct_psi": (m1psi - m0psi) * yb,
            "direct_phi": (m1phi - m0phi) * yb,
            "indirect": (m0psi - m0phi) * yb,
            "total": (m1psi - m0phi) * yb,
            "overall": over_psi - over_phi,
        }


def hierarchical_outcomes(group_of, psi, phi, multipliers=HIERARCHICAL_MULTIPLIERS,
                          level="group", tract_of=None, seed=None):
    """Absolute-normal baselines with dilated two-stage multipliers."""
    group_of = np.asarray(group_of)
    if level == "tract" and tract_of is None:
        raise ParameterError("tract-level outcomes need a unit-to-tract map")
    rng = np.random.default_rng(seed)
    base = np.abs(rng.standard_normal(len(group_of)))
    return HierarchicalOutcomes(base, group_of, psi, phi, tuple(multipliers), level,
                                None if tract_of is None else np.asarray(tract_of))


# -- file formats ---------------------------------------------------------

def save_potential_outcomes(table, path):
    with Path(path).open("w", newline="") as fh:
        fh.write(f"# mapping={table.mapping.kind}\n")
        w = csv.writer(fh)
        w.writerow(["unit", "condition", "value"])
        for i in range(table.n):
            for k, code in enumerate(table.mapping.codes):
                w.writerow([i, code, repr(float(table.values[k, i]))])


def load_potential_outcomes(path, mapping=None):
    path = Path(path)
    meta_mapping = None
    rows = []
    with path.open() as fh:
        for lineno, ln in enumerate(fh, start=1):
            ln = ln.strip()
            if not ln:
                continue
            if ln.startswith("#"):
                for tok in ln[1:].split():
                    if tok.startswith("mapping="):
                        meta_mapping = tok.split("=", 1)[1]
                continue
            rows.append((lineno, ln))
    if not rows or rows[0][1].replace(" ", "") != "unit,condition,value":
        raise ParseError("expected header unit,condition,value", path=path)
    m = ExposureMapping.parse(mapping or meta_mapping or "hop1")
    cells = {}
    for lineno, ln in rows[1:]:
        try:
            unit, cond, val = ln.split(",")
            cells[(int(unit), m.index(cond.strip()))] = float(val)
        except (ValueError, ParameterError) as exc:
            raise ParseError(f"bad row ({exc})", line=lineno, path=path) from None
    n = max(u for u, _ in cells) + 1
    if len(cells) != n * m.K:
        raise ParseError(f"expected {n * m.K} cells, found {len(cells)}", path=path)
    vals = np.zeros((m.K, n))
    for (u, k), v in cells.items():
        vals[k, u] = v
    return PotentialOutcomeTable(m, vals)


def load_observed(path):
    """Observed outcomes CSV with header ``unit,y``."""
    path = Path(path)
    with path.open() as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["unit", "y"]:
            raise ParseError("expected header unit,y", line=1, path=path)
        vals = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                vals[int(row[0])] = float(row[1])
            except (ValueError, IndexError):
                raise ParseError(f"bad row {row!r}", line=lineno, path=path) from None
    n = max(vals) + 1
    if len(vals) != n:
        raise ParseError("outcome file must list every unit 0..n-1 once", path=path)
    return np.array([vals[i] for i in range(n)])

