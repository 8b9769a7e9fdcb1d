"""Marginal effect estimators for two-stage (partial interference) designs."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .errors import ParseError, UndefinedEstimateError

COLUMNS = ("group", "group_tr", "indiv_tr", "obs_outcome")
EFFECTS = ("direct_psi", "direct_phi", "indirect", "total", "overall")


@dataclass(frozen=True, eq=False)
class HierarchicalDataset:
    """One row per unit: group id, group arm (1 = psi, 0 = phi), own assignment, outcome."""

    group: np.ndarray
    group_tr: np.ndarray
    indiv_tr: np.ndarray
    obs_outcome: np.ndarray

    def __post_init__(self):
        arrays = [np.asarray(getattr(self, c)) for c in COLUMNS]
        if len({len(a) for a in arrays}) != 1:
            raise ValueError("all columns must have the same length")
        for c, a in zip(COLUMNS, arrays):
            object.__setattr__(self, c, a)
        for g in np.unique(self.group):
            arms = np.unique(self.group_tr[self.group == g])
            if len(arms) > 1:
                raise ValueError(f"group {g} has mixed group_tr values {arms.tolist()}")

    @classmethod
    def from_assignment(cls, assignment, y):
        return cls(assignment.group_of, assignment.unit_arm(), assignment.z, np.asarray(y))

    def __len__(self):
        return len(self.group)

    def groups(self, arm=None):
        g = np.unique(self.group)
        if arm is None:
            return g
        return np.array([x for x in g if self.group_tr[self.group == x][0] == arm])


@dataclass
class MarginalEffectsReport:
    direct_psi: float
    direct_phi: float
    indirect: float
    total: float
    overall: float
    var_direct_psi: float
    var_direct_phi: float
    var_indirect: float
    var_total: float
    var_overall: float
    groups_psi: int
    groups_phi: int
    alpha: float = 0.05
    ci: dict = field(default_factory=dict)

    def effect(self, name):
        return getattr(self, name)

    def variance(self, name):
        return getattr(self, "var_" + name)

    def as_dict(self):
        """Estimates then variances, named as ``<effect>_hat`` / ``var_<effect>_hat``."""
        out = {f"{e}_hat": _num(getattr(self, e)) for e in EFFECTS}
        out.update({f"var_{e}_hat": _num(getattr(self, "var_" + e)) for e in EFFECTS})
        out["groups_psi"] = self.groups_psi
        out["groups_phi"] = self.groups_phi
        out["alpha"] = self.alpha
        out["ci"] = {e: [_num(lo), _num(hi)] for e, (lo, hi) in self.ci.items()}
        return out


def _num(x):
    return None if not math.isfinite(x) else float(x)


def group_mean(d, g, z):
    """Mean outcome among units in group ``g`` with assignment ``z``."""
    m = (d.group == g) & (d.indiv_tr == z)
    if not m.any():
        raise UndefinedEstimateError(f"group {g} has no units with assignment {z}")
    return float(d.obs_outcome[m].mean())


def _cell(d, groups, z):
    vals = []
    for g in groups:
        try:
            vals.append(group_mean(d, g, z))
        except UndefinedEstimateError:
            return None
    return np.array(vals)


def _overall(d, groups):
    return np.array([d.obs_outcome[d.group == g].mean() for g in groups])


def _mean_var(x):
    """Arm-level mean and between-group variance of that mean."""
    if x is None or len(x) == 0:
        return math.nan, math.nan
    v = np.var(x, ddof=1) / len(x) if len(x) > 1 else math.nan
    return float(np.mean(x)), float(v)


def marginal_effects(d, alpha=0.05):
    """Direct, indirect, total and overall effects with between-group variances.

    Arm-level means average the group-level means with equal weight per
    group. Within an arm the treated and control group means are paired,
    so the direct-effect variance is the between-group variance of the
    per-group differences; contrasts across arms add the two arms'
    variances.
    """
    psi_g, phi_g = d.groups(1), d.groups(0)
    y1psi, y0psi = _cell(d, psi_g, 1), _cell(d, psi_g, 0)
    y1phi, y0phi = _cell(d, phi_g, 1), _cell(d, phi_g, 0)

    m1psi, v1psi = _mean_var(y1psi)
    m0psi, v0psi = _mean_var(y0psi)
    m1phi, v1phi = _mean_var(y1phi)
    m0phi, v0phi = _mean_var(y0phi)

    def paired(a, b):
        if a is None or b is None:
            return math.nan, math.nan
        return _mean_var(a - b)

    dpsi, vdpsi = paired(y1psi, y0psi)
    dphi, vdphi = paired(y1phi, y0phi)
    if not (math.isfinite(m1psi) and math.isfinite(m0psi)):
        dpsi = vdpsi = math.nan
    else:
        dpsi = m1psi - m0psi
    if not (math.isfinite(m1phi) and math.isfinite(m0phi)):
        dphi = vdphi = math.nan
    else:
        dphi = m1phi - m0phi

    opsi, vopsi = _mean_var(_overall(d, psi_g))
    ophi, vophi = _mean_var(_overall(d, phi_g))

    rep = MarginalEffectsReport(
        direct_psi=dpsi, direct_phi=dphi,
        indirect=m0psi - m0phi, total=m1psi - m0phi, overall=opsi - ophi,
        var_direct_psi=vdpsi, var_direct_phi=vdphi,
        var_indirect=v0psi + v0phi, var_total=v1psi + v0phi, var_overall=vopsi + vophi,
        groups_psi=len(psi_g), groups_phi=len(phi_g), alpha=alpha,
    )
    z = norm.ppf(1 - alpha / 2)
    for e in EFFECTS:
        est, var = rep.effect(e), rep.variance(e)
        half = z * math.sqrt(var) if math.isfinite(var) else math.nan
        rep.ci[e] = (est - half, est + half)
    return rep


def check_saturations(d, psi, phi, tol=None):
    """Warn when realized within-group treated shares disagree with the declared ones."""
    for g in d.groups():
        m = d.group == g
        share = d.indiv_tr[m].mean()
        target = psi if d.group_tr[m][0] == 1 else phi
        slack = tol if tol is not None else 0.5 / m.sum() + 1e-12
        if abs(share - target) > slack:
            warnings.warn(f"group {g}: treated share {share:.3f} vs declared {target:.3f}",
                          stacklevel=2)


def save_hierarchical(d, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for row in zip(d.group, d.group_tr, d.indiv_tr, d.obs_outcome):
            w.writerow([row[0].item(), int(row[1]), int(row[2]), repr(float(row[3]))])


def load_hierarchical(path):
    """Read ``group,group_tr,indiv_tr,obs_outcome``.

    A leading row-name column, as in a printed data frame, is tolerated
    when rows are whitespace separated.
    """
    path = Path(path)
    with path.open() as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ParseError("empty file", path=path)
    sep = "," if "," in lines[0] else None
    header = [h.strip().strip('"') for h in lines[0].split(sep)]
    if header != list(COLUMNS):
        raise ParseError(f"expected columns {','.join(COLUMNS)}, got {header}", line=1, path=path)
    cols = {c: [] for c in COLUMNS}
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = [p.strip().strip('"') for p in ln.split(sep)]
        if len(parts) == len(COLUMNS) + 1 and sep is None:
            parts = parts[1:]
        if len(parts) != len(COLUMNS):
            raise ParseError(f"expected {len(COLUMNS)} fields", line=lineno, path=path)
        try:
            cols["group"].append(int(parts[0]) if parts[0].lstrip("-").isdigit() else parts[0])
            cols["group_tr"].append(int(parts[1]))
            cols["indiv_tr"].append(int(parts[2]))
            cols["obs_outcome"].append(float(parts[3]))
        except ValueError:
            raise ParseError(f"bad row {ln!r}", line=lineno, path=path) from None
        if cols["group_tr"][-1] not in (0, 1) or cols["indiv_tr"][-1] not in (0, 1):
            raise ParseError("group_tr and indiv_tr must be 0 or 1", line=lineno, path=path)
    try:
        return HierarchicalDataset(*(np.array(cols[c]) for c in COLUMNS))
    except ValueError as exc:
        raise ParseError(str(exc), path=path) from None
