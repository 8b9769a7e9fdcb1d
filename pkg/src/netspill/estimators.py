"""Horvitz-Thompson and Hajek estimators of exposure contrasts.

All functions take the realized :class:`~netspill.exposure.Exposure`, the
observed outcomes ``y`` and the design's
:class:`~netspill.exposure.ExposureProbabilities`. Conditions can be named
by code (``"d10"``), label (``"isol_dir"``) or index.

Zero probabilities: by default a unit realized in a condition it has zero
estimated probability of reaching is an error, and estimation runs over
all ``N`` units. With ``restrict=True`` estimation is confined to the
units whose probabilities are positive for every condition involved.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import InconsistentProbabilityError, ParameterError, UndefinedEstimateError


@dataclass
class EstimateReport:
    estimator: str
    k: str
    l: str
    point: float
    variance: float
    variance_kind: str
    ci_low: float
    ci_high: float
    alpha: float
    defined: bool
    totals: dict = field(default_factory=dict)
    means: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    n_units: int = 0

    def as_dict(self):
        return {
            "estimator": self.estimator, "k": self.k, "l": self.l,
            "point": _json_num(self.point), "variance": _json_num(self.variance),
            "variance_kind": self.variance_kind,
            "ci_low": _json_num(self.ci_low), "ci_high": _json_num(self.ci_high),
            "alpha": self.alpha, "defined": self.defined,
        }


def _json_num(x):
    return None if x is None or not math.isfinite(x) else float(x)


def _population(exposure, probs, conds, restrict):
    """Boolean mask of units entering the estimator."""
    pis = [probs.pi(c) for c in conds]
    if restrict:
        mask = np.ones(probs.n, dtype=bool)
        for p in pis:
            mask &= p > 0
        return mask
    for c, p in zip(conds, pis):
        bad = exposure.indicator(c) & (p <= 0)
        if np.any(bad):
            raise InconsistentProbabilityError(
                f"unit(s) {np.nonzero(bad)[0].tolist()} realized in {exposure.mapping.code(c)} "
                "with zero estimated probability")
    return np.ones(probs.n, dtype=bool)


def _realized(exposure, cond, mask):
    return np.nonzero(exposure.indicator(cond) & mask)[0]


def ht_total(exposure, y, probs, k, restrict=False, mask=None):
    """Inverse-probability weighted total ``sum_i I(D_i = k) Y_i / pi_i(k)``."""
    y = np.asarray(y, dtype=float)
    if mask is None:
        mask = _population(exposure, probs, [k], restrict)
    s = _realized(exposure, k, mask)
    return float(np.sum(y[s] / probs.pi(k)[s]))


def hajek_mean(exposure, y, probs, k, restrict=False, mask=None):
    """Ratio of weighted outcome total to the sum of weights in condition ``k``."""
    y = np.asarray(y, dtype=float)
    if mask is None:
        mask = _population(exposure, probs, [k], restrict)
    s = _realized(exposure, k, mask)
    if s.size == 0:
        raise UndefinedEstimateError(f"no units realized in {exposure.mapping.code(k)}")
    w = 1.0 / probs.pi(k)[s]
    return float(np.sum(w * y[s]) / np.sum(w))


# -- conservative variance ------------------------------------------------

def _var_total(y, s, pi, pij, mask):
    """Conservative variance of an HT total over realized units ``s``."""
    if s.size == 0:
        return 0.0
    p = pi[s]
    w = y[s] / p
    own = np.sum((1.0 - p) * w**2)
    P = pij[np.ix_(s, s)]
    np.fill_diagonal(P, 0.0)
    pos = P > 0
    cross = np.zeros_like(P)
    np.divide(P - np.outer(p, p), P, out=cross, where=pos)
    cross_sum = w @ cross @ w
    # pairs with zero joint probability: Young-inequality bound
    zeros = (pij[np.ix_(s, np.nonzero(mask)[0])] <= 0).sum(axis=1)
    corr = np.sum(y[s] ** 2 / p * zeros)
    return float(own + cross_sum + corr)


def _cov_totals(y, sk, sl, pik, pil, pkl, mask):
    """Covariance approximation between the HT totals of two conditions."""
    pop = np.nonzero(mask)[0]
    term = 0.0
    if sk.size and sl.size:
        pk, pl = pik[sk], pil[sl]
        P = pkl[np.ix_(sk, sl)]
        pos = P > 0
        ratio = np.zeros_like(P)
        np.divide(P - np.outer(pk, pl), P, out=ratio, where=pos)
        term = (y[sk] / pk) @ ratio @ (y[sl] / pl)
    corr = 0.0
    if sk.size:
        zk = (pkl[np.ix_(sk, pop)] <= 0).sum(axis=1)
        corr += np.sum(y[sk] ** 2 / (2 * pik[sk]) * zk)
    if sl.size:
        zl = (pkl[np.ix_(pop, sl)] <= 0).sum(axis=0)
        corr += np.sum(y[sl] ** 2 / (2 * pil[sl]) * zl)
    return float(term - corr)


def conservative_variance(exposure, y, probs, k, restrict=False, mask=None):
    """Conservative estimate of ``Var[HT total of k]``."""
    y = np.asarray(y, dtype=float)
    if mask is None:
        mask = _population(exposure, probs, [k], restrict)
    return _var_total(y, _realized(exposure, k, mask), probs.pi(k), probs.pij(k, k), mask)


def covariance_bound(exposure, y, probs, k, l, restrict=False, mask=None):
    """Approximation of ``Cov[HT total of k, HT total of l]`` biased downward."""
    y = np.asarray(y, dtype=float)
    if mask is None:
        mask = _population(exposure, probs, [k, l], restrict)
    return _cov_totals(y, _realized(exposure, k, mask), _realized(exposure, l, mask),
                       probs.pi(k), probs.pi(l), probs.pij(k, l), mask)


def ht_contrast_variance(exposure, y, probs, k, l, restrict=False, mask=None, n=None):
    """``(Var_k + Var_l - 2 Cov_kl) / N**2`` from the conservative pieces."""
    if mask is None:
        mask = _population(exposure, probs, [k, l], restrict)
    N = int(mask.sum()) if n is None else int(n)
    if exposure.mapping.index(k) == exposure.mapping.index(l):
        return 0.0
    vk = conservative_variance(exposure, y, probs, k, mask=mask)
    vl = conservative_variance(exposure, y, probs, l, mask=mask)
    c = covariance_bound(exposure, y, probs, k, l, mask=mask)
    return (vk + vl - 2.0 * c) / N**2


# -- constant effects -----------------------------------------------------

def _condition_means(exposure, y, probs):
    """Hajek mean of every condition with realized units (plain mean as fallback)."""
    out = {}
    for c in range(exposure.mapping.K):
        s = np.nonzero(exposure.index == c)[0]
        if s.size == 0:
            continue
        p = probs.individual[c, s]
        ok = p > 0
        if ok.any():
            w = 1.0 / p[ok]
            out[c] = float(np.sum(w * y[s[ok]]) / np.sum(w))
        else:
            out[c] = float(np.mean(y[s]))
    return out


def impute_schedule(exposure, y, probs, conds):
    """Shift each observed outcome by estimated condition-mean differences.

    Returns an array with one row per entry of ``conds``:
    ``y_i(d_m) = Y_i + mu_H(d_m) - mu_H(D_i)``.
    """
    y = np.asarray(y, dtype=float)
    means = _condition_means(exposure, y, probs)
    idx = [exposure.mapping.index(c) for c in conds]
    missing = [exposure.mapping.codes[c] for c in idx if c not in means]
    if missing:
        raise UndefinedEstimateError(f"no realized units in {missing}")
    own = np.array([means[c] for c in exposure.index])
    return np.vstack([y + means[c] - own for c in idx])


def constant_effects_variance(exposure, y, probs, k, l, restrict=False, v_reps=None,
                              seed=None, mask=None):
    """Variance of the HT contrast under an imputed constant-effects schedule.

    With ``v_reps=None`` the randomization variance is evaluated exactly
    from the joint exposure probabilities. Otherwise ``v_reps`` stored
    design draws are resampled and the empirical variance of the
    recomputed contrast is returned.
    """
    y = np.asarray(y, dtype=float)
    if mask is None:
        mask = _population(exposure, probs, [k, l], restrict)
    N = int(mask.sum())
    yk, yl = impute_schedule(exposure, y, probs, [k, l])
    ik, il = exposure.mapping.index(k), exposure.mapping.index(l)
    pk, pl = probs.individual[ik], probs.individual[il]
    u = np.nonzero(mask)[0]
    a = np.zeros(probs.n)
    b = np.zeros(probs.n)
    a[u] = np.divide(yk[u], pk[u], out=np.zeros(u.size), where=pk[u] > 0)
    b[u] = np.divide(yl[u], pl[u], out=np.zeros(u.size), where=pl[u] > 0)

    if v_reps is None:
        au, bu = a[u], b[u]
        ix = np.ix_(u, u)
        vk = au @ (probs.pij(ik, ik)[ix] - np.outer(pk[u], pk[u])) @ au
        vl = bu @ (probs.pij(il, il)[ix] - np.outer(pl[u], pl[u])) @ bu
        ckl = au @ (probs.pij(ik, il)[ix] - np.outer(pk[u], pl[u])) @ bu
        return max(float(vk + vl - 2.0 * ckl) / N**2, 0.0)

    if probs.draws is None:
        raise ParameterError("simulated constant-effects variance needs probabilities "
                             "computed with keep_draws=True")
    if v_reps < 1:
        raise ParameterError("v_reps must be positive")
    if v_reps == 1:
        warnings.warn("constant-effects variance from a single redraw is always 0",
                      stacklevel=2)
    rng = np.random.default_rng(seed)
    rows = probs.draws[rng.integers(len(probs.draws), size=v_reps)]
    est = ((rows == ik) @ a - (rows == il) @ b) / N
    return float(np.var(est))


def confidence_interval(point, variance, alpha=0.05):
    """Normal-approximation interval ``point +/- z_{1-alpha/2} sqrt(variance)``."""
    if variance < 0:
        raise ParameterError(f"negative variance {variance}")
    half = norm.ppf(1.0 - alpha / 2.0) * math.sqrt(variance)
    return point - half, point + half


# -- contrasts ------------------------------------------------------------

def ht_contrast(exposure, y, probs, k, l, n=None, restrict=False, variance="max",
                alpha=0.05, v_reps=None, seed=None):
    """Horvitz-Thompson contrast ``(total_k - total_l) / N`` with its variance.

    ``variance`` is ``conservative``, ``constant_effects``, ``max`` (the
    larger of the two) or ``none``.
    """
    y = np.asarray(y, dtype=float)
    m = exposure.mapping
    mask = _population(exposure, probs, [k, l], restrict)
    N = int(mask.sum()) if n is None else int(n)
    counts = {m.code(c): int(_realized(exposure, c, mask).size) for c in (k, l)}
    totals = {m.code(c): ht_total(exposure, y, probs, c, mask=mask) for c in (k, l)}
    report = EstimateReport("HT", m.code(k), m.code(l), math.nan, math.nan, variance,
                            math.nan, math.nan, alpha, False, totals=totals,
                            counts=counts, n_units=N)
    if m.index(k) == m.index(l):
        report.point, report.variance, report.defined = 0.0, 0.0, True
        report.ci_low = report.ci_high = 0.0
        return report
    if min(counts.values()) == 0 or N == 0:
        return report
    report.point = (totals[m.code(k)] - totals[m.code(l)]) / N
    report.means = {c: t / N for c, t in totals.items()}
    report.defined = True
    if variance == "none":
        return report

    cons = const = math.nan
    if variance in ("conservative", "max"):
        cons = max(ht_contrast_variance(exposure, y, probs, k, l, mask=mask, n=N), 0.0)
    if variance in ("constant_effects", "max"):
        const = constant_effects_variance(exposure, y, probs, k, l, v_reps=v_reps,
                                          seed=seed, mask=mask)
    if variance == "max":
        report.variance = reported_variance(cons, const)
    elif variance == "conservative":
        report.variance = cons
    elif variance == "constant_effects":
        report.variance = const
    else:
        raise ParameterError(f"unknown HT variance kind {variance!r}")
    report.ci_low, report.ci_high = confidence_interval(report.point, report.variance, alpha)
    return report


def reported_variance(conservative, constant_effects):
    """Larger of the two variance estimates, falling back to whichever is defined."""
    a_ok, b_ok = math.isfinite(conservative), math.isfinite(constant_effects)
    if a_ok and b_ok:
        return max(conservative, constant_effects)
    if a_ok or b_ok:
        warnings.warn("one variance estimate is undefined; using the other", stacklevel=2)
        return conservative if a_ok else constant_effects
    return math.nan


def hajek_contrast_variance(exposure, y, probs, k, l, restrict=False, mask=None):
    """Linearized variance of the Hajek contrast.

    Outcomes are centred at their condition's Hajek mean and fed to the
    conservative machinery, with each condition scaled by its estimated
    size ``sum_i I(D_i = c) / pi_i(c)``.
    """
    y = np.asarray(y, dtype=float)
    if mask is None:
        mask = _population(exposure, probs, [k, l], restrict)
    sk, sl = _realized(exposure, k, mask), _realized(exposure, l, mask)
    if sk.size == 0 or sl.size == 0:
        raise UndefinedEstimateError("both conditions need realized units")
    pik, pil = probs.pi(k), probs.pi(l)
    nk, nl = np.sum(1.0 / pik[sk]), np.sum(1.0 / pil[sl])
    mk = np.sum(y[sk] / pik[sk]) / nk
    ml = np.sum(y[sl] / pil[sl]) / nl
    r = np.zeros_like(y)
    r[sk] = y[sk] - mk
    r[sl] = y[sl] - ml
    vk = _var_total(r, sk, pik, probs.pij(k, k), mask)
    vl = _var_total(r, sl, pil, probs.pij(l, l), mask)
    c = _cov_totals(r, sk, sl, pik, pil, probs.pij(k, l), mask)
    return vk / nk**2 + vl / nl**2 - 2.0 * c / (nk * nl)


def hajek_contrast(exposure, y, probs, k, l, restrict=False, variance="linearized",
                   alpha=0.05):
    """Hajek contrast ``mu_H(k) - mu_H(l)`` with its linearized variance."""
    y = np.asarray(y, dtype=float)
    m = exposure.mapping
    mask = _population(exposure, probs, [k, l], restrict)
    counts = {m.code(c): int(_realized(exposure, c, mask).size) for c in (k, l)}
    report = EstimateReport("Hajek", m.code(k), m.code(l), math.nan, math.nan, variance,
                            math.nan, math.nan, alpha, False, counts=counts,
                            n_units=int(mask.sum()))
    if min(counts.values()) == 0:
        return report
    report.means = {m.code(c): hajek_mean(exposure, y, probs, c, mask=mask) for c in (k, l)}
    report.totals = {m.code(c): ht_total(exposure, y, probs, c, mask=mask) for c in (k, l)}
    report.point = report.means[m.code(k)] - report.means[m.code(l)]
    report.defined = True
    if m.index(k) == m.index(l):
        report.variance = 0.0
        report.ci_low = report.ci_high = report.point
        return report
    if variance == "none":
        return report
    if variance != "linearized":
        raise ParameterError(f"unknown Hajek variance kind {variance!r}")
    report.variance = max(hajek_contrast_variance(exposure, y, probs, k, l, mask=mask), 0.0)
    report.ci_low, report.ci_high = confidence_interval(report.point, report.variance, alpha)
    return report


def estimate_contrast(exposure, y, probs, k, l, estimator="ht", **kwargs):
    if estimator.lower() == "ht":
        return ht_contrast(exposure, y, probs, k, l, **kwargs)
    if estimator.lower() == "hajek":
        kwargs.pop("v_reps", None)
        kwargs.pop("seed", None)
        kwargs.pop("n", None)
        return hajek_contrast(exposure, y, probs, k, l, **kwargs)
    raise ParameterError(f"unknown estimator {estimator!r}")
