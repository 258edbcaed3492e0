"""Correlation diagnostics: Pearson r, Cramér's V, one-way ANOVA.

Undefined statistics (constant inputs, degenerate tables) are returned
as ``None`` rather than NaN so callers must handle them explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import Scenario, TabularDataset



def pearson(x, y) -> float | None:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two 1-D vectors of equal length")
    if len(x) < 2:
        raise ValueError("pearson needs at least two observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return None
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def contingency(a, b) -> np.ndarray:
    """Counts of each observed (a, b) pair; unobserved levels are omitted."""
    _, ai = np.unique(np.asarray(a), return_inverse=True)
    _, bi = np.unique(np.asarray(b), return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(table, (ai, bi), 1.0)
    return table


def chi_square(table) -> float:
    """Pearson chi-square without continuity correction."""
    t = np.asarray(table, dtype=np.float64)
    n = t.sum()
    expected = np.outer(t.sum(axis=1), t.sum(axis=0)) / n
    nz = expected > 0
    return float((((t - expected) ** 2)[nz] / expected[nz]).sum())


def cramers_v_table(table) -> float | None:
    t = np.asarray(table, dtype=np.float64)
    t = t[t.sum(axis=1) > 0][:, t.sum(axis=0) > 0]
    r, c = t.shape
    if min(r, c) < 2:
        return None
    n = t.sum()
    v = math.sqrt(chi_square(t) / (n * min(r - 1, c - 1)))
    return min(v, 1.0)


def cramers_v(a, b) -> float | None:
    if len(a) != len(b):
        raise ValueError("cramers_v needs vectors of equal length")
    return cramers_v_table(contingency(a, b))


# ---------------------------------------------------------------------------
# F distribution via the regularised incomplete beta function
# ---------------------------------------------------------------------------


def _beta_cf(a: float, b: float, x: float, tol: float = 1e-15, max_iter: int = 10_000) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularised incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("betainc needs a, b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def f_sf(f: float, d1: float, d2: float) -> float:
    """Upper tail P(F > f) of the F(d1, d2) distribution."""
    if f <= 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))


@dataclass(frozen=True)
class AnovaResult:
    f: float
    p: float
    df_between: int
    df_within: int
    eta: float  # correlation ratio sqrt(SSB / SST)


def anova(groups: Sequence[Sequence[float]]) -> AnovaResult:
    """One-way ANOVA across ``groups``."""
    gs = [np.asarray(g, dtype=np.float64) for g in groups]
    if len(gs) < 2:
        raise ValueError("anova needs at least two groups")
    if any(len(g) < 2 for g in gs):
        raise ValueError("each anova group needs at least two observations")
    allv = np.concatenate(gs)
    grand = allv.mean()
    ssb = float(sum(len(g) * (g.mean() - grand) ** 2 for g in gs))
    ssw = float(sum(((g - g.mean()) ** 2).sum() for g in gs))
    dfb = len(gs) - 1
    dfw = len(allv) - len(gs)
    sst = ssb + ssw
    eta = math.sqrt(ssb / sst) if sst > 0 else 0.0
    if ssw == 0.0:
        if ssb == 0.0:
            return AnovaResult(0.0, 1.0, dfb, dfw, 0.0)
        return AnovaResult(math.inf, 0.0, dfb, dfw, eta)
    f = (ssb / dfb) / (ssw / dfw)
    return AnovaResult(f, f_sf(f, dfb, dfw), dfb, dfw, eta)


def anova_pvalue(groups: Sequence[Sequence[float]]) -> float:
    return anova(groups).p


def _grouped(values: np.ndarray, codes: np.ndarray) -> list[np.ndarray]:
    return [values[codes == c] for c in np.unique(codes) if np.sum(codes == c) >= 2]


# ---------------------------------------------------------------------------
# Scenario classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Thresholds:
    x_effect: float = 0.15  # |r|, V or eta above this marks X ~ A
    y_cramers_v: float = 0.10  # categorical A: V at or above marks Y ~ A
    y_alpha: float = 0.05  # numeric A: ANOVA p below marks Y ~ A


@dataclass
class ScenarioReport:
    scenario: Scenario
    scores: dict[tuple[str, str], tuple[str, float | None]]
    correlated: list[str]
    undefined: list[str]
    thresholds: Thresholds = field(default_factory=Thresholds)

    def to_text(self) -> str:
        lines = [
            f"scenario = {self.scenario.value}",
            f"x_correlated = {','.join(self.correlated)}",
            f"undefined = {','.join(self.undefined)}",
            f"threshold.x_effect = {self.thresholds.x_effect}",
            f"threshold.y_cramers_v = {self.thresholds.y_cramers_v}",
            f"threshold.y_alpha = {self.thresholds.y_alpha}",
        ]
        for (a, b), (kind, value) in self.scores.items():
            lines.append(f"score.{a}.{b}.{kind} = {'undefined' if value is None else format(value, '.6g')}")
        return "\n".join(lines) + "\n"


def _pair_score(a_vals, a_cat: bool, b_vals, b_cat: bool) -> tuple[str, float | None]:
    """Effect-size statistic for a pair of columns, chosen by their kinds."""
    if a_cat and b_cat:
        return "cramers_v", cramers_v(a_vals, b_vals)
    if not a_cat and not b_cat:
        r = pearson(a_vals, b_vals)
        return "pearson", None if r is None else abs(r)
    num, cat = (b_vals, a_vals) if a_cat else (a_vals, b_vals)
    groups = _grouped(num, cat)
    if len(groups) < 2 or np.ptp(num) == 0:
        return "anova_eta", None
    return "anova_eta", anova(groups).eta


def classify_scenario(ds: TabularDataset, thresholds: Thresholds | None = None) -> ScenarioReport:
    """Place ``ds`` in one of the four correlation scenarios.

    X ~ A when any feature's effect size against A exceeds the
    threshold (|Pearson r|, Cramér's V, or the ANOVA correlation ratio
    for mixed pairs).  For Y, a categorical A uses Cramér's V and a
    numeric A uses the ANOVA p-value of A grouped by Y.
    """
    th = thresholds or Thresholds()
    schema = ds.schema
    if schema.sensitive is None:
        raise ValueError("dataset declares no sensitive attribute")
    a_col = schema.column(schema.sensitive)
    a = ds.data[a_col.name]
    scores: dict[tuple[str, str], tuple[str, float | None]] = {}
    correlated, undefined = [], []
    for col in schema.x_columns:
        kind, value = _pair_score(a, a_col.is_categorical, ds.data[col.name], col.is_categorical)
        scores[(a_col.name, col.name)] = (kind, value)
        if value is None:
            undefined.append(col.name)
        elif value > th.x_effect:
            correlated.append(col.name)

    y = ds.labels
    if a_col.is_categorical:
        v = cramers_v(a, y)
        scores[(a_col.name, schema.target)] = ("cramers_v", v)
        y_corr = v is not None and v >= th.y_cramers_v
        if v is None:
            undefined.append(schema.target)
    else:
        groups = _grouped(a, y)
        if len(groups) < 2 or np.ptp(a) == 0:
            scores[(a_col.name, schema.target)] = ("anova_p", None)
            undefined.append(schema.target)
            y_corr = False
        else:
            p = anova(groups).p
            scores[(a_col.name, schema.target)] = ("anova_p", p)
            y_corr = p < th.y_alpha
    return ScenarioReport(Scenario.from_flags(bool(correlated), y_corr), scores, correlated, undefined, th)
