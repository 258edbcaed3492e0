import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import special, stats as sps

from propleak.data import (
    CATEGORICAL,
    AttributeSchema,
    Column,
    Scenario,
    SyntheticConfig,
    TabularDataset,
    synth_generate,
)
from propleak.stats import (
    Thresholds,
    anova,
    anova_pvalue,
    betainc,
    chi_square,
    classify_scenario,
    cramers_v,
    cramers_v_table,
    f_sf,
    pearson,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


# ---------------------------------------------------------------------------
# Pearson
# ---------------------------------------------------------------------------


def test_pearson_hand_examples():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0, abs=1e-12)
    assert pearson([1, 2, 3], [6, 4, 2]) == pytest.approx(-1.0, abs=1e-12)
    assert abs(pearson([1, 2, 3, 4], [1, 3, 2, 4]) - 0.8) < 1e-9


def test_pearson_constant_is_undefined():
    assert pearson([1, 1, 1], [1, 2, 3]) is None
    with pytest.raises(ValueError):
        pearson([1], [2])
    with pytest.raises(ValueError):
        pearson([1, 2], [1, 2, 3])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=3, max_size=40))
def test_pearson_matches_numpy_and_is_bounded(pairs):
    x, y = map(np.array, zip(*pairs))
    assume(np.ptp(x) > 1e-3 and np.ptp(y) > 1e-3)
    r = pearson(x, y)
    assert -1.0 - 1e-12 <= r <= 1.0 + 1e-12
    assert r == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-9)
    assert pearson(y, x) == pytest.approx(r, abs=1e-12)
    # affine invariance
    assert pearson(3.0 * x + 7.0, y) == pytest.approx(r, abs=1e-9)


# ---------------------------------------------------------------------------
# Cramér's V
# ---------------------------------------------------------------------------


def _expand(table):
    a, b = [], []
    for i, row in enumerate(table):
        for j, n in enumerate(row):
            a += [i] * n
            b += [j] * n
    return np.array(a), np.array(b)


def test_cramers_v_hand_examples():
    assert cramers_v_table(np.array([[10, 0], [0, 10]])) == pytest.approx(1.0, abs=1e-12)
    assert cramers_v_table(np.array([[5, 5], [5, 5]])) == pytest.approx(0.0, abs=1e-12)
    assert abs(chi_square(np.array([[20, 10], [10, 20]])) - 20 / 3) < 1e-9
    assert abs(cramers_v(*_expand([[20, 10], [10, 20]])) - 1 / 3) < 1e-9


def test_cramers_v_degenerate_is_undefined():
    assert cramers_v([0, 0, 0], [0, 1, 0]) is None


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.integers(1, 30), min_size=2, max_size=4), min_size=2, max_size=4).filter(lambda t: len({len(r) for r in t}) == 1))
def test_cramers_v_matches_scipy_chi2(table):
    t = np.array(table)
    chi2 = sps.chi2_contingency(t, correction=False)[0]
    assert chi_square(t) == pytest.approx(chi2, rel=1e-9, abs=1e-9)
    v = cramers_v_table(t)
    assert 0.0 <= v <= 1.0 + 1e-12
    assert v == pytest.approx(math.sqrt(chi2 / (t.sum() * (min(t.shape) - 1))), rel=1e-9, abs=1e-12)


# ---------------------------------------------------------------------------
# ANOVA and the F tail
# ---------------------------------------------------------------------------


def test_anova_identical_groups():
    res = anova([[1, 2, 3], [1, 2, 3]])
    assert res.f == 0.0 and res.p == 1.0


def test_anova_zero_variance_convention():
    assert anova_pvalue([[2, 2], [2, 2]]) == 1.0


def test_anova_extreme_separation():
    assert anova_pvalue([[0, 0.01, -0.01], [100, 100.01, 99.99]]) < 1e-6


def test_anova_f_two_case():
    # SSB = 2, SSW = 6 on (1, 6) degrees of freedom
    res = anova([[0, 1, 1, 2], [1, 1, 3, 3]])
    assert abs(res.f - 2.0) < 1e-9
    assert (res.df_between, res.df_within) == (1, 6)
    assert abs(res.p - sps.f.sf(2.0, 1, 6)) < 1e-9
    assert res.p == pytest.approx(0.207, abs=1e-3)


def test_anova_shifted_quartets():
    res = anova([[1, 2, 3, 4], [2, 3, 4, 5]])
    assert abs(res.f - 1.2) < 1e-9
    assert abs(res.p - sps.f.sf(1.2, 1, 6)) < 1e-9


def test_anova_rejects_bad_input():
    with pytest.raises(ValueError):
        anova([[1, 2, 3]])
    with pytest.raises(ValueError):
        anova([[1], [2, 3]])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(finite, min_size=2, max_size=12), min_size=2, max_size=5))
def test_anova_matches_scipy(groups):
    assume(sum(np.var(g) for g in groups) > 1e-6)
    res = anova(groups)
    ref = sps.f_oneway(*groups)
    assert res.f == pytest.approx(ref.statistic, rel=1e-7, abs=1e-9)
    # scipy gives NaN when F is exactly zero; compare against its F tail instead
    assert res.p == pytest.approx(sps.f.sf(res.f, res.df_between, res.df_within), rel=1e-6, abs=1e-12)
    assert 0.0 <= res.eta <= 1.0 + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 60), st.floats(0.05, 60), st.floats(0, 1))
def test_betainc_matches_scipy(a, b, x):
    assert betainc(a, b, x) == pytest.approx(special.betainc(a, b, x), rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 50), st.integers(1, 40), st.integers(1, 2000))
def test_f_sf_matches_scipy(f, d1, d2):
    assert f_sf(f, d1, d2) == pytest.approx(sps.f.sf(f, d1, d2), rel=1e-8, abs=1e-12)


# ---------------------------------------------------------------------------
# scenario classification
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("scenario", list(Scenario))
def test_classify_round_trip_on_generated_data(scenario):
    hits = 0
    for seed in range(20):
        cfg = SyntheticConfig(scenario=scenario, correlation_strength=1.0, n_records=10000)
        report = classify_scenario(synth_generate(cfg, seed))
        hits += report.scenario is scenario
    # a true null rejects at rate alpha, so a few misses are expected
    assert hits >= 17


def test_classify_reports_correlated_columns_and_thresholds():
    cfg = SyntheticConfig(scenario=Scenario.XA_YA, correlation_strength=1.0, n_records=10000)
    report = classify_scenario(synth_generate(cfg, 0))
    assert report.scenario is Scenario.XA_YA
    assert report.correlated == ["x0"]
    assert "threshold.x_effect = 0.15" in report.to_text()
    th = Thresholds(x_effect=0.99)
    assert classify_scenario(synth_generate(cfg, 0), th).scenario is Scenario.XI_YA


def test_classify_categorical_sensitive_with_undefined_column():
    schema = AttributeSchema(
        (
            Column("g", CATEGORICAL, ("f", "m")),
            Column("c", CATEGORICAL, ("a", "b")),
            Column("k"),
            Column("y", CATEGORICAL, ("0", "1")),
        ),
        target="y",
        sensitive="g",
    )
    g = np.array([0, 1] * 50)
    ds = TabularDataset(schema, {"g": g, "c": g.copy(), "k": np.ones(100), "y": g.copy()})
    report = classify_scenario(ds)
    assert report.scenario is Scenario.XA_YA
    assert report.undefined == ["k"]
    assert report.scores[("g", "y")] == ("cramers_v", pytest.approx(1.0))
