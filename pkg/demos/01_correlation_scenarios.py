"""Four ways a sensitive attribute can relate to the data.

We generate one synthetic table per scenario and let the correlation
diagnostics place it back into its scenario.  A takes values below or
above 5; X' is the feature that may track A; Y is the label.

    python demos/01_correlation_scenarios.py
"""

# %%
from propleak.data import Scenario, SyntheticConfig, synth_generate
from propleak.stats import classify_scenario

# %% [markdown]
# `correlation_strength` is the single dial: it shifts X' by +-strength
# depending on A's stratum and adds a strength-scaled term to the label
# logits of records with A > 5.

# %%
for scenario in Scenario:
    cfg = SyntheticConfig(scenario=scenario, correlation_strength=1.0, n_records=10_000)
    ds = synth_generate(cfg, seed=0)
    report = classify_scenario(ds)
    a_vs_y = report.scores[("A", "Y")]
    print(f"{scenario.value:14s} -> {report.scenario.value:14s}"
          f"  X' = {report.correlated or '-'}  ANOVA p(A|Y) = {a_vs_y[1]:.3g}")

# %% [markdown]
# The full report is plain `key = value` text, one score per column pair.

# %%
print(classify_scenario(synth_generate(SyntheticConfig(scenario=Scenario.XA_YA), 1)).to_text())
