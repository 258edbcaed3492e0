"""How many queries does a graph attack need?

Products form a stochastic-block graph whose blocks are product types;
review scores depend on the type.  A GCN is trained on the nodes two
parties contribute, and the attacker guesses whether the honest party's
nodes are all of one type or all of the other.  We sweep the number of
query nodes at a reduced scale (40 repetitions, 40 shadows).

    python demos/04_graph_queries.py
"""

# %%
from propleak import harness as H

base = H.ExperimentConfig.from_text("""
family = ablation-queries
seed = 0
repetitions = 40
data.source = graph
data.attack_size = 800
data.attack_pool = 800
attack.split = 0:100
attack.n_shadow = 40
""")

# %%
results = H.run_sweep(base, "k", ["10", "50", "200"])
print(H.report_text(results))
