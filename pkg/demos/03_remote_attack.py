"""Attacking a model that is only reachable over the network.

A target is trained and served on a loopback port; the attacker sees
nothing but the query interface.  The attack vector built through the
wire matches the one built locally to rounding error.

    python demos/03_remote_attack.py
"""

# %%
import numpy as np

from propleak import attack as atk
from propleak import models as M
from propleak.data import Encoder, Scenario, SyntheticConfig, synth_generate
from propleak.server import remote_query_fn, serve

cfg = SyntheticConfig(scenario=Scenario.XA_YA, n_records=3000)
data = synth_generate(cfg, 0)
encoder = Encoder(data)
X, y = encoder.encode(data)
target = M.train_logreg(X, y, M.Hyperparameters(epochs=20), n_classes=cfg.n_classes)

# %%
probe = X[:200]
with serve(target) as handle:
    print("serving on", handle.address)
    remote = atk.build_attack_vector(remote_query_fn(handle.address), probe)
local = atk.build_attack_vector(target, probe)
print("vector length", len(remote), " max |remote - local| =", np.max(np.abs(remote.values - local.values)))

# %% [markdown]
# The same exchange from a shell:
#
#     propleak run configs/multi_party_lr_xi_ya.cfg --save-target target.model
#     propleak serve --model target.model --listen 127.0.0.1:7000 &
#     propleak attack-remote configs/multi_party_lr_xi_ya.cfg --endpoint 127.0.0.1:7000
