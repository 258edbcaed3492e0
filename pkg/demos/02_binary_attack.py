"""A property inference attack, one step at a time.

The attacker owns D_adv and an auxiliary pool D_aux from the same
distribution.  It wants to know whether the honest party's data has
33% or 67% of records with A < 5.  This script builds every piece by
hand at a reduced scale (50 shadow models, 40 targets, 60 epochs) so
it finishes in about a minute; `propleak run configs/...` runs the
full-size version.

    python demos/02_binary_attack.py
"""

# %%
import numpy as np

from propleak import attack as atk
from propleak import models as M
from propleak.data import LOW, Encoder, PropertySpec, Scenario, SyntheticConfig, concat, drop_attribute, resample_with_ratio, synth_generate

SEED = 0
cfg = SyntheticConfig(scenario=Scenario.XI_YA, n_records=14_000)
pool = synth_generate(cfg, SEED)
d_attack = pool.take(np.arange(1000))
d_aux = pool.take(np.arange(1000, 11_000))
d_adv = resample_with_ratio(pool.take(np.arange(11_000, 14_000)), PropertySpec("A", LOW, 0.33), 2000, SEED)

# %% [markdown]
# The encoder is fitted on D_aux only: the attacker never sees the honest
# party's statistics.

# %%
encoder = Encoder(d_aux)
recipe = atk.TargetRecipe(M.LR, M.Hyperparameters(epochs=60), cfg.n_classes, encoder=encoder)

# %% Shadow models: half trained on 33:67 resamples, half on 67:33.
shadow_cfg = atk.ShadowConfig.binary("A", LOW, 0.33, n_shadow=50, shadow_size=2000)
shadow_sets = atk.generate_shadow_datasets(d_aux, shadow_cfg, SEED)
pairs = atk.train_shadow_ensemble(shadow_sets, d_adv, recipe, d_attack, SEED)
print(f"{len(pairs)} labelled attack vectors of length {len(pairs[0][0])}")

meta = atk.train_meta(pairs, atk.BINARY_LR, SEED)

# %% Targets: fresh honest datasets, each combined with D_adv.
honest_pool = synth_generate(cfg, SEED + 1)
truths = [0.33, 0.67] * 20
targets = recipe.train(
    [concat([resample_with_ratio(honest_pool, PropertySpec("A", LOW, t), 2000, 100 + i), d_adv]) for i, t in enumerate(truths)],
    [1000 + i for i in range(len(truths))],
)
guesses = [atk.run_attack(meta, atk.build_attack_vector(m, d_attack, encoder))[0] for m in targets]
print(f"attack accuracy {np.mean(np.array(guesses) == np.array(truths)):.2f} over {len(truths)} targets")

# %% [markdown]
# Dropping A from the pipeline (the A-bar mode) hides the attribute from
# the model, but Y still depends on it, so the posteriors still leak.

# %%
print("columns without A:", [c.name for c in drop_attribute(d_attack, "A").schema.columns][:5], "...")
