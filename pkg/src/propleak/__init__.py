"""Property inference against collaboratively trained models.

Shadow models trained on resampled auxiliary data teach a meta-classifier
to read a population property of one party's training data off the
posteriors (or parameters) of the shared model.
"""

from .attack import (
    AttackVector,
    MetaClassifier,
    ShadowConfig,
    build_attack_vector,
    derive_seed,
    fine_grained_attack,
    generate_shadow_datasets,
    model_update_attack,
    run_attack,
    train_meta,
    train_shadow_ensemble,
    white_box_attack,
)
from .data import (
    AttributeSchema,
    Column,
    GraphDataset,
    PropertySpec,
    Scenario,
    SyntheticConfig,
    TabularDataset,
    load_csv,
    make_splits,
    one_hot_encode,
    resample_with_ratio,
    synth_generate,
    synth_graph_generate,
)
from .models import Hyperparameters, TrainedModel, predict_proba, train_gcn, train_logreg, train_mlp
from .stats import anova, classify_scenario, cramers_v, pearson

__version__ = "0.1.0"
