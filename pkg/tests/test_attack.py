import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from propleak import attack as A
from propleak import models as M
from propleak.data import LOW, Encoder, PropertySpec, Scenario, SyntheticConfig, synth_generate


def test_attack_vector_concatenates_rows():
    post = np.array([[1.0, 0, 0], [0, 1.0, 0]])
    v = A.build_attack_vector(lambda X: post, np.zeros((2, 4)))
    assert v.values.tolist() == [1, 0, 0, 0, 1, 0]
    assert (v.k, v.l) == (2, 3)


def test_attack_vector_length_eleven_classes():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(1000, 5))
    m = M.train_logreg(X, rng.integers(0, 11, 1000), M.Hyperparameters(epochs=1), n_classes=11)
    v1 = A.build_attack_vector(m, X)
    v2 = A.build_attack_vector(m, X)
    assert len(v1) == 11000
    np.testing.assert_array_equal(v1.values, v2.values)


def test_attack_vector_rejects_non_simplex_blocks():
    with pytest.raises(ValueError):
        A.AttackVector.from_posteriors(np.array([[0.5, 0.4]]))


def test_query_failure_reports_index():
    def query(X):
        if np.any(X[:, 0] > 0.5):
            raise RuntimeError("boom")
        return np.full((len(X), 2), 0.5)

    probe = np.zeros((5, 1))
    probe[3, 0] = 1.0
    with pytest.raises(A.QueryError) as info:
        A.build_attack_vector(query, probe)
    assert info.value.index == 3


def test_dump_and_load_vectors_round_trip():
    rng = np.random.default_rng(1)
    post = rng.dirichlet(np.ones(3), size=(4, 5))
    pairs = [(A.AttackVector.from_posteriors(p), 0.33 if i % 2 else 0.67) for i, p in enumerate(post)]
    back = A.load_vectors(A.dump_vectors(pairs))
    for (v, lab), (w, lab2) in zip(pairs, back):
        np.testing.assert_array_equal(v.values, w.values)
        assert lab == lab2


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 1000))
def test_derive_seed_is_stable_and_separates_streams(master):
    assert A.derive_seed(master, 1, 2) == A.derive_seed(master, 1, 2)
    assert A.derive_seed(master, 1, 2) != A.derive_seed(master, 2, 1)


# ---------------------------------------------------------------------------
# shadow datasets
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def pool():
    return synth_generate(SyntheticConfig(scenario=Scenario.XI_YA, n_records=6000, n_numeric=6), 0)


def test_binary_shadow_labels_balanced(pool):
    cfg = A.ShadowConfig.binary("A", LOW, 0.33, n_shadow=100, shadow_size=100)
    sets = A.generate_shadow_datasets(pool, cfg, 0)
    labels = [lab for _, lab in sets]
    assert labels.count(0.33) == 50 and labels.count(0.67) == 50
    for ds, lab in sets[:6]:
        assert PropertySpec("A", LOW, lab).mask(ds).sum() == round(lab * 100)


def test_fine_grained_shadow_labels_balanced(pool):
    cfg = A.ShadowConfig.fine_grained("A", LOW, shadow_size=50)
    assert cfg.n_shadow == 500
    labels = [lab for _, lab in A.generate_shadow_datasets(pool, cfg, 0)]
    assert all(labels.count(r) == 100 for r in A.FINE_GRAINED_RATIOS)


def test_shadow_generation_deterministic(pool):
    cfg = A.ShadowConfig.binary("A", LOW, 0.33, n_shadow=4, shadow_size=30)
    a = A.generate_shadow_datasets(pool, cfg, 9)
    b = A.generate_shadow_datasets(pool, cfg, 9)
    for (x, _), (y, _) in zip(a, b):
        np.testing.assert_array_equal(x.data["x0"], y.data["x0"])


def test_shadow_divisibility_enforced():
    with pytest.raises(ValueError):
        A.ShadowConfig.binary("A", LOW, 0.33, n_shadow=101)


def test_shadow_ensemble_cardinality(pool):
    recipe = A.TargetRecipe(M.LR, M.Hyperparameters(epochs=2), 4, encoder=Encoder(pool))
    cfg = A.ShadowConfig.binary("A", LOW, 0.33, n_shadow=100, shadow_size=60)
    sets = A.generate_shadow_datasets(pool, cfg, 0)
    pairs = A.train_shadow_ensemble(sets, pool.take(np.arange(20)), recipe, pool.take(np.arange(30)), 0)
    assert len(pairs) == 100
    assert all(len(v) == 30 * 4 for v, _ in pairs)


# ---------------------------------------------------------------------------
# meta-classifier
# ---------------------------------------------------------------------------


def separable_pairs():
    a = A.AttackVector(np.array([1.0, 0.0]), 1, 2)
    b = A.AttackVector(np.array([0.0, 1.0]), 1, 2)
    return [(a, "p")] * 50 + [(b, "pbar")] * 50


def test_meta_separable_toy():
    pairs = separable_pairs()
    meta = A.train_meta(pairs, A.BINARY_LR)
    assert meta.predict([v for v, _ in pairs]) == [lab for _, lab in pairs]
    assert A.run_attack(meta, pairs[0][0])[0] == "p"


def test_meta_two_layer_widths():
    meta = A.train_meta(separable_pairs(), A.TWO_LAYER_SMALL, hp=M.Hyperparameters(epochs=5))
    assert meta.model.hidden == (20, 8)
    assert A.train_meta(separable_pairs(), A.TWO_LAYER_LARGE, hp=M.Hyperparameters(epochs=1)).model.hidden == (200, 50)


def test_meta_order_insensitive_predictions():
    rng = np.random.default_rng(0)
    pairs = [(A.AttackVector(rng.normal(size=4) + (i % 2), 4, 1, white_box=True), i % 2) for i in range(40)]
    shuffled = [pairs[i] for i in rng.permutation(40)]
    probe = [A.AttackVector(rng.normal(size=4), 4, 1, white_box=True) for _ in range(10)]
    assert A.train_meta(pairs, seed=3).predict(probe) == A.train_meta(shuffled, seed=3).predict(probe)


def test_meta_rejects_single_class_and_unknown_kind():
    a = A.AttackVector(np.array([1.0, 0.0]), 1, 2)
    with pytest.raises(ValueError):
        A.train_meta([(a, "p")] * 4)
    with pytest.raises(ValueError):
        A.train_meta(separable_pairs(), "no-such-kind")


def test_meta_rejects_length_mismatch():
    meta = A.train_meta(separable_pairs())
    with pytest.raises(ValueError):
        A.run_attack(meta, A.AttackVector(np.array([0.5, 0.5, 1.0, 0.0]), 2, 2))


def test_uniform_meta_confidence():
    meta = A.train_meta(separable_pairs())
    meta.model = M.unflatten_params(meta.model, np.zeros(meta.model.n_params))
    assert A.run_attack(meta, separable_pairs()[0][0])[1] == pytest.approx(0.5)


def test_random_fine_grained_meta_near_chance():
    rng = np.random.default_rng(0)
    ratios = A.FINE_GRAINED_RATIOS
    pairs = [(A.AttackVector(rng.normal(size=6), 6, 1, white_box=True), ratios[i % 5]) for i in range(500)]
    meta = A.train_meta(pairs, A.FINE_GRAINED_LR, hp=M.Hyperparameters(epochs=20))
    probe = [(A.AttackVector(rng.normal(size=6), 6, 1, white_box=True), ratios[i % 5]) for i in range(1000)]
    acc = np.mean([A.fine_grained_attack(meta, v) == lab for v, lab in probe])
    assert 0.15 <= acc <= 0.25


def test_dominant_side_and_identical_update():
    assert [A.dominant_side(r) for r in (0.1, 0.5, 0.7)] == [-1, 0, 1]
    rng = np.random.default_rng(2)
    pairs = [(A.AttackVector(rng.normal(size=3) + r, 3, 1, white_box=True), r) for r in A.FINE_GRAINED_RATIOS * 20]
    meta = A.train_meta(pairs, A.FINE_GRAINED_LR, hp=M.Hyperparameters(epochs=10))
    v = pairs[0][0]
    assert A.model_update_attack(meta, v, v) == A.SAME


def test_white_box_identical_targets_agree(pool):
    X, y = Encoder(pool).encode(pool.take(np.arange(300)))
    shadows = []
    for i in range(20):
        m = M.train_logreg(X[i * 10 : i * 10 + 100], y[i * 10 : i * 10 + 100], M.Hyperparameters(epochs=1, seed=i), 4)
        shadows.append((m, 0.33 if i % 2 else 0.67))
    target = M.train_logreg(X, y, M.Hyperparameters(epochs=1, seed=99), 4)
    hp_kind = A.BINARY_LR
    assert A.white_box_attack(shadows, target, hp_kind, 0) == A.white_box_attack(shadows, target, hp_kind, 0)
    other = M.train_mlp(X, y, 3, M.Hyperparameters(epochs=0), 4)
    with pytest.raises(ValueError):
        A.white_box_attack(shadows, other, hp_kind, 0)


def test_principal_components_recover_weak_signal_in_many_dimensions():
    # 300 noisy coordinates share one weak ratio direction plus strong low-rank nuisance
    rng = np.random.default_rng(4)
    ratios = A.FINE_GRAINED_RATIOS
    signal, nuisance = rng.normal(size=300), rng.normal(size=(3, 300))

    def draw(n):
        labels = [ratios[i % 5] for i in range(n)]
        V = (np.outer(labels, signal) * 4 + rng.normal(size=(n, 3)) @ nuisance * 3 + rng.normal(size=(n, 300)))
        return [(A.AttackVector(v, 300, 1, white_box=True), lab) for v, lab in zip(V, labels)]

    train, probe = draw(250), draw(500)
    meta = A.train_meta(train, A.FINE_GRAINED_LR)
    assert meta.basis.shape == (300, 10)
    assert A.train_meta(train, A.FINE_GRAINED_LR, hp=M.Hyperparameters(epochs=1), components=0).basis is None
    acc = np.mean([A.fine_grained_attack(meta, v) == lab for v, lab in probe])
    assert acc >= 0.8
