"""Property-inference attack: shadow models, attack vectors, meta-classifier.

The attacker queries a model on a fixed probe set D_attack and
concatenates the k posterior vectors into one attack vector of length
k*l.  Shadow models trained on resampled auxiliary data, half with the
property and half without (or one group per ratio for the fine-grained
variant), supply labelled vectors for a meta-classifier.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from . import models as M
from .data import (
    DataError,
    Encoder,
    GraphDataset,
    PropertySpec,
    TabularDataset,
    concat,
    resample_nodes,
    resample_with_ratio,
)

logger = logging.getLogger(__name__)

FINE_GRAINED_RATIOS = (0.1, 0.3, 0.5, 0.7, 0.9)

# RNG stream tags mixed into derived seeds
STREAM_SHADOW_DATA = 1
STREAM_SHADOW_MODEL = 2
STREAM_META = 3


class AttackError(RuntimeError):
    pass


class QueryError(AttackError):
    def __init__(self, index: int, cause: Exception):
        super().__init__(f"query {index} failed: {cause}")
        self.index = index
        self.cause = cause


def derive_seed(master: int, *keys: int) -> int:
    """64-bit seed mixed from a master seed and integer keys."""
    ss = np.random.SeedSequence([int(master) & (2**64 - 1), *(int(k) for k in keys)])
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# Attack vectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AttackVector:
    values: np.ndarray
    k: int
    l: int
    white_box: bool = False

    def __post_init__(self):
        if self.values.ndim != 1:
            raise ValueError("attack vector must be one-dimensional")
        if not self.white_box:
            if self.values.size != self.k * self.l:
                raise ValueError(f"attack vector has {self.values.size} values, expected {self.k}*{self.l}")
            sums = self.values.reshape(self.k, self.l).sum(axis=1)
            if not np.allclose(sums, 1.0, atol=1e-6, rtol=0.0):
                raise ValueError("each posterior block must sum to 1")

    def __len__(self) -> int:
        return self.values.size

    @classmethod
    def from_posteriors(cls, post: np.ndarray) -> "AttackVector":
        post = np.asarray(post, dtype=np.float64)
        return cls(post.ravel().copy(), post.shape[0], post.shape[1])

    @classmethod
    def from_params(cls, m: M.TrainedModel) -> "AttackVector":
        v = M.flatten_params(m)
        return cls(v, v.size, 1, white_box=True)


def dump_vectors(pairs: Sequence[tuple[AttackVector, object]]) -> str:
    """Labelled vectors as text: a ``# k=.. l=.. white_box=..`` header,
    then one ``label,v1,v2,...`` line per vector."""
    if not pairs:
        raise ValueError("nothing to dump")
    first = pairs[0][0]
    lines = [f"# k={first.k} l={first.l} white_box={int(first.white_box)}"]
    for v, label in pairs:
        if (v.k, v.l, v.white_box) != (first.k, first.l, first.white_box):
            raise ValueError("all dumped vectors must share k, l and mode")
        lines.append(",".join([str(label)] + [format(x, ".17g") for x in v.values]))
    return "\n".join(lines) + "\n"


def _label(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def load_vectors(text: str) -> list[tuple[AttackVector, object]]:
    """Inverse of :func:`dump_vectors`; numeric labels come back as floats."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError("missing vector dump header")
    meta = dict(item.split("=", 1) for item in lines[0][1:].split())
    k, l, wb = int(meta["k"]), int(meta["l"]), bool(int(meta.get("white_box", "0")))
    out = []
    for lineno, line in enumerate(lines[1:], 2):
        label, *vals = line.split(",")
        try:
            values = np.array([float(x) for x in vals])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
        out.append((AttackVector(values, k, l, white_box=wb), _label(label)))
    return out


QueryFn = Callable[[np.ndarray], np.ndarray]


def local_query(model: M.TrainedModel) -> QueryFn:
    return lambda inputs: M.predict_proba(model, inputs)


def build_attack_vector(query: QueryFn | M.TrainedModel, d_attack, encoder: Encoder | None = None) -> AttackVector:
    """Query ``d_attack`` (encoded rows, node ids, or a dataset plus its
    encoder) and concatenate the posteriors in probe order."""
    if isinstance(query, M.TrainedModel):
        query = local_query(query)
    if isinstance(d_attack, TabularDataset):
        if encoder is None:
            raise ValueError("an encoder is needed to query with a TabularDataset")
        d_attack = encoder.transform(d_attack)
    inputs = np.asarray(d_attack)
    if len(inputs) == 0:
        raise ValueError("d_attack must be nonempty")
    try:
        post = np.asarray(query(inputs), dtype=np.float64)
    except Exception as exc:
        for i in range(len(inputs)):
            try:
                query(inputs[i : i + 1])
            except Exception as row_exc:
                raise QueryError(i, row_exc) from row_exc
        raise QueryError(-1, exc) from exc
    if post.ndim != 2 or post.shape[0] != len(inputs):
        raise AttackError(f"query returned shape {post.shape} for {len(inputs)} probes")
    return AttackVector.from_posteriors(post)


# ---------------------------------------------------------------------------
# Training recipes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TargetRecipe:
    """How the target (and therefore every shadow) model is trained.

    Tabular recipes carry the attacker's encoder; graph recipes carry
    the shared graph and its node labels.
    """

    arch: str
    hp: M.Hyperparameters
    n_classes: int
    hidden: tuple[int, ...] = ()
    encoder: Encoder | None = None
    graph: M.GraphInputs | None = None
    node_labels: np.ndarray | None = None
    chunk: int = 100

    @classmethod
    def for_graph(cls, g: GraphDataset, hidden: int = 16, hp: M.Hyperparameters = M.GCN_DEFAULTS, chunk: int = 100):
        return cls(M.GCN, hp, g.n_classes, (hidden,), graph=M.GraphInputs.from_graph(g), node_labels=g.node_labels, chunk=chunk)

    @property
    def is_graph(self) -> bool:
        return self.arch == M.GCN

    def train(self, train_sets: Sequence, seeds: Sequence[int]) -> list[M.TrainedModel | None]:
        """Train one model per training set (datasets, or node-id arrays for graphs)."""
        out: list[M.TrainedModel | None] = [None] * len(train_sets)
        if self.is_graph:
            for start in range(0, len(train_sets), self.chunk):
                stop = min(start + self.chunk, len(train_sets))
                out[start:stop] = M.train_gcn_many(
                    self.graph, self.node_labels, train_sets[start:stop], self.hidden[0], self.hp, seeds[start:stop], self.n_classes
                )
            return out
        by_size: dict[int, list[int]] = {}
        for i, ds in enumerate(train_sets):
            by_size.setdefault(ds.n_records, []).append(i)
        for idx in by_size.values():
            for start in range(0, len(idx), self.chunk):
                part = idx[start : start + self.chunk]
                encoded = [self.encoder.encode(train_sets[i]) for i in part]
                Xs = np.stack([e[0] for e in encoded])
                ys = np.stack([e[1] for e in encoded])
                trained = M.train_dense_many(Xs, ys, self.hidden, self.hp, [seeds[i] for i in part], self.n_classes, arch=self.arch)
                for i, m in zip(part, trained):
                    out[i] = m
        return out

    def probe(self, d_attack) -> np.ndarray:
        if self.is_graph:
            return np.asarray(d_attack, dtype=np.int64)
        if isinstance(d_attack, TabularDataset):
            return self.encoder.transform(d_attack)
        return np.asarray(d_attack, dtype=np.float64)

    def attack_vectors(self, models: Sequence[M.TrainedModel], d_attack) -> list[AttackVector]:
        probe = self.probe(d_attack)
        vectors = []
        for start in range(0, len(models), self.chunk):
            post = M.predict_proba_many(models[start : start + self.chunk], probe)
            vectors.extend(AttackVector.from_posteriors(p) for p in post)
        return vectors


# ---------------------------------------------------------------------------
# Shadow models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShadowConfig:
    """``properties`` lists the candidate property values; two entries
    give the binary p / p-bar attack, more give the fine-grained one."""

    properties: tuple[PropertySpec, ...]
    n_shadow: int = 100
    shadow_size: int = 2000
    include_adv_data: bool = True

    def __post_init__(self):
        if len(self.properties) < 2:
            raise ValueError("need at least two candidate properties")
        ratios = [p.ratio for p in self.properties]
        if len(set(ratios)) != len(ratios):
            raise ValueError("candidate properties must have distinct ratios")
        if self.n_shadow % len(self.properties):
            raise ValueError(f"n_shadow={self.n_shadow} is not divisible by {len(self.properties)} property classes")

    @property
    def classes(self) -> tuple[float, ...]:
        return tuple(p.ratio for p in self.properties)

    @classmethod
    def binary(cls, attribute: str, value: str, ratio: float, **kw) -> "ShadowConfig":
        return cls((PropertySpec(attribute, value, ratio), PropertySpec(attribute, value, round(1.0 - ratio, 10))), **kw)

    @classmethod
    def fine_grained(cls, attribute: str, value: str, ratios: Sequence[float] = FINE_GRAINED_RATIOS, **kw) -> "ShadowConfig":
        kw.setdefault("n_shadow", 100 * len(ratios))
        return cls(tuple(PropertySpec(attribute, value, r) for r in ratios), **kw)


ShadowSet = Union[TabularDataset, np.ndarray]


def generate_shadow_datasets(d_aux, cfg: ShadowConfig, seed: int, node_types: np.ndarray | None = None) -> list[tuple[ShadowSet, float]]:
    """Resample ``cfg.n_shadow`` shadow training sets from ``d_aux``.

    Shadow ``i`` carries property class ``i mod |P|``, so classes are
    exactly balanced.  For graphs ``d_aux`` is a node-id pool and
    ``node_types`` gives every node's type.
    """
    out = []
    n_props = len(cfg.properties)
    for i in range(cfg.n_shadow):
        spec = cfg.properties[i % n_props]
        s = derive_seed(seed, STREAM_SHADOW_DATA, i)
        if node_types is not None:
            shadow = resample_nodes(d_aux, node_types, spec, cfg.shadow_size, s)
        else:
            shadow = resample_with_ratio(d_aux, spec, cfg.shadow_size, s)
        out.append((shadow, spec.ratio))
    return out


def _with_adv(shadow: ShadowSet, d_adv) -> ShadowSet:
    if d_adv is None:
        return shadow
    if isinstance(shadow, TabularDataset):
        return concat([shadow, d_adv])
    return np.concatenate([np.asarray(shadow), np.asarray(d_adv)])


def train_shadow_models(
    shadow_sets: Sequence[tuple[ShadowSet, float]],
    d_adv,
    recipe: TargetRecipe,
    seed: int,
    max_failure_rate: float = 0.05,
) -> list[tuple[M.TrainedModel, float]]:
    """Train one shadow model per set on ``shadow ∪ d_adv`` (``d_adv=None``
    for the single-party attack).  Diverged trainings are dropped."""
    train_sets = [_with_adv(s, d_adv) for s, _ in shadow_sets]
    seeds = [derive_seed(seed, STREAM_SHADOW_MODEL, i) for i in range(len(train_sets))]
    trained = recipe.train(train_sets, seeds)
    failed = [i for i, m in enumerate(trained) if m is None]
    for i in failed:
        logger.warning("shadow model %d diverged; excluded", i)
    if len(failed) > max_failure_rate * len(trained):
        raise AttackError(f"{len(failed)} of {len(trained)} shadow trainings diverged")
    return [(m, label) for m, (_, label) in zip(trained, shadow_sets) if m is not None]


def train_shadow_ensemble(
    shadow_sets: Sequence[tuple[ShadowSet, float]],
    d_adv,
    recipe: TargetRecipe,
    d_attack,
    seed: int,
) -> list[tuple[AttackVector, float]]:
    """Shadow models queried on ``d_attack``: labelled attack vectors."""
    trained = train_shadow_models(shadow_sets, d_adv, recipe, seed)
    vectors = recipe.attack_vectors([m for m, _ in trained], d_attack)
    return list(zip(vectors, [label for _, label in trained]))


# ---------------------------------------------------------------------------
# Meta-classifier
# ---------------------------------------------------------------------------

BINARY_LR = "binary-lr"
TWO_LAYER_SMALL = "two-layer-20-8"
TWO_LAYER_LARGE = "two-layer-200-50"
FINE_GRAINED_LR = "fine-grained-lr"

META_KINDS = {
    BINARY_LR: ((), 0.01),
    FINE_GRAINED_LR: ((), 0.01),
    TWO_LAYER_SMALL: ((20, 8), 0.01),
    TWO_LAYER_LARGE: ((200, 50), 0.001),
}

# Metas fit a few hundred shadow vectors with thousands of coordinates and
# overfit them; by default they see only the leading principal components.
META_COMPONENTS = 10


@dataclass(eq=False)
class MetaClassifier:
    kind: str
    model: M.TrainedModel
    classes: tuple[float, ...]
    input_length: int
    center: np.ndarray = field(repr=False)
    scale: np.ndarray = field(repr=False)
    basis: np.ndarray | None = field(default=None, repr=False)

    def _features(self, vectors: np.ndarray) -> np.ndarray:
        Z = (vectors - self.center) / self.scale
        return Z if self.basis is None else Z @ self.basis

    def posteriors(self, vectors: Sequence[AttackVector] | np.ndarray) -> np.ndarray:
        V = np.stack([v.values for v in vectors]) if not isinstance(vectors, np.ndarray) else np.atleast_2d(vectors)
        if V.shape[1] != self.input_length:
            raise ValueError(f"attack vector length {V.shape[1]} does not match meta-classifier input {self.input_length}")
        return M.predict_proba(self.model, self._features(V))

    def predict(self, vectors) -> list[float]:
        return [self.classes[i] for i in self.posteriors(vectors).argmax(axis=1)]


def train_meta(
    pairs: Sequence[tuple[AttackVector, float]],
    kind: str = BINARY_LR,
    seed: int = 0,
    hp: M.Hyperparameters | None = None,
    components: int | None = None,
) -> MetaClassifier:
    """Fit a meta-classifier on (attack vector, property) pairs.

    Inputs are standardised with the training vectors' per-coordinate
    mean and standard deviation before entering the classifier.  With
    ``components`` > 0 they are then projected onto that many leading
    principal components of the training vectors; the scores keep their
    natural spread, which lets the classifier fit within its epoch budget.
    ``None`` means META_COMPONENTS; 0 keeps every coordinate.
    """
    if kind not in META_KINDS:
        raise ValueError(f"unknown meta-classifier kind {kind!r}")
    if not pairs:
        raise ValueError("no training pairs")
    lengths = {len(v) for v, _ in pairs}
    if len(lengths) != 1:
        raise ValueError(f"attack vectors have mixed lengths {sorted(lengths)}")
    classes = tuple(sorted({label for _, label in pairs}))
    if len(classes) < 2:
        raise ValueError("meta-classifier needs at least two distinct property labels")
    hidden, lr = META_KINDS[kind]
    hp = hp or M.Hyperparameters(learning_rate=lr)
    hp = hp.with_seed(derive_seed(seed, STREAM_META))
    V = np.stack([v.values for v, _ in pairs])
    y = np.array([classes.index(label) for _, label in pairs])
    center = V.mean(axis=0)
    scale = V.std(axis=0)
    scale[scale < 1e-12] = 1.0
    Z = (V - center) / scale
    if components is None:
        components = META_COMPONENTS
    basis = None
    if components > 0:
        k = min(components, *Z.shape)
        _, _, Wt = np.linalg.svd(Z, full_matrices=False)
        basis = Wt[:k].T
        Z = Z @ basis
    if hidden:
        model = M.train_mlp(Z, y, hidden, hp, n_classes=len(classes))
    else:
        model = M.train_logreg(Z, y, hp, n_classes=len(classes))
    return MetaClassifier(kind, model, classes, V.shape[1], center, scale, basis)


def run_attack(meta: MetaClassifier, f_vector: AttackVector) -> tuple[float, float]:
    """Predicted property class and its posterior confidence."""
    post = meta.posteriors([f_vector])[0]
    i = int(post.argmax())
    return meta.classes[i], float(post[i])


def fine_grained_attack(meta: MetaClassifier, f_vector: AttackVector) -> float:
    """Predicted ratio class (one of ``meta.classes``)."""
    return run_attack(meta, f_vector)[0]


def white_box_attack(
    models: Sequence[tuple[M.TrainedModel, float]],
    target: M.TrainedModel,
    kind: str = TWO_LAYER_LARGE,
    seed: int = 0,
) -> float:
    """Meta-classifier on flattened parameters instead of posteriors."""
    shapes = [p.shape for p in models[0][0].params.values()]
    for m, _ in models:
        if [p.shape for p in m.params.values()] != shapes:
            raise ValueError("shadow models differ in parameter shapes")
    if [p.shape for p in target.params.values()] != shapes:
        raise ValueError("target parameter shapes differ from the shadow models'")
    meta = train_meta([(AttackVector.from_params(m), label) for m, label in models], kind, seed)
    return run_attack(meta, AttackVector.from_params(target))[0]


SAME = "same"
FLIPPED = "flipped"


def dominant_side(ratio: float) -> int:
    """-1 when the property value is a minority, +1 a majority, 0 balanced."""
    return int(np.sign(round(ratio - 0.5, 9)))


def model_update_attack(
    meta: MetaClassifier,
    f_original: AttackVector,
    f_updated: AttackVector,
    meta_updated: MetaClassifier | None = None,
) -> str:
    """Whether the newly joined party shares the original honest party's
    dominant value: ``"same"`` when the fine-grained predictions before
    and after the update fall on the same side of 50%, else ``"flipped"``.

    ``meta_updated`` is used for the updated model when given (shadows
    trained to mimic the larger post-update training set).
    """
    before = fine_grained_attack(meta, f_original)
    after = fine_grained_attack(meta_updated or meta, f_updated)
    return SAME if dominant_side(before) == dominant_side(after) else FLIPPED
