"""Datasets, splits, ratio-controlled resampling and synthetic generators.

Tabular data is held column-wise: numeric columns as float64 arrays,
categorical columns as integer codes into the domain declared by the
schema.  Datasets are treated as immutable; every operation returns a
new instance.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import math
import re
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np

logger = logging.getLogger(__name__)

NUMERIC = "numeric"
CATEGORICAL = "categorical"


class DataError(ValueError):
    """Raised on schema violations and malformed input files."""


class ResampleWarning(UserWarning):
    """A stratum was too small and records were drawn with replacement."""


def round_half_up(x: float) -> int:
    # guards against 0.33 * 2000 == 659.9999999 style representation error
    return int(math.floor(x + 0.5 + 1e-9))


# ---------------------------------------------------------------------------
# Schema and containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Column:
    name: str
    kind: str = NUMERIC
    domain: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise DataError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == CATEGORICAL:
            if self.domain is None or len(self.domain) < 2:
                raise DataError(f"categorical column {self.name!r} needs a domain of size >= 2")
            if len(set(self.domain)) != len(self.domain):
                raise DataError(f"categorical column {self.name!r} has duplicate domain values")
        elif self.domain is not None:
            raise DataError(f"numeric column {self.name!r} cannot declare a domain")

    @property
    def is_categorical(self) -> bool:
        return self.kind == CATEGORICAL


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered columns plus the names of the sensitive attribute and label."""

    columns: tuple[Column, ...]
    target: str
    sensitive: str | None = None

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise DataError("column names must be unique")
        if self.target not in names:
            raise DataError(f"target {self.target!r} is not a column")
        if self.sensitive is not None:
            if self.sensitive not in names:
                raise DataError(f"sensitive attribute {self.sensitive!r} is not a column")
            if self.sensitive == self.target:
                raise DataError("sensitive attribute and target must differ")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise DataError(f"unknown attribute {name!r}")

    @property
    def features(self) -> list[Column]:
        """Every column except the target (A included when present)."""
        return [c for c in self.columns if c.name != self.target]

    @property
    def x_columns(self) -> list[Column]:
        """Non-sensitive, non-target columns."""
        return [c for c in self.columns if c.name not in (self.target, self.sensitive)]

    @property
    def n_classes(self) -> int:
        col = self.column(self.target)
        if not col.is_categorical:
            raise DataError("target column must be categorical")
        return len(col.domain)


@dataclass(frozen=True, eq=False)
class TabularDataset:
    schema: AttributeSchema
    data: Mapping[str, np.ndarray]
    info: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(v) for v in self.data.values()}
        if set(self.data) != set(self.schema.names):
            raise DataError("data columns do not match schema")
        if len(lengths) != 1:
            raise DataError("columns have different lengths")
        if lengths.pop() < 1:
            raise DataError("dataset must contain at least one record")
        for col in self.schema.columns:
            values = self.data[col.name]
            if col.is_categorical:
                if values.dtype.kind not in "iu" or values.min() < 0 or values.max() >= len(col.domain):
                    raise DataError(f"column {col.name!r} has values outside its domain")
            elif not np.all(np.isfinite(values)):
                raise DataError(f"column {col.name!r} has non-finite values")

    @property
    def n_records(self) -> int:
        return len(next(iter(self.data.values())))

    def __len__(self) -> int:
        return self.n_records

    def column(self, name: str) -> np.ndarray:
        if name not in self.data:
            raise DataError(f"unknown attribute {name!r}")
        return self.data[name]

    @property
    def labels(self) -> np.ndarray:
        return self.data[self.schema.target]

    def take(self, indices: Sequence[int] | np.ndarray) -> "TabularDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return TabularDataset(self.schema, {k: v[idx] for k, v in self.data.items()})

    def records(self) -> list[tuple]:
        """Rows as tuples of decoded values, in schema order."""
        cols = []
        for col in self.schema.columns:
            v = self.data[col.name]
            cols.append([col.domain[i] for i in v] if col.is_categorical else v.tolist())
        return list(zip(*cols))


def concat(datasets: Sequence[TabularDataset]) -> TabularDataset:
    schema = datasets[0].schema
    for ds in datasets[1:]:
        if ds.schema != schema:
            raise DataError("cannot concatenate datasets with different schemas")
    return TabularDataset(schema, {n: np.concatenate([d.data[n] for d in datasets]) for n in schema.names})


# ---------------------------------------------------------------------------
# Property specification
# ---------------------------------------------------------------------------

_THRESHOLD = re.compile(r"^\s*(<=|>=|<|>)\s*([-+0-9.eE]+)\s*$")


@dataclass(frozen=True)
class PropertySpec:
    """Fraction ``ratio`` of records whose ``attribute`` equals ``value``.

    For numeric attributes ``value`` is a threshold predicate such as
    ``"<5"``.
    """

    attribute: str
    value: str
    ratio: float

    def __post_init__(self):
        if not 0.0 <= self.ratio <= 1.0:
            raise DataError(f"ratio must lie in [0, 1], got {self.ratio}")

    def with_ratio(self, ratio: float) -> "PropertySpec":
        return replace(self, ratio=ratio)

    def mask(self, ds: TabularDataset) -> np.ndarray:
        col = ds.schema.column(self.attribute)
        values = ds.data[self.attribute]
        if col.is_categorical:
            if self.value not in col.domain:
                raise DataError(f"{self.value!r} is not in the domain of {self.attribute!r}")
            return values == col.domain.index(self.value)
        m = _THRESHOLD.match(self.value)
        if m is None:
            raise DataError(f"numeric property value must be a threshold like '<5', got {self.value!r}")
        op, t = m.group(1), float(m.group(2))
        return {"<": values < t, ">": values > t, "<=": values <= t, ">=": values >= t}[op]

    def measured_ratio(self, ds: TabularDataset) -> float:
        return float(self.mask(ds).mean())


# ---------------------------------------------------------------------------
# CSV ingestion and interchange
# ---------------------------------------------------------------------------


def load_csv(
    path: str | Path,
    schema: AttributeSchema,
    grouping: Mapping[str, str] | Callable[[str], str] | None = None,
) -> TabularDataset:
    """Parse a header-first CSV file against ``schema``.

    ``grouping`` maps raw target values onto the target's declared
    domain (e.g. sixteen education levels onto four classes).  Rows with
    an empty field are dropped; the count is stored in ``info["dropped"]``.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if grouping is not None and not callable(grouping):
        mapping = dict(grouping)

        def grouping(raw: str) -> str:
            if raw not in mapping:
                raise KeyError(raw)
            return mapping[raw]

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if header != schema.names:
            raise DataError(f"{path}: header {header} does not match schema {schema.names}")
        cols: dict[str, list] = {n: [] for n in header}
        dropped = 0
        for row in reader:
            lineno = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            fields = [f.strip() for f in row]
            if any(f == "" for f in fields):
                dropped += 1
                continue
            parsed = []
            for col, raw in zip(schema.columns, fields):
                if col.name == schema.target and grouping is not None:
                    try:
                        raw = grouping(raw)
                    except (KeyError, ValueError) as exc:
                        raise DataError(f"{path}:{lineno}: no group for target value {raw!r}") from exc
                if col.is_categorical:
                    if raw not in col.domain:
                        raise DataError(f"{path}:{lineno}: unknown value {raw!r} for column {col.name!r}")
                    parsed.append(col.domain.index(raw))
                else:
                    try:
                        parsed.append(float(raw))
                    except ValueError:
                        raise DataError(f"{path}:{lineno}: non-numeric value {raw!r} in column {col.name!r}") from None
            for name, v in zip(header, parsed):
                cols[name].append(v)
    if not cols[header[0]]:
        raise DataError(f"{path}: no complete records")
    if dropped:
        logger.warning("%s: dropped %d rows with missing values", path, dropped)
    data = {
        c.name: np.asarray(cols[c.name], dtype=np.int64 if c.is_categorical else np.float64)
        for c in schema.columns
    }
    return TabularDataset(schema, data, info={"dropped": dropped, "source": str(path)})


def binning(edges: Sequence[float], labels: Sequence[str]) -> Callable[[str], str]:
    """Grouping rule assigning a numeric raw value to ``labels[i]`` for the
    i-th interval cut by ``edges`` (right-closed, e.g. ``<0.15, [0.15,0.5], >0.5``)."""
    if len(labels) != len(edges) + 1:
        raise ValueError("need exactly one more label than edges")

    def rule(raw: str) -> str:
        x = float(raw)
        for i, e in enumerate(edges):
            if (x < e) if i == 0 else (x <= e):
                return labels[i]
        return labels[-1]

    return rule


def write_dataset(ds: TabularDataset, path: str | Path | None = None) -> str:
    """Serialise to the textual interchange format; returns the text.

    A ``key: value`` header block describes the schema, a ``---`` line
    separates it from a CSV body with decoded values.
    """
    out = io.StringIO()
    out.write("format: propleak-dataset/1\n")
    out.write(f"target: {ds.schema.target}\n")
    out.write(f"sensitive: {ds.schema.sensitive or ''}\n")
    out.write(f"n_records: {ds.n_records}\n")
    for col in ds.schema.columns:
        if col.is_categorical:
            out.write(f"column: {col.name} categorical {'|'.join(col.domain)}\n")
        else:
            out.write(f"column: {col.name} numeric\n")
    out.write("---\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(ds.schema.names)
    for rec in ds.records():
        w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in rec])
    text = out.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def read_dataset(source: str | Path) -> TabularDataset:
    text = Path(source).read_text(encoding="utf-8") if not str(source).startswith("format:") else str(source)
    head, _, body = text.partition("\n---\n")
    meta: dict[str, str] = {}
    columns = []
    for line in head.splitlines():
        key, _, value = line.partition(":")
        value = value.strip()
        if key == "column":
            parts = value.split(" ", 2)
            if parts[1] == CATEGORICAL:
                columns.append(Column(parts[0], CATEGORICAL, tuple(parts[2].split("|"))))
            else:
                columns.append(Column(parts[0]))
        else:
            meta[key] = value
    if meta.get("format") != "propleak-dataset/1":
        raise DataError("not a propleak dataset file")
    schema = AttributeSchema(tuple(columns), target=meta["target"], sensitive=meta["sensitive"] or None)
    rows = list(csv.reader(io.StringIO(body)))
    header, rows = rows[0], rows[1:]
    if header != schema.names:
        raise DataError("body header does not match schema block")
    data = {}
    for j, col in enumerate(columns):
        raw = [r[j] for r in rows]
        if col.is_categorical:
            data[col.name] = np.array([col.domain.index(v) for v in raw], dtype=np.int64)
        else:
            data[col.name] = np.array([float(v) for v in raw])
    return TabularDataset(schema, data)


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ColumnMap:
    """Where each feature column lives in the encoded matrix."""

    entries: tuple[tuple[Column, slice, tuple[float, float] | None], ...]

    @property
    def width(self) -> int:
        return self.entries[-1][1].stop if self.entries else 0

    def span(self, name: str) -> slice:
        for col, sl, _ in self.entries:
            if col.name == name:
                return sl
        raise DataError(f"unknown attribute {name!r}")

    def inverse(self, matrix: np.ndarray) -> dict[str, np.ndarray]:
        """Decode an encoded matrix back to column values."""
        out = {}
        for col, sl, rng in self.entries:
            block = matrix[:, sl]
            if col.is_categorical:
                out[col.name] = block.argmax(axis=1).astype(np.int64)
            else:
                lo, hi = rng
                out[col.name] = block[:, 0] * (hi - lo) + lo
        return out


class Encoder:
    """One-hot/min-max feature encoder whose numeric ranges come from the
    dataset it was fitted on (the attacker fits it on D_aux)."""

    def __init__(self, reference: TabularDataset):
        self.schema = reference.schema
        entries = []
        start = 0
        for col in self.schema.features:
            if col.is_categorical:
                entries.append((col, slice(start, start + len(col.domain)), None))
                start += len(col.domain)
            else:
                v = reference.data[col.name]
                entries.append((col, slice(start, start + 1), (float(v.min()), float(v.max()))))
                start += 1
        self.column_map = ColumnMap(tuple(entries))

    @property
    def width(self) -> int:
        return self.column_map.width

    def transform(self, ds: TabularDataset) -> np.ndarray:
        if ds.schema != self.schema:
            raise DataError("dataset schema differs from the encoder's")
        X = np.zeros((ds.n_records, self.width))
        for col, sl, rng in self.column_map.entries:
            v = ds.data[col.name]
            if col.is_categorical:
                X[np.arange(len(v)), sl.start + v] = 1.0
            else:
                lo, hi = rng
                X[:, sl.start] = (v - lo) / (hi - lo) if hi > lo else 0.0
        return X

    def encode(self, ds: TabularDataset) -> tuple[np.ndarray, np.ndarray]:
        """Feature matrix and target class ids."""
        return self.transform(ds), ds.labels.astype(np.int64)


def one_hot_encode(ds: TabularDataset, reference: TabularDataset | None = None) -> tuple[np.ndarray, ColumnMap]:
    """Encode the feature columns of ``ds``; numeric ranges are taken from
    ``reference`` (defaults to ``ds`` itself)."""
    enc = Encoder(reference if reference is not None else ds)
    return enc.transform(ds), enc.column_map


# ---------------------------------------------------------------------------
# Resampling and splits
# ---------------------------------------------------------------------------


def resample_with_ratio(pool: TabularDataset, spec: PropertySpec, size: int, seed) -> TabularDataset:
    """Draw exactly ``round(ratio*size)`` records matching ``spec`` and the
    remainder not matching it, then shuffle."""
    rng = np.random.default_rng(seed)
    mask = spec.mask(pool)
    n_with = round_half_up(spec.ratio * size)
    picks = []
    for stratum, need in ((np.flatnonzero(mask), n_with), (np.flatnonzero(~mask), size - n_with)):
        if need == 0:
            continue
        if len(stratum) == 0:
            raise DataError(f"pool has no records in a required stratum of {spec.attribute!r}")
        if len(stratum) >= need:
            picks.append(rng.choice(stratum, size=need, replace=False))
        else:
            warnings.warn(
                f"stratum of {spec.attribute!r} has {len(stratum)} records, {need} requested; "
                "sampling with replacement",
                ResampleWarning,
                stacklevel=2,
            )
            picks.append(rng.choice(stratum, size=need, replace=True))
    idx = np.concatenate(picks) if picks else np.empty(0, dtype=np.int64)
    return pool.take(rng.permutation(idx))


def drop_attribute(ds: TabularDataset, attr: str) -> TabularDataset:
    ds.schema.column(attr)
    if attr == ds.schema.target:
        raise DataError("cannot drop the target column")
    schema = AttributeSchema(
        tuple(c for c in ds.schema.columns if c.name != attr),
        target=ds.schema.target,
        sensitive=None if ds.schema.sensitive == attr else ds.schema.sensitive,
    )
    return TabularDataset(schema, {k: v for k, v in ds.data.items() if k != attr}, info=ds.info)


class Splits(NamedTuple):
    adv: TabularDataset
    honest: TabularDataset
    aux: TabularDataset
    attack: TabularDataset


def make_splits(pool: TabularDataset, sizes: tuple[int, int, int, int], seed) -> Splits:
    """Partition ``pool`` into disjoint (D_adv, D_honest, D_aux, D_attack).

    D_attack is carved out of the auxiliary portion first, so the probe
    records never appear in any shadow training set.
    """
    n_adv, n_honest, n_aux, n_attack = sizes
    total = n_adv + n_honest + n_aux + n_attack
    if pool.n_records < total:
        raise DataError(f"pool has {pool.n_records} records, {total} required")
    perm = np.random.default_rng(seed).permutation(pool.n_records)
    attack = perm[:n_attack]
    aux = perm[n_attack : n_attack + n_aux]
    adv = perm[n_attack + n_aux : n_attack + n_aux + n_adv]
    honest = perm[n_attack + n_aux + n_adv : total]
    return Splits(pool.take(adv), pool.take(honest), pool.take(aux), pool.take(attack))


# ---------------------------------------------------------------------------
# Synthetic tabular generator
# ---------------------------------------------------------------------------


class Scenario(str, enum.Enum):
    """Correlation regime between features X, sensitive A and label Y."""

    XA_YA = "X~A,Y~A"
    XI_YA = "X_|_A,Y~A"
    XA_YI = "X~A,Y_|_A"
    XI_YI = "X_|_A,Y_|_A"

    @property
    def x_correlated(self) -> bool:
        return self in (Scenario.XA_YA, Scenario.XA_YI)

    @property
    def y_correlated(self) -> bool:
        return self in (Scenario.XA_YA, Scenario.XI_YA)

    @classmethod
    def from_flags(cls, x_corr: bool, y_corr: bool) -> "Scenario":
        return {
            (True, True): cls.XA_YA,
            (False, True): cls.XI_YA,
            (True, False): cls.XA_YI,
            (False, False): cls.XI_YI,
        }[(x_corr, y_corr)]

    @classmethod
    def parse(cls, text: str) -> "Scenario":
        norm = text.replace(" ", "").replace("⊥", "_|_").replace("∧", ",").replace("&", ",")
        for s in cls:
            if norm in (s.value, s.name, s.name.lower()):
                return s
        raise ValueError(f"unknown scenario {text!r}")


SENSITIVE = "A"
TARGET = "Y"
LOW, HIGH = "<5", ">5"


@dataclass(frozen=True)
class SyntheticConfig:
    """Parameters of the synthetic tabular distribution.

    ``a_split`` is the fraction of records in the ``A < 5`` stratum.
    Generator weights depend only on ``dist_seed``, so every dataset
    drawn with the same config shares one underlying distribution.
    """

    scenario: Scenario = Scenario.XI_YA
    correlated_columns: tuple[str, ...] | None = None
    correlation_strength: float = 1.0
    a_split: float = 0.5
    n_records: int = 2000
    reduced_mode: bool = False
    n_numeric: int = 40
    categorical_sizes: tuple[int, ...] = (3, 4)
    n_classes: int = 4
    even_weight: float = 0.25
    feature_weight: float = 0.15
    label_effect: float = 5.0
    dist_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario.parse(self.scenario) if isinstance(self.scenario, str) else self.scenario)
        if self.correlated_columns is None:
            cols = ("x0",) if self.scenario.x_correlated else ()
            object.__setattr__(self, "correlated_columns", cols)
        else:
            object.__setattr__(self, "correlated_columns", tuple(self.correlated_columns))
        if bool(self.correlated_columns) != self.scenario.x_correlated:
            raise DataError("correlated_columns must be nonempty exactly when the scenario has X~A")
        numeric = {f"x{j}" for j in range(self.n_numeric)}
        if not set(self.correlated_columns) <= numeric:
            raise DataError(f"correlated columns must be numeric feature names, got {self.correlated_columns}")
        if not 0.0 < self.correlation_strength <= 1.0 and (self.scenario.x_correlated or self.scenario.y_correlated):
            raise DataError("correlation_strength must lie in (0, 1]")
        if not 0.0 <= self.a_split <= 1.0:
            raise DataError("a_split must lie in [0, 1]")
        if self.n_records < 1:
            raise DataError("n_records must be >= 1")

    @property
    def property_spec(self) -> PropertySpec:
        return PropertySpec(SENSITIVE, LOW, self.a_split)

    def schema(self) -> AttributeSchema:
        cols = [Column(f"x{j}") for j in range(self.n_numeric)]
        cols += [Column(f"c{j}", CATEGORICAL, tuple(f"v{i}" for i in range(m))) for j, m in enumerate(self.categorical_sizes)]
        if self.reduced_mode:
            keep = list(self.correlated_columns) + [c.name for c in cols if c.name not in self.correlated_columns]
            keep = set(keep[:3])
            cols = [c for c in cols if c.name in keep]
        cols.append(Column(SENSITIVE))
        cols.append(Column(TARGET, CATEGORICAL, tuple(f"y{k}" for k in range(self.n_classes))))
        return AttributeSchema(tuple(cols), target=TARGET, sensitive=SENSITIVE)


def _distribution_params(cfg: SyntheticConfig) -> dict:
    rng = np.random.default_rng([cfg.dist_seed, 0x5EED])
    l = cfg.n_classes
    W = rng.normal(0.0, cfg.feature_weight, size=(l, cfg.n_numeric))
    for name in cfg.correlated_columns:
        # X' columns act on Y only through an even function, which keeps Y
        # independent of A when the scenario says so.
        W[:, int(name[1:])] = 0.0
    cat_probs = [rng.dirichlet(np.full(m, 4.0)) for m in cfg.categorical_sizes]
    cat_effects = [rng.normal(0.0, cfg.feature_weight, size=(m, l)) for m in cfg.categorical_sizes]
    even_dir = rng.normal(0.0, 1.0, size=l)
    even_dir -= even_dir.mean()
    a_dir = cfg.label_effect * np.linspace(1.0, -1.0, l)
    bias = rng.normal(0.0, 0.3, size=l)
    return dict(W=W, cat_probs=cat_probs, cat_effects=cat_effects, even_dir=even_dir, a_dir=a_dir, bias=bias)


def synth_generate(cfg: SyntheticConfig, seed) -> TabularDataset:
    """Draw ``cfg.n_records`` records from the synthetic distribution.

    A is uniform on [0, 5) for exactly ``round(a_split*n)`` records and
    uniform on (5, 10] for the rest.  Under X~A each correlated column's
    mean is shifted by ``+strength`` when A > 5 and ``-strength`` when
    A < 5.  Under Y~A the label logits gain ``strength * 1[A>5]`` along a
    fixed class direction.  Correlated columns influence Y only through
    their square, whose law does not depend on the sign of the shift.
    """
    p = _distribution_params(cfg)
    rng = np.random.default_rng(seed)
    n = cfg.n_records
    n_low = round_half_up(cfg.a_split * n)
    u = rng.random(n)
    a = np.concatenate([5.0 * u[:n_low], 10.0 - 5.0 * u[n_low:]])
    a = a[rng.permutation(n)]
    high = (a > 5.0).astype(np.float64)
    sign = 2.0 * high - 1.0

    X = rng.standard_normal((n, cfg.n_numeric))
    if cfg.scenario.x_correlated:
        for name in cfg.correlated_columns:
            X[:, int(name[1:])] += cfg.correlation_strength * sign
    cats = [rng.choice(len(pr), size=n, p=pr) for pr in p["cat_probs"]]

    logits = X @ p["W"].T + p["bias"]
    for codes, eff in zip(cats, p["cat_effects"]):
        logits += eff[codes]
    for name in cfg.correlated_columns:
        x = X[:, int(name[1:])]
        logits += cfg.even_weight * np.outer(x * x - 1.0, p["even_dir"])
    if cfg.scenario.y_correlated:
        logits += cfg.correlation_strength * np.outer(high, p["a_dir"])
    prob = np.exp(logits - logits.max(axis=1, keepdims=True))
    prob /= prob.sum(axis=1, keepdims=True)
    y = (rng.random((n, 1)) > np.cumsum(prob, axis=1)).sum(axis=1)
    y = np.minimum(y, cfg.n_classes - 1)

    schema = cfg.schema()
    data: dict[str, np.ndarray] = {}
    for col in schema.columns:
        if col.name == SENSITIVE:
            data[col.name] = a
        elif col.name == TARGET:
            data[col.name] = y.astype(np.int64)
        elif col.name.startswith("x"):
            data[col.name] = X[:, int(col.name[1:])]
        else:
            data[col.name] = cats[int(col.name[1:])].astype(np.int64)
    return TabularDataset(schema, data)


# ---------------------------------------------------------------------------
# Synthetic graph generator
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GraphDataset:
    """Undirected graph with one-hot node types as features.

    ``edges`` holds each undirected edge once as ``(i, j)`` with
    ``i < j``.  ``masks`` maps a party name to the node ids it owns.
    """

    n_nodes: int
    edges: np.ndarray
    node_features: np.ndarray
    node_labels: np.ndarray
    n_classes: int
    masks: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        e = self.edges
        if e.size and (e.ndim != 2 or e.shape[1] != 2):
            raise DataError("edges must be an (E, 2) array")
        if e.size and (np.any(e[:, 0] == e[:, 1])):
            raise DataError("self-loops are not allowed in the edge set")
        if e.size and (e.min() < 0 or e.max() >= self.n_nodes):
            raise DataError("edge endpoints out of range")
        if self.node_features.shape[0] != self.n_nodes or len(self.node_labels) != self.n_nodes:
            raise DataError("features/labels must have one row per node")
        if np.any(self.node_labels < 0) or np.any(self.node_labels >= self.n_classes):
            raise DataError("node labels outside [0, n_classes)")
        seen: set[int] = set()
        for ids in self.masks.values():
            s = set(np.asarray(ids).tolist())
            if seen & s:
                raise DataError("party masks must be disjoint")
            seen |= s

    @property
    def node_types(self) -> np.ndarray:
        return self.node_features.argmax(axis=1)

    def with_masks(self, **masks: np.ndarray) -> "GraphDataset":
        return replace(self, masks={k: np.asarray(v, dtype=np.int64) for k, v in masks.items()})

    def without_types(self) -> "GraphDataset":
        """Copy whose node features carry no type information (a constant column)."""
        return replace(self, node_features=np.ones((self.n_nodes, 1)))


def score_thresholds(n_classes: int) -> np.ndarray:
    """Cut points turning a latent review score into ``n_classes`` labels."""
    if n_classes == 2:
        return np.array([0.0])
    return np.linspace(-2.5, 2.5, n_classes + 1)[1:-1]


def synth_graph_generate(
    n_nodes: int,
    n_types: int,
    type_split: PropertySpec,
    n_classes: int,
    homophily: float,
    label_signal: float,
    seed,
    mean_degree: float = 8.0,
    homophily_boost: float = 9.0,
) -> GraphDataset:
    """Stochastic-block graph whose blocks are node types.

    Type ``int(type_split.value)`` is assigned to exactly
    ``round(ratio*n)`` nodes; the others are spread evenly over the
    remaining types.  Inter-type edges appear with probability
    ``mean_degree/n``; intra-type probability is that times
    ``1 + homophily*homophily_boost``.  Labels bin a latent score
    ``label_signal*mu[type] + N(0,1)`` where the distinguished type has
    ``mu = +1`` and all others ``-1``.
    """
    if n_types < 2:
        raise DataError("n_types must be >= 2")
    if not 0.0 <= homophily <= 1.0:
        raise DataError("homophily must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    special = int(type_split.value)
    n_special = round_half_up(type_split.ratio * n_nodes)
    others = [t for t in range(n_types) if t != special]
    rest = np.array([others[i % len(others)] for i in range(n_nodes - n_special)], dtype=np.int64)
    types = np.concatenate([np.full(n_special, special, dtype=np.int64), rest])
    types = types[rng.permutation(n_nodes)]

    p_out = min(1.0, mean_degree / n_nodes)
    p_in = min(1.0, p_out * (1.0 + homophily * homophily_boost))
    src, dst = [], []
    chunk = 512
    for start in range(0, n_nodes, chunk):
        rows = np.arange(start, min(start + chunk, n_nodes))
        u = rng.random((len(rows), n_nodes))
        same = types[rows][:, None] == types[None, :]
        hit = u < np.where(same, p_in, p_out)
        hit &= np.arange(n_nodes)[None, :] > rows[:, None]
        r, c = np.nonzero(hit)
        src.append(rows[r])
        dst.append(c)
    edges = np.stack([np.concatenate(src), np.concatenate(dst)], axis=1).astype(np.int64)

    mu = np.where(types == special, 1.0, -1.0)
    latent = label_signal * mu + rng.standard_normal(n_nodes)
    labels = np.searchsorted(score_thresholds(n_classes), latent).astype(np.int64)
    features = np.zeros((n_nodes, n_types))
    features[np.arange(n_nodes), types] = 1.0
    return GraphDataset(n_nodes, edges, features, labels, n_classes)



def resample_nodes(node_ids: np.ndarray, node_types: np.ndarray, spec: PropertySpec, size: int, seed) -> np.ndarray:
    """Graph analogue of :func:`resample_with_ratio`: pick ``size`` node ids
    from ``node_ids`` with exactly ``round(ratio*size)`` of type ``spec.value``."""
    rng = np.random.default_rng(seed)
    node_ids = np.asarray(node_ids)
    mask = node_types[node_ids] == int(spec.value)
    n_with = round_half_up(spec.ratio * size)
    picks = []
    for stratum, need in ((node_ids[mask], n_with), (node_ids[~mask], size - n_with)):
        if need == 0:
            continue
        if len(stratum) == 0:
            raise DataError("node pool has no nodes in a required type stratum")
        replace_ = len(stratum) < need
        if replace_:
            warnings.warn(f"type stratum has {len(stratum)} nodes, {need} requested; sampling with replacement",
                          ResampleWarning, stacklevel=2)
        picks.append(rng.choice(stratum, size=need, replace=replace_))
    return rng.permutation(np.concatenate(picks))
