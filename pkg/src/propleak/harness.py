"""Configuration-driven experiment runner.

A config is a flat text file of dotted keys, one experiment per file:

    family = multi-party
    seed = 0
    repetitions = 100
    data.source = synthetic
    data.scenario = X~A,Y~A
    target.arch = lr
    attack.n_shadow = 100

Every key has a default that may depend on the family and the data
source; the resolved config (defaults filled in) is what gets digested,
so a config and its re-serialisation share one digest.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import attack as atk
from . import models as M
from .data import (
    CATEGORICAL,
    NUMERIC,
    AttributeSchema,
    Column,
    DataError,
    Encoder,
    GraphDataset,
    PropertySpec,
    Scenario,
    SyntheticConfig,
    TabularDataset,
    concat,
    drop_attribute,
    load_csv,
    make_splits,
    resample_nodes,
    resample_with_ratio,
    synth_generate,
    synth_graph_generate,
    LOW,
    SENSITIVE,
)

log = logging.getLogger(__name__)

MULTI_PARTY = "multi-party"
SINGLE_PARTY = "single-party"
FINE_GRAINED = "fine-grained"
MODEL_UPDATE = "model-update"
WHITE_BOX = "white-box"
ABLATION_QUERIES = "ablation-queries"
ABLATION_SPLIT = "ablation-split"
ABLATION_CLASSES = "ablation-classes"
FAMILIES = (
    MULTI_PARTY,
    SINGLE_PARTY,
    FINE_GRAINED,
    MODEL_UPDATE,
    WHITE_BOX,
    ABLATION_QUERIES,
    ABLATION_SPLIT,
    ABLATION_CLASSES,
)
SOURCES = ("synthetic", "csv", "graph")

# sweep axis -> config key
AXES = {
    "k": "data.attack_size",
    "split": "attack.split",
    "n_classes": "data.n_classes",
    "with_A": "data.with_A",
}
DEFAULT_AXIS = {ABLATION_QUERIES: "k", ABLATION_SPLIT: "split", ABLATION_CLASSES: "n_classes"}

# seed streams, kept apart from the attack module's
_DATA, _ADV, _HONEST, _TARGET, _SPLIT = 10, 11, 20, 21, 12

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class ConfigError(ValueError):
    """Every problem found in a config, reported together."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class RunFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Config values
# ---------------------------------------------------------------------------


def parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_ratio(text) -> float:
    """``0.3``, ``30%`` or a split written ``30:70`` (first share)."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        value = float(text)
    else:
        t = str(text).strip()
        if ":" in t:
            a, b = (float(x) for x in t.split(":"))
            if a < 0 or b < 0 or a + b <= 0:
                raise ValueError(f"bad split {text!r}")
            value = a / (a + b)
        elif t.endswith("%"):
            value = float(t[:-1]) / 100.0
        else:
            value = float(t)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"ratio {text!r} outside [0, 1]")
    return round(value, 10)


def _parse_ints(text) -> tuple[int, ...]:
    if isinstance(text, (tuple, list)):
        return tuple(int(v) for v in text)
    t = str(text).strip()
    return tuple(int(v) for v in t.split(",")) if t else ()


def _parse_ratios(text) -> tuple[float, ...]:
    if isinstance(text, (tuple, list)):
        return tuple(parse_ratio(v) for v in text)
    return tuple(parse_ratio(v) for v in str(text).split(",") if v.strip())


def _parse_strs(text) -> tuple[str, ...]:
    if isinstance(text, (tuple, list)):
        return tuple(str(v) for v in text)
    return tuple(v.strip() for v in str(text).split(",") if v.strip())


def _parse_optional_int(text) -> int | None:
    if text is None or str(text).strip().lower() in ("", "full", "none"):
        return None
    return int(text)


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(_fmt_value(x) for x in v)
    return str(v)


@dataclass(frozen=True)
class _Key:
    parse: Callable[[Any], Any]
    default: Any = None  # callable(family, source) or a value
    sources: tuple[str, ...] = SOURCES


def _by_source(**kw):
    return lambda family, source: kw[source]


_SYN, _CSV, _GRAPH = ("synthetic",), ("csv",), ("graph",)
_TAB = ("synthetic", "csv")

KEYS: dict[str, _Key] = {
    "family": _Key(str),
    "seed": _Key(int, 0),
    "repetitions": _Key(int, 100),
    "max_failure_rate": _Key(float, 0.05),
    "data.source": _Key(str, "synthetic"),
    "data.with_A": _Key(parse_bool, True),
    "data.adv_size": _Key(int, _by_source(synthetic=2000, csv=2000, graph=200)),
    "data.honest_size": _Key(int, _by_source(synthetic=2000, csv=2000, graph=200)),
    "data.aux_size": _Key(int, _by_source(synthetic=10000, csv=10000, graph=1100)),
    "data.attack_size": _Key(int, _by_source(synthetic=1000, csv=1000, graph=800)),
    "data.attack_pool": _Key(int, 0),
    "data.adv_split": _Key(parse_ratio, lambda f, s: 0.5 if f == MODEL_UPDATE or s == "graph" else 0.33),
    "data.n_classes": _Key(int, _by_source(synthetic=4, csv=0, graph=2), _SYN + _GRAPH),
    # synthetic tabular
    "data.scenario": _Key(lambda t: Scenario.parse(str(t)).value, Scenario.XI_YA.value, _SYN),
    "data.correlation_strength": _Key(float, 1.0, _SYN),
    "data.correlated_columns": _Key(_parse_strs, None, _SYN),
    "data.reduced_mode": _Key(parse_bool, False, _SYN),
    "data.n_numeric": _Key(int, SyntheticConfig.n_numeric, _SYN),
    "data.even_weight": _Key(float, SyntheticConfig.even_weight, _SYN),
    "data.feature_weight": _Key(float, SyntheticConfig.feature_weight, _SYN),
    "data.label_effect": _Key(float, SyntheticConfig.label_effect, _SYN),
    "data.dist_seed": _Key(int, 0, _SYN),
    # csv
    "data.path": _Key(str, None, _CSV),
    "data.columns": _Key(_parse_strs, None, _CSV),
    "data.target": _Key(str, None, _CSV),
    "data.sensitive": _Key(str, None, _CSV),
    "data.value": _Key(str, None, _CSV),
    "data.adv_pool": _Key(int, 0, _CSV + _GRAPH),
    "data.honest_pool": _Key(int, 0, _CSV + _GRAPH),
    # graph
    "data.n_nodes": _Key(int, 3000, _GRAPH),
    "data.n_types": _Key(int, 2, _GRAPH),
    "data.type_value": _Key(int, 1, _GRAPH),
    "data.homophily": _Key(float, 0.1, _GRAPH),
    "data.label_signal": _Key(float, 1.0, _GRAPH),
    "data.mean_degree": _Key(float, 8.0, _GRAPH),
    "data.graph_seed": _Key(int, 0, _GRAPH),
    # target recipe
    "target.arch": _Key(str, _by_source(synthetic=M.LR, csv=M.LR, graph=M.GCN)),
    "target.hidden": _Key(_parse_ints, lambda f, s: (16,) if s == "graph" else ()),
    "target.learning_rate": _Key(float, 0.01),
    "target.weight_decay": _Key(float, _by_source(synthetic=1e-4, csv=1e-4, graph=5e-4)),
    "target.epochs": _Key(int, 200),
    "target.batch_size": _Key(_parse_optional_int, _by_source(synthetic=64, csv=64, graph=None)),
    # attack
    "attack.split": _Key(parse_ratio, 0.33),
    "attack.ratios": _Key(_parse_ratios, atk.FINE_GRAINED_RATIOS),
    "attack.n_shadow": _Key(int, lambda f, s: 500 if f in (FINE_GRAINED, MODEL_UPDATE) else 100),
    "attack.shadow_size": _Key(int, 0),
    "attack.meta": _Key(str, None),
    "attack.chunk": _Key(int, 100),
    "attack.meta_components": _Key(_parse_optional_int, None),
    # model update
    "update.honest1": _Key(_parse_ratios, (0.3, 0.7)),
    "update.honest2": _Key(_parse_ratios, (0.3, 0.7)),
}

_FAMILY_KEYS = {
    "attack.ratios": (FINE_GRAINED, MODEL_UPDATE),
    "update.honest1": (MODEL_UPDATE,),
    "update.honest2": (MODEL_UPDATE,),
}


def _applies(key: str, family: str, source: str) -> bool:
    spec = KEYS[key]
    if source not in spec.sources:
        return False
    fams = _FAMILY_KEYS.get(key)
    return fams is None or family in fams


def parse_config_text(text: str) -> dict[str, str]:
    """Raw ``key = value`` pairs; ``#`` starts a comment."""
    out: dict[str, str] = {}
    errors = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            errors.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        if key in out:
            errors.append(f"line {lineno}: duplicate key {key!r}")
            continue
        out[key] = value.strip()
    if errors:
        raise ConfigError(errors)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved experiment description (see the module docstring)."""

    values: tuple[tuple[str, Any], ...]

    # ---- construction -------------------------------------------------

    @classmethod
    def from_mapping(cls, raw: dict[str, Any], base_dir: str | Path | None = None) -> "ExperimentConfig":
        errors: list[str] = []
        family = str(raw.get("family", "")).strip()
        if not family:
            errors.append("missing required key 'family'")
        elif family not in FAMILIES:
            errors.append(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
        source = str(raw.get("data.source", "synthetic")).strip()
        if source not in SOURCES:
            errors.append(f"unknown data.source {source!r}; expected one of {', '.join(SOURCES)}")
        for key in raw:
            if key not in KEYS:
                errors.append(f"unknown key {key!r}")
            elif not errors and not _applies(key, family, source):
                errors.append(f"key {key!r} does not apply to family {family!r} with source {source!r}")
        if errors:
            raise ConfigError(errors)

        values: dict[str, Any] = {}
        for key, spec in KEYS.items():
            if not _applies(key, family, source):
                continue
            if key in raw and raw[key] is not None:
                if spec.default is None and str(raw[key]).strip().lower() == "none":
                    values[key] = None
                    continue
                try:
                    values[key] = spec.parse(raw[key])
                except (TypeError, ValueError) as exc:
                    errors.append(f"{key}: {exc}")
                continue
            default = spec.default(family, source) if callable(spec.default) else spec.default
            values[key] = default
        if errors:
            raise ConfigError(errors)
        if source == "csv" and values.get("data.path") and base_dir is not None:
            p = Path(values["data.path"])
            if not p.is_absolute():
                values["data.path"] = str((Path(base_dir) / p).resolve())
        _resolve(values)
        cfg = cls(tuple(sorted(values.items())))
        cfg.validate()
        return cfg

    @classmethod
    def from_text(cls, text: str, base_dir: str | Path | None = None) -> "ExperimentConfig":
        return cls.from_mapping(parse_config_text(text), base_dir)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError([f"cannot read config {path}: {exc}"]) from exc
        return cls.from_text(text, base_dir=path.parent)

    def to_text(self) -> str:
        return "".join(f"{k} = {_fmt_value(v)}\n" for k, v in self.values)

    def with_value(self, key: str, value) -> "ExperimentConfig":
        """Copy with one key replaced; every other value stays as resolved."""
        raw = {k: _fmt_value(v) for k, v in self.values if v is not None}
        raw[key] = value if isinstance(value, str) else _fmt_value(value)
        return ExperimentConfig.from_mapping(raw)

    # ---- access -------------------------------------------------------

    def __getitem__(self, key: str):
        return dict(self.values)[key]

    def get(self, key: str, default=None):
        return dict(self.values).get(key, default)

    @property
    def family(self) -> str:
        return self["family"]

    @property
    def source(self) -> str:
        return self["data.source"]

    @property
    def seed(self) -> int:
        return self["seed"]

    @property
    def repetitions(self) -> int:
        return self["repetitions"]

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()[:16]

    def hyperparameters(self) -> M.Hyperparameters:
        return M.Hyperparameters(
            learning_rate=self["target.learning_rate"],
            weight_decay=self["target.weight_decay"],
            epochs=self["target.epochs"],
            batch_size=self["target.batch_size"],
        )

    def synthetic_config(self) -> SyntheticConfig:
        return SyntheticConfig(
            scenario=self["data.scenario"],
            correlated_columns=self["data.correlated_columns"],
            correlation_strength=self["data.correlation_strength"],
            reduced_mode=self["data.reduced_mode"],
            n_numeric=self["data.n_numeric"],
            n_classes=self["data.n_classes"],
            even_weight=self["data.even_weight"],
            feature_weight=self["data.feature_weight"],
            label_effect=self["data.label_effect"],
            dist_seed=self["data.dist_seed"],
        )

    # ---- validation ---------------------------------------------------

    def validate(self) -> None:
        errors: list[str] = []
        fam, src = self.family, self.source
        if self.repetitions < 1:
            errors.append("repetitions must be >= 1")
        if not 0.0 <= self["max_failure_rate"] <= 1.0:
            errors.append("max_failure_rate must lie in [0, 1]")
        if fam.startswith("ablation-") and src != "graph":
            errors.append(f"family {fam!r} runs on a graph source")
        if fam in (FINE_GRAINED, MODEL_UPDATE, WHITE_BOX) and src == "graph":
            errors.append(f"family {fam!r} needs a tabular source")
        arch = self["target.arch"]
        if src == "graph" and arch != M.GCN:
            errors.append("graph sources train gcn targets")
        if src != "graph" and arch not in (M.LR, M.MLP):
            errors.append(f"target.arch must be lr or mlp for tabular data, got {arch!r}")
        if arch == M.MLP and not self["target.hidden"]:
            errors.append("an mlp target needs target.hidden")
        if arch == M.GCN and len(self["target.hidden"]) != 1:
            errors.append("a gcn target takes exactly one hidden width")
        if any(h < 1 for h in self["target.hidden"]):
            errors.append("hidden widths must be positive")
        for key in ("target.learning_rate", "target.epochs"):
            if self[key] <= 0:
                errors.append(f"{key} must be positive")
        if self["target.weight_decay"] < 0:
            errors.append("target.weight_decay must be >= 0")
        bs = self["target.batch_size"]
        if bs is not None and bs < 1:
            errors.append("target.batch_size must be >= 1 or 'full'")
        for key in ("data.adv_size", "data.honest_size", "data.aux_size", "data.attack_size", "attack.shadow_size"):
            if self[key] < 1:
                errors.append(f"{key} must be >= 1")
        if self["data.attack_pool"] < self["data.attack_size"]:
            errors.append("data.attack_pool must be at least data.attack_size")
        if self["attack.meta"] not in atk.META_KINDS:
            errors.append(f"attack.meta must be one of {', '.join(atk.META_KINDS)}")
        n_props = len(self["attack.ratios"]) if fam in (FINE_GRAINED, MODEL_UPDATE) else 2
        if self["attack.n_shadow"] < n_props or self["attack.n_shadow"] % n_props:
            errors.append(f"attack.n_shadow must be a positive multiple of {n_props}")
        if fam in (FINE_GRAINED, MODEL_UPDATE):
            ratios = self["attack.ratios"]
            if len(ratios) < 2 or len(set(ratios)) != len(ratios):
                errors.append("attack.ratios needs at least two distinct ratios")
        elif abs(self["attack.split"] - 0.5) < 1e-9:
            errors.append("attack.split 0.5 makes the two property classes identical")
        if fam == MODEL_UPDATE:
            if not self["update.honest1"] or not self["update.honest2"]:
                errors.append("update.honest1 and update.honest2 need at least one ratio each")
        if src == "synthetic":
            try:
                self.synthetic_config()
            except (DataError, ValueError) as exc:
                errors.append(f"synthetic data: {exc}")
        elif src == "csv":
            for key in ("data.path", "data.columns", "data.target", "data.sensitive", "data.value"):
                if not self[key]:
                    errors.append(f"csv source needs {key}")
            if self["data.path"] and not Path(self["data.path"]).is_file():
                errors.append(f"csv file not found: {self['data.path']}")
            if self["data.columns"]:
                try:
                    schema = self.csv_schema()
                except (DataError, ValueError) as exc:
                    errors.append(f"data.columns: {exc}")
                else:
                    if schema.sensitive is None:
                        errors.append("data.sensitive must name a column")
        else:
            if self["data.n_classes"] < 2:
                errors.append("data.n_classes must be >= 2")
            if self["data.n_types"] < 2:
                errors.append("data.n_types must be >= 2")
            if not 0 <= self["data.type_value"] < self["data.n_types"]:
                errors.append("data.type_value must name one of the node types")
            if not 0.0 <= self["data.homophily"] <= 1.0:
                errors.append("data.homophily must lie in [0, 1]")
            need = self["data.attack_pool"] + self["data.aux_size"] + self["data.adv_pool"] + self["data.honest_pool"]
            if need > self["data.n_nodes"]:
                errors.append(f"graph node pools need {need} nodes but data.n_nodes is {self['data.n_nodes']}")
        if errors:
            raise ConfigError(errors)

    def csv_schema(self) -> AttributeSchema:
        cols = []
        for item in self["data.columns"]:
            name, _, kind = item.partition(":")
            name, kind = name.strip(), kind.strip() or NUMERIC
            if kind == NUMERIC:
                cols.append(Column(name))
            elif kind.startswith(CATEGORICAL):
                _, _, domain = kind.partition("/")
                cols.append(Column(name, CATEGORICAL, tuple(v for v in domain.split("|") if v)))
            else:
                raise ValueError(f"column {name!r}: kind must be numeric or categorical/v1|v2|..., got {kind!r}")
        return AttributeSchema(tuple(cols), target=self["data.target"], sensitive=self["data.sensitive"])


def _resolve(values: dict[str, Any]) -> None:
    """Fill defaults that depend on other keys."""
    family = values["family"]
    if not values.get("attack.shadow_size"):
        values["attack.shadow_size"] = values["data.honest_size"]
    if not values.get("data.attack_pool"):
        values["data.attack_pool"] = values["data.attack_size"]
    if values.get("attack.meta") is None:
        if family == WHITE_BOX:
            values["attack.meta"] = atk.TWO_LAYER_LARGE
        elif family in (FINE_GRAINED, MODEL_UPDATE):
            values["attack.meta"] = atk.FINE_GRAINED_LR
        elif values.get("target.arch") == M.MLP:
            values["attack.meta"] = atk.TWO_LAYER_SMALL
        else:
            values["attack.meta"] = atk.BINARY_LR
    if values["data.source"] != "synthetic":
        if not values.get("data.adv_pool"):
            values["data.adv_pool"] = 2 * values["data.adv_size"]
        if not values.get("data.honest_pool"):
            values["data.honest_pool"] = 3 * values["data.honest_size"]
    if family != MODEL_UPDATE:
        values.pop("update.honest1", None)
        values.pop("update.honest2", None)
    if family not in (FINE_GRAINED, MODEL_UPDATE):
        values.pop("attack.ratios", None)


# ---------------------------------------------------------------------------
# Data settings
# ---------------------------------------------------------------------------


@dataclass
class Setting:
    """Everything one experiment trains and queries on.

    ``aux`` keeps the sensitive attribute (shadow resampling needs it);
    ``strip`` removes it again for the A-bar mode.  ``adv`` and
    ``attack`` are already stripped.
    """

    recipe: atk.TargetRecipe
    attribute: str
    value: str
    aux: Any
    adv: Any
    attack: Any
    honest: Callable[[float, int, int], Any]
    strip: Callable[[Any], Any]
    node_types: np.ndarray | None = None

    def combine(self, *parts):
        parts = [p for p in parts if p is not None]
        if isinstance(parts[0], TabularDataset):
            return concat(parts)
        return np.concatenate([np.asarray(p, dtype=np.int64) for p in parts])


def _identity(x):
    return x


def _tabular_setting(cfg: ExperimentConfig, aux: TabularDataset, attack: TabularDataset, adv: TabularDataset,
                     honest: Callable, attribute: str, value: str, n_classes: int) -> Setting:
    strip = _identity if cfg["data.with_A"] else (lambda ds: drop_attribute(ds, attribute))
    encoder = Encoder(strip(aux))
    hidden = tuple(cfg["target.hidden"]) if cfg["target.arch"] == M.MLP else ()
    recipe = atk.TargetRecipe(cfg["target.arch"], cfg.hyperparameters(), n_classes, hidden, encoder=encoder, chunk=cfg["attack.chunk"])
    return Setting(recipe, attribute, value, aux, strip(adv), strip(attack),
                   lambda r, rep, part=0: strip(honest(r, rep, part)), strip)


def _synthetic_setting(cfg: ExperimentConfig) -> Setting:
    syn = cfg.synthetic_config()
    seed = cfg.seed
    pool = cfg["data.attack_pool"]
    both = synth_generate(replace(syn, a_split=0.5, n_records=cfg["data.aux_size"] + pool), atk.derive_seed(seed, _DATA))
    attack = both.take(np.arange(cfg["data.attack_size"]))
    aux = both.take(np.arange(pool, both.n_records))
    adv = synth_generate(replace(syn, a_split=cfg["data.adv_split"], n_records=cfg["data.adv_size"]), atk.derive_seed(seed, _ADV))

    def honest(ratio, rep, part=0):
        return synth_generate(replace(syn, a_split=ratio, n_records=cfg["data.honest_size"]), atk.derive_seed(seed, _HONEST, rep, part))

    return _tabular_setting(cfg, aux, attack, adv, honest, SENSITIVE, LOW, syn.n_classes)


def _csv_setting(cfg: ExperimentConfig) -> Setting:
    schema = cfg.csv_schema()
    data = load_csv(cfg["data.path"], schema)
    seed = cfg.seed
    splits = make_splits(data, (cfg["data.adv_pool"], cfg["data.honest_pool"], cfg["data.aux_size"], cfg["data.attack_pool"]),
                         atk.derive_seed(seed, _SPLIT))
    attribute, value = schema.sensitive, cfg["data.value"]
    adv = resample_with_ratio(splits.adv, PropertySpec(attribute, value, cfg["data.adv_split"]), cfg["data.adv_size"],
                              atk.derive_seed(seed, _ADV))
    attack = splits.attack.take(np.arange(cfg["data.attack_size"]))

    def honest(ratio, rep, part=0):
        return resample_with_ratio(splits.honest, PropertySpec(attribute, value, ratio), cfg["data.honest_size"],
                                   atk.derive_seed(seed, _HONEST, rep, part))

    return _tabular_setting(cfg, splits.aux, attack, adv, honest, attribute, value, schema.n_classes)


def build_graph(cfg: ExperimentConfig) -> GraphDataset:
    """The experiment's graph; it depends on ``data.graph_seed`` only, so
    configs differing in other keys share it."""
    return synth_graph_generate(
        cfg["data.n_nodes"],
        cfg["data.n_types"],
        PropertySpec("type", str(cfg["data.type_value"]), 0.5),
        cfg["data.n_classes"],
        cfg["data.homophily"],
        cfg["data.label_signal"],
        cfg["data.graph_seed"],
        mean_degree=cfg["data.mean_degree"],
    )


def _graph_setting(cfg: ExperimentConfig) -> Setting:
    g = build_graph(cfg)
    seed = cfg.seed
    types = g.node_types
    # pools follow the graph, so sweep points query nested prefixes of one pool
    perm = np.random.default_rng(atk.derive_seed(cfg["data.graph_seed"], _SPLIT)).permutation(g.n_nodes)
    cuts = np.cumsum([cfg["data.attack_pool"], cfg["data.aux_size"], cfg["data.adv_pool"], cfg["data.honest_pool"]])
    attack_pool, aux, adv_pool, honest_pool = np.split(perm[: cuts[-1]], cuts[:-1])
    value = str(cfg["data.type_value"])
    adv = resample_nodes(adv_pool, types, PropertySpec("type", value, cfg["data.adv_split"]), cfg["data.adv_size"],
                         atk.derive_seed(seed, _ADV))

    def honest(ratio, rep, part=0):
        return resample_nodes(honest_pool, types, PropertySpec("type", value, ratio), cfg["data.honest_size"],
                              atk.derive_seed(seed, _HONEST, rep, part))

    served = g if cfg["data.with_A"] else g.without_types()
    recipe = atk.TargetRecipe.for_graph(served, cfg["target.hidden"][0], cfg.hyperparameters(), chunk=cfg["attack.chunk"])
    return Setting(recipe, "type", value, aux, adv, attack_pool[: cfg["data.attack_size"]], honest, _identity, types)


def build_setting(cfg: ExperimentConfig) -> Setting:
    try:
        if cfg.source == "synthetic":
            return _synthetic_setting(cfg)
        if cfg.source == "csv":
            return _csv_setting(cfg)
        return _graph_setting(cfg)
    except DataError as exc:
        raise ConfigError([f"data: {exc}"]) from exc


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


def binomial_ci(p: float, n: int, z: float = 1.96) -> tuple[float, float]:
    """Normal-approximation interval ``p ± z*sqrt(p(1-p)/n)`` clipped to [0, 1]."""
    if n <= 0:
        return (math.nan, math.nan)
    half = z * math.sqrt(p * (1.0 - p) / n)
    return (max(0.0, p - half), min(1.0, p + half))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    predictions: list  # None marks a failed repetition
    truths: list
    groups: list[str | None]
    wall_time: float = 0.0
    axis: str | None = None
    value: str | None = None

    @property
    def repetitions(self) -> int:
        return len(self.truths)

    @property
    def failed(self) -> int:
        return sum(p is None for p in self.predictions)

    @property
    def correct(self) -> int:
        return sum(p is not None and p == t for p, t in zip(self.predictions, self.truths))

    @property
    def incorrect(self) -> int:
        return self.repetitions - self.correct - self.failed

    @property
    def accuracy(self) -> float:
        valid = self.repetitions - self.failed
        return self.correct / valid if valid else math.nan

    @property
    def ci(self) -> tuple[float, float]:
        return binomial_ci(self.accuracy, self.repetitions - self.failed)

    @property
    def failure_rate(self) -> float:
        return self.failed / self.repetitions if self.repetitions else 0.0

    @property
    def digest(self) -> str:
        return self.config.digest

    def group_accuracy(self) -> dict[str, tuple[float, int]]:
        """Accuracy and valid count per group, in first-seen order."""
        out: dict[str, list[int]] = {}
        for p, t, g in zip(self.predictions, self.truths, self.groups):
            if g is None:
                continue
            c = out.setdefault(g, [0, 0])
            if p is not None:
                c[0] += p == t
                c[1] += 1
        return {g: (c / n if n else math.nan, n) for g, (c, n) in out.items()}

    def to_json(self, include_timing: bool = False) -> str:
        doc = {
            "format": "propleak-result/1",
            "config": self.config.to_text(),
            "axis": self.axis,
            "value": self.value,
            "predictions": self.predictions,
            "truths": self.truths,
            "groups": self.groups,
        }
        if include_timing:
            doc["wall_time"] = self.wall_time
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentResult":
        doc = json.loads(text)
        if doc.get("format") != "propleak-result/1":
            raise ValueError("not a result file")
        cfg = ExperimentConfig.from_text(doc["config"])
        return cls(cfg, doc["predictions"], doc["truths"], doc["groups"], doc.get("wall_time", 0.0), doc.get("axis"), doc.get("value"))

    def save(self, path: str | Path, include_timing: bool = False) -> None:
        Path(path).write_text(self.to_json(include_timing), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentResult":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------

TargetHook = Callable[[int, M.TrainedModel, Any], None]


def _shadow_config(cfg: ExperimentConfig, setting: Setting, include_adv: bool, shadow_size: int | None = None) -> atk.ShadowConfig:
    size = shadow_size or cfg["attack.shadow_size"]
    if cfg.family in (FINE_GRAINED, MODEL_UPDATE):
        return atk.ShadowConfig.fine_grained(setting.attribute, setting.value, cfg["attack.ratios"], n_shadow=cfg["attack.n_shadow"],
                                             shadow_size=size, include_adv_data=include_adv)
    return atk.ShadowConfig.binary(setting.attribute, setting.value, cfg["attack.split"], n_shadow=cfg["attack.n_shadow"],
                                   shadow_size=size, include_adv_data=include_adv)


def _train_attacker(cfg: ExperimentConfig, setting: Setting, seed: int, shadow_size: int | None = None) -> atk.MetaClassifier:
    include_adv = cfg.family != SINGLE_PARTY
    scfg = _shadow_config(cfg, setting, include_adv, shadow_size)
    sets = atk.generate_shadow_datasets(setting.aux, scfg, seed, setting.node_types)
    sets = [(setting.strip(s), label) for s, label in sets]
    adv = setting.adv if include_adv else None
    if cfg.family == WHITE_BOX:
        trained = atk.train_shadow_models(sets, adv, setting.recipe, seed)
        pairs = [(atk.AttackVector.from_params(m), label) for m, label in trained]
    else:
        pairs = atk.train_shadow_ensemble(sets, adv, setting.recipe, setting.attack, seed)
    return atk.train_meta(pairs, cfg["attack.meta"], seed, components=cfg["attack.meta_components"])


def _target_vectors(cfg: ExperimentConfig, setting: Setting, targets: Sequence[M.TrainedModel | None]) -> list:
    ok = [m for m in targets if m is not None]
    if cfg.family == WHITE_BOX:
        vecs = [atk.AttackVector.from_params(m) for m in ok]
    else:
        vecs = setting.recipe.attack_vectors(ok, setting.attack) if ok else []
    it = iter(vecs)
    return [next(it) if m is not None else None for m in targets]


def _run_property(cfg: ExperimentConfig, setting: Setting, hook: TargetHook | None):
    meta = _train_attacker(cfg, setting, cfg.seed)
    classes = meta.classes
    truths = [classes[i % len(classes)] for i in range(cfg.repetitions)]
    adv = setting.adv if cfg.family != SINGLE_PARTY else None
    train_sets = [setting.combine(setting.honest(t, i, 0), adv) for i, t in enumerate(truths)]
    targets = setting.recipe.train(train_sets, [atk.derive_seed(cfg.seed, _TARGET, i) for i in range(len(truths))])
    if hook:
        for i, m in enumerate(targets):
            if m is not None:
                hook(i, m, truths[i])
    vectors = _target_vectors(cfg, setting, targets)
    preds = [None if v is None else meta.predict([v])[0] for v in vectors]
    groups = [_fmt_value(t) for t in truths] if cfg.family == FINE_GRAINED else [None] * len(truths)
    return preds, truths, groups


def _run_model_update(cfg: ExperimentConfig, setting: Setting, hook: TargetHook | None):
    meta = _train_attacker(cfg, setting, cfg.seed)
    grown = cfg["attack.shadow_size"] + cfg["data.honest_size"]
    meta_updated = _train_attacker(cfg, setting, atk.derive_seed(cfg.seed, 1), shadow_size=grown)
    combos = list(itertools.product(cfg["update.honest1"], cfg["update.honest2"]))
    reps = cfg.repetitions
    plan = [(r1, r2, j * reps + i) for j, (r1, r2) in enumerate(combos) for i in range(reps)]
    before_sets, after_sets = [], []
    for r1, r2, rep in plan:
        h1 = setting.honest(r1, rep, 0)
        h2 = setting.honest(r2, rep, 1)
        before_sets.append(setting.combine(h1, setting.adv))
        after_sets.append(setting.combine(h1, h2, setting.adv))
    seeds = [atk.derive_seed(cfg.seed, _TARGET, rep) for _, _, rep in plan]
    before = setting.recipe.train(before_sets, seeds)
    after = setting.recipe.train(after_sets, [atk.derive_seed(s, 1) for s in seeds])
    vb = _target_vectors(cfg, setting, before)
    va = _target_vectors(cfg, setting, after)
    preds, truths, groups = [], [], []
    for (r1, r2, rep), fb, fa in zip(plan, vb, va):
        same = atk.dominant_side(r1) == atk.dominant_side(r2)
        truths.append(atk.SAME if same else atk.FLIPPED)
        groups.append(f"{_fmt_value(r1)}/{_fmt_value(r2)}")
        preds.append(None if fb is None or fa is None else atk.model_update_attack(meta, fb, fa, meta_updated))
        if hook and after[len(preds) - 1] is not None:
            hook(rep, after[len(preds) - 1], truths[-1])
    return preds, truths, groups


def run_experiment(cfg: ExperimentConfig, on_target: TargetHook | None = None) -> ExperimentResult:
    """Train the attacker once, then one fresh target per repetition.

    Binary families alternate the honest split between the two property
    classes; the fine-grained family cycles through the ratio classes.
    ``on_target`` sees every trained target model.
    """
    start = time.perf_counter()
    setting = build_setting(cfg)
    try:
        if cfg.family == MODEL_UPDATE:
            preds, truths, groups = _run_model_update(cfg, setting, on_target)
        else:
            preds, truths, groups = _run_property(cfg, setting, on_target)
    except atk.AttackError as exc:
        raise RunFailure(str(exc)) from exc
    result = ExperimentResult(cfg, preds, truths, groups, time.perf_counter() - start)
    log.info("%s %s: accuracy %.3f over %d repetitions (%d failed) in %.1f s", cfg.family, cfg.digest,
             result.accuracy, result.repetitions, result.failed, result.wall_time)
    return result


def check_failures(result: ExperimentResult) -> None:
    if result.failure_rate > result.config["max_failure_rate"]:
        raise RunFailure(f"{result.failed} of {result.repetitions} repetitions failed")


def sweep_configs(base: ExperimentConfig, axis: str, values: Sequence) -> list[ExperimentConfig]:
    """One config per value, the master seed offset by the value's index."""
    if axis not in AXES:
        raise ConfigError([f"unknown axis {axis!r}; expected one of {', '.join(AXES)}"])
    key = AXES[axis]
    if key not in dict(base.values):
        raise ConfigError([f"axis {axis!r} does not apply to a {base.source} source"])
    if not values:
        raise ConfigError(["a sweep needs at least one value"])
    return [base.with_value(key, v).with_value("seed", base.seed + i) for i, v in enumerate(values)]


def run_sweep(base: ExperimentConfig, axis: str, values: Sequence) -> list[ExperimentResult]:
    configs = sweep_configs(base, axis, values)
    results = []
    for cfg in configs:
        r = run_experiment(cfg)
        r.axis, r.value = axis, _fmt_value(cfg[AXES[axis]])
        results.append(r)
    return results


def attack_remote(cfg: ExperimentConfig, endpoint, timeout: float = 10.0) -> tuple[Any, float]:
    """Train the attacker described by ``cfg`` and attack a served model."""
    from .server import remote_query_fn

    if cfg.family in (WHITE_BOX, MODEL_UPDATE):
        raise ConfigError([f"family {cfg.family!r} cannot attack through a query interface alone"])
    setting = build_setting(cfg)
    try:
        meta = _train_attacker(cfg, setting, cfg.seed)
    except atk.AttackError as exc:
        raise RunFailure(str(exc)) from exc
    vector = atk.build_attack_vector(remote_query_fn(endpoint, timeout), setting.recipe.probe(setting.attack))
    return atk.run_attack(meta, vector)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

CSV_FIELDS = ["digest", "family", "data", "target", "mode", "axis", "value", "accuracy", "ci_low", "ci_high",
              "correct", "incorrect", "failed", "repetitions", "groups"]


def _data_label(cfg: ExperimentConfig) -> str:
    if cfg.source == "synthetic":
        return cfg["data.scenario"] + (" R" if cfg["data.reduced_mode"] else "")
    if cfg.source == "csv":
        return Path(cfg["data.path"]).stem
    return f"graph {cfg['data.n_classes']}-class"


def _f(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.4f}"


def _row(r: ExperimentResult, include_timing: bool) -> dict[str, str]:
    cfg = r.config
    lo, hi = r.ci
    groups = ";".join(f"{g}={_f(a)}" for g, (a, _) in r.group_accuracy().items())
    row = {
        "digest": r.digest,
        "family": cfg.family,
        "data": _data_label(cfg),
        "target": cfg["target.arch"],
        "mode": "A" if cfg["data.with_A"] else "A-bar",
        "axis": r.axis or "",
        "value": r.value or "",
        "accuracy": _f(r.accuracy),
        "ci_low": _f(lo),
        "ci_high": _f(hi),
        "correct": str(r.correct),
        "incorrect": str(r.incorrect),
        "failed": str(r.failed),
        "repetitions": str(r.repetitions),
        "groups": groups,
    }
    if include_timing:
        row["wall_time"] = f"{r.wall_time:.2f}"
    return row


def report_csv(results: Sequence[ExperimentResult], include_timing: bool = False) -> str:
    fields = CSV_FIELDS + (["wall_time"] if include_timing else [])
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in results:
        writer.writerow(_row(r, include_timing))
    return buf.getvalue()


def report_text(results: Sequence[ExperimentResult], include_timing: bool = False) -> str:
    header = ["family", "data", "target", "mode", "axis", "accuracy", "95% CI", "n"]
    if include_timing:
        header.append("seconds")
    rows = []
    extra: list[list[str]] = []
    for r in results:
        row = _row(r, include_timing)
        cells = [row["family"], row["data"], row["target"], row["mode"],
                 f"{r.axis}={r.value}" if r.axis else "-", row["accuracy"],
                 f"[{row['ci_low']}, {row['ci_high']}]", str(r.repetitions - r.failed)]
        if include_timing:
            cells.append(row["wall_time"])
        rows.append(cells)
        extra.append([f"  {g}: {_f(a)} ({n})" for g, (a, n) in r.group_accuracy().items()])
    widths = [max(len(h), *(len(c[i]) for c in rows)) for i, h in enumerate(header)]
    line = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    out = [line(header), line(["-" * w for w in widths])]
    for cells, groups in zip(rows, extra):
        out.append(line(cells))
        out.extend(groups)
    return "\n".join(out) + "\n"


def emit_report(results: Sequence[ExperimentResult], out_dir: str | Path, stem: str = "report",
                include_timing: bool = False) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and ``<stem>.txt``.  Without timing the files
    depend only on the results' configs and predictions."""
    if not results:
        raise ValueError("emit_report needs at least one result")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, txt_path = out / f"{stem}.csv", out / f"{stem}.txt"
    csv_path.write_text(report_csv(results, include_timing), encoding="utf-8")
    txt_path.write_text(report_text(results, include_timing), encoding="utf-8")
    return csv_path, txt_path
