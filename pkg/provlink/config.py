#    Copyright 2025 provlink developers
#
#    Licensed under the Apache License, Version 2.0 (the "License");
#    you may not use this file except in compliance with the License.
#    You may obtain a copy of the License at
#
#        http://www.apache.org/licenses/LICENSE-2.0
#
#    Unless required by applicable law or agreed to in writing, software
#    distributed under the License is distributed on an "AS IS" BASIS,
#    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#    See the License for the specific language governing permissions and
#    limitations under the License.

"""General settings and training configuration."""

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import (
    Any,
    Dict,
    Optional,
    Tuple,
    Type,
    TypeVar,
    Union,
    get_args,
    get_origin,
    get_type_hints,
)

from upath import UPath

from provlink.exceptions import ConfigError
from provlink.file import open_file


class Settings:
    """Class containing settings. Settings are to be accessed through the
    global variable settings."""

    def __init__(self) -> None:
        self._progress = False
        self._negative_attempts_factor = 100
        self._log_level = "INFO"

    @property
    def progress(self) -> bool:
        """If to show progress bars during training."""
        return self._progress

    @progress.setter
    def progress(self, value: bool) -> None:
        self._progress = value

    @property
    def negative_attempts_factor(self) -> int:
        """Number of resampling attempts per entity in vocabulary before
        negative sampling gives up."""
        return self._negative_attempts_factor

    @negative_attempts_factor.setter
    def negative_attempts_factor(self, value: int) -> None:
        self._negative_attempts_factor = value

    @property
    def log_level(self) -> str:
        """Log level used by the command line."""
        return self._log_level

    @log_level.setter
    def log_level(self, value: str) -> None:
        self._log_level = value


settings = Settings()
"""Global settings variable."""


ConfigType = TypeVar("ConfigType")

ENCODER_VARIANTS = ("hashed-ngram", "precomputed-file")
SCORE_VARIANTS = ("transe", "distmult", "simple", "simple-canonical")
GNN_VARIANTS = ("gat", "rgcn", "none")
NEGATIVE_MODES = ("head", "tail", "both")


def _matches(annotation: Any, value: Any) -> bool:
    """Return if value is an instance of a config field annotation."""
    origin = get_origin(annotation)
    if origin is Union:
        return any(_matches(option, value) for option in get_args(annotation))
    if origin is tuple:
        items = get_args(annotation)
        return (
            isinstance(value, tuple)
            and len(value) == len(items)
            and all(_matches(item, element) for item, element in zip(items, value))
        )
    if annotation is type(None):
        return value is None
    if annotation is bool:
        return isinstance(value, bool)
    if annotation is int:
        return isinstance(value, int) and not isinstance(value, bool)
    if annotation is float:
        # Json writes whole floats as integers.
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    return isinstance(value, annotation)


def _from_dict(cls: Type[ConfigType], values: Dict[str, Any]) -> ConfigType:
    if not isinstance(values, dict):
        raise ConfigError(f"Expected an object for {cls.__name__}, got {values!r}.")
    known = {item.name: item for item in dataclasses.fields(cls)}  # type: ignore
    unknown = set(values) - set(known)
    if unknown:
        raise ConfigError(
            f"Unknown keys for {cls.__name__}: {', '.join(sorted(unknown))}."
        )
    annotations = get_type_hints(cls)
    kwargs = {}
    for name, value in values.items():
        # Json has no tuples.
        if isinstance(value, list):
            value = tuple(value)
        if not _matches(annotations[name], value):
            raise ConfigError(f"Invalid type for {cls.__name__}.{name}: {value!r}.")
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as exception:
        raise ConfigError(str(exception)) from exception


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


@dataclass
class EncoderConfig:
    """Text encoder used in place of a pretrained language model."""

    variant: str = "hashed-ngram"
    raw_dim: int = 4096
    ngram_range: Tuple[int, int] = (1, 3)
    hash_seed: int = 0
    file_path: Optional[str] = None

    def validate(self, dim: int) -> None:
        _require(
            self.variant in ENCODER_VARIANTS,
            f"Unknown encoder variant {self.variant}.",
        )
        _require(
            self.raw_dim >= dim,
            f"Encoder raw_dim {self.raw_dim} is smaller than dim {dim}.",
        )
        low, high = self.ngram_range
        _require(1 <= low <= high, f"Invalid ngram_range {self.ngram_range}.")
        _require(
            self.variant != "precomputed-file" or self.file_path is not None,
            "Precomputed encoder requires file_path.",
        )


@dataclass
class OptimizerConfig:
    name: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def validate(self) -> None:
        _require(self.name in ("adam", "sgd"), f"Unknown optimizer {self.name}.")
        _require(0 <= self.beta1 < 1 and 0 <= self.beta2 < 1, "Invalid Adam betas.")
        _require(self.eps > 0, "Adam eps must be positive.")


@dataclass
class Stage1Config:
    """Text representation learning (lr 5e-5, warm-up 0.1, batch 64, 6 epochs,
    400 dims by default)."""

    lr: float = 5e-5
    epochs: int = 6
    batch_size: int = 64
    margin: float = 1.0
    negatives_per_positive: int = 1
    negative_mode: str = "both"
    dim: int = 400
    warmup_fraction: float = 0.1
    p_norm: int = 2
    separate_head_tail: bool = False
    normalize_entities: bool = False

    def validate(self) -> None:
        _require(self.lr > 0, "Stage 1 lr must be positive.")
        _require(self.epochs >= 0, "Stage 1 epochs must not be negative.")
        _require(self.batch_size >= 1, "Stage 1 batch_size must be positive.")
        _require(self.margin > 0, "Stage 1 margin must be positive.")
        _require(self.negatives_per_positive >= 1, "Need at least one negative.")
        _require(
            self.negative_mode in NEGATIVE_MODES,
            f"Unknown negative mode {self.negative_mode}.",
        )
        _require(self.dim >= 1, "Dimension must be positive.")
        _require(0 <= self.warmup_fraction <= 1, "warmup_fraction must be in [0, 1].")
        _require(self.p_norm in (1, 2), "p_norm must be 1 or 2.")


@dataclass
class Stage2Config:
    """Graph reasoning (lr 0.01, 4000 epochs, TransE score by default)."""

    lr: float = 0.01
    epochs: int = 4000
    score: str = "transe"
    p_norm: int = 2
    gnn: str = "gat"
    depth: int = 2
    heads: int = 1
    leaky_slope: float = 0.2
    freeze_text: bool = True
    features: str = "text"
    init: str = "xavier"
    margin: float = 1.0
    negatives_per_positive: int = 1
    negative_mode: str = "both"
    normalize_entities: bool = False
    early_stopping: bool = False
    eval_every: int = 50
    patience: int = 10
    supervision_fraction: float = 0.0

    def validate(self) -> None:
        _require(self.lr > 0, "Stage 2 lr must be positive.")
        _require(self.epochs >= 0, "Stage 2 epochs must not be negative.")
        _require(self.score in SCORE_VARIANTS, f"Unknown score {self.score}.")
        _require(self.p_norm in (1, 2), "p_norm must be 1 or 2.")
        _require(self.gnn in GNN_VARIANTS, f"Unknown gnn {self.gnn}.")
        _require(1 <= self.depth <= 4, "depth must be in 1..4.")
        _require(self.heads >= 1, "heads must be positive.")
        _require(
            self.features in ("text", "random"), f"Unknown features {self.features}."
        )
        _require(
            self.init in ("xavier", "zero", "residual"), f"Unknown init {self.init}."
        )
        _require(self.margin > 0, "Stage 2 margin must be positive.")
        _require(self.negatives_per_positive >= 1, "Need at least one negative.")
        _require(
            self.negative_mode in NEGATIVE_MODES,
            f"Unknown negative mode {self.negative_mode}.",
        )
        _require(self.eval_every >= 1, "eval_every must be positive.")
        _require(self.patience >= 1, "patience must be positive.")
        _require(
            0 <= self.supervision_fraction < 1,
            "supervision_fraction must be in [0, 1).",
        )


@dataclass
class TrainConfig:
    """All hyperparameters of a two stage training run."""

    seed: int = 0
    target_relation: str = "base_entry_is"
    split_ratios: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    stage1: Stage1Config = field(default_factory=Stage1Config)
    stage2: Stage2Config = field(default_factory=Stage2Config)

    @property
    def dim(self) -> int:
        """Entity and relation dimension shared by both stages."""
        return self.stage1.dim

    def validate(self) -> "TrainConfig":
        """Validate all values, raising ConfigError on the first invalid
        value. Returns self."""
        _require(
            len(self.split_ratios) == 3 and all(r > 0 for r in self.split_ratios),
            "split_ratios must be three positive values.",
        )
        _require(
            math.isclose(sum(self.split_ratios), 1.0, rel_tol=0, abs_tol=1e-9),
            "split_ratios must sum to 1.",
        )
        self.encoder.validate(self.dim)
        self.optimizer.validate()
        self.stage1.validate()
        self.stage2.validate()
        _require(
            self.stage2.score != "simple-canonical" or self.dim % 2 == 0,
            "Canonical SimplE needs an even dimension.",
        )
        return self

    def to_dict(self) -> Dict[str, Any]:
        values = dataclasses.asdict(self)
        values["split_ratios"] = list(self.split_ratios)
        values["encoder"]["ngram_range"] = list(self.encoder.ngram_range)
        return values

    def replace(self, **changes: Any) -> "TrainConfig":
        """Return copy with nested changes given as 'stage2.gnn'='rgcn' style
        keys (dots replaced by double underscores)."""
        values = self.to_dict()
        for key, value in changes.items():
            if value is None:
                continue
            target = values
            *parents, name = key.split("__")
            for parent in parents:
                target = target[parent]
            if name not in target:
                raise ConfigError(f"Unknown config key {key}.")
            target[name] = value
        return TrainConfig.from_dict(values)

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "TrainConfig":
        values = dict(values)
        nested = {
            "encoder": EncoderConfig,
            "optimizer": OptimizerConfig,
            "stage1": Stage1Config,
            "stage2": Stage2Config,
        }
        for name, config_type in nested.items():
            if name in values:
                values[name] = _from_dict(config_type, values[name])
        config = _from_dict(cls, values)
        return config.validate()

    @classmethod
    def load(cls, path: Union[str, Path, UPath]) -> "TrainConfig":
        """Load configuration from json file."""
        try:
            with open_file(path, "r") as file:
                values = json.load(file)
        except FileNotFoundError as exception:
            raise ConfigError(f"Config file {path} not found.") from exception
        except json.JSONDecodeError as exception:
            raise ConfigError(f"Config file {path} is not valid json.") from exception
        return cls.from_dict(values)

    def save(self, path: Union[str, Path, UPath]) -> None:
        with open_file(path, "w") as file:
            json.dump(self.to_dict(), file, indent=2, sort_keys=True)
