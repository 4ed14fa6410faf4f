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

"""Versioned binary checkpoint container.

Layout: magic b"PLNK", format version (uint16 LE), header length (uint32
LE), utf-8 JSON header with sorted keys, then every table as little-endian
float64 values in the order the header lists them."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from struct import pack, unpack
from typing import Any, Dict, Iterator, Optional, Tuple, Union

import numpy as np
import torch
from torch import nn
from upath import UPath

from provlink.config import TrainConfig
from provlink.exceptions import CheckpointError, ConfigError
from provlink.file import open_file
from provlink.gnn import LayerStack, MessageGraph, forward_all
from provlink.graph import KnowledgeGraph, Triple, Vocabulary
from provlink.parameters import as_tensor
from provlink.scoring import (
    EmbeddingModel,
    ScoreFnSpec,
    TransEScore,
    create_score_function,
)

logger = logging.getLogger(__name__)

MAGIC = b"PLNK"
FORMAT_VERSION = 1
STAGES = ("text", "graph")

MODEL_PREFIX = "model."
OPTIMIZER_PREFIX = "optimizer."
FEATURES = "features"
TAIL_FEATURES = "tail_features"
TRIPLES = "graph.triples"


@dataclass
class Checkpoint:
    """Snapshot of a training stage: config, vocabulary, named float64
    tables and the state of the random generator. Best epoch is set when
    early stopping restored the parameters of an earlier epoch; such a
    checkpoint is final and can not be resumed."""

    stage: str
    epoch: int
    config: TrainConfig
    vocabulary: Vocabulary
    tables: Dict[str, np.ndarray] = field(default_factory=dict)
    rng_state: Dict[str, Any] = field(default_factory=dict)
    best_epoch: Optional[int] = None

    def __post_init__(self):
        if self.stage not in STAGES:
            raise CheckpointError(f"Unknown checkpoint stage {self.stage}.")

    def __repr__(self) -> str:
        return (
            f"{type(self).__name__}(stage={self.stage!r}, epoch={self.epoch}, "
            f"{len(self.tables)} tables)"
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Checkpoint):
            return NotImplemented
        return self.to_bytes() == other.to_bytes()

    @property
    def triples(self) -> np.ndarray:
        """Message passing (training) triples as int64 array."""
        return self.table(TRIPLES).astype(np.int64)

    @property
    def features(self) -> np.ndarray:
        """Entity input features, shape (n_entities, d). Head role features
        if the text stage used separate head and tail maps."""
        return self.table(FEATURES)

    @property
    def tail_features(self) -> Optional[np.ndarray]:
        """Tail role features of separate head and tail maps, else None."""
        return self.tables.get(TAIL_FEATURES)

    def table(self, name: str) -> np.ndarray:
        try:
            return self.tables[name]
        except KeyError:
            raise CheckpointError(f"Checkpoint has no table {name}.")

    def graph(self) -> KnowledgeGraph:
        """Return the graph of the training triples."""
        return KnowledgeGraph(
            self.vocabulary, [Triple(*map(int, row)) for row in self.triples]
        )

    def prefixed(self, prefix: str) -> Iterator[Tuple[str, np.ndarray]]:
        """Iterate tables with name starting with prefix, prefix stripped."""
        for name, values in self.tables.items():
            if name.startswith(prefix):
                yield name[len(prefix) :], values

    def score_function(self):
        if self.stage == "text":
            return TransEScore(self.config.stage1.p_norm)
        return create_score_function(
            ScoreFnSpec(self.config.stage2.score, self.config.stage2.p_norm)
        )

    def build_stack(self) -> Optional[LayerStack]:
        """Return graph layer stack with checkpoint parameters, or None if
        the checkpoint has no stack."""
        stage2 = self.config.stage2
        if self.stage != "graph" or stage2.gnn == "none":
            return None
        stack = LayerStack(
            stage2.gnn,
            stage2.depth,
            self.config.dim,
            len(self.vocabulary.relations),
            np.random.default_rng(0),
            stage2.heads,
            stage2.leaky_slope,
        )
        values = {
            name: as_tensor(table)
            for name, table in self.prefixed(MODEL_PREFIX + "stack.")
        }
        try:
            stack.load_state_dict(values)
        except RuntimeError as exception:
            raise CheckpointError(
                f"Stack tables do not match config: {exception}"
            ) from exception
        return stack

    def embedding_model(self, which: str = "final") -> EmbeddingModel:
        """Return tables for scoring.

        Parameters
        ----------
        which: str = "final"
            "text" for the input features, "final" for features combined with
            the graph layer output.
        """
        if which not in ("text", "final"):
            raise ValueError(f"Unknown embedding kind {which}.")
        tail_features = self.tail_features
        entities = self._entity_table(self.features, which)
        tails = None
        if tail_features is not None:
            tails = self._entity_table(tail_features, which)
        return EmbeddingModel(
            entities,
            as_tensor(self.table(MODEL_PREFIX + "relations.forward_vectors")),
            as_tensor(self.table(MODEL_PREFIX + "relations.inverse_vectors")),
            self.score_function(),
            tails,
        )

    def _entity_table(self, features: np.ndarray, which: str) -> torch.Tensor:
        table = as_tensor(features)
        if which == "text":
            return table
        with torch.no_grad():
            table = forward_all(self.build_stack(), table, MessageGraph(self.graph()))
        normalize = (
            self.config.stage1.normalize_entities
            if self.stage == "text"
            else self.config.stage2.normalize_entities
        )
        if normalize:
            table = nn.functional.normalize(table, dim=-1)
        return table

    def _header(self) -> Dict[str, Any]:
        return {
            "stage": self.stage,
            "epoch": self.epoch,
            "best_epoch": self.best_epoch,
            "config": self.config.to_dict(),
            "entities": self.vocabulary.entities.names,
            "relations": self.vocabulary.relations.names,
            "rng_state": self.rng_state,
            "tables": [
                {"name": name, "shape": list(values.shape)}
                for name, values in self.tables.items()
            ],
        }

    def to_bytes(self) -> bytes:
        header = json.dumps(
            self._header(), sort_keys=True, separators=(",", ":")
        ).encode("utf-8")
        parts = [MAGIC, pack("<HI", FORMAT_VERSION, len(header)), header]
        for values in self.tables.values():
            parts.append(np.ascontiguousarray(values, dtype="<f8").tobytes())
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes, source: str = "<bytes>") -> "Checkpoint":
        if data[:4] != MAGIC:
            raise CheckpointError(f"{source} is not a checkpoint file.")
        try:
            version, header_length = unpack("<HI", data[4:10])
        except Exception as exception:
            raise CheckpointError(f"{source} has a truncated header.") from exception
        if version != FORMAT_VERSION:
            raise CheckpointError(
                f"{source} has unsupported format version {version}."
            )
        try:
            header = json.loads(data[10 : 10 + header_length].decode("utf-8"))
            config = TrainConfig.from_dict(header["config"])
            vocabulary = Vocabulary.from_names(header["entities"], header["relations"])
            entries = [
                (item["name"], tuple(item["shape"])) for item in header["tables"]
            ]
            stage, epoch, rng_state = (
                header["stage"],
                header["epoch"],
                header["rng_state"],
            )
            best_epoch = header.get("best_epoch")
        except (UnicodeDecodeError, json.JSONDecodeError, KeyError) as exception:
            raise CheckpointError(f"{source} has a corrupt header.") from exception
        except ConfigError as exception:
            raise CheckpointError(
                f"{source} has an invalid config: {exception}"
            ) from exception
        tables: Dict[str, np.ndarray] = {}
        offset = 10 + header_length
        for name, shape in entries:
            count = int(np.prod(shape, dtype=np.int64))
            end = offset + 8 * count
            if end > len(data):
                raise CheckpointError(f"{source} is truncated in table {name}.")
            values = np.frombuffer(data[offset:end], dtype="<f8").astype(np.float64)
            tables[name] = values.reshape(shape)
            offset = end
        if offset != len(data):
            raise CheckpointError(f"{source} has trailing data.")
        return cls(stage, epoch, config, vocabulary, tables, rng_state, best_epoch)

    def save(self, path: Union[str, Path, UPath]) -> None:
        with open_file(path, "wb") as file:
            file.write(self.to_bytes())
        logger.info(f"Saved {self.stage} checkpoint at epoch {self.epoch} to {path}")

    @classmethod
    def load(cls, path: Union[str, Path, UPath]) -> "Checkpoint":
        try:
            with open_file(path, "rb") as file:
                data = file.read()
        except FileNotFoundError as exception:
            raise CheckpointError(f"Checkpoint {path} not found.") from exception
        return cls.from_bytes(data, str(path))
