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

"""Seeded train/dev/test split of a knowledge graph."""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
from upath import UPath

from provlink.exceptions import ConfigError, DataError, VocabularyError
from provlink.file import open_file
from provlink.graph.knowledge_graph import KnowledgeGraph
from provlink.graph.triples import Triple

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetSplit:
    """Partition of the triples of a graph. Indices refer to positions in
    the triple list of the split graph."""

    train: Tuple[Triple, ...]
    dev: Tuple[Triple, ...]
    test: Tuple[Triple, ...]
    target_test: Tuple[Triple, ...]
    train_indices: Tuple[int, ...]
    dev_indices: Tuple[int, ...]
    test_indices: Tuple[int, ...]
    target_relation: int
    seed: int
    ratios: Tuple[float, float, float]

    def queries(self, name: str) -> Tuple[Triple, ...]:
        """Return triples of named part (train, dev, test or target_test)."""
        if name not in ("train", "dev", "test", "target_test"):
            raise ValueError(f"Unknown split part {name}.")
        return getattr(self, name)

    def to_manifest(self, kg: KnowledgeGraph) -> dict:
        return {
            "seed": self.seed,
            "ratios": list(self.ratios),
            "target_relation": kg.vocabulary.relations.name(self.target_relation),
            "n_triples": len(kg),
            "train": list(self.train_indices),
            "dev": list(self.dev_indices),
            "test": list(self.test_indices),
        }


def _partition_sizes(n: int, ratios: Sequence[float]) -> Tuple[int, int, int]:
    # The small offset keeps products like 0.29 * 100 from rounding down.
    n_train = math.floor(ratios[0] * n + 1e-9)
    n_dev = math.floor(ratios[1] * n + 1e-9)
    return n_train, n_dev, n - n_train - n_dev


def _from_indices(
    kg: KnowledgeGraph,
    train_indices: Sequence[int],
    dev_indices: Sequence[int],
    test_indices: Sequence[int],
    target_relation: int,
    seed: int,
    ratios: Sequence[float],
) -> DatasetSplit:
    triples = kg.triples
    test = tuple(triples[index] for index in test_indices)
    return DatasetSplit(
        train=tuple(triples[index] for index in train_indices),
        dev=tuple(triples[index] for index in dev_indices),
        test=test,
        target_test=tuple(
            triple for triple in test if triple.relation == target_relation
        ),
        train_indices=tuple(int(index) for index in train_indices),
        dev_indices=tuple(int(index) for index in dev_indices),
        test_indices=tuple(int(index) for index in test_indices),
        target_relation=target_relation,
        seed=seed,
        ratios=(float(ratios[0]), float(ratios[1]), float(ratios[2])),
    )


def split_dataset(
    kg: KnowledgeGraph,
    ratios: Sequence[float],
    target_relation: int,
    seed: int,
) -> DatasetSplit:
    """Shuffle triples with seeded generator and partition by ratio. Train
    and dev sizes are rounded down, the remainder goes to test.

    Parameters
    ----------
    kg: KnowledgeGraph
        Graph to split.
    ratios: Sequence[float]
        Train, dev and test ratios, positive and summing to 1.
    target_relation: int
        Relation kept in the target test set.
    seed: int
        Seed for the shuffle.

    Returns
    ----------
    DatasetSplit
        The split.
    """
    if len(ratios) != 3 or any(ratio <= 0 for ratio in ratios):
        raise ConfigError(f"Ratios must be three positive values, got {ratios}.")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"Ratios must sum to 1, got {sum(ratios)}.")
    if not 0 <= target_relation < kg.n_relations:
        raise VocabularyError(f"Target relation {target_relation} not in vocabulary.")
    n_train, n_dev, _ = _partition_sizes(len(kg), ratios)
    order = np.random.default_rng(seed).permutation(len(kg))
    split = _from_indices(
        kg,
        order[:n_train].tolist(),
        order[n_train : n_train + n_dev].tolist(),
        order[n_train + n_dev :].tolist(),
        target_relation,
        seed,
        ratios,
    )
    logger.info(
        f"Split {len(kg)} triples into {len(split.train)} train, "
        f"{len(split.dev)} dev, {len(split.test)} test "
        f"({len(split.target_test)} target test)."
    )
    return split


def write_split_manifest(
    path: Union[str, Path, UPath], split: DatasetSplit, kg: KnowledgeGraph
) -> None:
    with open_file(path, "w") as file:
        json.dump(split.to_manifest(kg), file, indent=1)


def read_split_manifest(
    path: Union[str, Path, UPath], kg: KnowledgeGraph
) -> DatasetSplit:
    """Read split manifest written for the same graph."""
    try:
        with open_file(path, "r") as file:
            manifest = json.load(file)
    except json.JSONDecodeError as exception:
        raise DataError(f"Split manifest {path} is not valid json.") from exception
    try:
        n_triples = manifest["n_triples"]
        parts: List[List[int]] = [manifest[name] for name in ("train", "dev", "test")]
        target_relation = kg.relation_index(manifest["target_relation"])
        seed = int(manifest["seed"])
        ratios = manifest["ratios"]
    except KeyError as exception:
        raise DataError(f"Split manifest {path} misses {exception}.") from exception
    if n_triples != len(kg):
        raise DataError(
            f"Split manifest {path} is for {n_triples} triples, graph has {len(kg)}."
        )
    indices = sorted(index for part in parts for index in part)
    if indices != list(range(len(kg))):
        raise DataError(f"Split manifest {path} does not partition the triples.")
    return _from_indices(kg, *parts, target_relation, seed, ratios)
