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

"""Top-k link prediction and embedding export."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Dict, List, Optional, Tuple, Union

import numpy as np
from upath import UPath

from provlink.evaluation.ranking import KnownTriples
from provlink.exceptions import ConfigError, ParseError
from provlink.file import LineFile, open_file
from provlink.graph import Vocabulary
from provlink.scoring import EmbeddingModel

if TYPE_CHECKING:
    from provlink.training.checkpoint import Checkpoint

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PredictionList:
    """Candidates for the open side of a query, most plausible first."""

    query: str
    relation: str
    direction: str
    k: int
    candidates: Tuple[Tuple[str, float], ...]

    def __len__(self) -> int:
        return len(self.candidates)

    @property
    def names(self) -> List[str]:
        return [name for name, _ in self.candidates]

    def to_dict(self) -> Dict[str, object]:
        return {
            "query": self.query,
            "relation": self.relation,
            "direction": self.direction,
            "k": self.k,
            "candidates": [
                {"entity": name, "score": score} for name, score in self.candidates
            ],
        }

    def to_tsv(self) -> str:
        return "".join(
            f"{self.query}\t{self.relation}\t{name}\t{score!r}\n"
            for name, score in self.candidates
        )


def predict_topk(
    model: EmbeddingModel,
    vocabulary: Vocabulary,
    query: str,
    relation: str,
    direction: str = "tail",
    k: int = 10,
    exclude_known: bool = False,
    known: Optional[KnownTriples] = None,
) -> PredictionList:
    """Score every entity on the open side of a query and return the k most
    plausible, ties in entity index order.

    Parameters
    ----------
    model: EmbeddingModel
        Tables to score with.
    vocabulary: Vocabulary
        Vocabulary of the model.
    query: str
        Name of the known entity.
    relation: str
        Name of the relation.
    direction: str = "tail"
        "tail" to predict tails of (query, relation, ?), "head" to predict
        heads of (?, relation, query).
    k: int = 10
        Maximal number of candidates.
    exclude_known: bool = False
        If to drop candidates forming a known triple.
    known: Optional[KnownTriples] = None
        Known triples, required when exclude_known.

    Returns
    ----------
    PredictionList
        Ranked candidates with scores.
    """
    if k < 1:
        raise ValueError("k must be at least 1.")
    entity = vocabulary.entities.index(query)
    relation_index = vocabulary.relations.index(relation)
    scores = model.candidate_scores(entity, relation_index, direction).numpy()
    keys = scores if model.score_function.lower_is_better else -scores
    order = np.argsort(keys, kind="stable")
    if exclude_known:
        if known is None:
            raise ValueError("Excluding known links requires known triples.")
        excluded = (
            known.tails(entity, relation_index)
            if direction == "tail"
            else known.heads(relation_index, entity)
        )
        order = order[~np.isin(order, excluded)]
    candidates = tuple(
        (vocabulary.entities.name(int(index)), float(scores[index]))
        for index in order[:k]
    )
    return PredictionList(query, relation, direction, k, candidates)


def export_embeddings(
    checkpoint: "Checkpoint",
    which: str,
    path: Union[str, Path, UPath],
) -> int:
    """Write entity embeddings as tsv rows of name and values.

    Parameters
    ----------
    checkpoint: Checkpoint
        Checkpoint to export from.
    which: str
        "text" for input features, "final" for features combined with the
        graph layer output.
    path: Union[str, Path, UPath]
        File to write.

    Returns
    ----------
    int
        Number of rows written.
    """
    model = checkpoint.embedding_model(which)
    if model.tail_entities is not None:
        raise ConfigError(
            "Checkpoint has separate head and tail embeddings, one row per entity "
            "can not be exported."
        )
    table = model.entities.numpy()
    names = checkpoint.vocabulary.entities.names
    with open_file(path, "w") as file:
        for name, row in zip(names, table):
            values = "\t".join(repr(float(value)) for value in row)
            file.write(f"{name}\t{values}\n")
    logger.info(f"Exported {len(names)} {which} embeddings to {path}")
    return len(names)


def load_embeddings(path: Union[str, Path, UPath]) -> Tuple[List[str], np.ndarray]:
    """Read embeddings written by export_embeddings.

    Returns
    ----------
    Tuple[List[str], np.ndarray]
        Entity names and table of shape (n, d).
    """
    names: List[str] = []
    rows: List[List[float]] = []
    width: Optional[int] = None
    with LineFile(path) as file:
        for line_number, line in file.lines():
            if line == "":
                continue
            name, *fields = line.split("\t")
            if width is None:
                width = len(fields)
            if len(fields) != width or width == 0:
                raise ParseError(path, line_number, f"expected {width} values")
            try:
                rows.append([float(value) for value in fields])
            except ValueError:
                raise ParseError(path, line_number, "non-numeric value")
            names.append(name)
    table = np.array(rows, dtype=np.float64).reshape(len(rows), width or 0)
    return names, table
