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

"""Triple score functions, relation embeddings, negative sampling and the
margin ranking loss."""

from abc import ABCMeta, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Type

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from provlink.config import settings
from provlink.exceptions import NegativeSamplingError, VocabularyError
from provlink.graph.knowledge_graph import KnowledgeGraph
from provlink.graph.triples import Triple, triples_to_array
from provlink.parameters import parameter, translational_uniform


class Polarity(Enum):
    LOWER_BETTER = "lower-better"
    HIGHER_BETTER = "higher-better"


def score_transe(
    head: torch.Tensor, relation: torch.Tensor, tail: torch.Tensor, p: int = 2
) -> torch.Tensor:
    """Return ||h + r - t||_p over the last dimension. Lower is better."""
    return torch.linalg.vector_norm(head + relation - tail, ord=p, dim=-1)


def score_distmult(
    head: torch.Tensor, relation: torch.Tensor, tail: torch.Tensor
) -> torch.Tensor:
    """Return sum_k h_k r_k t_k. Higher is better."""
    # h * t first, so swapping head and tail gives bitwise equal scores.
    return (head * tail * relation).sum(dim=-1)


def score_simple(
    head: torch.Tensor,
    relation: torch.Tensor,
    inverse: torch.Tensor,
    tail: torch.Tensor,
) -> torch.Tensor:
    """Return (sum h r t + sum h r_inv t) / 2. Higher is better."""
    return 0.5 * (
        score_distmult(head, relation, tail) + score_distmult(head, inverse, tail)
    )


def score_simple_canonical(
    head: torch.Tensor,
    relation: torch.Tensor,
    inverse: torch.Tensor,
    tail: torch.Tensor,
) -> torch.Tensor:
    """Return SimplE with role vectors. The first half of an entity vector is
    its head role, the second half its tail role, and relations use their
    first half:
    (sum h_head r t_tail + sum t_head r_inv h_tail) / 2. Higher is better."""
    k = head.shape[-1] // 2
    if head.shape[-1] != 2 * k:
        raise ValueError("Canonical SimplE needs an even dimension.")
    return 0.5 * (
        score_distmult(head[..., :k], relation[..., :k], tail[..., k:])
        + score_distmult(tail[..., :k], inverse[..., :k], head[..., k:])
    )


@dataclass(frozen=True)
class ScoreFnSpec:
    variant: str = "transe"
    p_norm: int = 2

    def __post_init__(self):
        if self.p_norm not in (1, 2):
            raise ValueError(f"p_norm must be 1 or 2, got {self.p_norm}.")


class ScoreFunction(metaclass=ABCMeta):
    """Scores batches of (head, relation, tail) embeddings."""

    polarity: Polarity

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"

    @abstractmethod
    def __call__(
        self,
        heads: torch.Tensor,
        relations: torch.Tensor,
        inverses: torch.Tensor,
        tails: torch.Tensor,
    ) -> torch.Tensor:
        """Should return scores over the last dimension.

        Parameters
        ----------
        heads: torch.Tensor
            Head embeddings.
        relations: torch.Tensor
            Forward relation embeddings.
        inverses: torch.Tensor
            Inverse relation embeddings, ignored by most functions.
        tails: torch.Tensor
            Tail embeddings.

        Returns
        ----------
        torch.Tensor
            Scores.
        """
        raise NotImplementedError()

    @property
    def lower_is_better(self) -> bool:
        return self.polarity == Polarity.LOWER_BETTER

    def better(self, scores: torch.Tensor, reference: torch.Tensor) -> torch.Tensor:
        """Return mask of scores strictly more plausible than reference."""
        if self.lower_is_better:
            return scores < reference
        return scores > reference


class TransEScore(ScoreFunction):
    polarity = Polarity.LOWER_BETTER

    def __init__(self, p_norm: int = 2):
        self.p_norm = p_norm

    def __repr__(self) -> str:
        return f"{type(self).__name__}(p_norm={self.p_norm})"

    def __call__(self, heads, relations, inverses, tails):
        return score_transe(heads, relations, tails, self.p_norm)


class DistMultScore(ScoreFunction):
    polarity = Polarity.HIGHER_BETTER

    def __call__(self, heads, relations, inverses, tails):
        return score_distmult(heads, relations, tails)


class SimplEScore(ScoreFunction):
    polarity = Polarity.HIGHER_BETTER

    def __call__(self, heads, relations, inverses, tails):
        return score_simple(heads, relations, inverses, tails)


class SimplECanonicalScore(ScoreFunction):
    polarity = Polarity.HIGHER_BETTER

    def __call__(self, heads, relations, inverses, tails):
        return score_simple_canonical(heads, relations, inverses, tails)


_score_functions: Dict[str, Type[ScoreFunction]] = {
    "transe": TransEScore,
    "distmult": DistMultScore,
    "simple": SimplEScore,
    "simple-canonical": SimplECanonicalScore,
}


def create_score_function(spec: ScoreFnSpec) -> ScoreFunction:
    """Return score function for spec."""
    if spec.variant == "transe":
        return TransEScore(spec.p_norm)
    if spec.variant in _score_functions:
        return _score_functions[spec.variant]()
    raise ValueError(f"Unknown score function {spec.variant}.")


class RelationEmbeddings(nn.Module):
    """Forward and inverse relation vectors, shape (n_relations, d) each. The
    inverse vectors are only read by SimplE."""

    def __init__(self, n_relations: int, dim: int, rng: np.random.Generator):
        super().__init__()
        self.forward_vectors = parameter(translational_uniform(rng, (n_relations, dim)))
        self.inverse_vectors = parameter(translational_uniform(rng, (n_relations, dim)))

    @property
    def n_relations(self) -> int:
        return self.forward_vectors.shape[0]

    def forward(self, relations: torch.Tensor):
        return self.forward_vectors[relations], self.inverse_vectors[relations]


@dataclass(frozen=True)
class EmbeddingModel:
    """Trained tables needed to score any triple: final entity table
    (n_entities, d), forward and inverse relation tables (n_relations, d) and
    the score function. A model trained with separate head and tail maps
    carries a second entity table read for entities in tail position."""

    entities: torch.Tensor
    relations: torch.Tensor
    inverses: torch.Tensor
    score_function: ScoreFunction
    tail_entities: Optional[torch.Tensor] = None

    @property
    def n_entities(self) -> int:
        return self.entities.shape[0]

    @property
    def n_relations(self) -> int:
        return self.relations.shape[0]

    @property
    def tails(self) -> torch.Tensor:
        """Entity table of the tail position."""
        if self.tail_entities is None:
            return self.entities
        return self.tail_entities

    def score(self, triples: np.ndarray) -> torch.Tensor:
        """Return scores of rows of (n, 3) triple array."""
        index = torch.from_numpy(np.array(triples, dtype=np.int64).reshape(-1, 3))
        return self.score_function(
            self.entities[index[:, 0]],
            self.relations[index[:, 1]],
            self.inverses[index[:, 1]],
            self.tails[index[:, 2]],
        )

    def candidate_scores(self, entity: int, relation: int, side: str) -> torch.Tensor:
        """Return scores of all entities placed on side ("head" or "tail")
        of a triple with the other side fixed to entity."""
        if not 0 <= entity < self.n_entities:
            raise VocabularyError(f"Entity index {entity} out of range.")
        if not 0 <= relation < self.n_relations:
            raise VocabularyError(f"Relation index {relation} out of range.")
        shape = self.entities.shape
        forward = self.relations[relation].expand(shape)
        inverse = self.inverses[relation].expand(shape)
        if side == "tail":
            fixed = self.entities[entity].expand(shape)
            return self.score_function(fixed, forward, inverse, self.tails)
        if side == "head":
            fixed = self.tails[entity].expand(shape)
            return self.score_function(self.entities, forward, inverse, fixed)
        raise ValueError(f"Unknown side {side}.")


def margin_loss(
    positive: torch.Tensor,
    negative: torch.Tensor,
    margin: float,
    polarity: Polarity,
) -> torch.Tensor:
    """Return elementwise hinge max(0, margin + pos - neg) for lower-better
    scores and max(0, margin - pos + neg) for higher-better scores."""
    if margin <= 0:
        raise ValueError("Margin must be positive.")
    ones = torch.ones_like(positive)
    if polarity == Polarity.LOWER_BETTER:
        return F.margin_ranking_loss(
            negative, positive, ones, margin=margin, reduction="none"
        )
    return F.margin_ranking_loss(
        positive, negative, ones, margin=margin, reduction="none"
    )


class NegativeSampler:
    def __init__(self, kg: KnowledgeGraph):
        """Corrupts triples by replacing head or tail with a uniformly drawn
        entity, redrawing until the corrupted triple is not a triple of kg.

        Parameters
        ----------
        kg: KnowledgeGraph
            Graph holding all triples known to be true.
        """
        self._n_entities = kg.n_entities
        self._n_relations = max(kg.n_relations, 1)
        self._keys = np.unique(self._encode(kg.triple_array))

    def _encode(self, triples: np.ndarray) -> np.ndarray:
        return (
            triples[:, 0] * self._n_relations + triples[:, 1]
        ) * self._n_entities + triples[:, 2]

    def contains(self, triples: np.ndarray) -> np.ndarray:
        """Return mask of triples (rows of (n, 3) array) that are known."""
        keys = self._encode(triples)
        if len(self._keys) == 0:
            return np.zeros(len(keys), dtype=bool)
        positions = np.searchsorted(self._keys, keys)
        positions = np.minimum(positions, len(self._keys) - 1)
        return self._keys[positions] == keys

    def corrupt(
        self,
        triples: np.ndarray,
        n: int,
        mode: str,
        rng: np.random.Generator,
    ) -> np.ndarray:
        """Return n negatives per triple, negatives of one triple adjacent.

        Parameters
        ----------
        triples: np.ndarray
            Positive triples, shape (m, 3).
        n: int
            Negatives per positive.
        mode: str
            "head", "tail" or "both" (fair coin per negative).
        rng: np.random.Generator
            Generator to draw from.

        Returns
        ----------
        np.ndarray
            Negative triples, shape (m * n, 3).
        """
        if n < 1:
            raise ValueError("Need at least one negative per positive.")
        negatives = np.repeat(np.asarray(triples, dtype=np.int64), n, axis=0)
        if mode == "both":
            corrupt_head = rng.random(len(negatives)) < 0.5
        elif mode in ("head", "tail"):
            corrupt_head = np.full(len(negatives), mode == "head")
        else:
            raise ValueError(f"Unknown corruption mode {mode}.")
        column = np.where(corrupt_head, 0, 2)
        pending = np.arange(len(negatives))
        max_attempts = settings.negative_attempts_factor * self._n_entities
        for _ in range(max_attempts):
            if len(pending) == 0:
                return negatives
            draws = rng.integers(0, self._n_entities, size=len(pending))
            negatives[pending, column[pending]] = draws
            pending = pending[self.contains(negatives[pending])]
        if len(pending) == 0:
            return negatives
        raise NegativeSamplingError(
            f"No negative found for triple {tuple(negatives[pending[0]])} "
            f"after {max_attempts} attempts."
        )


def sample_negatives(
    triple: Triple,
    kg: KnowledgeGraph,
    n: int,
    mode: str,
    rng: np.random.Generator,
) -> List[Triple]:
    """Return n corrupted versions of triple, none of them in kg."""
    negatives = NegativeSampler(kg).corrupt(triples_to_array([triple]), n, mode, rng)
    return [Triple(*map(int, row)) for row in negatives]
