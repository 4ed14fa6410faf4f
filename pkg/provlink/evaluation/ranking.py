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

"""Link prediction ranking metrics under raw and filtered protocols."""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import torch

from provlink.exceptions import DataError, VocabularyError
from provlink.graph import KnowledgeGraph, Triple
from provlink.scoring import EmbeddingModel

logger = logging.getLogger(__name__)

PROTOCOLS = ("raw", "filtered")
SIDES = ("head", "tail", "both")
HITS = (1, 3, 10)
TSV_HEADER = "model\tprotocol\tside\tMR\tMRR\tHit@1\tHit@3\tHit@10"


class KnownTriples:
    def __init__(self, triples: Iterable[Triple]):
        """Index of triples known to be true, used to filter candidates.

        Parameters
        ----------
        triples: Iterable[Triple]
            Known triples, typically train, dev and test combined.
        """
        tails: Dict[Tuple[int, int], List[int]] = defaultdict(list)
        heads: Dict[Tuple[int, int], List[int]] = defaultdict(list)
        for head, relation, tail in triples:
            tails[(head, relation)].append(tail)
            heads[(relation, tail)].append(head)
        self._tails = {key: np.unique(values) for key, values in tails.items()}
        self._heads = {key: np.unique(values) for key, values in heads.items()}
        self._empty = np.zeros(0, dtype=np.int64)

    @classmethod
    def from_graphs(cls, *graphs: KnowledgeGraph) -> "KnownTriples":
        return cls(triple for graph in graphs for triple in graph.triples)

    def tails(self, head: int, relation: int) -> np.ndarray:
        """Return sorted tails t with (head, relation, t) known."""
        return self._tails.get((head, relation), self._empty)

    def heads(self, relation: int, tail: int) -> np.ndarray:
        """Return sorted heads h with (h, relation, tail) known."""
        return self._heads.get((relation, tail), self._empty)

    def __contains__(self, triple: object) -> bool:
        head, relation, tail = triple  # type: ignore
        known = self.tails(head, relation)
        position = np.searchsorted(known, tail)
        return bool(position < len(known) and known[position] == tail)


def tie_rank(better: int, ties: int) -> int:
    """Return mean rank of a tie group, rounded half up.

    Parameters
    ----------
    better: int
        Number of candidates strictly more plausible than the true one.
    ties: int
        Number of candidates scoring equal to the true one, itself included.
    """
    # Mean of better + 1, ..., better + ties is better + (ties + 1) / 2.
    return better + (ties + 2) // 2


def rank_triple(
    model: EmbeddingModel,
    triple: Triple,
    side: str,
    protocol: str = "filtered",
    known: Optional[KnownTriples] = None,
) -> int:
    """Return rank of triple among all replacements of one side.

    Parameters
    ----------
    model: EmbeddingModel
        Tables to score with.
    triple: Triple
        True triple.
    side: str
        "head" or "tail", the side replaced by every entity.
    protocol: str = "filtered"
        "raw" ranks against all candidates, "filtered" drops candidates
        forming another known triple.
    known: Optional[KnownTriples] = None
        Known triples, required by the filtered protocol.

    Returns
    ----------
    int
        Rank, at least 1.
    """
    head, relation, tail = triple
    if protocol not in PROTOCOLS:
        raise ValueError(f"Unknown protocol {protocol}.")
    if side == "tail":
        scores = model.candidate_scores(head, relation, "tail")
        target = tail
    elif side == "head":
        scores = model.candidate_scores(tail, relation, "head")
        target = head
    else:
        raise ValueError(f"Unknown side {side}.")
    if not 0 <= target < model.n_entities:
        raise VocabularyError(f"Entity index {target} out of range.")
    keep = torch.ones(model.n_entities, dtype=torch.bool)
    if protocol == "filtered":
        if known is None:
            raise ValueError("Filtered protocol requires known triples.")
        if side == "tail":
            excluded = known.tails(head, relation)
        else:
            excluded = known.heads(relation, tail)
        keep[torch.from_numpy(np.array(excluded, dtype=np.int64))] = False
        keep[target] = True
    reference = scores[target]
    better = int((model.score_function.better(scores, reference) & keep).sum())
    ties = int(((scores == reference) & keep).sum())
    return tie_rank(better, ties)


@dataclass(frozen=True)
class Metrics:
    mr: float
    mrr: float
    hits: Dict[int, float]
    n_queries: int

    @classmethod
    def from_ranks(cls, ranks: Sequence[int]) -> "Metrics":
        if len(ranks) == 0:
            raise DataError("No ranks to aggregate.")
        values = np.asarray(ranks, dtype=np.float64)
        return cls(
            float(values.mean()),
            float((1.0 / values).mean()),
            {n: float((values <= n).mean()) for n in HITS},
            len(ranks),
        )

    @classmethod
    def average(cls, first: "Metrics", second: "Metrics") -> "Metrics":
        return cls(
            (first.mr + second.mr) / 2,
            (first.mrr + second.mrr) / 2,
            {n: (first.hits[n] + second.hits[n]) / 2 for n in HITS},
            first.n_queries,
        )

    def hit(self, n: int) -> float:
        return self.hits[n]

    def to_dict(self) -> Dict[str, float]:
        values: Dict[str, float] = {"mr": self.mr, "mrr": self.mrr}
        for n in HITS:
            values[f"hit@{n}"] = self.hits[n]
        values["n_queries"] = self.n_queries
        return values


@dataclass(frozen=True)
class RankingReport:
    protocol: str
    side: str
    metrics: Metrics
    per_relation: Dict[str, Metrics] = field(default_factory=dict)

    @property
    def mr(self) -> float:
        return self.metrics.mr

    @property
    def mrr(self) -> float:
        return self.metrics.mrr

    @property
    def n_queries(self) -> int:
        return self.metrics.n_queries

    def hit(self, n: int) -> float:
        return self.metrics.hit(n)

    def to_dict(self) -> Dict[str, object]:
        values: Dict[str, object] = {"protocol": self.protocol, "side": self.side}
        values.update(self.metrics.to_dict())
        values["per_relation"] = {
            relation: metrics.to_dict()
            for relation, metrics in sorted(self.per_relation.items())
        }
        return values

    def to_tsv_row(self, label: str) -> str:
        return "\t".join(
            [
                label,
                self.protocol,
                self.side,
                f"{self.mr:.1f}",
                f"{self.mrr:.3f}",
            ]
            + [f"{self.hit(n):.3f}" for n in HITS]
        )


def _side_metrics(
    queries: Sequence[Triple],
    model: EmbeddingModel,
    protocol: str,
    side: str,
    known: Optional[KnownTriples],
) -> Tuple[Metrics, Dict[int, Metrics]]:
    ranks = [rank_triple(model, query, side, protocol, known) for query in queries]
    by_relation: Dict[int, List[int]] = defaultdict(list)
    for query, rank in zip(queries, ranks):
        by_relation[query[1]].append(rank)
    return Metrics.from_ranks(ranks), {
        relation: Metrics.from_ranks(values)
        for relation, values in by_relation.items()
    }


def evaluate(
    queries: Sequence[Triple],
    model: EmbeddingModel,
    protocol: str = "filtered",
    side: str = "both",
    known: Optional[KnownTriples] = None,
    relation_names: Optional[Sequence[str]] = None,
) -> RankingReport:
    """Rank every query and aggregate mean rank, mean reciprocal rank and
    hits. Side "both" averages head side and tail side metrics.

    Parameters
    ----------
    queries: Sequence[Triple]
        True triples to rank.
    model: EmbeddingModel
        Tables to score with.
    protocol: str = "filtered"
        "raw" or "filtered".
    side: str = "both"
        "head", "tail" or "both".
    known: Optional[KnownTriples] = None
        Known triples for the filtered protocol.
    relation_names: Optional[Sequence[str]] = None
        Names used as keys of the per relation breakdown.

    Returns
    ----------
    RankingReport
        Aggregated metrics.
    """
    if len(queries) == 0:
        raise DataError("No queries to evaluate.")
    if side not in SIDES:
        raise ValueError(f"Unknown side {side}.")
    sides = ("head", "tail") if side == "both" else (side,)
    results = [_side_metrics(queries, model, protocol, name, known) for name in sides]
    if len(results) == 1:
        metrics, per_relation = results[0]
    else:
        (head_metrics, head_relations), (tail_metrics, tail_relations) = results
        metrics = Metrics.average(head_metrics, tail_metrics)
        per_relation = {
            relation: Metrics.average(head_relations[relation], value)
            for relation, value in tail_relations.items()
        }

    def relation_name(relation: int) -> str:
        if relation_names is None:
            return str(relation)
        return relation_names[relation]

    report = RankingReport(
        protocol,
        side,
        metrics,
        {relation_name(relation): value for relation, value in per_relation.items()},
    )
    logger.debug(
        f"Evaluated {report.n_queries} queries ({protocol}, {side}): "
        f"MRR {report.mrr:.4f}"
    )
    return report


def evaluate_all(
    queries: Sequence[Triple],
    model: EmbeddingModel,
    protocols: Sequence[str] = PROTOCOLS,
    sides: Sequence[str] = ("both",),
    known: Optional[KnownTriples] = None,
    relation_names: Optional[Sequence[str]] = None,
) -> List[RankingReport]:
    """Return one report per protocol and side combination."""
    return [
        evaluate(queries, model, protocol, side, known, relation_names)
        for protocol in protocols
        for side in sides
    ]
