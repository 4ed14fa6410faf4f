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

"""Knowledge graph with direction tagged adjacency."""

from enum import IntEnum
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from provlink.exceptions import VocabularyError
from provlink.graph.triples import Triple, triples_to_array
from provlink.graph.vocabulary import Vocabulary


class Direction(IntEnum):
    """Direction tag of an adjacency entry. An entry (neighbor, OUT) on node
    i under relation r stands for triple (i, r, neighbor), an entry
    (neighbor, IN) for triple (neighbor, r, i)."""

    OUT = 0
    IN = 1


Adjacency = Dict[int, Dict[int, List[Tuple[int, Direction]]]]


class KnowledgeGraph:
    def __init__(
        self,
        vocabulary: Vocabulary,
        triples: Sequence[Triple],
    ):
        """Immutable knowledge graph over a vocabulary. Adjacency is derived
        from the triples.

        Parameters
        ----------
        vocabulary: Vocabulary
            Entity and relation symbol tables.
        triples: Sequence[Triple]
            Triples of the graph, all indexed in vocabulary.
        """
        self._vocabulary = vocabulary
        self._triples = tuple(Triple(*triple) for triple in triples)
        self._n_entities = len(vocabulary.entities)
        self._n_relations = len(vocabulary.relations)
        for triple in self._triples:
            if not (
                0 <= triple.head < self._n_entities
                and 0 <= triple.tail < self._n_entities
                and 0 <= triple.relation < self._n_relations
            ):
                raise VocabularyError(f"Triple {triple} not in vocabulary.")

    def __repr__(self) -> str:
        return (
            f"{type(self).__name__}({self.n_entities} entities, "
            f"{self.n_relations} relations, {len(self.triples)} triples)"
        )

    def __len__(self) -> int:
        return len(self._triples)

    @property
    def vocabulary(self) -> Vocabulary:
        return self._vocabulary

    @property
    def n_entities(self) -> int:
        return self._n_entities

    @property
    def n_relations(self) -> int:
        return self._n_relations

    @property
    def triples(self) -> Tuple[Triple, ...]:
        return self._triples

    @cached_property
    def triple_array(self) -> np.ndarray:
        """Return triples as read only int64 array of shape (n, 3)."""
        array = triples_to_array(self._triples)
        array.setflags(write=False)
        return array

    @cached_property
    def triple_set(self) -> Set[Triple]:
        return set(self._triples)

    @cached_property
    def adjacency(self) -> Adjacency:
        """Return per relation map from entity to direction tagged neighbors.
        Each triple contributes one OUT entry on its head and one IN entry on
        its tail."""
        return self.build_adjacency(self._triples)

    @staticmethod
    def build_adjacency(triples: Sequence[Triple]) -> Adjacency:
        adjacency: Adjacency = {}
        for head, relation, tail in triples:
            per_relation = adjacency.setdefault(relation, {})
            per_relation.setdefault(head, []).append((tail, Direction.OUT))
            per_relation.setdefault(tail, []).append((head, Direction.IN))
        return adjacency

    @property
    def n_adjacency_edges(self) -> int:
        return sum(
            len(neighbors)
            for per_relation in self.adjacency.values()
            for neighbors in per_relation.values()
        )

    def neighbors(self, entity: int) -> List[int]:
        """Return sorted unique neighbors of entity ignoring relation and
        direction."""
        found = set()
        for per_relation in self.adjacency.values():
            for neighbor, _ in per_relation.get(entity, []):
                found.add(neighbor)
        found.discard(entity)
        return sorted(found)

    def relation_index(self, name: str) -> int:
        return self._vocabulary.relations.index(name)

    def entity_index(self, name: str) -> int:
        return self._vocabulary.entities.index(name)

    def subgraph(self, triples: Sequence[Triple]) -> "KnowledgeGraph":
        """Return graph with other triples over the same vocabulary."""
        return KnowledgeGraph(self._vocabulary, triples)

    def with_relation(self, relation: int) -> List[Triple]:
        return [triple for triple in self._triples if triple.relation == relation]

    @classmethod
    def from_names(
        cls,
        named_triples: Sequence[Tuple[str, str, str]],
        vocabulary: Optional[Vocabulary] = None,
    ) -> "KnowledgeGraph":
        """Build graph from (head, relation, tail) names, registering names in
        order of first appearance."""
        vocabulary = vocabulary if vocabulary is not None else Vocabulary()
        triples = [
            Triple(
                vocabulary.entities.register(head),
                vocabulary.relations.register(relation),
                vocabulary.entities.register(tail),
            )
            for head, relation, tail in named_triples
        ]
        return cls(vocabulary, triples)
