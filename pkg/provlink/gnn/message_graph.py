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


"""Edge index tensors for message passing over a knowledge graph."""

from functools import cached_property
from typing import List, Optional, Tuple

import numpy as np
import torch

from provlink.graph.knowledge_graph import Direction, KnowledgeGraph


def relation_slot(relation: int, direction: Direction) -> int:
    """Return index of the direction tagged relation, 2r for OUT and 2r + 1
    for IN."""
    return 2 * relation + int(direction)


class MessageGraph:
    def __init__(self, kg: KnowledgeGraph, triples: Optional[np.ndarray] = None):
        """Message passing view of a knowledge graph.

        Attention edges are undirected, relation blind and deduplicated, with
        a self-loop on every node, sorted by (target, source). Relational
        edges are grouped by direction tagged relation; a node receives from
        its tail under the OUT slot of a relation and from its head under the
        IN slot. Edge index tensors follow the torch_geometric layout, row 0
        the source and row 1 the target of each message.

        Parameters
        ----------
        kg: KnowledgeGraph
            Graph whose entities and relations are the nodes and edge types.
        triples: Optional[np.ndarray] = None
            (n, 3) subset of the triples of kg to pass messages over, all
            triples of kg if None.
        """
        self._n_entities = kg.n_entities
        self._n_relations = kg.n_relations
        self._triples = (
            kg.triple_array
            if triples is None
            else np.asarray(triples, dtype=np.int64).reshape(-1, 3)
        )

    @property
    def n_entities(self) -> int:
        return self._n_entities

    @property
    def n_slots(self) -> int:
        """Number of direction tagged relations."""
        return 2 * self._n_relations

    @property
    def n_triples(self) -> int:
        return len(self._triples)

    @cached_property
    def attention_edges(self) -> Tuple[torch.Tensor, torch.Tensor]:
        """Return (target, source) index tensors of attention edges."""
        heads, tails = self._triples[:, 0], self._triples[:, 2]
        loops = np.arange(self._n_entities, dtype=np.int64)
        pairs = np.stack(
            [
                np.concatenate([heads, tails, loops]),
                np.concatenate([tails, heads, loops]),
            ],
            axis=1,
        )
        pairs = np.unique(pairs, axis=0)
        return torch.from_numpy(pairs[:, 0].copy()), torch.from_numpy(
            pairs[:, 1].copy()
        )

    @cached_property
    def attention_index(self) -> torch.Tensor:
        """Return (2, n_edges) edge index of attention edges."""
        target, source = self.attention_edges
        return torch.stack([source, target])

    def attention_neighborhood(self, entity: int) -> List[int]:
        """Return sorted attention neighborhood of entity, self included."""
        target, source = self.attention_edges
        return source[target == entity].tolist()

    @cached_property
    def relational_edges(self) -> List[torch.Tensor]:
        """Return per slot (2, n_edges) edge index of source and target."""
        edges = []
        for slot in range(self.n_slots):
            relation, direction = divmod(slot, 2)
            selected = self._triples[self._triples[:, 1] == relation]
            if direction == Direction.OUT:
                target, source = selected[:, 0], selected[:, 2]
            else:
                target, source = selected[:, 2], selected[:, 0]
            edges.append(torch.from_numpy(np.stack([source, target]).astype(np.int64)))
        return edges
