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

"""Relational graph convolution layer over direction tagged relations."""

from dataclasses import dataclass
from typing import Callable, Dict, Sequence, Tuple

import numpy as np
import torch

from provlink.gnn.layer import GraphLayer
from provlink.gnn.message_graph import MessageGraph, relation_slot
from provlink.graph.knowledge_graph import Direction
from provlink.parameters import parameter, xavier_uniform

Activation = Callable[[torch.Tensor], torch.Tensor]


@dataclass
class RgcnParams:
    """Per slot matrices W_k (2|R|, d, d) and self-loop matrix W_0 (d, d)."""

    relation_weights: torch.Tensor
    self_weight: torch.Tensor


def rgcn_update(
    params: RgcnParams,
    center: torch.Tensor,
    neighbors: Dict[Tuple[int, Direction], Sequence[torch.Tensor]],
    activation: Activation,
) -> torch.Tensor:
    """Return activation(sum_k sum_m W_k v_m / c_{i,k} + W_0 v_i).

    Parameters
    ----------
    params: RgcnParams
        Layer parameters.
    center: torch.Tensor
        Feature of the updated node.
    neighbors: Dict[Tuple[int, Direction], Sequence[torch.Tensor]]
        Neighbor features per (relation, direction). Empty lists contribute
        nothing.
    activation: Activation
        Nonlinearity applied to the sum.
    """
    total = params.self_weight @ center
    for (relation, direction), vectors in sorted(neighbors.items()):
        if len(vectors) == 0:
            continue
        weight = params.relation_weights[relation_slot(relation, direction)]
        messages = torch.stack([weight @ vector for vector in vectors])
        total = total + messages.sum(dim=0) / len(vectors)
    return activation(total)


class RgcnLayer(GraphLayer):
    def __init__(self, dim: int, n_relations: int, rng: np.random.Generator):
        """Relational graph convolution with one square matrix per direction
        tagged relation and a self-loop matrix. No basis decomposition.
        Messages of one slot are averaged per target.

        Parameters
        ----------
        dim: int
            Feature width.
        n_relations: int
            Number of relations (before direction tagging).
        rng: np.random.Generator
            Generator for Xavier initialization.
        """
        super().__init__(dim, aggr="mean")
        self.n_relations = n_relations
        self.relation_weights = parameter(
            np.stack([xavier_uniform(rng, (dim, dim)) for _ in range(2 * n_relations)])
            if n_relations > 0
            else np.zeros((0, dim, dim))
        )
        self.self_weight = parameter(xavier_uniform(rng, (dim, dim)))

    @property
    def params(self) -> RgcnParams:
        return RgcnParams(self.relation_weights, self.self_weight)

    def forward(self, features: torch.Tensor, graph: MessageGraph) -> torch.Tensor:
        n_nodes = features.shape[0]
        output = features @ self.self_weight.T
        for slot, edge_index in enumerate(graph.relational_edges):
            if edge_index.shape[1] == 0:
                continue
            transformed = features @ self.relation_weights[slot].T
            output = output + self.propagate(
                edge_index, x=transformed, size=(n_nodes, n_nodes)
            )
        return output
