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

"""Graph attention layer. Relation types are ignored; every node attends
over its undirected neighborhood including itself."""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import torch
from torch.nn import functional as F
from torch_geometric.utils import softmax

from provlink.gnn.layer import GraphLayer
from provlink.gnn.message_graph import MessageGraph
from provlink.parameters import parameter, xavier_uniform

Activation = Callable[[torch.Tensor], torch.Tensor]


@dataclass
class GatParams:
    """Projection W (d', d), attention vector a (2d') and LeakyReLU slope."""

    weight: torch.Tensor
    attention: torch.Tensor
    leaky_slope: float = 0.2


def gat_attention(
    params: GatParams,
    center: torch.Tensor,
    neighbors: Sequence[torch.Tensor],
) -> torch.Tensor:
    """Return attention weights softmax_j(LeakyReLU(a^T [W v_i || W v_j]))
    of center node i over its neighborhood (which should contain the center
    itself)."""
    if len(neighbors) == 0:
        raise ValueError("Attention over an empty neighborhood.")
    projected_center = params.weight @ center
    projected = torch.stack([params.weight @ neighbor for neighbor in neighbors])
    logits = torch.cat(
        [projected_center.expand_as(projected), projected], dim=-1
    ) @ params.attention
    return torch.softmax(F.leaky_relu(logits, params.leaky_slope), dim=0)


def gat_aggregate(
    params: GatParams,
    center: torch.Tensor,
    neighbors: Sequence[torch.Tensor],
    activation: Activation,
) -> torch.Tensor:
    """Return activation(sum_j alpha_ij W v_j)."""
    weights = gat_attention(params, center, neighbors)
    projected = torch.stack([params.weight @ neighbor for neighbor in neighbors])
    return activation((weights.unsqueeze(-1) * projected).sum(dim=0))


class GatLayer(GraphLayer):
    def __init__(
        self,
        dim: int,
        rng: np.random.Generator,
        heads: int = 1,
        leaky_slope: float = 0.2,
    ):
        """Graph attention layer with output width equal to input width.
        Multiple heads are averaged.

        Parameters
        ----------
        dim: int
            Feature width.
        rng: np.random.Generator
            Generator for Xavier initialization.
        heads: int = 1
            Number of attention heads.
        leaky_slope: float = 0.2
            Negative slope of the attention LeakyReLU.
        """
        super().__init__(dim)
        self.heads = heads
        self.leaky_slope = leaky_slope
        self.weight = parameter(
            np.stack([xavier_uniform(rng, (dim, dim)) for _ in range(heads)])
        )
        self.attention = parameter(
            np.stack([xavier_uniform(rng, (2 * dim,)) for _ in range(heads)])
        )

    def head_params(self, head: int = 0) -> GatParams:
        return GatParams(self.weight[head], self.attention[head], self.leaky_slope)

    def forward(self, features: torch.Tensor, graph: MessageGraph) -> torch.Tensor:
        # (nodes, heads, dim)
        projected = torch.einsum("hod,nd->nho", self.weight, features)
        center = (projected * self.attention[:, : self.dim]).sum(-1)
        neighbor = (projected * self.attention[:, self.dim :]).sum(-1)
        edge_index = graph.attention_index
        weights = self.edge_updater(edge_index, center=center, neighbor=neighbor)
        output = self.propagate(edge_index, x=projected, weights=weights)
        return output.mean(dim=1)

    def edge_update(
        self,
        center_i: torch.Tensor,
        neighbor_j: torch.Tensor,
        index: torch.Tensor,
        ptr: Optional[torch.Tensor],
        size_i: Optional[int],
    ) -> torch.Tensor:
        """Return attention weights of edges, normalized over the incoming
        edges of every target."""
        logits = F.leaky_relu(center_i + neighbor_j, self.leaky_slope)
        return softmax(logits, index, ptr, size_i)

    def message(self, x_j: torch.Tensor, weights: torch.Tensor) -> torch.Tensor:
        return weights.unsqueeze(-1) * x_j
