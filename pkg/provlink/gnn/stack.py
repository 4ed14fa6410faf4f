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

"""Stacks of graph layers and the residual combination with text features."""

from typing import Optional

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from provlink.gnn.gat import GatLayer
from provlink.gnn.layer import GraphLayer
from provlink.gnn.message_graph import MessageGraph
from provlink.gnn.rgcn import RgcnLayer


class LayerStack(nn.Module):
    def __init__(
        self,
        variant: str,
        depth: int,
        dim: int,
        n_relations: int,
        rng: np.random.Generator,
        heads: int = 1,
        leaky_slope: float = 0.2,
    ):
        """Depth layers of one variant with ReLU between layers and identity
        after the last layer.

        Parameters
        ----------
        variant: str
            "gat" or "rgcn".
        depth: int
            Number of layers, at least 1.
        dim: int
            Feature width of every layer.
        n_relations: int
            Number of relations, used by R-GCN.
        rng: np.random.Generator
            Generator for parameter initialization, layers drawn in order.
        heads: int = 1
            GAT heads, averaged.
        leaky_slope: float = 0.2
            GAT attention LeakyReLU slope.
        """
        super().__init__()
        if depth < 1:
            raise ValueError("Stack depth must be at least 1.")
        self.variant = variant
        layers = []
        for _ in range(depth):
            if variant == "gat":
                layers.append(GatLayer(dim, rng, heads, leaky_slope))
            elif variant == "rgcn":
                layers.append(RgcnLayer(dim, n_relations, rng))
            else:
                raise NotImplementedError(f"Graph layer {variant} not implemented.")
        self.layers = nn.ModuleList(layers)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.variant!r}, depth={len(self.layers)})"

    @property
    def depth(self) -> int:
        return len(self.layers)

    def layer(self, index: int) -> GraphLayer:
        return self.layers[index]  # type: ignore

    def zero_(self) -> "LayerStack":
        for layer in self.layers:
            layer.zero_()
        return self

    def forward(self, features: torch.Tensor, graph: MessageGraph) -> torch.Tensor:
        hidden = features
        for index, layer in enumerate(self.layers):
            hidden = layer(hidden, graph)
            if index < len(self.layers) - 1:
                hidden = F.relu(hidden)
        return hidden


def residual_combine(
    text_feature: torch.Tensor, gnn_output: torch.Tensor
) -> torch.Tensor:
    """Return text_feature + gnn_output."""
    if text_feature.shape != gnn_output.shape:
        raise ValueError(
            f"Shape {tuple(text_feature.shape)} of text feature does not match "
            f"{tuple(gnn_output.shape)} of graph output."
        )
    return text_feature + gnn_output


def forward_all(
    stack: Optional[LayerStack], features: torch.Tensor, graph: MessageGraph
) -> torch.Tensor:
    """Return final entity table, features plus stack output. Without a
    stack the features are returned unchanged."""
    if features.shape[0] != graph.n_entities:
        raise ValueError(
            f"Feature table has {features.shape[0]} rows, graph has "
            f"{graph.n_entities} entities."
        )
    if stack is None:
        return features
    return residual_combine(features, stack(features, graph))
