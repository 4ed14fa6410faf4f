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


"""Base graph layer class."""

from abc import ABCMeta, abstractmethod

import torch
from torch_geometric.nn import MessagePassing

from provlink.gnn.message_graph import MessageGraph


class GraphLayer(MessagePassing, metaclass=ABCMeta):
    """Abstract message passing layer mapping (n_entities, d) features to
    (n_entities, d) pre-activations. Should be inherited to implement
    specific layers."""

    def __init__(self, dim: int, aggr: str = "add"):
        super().__init__(aggr=aggr, node_dim=0)
        self.dim = dim

    @abstractmethod
    def forward(self, features: torch.Tensor, graph: MessageGraph) -> torch.Tensor:
        """Should return pre-activation output for all nodes.

        Parameters
        ----------
        features: torch.Tensor
            Node features, shape (n_entities, dim).
        graph: MessageGraph
            Graph to pass messages over.

        Returns
        ----------
        torch.Tensor
            Output, shape (n_entities, dim).
        """
        raise NotImplementedError()

    def zero_(self) -> "GraphLayer":
        """Set all parameters to zero."""
        with torch.no_grad():
            for parameter in self.parameters():
                parameter.zero_()
        return self
