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

"""Module containing graph reasoning layers."""

from provlink.gnn.gat import GatLayer, GatParams, gat_aggregate, gat_attention
from provlink.gnn.layer import GraphLayer
from provlink.gnn.message_graph import MessageGraph, relation_slot
from provlink.gnn.rgcn import RgcnLayer, RgcnParams, rgcn_update
from provlink.gnn.stack import LayerStack, forward_all, residual_combine

__all__ = [
    "GatLayer",
    "GatParams",
    "GraphLayer",
    "LayerStack",
    "MessageGraph",
    "RgcnLayer",
    "RgcnParams",
    "forward_all",
    "gat_aggregate",
    "gat_attention",
    "relation_slot",
    "residual_combine",
    "rgcn_update",
]
