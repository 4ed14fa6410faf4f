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

"""Link prediction model combining entity features, relation embeddings and
an optional graph layer stack."""

from typing import Optional

import torch
from torch import nn
from torch.nn import functional as F

from provlink.gnn import LayerStack, MessageGraph, forward_all
from provlink.scoring import EmbeddingModel, RelationEmbeddings, ScoreFunction
from provlink.text import TextReducer


class LinkModel(nn.Module):
    def __init__(
        self,
        graph: MessageGraph,
        relations: RelationEmbeddings,
        score_function: ScoreFunction,
        stack: Optional[LayerStack] = None,
        normalize_entities: bool = False,
    ):
        """Model scoring triples of a graph. Entity features come from one
        of three sources, set after construction: a text reducer over raw
        encodings (use_text), a fixed table (use_table) or a trainable table
        (use_table with trainable=True).

        Parameters
        ----------
        graph: MessageGraph
            Graph to pass messages over.
        relations: RelationEmbeddings
            Relation vectors.
        score_function: ScoreFunction
            Function scoring (head, relation, tail) embeddings.
        stack: Optional[LayerStack] = None
            Graph layers. Final embeddings are features plus stack output.
        normalize_entities: bool = False
            If to scale entity embeddings to unit L2 norm before scoring.
        """
        super().__init__()
        self.graph = graph
        self.relations = relations
        self.stack = stack
        self.score_function = score_function
        self.normalize_entities = normalize_entities
        self.reducer: Optional[TextReducer] = None
        self.entity_vectors: Optional[nn.Parameter] = None
        self.register_buffer("raw", None, persistent=False)
        self.register_buffer("has_text", None, persistent=False)
        self.register_buffer("fixed_features", None, persistent=False)

    def use_text(
        self, reducer: TextReducer, raw: torch.Tensor, has_text: torch.Tensor
    ) -> "LinkModel":
        self.reducer = reducer
        self.raw = raw
        self.has_text = has_text
        return self

    def use_table(self, table: torch.Tensor, trainable: bool = False) -> "LinkModel":
        if trainable:
            self.entity_vectors = nn.Parameter(table.clone())
        else:
            self.fixed_features = table.detach().clone()
        return self

    def features(
        self, entities: Optional[torch.Tensor] = None, role: str = "head"
    ) -> torch.Tensor:
        """Return input features of entities (all entities if None) in role
        "head" or "tail"."""
        if self.reducer is not None:
            if entities is None:
                return self.reducer(self.raw, self.has_text, role)
            return self.reducer(self.raw[entities], self.has_text[entities], role)
        if self.entity_vectors is not None:
            table = self.entity_vectors
        elif self.fixed_features is not None:
            table = self.fixed_features
        else:
            raise RuntimeError("Model has no entity features.")
        if entities is None:
            return table
        return table[entities]

    @property
    def separate_roles(self) -> bool:
        """If head and tail features come from separate maps."""
        return self.reducer is not None and self.reducer.separate_head_tail

    def _normalize(self, table: torch.Tensor) -> torch.Tensor:
        if self.normalize_entities:
            return F.normalize(table, dim=-1)
        return table

    def entity_table(
        self, role: str = "head", graph: Optional[MessageGraph] = None
    ) -> torch.Tensor:
        """Return final entity embeddings, features plus stack output. Messages
        pass over graph instead of the model graph if given."""
        graph = graph if graph is not None else self.graph
        return self._normalize(forward_all(self.stack, self.features(role=role), graph))

    def score(
        self, triples: torch.Tensor, table: Optional[torch.Tensor] = None
    ) -> torch.Tensor:
        """Score rows of (n, 3) triple tensor.

        Parameters
        ----------
        triples: torch.Tensor
            Triples to score.
        table: Optional[torch.Tensor] = None
            Final entity table. If None, features of the scored entities
            are computed directly, heads and tails in their own role.
        """
        heads, relations, tails = triples[:, 0], triples[:, 1], triples[:, 2]
        forward, inverse = self.relations(relations)
        if table is None:
            head_vectors = self._normalize(self.features(heads, "head"))
            tail_vectors = self._normalize(self.features(tails, "tail"))
        else:
            head_vectors, tail_vectors = table[heads], table[tails]
        return self.score_function(head_vectors, forward, inverse, tail_vectors)

    def embedding_model(self) -> EmbeddingModel:
        """Return detached tables for evaluation."""
        with torch.no_grad():
            tails = None
            if self.separate_roles:
                tails = self.entity_table("tail").detach().clone()
            return EmbeddingModel(
                self.entity_table("head").detach().clone(),
                self.relations.forward_vectors.detach().clone(),
                self.relations.inverse_vectors.detach().clone(),
                self.score_function,
                tails,
            )
