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

"""Knowledge graph data model, file formats, splitting and synthetic
generation."""

from provlink.graph.knowledge_graph import Direction, KnowledgeGraph
from provlink.graph.split import (
    DatasetSplit,
    read_split_manifest,
    split_dataset,
    write_split_manifest,
)
from provlink.graph.synthetic import LEGAL_RELATIONS, generate_synthetic_kg
from provlink.graph.triples import (
    EntityText,
    Triple,
    load_entity_texts,
    load_triples,
    triples_to_array,
    write_entity_texts,
    write_triples,
)
from provlink.graph.vocabulary import SymbolTable, Vocabulary

__all__ = [
    "DatasetSplit",
    "Direction",
    "EntityText",
    "KnowledgeGraph",
    "LEGAL_RELATIONS",
    "SymbolTable",
    "Triple",
    "Vocabulary",
    "generate_synthetic_kg",
    "load_entity_texts",
    "load_triples",
    "read_split_manifest",
    "split_dataset",
    "triples_to_array",
    "write_entity_texts",
    "write_split_manifest",
    "write_triples",
]
