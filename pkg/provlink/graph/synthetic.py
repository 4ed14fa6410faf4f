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

"""Synthetic legal knowledge graph with the affair/law/provision/right
schema. Every base_entry_is edge from an affair to a provision is backed by a
two-hop path affair -base_law_is-> law <-belongs_to- provision, and entity
texts share tokens along true links."""

import string
from typing import Dict, List, Tuple

import numpy as np

from provlink.graph.knowledge_graph import KnowledgeGraph
from provlink.graph.triples import EntityText, Triple
from provlink.graph.vocabulary import Vocabulary

BASE_ENTRY_IS = "base_entry_is"
RIGHT_IS = "right_is"
BASE_LAW_IS = "base_law_is"
BELONGS_TO = "belongs_to"
LEGAL_RELATIONS = (BASE_ENTRY_IS, RIGHT_IS, BASE_LAW_IS, BELONGS_TO)

WORDS_PER_ENTITY = 4
SHARED_PER_LINK = 3
WORD_LENGTH = 6
MAX_LAWS_PER_AFFAIR = 3


class _TextBuilder:
    """Collects own and shared tokens per entity."""

    def __init__(self, rng: np.random.Generator):
        self._rng = rng
        self._own: Dict[int, List[str]] = {}
        self._shared: Dict[int, List[str]] = {}

    def add_entity(self, entity: int) -> None:
        letters = np.array(list(string.ascii_lowercase))
        self._own[entity] = [
            "".join(letters[self._rng.integers(0, 26, size=WORD_LENGTH)])
            for _ in range(WORDS_PER_ENTITY)
        ]

    def share(self, receiver: int, source: int) -> None:
        """Copy tokens of source into the text of receiver."""
        picked = self._rng.choice(WORDS_PER_ENTITY, SHARED_PER_LINK, replace=False)
        self._shared.setdefault(receiver, []).extend(
            self._own[source][index] for index in sorted(picked)
        )

    def text(self, entity: int, template: str) -> str:
        return template.format(
            own=" ".join(self._own[entity]),
            shared=" ".join(self._shared.get(entity, [])),
        ).strip()


def generate_synthetic_kg(
    n_affairs: int,
    n_laws: int,
    provisions_per_law: int,
    seed: int,
) -> Tuple[KnowledgeGraph, Dict[int, EntityText]]:
    """Generate a synthetic legal knowledge graph.

    Each affair links to 1-3 laws, to a random non-empty subset of the
    provisions of its linked laws and to one right. Each provision belongs to
    its law. Affairs, laws and provisions get texts, rights have none.

    Parameters
    ----------
    n_affairs: int
        Number of affairs (and of right entities).
    n_laws: int
        Number of laws.
    provisions_per_law: int
        Number of provisions in each law.
    seed: int
        Seed for the generator.

    Returns
    ----------
    Tuple[KnowledgeGraph, Dict[int, EntityText]]
        Graph with n_affairs + n_laws + n_laws * provisions_per_law +
        n_affairs entities, and entity texts.
    """
    if min(n_affairs, n_laws, provisions_per_law) < 1:
        raise ValueError("All counts must be at least 1.")
    rng = np.random.default_rng(seed)
    vocabulary = Vocabulary.from_names([], LEGAL_RELATIONS)
    entities = vocabulary.entities
    relation = {name: vocabulary.relations.index(name) for name in LEGAL_RELATIONS}

    affairs = [entities.register(f"affair_{i:04d}") for i in range(n_affairs)]
    laws = [entities.register(f"law_{j:03d}") for j in range(n_laws)]
    provisions = [
        [entities.register(f"prov_{j:03d}_{k:03d}") for k in range(provisions_per_law)]
        for j in range(n_laws)
    ]
    rights = [entities.register(f"right_{i:04d}") for i in range(n_affairs)]

    builder = _TextBuilder(rng)
    for entity in range(len(entities)):
        builder.add_entity(entity)

    triples: List[Triple] = []
    for law, law_provisions in zip(laws, provisions):
        for provision in law_provisions:
            triples.append(Triple(provision, relation[BELONGS_TO], law))
            builder.share(provision, law)

    for affair in affairs:
        n_linked = int(rng.integers(1, min(MAX_LAWS_PER_AFFAIR, n_laws) + 1))
        linked = sorted(rng.choice(n_laws, size=n_linked, replace=False).tolist())
        candidates: List[int] = []
        for law_index in linked:
            triples.append(Triple(affair, relation[BASE_LAW_IS], laws[law_index]))
            builder.share(affair, laws[law_index])
            candidates.extend(provisions[law_index])
        n_chosen = int(rng.integers(1, len(candidates) + 1))
        chosen = sorted(rng.choice(len(candidates), size=n_chosen, replace=False))
        for index in chosen:
            triples.append(Triple(affair, relation[BASE_ENTRY_IS], candidates[index]))
            builder.share(affair, candidates[index])
        right = rights[int(rng.integers(0, n_affairs))]
        triples.append(Triple(affair, relation[RIGHT_IS], right))

    texts: Dict[int, EntityText] = {}
    for affair in affairs:
        texts[affair] = EntityText(
            affair, builder.text(affair, "penalty procedure {own} concerning {shared}")
        )
    for law in laws:
        texts[law] = EntityText(law, builder.text(law, "regulation {own}"))
    for law_provisions in provisions:
        for provision in law_provisions:
            texts[provision] = EntityText(
                provision, builder.text(provision, "article {own} of {shared}")
            )
    return KnowledgeGraph(vocabulary, triples), texts
