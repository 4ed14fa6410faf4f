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

"""Symbol tables mapping entity and relation names to dense indices."""

from typing import Dict, Iterable, Iterator, List, Optional

from provlink.exceptions import VocabularyError


class SymbolTable:
    """Bijection between registered names and the indices 0..n-1, in order
    of registration."""

    def __init__(self, names: Optional[Iterable[str]] = None):
        self._names: List[str] = []
        self._indices: Dict[str, int] = {}
        for name in names or []:
            self.register(name)

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, name: object) -> bool:
        return name in self._indices

    def __iter__(self) -> Iterator[str]:
        return iter(self._names)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, SymbolTable):
            return self._names == other._names
        return NotImplemented

    def __repr__(self) -> str:
        return f"{type(self).__name__}({len(self)} names)"

    @property
    def names(self) -> List[str]:
        """Return registered names ordered by index."""
        return list(self._names)

    def register(self, name: str) -> int:
        """Return index of name, registering it if not seen before."""
        index = self._indices.get(name)
        if index is None:
            index = len(self._names)
            self._names.append(name)
            self._indices[name] = index
        return index

    def index(self, name: str) -> int:
        """Return index of registered name."""
        try:
            return self._indices[name]
        except KeyError:
            raise VocabularyError(f"Unknown name {name!r}.")

    def name(self, index: int) -> str:
        """Return name of registered index."""
        if not 0 <= index < len(self._names):
            raise VocabularyError(f"Index {index} out of range 0..{len(self) - 1}.")
        return self._names[index]


class Vocabulary:
    """Entity and relation symbol tables of a knowledge graph."""

    def __init__(
        self,
        entities: Optional[SymbolTable] = None,
        relations: Optional[SymbolTable] = None,
    ):
        self._entities = entities if entities is not None else SymbolTable()
        self._relations = relations if relations is not None else SymbolTable()

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Vocabulary):
            return (
                self._entities == other._entities
                and self._relations == other._relations
            )
        return NotImplemented

    def __repr__(self) -> str:
        return (
            f"{type(self).__name__}({len(self.entities)} entities, "
            f"{len(self.relations)} relations)"
        )

    @property
    def entities(self) -> SymbolTable:
        return self._entities

    @property
    def relations(self) -> SymbolTable:
        return self._relations

    @classmethod
    def from_names(
        cls, entities: Iterable[str], relations: Iterable[str]
    ) -> "Vocabulary":
        return cls(SymbolTable(entities), SymbolTable(relations))
