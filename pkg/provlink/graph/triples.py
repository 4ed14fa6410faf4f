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

"""Triple and entity text records and their file formats.

Triples are stored as tab separated `head<TAB>relation<TAB>tail` lines without
header. Entity texts are stored as json lines with string fields `id` and
`text`."""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from upath import UPath

from provlink.exceptions import DataError, ParseError
from provlink.file import LineFile, open_file
from provlink.graph.vocabulary import SymbolTable, Vocabulary

logger = logging.getLogger(__name__)


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int


@dataclass(frozen=True)
class EntityText:
    id: int
    text: str


def triples_to_array(triples: Sequence[Triple]) -> np.ndarray:
    """Return triples as int64 array of shape (n, 3)."""
    if len(triples) == 0:
        return np.zeros((0, 3), dtype=np.int64)
    return np.asarray(triples, dtype=np.int64).reshape(-1, 3)


def load_triples(
    path: Union[str, Path, UPath],
    vocabulary: Vocabulary,
    options: Optional[Dict[str, str]] = None,
) -> List[Triple]:
    """Load triples from tab separated file, registering unseen names in the
    vocabulary in order of first appearance. Blank lines are skipped and
    exact duplicate lines removed.

    Parameters
    ----------
    path: Union[str, Path, UPath]
        Path to triple file.
    vocabulary: Vocabulary
        Vocabulary to register names in.
    options: Optional[Dict[str, str]] = None
        Options to pass to filesystem when opening file.

    Returns
    ----------
    List[Triple]
        Unique triples in file order.
    """
    triples: List[Triple] = []
    seen = set()
    duplicates = 0
    with LineFile(path, options) as file:
        for line_number, line in file.lines():
            if line.strip() == "":
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError(
                    path, line_number, f"expected 3 fields, found {len(fields)}"
                )
            if any(field == "" for field in fields):
                raise ParseError(path, line_number, "empty field")
            head_name, relation_name, tail_name = fields
            if head_name == tail_name:
                raise ParseError(path, line_number, f"self-link on {head_name!r}")
            triple = Triple(
                vocabulary.entities.register(head_name),
                vocabulary.relations.register(relation_name),
                vocabulary.entities.register(tail_name),
            )
            if triple in seen:
                duplicates += 1
                continue
            seen.add(triple)
            triples.append(triple)
    if duplicates > 0:
        logger.info(f"Removed {duplicates} duplicate triples from {path}.")
    return triples


def write_triples(
    path: Union[str, Path, UPath],
    triples: Iterable[Triple],
    vocabulary: Vocabulary,
    canonical: bool = False,
) -> None:
    """Write triples as tab separated names.

    Parameters
    ----------
    path: Union[str, Path, UPath]
        Path to write to.
    triples: Iterable[Triple]
        Triples to write.
    vocabulary: Vocabulary
        Vocabulary the triples are indexed in.
    canonical: bool = False
        If to deduplicate and sort lines by (head, relation, tail) names.
    """
    lines = [
        (
            vocabulary.entities.name(triple.head),
            vocabulary.relations.name(triple.relation),
            vocabulary.entities.name(triple.tail),
        )
        for triple in triples
    ]
    if canonical:
        lines = sorted(set(lines))
    with open_file(path, "w") as file:
        for line in lines:
            file.write("\t".join(line) + "\n")


def load_entity_texts(
    path: Union[str, Path, UPath],
    entities: SymbolTable,
    options: Optional[Dict[str, str]] = None,
) -> Tuple[Dict[int, EntityText], List[str]]:
    """Load entity descriptions from json lines file. Records for entities
    not in the entity table are rejected, not registered.

    Parameters
    ----------
    path: Union[str, Path, UPath]
        Path to json lines file.
    entities: SymbolTable
        Entity table of the triple vocabulary.
    options: Optional[Dict[str, str]] = None
        Options to pass to filesystem when opening file.

    Returns
    ----------
    Tuple[Dict[int, EntityText], List[str]]
        Accepted texts by entity index, and names of rejected records.
    """
    texts: Dict[int, EntityText] = {}
    seen = set()
    rejected: List[str] = []
    with LineFile(path, options) as file:
        for line_number, line in file.lines():
            if line.strip() == "":
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exception:
                raise ParseError(path, line_number, f"invalid json ({exception.msg})")
            if not isinstance(record, dict):
                raise ParseError(path, line_number, "expected a json object")
            name = record.get("id")
            text = record.get("text")
            if not isinstance(name, str) or not isinstance(text, str):
                raise ParseError(
                    path, line_number, "fields id and text must be strings"
                )
            if name in seen:
                raise ParseError(path, line_number, f"duplicate id {name!r}")
            seen.add(name)
            if name not in entities:
                rejected.append(name)
                continue
            index = entities.index(name)
            texts[index] = EntityText(index, text)
    if len(rejected) > 0:
        logger.warning(
            f"Rejected {len(rejected)} text records for entities not in "
            f"vocabulary: {', '.join(rejected[:10])}"
            + (" ..." if len(rejected) > 10 else "")
        )
    return texts, rejected


def write_entity_texts(
    path: Union[str, Path, UPath],
    texts: Dict[int, EntityText],
    entities: SymbolTable,
) -> None:
    """Write entity texts as json lines ordered by entity index."""
    with open_file(path, "w") as file:
        for index in sorted(texts):
            if texts[index].id != index:
                raise DataError(f"Text record for {index} has id {texts[index].id}.")
            record = {"id": entities.name(index), "text": texts[index].text}
            file.write(json.dumps(record, ensure_ascii=False) + "\n")
