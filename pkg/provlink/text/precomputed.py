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

"""Encoder serving vectors produced offline, e.g. language model sentence
embeddings, from a tab separated `id<TAB>v1<TAB>...<TAB>vN` file."""

from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from upath import UPath

from provlink.exceptions import EncoderError, ParseError
from provlink.file import LineFile
from provlink.text.encoder import TextEncoder


class PrecomputedEncoder(TextEncoder):
    def __init__(self, vectors: Dict[str, np.ndarray], raw_dim: int):
        """Encoder looking up stored vectors by entity name.

        Parameters
        ----------
        vectors: Dict[str, np.ndarray]
            Vector per entity name.
        raw_dim: int
            Width of all vectors.
        """
        for name, vector in vectors.items():
            if vector.shape != (raw_dim,):
                raise ValueError(
                    f"Vector for {name!r} has shape {vector.shape}, "
                    f"expected ({raw_dim},)."
                )
        self._vectors = vectors
        self._raw_dim = raw_dim

    @property
    def raw_dim(self) -> int:
        return self._raw_dim

    @property
    def entities(self) -> List[str]:
        """Return names of entities with stored vectors."""
        return list(self._vectors)

    def encode(self, text: str, entity: Optional[str] = None) -> np.ndarray:
        if entity is None or entity not in self._vectors:
            raise EncoderError(f"No precomputed vector for entity {entity!r}.")
        return self._vectors[entity].copy()

    @classmethod
    def load(
        cls, path: Union[str, Path, UPath], raw_dim: Optional[int] = None
    ) -> "PrecomputedEncoder":
        """Load vectors from tab separated file.

        Parameters
        ----------
        path: Union[str, Path, UPath]
            Path to vector file.
        raw_dim: Optional[int] = None
            Expected width, taken from the first line if not given.

        Returns
        ----------
        PrecomputedEncoder
            Encoder serving the loaded vectors.
        """
        vectors: Dict[str, np.ndarray] = {}
        with LineFile(path) as file:
            for line_number, line in file.lines():
                if line.strip() == "":
                    continue
                name, *values = line.split("\t")
                if raw_dim is None:
                    raw_dim = len(values)
                if len(values) != raw_dim:
                    raise ParseError(
                        path,
                        line_number,
                        f"expected {raw_dim} values, found {len(values)}",
                    )
                if name in vectors:
                    raise ParseError(path, line_number, f"duplicate id {name!r}")
                try:
                    vectors[name] = np.array([float(value) for value in values])
                except ValueError:
                    raise ParseError(path, line_number, "non-numeric value")
        if raw_dim is None:
            raise EncoderError(f"No vectors in {path}.")
        return cls(vectors, raw_dim)
