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

"""Base text encoder class."""

from abc import ABCMeta, abstractmethod
from typing import Optional

import numpy as np


class TextEncoder(metaclass=ABCMeta):
    """Maps an entity text to a raw vector of fixed width. Should be
    sub-classed to implement specific encoders."""

    @property
    @abstractmethod
    def raw_dim(self) -> int:
        """Return width of produced vectors."""
        raise NotImplementedError()

    @abstractmethod
    def encode(self, text: str, entity: Optional[str] = None) -> np.ndarray:
        """Return raw float64 vector for text.

        Parameters
        ----------
        text: str
            Text to encode.
        entity: Optional[str] = None
            Name of the entity the text describes, required by encoders that
            look vectors up by entity.

        Returns
        ----------
        np.ndarray
            Vector of width raw_dim.
        """
        raise NotImplementedError()

    def __repr__(self) -> str:
        return f"{type(self).__name__}(raw_dim={self.raw_dim})"
