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

"""Text features: raw encodings reduced by an affine map with ReLU, and a
shared trainable fallback vector for entities without text."""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from provlink.config import EncoderConfig
from provlink.exceptions import EncoderError
from provlink.graph.triples import EntityText
from provlink.graph.vocabulary import SymbolTable
from provlink.parameters import (
    DTYPE,
    as_tensor,
    parameter,
    translational_uniform,
    xavier_uniform,
)
from provlink.text.encoder import TextEncoder
from provlink.text.hashed import HashedNgramEncoder
from provlink.text.precomputed import PrecomputedEncoder


def create_encoder(config: EncoderConfig) -> TextEncoder:
    """Return encoder for config."""
    if config.variant == "hashed-ngram":
        return HashedNgramEncoder(
            config.raw_dim, tuple(config.ngram_range), config.hash_seed  # type: ignore
        )
    if config.variant == "precomputed-file":
        if config.file_path is None:
            raise EncoderError("Precomputed encoder requires file_path.")
        return PrecomputedEncoder.load(config.file_path, config.raw_dim)
    raise NotImplementedError(f"Encoder variant {config.variant} not implemented.")


def encode_text(
    config: EncoderConfig, text: str, entity: Optional[str] = None
) -> np.ndarray:
    """Encode a single text with the encoder described by config."""
    return create_encoder(config).encode(text, entity)


@dataclass
class MlpParams:
    """Affine map of the reduction, weight (d, raw_dim) and bias (d)."""

    weight: torch.Tensor
    bias: torch.Tensor


def mlp_reduce(params: MlpParams, raw: torch.Tensor) -> torch.Tensor:
    """Return ReLU(W m + b) for raw vector (or rows of raw matrix) m."""
    d, raw_dim = params.weight.shape
    if raw.shape[-1] != raw_dim:
        raise ValueError(f"Raw width {raw.shape[-1]} does not match weight {raw_dim}.")
    if params.bias.shape != (d,):
        raise ValueError(f"Bias shape {tuple(params.bias.shape)} does not match {d}.")
    return F.relu(F.linear(raw, params.weight, params.bias))


class TextReducer(nn.Module):
    """Trainable text side parameters: one affine map shared by heads and
    tails (or one per role), and the fallback vector."""

    def __init__(
        self,
        raw_dim: int,
        dim: int,
        rng: np.random.Generator,
        separate_head_tail: bool = False,
    ):
        super().__init__()
        self.raw_dim = raw_dim
        self.dim = dim
        self.separate_head_tail = separate_head_tail
        self.weight = parameter(xavier_uniform(rng, (dim, raw_dim)))
        self.bias = parameter(np.zeros(dim))
        if separate_head_tail:
            self.tail_weight = parameter(xavier_uniform(rng, (dim, raw_dim)))
            self.tail_bias = parameter(np.zeros(dim))
        self.fallback = parameter(translational_uniform(rng, (dim,)))

    def params(self, role: str = "head") -> MlpParams:
        if role == "tail" and self.separate_head_tail:
            return MlpParams(self.tail_weight, self.tail_bias)
        return MlpParams(self.weight, self.bias)

    def forward(
        self, raw: torch.Tensor, has_text: torch.Tensor, role: str = "head"
    ) -> torch.Tensor:
        """Return reduced features of raw rows; rows without text get the
        fallback vector.

        Parameters
        ----------
        raw: torch.Tensor
            Raw encodings, shape (n, raw_dim).
        has_text: torch.Tensor
            Boolean mask, shape (n,).
        role: str = "head"
            "head" or "tail". Only separate maps tell the roles apart.
        """
        if role not in ("head", "tail"):
            raise ValueError(f"Unknown entity role {role}.")
        reduced = mlp_reduce(self.params(role), raw)
        return torch.where(has_text.unsqueeze(-1), reduced, self.fallback)


def encode_entities(
    entities: SymbolTable,
    texts: Dict[int, EntityText],
    encoder: TextEncoder,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Return raw encodings (n_entities, raw_dim) and has-text mask."""
    raw = np.zeros((len(entities), encoder.raw_dim))
    has_text = np.zeros(len(entities), dtype=bool)
    for index, record in texts.items():
        raw[index] = encoder.encode(record.text, entities.name(index))
        has_text[index] = True
    return as_tensor(raw), torch.from_numpy(has_text)


def build_feature_table(
    entities: SymbolTable,
    texts: Dict[int, EntityText],
    encoder: TextEncoder,
    reducer: TextReducer,
    role: str = "head",
) -> torch.Tensor:
    """Return detached feature table (n_entities, d) of reduced text
    encodings in role, fallback rows for entities without text."""
    raw, has_text = encode_entities(entities, texts, encoder)
    with torch.no_grad():
        return reducer(raw.to(DTYPE), has_text, role).detach().clone()
