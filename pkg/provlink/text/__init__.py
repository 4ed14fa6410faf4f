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

"""Module containing text encoders and the text feature reduction."""

from provlink.text.encoder import TextEncoder
from provlink.text.features import (
    MlpParams,
    TextReducer,
    build_feature_table,
    create_encoder,
    encode_entities,
    encode_text,
    mlp_reduce,
)
from provlink.text.hashed import HashedNgramEncoder, ngram_bucket
from provlink.text.precomputed import PrecomputedEncoder

__all__ = [
    "HashedNgramEncoder",
    "MlpParams",
    "PrecomputedEncoder",
    "TextEncoder",
    "TextReducer",
    "build_feature_table",
    "create_encoder",
    "encode_entities",
    "encode_text",
    "mlp_reduce",
    "ngram_bucket",
]
