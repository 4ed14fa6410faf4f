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

from pathlib import Path

import numpy as np
import pytest
import torch

from provlink.config import EncoderConfig
from provlink.exceptions import EncoderError, ParseError
from provlink.graph import EntityText, SymbolTable
from provlink.text import (
    HashedNgramEncoder,
    MlpParams,
    PrecomputedEncoder,
    TextReducer,
    build_feature_table,
    create_encoder,
    encode_entities,
    encode_text,
    mlp_reduce,
    ngram_bucket,
)


@pytest.fixture()
def encoder():
    yield HashedNgramEncoder(raw_dim=64, ngram_range=(1, 3))


@pytest.fixture()
def entities():
    yield SymbolTable(["affair", "law", "right"])


def tensor(values) -> torch.Tensor:
    return torch.tensor(values, dtype=torch.float64)


@pytest.mark.unittest
class TestHashedEncoder:
    def test_empty_text_is_zero(self, encoder: HashedNgramEncoder):
        # Arrange

        # Act
        vector = encoder.encode("")

        # Assert
        assert vector.shape == (64,)
        assert not vector.any()

    def test_deterministic(self, encoder: HashedNgramEncoder):
        # Arrange
        other = HashedNgramEncoder(raw_dim=64, ngram_range=(1, 3))

        # Act
        first = encoder.encode("article 56 illegal parking")
        second = other.encode("article 56 illegal parking")

        # Assert
        assert np.array_equal(first, second)
        assert np.linalg.norm(first) == pytest.approx(1.0, abs=1e-12)

    def test_bigram_counts(self):
        # Arrange
        encoder = HashedNgramEncoder(raw_dim=8, ngram_range=(2, 2), hash_seed=0)
        expected = np.zeros(8)
        expected[ngram_bucket("ab", 8, 0)] += 2
        expected[ngram_bucket("ba", 8, 0)] += 1
        expected /= np.linalg.norm(expected)

        # Act
        vector = encoder.encode("abab")

        # Assert
        assert np.allclose(vector, expected, rtol=0, atol=1e-12)
        assert encoder.counts("abab").sum() == 3

    def test_bucket_depends_on_seed(self):
        # Arrange
        ngrams = [f"g{index}" for index in range(50)]

        # Act
        first = [ngram_bucket(ngram, 1024, 0) for ngram in ngrams]
        second = [ngram_bucket(ngram, 1024, 1) for ngram in ngrams]

        # Assert
        assert first != second
        assert all(0 <= bucket < 1024 for bucket in first + second)

    def test_invalid_range(self):
        # Arrange

        # Act & Assert
        with pytest.raises(ValueError):
            HashedNgramEncoder(raw_dim=8, ngram_range=(3, 2))


@pytest.mark.unittest
class TestPrecomputedEncoder:
    def test_load_and_lookup(self, tmp_path: Path):
        # Arrange
        path = tmp_path / "vectors.tsv"
        path.write_text("law\t1.0\t2.0\naffair\t0.5\t-1\n")

        # Act
        encoder = PrecomputedEncoder.load(path)

        # Assert
        assert encoder.raw_dim == 2
        assert np.array_equal(encoder.encode("ignored", "affair"), [0.5, -1.0])
        with pytest.raises(EncoderError):
            encoder.encode("text", "right")

    def test_ragged_file(self, tmp_path: Path):
        # Arrange
        path = tmp_path / "vectors.tsv"
        path.write_text("law\t1.0\t2.0\naffair\t0.5\n")

        # Act & Assert
        with pytest.raises(ParseError) as error:
            PrecomputedEncoder.load(path)
        assert error.value.line_number == 2

    def test_created_from_config(self, tmp_path: Path):
        # Arrange
        path = tmp_path / "vectors.tsv"
        path.write_text("law\t1.0\t2.0\n")
        config = EncoderConfig(
            variant="precomputed-file", raw_dim=2, file_path=str(path)
        )

        # Act
        vector = encode_text(config, "road traffic law", "law")

        # Assert
        assert np.array_equal(vector, [1.0, 2.0])
        assert isinstance(create_encoder(EncoderConfig()), HashedNgramEncoder)


@pytest.mark.unittest
class TestMlpReduce:
    @pytest.mark.parametrize(
        ["weight", "bias", "raw", "expected"],
        [
            ([[0.0, 0.0], [0.0, 0.0]], [0.0, 0.0], [3.0, -2.0], [0.0, 0.0]),
            ([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0], [-1.0, -2.0], [0.0, 0.0]),
            ([[1.0, 2.0], [3.0, 4.0]], [1.0, -10.0], [1.0, 1.0], [4.0, 0.0]),
        ],
    )
    def test_values(self, weight, bias, raw, expected):
        # Arrange
        params = MlpParams(tensor(weight), tensor(bias))

        # Act
        reduced = mlp_reduce(params, tensor(raw))

        # Assert
        assert torch.equal(reduced, tensor(expected))

    def test_shape_mismatch(self):
        # Arrange
        params = MlpParams(torch.zeros(2, 3, dtype=torch.float64), torch.zeros(2))

        # Act & Assert
        with pytest.raises(ValueError):
            mlp_reduce(params, torch.zeros(2, dtype=torch.float64))


@pytest.mark.unittest
class TestFeatureTable:
    def test_textless_entities_get_fallback(
        self, entities: SymbolTable, encoder: HashedNgramEncoder
    ):
        # Arrange
        reducer = TextReducer(64, 4, np.random.default_rng(0))

        # Act
        table = build_feature_table(entities, {}, encoder, reducer)

        # Assert
        assert table.shape == (3, 4)
        for row in table:
            assert torch.equal(row, reducer.fallback.detach())

    def test_identical_texts_identical_rows(
        self, entities: SymbolTable, encoder: HashedNgramEncoder
    ):
        # Arrange
        reducer = TextReducer(64, 4, np.random.default_rng(0))
        texts = {
            0: EntityText(0, "road traffic safety"),
            1: EntityText(1, "road traffic safety"),
        }

        # Act
        table = build_feature_table(entities, texts, encoder, reducer)

        # Assert
        assert torch.equal(table[0], table[1])
        assert torch.equal(table[2], reducer.fallback.detach())
        assert not table.requires_grad

    def test_encode_entities_mask(
        self, entities: SymbolTable, encoder: HashedNgramEncoder
    ):
        # Arrange
        texts = {1: EntityText(1, "regulation")}

        # Act
        raw, has_text = encode_entities(entities, texts, encoder)

        # Assert
        assert raw.shape == (3, 64)
        assert has_text.tolist() == [False, True, False]
        assert raw.dtype == torch.float64

    def test_separate_head_tail_roles(self, encoder: HashedNgramEncoder):
        # Arrange
        reducer = TextReducer(64, 4, np.random.default_rng(1), separate_head_tail=True)
        raw = torch.from_numpy(np.stack([encoder.encode("parking penalty")]))
        has_text = torch.tensor([True])

        # Act
        head = reducer(raw, has_text, "head")
        tail = reducer(raw, has_text, "tail")

        # Assert
        assert torch.equal(head, mlp_reduce(reducer.params("head"), raw))
        assert torch.equal(tail, mlp_reduce(reducer.params("tail"), raw))
        assert not torch.equal(head, tail)
        with pytest.raises(ValueError):
            reducer(raw, has_text, "entity")

    def test_shared_map_roles_equal(self, encoder: HashedNgramEncoder):
        # Arrange
        reducer = TextReducer(64, 4, np.random.default_rng(1))
        raw = torch.from_numpy(np.stack([encoder.encode("parking penalty")]))
        has_text = torch.tensor([True])

        # Act
        head = reducer(raw, has_text, "head")
        tail = reducer(raw, has_text, "tail")

        # Assert
        assert torch.equal(head, tail)
