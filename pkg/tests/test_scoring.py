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

import numpy as np
import pytest
import torch

from provlink.config import settings
from provlink.exceptions import NegativeSamplingError, VocabularyError
from provlink.graph import KnowledgeGraph, Triple
from provlink.scoring import (
    DistMultScore,
    EmbeddingModel,
    NegativeSampler,
    Polarity,
    ScoreFnSpec,
    SimplECanonicalScore,
    SimplEScore,
    TransEScore,
    create_score_function,
    margin_loss,
    sample_negatives,
    score_distmult,
    score_simple,
    score_simple_canonical,
    score_transe,
)

from .graphs import legal_graph


def tensor(values) -> torch.Tensor:
    return torch.tensor(values, dtype=torch.float64)


@pytest.mark.unittest
class TestScoreFunctions:
    @pytest.mark.parametrize(
        ["head", "relation", "tail", "p", "expected"],
        [
            ([1.0, 0.0], [0.0, 1.0], [1.0, 1.0], 2, 0.0),
            ([0.0, 0.0], [3.0, 4.0], [0.0, 0.0], 2, 5.0),
            ([0.0, 0.0], [3.0, 4.0], [0.0, 0.0], 1, 7.0),
        ],
    )
    def test_transe(self, head, relation, tail, p, expected):
        # Arrange

        # Act
        score = score_transe(tensor(head), tensor(relation), tensor(tail), p)

        # Assert
        assert score.item() == expected

    def test_distmult(self):
        # Arrange

        # Act
        score = score_distmult(
            tensor([1.0, 2.0]), tensor([1.0, 1.0]), tensor([2.0, 1.0])
        )
        zero = score_distmult(
            tensor([1.0, 2.0]), tensor([0.0, 0.0]), tensor([2.0, 1.0])
        )

        # Assert
        assert score.item() == 4.0
        assert zero.item() == 0.0

    def test_distmult_symmetric(self):
        # Arrange
        generator = torch.Generator().manual_seed(0)
        heads, relations, tails = torch.randn(
            3, 10000, 8, dtype=torch.float64, generator=generator
        )

        # Act
        forward = score_distmult(heads, relations, tails)
        backward = score_distmult(tails, relations, heads)

        # Assert
        assert torch.equal(forward, backward)

    @pytest.mark.parametrize(
        ["head", "relation", "inverse", "tail", "expected"],
        [
            ([1.0, 0.0], [1.0, 1.0], [2.0, 2.0], [0.0, 1.0], 0.0),
            ([1.0, 2.0], [1.0, 1.0], [-1.0, -1.0], [2.0, 1.0], 0.0),
            ([1.0, 2.0], [1.0, 1.0], [1.0, 1.0], [2.0, 1.0], 4.0),
        ],
    )
    def test_simple(self, head, relation, inverse, tail, expected):
        # Arrange

        # Act
        score = score_simple(
            tensor(head), tensor(relation), tensor(inverse), tensor(tail)
        )

        # Assert
        assert score.item() == expected

    def test_printed_simple_is_symmetric(self):
        # Arrange
        function = SimplEScore()
        head, tail = tensor([1.0, 0.0]), tensor([0.0, 2.0])
        relation, inverse = tensor([1.0, 2.0]), tensor([3.0, -1.0])

        # Act
        forward = function(head, relation, inverse, tail)
        backward = function(tail, relation, inverse, head)

        # Assert
        assert forward.item() == backward.item()

    def test_canonical_simple_asymmetric_witness(self):
        # Arrange
        function = SimplECanonicalScore()
        head, tail = tensor([1.0, 0.0, 0.0, 0.0]), tensor([0.0, 0.0, 1.0, 0.0])
        relation, inverse = tensor([1.0, 0.0, 0.0, 0.0]), tensor([0.0, 0.0, 0.0, 0.0])

        # Act
        forward = function(head, relation, inverse, tail)
        backward = function(tail, relation, inverse, head)

        # Assert
        assert forward.item() == 0.5
        assert backward.item() == 0.0

    def test_transe_composition(self):
        # Arrange
        generator = torch.Generator().manual_seed(1)
        head, tail, first, second = (
            torch.randint(-5, 5, (4, 100, 6), generator=generator)
            .to(torch.float64)
            .unbind(0)
        )
        composed = first + second

        # Act
        direct = score_transe(head, composed, tail)
        chained = score_transe(head + first, second, tail)

        # Assert
        assert torch.equal(direct, chained)

    @pytest.mark.parametrize(
        ["spec", "expected_type", "polarity"],
        [
            (ScoreFnSpec("transe", 1), TransEScore, Polarity.LOWER_BETTER),
            (ScoreFnSpec("distmult"), DistMultScore, Polarity.HIGHER_BETTER),
            (ScoreFnSpec("simple"), SimplEScore, Polarity.HIGHER_BETTER),
            (
                ScoreFnSpec("simple-canonical"),
                SimplECanonicalScore,
                Polarity.HIGHER_BETTER,
            ),
        ],
    )
    def test_create(self, spec: ScoreFnSpec, expected_type, polarity: Polarity):
        # Arrange

        # Act
        function = create_score_function(spec)

        # Assert
        assert isinstance(function, expected_type)
        assert function.polarity == polarity

    def test_invalid_spec(self):
        # Arrange

        # Act & Assert
        with pytest.raises(ValueError):
            create_score_function(ScoreFnSpec("rescal"))
        with pytest.raises(ValueError):
            score_simple_canonical(*[tensor([1.0])] * 4)
        with pytest.raises(ValueError):
            ScoreFnSpec("transe", 3)


@pytest.mark.unittest
class TestMarginLoss:
    @pytest.mark.parametrize(
        ["positive", "negative", "margin", "polarity", "expected"],
        [
            (0.0, 10.0, 1.0, Polarity.LOWER_BETTER, 0.0),
            (3.0, 3.0, 0.5, Polarity.LOWER_BETTER, 0.5),
            (3.0, 3.0, 2.0, Polarity.HIGHER_BETTER, 2.0),
            (2.0, 1.0, 1.0, Polarity.LOWER_BETTER, 2.0),
            (2.0, 1.0, 1.0, Polarity.HIGHER_BETTER, 0.0),
        ],
    )
    def test_values(self, positive, negative, margin, polarity, expected):
        # Arrange

        # Act
        loss = margin_loss(tensor([positive]), tensor([negative]), margin, polarity)

        # Assert
        assert loss.item() == expected

    def test_non_positive_margin(self):
        # Arrange

        # Act & Assert
        with pytest.raises(ValueError):
            margin_loss(tensor([0.0]), tensor([1.0]), 0.0, Polarity.LOWER_BETTER)


@pytest.mark.unittest
class TestNegativeSampling:
    def test_forced_tail(self):
        # Arrange
        kg = KnowledgeGraph.from_names([("a", "r", "b")])

        # Act
        negatives = sample_negatives(
            Triple(0, 0, 1), kg, 3, "tail", np.random.default_rng(0)
        )

        # Assert
        assert negatives == [Triple(0, 0, 0)] * 3

    def test_contract(self):
        # Arrange
        kg = legal_graph()

        # Act
        negatives = sample_negatives(
            kg.triples[0], kg, 5, "both", np.random.default_rng(0)
        )

        # Assert
        assert len(negatives) == 5
        assert all(negative not in kg.triple_set for negative in negatives)
        relation = kg.triples[0].relation
        assert all(negative.relation == relation for negative in negatives)

    def test_deterministic(self):
        # Arrange
        kg = legal_graph()
        sampler = NegativeSampler(kg)

        # Act
        first = sampler.corrupt(kg.triple_array, 2, "both", np.random.default_rng(4))
        second = sampler.corrupt(kg.triple_array, 2, "both", np.random.default_rng(4))

        # Assert
        assert np.array_equal(first, second)
        assert first.shape == (2 * len(kg), 3)
        assert not sampler.contains(first).any()

    def test_exhausted(self):
        # Arrange
        kg = KnowledgeGraph.from_names([("a", "r", "b"), ("a", "r", "a")])
        previous = settings.negative_attempts_factor
        settings.negative_attempts_factor = 5

        # Act & Assert
        try:
            with pytest.raises(NegativeSamplingError):
                NegativeSampler(kg).corrupt(
                    kg.triple_array[:1], 1, "tail", np.random.default_rng(0)
                )
        finally:
            settings.negative_attempts_factor = previous


@pytest.mark.unittest
class TestEmbeddingModel:
    def test_candidate_scores_match_score(self):
        # Arrange
        rng = np.random.default_rng(2)
        model = EmbeddingModel(
            torch.from_numpy(rng.normal(size=(5, 3))),
            torch.from_numpy(rng.normal(size=(2, 3))),
            torch.from_numpy(rng.normal(size=(2, 3))),
            SimplEScore(),
        )
        triples = np.array([[1, 0, tail] for tail in range(5)])

        # Act
        candidates = model.candidate_scores(1, 0, "tail")

        # Assert
        assert torch.allclose(candidates, model.score(triples), rtol=0, atol=1e-12)

    def test_out_of_range(self):
        # Arrange
        model = EmbeddingModel(
            torch.zeros(3, 2, dtype=torch.float64),
            torch.zeros(1, 2, dtype=torch.float64),
            torch.zeros(1, 2, dtype=torch.float64),
            TransEScore(),
        )

        # Act & Assert
        with pytest.raises(VocabularyError):
            model.candidate_scores(3, 0, "tail")
        with pytest.raises(ValueError):
            model.candidate_scores(0, 0, "middle")
