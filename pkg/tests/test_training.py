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

import json
from pathlib import Path
from typing import Dict

import numpy as np
import pytest
import torch

from provlink.config import TrainConfig
from provlink.evaluation import KnownTriples, evaluate, export_embeddings
from provlink.exceptions import (
    CheckpointError,
    ConfigError,
    DataError,
    NonFiniteLossError,
)
from provlink.graph import EntityText, KnowledgeGraph
from provlink.scoring import (
    NegativeSampler,
    ScoreFnSpec,
    create_score_function,
    margin_loss,
)
from provlink.text import (
    MlpParams,
    PrecomputedEncoder,
    TextReducer,
    create_encoder,
    encode_entities,
    mlp_reduce,
)
from provlink.training import (
    Checkpoint,
    build_stage2_model,
    gradient_check,
    margin_batch_loss,
    split_supervision,
    train_stage1,
    train_stage2,
)

from .graphs import legal_entity_texts, legal_graph, small_config


@pytest.fixture(scope="module")
def kg():
    yield legal_graph()


@pytest.fixture(scope="module")
def texts(kg: KnowledgeGraph):
    yield legal_entity_texts(kg)


@pytest.fixture(scope="module")
def stage1(kg: KnowledgeGraph, texts: Dict[int, EntityText]):
    yield train_stage1(kg, texts, small_config())


def stage2_loss_closure(model, kg: KnowledgeGraph, config: TrainConfig):
    rng = np.random.default_rng(0)
    positives = torch.from_numpy(np.array(kg.triple_array))
    negatives = torch.from_numpy(
        NegativeSampler(kg).corrupt(kg.triple_array, 1, "both", rng)
    )

    def closure() -> torch.Tensor:
        return margin_batch_loss(
            model, positives, negatives, config.stage2.margin, model.entity_table()
        )

    return closure


@pytest.mark.unittest
class TestTextStage:
    def test_zero_epochs_is_initialization(
        self, kg: KnowledgeGraph, texts: Dict[int, EntityText]
    ):
        # Arrange
        config = small_config(stage1__epochs=0)

        # Act
        checkpoint = train_stage1(kg, texts, config)

        # Assert
        reducer = TextReducer(64, 4, np.random.default_rng([config.seed, 1]))
        assert checkpoint.stage == "text"
        assert checkpoint.epoch == 0
        assert np.array_equal(
            checkpoint.table("model.reducer.weight"), reducer.weight.detach().numpy()
        )
        assert np.array_equal(
            checkpoint.table("model.reducer.fallback"),
            reducer.fallback.detach().numpy(),
        )

    def test_separates_positives_from_negatives(
        self, kg: KnowledgeGraph, texts: Dict[int, EntityText]
    ):
        # Arrange
        config = small_config(stage1__epochs=200)
        negatives = NegativeSampler(kg).corrupt(
            kg.triple_array, 10, "both", np.random.default_rng(1)
        )

        # Act
        model = train_stage1(kg, texts, config).embedding_model()

        # Assert
        positive_scores = model.score(kg.triple_array)
        negative_scores = model.score(negatives)
        assert positive_scores.mean() < negative_scores.mean()

    def test_training_log(
        self, tmp_path: Path, kg: KnowledgeGraph, texts: Dict[int, EntityText]
    ):
        # Arrange
        path = tmp_path / "log.jsonl"

        # Act
        train_stage1(kg, texts, small_config(), log_path=path)

        # Assert
        records = [json.loads(line) for line in path.read_text().splitlines()]
        assert [record["epoch"] for record in records] == [1, 2, 3]
        assert all(record["stage"] == "text" for record in records)
        assert set(records[0]) == {"stage", "epoch", "loss", "lr", "wall_ms"}

    def test_normalized_entities(
        self, kg: KnowledgeGraph, texts: Dict[int, EntityText]
    ):
        # Arrange
        config = small_config(stage1__normalize_entities=True)

        # Act
        model = train_stage1(kg, texts, config).embedding_model()

        # Assert
        norms = torch.linalg.vector_norm(model.entities, dim=-1)
        assert torch.allclose(norms, torch.ones_like(norms), rtol=0, atol=1e-12)

    def test_separate_head_tail_maps(
        self, kg: KnowledgeGraph, texts: Dict[int, EntityText]
    ):
        # Arrange
        config = small_config(stage1__separate_head_tail=True)
        encoder = create_encoder(config.encoder)
        raw, has_text = encode_entities(kg.vocabulary.entities, texts, encoder)

        # Act
        checkpoint = train_stage1(kg, texts, config)

        # Assert
        reducer = TextReducer(encoder.raw_dim, 4, np.random.default_rng(0), True)
        reducer.load_state_dict(
            {
                name: torch.from_numpy(table)
                for name, table in checkpoint.prefixed("model.reducer.")
            }
        )
        with torch.no_grad():
            heads = reducer(raw, has_text, "head")
            tails = reducer(raw, has_text, "tail")
        assert torch.allclose(
            torch.from_numpy(checkpoint.features), heads, rtol=0, atol=1e-12
        )
        assert torch.allclose(
            torch.from_numpy(checkpoint.tail_features), tails, rtol=0, atol=1e-12
        )
        model = checkpoint.embedding_model()
        index = torch.from_numpy(np.array(kg.triple_array, dtype=np.int64))
        expected = model.score_function(
            heads[index[:, 0]],
            model.relations[index[:, 1]],
            model.inverses[index[:, 1]],
            tails[index[:, 2]],
        )
        scores = model.score(kg.triple_array)
        assert torch.allclose(scores, expected, rtol=0, atol=1e-12)

    def test_shared_map_has_no_tail_table(self, stage1: Checkpoint):
        # Arrange

        # Act
        model = stage1.embedding_model()

        # Assert
        assert stage1.tail_features is None
        assert model.tail_entities is None
        assert model.tails is model.entities

    def test_non_finite_loss(self, kg: KnowledgeGraph, texts: Dict[int, EntityText]):
        # Arrange
        names = kg.vocabulary.entities
        encoder = PrecomputedEncoder(
            {names.name(index): np.full(4, np.nan) for index in texts}, 4
        )

        # Act & Assert
        with pytest.raises(NonFiniteLossError) as error:
            train_stage1(kg, texts, small_config(), encoder=encoder)
        assert (error.value.stage, error.value.epoch, error.value.batch) == (
            "text",
            1,
            0,
        )

    def test_empty_graph(self, kg: KnowledgeGraph, texts: Dict[int, EntityText]):
        # Arrange

        # Act & Assert
        with pytest.raises(DataError):
            train_stage1(kg.subgraph([]), texts, small_config())


@pytest.mark.unittest
class TestGraphStage:
    @pytest.mark.parametrize("gnn", ["gat", "rgcn"])
    def test_zero_stack_reproduces_text_scores(
        self, kg: KnowledgeGraph, stage1: Checkpoint, gnn: str
    ):
        # Arrange
        config = small_config(stage2__gnn=gnn, stage2__init="zero", stage2__epochs=0)

        # Act
        checkpoint = train_stage2(kg, stage1, config)

        # Assert
        text_scores = stage1.embedding_model().score(kg.triple_array)
        graph_scores = checkpoint.embedding_model().score(kg.triple_array)
        assert torch.equal(text_scores, graph_scores)

    @pytest.mark.parametrize("gnn", ["gat", "rgcn"])
    def test_residual_init_reproduces_text_scores(
        self, kg: KnowledgeGraph, stage1: Checkpoint, gnn: str
    ):
        # Arrange
        config = small_config(
            stage2__gnn=gnn, stage2__init="residual", stage2__epochs=0
        )

        # Act
        checkpoint = train_stage2(kg, stage1, config)

        # Assert
        first = "weight" if gnn == "gat" else "self_weight"
        assert np.any(checkpoint.tables[f"model.stack.layers.0.{first}"] != 0)
        assert not np.any(checkpoint.tables[f"model.stack.layers.1.{first}"])
        text_scores = stage1.embedding_model().score(kg.triple_array)
        graph_scores = checkpoint.embedding_model().score(kg.triple_array)
        assert torch.equal(text_scores, graph_scores)

    def test_deterministic(
        self, tmp_path: Path, kg: KnowledgeGraph, texts: Dict[int, EntityText]
    ):
        # Arrange
        config = small_config()
        known = KnownTriples.from_graphs(kg)

        # Act
        first = train_stage2(kg, train_stage1(kg, texts, config), config)
        second = train_stage2(kg, train_stage1(kg, texts, config), config)

        # Assert
        assert first.to_bytes() == second.to_bytes()
        first_report = evaluate(kg.triples, first.embedding_model(), known=known)
        second_report = evaluate(kg.triples, second.embedding_model(), known=known)
        assert first_report == second_report

    @pytest.mark.parametrize(
        ["features", "gnn"],
        [("text", "gat"), ("text", "rgcn"), ("random", "gat"), ("random", "none")],
    )
    def test_resume_equals_uninterrupted(
        self, kg: KnowledgeGraph, stage1: Checkpoint, features: str, gnn: str
    ):
        # Arrange
        config = small_config(
            stage2__features=features, stage2__gnn=gnn, stage2__epochs=4
        )
        text_checkpoint = stage1 if features == "text" else None

        # Act
        uninterrupted = train_stage2(kg, text_checkpoint, config)
        partial = train_stage2(kg, text_checkpoint, config, until=2)
        resumed = train_stage2(kg, text_checkpoint, config, resume=partial)

        # Assert
        assert partial.epoch == 2
        assert resumed == uninterrupted

    def test_text_resume_equals_uninterrupted(
        self, kg: KnowledgeGraph, texts: Dict[int, EntityText]
    ):
        # Arrange
        config = small_config(stage1__epochs=4)

        # Act
        uninterrupted = train_stage1(kg, texts, config)
        partial = train_stage1(kg, texts, config, until=1)
        resumed = train_stage1(kg, texts, config, resume=partial)

        # Assert
        assert resumed == uninterrupted

    def test_joint_text_training(
        self, kg: KnowledgeGraph, texts: Dict[int, EntityText], stage1: Checkpoint
    ):
        # Arrange
        config = small_config(stage2__freeze_text=False)

        # Act
        checkpoint = train_stage2(kg, stage1, config, texts=texts)

        # Assert
        assert "model.reducer.weight" in checkpoint.tables
        assert not np.array_equal(checkpoint.features, stage1.features)

    def test_random_features_without_text_checkpoint(self, kg: KnowledgeGraph):
        # Arrange
        config = small_config(stage2__features="random", stage2__gnn="none")

        # Act
        checkpoint = train_stage2(kg, None, config)

        # Assert
        assert checkpoint.stage == "graph"
        assert checkpoint.embedding_model().entities.shape == (kg.n_entities, 4)

    def test_split_supervision_disabled(self, kg: KnowledgeGraph):
        # Arrange
        rng = np.random.default_rng(0)
        state = rng.bit_generator.state

        # Act
        supervision, messages = split_supervision(kg.triple_array, 0.0, rng)

        # Assert
        assert supervision is kg.triple_array
        assert messages is None
        assert rng.bit_generator.state == state

    @pytest.mark.parametrize(
        ["fraction", "expected"],
        [
            (0.5, 6),
            (0.01, 1),
            (0.99, 10),
        ],
    )
    def test_split_supervision_partitions(
        self, kg: KnowledgeGraph, fraction: float, expected: int
    ):
        # Arrange
        train = kg.triple_array

        # Act
        supervision, messages = split_supervision(
            train, fraction, np.random.default_rng(1)
        )

        # Assert
        assert len(supervision) == expected
        assert len(supervision) + len(messages) == len(train)
        rows = {tuple(row) for row in np.concatenate([supervision, messages])}
        assert rows == {tuple(row) for row in train}

    @pytest.mark.parametrize("gnn", ["gat", "rgcn"])
    def test_supervision_fraction_resume_equals_uninterrupted(
        self, kg: KnowledgeGraph, stage1: Checkpoint, gnn: str
    ):
        # Arrange
        config = small_config(
            stage2__gnn=gnn, stage2__supervision_fraction=0.5, stage2__epochs=4
        )

        # Act
        uninterrupted = train_stage2(kg, stage1, config)
        partial = train_stage2(kg, stage1, config, until=2)
        resumed = train_stage2(kg, stage1, config, resume=partial)

        # Assert
        assert resumed == uninterrupted
        full_graph = small_config(stage2__gnn=gnn, stage2__epochs=4)
        assert uninterrupted != train_stage2(kg, stage1, full_graph)

    def test_early_stopping_log(self, tmp_path: Path, kg: KnowledgeGraph, stage1):
        # Arrange
        config = small_config(
            stage2__epochs=20,
            stage2__early_stopping=True,
            stage2__eval_every=1,
            stage2__patience=1,
        )
        path = tmp_path / "log.jsonl"

        # Act
        checkpoint = train_stage2(kg, stage1, config, log_path=path, dev=kg.triples[:3])

        # Assert
        records = path.read_text().splitlines()
        assert len(records) == checkpoint.epoch
        assert 1 <= checkpoint.epoch <= 20
        assert 0 <= checkpoint.best_epoch <= checkpoint.epoch

    def test_early_stopped_checkpoint_not_resumable(
        self, kg: KnowledgeGraph, stage1: Checkpoint
    ):
        # Arrange
        config = small_config(
            stage2__epochs=6,
            stage2__early_stopping=True,
            stage2__eval_every=2,
        )
        checkpoint = train_stage2(kg, stage1, config, dev=kg.triples[:3])
        reloaded = Checkpoint.from_bytes(checkpoint.to_bytes())

        # Act & Assert
        assert reloaded.best_epoch == checkpoint.best_epoch
        assert checkpoint.best_epoch is not None
        with pytest.raises(CheckpointError):
            train_stage2(kg, stage1, config, resume=reloaded, dev=kg.triples[:3])

    def test_best_epoch_scores_restored(self, kg: KnowledgeGraph, stage1: Checkpoint):
        # Arrange
        config = small_config(
            stage2__epochs=6,
            stage2__early_stopping=True,
            stage2__eval_every=2,
        )
        dev = kg.triples[:3]
        known = KnownTriples.from_graphs(kg)

        # Act
        checkpoint = train_stage2(kg, stage1, config, dev=dev)
        rerun = train_stage2(
            kg, stage1, small_config(stage2__epochs=checkpoint.best_epoch)
        )

        # Assert
        restored = evaluate(dev, checkpoint.embedding_model(), known=known)
        expected = evaluate(dev, rerun.embedding_model(), known=known)
        assert restored == expected

    def test_partial_early_stopping_run_is_resumable(
        self, kg: KnowledgeGraph, stage1: Checkpoint
    ):
        # Arrange
        config = small_config(
            stage2__epochs=6,
            stage2__early_stopping=True,
            stage2__eval_every=2,
            stage2__patience=5,
        )

        # Act
        partial = train_stage2(kg, stage1, config, until=2, dev=kg.triples[:3])
        resumed = train_stage2(kg, stage1, config, resume=partial, dev=kg.triples[:3])

        # Assert
        assert partial.best_epoch is None
        assert partial.epoch == 2
        assert resumed.epoch == 6

    @pytest.mark.parametrize(
        ["changes", "error"],
        [
            ({"stage1__dim": 6}, ConfigError),
            ({"stage2__freeze_text": False}, ConfigError),
        ],
    )
    def test_invalid_start(
        self, kg: KnowledgeGraph, stage1: Checkpoint, changes, error
    ):
        # Arrange
        config = small_config(**changes)

        # Act & Assert
        with pytest.raises(error):
            train_stage2(kg, stage1, config)

    def test_text_features_need_text_checkpoint(self, kg: KnowledgeGraph):
        # Arrange

        # Act & Assert
        with pytest.raises(ConfigError):
            train_stage2(kg, None, small_config())

    def test_separate_head_tail_checkpoint(
        self, tmp_path: Path, kg: KnowledgeGraph, texts: Dict[int, EntityText]
    ):
        # Arrange
        separate = train_stage1(
            kg, texts, small_config(stage1__separate_head_tail=True)
        )

        # Act & Assert
        with pytest.raises(ConfigError):
            train_stage2(kg, separate, small_config())
        with pytest.raises(ConfigError):
            export_embeddings(separate, "text", tmp_path / "embeddings.tsv")
        random_features = train_stage2(
            kg, separate, small_config(stage2__features="random")
        )
        assert random_features.tail_features is None

    def test_graph_checkpoint_is_not_a_text_checkpoint(
        self, kg: KnowledgeGraph, stage1: Checkpoint
    ):
        # Arrange
        graph_checkpoint = train_stage2(kg, stage1, small_config())

        # Act & Assert
        with pytest.raises(CheckpointError):
            train_stage2(kg, graph_checkpoint, small_config())
        with pytest.raises(CheckpointError):
            train_stage1(kg, {}, small_config(), resume=graph_checkpoint)


@pytest.mark.unittest
class TestCheckpoint:
    def test_bytes_round_trip(self, stage1: Checkpoint):
        # Arrange
        data = stage1.to_bytes()

        # Act
        loaded = Checkpoint.from_bytes(data)

        # Assert
        assert loaded.to_bytes() == data
        assert loaded.vocabulary == stage1.vocabulary
        assert loaded.config == stage1.config

    def test_save_and_load(self, tmp_path: Path, kg: KnowledgeGraph, stage1):
        # Arrange
        checkpoint = train_stage2(kg, stage1, small_config())
        path = tmp_path / "graph.ckpt"

        # Act
        checkpoint.save(path)
        loaded = Checkpoint.load(path)

        # Assert
        assert loaded == checkpoint
        assert torch.equal(
            loaded.embedding_model().entities, checkpoint.embedding_model().entities
        )
        assert loaded.graph().triples == kg.triples

    @pytest.mark.parametrize(
        "corrupt",
        [
            lambda data: b"XXXX" + data[4:],
            lambda data: data[:8],
            lambda data: data[:-8],
            lambda data: data + b"\x00",
            lambda data: data[:11] + b"{" + data[12:],
        ],
    )
    def test_corrupt(self, stage1: Checkpoint, corrupt):
        # Arrange
        data = corrupt(stage1.to_bytes())

        # Act & Assert
        with pytest.raises(CheckpointError):
            Checkpoint.from_bytes(data)

    def test_missing_file(self, tmp_path: Path):
        # Arrange

        # Act & Assert
        with pytest.raises(CheckpointError):
            Checkpoint.load(tmp_path / "missing.ckpt")

    def test_missing_table(self, stage1: Checkpoint):
        # Arrange

        # Act & Assert
        with pytest.raises(CheckpointError):
            stage1.table("model.stack.layers.0.weight")

    def test_text_and_final_embeddings_of_text_stage(self, stage1: Checkpoint):
        # Arrange

        # Act
        text = stage1.embedding_model("text")
        final = stage1.embedding_model("final")

        # Assert
        assert torch.equal(text.entities, final.entities)
        with pytest.raises(ValueError):
            stage1.embedding_model("other")


@pytest.mark.unittest
class TestGradientCheck:
    def test_quadratic(self):
        # Arrange
        x = torch.tensor([1.0, 2.0], dtype=torch.float64, requires_grad=True)

        # Act
        report = gradient_check(lambda: (x**2).sum(), {"x": x})

        # Assert
        assert report.passed
        assert report.n_checked == 2
        assert report.max_relative_error < 1e-8

    def test_corrupted_gradient_detected(self):
        # Arrange
        x = torch.tensor([1.0, 2.0], dtype=torch.float64, requires_grad=True)
        corrupted = {"x": torch.tensor([2.0, 0.0], dtype=torch.float64)}

        # Act
        report = gradient_check(lambda: (x**2).sum(), {"x": x}, gradients=corrupted)

        # Assert
        assert not report.passed
        assert report.failing == [("x", 1)]

    def test_small_gradient_checked_relatively(self):
        # Arrange
        x = torch.tensor([1.0, 1.0], dtype=torch.float64, requires_grad=True)
        corrupted = {"x": torch.tensor([1e-3, 1e-3 * (1 + 5e-4)], dtype=torch.float64)}

        # Act
        report = gradient_check(
            lambda: 5e-4 * (x**2).sum(), {"x": x}, gradients=corrupted
        )

        # Assert
        assert report.failing == [("x", 1)]
        assert report.max_relative_error == pytest.approx(5e-4, rel=1e-3)
        assert report.max_absolute_error == pytest.approx(5e-7, rel=1e-3)

    def test_small_exact_gradient_passes(self):
        # Arrange
        x = torch.tensor([0.3, -0.7, 1.1], dtype=torch.float64, requires_grad=True)

        # Act
        report = gradient_check(lambda: 1e-5 * (x**3).sum(), {"x": x})

        # Assert
        assert report.passed
        assert report.n_checked == 3
        assert report.max_relative_error < 1e-6

    def test_parameters_restored(self):
        # Arrange
        x = torch.tensor([0.3, -0.7, 1.1], dtype=torch.float64, requires_grad=True)

        # Act
        gradient_check(lambda: (x**3).sum(), {"x": x})

        # Assert
        assert x.tolist() == [0.3, -0.7, 1.1]

    @pytest.mark.parametrize(
        "variant", ["transe", "distmult", "simple", "simple-canonical"]
    )
    def test_score_functions_with_margin_loss(self, variant: str):
        # Arrange
        rng = np.random.default_rng(3)
        params = {
            name: torch.from_numpy(rng.normal(size=(6, 4))).requires_grad_()
            for name in ("head", "relation", "inverse", "tail", "negative")
        }
        function = create_score_function(ScoreFnSpec(variant))

        def closure() -> torch.Tensor:
            positive = function(
                params["head"], params["relation"], params["inverse"], params["tail"]
            )
            negative = function(
                params["head"],
                params["relation"],
                params["inverse"],
                params["negative"],
            )
            return margin_loss(positive, negative, 1.0, function.polarity).sum()

        # Act
        report = gradient_check(closure, params)

        # Assert
        assert report.passed
        assert report.n_checked > 0

    def test_mlp_reduction(self):
        # Arrange
        rng = np.random.default_rng(4)
        weight = torch.from_numpy(rng.normal(size=(3, 5))).requires_grad_()
        bias = torch.from_numpy(rng.normal(size=3)).requires_grad_()
        raw = torch.from_numpy(rng.normal(size=(4, 5)))

        def closure() -> torch.Tensor:
            return (mlp_reduce(MlpParams(weight, bias), raw) ** 2).sum()

        # Act
        report = gradient_check(closure, {"weight": weight, "bias": bias})

        # Assert
        assert report.passed
        assert report.n_checked > 0

    @pytest.mark.parametrize(
        ["gnn", "features"],
        [("gat", "text"), ("rgcn", "text"), ("gat", "random")],
    )
    def test_full_graph_stage_loss(
        self, kg: KnowledgeGraph, texts: Dict[int, EntityText], gnn: str, features
    ):
        # Arrange
        config = small_config(
            stage1__epochs=0,
            stage2__gnn=gnn,
            stage2__depth=2,
            stage2__features=features,
        )
        stage1 = train_stage1(kg, texts, config)
        model = build_stage2_model(
            kg, stage1, config, np.random.default_rng([config.seed, 2]), texts
        )

        # Act
        report = gradient_check(
            stage2_loss_closure(model, kg, config), dict(model.named_parameters())
        )

        # Assert
        assert report.passed
        assert report.n_checked > 0
