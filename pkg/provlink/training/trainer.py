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

"""Two stage training. Stage 1 ("text") tunes the text reduction, fallback
vector and relation vectors with the TransE objective on mini-batches.
Stage 2 ("graph") trains the graph layer stack on the full graph with
relation vectors initialized from stage 1."""

import json
import logging
import math
import time
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from tqdm import tqdm
from upath import UPath

from provlink.config import OptimizerConfig, TrainConfig, settings
from provlink.evaluation.ranking import KnownTriples, evaluate
from provlink.exceptions import (
    CheckpointError,
    ConfigError,
    DataError,
    NonFiniteLossError,
)
from provlink.file import open_file
from provlink.gnn import LayerStack, MessageGraph
from provlink.graph import EntityText, KnowledgeGraph, Triple
from provlink.parameters import as_tensor, translational_uniform
from provlink.scoring import (
    NegativeSampler,
    RelationEmbeddings,
    ScoreFnSpec,
    TransEScore,
    create_score_function,
    margin_loss,
)
from provlink.text import TextEncoder, TextReducer, create_encoder, encode_entities
from provlink.training.checkpoint import (
    FEATURES,
    MODEL_PREFIX,
    OPTIMIZER_PREFIX,
    TAIL_FEATURES,
    TRIPLES,
    Checkpoint,
)
from provlink.training.model import LinkModel

logger = logging.getLogger(__name__)

PathLike = Union[str, Path, UPath]


class TrainingLog:
    def __init__(self, path: Optional[PathLike] = None, append: bool = False):
        """JSON lines log with one record per epoch. Without path records
        are dropped.

        Parameters
        ----------
        path: Optional[PathLike] = None
            File to write to.
        append: bool = False
            If to append to an existing log, used when resuming.
        """
        self._file = None
        if path is not None:
            self._file = open_file(path, "a" if append else "w").open()

    def write(
        self, stage: str, epoch: int, loss: float, lr: float, wall_ms: float
    ) -> None:
        if self._file is None:
            return
        record = {
            "stage": stage,
            "epoch": epoch,
            "loss": loss,
            "lr": lr,
            "wall_ms": round(wall_ms, 3),
        }
        self._file.write(json.dumps(record) + "\n")
        self._file.flush()

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()


def create_optimizer(
    parameters, lr: float, config: OptimizerConfig
) -> torch.optim.Optimizer:
    if config.name == "adam":
        return torch.optim.Adam(
            parameters, lr=lr, betas=(config.beta1, config.beta2), eps=config.eps
        )
    if config.name == "sgd":
        return torch.optim.SGD(parameters, lr=lr)
    raise ConfigError(f"Unknown optimizer {config.name}.")


def warmup_factor(step: int, warmup_steps: int) -> float:
    """Linear warm-up factor of 0-based step, constant 1 after warmup_steps."""
    return min(1.0, (step + 1) / max(1, warmup_steps))


def margin_batch_loss(
    model: LinkModel,
    positives: torch.Tensor,
    negatives: torch.Tensor,
    margin: float,
    table: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Return mean margin loss of positives against their negatives. The
    negatives of one positive are adjacent rows."""
    n = negatives.shape[0] // max(positives.shape[0], 1)
    positive_scores = model.score(positives, table).repeat_interleave(n)
    negative_scores = model.score(negatives, table)
    return margin_loss(
        positive_scores,
        negative_scores,
        margin,
        model.score_function.polarity,
    ).mean()


def capture(
    stage: str,
    epoch: int,
    config: TrainConfig,
    kg: KnowledgeGraph,
    model: LinkModel,
    optimizer: Optional[torch.optim.Optimizer],
    rng: np.random.Generator,
    best_epoch: Optional[int] = None,
) -> Checkpoint:
    """Return checkpoint of model, optimizer moments and generator state.
    Separate head and tail maps store their tail role features as a second
    table."""
    tables: Dict[str, np.ndarray] = {}
    with torch.no_grad():
        for name, role in ((FEATURES, "head"), (TAIL_FEATURES, "tail")):
            if role == "head" or model.separate_roles:
                features = model.features(role=role).detach()
                tables[name] = np.array(features.numpy(), dtype=np.float64)
    for name, values in model.state_dict().items():
        tables[MODEL_PREFIX + name] = np.array(values.numpy(), dtype=np.float64)
    if optimizer is not None:
        for name, param in model.named_parameters():
            for key, value in sorted(optimizer.state.get(param, {}).items()):
                if isinstance(value, torch.Tensor):
                    tables[f"{OPTIMIZER_PREFIX}{name}.{key}"] = np.array(
                        value.detach().double().numpy()
                    )
    tables[TRIPLES] = kg.triple_array.astype(np.float64)
    return Checkpoint(
        stage,
        epoch,
        config,
        kg.vocabulary,
        tables,
        rng.bit_generator.state,
        best_epoch,
    )


def restore(
    checkpoint: Checkpoint,
    model: LinkModel,
    optimizer: torch.optim.Optimizer,
    rng: np.random.Generator,
) -> None:
    """Load parameters, optimizer moments and generator state into a freshly
    built model, optimizer and generator."""
    values = {
        name: as_tensor(table) for name, table in checkpoint.prefixed(MODEL_PREFIX)
    }
    try:
        model.load_state_dict(values)
    except RuntimeError as exception:
        raise CheckpointError(
            f"Checkpoint does not match model: {exception}"
        ) from exception
    names = {id(param): name for name, param in model.named_parameters()}
    params = [param for group in optimizer.param_groups for param in group["params"]]
    state = {}
    for index, param in enumerate(params):
        prefix = f"{OPTIMIZER_PREFIX}{names[id(param)]}."
        entries = {}
        for key, table in checkpoint.prefixed(prefix):
            if key == "step":
                entries[key] = torch.tensor(float(table), dtype=torch.float32)
            else:
                entries[key] = as_tensor(table)
        if entries:
            state[index] = entries
    optimizer.load_state_dict(
        {"state": state, "param_groups": optimizer.state_dict()["param_groups"]}
    )
    rng.bit_generator.state = checkpoint.rng_state
    with torch.no_grad():
        if model.fixed_features is not None:
            model.fixed_features.copy_(as_tensor(checkpoint.features))


def _training_array(kg: KnowledgeGraph) -> np.ndarray:
    if len(kg) == 0:
        raise DataError("No training triples.")
    return np.array(kg.triple_array)


def _check_finite(
    loss: torch.Tensor, stage: str, epoch: int, batch: Optional[int] = None
) -> None:
    if not torch.isfinite(loss):
        raise NonFiniteLossError(stage, epoch, batch)


def _check_resume(resume: Checkpoint, stage: str, kg: KnowledgeGraph) -> None:
    if resume.stage != stage:
        raise CheckpointError(
            f"Can not resume {stage} training from a {resume.stage} checkpoint."
        )
    if resume.best_epoch is not None:
        raise CheckpointError(
            f"Checkpoint holds epoch {resume.best_epoch} restored by early "
            "stopping and can not be resumed."
        )
    if resume.vocabulary != kg.vocabulary or not np.array_equal(
        resume.triples, kg.triple_array
    ):
        raise CheckpointError("Checkpoint was trained on another graph.")


def _log_every(epochs: int) -> int:
    return max(1, epochs // 10)


def train_stage1(
    kg_train: KnowledgeGraph,
    texts: Dict[int, EntityText],
    config: TrainConfig,
    encoder: Optional[TextEncoder] = None,
    resume: Optional[Checkpoint] = None,
    until: Optional[int] = None,
    log_path: Optional[PathLike] = None,
) -> Checkpoint:
    """Train text side parameters and relation vectors with the TransE
    margin objective.

    Parameters
    ----------
    kg_train: KnowledgeGraph
        Training graph. Its vocabulary defines the feature table rows.
    texts: Dict[int, EntityText]
        Entity descriptions.
    config: TrainConfig
        Hyperparameters, stage1 section is used.
    encoder: Optional[TextEncoder] = None
        Encoder to use instead of the one described by config.
    resume: Optional[Checkpoint] = None
        Text checkpoint to continue from.
    until: Optional[int] = None
        Stop after this many epochs instead of config epochs.
    log_path: Optional[PathLike] = None
        JSON lines training log.

    Returns
    ----------
    Checkpoint
        Text checkpoint with the trained feature table materialized.
    """
    stage_config = config.stage1
    train = _training_array(kg_train)
    rng = np.random.default_rng([config.seed, 1])
    encoder = encoder if encoder is not None else create_encoder(config.encoder)
    reducer = TextReducer(
        encoder.raw_dim, config.dim, rng, stage_config.separate_head_tail
    )
    relations = RelationEmbeddings(kg_train.n_relations, config.dim, rng)
    raw, has_text = encode_entities(kg_train.vocabulary.entities, texts, encoder)
    model = LinkModel(
        MessageGraph(kg_train),
        relations,
        TransEScore(stage_config.p_norm),
        normalize_entities=stage_config.normalize_entities,
    ).use_text(reducer, raw, has_text)
    optimizer = create_optimizer(model.parameters(), stage_config.lr, config.optimizer)
    start = 0
    if resume is not None:
        _check_resume(resume, "text", kg_train)
        restore(resume, model, optimizer, rng)
        start = resume.epoch
    until = stage_config.epochs if until is None else min(until, stage_config.epochs)
    sampler = NegativeSampler(kg_train)
    n_batches = math.ceil(len(train) / stage_config.batch_size)
    warmup_steps = int(stage_config.warmup_fraction * stage_config.epochs * n_batches)
    n = stage_config.negatives_per_positive
    logger.info(
        f"Training text stage on {len(train)} triples, epochs {start} to {until}, "
        f"{n_batches} batches per epoch"
    )
    with TrainingLog(log_path, append=resume is not None) as log:
        for epoch in tqdm(
            range(start, until), desc="text", disable=not settings.progress
        ):
            started = time.perf_counter()
            order = rng.permutation(len(train))
            total = 0.0
            lr = stage_config.lr
            for batch in range(n_batches):
                lr = stage_config.lr * warmup_factor(
                    epoch * n_batches + batch, warmup_steps
                )
                for group in optimizer.param_groups:
                    group["lr"] = lr
                begin = batch * stage_config.batch_size
                rows = train[order[begin : begin + stage_config.batch_size]]
                negatives = sampler.corrupt(rows, n, stage_config.negative_mode, rng)
                loss = margin_batch_loss(
                    model,
                    torch.from_numpy(rows),
                    torch.from_numpy(negatives),
                    stage_config.margin,
                )
                _check_finite(loss, "text", epoch + 1, batch)
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                total += loss.item() * len(rows)
            epoch_loss = total / len(train)
            elapsed = 1000 * (time.perf_counter() - started)
            log.write("text", epoch + 1, epoch_loss, lr, elapsed)
            if (epoch + 1) % _log_every(until) == 0 or epoch + 1 == until:
                logger.info(f"Text epoch {epoch + 1}: loss {epoch_loss:.6f}")
    return capture("text", max(start, until), config, kg_train, model, optimizer, rng)


def _stage2_features(
    model: LinkModel,
    kg_train: KnowledgeGraph,
    stage1: Optional[Checkpoint],
    config: TrainConfig,
    rng: np.random.Generator,
    texts: Optional[Dict[int, EntityText]],
    encoder: Optional[TextEncoder],
) -> None:
    stage_config = config.stage2
    if stage_config.features == "random":
        table = translational_uniform(rng, (kg_train.n_entities, config.dim))
        model.use_table(as_tensor(table), trainable=True)
        return
    if stage1 is None:
        raise ConfigError("Text features require a text stage checkpoint.")
    if stage1.tail_features is not None:
        raise ConfigError(
            "Text checkpoint has separate head and tail features, the graph stage "
            "needs one feature per entity. Use random features or a text stage "
            "without separate_head_tail."
        )
    if stage_config.freeze_text:
        model.use_table(as_tensor(stage1.features))
        return
    if texts is None:
        raise ConfigError("Training text features jointly requires entity texts.")
    encoder = encoder if encoder is not None else create_encoder(config.encoder)
    reducer = TextReducer(
        encoder.raw_dim,
        config.dim,
        np.random.default_rng(0),
    )
    values = {
        name: as_tensor(table)
        for name, table in stage1.prefixed(MODEL_PREFIX + "reducer.")
    }
    try:
        reducer.load_state_dict(values)
    except RuntimeError as exception:
        raise CheckpointError(
            f"Text checkpoint does not match encoder: {exception}"
        ) from exception
    raw, has_text = encode_entities(kg_train.vocabulary.entities, texts, encoder)
    model.use_text(reducer, raw, has_text)


def build_stage2_model(
    kg_train: KnowledgeGraph,
    stage1: Optional[Checkpoint],
    config: TrainConfig,
    rng: np.random.Generator,
    texts: Optional[Dict[int, EntityText]] = None,
    encoder: Optional[TextEncoder] = None,
) -> LinkModel:
    """Return fresh stage 2 model. Relation vectors are copied from the text
    checkpoint when given; the layer stack is drawn from rng. Init "zero"
    zeroes the stack and "residual" its last layer, both start from the
    input features."""
    stage_config = config.stage2
    if stage1 is not None:
        if stage1.stage != "text":
            raise CheckpointError("Graph stage must start from a text checkpoint.")
        if stage1.config.dim != config.dim:
            raise ConfigError(
                f"Text checkpoint dimension {stage1.config.dim} does not match "
                f"configured dimension {config.dim}."
            )
        if stage1.vocabulary != kg_train.vocabulary:
            raise CheckpointError("Text checkpoint has another vocabulary.")
    if stage1 is not None:
        relations = RelationEmbeddings(
            kg_train.n_relations, config.dim, np.random.default_rng(0)
        )
        relations.load_state_dict(
            {
                name: as_tensor(table)
                for name, table in stage1.prefixed(MODEL_PREFIX + "relations.")
            }
        )
    else:
        relations = RelationEmbeddings(kg_train.n_relations, config.dim, rng)
    stack = None
    if stage_config.gnn != "none":
        stack = LayerStack(
            stage_config.gnn,
            stage_config.depth,
            config.dim,
            kg_train.n_relations,
            rng,
            stage_config.heads,
            stage_config.leaky_slope,
        )
        if stage_config.init == "zero":
            stack.zero_()
        elif stage_config.init == "residual":
            stack.layer(stack.depth - 1).zero_()
    model = LinkModel(
        MessageGraph(kg_train),
        relations,
        create_score_function(ScoreFnSpec(stage_config.score, stage_config.p_norm)),
        stack,
        stage_config.normalize_entities,
    )
    _stage2_features(model, kg_train, stage1, config, rng, texts, encoder)
    return model


def split_supervision(
    train: np.ndarray, fraction: float, rng: np.random.Generator
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Split training triples into supervision triples scored by the loss and
    message triples the graph layers pass over.

    Parameters
    ----------
    train: np.ndarray
        (n, 3) training triples.
    fraction: float
        Share of triples drawn as supervision. With 0 every triple is both
        supervision and message and rng is not used.
    rng: np.random.Generator
        Generator drawing the supervision triples.

    Returns
    ----------
    Tuple[np.ndarray, Optional[np.ndarray]]
        Supervision triples and message triples, the latter None when all
        triples pass messages.
    """
    if fraction == 0 or len(train) < 2:
        return train, None
    count = min(max(1, round(fraction * len(train))), len(train) - 1)
    supervised = np.zeros(len(train), dtype=bool)
    supervised[rng.permutation(len(train))[:count]] = True
    return train[supervised], train[~supervised]


def _dev_mrr(
    model: LinkModel, dev: Sequence[Triple], known: Optional[KnownTriples]
) -> float:
    return evaluate(dev, model.embedding_model(), "filtered", "both", known).mrr


def _copy_state(model: LinkModel) -> Dict[str, torch.Tensor]:
    return {name: values.clone() for name, values in model.state_dict().items()}


def train_stage2(
    kg_train: KnowledgeGraph,
    stage1: Optional[Checkpoint],
    config: TrainConfig,
    texts: Optional[Dict[int, EntityText]] = None,
    encoder: Optional[TextEncoder] = None,
    resume: Optional[Checkpoint] = None,
    until: Optional[int] = None,
    log_path: Optional[PathLike] = None,
    dev: Optional[Sequence[Triple]] = None,
    known: Optional[KnownTriples] = None,
) -> Checkpoint:
    """Train the graph stage with full graph forward passes, negatives
    resampled every epoch. With a supervision fraction the training triples
    are split anew every epoch into triples scored by the loss and triples
    messages pass over.

    With early stopping the dev MRR is measured before training and every
    eval_every epochs. When training stops early or reaches the configured
    epochs, the parameters of the best measurement are restored and its
    epoch recorded as best_epoch. Such a checkpoint can not be resumed.

    Parameters
    ----------
    kg_train: KnowledgeGraph
        Training graph, also the graph messages are passed over.
    stage1: Optional[Checkpoint]
        Text checkpoint. Only optional for random features, then relation
        vectors are drawn fresh.
    config: TrainConfig
        Hyperparameters, stage2 section is used.
    texts: Optional[Dict[int, EntityText]] = None
        Entity descriptions, required when text is not frozen.
    encoder: Optional[TextEncoder] = None
        Encoder to use instead of the one described by config.
    resume: Optional[Checkpoint] = None
        Graph checkpoint to continue from.
    until: Optional[int] = None
        Stop after this many epochs instead of config epochs.
    log_path: Optional[PathLike] = None
        JSON lines training log.
    dev: Optional[Sequence[Triple]] = None
        Queries for early stopping.
    known: Optional[KnownTriples] = None
        Triples filtered out when ranking dev queries.

    Returns
    ----------
    Checkpoint
        Graph checkpoint.
    """
    stage_config = config.stage2
    train = _training_array(kg_train)
    rng = np.random.default_rng([config.seed, 2])
    model = build_stage2_model(kg_train, stage1, config, rng, texts, encoder)
    optimizer = create_optimizer(model.parameters(), stage_config.lr, config.optimizer)
    start = 0
    if resume is not None:
        _check_resume(resume, "graph", kg_train)
        restore(resume, model, optimizer, rng)
        start = resume.epoch
    until = stage_config.epochs if until is None else min(until, stage_config.epochs)
    early_stopping = stage_config.early_stopping
    if early_stopping and not dev:
        logger.warning("Early stopping requested without dev queries, disabled")
        early_stopping = False
    if early_stopping and resume is not None:
        logger.warning("Early stopping restarts its patience count on resume")
    if early_stopping and known is None:
        known = KnownTriples.from_graphs(kg_train)
    sampler = NegativeSampler(kg_train)
    n = stage_config.negatives_per_positive
    best_mrr = -1.0
    best_state: Optional[Dict[str, torch.Tensor]] = None
    best_epoch = start
    checks_without_improvement = 0
    stopped_early = False
    epoch = start
    logger.info(
        f"Training graph stage ({stage_config.gnn}, {stage_config.score}) on "
        f"{len(train)} triples, epochs {start} to {until}"
    )
    if early_stopping and until > start:
        best_mrr = _dev_mrr(model, dev, known)  # type: ignore
        best_state = _copy_state(model)
        logger.info(f"Dev MRR at epoch {start}: {best_mrr:.4f}")
    with TrainingLog(log_path, append=resume is not None) as log:
        for epoch in tqdm(
            range(start, until), desc="graph", disable=not settings.progress
        ):
            started = time.perf_counter()
            supervision, messages = split_supervision(
                train, stage_config.supervision_fraction, rng
            )
            negatives = sampler.corrupt(
                supervision, n, stage_config.negative_mode, rng
            )
            graph = None if messages is None else MessageGraph(kg_train, messages)
            loss = margin_batch_loss(
                model,
                torch.from_numpy(supervision),
                torch.from_numpy(negatives),
                stage_config.margin,
                model.entity_table(graph=graph),
            )
            _check_finite(loss, "graph", epoch + 1)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            log.write(
                "graph",
                epoch + 1,
                loss.item(),
                stage_config.lr,
                1000 * (time.perf_counter() - started),
            )
            if (epoch + 1) % _log_every(until) == 0 or epoch + 1 == until:
                logger.info(f"Graph epoch {epoch + 1}: loss {loss.item():.6f}")
            if not early_stopping or (epoch + 1) % stage_config.eval_every != 0:
                continue
            mrr = _dev_mrr(model, dev, known)  # type: ignore
            if mrr > best_mrr:
                best_mrr, best_epoch = mrr, epoch + 1
                best_state = _copy_state(model)
                checks_without_improvement = 0
            else:
                checks_without_improvement += 1
            logger.info(f"Dev MRR at epoch {epoch + 1}: {mrr:.4f}")
            if checks_without_improvement >= stage_config.patience:
                logger.info(
                    f"Stopping early at epoch {epoch + 1}, best epoch {best_epoch}"
                )
                stopped_early = True
                break
    completed = epoch + 1 if until > start else start
    restored: Optional[int] = None
    if best_state is not None and (stopped_early or completed == stage_config.epochs):
        model.load_state_dict(best_state)
        restored = best_epoch
        logger.info(f"Restored parameters of epoch {best_epoch}")
    return capture(
        "graph", completed, config, kg_train, model, optimizer, rng, restored
    )
