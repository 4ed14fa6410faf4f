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

"""Command line interface. Exit codes: 0 success, 2 configuration error,
3 data error, 4 numeric failure."""

import argparse
import json
import logging
import sys
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import torch

from provlink.benchmark import VARIANTS, benchmark_config, run_benchmark
from provlink.config import GNN_VARIANTS, SCORE_VARIANTS, TrainConfig, settings
from provlink.evaluation import (
    TSV_HEADER,
    KnownTriples,
    evaluate_all,
    export_embeddings,
    predict_topk,
)
from provlink.exceptions import (
    CheckpointError,
    ConfigError,
    DataError,
    NumericError,
)
from provlink.graph import (
    DatasetSplit,
    EntityText,
    KnowledgeGraph,
    Vocabulary,
    generate_synthetic_kg,
    load_entity_texts,
    load_triples,
    read_split_manifest,
    split_dataset,
    write_entity_texts,
    write_split_manifest,
    write_triples,
)
from provlink.scoring import NegativeSampler
from provlink.training import (
    Checkpoint,
    build_stage2_model,
    gradient_check,
    margin_batch_loss,
    train_stage1,
    train_stage2,
)

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _print_json(values: object) -> None:
    print(json.dumps(values, indent=2, sort_keys=True))


def _load_graph(path: str) -> KnowledgeGraph:
    vocabulary = Vocabulary()
    triples = load_triples(path, vocabulary)
    return KnowledgeGraph(vocabulary, triples)


def _load_texts(path: Optional[str], kg: KnowledgeGraph) -> Dict[int, EntityText]:
    if path is None:
        return {}
    texts, _ = load_entity_texts(path, kg.vocabulary.entities)
    return texts


def _config(
    args: argparse.Namespace, base: Optional[TrainConfig] = None
) -> TrainConfig:
    """Return configuration from --config (or base) with flag overrides."""
    if getattr(args, "config", None) is not None:
        config = TrainConfig.load(args.config)
    elif base is not None:
        config = base
    else:
        config = TrainConfig().validate()
    return config.replace(
        seed=getattr(args, "seed", None),
        stage2__score=getattr(args, "score", None),
        stage2__gnn=getattr(args, "gnn", None),
        stage2__depth=getattr(args, "depth", None),
        stage2__features=getattr(args, "features", None),
        stage2__init=getattr(args, "init", None),
        stage2__early_stopping=getattr(args, "early_stopping", None),
        stage2__supervision_fraction=getattr(args, "supervision_fraction", None),
    )


def _split(
    args: argparse.Namespace, kg: KnowledgeGraph, config: TrainConfig
) -> DatasetSplit:
    if getattr(args, "split", None) is not None:
        return read_split_manifest(args.split, kg)
    return split_dataset(
        kg,
        config.split_ratios,
        kg.relation_index(config.target_relation),
        config.seed,
    )


def _check_vocabulary(checkpoint: Checkpoint, kg: KnowledgeGraph) -> None:
    if checkpoint.vocabulary != kg.vocabulary:
        raise CheckpointError("Checkpoint vocabulary does not match triple file.")


def ingest(args: argparse.Namespace) -> int:
    kg = _load_graph(args.triples)
    summary = {
        "entities": kg.n_entities,
        "relations": kg.n_relations,
        "triples": len(kg),
    }
    if args.texts is not None:
        texts, rejected = load_entity_texts(args.texts, kg.vocabulary.entities)
        summary["texts"] = len(texts)
        summary["rejected_texts"] = len(rejected)
    if args.out is not None:
        write_triples(args.out, kg.triples, kg.vocabulary, canonical=True)
    _print_json(summary)
    return 0


def generate_synthetic(args: argparse.Namespace) -> int:
    kg, texts = generate_synthetic_kg(
        args.affairs, args.laws, args.provisions, args.seed
    )
    write_triples(args.out_triples, kg.triples, kg.vocabulary)
    if args.out_texts is not None:
        write_entity_texts(args.out_texts, texts, kg.vocabulary.entities)
    _print_json(
        {"entities": kg.n_entities, "triples": len(kg), "texts": len(texts)}
    )
    return 0


def split(args: argparse.Namespace) -> int:
    config = _config(args)
    kg = _load_graph(args.triples)
    dataset = split_dataset(
        kg,
        config.split_ratios,
        kg.relation_index(config.target_relation),
        config.seed,
    )
    write_split_manifest(args.out, dataset, kg)
    _print_json(
        {
            "train": len(dataset.train),
            "dev": len(dataset.dev),
            "test": len(dataset.test),
            "target_test": len(dataset.target_test),
        }
    )
    return 0


def train_text(args: argparse.Namespace) -> int:
    resume = Checkpoint.load(args.resume) if args.resume is not None else None
    config = _config(args, resume.config if resume is not None else None)
    kg = _load_graph(args.triples)
    dataset = _split(args, kg, config)
    texts = _load_texts(args.texts, kg)
    checkpoint = train_stage1(
        kg.subgraph(dataset.train),
        texts,
        config,
        resume=resume,
        until=args.until,
        log_path=args.log,
    )
    checkpoint.save(args.out)
    return 0


def train_graph(args: argparse.Namespace) -> int:
    stage1 = (
        Checkpoint.load(args.text_checkpoint)
        if args.text_checkpoint is not None
        else None
    )
    resume = Checkpoint.load(args.resume) if args.resume is not None else None
    base = resume.config if resume is not None else None
    if base is None and stage1 is not None:
        base = stage1.config
    config = _config(args, base)
    kg = _load_graph(args.triples)
    dataset = _split(args, kg, config)
    texts = _load_texts(args.texts, kg) if args.texts is not None else None
    checkpoint = train_stage2(
        kg.subgraph(dataset.train),
        stage1,
        config,
        texts=texts,
        resume=resume,
        until=args.until,
        log_path=args.log,
        dev=dataset.dev,
        known=KnownTriples.from_graphs(kg),
    )
    checkpoint.save(args.out)
    return 0


def eval_command(args: argparse.Namespace) -> int:
    checkpoint = Checkpoint.load(args.checkpoint)
    kg = _load_graph(args.triples)
    _check_vocabulary(checkpoint, kg)
    dataset = _split(args, kg, checkpoint.config)
    protocols = ("raw", "filtered") if args.protocol == "both" else (args.protocol,)
    reports = evaluate_all(
        dataset.queries(args.queries),
        checkpoint.embedding_model(args.which),
        protocols,
        (args.side,),
        KnownTriples.from_graphs(kg),
        kg.vocabulary.relations.names,
    )
    if args.format == "tsv":
        print(TSV_HEADER)
        for report in reports:
            print(report.to_tsv_row(args.label))
    else:
        _print_json([report.to_dict() for report in reports])
    return 0


def predict(args: argparse.Namespace) -> int:
    checkpoint = Checkpoint.load(args.checkpoint)
    predictions = predict_topk(
        checkpoint.embedding_model(),
        checkpoint.vocabulary,
        args.entity,
        args.relation,
        args.direction,
        args.k,
        args.exclude_known,
        KnownTriples.from_graphs(checkpoint.graph()),
    )
    if args.format == "tsv":
        sys.stdout.write(predictions.to_tsv())
    else:
        _print_json(predictions.to_dict())
    return 0


def export(args: argparse.Namespace) -> int:
    checkpoint = Checkpoint.load(args.checkpoint)
    rows = export_embeddings(checkpoint, args.which, args.out)
    _print_json({"rows": rows, "which": args.which})
    return 0


def grad_check(args: argparse.Namespace) -> int:
    config = _config(args).replace(
        stage1__dim=args.dim, stage1__epochs=0, encoder__raw_dim=args.raw_dim
    )
    kg, texts = generate_synthetic_kg(args.affairs, args.laws, args.provisions, 0)
    stage1 = train_stage1(kg, texts, config)
    rng = np.random.default_rng([config.seed, 2])
    model = build_stage2_model(kg, stage1, config, rng, texts)
    positives = torch.from_numpy(np.array(kg.triple_array))
    negatives = torch.from_numpy(
        NegativeSampler(kg).corrupt(
            kg.triple_array,
            config.stage2.negatives_per_positive,
            config.stage2.negative_mode,
            rng,
        )
    )

    def loss() -> torch.Tensor:
        return margin_batch_loss(
            model, positives, negatives, config.stage2.margin, model.entity_table()
        )

    report = gradient_check(
        loss,
        dict(model.named_parameters()),
        h=args.h,
        tol=args.tol,
        max_coordinates=args.max_coordinates,
        rng=np.random.default_rng(config.seed),
    )
    _print_json(report.to_dict())
    return 0 if report.passed else EXIT_NUMERIC


def benchmark(args: argparse.Namespace) -> int:
    config = _config(args, benchmark_config())
    result = run_benchmark(
        config,
        args.seeds,
        args.affairs,
        args.laws,
        args.provisions,
        args.variants,
        side=args.side,
    )
    if args.format == "tsv":
        sys.stdout.write(result.to_tsv())
    else:
        _print_json(result.to_dict())
    return 0


def _common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", help="Json configuration file.")
    parser.add_argument("--seed", type=int, help="Override configured seed.")
    parser.add_argument(
        "--log-level", default=None, help="Logging level, default INFO."
    )
    parser.add_argument(
        "--progress", action="store_true", help="Show progress bars."
    )
    return parser


def _model_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--score", choices=SCORE_VARIANTS)
    parser.add_argument("--gnn", choices=GNN_VARIANTS)
    parser.add_argument("--depth", type=int)
    parser.add_argument("--features", choices=("text", "random"))
    parser.add_argument("--init", choices=("xavier", "zero", "residual"))


def _training_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--triples", required=True, help="Full triple file.")
    parser.add_argument("--split", help="Split manifest, else split by config.")
    parser.add_argument("--out", required=True, help="Checkpoint to write.")
    parser.add_argument("--resume", help="Checkpoint to continue from.")
    parser.add_argument("--until", type=int, help="Stop after this many epochs.")
    parser.add_argument("--log", help="Json lines training log.")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="provlink",
        description="Text guided graph reasoning for legal link prediction.",
    )
    commands = parser.add_subparsers(dest="verb", required=True)

    command = commands.add_parser(
        "ingest", parents=[common], help="Validate and summarize data files."
    )
    command.add_argument("--triples", required=True)
    command.add_argument("--texts")
    command.add_argument("--out", help="Write canonical triple file.")
    command.set_defaults(command=ingest)

    command = commands.add_parser(
        "generate-synthetic", parents=[common], help="Generate a synthetic legal graph."
    )
    command.add_argument("--affairs", type=int, default=200)
    command.add_argument("--laws", type=int, default=20)
    command.add_argument("--provisions", type=int, default=10)
    command.add_argument("--out-triples", required=True)
    command.add_argument("--out-texts")
    command.set_defaults(command=generate_synthetic, seed=0)

    command = commands.add_parser(
        "split", parents=[common], help="Write a split manifest."
    )
    command.add_argument("--triples", required=True)
    command.add_argument("--out", required=True)
    command.set_defaults(command=split)

    command = commands.add_parser(
        "train-text", parents=[common], help="Train the text stage."
    )
    _training_options(command)
    command.add_argument("--texts", required=True, help="Entity text file.")
    command.set_defaults(command=train_text)

    command = commands.add_parser(
        "train-graph", parents=[common], help="Train the graph stage."
    )
    _training_options(command)
    _model_options(command)
    command.add_argument("--text-checkpoint", help="Checkpoint of the text stage.")
    command.add_argument("--texts", help="Entity texts, for joint text training.")
    command.add_argument(
        "--early-stopping",
        action="store_const",
        const=True,
        help="Stop on dev MRR.",
    )
    command.add_argument(
        "--supervision-fraction",
        type=float,
        help="Share of training triples scored per epoch, messages pass over the rest.",
    )
    command.set_defaults(command=train_graph)

    command = commands.add_parser(
        "eval", parents=[common], help="Rank held out triples."
    )
    command.add_argument("--checkpoint", required=True)
    command.add_argument("--triples", required=True, help="Full triple file.")
    command.add_argument("--split", help="Split manifest, else split by config.")
    command.add_argument(
        "--queries", choices=("dev", "test", "target_test"), default="target_test"
    )
    command.add_argument(
        "--protocol", choices=("raw", "filtered", "both"), default="both"
    )
    command.add_argument("--side", choices=("head", "tail", "both"), default="both")
    command.add_argument("--which", choices=("text", "final"), default="final")
    command.add_argument("--format", choices=("json", "tsv"), default="json")
    command.add_argument("--label", default="provlink", help="Tsv row label.")
    command.set_defaults(command=eval_command)

    command = commands.add_parser(
        "predict", parents=[common], help="Top-k candidates for a query."
    )
    command.add_argument("--checkpoint", required=True)
    command.add_argument("--entity", required=True)
    command.add_argument("--relation", default="base_entry_is")
    command.add_argument("--direction", choices=("head", "tail"), default="tail")
    command.add_argument("--k", type=int, default=10)
    command.add_argument("--exclude-known", action="store_true")
    command.add_argument("--format", choices=("json", "tsv"), default="json")
    command.set_defaults(command=predict)

    command = commands.add_parser(
        "export-embeddings", parents=[common], help="Write entity embeddings."
    )
    command.add_argument("--checkpoint", required=True)
    command.add_argument("--which", choices=("text", "final"), default="final")
    command.add_argument("--out", required=True)
    command.set_defaults(command=export)

    command = commands.add_parser(
        "grad-check",
        parents=[common],
        help="Check graph stage gradients on a small synthetic graph.",
    )
    _model_options(command)
    command.add_argument("--affairs", type=int, default=3)
    command.add_argument("--laws", type=int, default=2)
    command.add_argument("--provisions", type=int, default=2)
    command.add_argument("--dim", type=int, default=4)
    command.add_argument("--raw-dim", type=int, default=64)
    command.add_argument("--h", type=float, default=1e-4)
    command.add_argument("--tol", type=float, default=1e-4)
    command.add_argument("--max-coordinates", type=int, default=500)
    command.set_defaults(command=grad_check)

    command = commands.add_parser(
        "benchmark", parents=[common], help="Compare variants on synthetic graphs."
    )
    command.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    command.add_argument("--affairs", type=int, default=200)
    command.add_argument("--laws", type=int, default=20)
    command.add_argument("--provisions", type=int, default=10)
    command.add_argument(
        "--variants",
        nargs="+",
        choices=sorted(VARIANTS),
        default=["text", "transe", "graph-only", "text-gat"],
    )
    command.add_argument("--side", choices=("head", "tail", "both"), default="tail")
    command.add_argument("--format", choices=("json", "tsv"), default="json")
    command.set_defaults(command=benchmark)
    return parser


def _exit_code(exception: Exception) -> Tuple[int, str]:
    if isinstance(exception, ConfigError):
        return EXIT_CONFIG, "Configuration error"
    if isinstance(exception, ValueError):
        return EXIT_CONFIG, "Invalid value"
    if isinstance(exception, NumericError):
        return EXIT_NUMERIC, "Numeric failure"
    return EXIT_DATA, "Data error"


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.log_level is not None:
        settings.log_level = args.log_level.upper()
    settings.progress = args.progress
    logging.basicConfig(
        level=settings.log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.command(args)
    except (
        ConfigError,
        DataError,
        NumericError,
        FileNotFoundError,
        ValueError,
    ) as exception:
        code, kind = _exit_code(exception)
        logger.error(f"{kind}: {exception}")
        return code


if __name__ == "__main__":
    sys.exit(main())
