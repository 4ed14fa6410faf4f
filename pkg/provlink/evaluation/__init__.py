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

"""Module containing ranking evaluation, prediction and embedding export."""

from provlink.evaluation.prediction import (
    PredictionList,
    export_embeddings,
    load_embeddings,
    predict_topk,
)
from provlink.evaluation.ranking import (
    TSV_HEADER,
    KnownTriples,
    Metrics,
    RankingReport,
    evaluate,
    evaluate_all,
    rank_triple,
    tie_rank,
)

__all__ = [
    "TSV_HEADER",
    "KnownTriples",
    "Metrics",
    "PredictionList",
    "RankingReport",
    "evaluate",
    "evaluate_all",
    "export_embeddings",
    "load_embeddings",
    "predict_topk",
    "rank_triple",
    "tie_rank",
]
