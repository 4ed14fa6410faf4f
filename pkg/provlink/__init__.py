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

__all__ = [
    "Checkpoint",
    "KnowledgeGraph",
    "TrainConfig",
    "Vocabulary",
    "evaluate",
    "predict_topk",
    "train_stage1",
    "train_stage2",
]

from provlink.config import TrainConfig
from provlink.evaluation import evaluate, predict_topk
from provlink.graph import KnowledgeGraph, Vocabulary
from provlink.training import Checkpoint, train_stage1, train_stage2

__version__ = "0.1.0"
