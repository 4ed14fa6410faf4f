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

"""Module containing the two stage training driver."""

from provlink.training.checkpoint import Checkpoint
from provlink.training.gradcheck import GradientReport, gradient_check
from provlink.training.model import LinkModel
from provlink.training.trainer import (
    TrainingLog,
    build_stage2_model,
    margin_batch_loss,
    split_supervision,
    train_stage1,
    train_stage2,
)

__all__ = [
    "Checkpoint",
    "GradientReport",
    "LinkModel",
    "TrainingLog",
    "build_stage2_model",
    "gradient_check",
    "margin_batch_loss",
    "split_supervision",
    "train_stage1",
    "train_stage2",
]
