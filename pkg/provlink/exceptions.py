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

"""Exceptions raised by provlink. The command line maps the three top level
groups to exit codes (config 2, data 3, numeric 4)."""

from pathlib import Path
from typing import Optional, Union


class ProvlinkError(Exception):
    """Base class for all provlink errors."""

    pass


class ConfigError(ProvlinkError):
    """Raised when a configuration value is missing or invalid."""

    pass


class DataError(ProvlinkError):
    """Raised when input data can not be used."""

    pass


class ParseError(DataError):
    """Raised when a line in a data file is malformed."""

    def __init__(self, path: Union[str, Path], line_number: int, reason: str):
        self.path = str(path)
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"{self.path}:{line_number}: {reason}")


class VocabularyError(DataError):
    """Raised when a name or index is not in a vocabulary."""

    pass


class EncoderError(DataError):
    """Raised when a text encoder can not produce a vector for an entity."""

    pass


class NegativeSamplingError(DataError):
    """Raised when no negative triple can be found for a positive triple."""

    pass


class CheckpointError(DataError):
    """Raised when a checkpoint file is corrupt or does not match the data."""

    pass


class NumericError(ProvlinkError):
    """Raised on numeric failure during training."""

    pass


class NonFiniteLossError(NumericError):
    """Raised when the training loss becomes nan or inf."""

    def __init__(self, stage: str, epoch: int, batch: Optional[int] = None):
        self.stage = stage
        self.epoch = epoch
        self.batch = batch
        location = f"stage {stage}, epoch {epoch}"
        if batch is not None:
            location += f", batch {batch}"
        super().__init__(f"Non-finite loss in {location}.")
