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

"""Parameter initialization from numpy generators. All parameters are
float64 and drawn from a numpy PCG64 stream so that initialization is
reproducible independent of the torch generator."""

import math
from typing import Sequence, Tuple

import numpy as np
import torch
from torch import nn

DTYPE = torch.float64


def as_tensor(array: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(array, dtype=np.float64))


def parameter(array: np.ndarray) -> nn.Parameter:
    return nn.Parameter(as_tensor(array))


def _fans(shape: Sequence[int]) -> Tuple[int, int]:
    if len(shape) == 1:
        return shape[0], 1
    return shape[-1], shape[-2]


def xavier_uniform(rng: np.random.Generator, shape: Sequence[int]) -> np.ndarray:
    """Glorot uniform values, bound sqrt(6 / (fan_in + fan_out))."""
    fan_in, fan_out = _fans(shape)
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=tuple(shape))


def translational_uniform(
    rng: np.random.Generator, shape: Sequence[int]
) -> np.ndarray:
    """Uniform values in (-6/sqrt(d), 6/sqrt(d)) with d the last dimension,
    the usual initialization of translational embeddings."""
    bound = 6.0 / math.sqrt(shape[-1])
    return rng.uniform(-bound, bound, size=tuple(shape))
