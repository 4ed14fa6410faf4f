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

"""Comparison of autograd gradients with central finite differences."""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import torch

logger = logging.getLogger(__name__)

Coordinate = Tuple[str, int]


@dataclass
class GradientReport:
    max_relative_error: float
    max_absolute_error: float = 0.0
    failing: List[Coordinate] = field(default_factory=list)
    n_checked: int = 0
    n_skipped: int = 0
    tolerance: float = 1e-4

    @property
    def passed(self) -> bool:
        return len(self.failing) == 0

    def to_dict(self) -> Dict[str, object]:
        return {
            "max_relative_error": self.max_relative_error,
            "max_absolute_error": self.max_absolute_error,
            "failing": [list(coordinate) for coordinate in self.failing],
            "n_checked": self.n_checked,
            "n_skipped": self.n_skipped,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _central_difference(
    closure: Callable[[], torch.Tensor],
    values: torch.Tensor,
    index: int,
    h: float,
) -> float:
    original = values[index].item()
    with torch.no_grad():
        values[index] = original + h
        plus = closure().item()
        values[index] = original - h
        minus = closure().item()
        values[index] = original
    return (plus - minus) / (2 * h)


def gradient_check(
    closure: Callable[[], torch.Tensor],
    params: Dict[str, torch.Tensor],
    h: float = 1e-4,
    tol: float = 1e-4,
    max_coordinates: int = 500,
    rng: Optional[np.random.Generator] = None,
    scale_floor: float = 1e-6,
    kink_floor: float = 1e-2,
    gradients: Optional[Dict[str, torch.Tensor]] = None,
) -> GradientReport:
    """Compare analytic gradients of a scalar loss with central differences.

    The numeric gradient n extrapolates the central differences with steps h
    and h / 2 (Richardson). The relative error of a coordinate is |a - n| /
    max(|a|, |n|, scale_floor); the absolute error |a - n| is reported
    alongside. Coordinates where the difference quotient changes when h
    halves sit next to a kink (ReLU, hinge, norm at zero) and are skipped.

    Parameters
    ----------
    closure: Callable[[], torch.Tensor]
        Function computing the scalar loss from params.
    params: Dict[str, torch.Tensor]
        Named leaf tensors requiring grad. Perturbed in place and restored.
    h: float = 1e-4
        Step of the central difference.
    tol: float = 1e-4
        Maximal relative error.
    max_coordinates: int = 500
        Coordinates checked, drawn without replacement if there are more.
    rng: Optional[np.random.Generator] = None
        Generator for subsampling coordinates.
    scale_floor: float = 1e-6
        Lower bound of the relative error denominator.
    kink_floor: float = 1e-2
        Lower bound of the scale a change of the difference quotient is
        compared with when detecting kinks.
    gradients: Optional[Dict[str, torch.Tensor]] = None
        Analytic gradients to check instead of autograd's.

    Returns
    ----------
    GradientReport
        Maximal relative and absolute errors and failing coordinates.
    """
    names = list(params)
    if gradients is None:
        loss = closure()
        computed = torch.autograd.grad(
            loss, [params[name] for name in names], allow_unused=True
        )
        gradients = {
            name: (
                torch.zeros_like(params[name]) if gradient is None else gradient
            )
            for name, gradient in zip(names, computed)
        }
    coordinates = [
        (name, index) for name in names for index in range(params[name].numel())
    ]
    if len(coordinates) > max_coordinates:
        rng = rng if rng is not None else np.random.default_rng(0)
        chosen = np.sort(rng.choice(len(coordinates), max_coordinates, replace=False))
        coordinates = [coordinates[index] for index in chosen]
    report = GradientReport(0.0, tolerance=tol)
    for name, index in coordinates:
        values = params[name].data.view(-1)
        coarse = _central_difference(closure, values, index, h)
        fine = _central_difference(closure, values, index, h / 2)
        scale = max(abs(coarse), abs(fine), kink_floor)
        if abs(coarse - fine) > tol * scale:
            report.n_skipped += 1
            continue
        numeric = (4 * fine - coarse) / 3
        analytic = gradients[name].reshape(-1)[index].item()
        difference = abs(analytic - numeric)
        error = difference / max(abs(analytic), abs(numeric), scale_floor)
        report.n_checked += 1
        report.max_relative_error = max(report.max_relative_error, error)
        report.max_absolute_error = max(report.max_absolute_error, difference)
        if error > tol:
            report.failing.append((name, index))
    logger.info(
        f"Gradient check: {report.n_checked} checked, {report.n_skipped} skipped, "
        f"max relative error {report.max_relative_error:.3e}, "
        f"max absolute error {report.max_absolute_error:.3e}"
    )
    return report
