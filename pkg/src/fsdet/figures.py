"""Plot-ready tables: one row per grid point, fixed column order."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .determinacy import benchmark_loading, compensation_factor, determinacy_with_group
from .errors import ModelError
from .model import GroupSpec, combined_loading


@dataclass(frozen=True)
class Table:
    columns: tuple[str, ...]
    rows: list[tuple]

    def column(self, name: str) -> np.ndarray:
        return np.array([r[self.columns.index(name)] for r in self.rows], dtype=float)


def _grid(start: float, stop: float, step: float) -> list[float]:
    if step <= 0 or stop < start:
        raise ModelError(f"invalid grid [{start}, {stop}] step {step}")
    n = int(round((stop - start) / step))
    # rounding keeps grid values like 0.35 clean in the emitted CSV
    return [round(start + i * step, 10) for i in range(n + 1)]


def _p_range(p_min: int, p_max: int) -> range:
    if p_min < 1 or p_max < p_min:
        raise ModelError(f"invalid p range [{p_min}, {p_max}]")
    return range(p_min, p_max + 1)


def figure1(p_min: int = 2, p_max: int = 30, targets: Sequence[float] = (0.5, 0.8, 0.9)) -> Table:
    """Squared loading needed for each target common variance."""
    columns = ("p",) + tuple(f"lambda_sq_for_{round(t * 100):d}" for t in targets)
    rows = [
        (p, *(benchmark_loading(p, t) for t in targets)) for p in _p_range(p_min, p_max)
    ]
    return Table(columns, rows)


def figure2(
    lambdas: Sequence[float] = (0.0, 0.2, 0.4, 0.6, 0.8),
    d_min: float = 0.0,
    d_max: float = 1.0,
    d_step: float = 0.05,
    p_min: int = 2,
    p_max: int = 30,
) -> Table:
    """Determinacy over d and p, one panel per common loading (0 is the baseline)."""
    rows = []
    for lam in lambdas:
        for d in _grid(d_min, d_max, d_step):
            for p in _p_range(p_min, p_max):
                rows.append((lam, d, p, determinacy_with_group(p, lam, d).rho_sq))
    return Table(("panel_lambda", "d", "p", "rho_sq"), rows)


def items_to_add(lambda_xi: float, rho_sq_target: float, group) -> float:
    """Added items that keep ``rho_sq_target`` after eliminating ``group``.

    The test length is the (real-valued) ``p`` at which the model with the
    group difference reaches ``rho_sq_target``; the answer is ``(k - 1) * p``.
    """
    lam_c = combined_loading(lambda_xi, group)
    t = float(rho_sq_target)
    if not 0.0 < t < 1.0:
        raise ModelError(f"target must lie in (0, 1), got {t}")
    p = t * (1.0 / lam_c**2 - 1.0) / (1.0 - t)
    return (compensation_factor(lambda_xi, group) - 1.0) * p


def figure3(
    lambdas: Sequence[float] = (0.4, 0.6, 0.8),
    targets: Sequence[float] | None = None,
    d_min: float = 0.5,
    d_max: float = 1.0,
    d_step: float = 0.05,
) -> Table:
    """Items to add after eliminating ``d``, for target determinacies >= .70."""
    if targets is None:
        targets = _grid(0.7, 0.95, 0.05)
    rows = []
    for lam in lambdas:
        for t in targets:
            for d in _grid(d_min, d_max, d_step):
                rows.append((lam, t, d, items_to_add(lam, t, GroupSpec(d))))
    return Table(("lambda", "rho_sq_target", "d", "p_plus"), rows)


FIGURES = {1: figure1, 2: figure2, 3: figure3}

