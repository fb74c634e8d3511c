"""Population one-factor model with an effect-coded two-group factor.

Observed variables are generated as ``x = lambda_xi * xi + lambda_g * g + psi * eps``
with ``xi``, ``g`` and ``eps`` mutually uncorrelated and of unit variance.  The
loading on ``g`` is the point-biserial correlation implied by a standardized
mean difference ``d`` between the two groups.

Sign convention: ``d >= 0`` with group 1 the higher-mean group.  Determinacy
depends on ``d`` only through ``lambda_g ** 2``, so negative values are rejected
instead of silently folded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from .errors import CommunalityError, ModelError

#: Tolerance for base-rate sums and the communality boundary.
TOL = 1e-12


@dataclass(frozen=True)
class GroupSpec:
    """Two-group mean difference.

    Parameters
    ----------
    d : float
        Cohen's d between the groups (group 1 minus group 2), ``d >= 0``.
    base_rate_1, base_rate_2 : float
        Population proportions of the two groups.  ``base_rate_2`` defaults
        to ``1 - base_rate_1``.
    """

    d: float
    base_rate_1: float = 0.5
    base_rate_2: float | None = None

    def __post_init__(self):
        if self.base_rate_2 is None:
            object.__setattr__(self, "base_rate_2", 1.0 - self.base_rate_1)
        d = float(self.d)
        if not math.isfinite(d):
            raise ModelError(f"d must be finite, got {self.d!r}")
        if d < 0:
            raise ModelError(
                f"d must be >= 0 (group 1 is the higher-mean group), got {d}"
            )
        object.__setattr__(self, "d", d)
        for name in ("base_rate_1", "base_rate_2"):
            rate = float(getattr(self, name))
            if not 0.0 < rate < 1.0:
                raise ModelError(f"{name} must lie in (0, 1), got {rate}")
            object.__setattr__(self, name, rate)
        if abs(self.base_rate_1 + self.base_rate_2 - 1.0) > TOL:
            raise ModelError(
                f"base rates must sum to 1, got {self.base_rate_1} + {self.base_rate_2}"
            )

    @property
    def equal_groups(self) -> bool:
        return self.base_rate_1 == self.base_rate_2

    @property
    def effect_codes(self) -> tuple[float, float]:
        """Values of ``g`` for group 1 and group 2 (zero mean, unit variance)."""
        p1, p2 = self.base_rate_1, self.base_rate_2
        return math.sqrt(p2 / p1), -math.sqrt(p1 / p2)


GroupLike = Union[GroupSpec, float, None]


def as_group(group: GroupLike) -> GroupSpec:
    """Coerce ``None`` or a bare ``d`` into a :class:`GroupSpec` with equal groups."""
    if group is None:
        return GroupSpec(0.0)
    if isinstance(group, GroupSpec):
        return group
    return GroupSpec(float(group))


def d_to_r(group: GroupLike) -> float:
    """Point-biserial correlation of the group indicator with a shifted variable.

    ``r = d / sqrt(1 / (p1 * p2) + d**2)``; for equal groups ``1 / (p1 * p2)``
    is exactly 4 and this is ``d / sqrt(4 + d**2)``.
    """
    g = as_group(group)
    return g.d / math.sqrt(1.0 / (g.base_rate_1 * g.base_rate_2) + g.d * g.d)


def _check_loading(value: float, name: str) -> float:
    value = float(value)
    if not (math.isfinite(value) and 0.0 <= value < 1.0):
        raise ModelError(f"{name} must lie in [0, 1), got {value}")
    return value


def combined_loading(lambda_xi: float, group: GroupLike) -> float:
    """Loading on the single identifiable factor that merges ``xi`` and ``g``.

    Raises
    ------
    CommunalityError
        If ``lambda_xi**2 + r**2`` exceeds 1.
    """
    lam = _check_loading(lambda_xi, "lambda_xi")
    r = d_to_r(group)
    sq = lam * lam + r * r
    if sq > 1.0 + TOL:
        raise CommunalityError(
            f"combined communality {sq:.6g} exceeds 1 "
            f"(lambda_xi={lam}, lambda_g={r:.6g})"
        )
    return math.sqrt(min(sq, 1.0))


def corrected_loading(lambda_xig: float, group: GroupLike) -> float:
    """Remove the group share from a combined loading.

    Inverse of :func:`combined_loading`.  Accuracy of the round trip degrades
    like ``1e-16 / lambda_xi`` as the true loading approaches zero.
    """
    lam = float(lambda_xig)
    if not (math.isfinite(lam) and 0.0 <= lam <= 1.0):
        raise ModelError(f"lambda_xig must lie in [0, 1], got {lam}")
    r = d_to_r(group)
    sq = lam * lam - r * r
    if sq < -TOL:
        raise CommunalityError(
            f"group share {r * r:.6g} exceeds the combined communality {lam * lam:.6g}"
        )
    return math.sqrt(max(sq, 0.0))


@dataclass(frozen=True)
class ModelSpec:
    """Population model: ``n_vars`` indicators of one common factor plus a group factor.

    ``lambda_xi`` may be given as a scalar (broadcast to all variables) or a
    sequence of length ``n_vars``.
    """

    n_vars: int
    lambda_xi: tuple[float, ...]
    group: GroupSpec | None = None
    equal_loadings: bool = field(init=False)

    def __post_init__(self):
        if isinstance(self.n_vars, bool) or int(self.n_vars) != self.n_vars or self.n_vars < 1:
            raise ModelError(f"n_vars must be an integer >= 1, got {self.n_vars!r}")
        object.__setattr__(self, "n_vars", int(self.n_vars))
        lam = self.lambda_xi
        if np.ndim(lam) == 0:
            lam = (float(lam),) * self.n_vars
        lam = tuple(_check_loading(v, "lambda_xi") for v in lam)
        if len(lam) != self.n_vars:
            raise ModelError(
                f"lambda_xi has {len(lam)} entries for n_vars={self.n_vars}"
            )
        object.__setattr__(self, "lambda_xi", lam)
        if self.group is not None and not isinstance(self.group, GroupSpec):
            object.__setattr__(self, "group", as_group(self.group))
        object.__setattr__(self, "equal_loadings", len(set(lam)) == 1)
        for v in set(lam):
            combined_loading(v, self.group)

    @classmethod
    def equal(cls, n_vars: int, lambda_xi: float, group: GroupLike = None) -> "ModelSpec":
        return cls(n_vars, (float(lambda_xi),) * int(n_vars), None if group is None else as_group(group))

    @property
    def lambda_g(self) -> float:
        return d_to_r(self.group)

    @property
    def loading(self) -> float:
        """The common loading; only defined for equal loadings."""
        if not self.equal_loadings:
            raise ModelError("closed-form operations require equal loadings")
        return self.lambda_xi[0]

    def without_group(self) -> "ModelSpec":
        return ModelSpec(self.n_vars, self.lambda_xi, None)


@dataclass(frozen=True, eq=False)
class CorrelationStructure:
    """Population correlation matrix and its factor parts.

    ``lambda_combined`` holds ``sqrt(lambda_xi**2 + lambda_g**2)`` per variable
    and ``uniqueness`` the matching ``1 - lambda_combined**2``.
    ``lambda_group`` is the per-variable loading on ``g``.
    """

    sigma: np.ndarray
    lambda_combined: np.ndarray
    uniqueness: np.ndarray
    lambda_xi: np.ndarray
    lambda_group: np.ndarray

    @property
    def n_vars(self) -> int:
        return self.sigma.shape[0]

    @cached_property
    def is_one_factor(self) -> bool:
        """True when ``sigma`` is exactly ``lambda_combined`` rank one plus diagonal.

        That holds when ``lambda_xi`` and ``lambda_group`` are proportional,
        i.e. no group effect, or equal loadings with a uniform group effect.
        """
        a, b = self.lambda_xi, self.lambda_group
        if not b.any() or not a.any():
            return True
        return bool(np.abs(np.outer(a, b) - np.outer(b, a)).max() <= TOL)


def implied_structure(
    lambda_xi: Sequence[float], lambda_group: Sequence[float] | float = 0.0
) -> CorrelationStructure:
    """Build ``Sigma = lx lx' + lg lg' + Psi^2`` with unit diagonal.

    ``lambda_group`` may vary across variables, which allows models where the
    mean difference affects only some indicators.
    """
    lx = np.asarray(lambda_xi, dtype=float)
    lg = np.broadcast_to(np.asarray(lambda_group, dtype=float), lx.shape).copy()
    comm = lx**2 + lg**2
    if np.any(comm >= 1.0 - TOL):
        raise CommunalityError(
            f"communality reaches 1 (max {comm.max():.6g}); Psi must be positive definite"
        )
    sigma = np.outer(lx, lx) + np.outer(lg, lg)
    np.fill_diagonal(sigma, 1.0)
    return CorrelationStructure(
        sigma=sigma,
        lambda_combined=np.sqrt(comm),
        uniqueness=1.0 - comm,
        lambda_xi=lx,
        lambda_group=lg,
    )


def build_sigma(model: ModelSpec) -> CorrelationStructure:
    """Population correlation matrix of ``model``."""
    return implied_structure(model.lambda_xi, model.lambda_g)
