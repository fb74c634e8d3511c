"""Determinacy of the regression (best-linear) factor score predictor.

Two routes are provided and cross-checked in the tests:

* the matrix route, ``P = diag(Phi L' Sigma^-1 L Phi) ** 0.5``, valid for any
  positive definite ``Sigma``;
* the closed form for one factor with ``p`` equal loadings ``lam``,
  ``P**2 = p * lam**2 / (1 + (p - 1) * lam**2)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ModelError, SingularMatrixError, UnreachableTargetError
from .model import (
    CorrelationStructure,
    GroupLike,
    as_group,
    combined_loading,
    d_to_r,
)


class Path(str, enum.Enum):
    MATRIX = "matrix"
    CLOSED_FORM = "closed_form"


@dataclass(frozen=True)
class DeterminacyReport:
    """Determinacy coefficient ``rho`` and common variance ``rho_sq``.

    ``lambda_used`` is the loading (or loading vector for the matrix route)
    the value was computed from.
    """

    rho: float
    rho_sq: float
    lambda_used: float | tuple[float, ...]
    path: Path

    @classmethod
    def from_rho_sq(cls, rho_sq, lambda_used, path):
        rho_sq = min(max(float(rho_sq), 0.0), 1.0)
        return cls(math.sqrt(rho_sq), rho_sq, lambda_used, Path(path))

    def as_dict(self) -> dict:
        lam = self.lambda_used
        return {
            "rho": self.rho,
            "rho_sq": self.rho_sq,
            "lambda_used": list(lam) if isinstance(lam, tuple) else lam,
            "path": self.path.value,
        }


@dataclass(frozen=True)
class CompensationPlan:
    """Items needed to restore determinacy after a group difference is removed."""

    k: float
    p_plus_exact: float
    p_plus_rounded: int
    rho_sq_before: float
    rho_sq_after_elimination: float
    rho_sq_recovered: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


# -- linear solves -----------------------------------------------------------


def _as_loading_matrix(loadings, p: int) -> np.ndarray:
    lam = np.asarray(loadings, dtype=float)
    if lam.ndim == 1:
        lam = lam[:, None]
    if lam.ndim != 2 or lam.shape[0] != p:
        raise ModelError(f"loadings must have {p} rows, got shape {lam.shape}")
    return lam


def _as_phi(phi, q: int) -> np.ndarray:
    if phi is None:
        return np.eye(q)
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    if phi.shape != (q, q):
        raise ModelError(f"phi must be {q}x{q}, got {phi.shape}")
    if not np.allclose(phi, phi.T, rtol=0, atol=1e-12):
        raise ModelError("phi must be symmetric")
    if not np.allclose(np.diag(phi), 1.0, rtol=0, atol=1e-12):
        raise ModelError("phi must have a unit diagonal")
    return phi


def solve_rank_one(structure: CorrelationStructure, rhs: np.ndarray) -> np.ndarray:
    """Solve ``Sigma X = rhs`` for ``Sigma = D + v v'`` by Sherman-Morrison.

    Requires a one-factor structure with strictly positive uniquenesses.
    """
    if not structure.is_one_factor:
        raise ModelError("rank-one solve needs a one-factor correlation structure")
    u = structure.uniqueness
    if np.any(u <= 0):
        raise SingularMatrixError("zero uniqueness makes Sigma singular")
    v = structure.lambda_combined
    rhs = np.asarray(rhs, dtype=float)
    d_inv_rhs = rhs / (u[:, None] if rhs.ndim == 2 else u)
    d_inv_v = v / u
    denom = 1.0 + v @ d_inv_v
    return d_inv_rhs - np.multiply.outer(d_inv_v, v @ d_inv_rhs) / denom


def solve_cholesky(sigma: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Reference symmetric positive definite solve."""
    try:
        factor = scipy.linalg.cho_factor(sigma, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"Sigma is not positive definite: {exc}") from None
    return scipy.linalg.cho_solve(factor, rhs)


def _solve(structure: CorrelationStructure, rhs: np.ndarray, method: str) -> np.ndarray:
    if method == "auto":
        method = "rank_one" if structure.is_one_factor else "cholesky"
    if method == "rank_one":
        return solve_rank_one(structure, rhs)
    if method == "cholesky":
        return solve_cholesky(structure.sigma, rhs)
    raise ValueError(f"unknown solve method {method!r}")


def regression_weights(
    structure: CorrelationStructure, loadings=None, phi=None, method: str = "auto"
) -> np.ndarray:
    """Weights ``Sigma^-1 L Phi`` of the regression factor score predictor.

    Parameters
    ----------
    structure : CorrelationStructure
    loadings : array-like, shape (p,) or (p, q), optional
        Defaults to ``structure.lambda_combined``.
    phi : array-like, shape (q, q), optional
        Factor correlations; identity by default.
    method : {"auto", "rank_one", "cholesky"}
        ``auto`` takes the Sherman-Morrison path whenever ``Sigma`` is one-factor.

    Returns
    -------
    numpy.ndarray, shape (p, q)
    """
    lam = _as_loading_matrix(
        structure.lambda_combined if loadings is None else loadings, structure.n_vars
    )
    phi = _as_phi(phi, lam.shape[1])
    return _solve(structure, lam @ phi, method)


def determinacy_matrix(
    structure: CorrelationStructure, loadings=None, phi=None, method: str = "auto"
) -> list[DeterminacyReport]:
    """One :class:`DeterminacyReport` per factor via the matrix route."""
    lam = _as_loading_matrix(
        structure.lambda_combined if loadings is None else loadings, structure.n_vars
    )
    phi = _as_phi(phi, lam.shape[1])
    weights = _solve(structure, lam @ phi, method)
    rho_sq = np.einsum("ij,ij->j", lam @ phi, weights)
    reports = []
    for j in range(lam.shape[1]):
        col = lam[:, j]
        used = float(col[0]) if np.all(col == col[0]) else tuple(map(float, col))
        reports.append(DeterminacyReport.from_rho_sq(rho_sq[j], used, Path.MATRIX))
    return reports


# -- closed forms --------------------------------------------------------------


def _check_count(p) -> int:
    if isinstance(p, bool) or int(p) != p or p < 1:
        raise ModelError(f"number of variables must be an integer >= 1, got {p!r}")
    return int(p)


def closed_form_rho_sq(p: float, lambda_sq: float) -> float:
    """``p * lam**2 / (1 + (p - 1) * lam**2)``, smooth in real-valued ``p >= 1``."""
    return p * lambda_sq / (1.0 + (p - 1.0) * lambda_sq)


def determinacy_closed(p: int, lam: float) -> DeterminacyReport:
    """Determinacy for ``p`` equal loadings ``lam`` on a single factor.

    ``lam = 0`` returns 0, the limit of the formula.
    """
    p = _check_count(p)
    lam = float(lam)
    if not (math.isfinite(lam) and 0.0 <= lam < 1.0):
        raise ModelError(f"loading must lie in [0, 1), got {lam}")
    return DeterminacyReport.from_rho_sq(
        closed_form_rho_sq(p, lam * lam), lam, Path.CLOSED_FORM
    )


def determinacy_with_group(p: int, lambda_xi: float, group: GroupLike) -> DeterminacyReport:
    """Determinacy before elimination: the group difference inflates the loading."""
    p = _check_count(p)
    lam = combined_loading(lambda_xi, group)
    return DeterminacyReport.from_rho_sq(
        closed_form_rho_sq(p, lam * lam), lam, Path.CLOSED_FORM
    )


def benchmark_loading(p: int, target_rho_sq: float) -> float:
    """Squared loading giving ``target_rho_sq`` with ``p`` equal loadings.

    ``(p / t - p + 1) ** -1``; reduces to ``1/(p+1)``, ``4/(p+4)`` and
    ``9/(p+9)`` for targets .5, .8 and .9.
    """
    p = _check_count(p)
    t = float(target_rho_sq)
    if not 0.0 < t < 1.0:
        raise ModelError(f"target must lie in (0, 1), got {t}")
    lambda_sq = 1.0 / (p / t - p + 1.0)
    if lambda_sq >= 1.0:
        raise UnreachableTargetError(
            f"target {t} needs a squared loading of {lambda_sq:.6g} >= 1 at p={p}"
        )
    return lambda_sq


def compensation_factor(lambda_xi: float, group: GroupLike) -> float:
    """Multiplier on ``p`` that restores pre-elimination determinacy.

    ``k = (1/lx**2 - 1) / (1/lxg**2 - 1)`` with ``lxg`` the combined loading.
    """
    lam = float(lambda_xi)
    if lam <= 0.0:
        raise ModelError("compensation is undefined for a zero loading")
    lam_g = combined_loading(lam, group)
    if lam_g >= 1.0:
        raise ModelError("combined loading of 1 gives perfect determinacy; nothing to recover")
    return (1.0 / (lam * lam) - 1.0) / (1.0 / (lam_g * lam_g) - 1.0)


def compensation(p: int, lambda_xi: float, group: GroupLike) -> CompensationPlan:
    """Plan for adding items after the group difference has been eliminated.

    ``p_plus_rounded`` rounds half up, since an extra item never lowers
    determinacy.
    """
    p = _check_count(p)
    k = compensation_factor(lambda_xi, group)
    p_plus = k * p - p
    p_plus_rounded = int(math.floor(p_plus + 0.5))
    lam_sq = float(lambda_xi) ** 2
    return CompensationPlan(
        k=k,
        p_plus_exact=p_plus,
        p_plus_rounded=p_plus_rounded,
        rho_sq_before=determinacy_with_group(p, lambda_xi, group).rho_sq,
        rho_sq_after_elimination=closed_form_rho_sq(p, lam_sq),
        rho_sq_recovered=closed_form_rho_sq(p + p_plus_rounded, lam_sq),
    )


def score_group_d(p: int, lambda_xi: float, group: GroupLike) -> float:
    """Cohen's d of the unit-weighted score between the two groups.

    With equal loadings the regression weights are proportional to unit
    weights, so this is also the d of the regression score.
    """
    p = _check_count(p)
    g = as_group(group)
    lam_sq = combined_loading(lambda_xi, g) ** 2
    r = d_to_r(g)
    total_var = p + p * (p - 1) * lam_sq
    within_var = total_var - (p * r) ** 2
    if within_var <= 0:
        raise ModelError("within-group score variance is zero")
    mean_diff = p * r / math.sqrt(g.base_rate_1 * g.base_rate_2)
    return mean_diff / math.sqrt(within_var)


def residualized_rho(weights, lambda_xi, uniqueness) -> float:
    """Correlation with ``xi`` of a score whose group means have been removed.

    Removing group means (or restandardizing within groups when the group
    loading is uniform) leaves ``w' lx xi + w' Psi eps``.
    """
    w = np.asarray(weights, dtype=float).ravel()
    cov = float(w @ np.asarray(lambda_xi, dtype=float))
    noise = float(np.sum(w * w * np.asarray(uniqueness, dtype=float)))
    total = cov * cov + noise
    if total <= 0:
        raise ModelError("score has zero variance after group means are removed")
    return cov / math.sqrt(total)
