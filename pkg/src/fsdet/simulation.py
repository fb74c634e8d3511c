"""Seeded Monte Carlo check of the population determinacy results.

Each replication draws ``n_cases`` observations of the two-group factor model,
scores them with the *population* regression weights and correlates the score
with the factor.  Replication ``r`` uses the stream
``PCG64(SeedSequence(seed, spawn_key=(r,)))``, so results do not depend on
execution order or on ``n_jobs``.

Elimination modes
-----------------
none
    Score the data as generated; compare with the combined factor.
model_respecification
    Regenerate without the group factor (uniqueness ``1 - lambda_xi**2``).
score_residualization
    Subtract the group means from the score; compare with ``xi``.
within_group_restandardization
    Standardize every variable within its group, rescore, compare with ``xi``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ._backend import get_kernel
from .determinacy import (
    determinacy_closed,
    determinacy_matrix,
    determinacy_with_group,
    regression_weights,
    residualized_rho,
)
from .errors import DegenerateSimulationError, ModelError
from .model import GroupSpec, ModelSpec, build_sigma, implied_structure

# moment columns produced by the kernels
N, S, SS, F, FF, SF, XI, XIXI, SXI = range(9)


class EliminationMode(str, enum.Enum):
    NONE = "none"
    MODEL_RESPECIFICATION = "model_respecification"
    SCORE_RESIDUALIZATION = "score_residualization"
    WITHIN_GROUP_RESTANDARDIZATION = "within_group_restandardization"


@dataclass(frozen=True)
class SimulationConfig:
    model: ModelSpec
    n_cases: int = 100_000
    n_reps: int = 20
    seed: int = 0
    elimination_mode: EliminationMode = EliminationMode.NONE

    def __post_init__(self):
        object.__setattr__(self, "elimination_mode", EliminationMode(self.elimination_mode))
        if int(self.n_cases) != self.n_cases or self.n_cases < 2:
            raise ModelError(f"n_cases must be an integer >= 2, got {self.n_cases!r}")
        if int(self.n_reps) != self.n_reps or self.n_reps < 1:
            raise ModelError(f"n_reps must be an integer >= 1, got {self.n_reps!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ModelError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        n1, n2 = self.group_sizes
        if n1 < 1 or n2 < 1:
            raise ModelError(
                f"n_cases={self.n_cases} leaves a group empty (sizes {n1}, {n2})"
            )

    @property
    def group(self) -> GroupSpec:
        return self.model.group if self.model.group is not None else GroupSpec(0.0)

    @property
    def group_sizes(self) -> tuple[int, int]:
        n1 = math.floor(self.group.base_rate_1 * self.n_cases)
        return n1, int(self.n_cases) - n1


@dataclass(frozen=True)
class SimulationResult:
    empirical_rho: float
    empirical_rho_se: float
    empirical_score_d: float
    empirical_score_d_se: float
    analytic_rho: float
    analytic_score_d: float
    n_reps_used: int
    seed_used: int
    n_cases: int
    elimination_mode: EliminationMode
    backend: str
    rho_per_rep: tuple[float, ...] = field(repr=False)

    @property
    def empirical_rho_sq(self) -> float:
        return self.empirical_rho**2

    @property
    def analytic_rho_sq(self) -> float:
        return self.analytic_rho**2

    def as_dict(self) -> dict:
        out = asdict(self)
        out["elimination_mode"] = self.elimination_mode.value
        out["rho_per_rep"] = list(self.rho_per_rep)
        out["empirical_rho_sq"] = self.empirical_rho_sq
        out["analytic_rho_sq"] = self.analytic_rho_sq
        return out


def replication_bit_generator(seed: int, rep: int) -> np.random.PCG64:
    return np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(rep),)))


@dataclass(frozen=True)
class _Plan:
    """Everything a replication needs, fixed before any draws."""

    lam_xi: np.ndarray
    lam_g: np.ndarray
    psi: np.ndarray
    g_values: np.ndarray
    n_per_group: tuple[int, int]
    weights: np.ndarray
    f_xi: float
    f_g: float
    mode: EliminationMode


def _plan(config: SimulationConfig) -> tuple[_Plan, float, float]:
    model, group, mode = config.model, config.group, config.elimination_mode
    if not model.equal_loadings and group.d > 0:
        raise ModelError(
            "with a group difference the one-factor reading needs equal loadings"
        )
    gen_model = model.without_group() if mode is EliminationMode.MODEL_RESPECIFICATION else model
    structure = build_sigma(gen_model)
    weights = regression_weights(structure)[:, 0]
    lam_xi = structure.lambda_xi
    lam_g = structure.lambda_group

    if mode in (EliminationMode.NONE, EliminationMode.MODEL_RESPECIFICATION):
        if gen_model.lambda_g > 0:
            lam_c = structure.lambda_combined[0]
            f_xi, f_g = lam_xi[0] / lam_c, lam_g[0] / lam_c
        else:
            f_xi, f_g = 1.0, 0.0
        if gen_model.equal_loadings and gen_model.group is not None:
            analytic_rho = determinacy_with_group(
                gen_model.n_vars, gen_model.loading, gen_model.group
            ).rho
        elif gen_model.equal_loadings:
            analytic_rho = determinacy_closed(gen_model.n_vars, gen_model.loading).rho
        else:
            analytic_rho = determinacy_matrix(structure)[0].rho
    else:
        f_xi, f_g = 1.0, 0.0
        analytic_rho = residualized_rho(weights, lam_xi, structure.uniqueness)
    if not np.any(weights) or (f_xi == 0.0 and f_g == 0.0) or analytic_rho == 0.0:
        raise DegenerateSimulationError("model has no common variance to correlate")

    if mode is EliminationMode.NONE:
        g1, g2 = group.effect_codes
        shift = float(weights @ lam_g) * (g1 - g2)
        within = float(weights @ structure.sigma @ weights) - float(weights @ lam_g) ** 2
        analytic_d = shift / math.sqrt(within)
    else:
        analytic_d = 0.0

    plan = _Plan(
        lam_xi=np.ascontiguousarray(lam_xi),
        lam_g=np.ascontiguousarray(lam_g),
        psi=np.sqrt(structure.uniqueness),
        g_values=np.array(group.effect_codes),
        n_per_group=config.group_sizes,
        weights=weights,
        f_xi=float(f_xi),
        f_g=float(f_g),
        mode=mode,
    )
    return plan, analytic_rho, analytic_d


def _run_kernel(kernel, plan: _Plan, seed, rep, weights, offsets):
    return kernel(
        replication_bit_generator(seed, rep),
        plan.lam_xi, plan.lam_g, plan.psi, plan.g_values, plan.n_per_group,
        np.ascontiguousarray(weights, dtype=float), np.ascontiguousarray(offsets, dtype=float),
        plan.f_xi, plan.f_g,
    )


def _corr(n, sx, sxx, sy, syy, sxy) -> float:
    cov = sxy / n - (sx / n) * (sy / n)
    vx = sxx / n - (sx / n) ** 2
    vy = syy / n - (sy / n) ** 2
    if vx <= 0 or vy <= 0:
        raise DegenerateSimulationError("zero variance in simulated score or factor")
    return cov / math.sqrt(vx * vy)


def _replicate(kernel, plan: _Plan, seed: int, rep: int) -> tuple[float, float]:
    """Return (correlation, score d) for one replication."""
    p = plan.weights.shape[0]
    weights = np.tile(plan.weights, (2, 1))
    offsets = np.zeros(2)
    if plan.mode is EliminationMode.WITHIN_GROUP_RESTANDARDIZATION:
        # first pass only collects per-group variable moments; the second
        # pass replays the same stream with group-specific standardization
        m, vs = _run_kernel(kernel, plan, seed, rep, np.zeros((2, p)), offsets)
        n_k = m[:, N][:, None]
        means = vs[:, 0] / n_k
        sds = np.sqrt(vs[:, 1] / n_k - means**2)
        if np.any(sds <= 0):
            raise DegenerateSimulationError("a variable has zero within-group variance")
        weights = plan.weights / sds
        offsets = np.sum(weights * means, axis=1)
    m, _ = _run_kernel(kernel, plan, seed, rep, weights, offsets)

    tot = m.sum(axis=0)
    n = tot[N]
    group_mean_s = m[:, S] / m[:, N]
    within_ss = m[:, SS] - m[:, N] * group_mean_s**2
    pooled_sd = math.sqrt(within_ss.sum() / (n - 2)) if n > 2 else math.nan

    if plan.mode is EliminationMode.SCORE_RESIDUALIZATION:
        cov = np.sum(m[:, SXI] - group_mean_s * m[:, XI]) / n
        var_s = within_ss.sum() / n
        var_xi = tot[XIXI] / n - (tot[XI] / n) ** 2
        if var_s <= 0 or var_xi <= 0:
            raise DegenerateSimulationError("zero variance in residualized score")
        return cov / math.sqrt(var_s * var_xi), 0.0

    if plan.mode is EliminationMode.WITHIN_GROUP_RESTANDARDIZATION:
        rho = _corr(n, tot[S], tot[SS], tot[XI], tot[XIXI], tot[SXI])
    else:
        rho = _corr(n, tot[S], tot[SS], tot[F], tot[FF], tot[SF])
    if not pooled_sd > 0:
        raise DegenerateSimulationError("zero within-group score variance")
    return rho, (group_mean_s[0] - group_mean_s[1]) / pooled_sd


def _se(values: np.ndarray) -> float:
    if values.size < 2:
        return math.nan
    return float(values.std(ddof=1) / math.sqrt(values.size))


def simulate(
    config: SimulationConfig, backend: str | None = None, n_jobs: int = 1
) -> SimulationResult:
    """Run ``config.n_reps`` replications and compare with the analytic value.

    Parameters
    ----------
    config : SimulationConfig
    backend : {"cython", "python"}, optional
        Replication kernel; the compiled one when built.
    n_jobs : int
        Worker threads.  Replications are reduced in index order, so the result
        is identical for any value.
    """
    backend, kernel = get_kernel(backend)
    plan, analytic_rho, analytic_d = _plan(config)
    reps = range(config.n_reps)
    run = lambda rep: _replicate(kernel, plan, config.seed, rep)  # noqa: E731
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            out = list(pool.map(run, reps))
    else:
        out = [run(rep) for rep in reps]
    rhos = np.array([o[0] for o in out])
    ds = np.array([o[1] for o in out])
    return SimulationResult(
        empirical_rho=float(rhos.mean()),
        empirical_rho_se=_se(rhos),
        empirical_score_d=float(ds.mean()),
        empirical_score_d_se=_se(ds),
        analytic_rho=float(analytic_rho),
        analytic_score_d=float(analytic_d),
        n_reps_used=int(config.n_reps),
        seed_used=int(config.seed),
        n_cases=int(config.n_cases),
        elimination_mode=config.elimination_mode,
        backend=backend,
        rho_per_rep=tuple(map(float, rhos)),
    )


@dataclass(frozen=True)
class Sample:
    x: np.ndarray
    xi: np.ndarray
    g: np.ndarray
    group_index: np.ndarray


def generate_sample(model: ModelSpec, n_cases: int, seed: int = 0, rep: int = 0) -> Sample:
    """Materialise one replication with the kernels' draw order."""
    config = SimulationConfig(model, n_cases=n_cases, n_reps=1, seed=seed)
    structure = build_sigma(model)
    rng = np.random.Generator(replication_bit_generator(seed, rep))
    g_values = config.group.effect_codes
    parts = []
    for k, n_k in enumerate(config.group_sizes):
        z = rng.standard_normal((n_k, model.n_vars + 1))
        parts.append((z, k))
    z = np.concatenate([zk for zk, _ in parts])
    idx = np.concatenate([np.full(len(zk), k) for zk, k in parts])
    g = np.asarray(g_values)[idx]
    xi = z[:, 0]
    x = (
        np.multiply.outer(xi, structure.lambda_xi)
        + np.multiply.outer(g, structure.lambda_group)
        + z[:, 1:] * np.sqrt(structure.uniqueness)
    )
    return Sample(x=x, xi=xi, g=g, group_index=idx)


@dataclass(frozen=True)
class IdentifiabilityReport:
    """Numerical rank of the reduced correlation matrix ``Sigma - Psi^2``."""

    rank: int
    eigenvalues: tuple[float, ...]
    tolerance: float

    @property
    def single_factor(self) -> bool:
        return self.rank == 1


def identifiability_check(
    model: ModelSpec, group_mask=None, tol: float = 1e-10
) -> IdentifiabilityReport:
    """Rank of ``Sigma - Psi^2`` for the common factor plus group factor.

    A uniform group difference is proportional to the common loadings under
    equal loadings, so the reduced matrix has rank one and the two factors
    cannot be separated.  ``group_mask`` restricts the group difference to a
    subset of variables, which makes it separable (rank two).
    """
    lam_g = np.full(model.n_vars, model.lambda_g)
    if group_mask is not None:
        mask = np.asarray(group_mask, dtype=bool)
        if mask.shape != (model.n_vars,):
            raise ModelError(f"group_mask must have {model.n_vars} entries")
        lam_g = np.where(mask, lam_g, 0.0)
    structure = implied_structure(model.lambda_xi, lam_g)
    reduced = structure.sigma - np.diag(structure.uniqueness)
    rank = int(np.linalg.matrix_rank(reduced, tol=tol))
    eig = np.linalg.eigvalsh(reduced)[::-1]
    return IdentifiabilityReport(rank=rank, eigenvalues=tuple(map(float, eig)), tolerance=tol)
