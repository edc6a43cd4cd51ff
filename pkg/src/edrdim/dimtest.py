"""Sequential hypothesis tests for the dimension of the EDR space.

Three tests of H0: K <= K0 are provided. The plain chi-square test sums
the trailing eigenvalues of the between-slice covariance at a fixed score
order m and refers n times that sum to a chi-square law with
(m - K0)(H - K0 - 1) degrees of freedom. The adjusted chi-square test
rescales the between-slice matrix by per-slice dispersion factors so the
same limit holds for elliptically contoured (not just Gaussian)
predictors. The adaptive Neyman test maximizes standardized chi-square
statistics over score orders m = K0+1..N and compares the maximum against
simulated critical values of a chi-square partial-sum bound process.

The dimension estimate is the first K0 at which the chosen test fails to
reject.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import stats

from .errors import (
    DegenerateError,
    DomainError,
    NumericalError,
    RankError,
    ShapeError,
    SliceError,
)
from .fdata import CurveSet, MultivariateSet, ResponseVector
from .fpca import ScoreMatrix, eigensystem, pc_scores, usable_rank
from .sir import SirModel, SlicePartition, build_sir, make_slices

__all__ = [
    "TestResult",
    "NeymanCriticalTable",
    "NeymanStatistic",
    "DimensionConfig",
    "DimensionEstimate",
    "degrees_of_freedom",
    "chi2_statistic",
    "chi2_test",
    "slice_scale_factors",
    "adjusted_chi2_statistic",
    "adjusted_chi2_test",
    "neyman_statistic",
    "simulate_neyman_critical",
    "neyman_test",
    "sequential_dimension_test",
    "estimate_dimension",
]

CHI2_METHODS = ("chi2", "adjusted_chi2")
METHODS = CHI2_METHODS + ("adaptive_neyman",)

# Stream used for critical-value simulation when the caller does not pick one.
DEFAULT_CRITICAL_SEED = 141592653


@dataclass(frozen=True)
class TestResult:
    """Outcome of one test of H0: K <= k0."""

    method: str
    k0: int
    statistic: float
    alpha: float
    reject: bool
    df: int | None = None
    p_value: float | None = None
    critical_value: float | None = None
    max_at_m: int | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}")
        if self.method in CHI2_METHODS:
            if self.df is None or self.df <= 0 or self.p_value is None:
                raise DomainError("chi-square results need df > 0 and a p-value")
            if self.statistic < 0.0:
                raise DomainError("chi-square statistics are nonnegative")
            if self.reject != (self.p_value < self.alpha):
                raise DomainError("reject flag inconsistent with the p-value")
        else:
            if self.critical_value is None:
                raise DomainError("adaptive Neyman results need a critical value")
            if self.reject != (self.statistic > self.critical_value):
                raise DomainError("reject flag inconsistent with the critical value")

    def to_json_dict(self) -> dict:
        out = {
            "method": self.method,
            "k0": self.k0,
            "statistic": self.statistic,
            "df": self.df,
            "p_value": self.p_value,
            "critical_value": self.critical_value,
            "alpha": self.alpha,
            "reject": self.reject,
        }
        if self.max_at_m is not None:
            out["max_at_m"] = self.max_at_m
        return out


@dataclass(frozen=True)
class NeymanCriticalTable:
    """Simulated upper quantile of the adaptive Neyman bound process."""

    H: int
    k0: int
    N: int
    alpha: float
    replicates: int
    seed: int
    u_alpha: float

    def __post_init__(self):
        if self.replicates < 10_000:
            raise DomainError("critical values need at least 10,000 replicates")


class NeymanStatistic(NamedTuple):
    value: float
    max_at_m: int


def degrees_of_freedom(m: int, H: int, k0: int) -> int:
    """(m - k0)(H - k0 - 1); requires m >= k0 + 1 and H > k0 + 1."""
    if k0 < 0 or m < k0 + 1 or H <= k0 + 1:
        raise DomainError(
            f"no valid chi-square limit for m={m}, H={H}, k0={k0}"
        )
    return (m - k0) * (H - k0 - 1)


def _trailing_eigenvalue_sum(v_hat: np.ndarray, k0: int) -> float:
    lam = np.linalg.eigvalsh(v_hat)  # ascending
    trailing = np.maximum(lam[: v_hat.shape[0] - k0], 0.0)
    return float(trailing.sum())


def chi2_statistic(sir: SirModel, n: int, k0: int) -> float:
    """n times the sum of the m - k0 smallest eigenvalues of V_hat.

    Eigenvalues are clamped at zero before summation so round-off cannot
    drive the statistic negative.
    """
    if not 0 <= k0 < sir.m:
        raise DomainError(f"k0={k0} must lie in 0..{sir.m - 1}")
    return n * _trailing_eigenvalue_sum(sir.V_hat, k0)


def chi2_test(sir: SirModel, n: int, k0: int, alpha: float = 0.05) -> TestResult:
    """Plain chi-square test of H0: K <= k0 at score order m."""
    df = degrees_of_freedom(sir.m, sir.H, k0)
    statistic = chi2_statistic(sir, n, k0)
    p_value = float(stats.chi2.sf(statistic, df))
    return TestResult(
        method="chi2",
        k0=k0,
        statistic=statistic,
        alpha=alpha,
        reject=p_value < alpha,
        df=df,
        p_value=p_value,
    )


def _noise_projector(sir: SirModel, k0: int) -> np.ndarray:
    """Eigenvectors of the m - k0 smallest eigenvalues of V_hat, as columns."""
    lam, vec = np.linalg.eigh(sir.V_hat)
    return vec[:, : sir.m - k0]


def slice_scale_factors(
    scores: ScoreMatrix, part: SlicePartition, sir: SirModel, k0: int
) -> np.ndarray:
    """Per-slice dispersion factors used by the adjusted test.

    Factor h estimates the conditional second moment of the elliptical
    mixing variable given that the response falls in slice h: the average
    squared length of the within-slice centered scores after projection
    onto the noise eigenvectors of V_hat, per noise coordinate.

    Raises
    ------
    SliceError
        A slice holds fewer than two samples.
    DegenerateError
        A slice has no within-slice score dispersion.
    """
    if sir.m <= k0:
        raise DomainError(f"need m > k0, got m={sir.m}, k0={k0}")
    if np.any(part.counts < 2):
        raise SliceError("every slice needs at least two samples")
    if scores.m != sir.m or scores.n != part.n:
        raise ShapeError("scores, partition and model do not align")

    proj = _noise_projector(sir, k0)
    centered = (scores.scores - sir.M_hat.T[part.assignment]) @ proj
    rowsq = np.einsum("ij,ij->i", centered, centered)
    per_slice = np.bincount(part.assignment, weights=rowsq, minlength=part.H)
    factors = per_slice / ((sir.m - k0) * part.counts)
    if np.any(factors <= 0.0):
        raise DegenerateError("a slice has no within-slice score dispersion")
    return factors


def adjusted_chi2_statistic(
    sir: SirModel, scale_factors: np.ndarray, n: int, k0: int
) -> float:
    """Trailing eigenvalue statistic of the rescaled between-slice matrix.

    The between-slice matrix is replaced by W W' with
    W = B L (L (I - g g') L)^+, L the diagonal of square-root scale
    factors and ^+ the Moore-Penrose pseudoinverse (singular values below
    max(H, m) * machine epsilon * sigma_max are zeroed). With unit scale
    factors this collapses exactly onto the plain statistic.
    """
    if not 0 <= k0 < sir.m:
        raise DomainError(f"k0={k0} must lie in 0..{sir.m - 1}")
    scale_factors = np.asarray(scale_factors, dtype=float)
    if scale_factors.shape != (sir.H,):
        raise ShapeError("need one scale factor per slice")
    if np.any(scale_factors <= 0.0):
        raise DegenerateError("scale factors must be positive")

    root = np.sqrt(scale_factors)
    core = np.diag(scale_factors) - np.outer(root * sir.g_hat, root * sir.g_hat)
    try:
        core_pinv = np.linalg.pinv(
            core, rcond=max(sir.H, sir.m) * np.finfo(float).eps
        )
    except np.linalg.LinAlgError as exc:
        raise NumericalError("pseudoinverse of the scale core failed") from exc
    w = (sir.B_hat * root) @ core_pinv
    return n * _trailing_eigenvalue_sum(w @ w.T, k0)


def adjusted_chi2_test(
    scores: ScoreMatrix,
    part: SlicePartition,
    sir: SirModel,
    n: int,
    k0: int,
    alpha: float = 0.05,
) -> TestResult:
    """Adjusted chi-square test of H0: K <= k0 for elliptical predictors."""
    df = degrees_of_freedom(sir.m, sir.H, k0)
    factors = slice_scale_factors(scores, part, sir, k0)
    statistic = adjusted_chi2_statistic(sir, factors, n, k0)
    p_value = float(stats.chi2.sf(statistic, df))
    return TestResult(
        method="adjusted_chi2",
        k0=k0,
        statistic=statistic,
        alpha=alpha,
        reject=p_value < alpha,
        df=df,
        p_value=p_value,
    )


def standardize_statistics(
    statistics: np.ndarray, H: int, k0: int, m_values: np.ndarray
) -> np.ndarray:
    """Center each statistic at its df and scale by sqrt(2 df)."""
    df = (m_values - k0) * (H - k0 - 1)
    if np.any(df <= 0):
        raise DomainError("standardization needs positive degrees of freedom")
    return (statistics - df) / np.sqrt(2.0 * df)


def neyman_statistic(
    scores_full: ScoreMatrix, part: SlicePartition, n: int, k0: int, N: int
) -> NeymanStatistic:
    """Maximum standardized trailing-eigenvalue statistic over m = k0+1..N.

    The between-slice model is built once at order N; the model at order
    m < N is its exact leading restriction, so the whole sweep costs one
    pass over the score columns.

    Raises
    ------
    RankError
        Fewer than N score columns are available.
    """
    if N > scores_full.m:
        raise RankError(f"N={N} exceeds the {scores_full.m} available components")
    if N <= k0:
        raise DomainError(f"need N > k0, got N={N}, k0={k0}")
    degrees_of_freedom(k0 + 1, part.H, k0)  # validate H against k0

    sir_n = build_sir(scores_full, part).leading(N)

    m_values = np.arange(k0 + 1, N + 1)
    raw = np.array(
        [chi2_statistic(sir_n.leading(int(m)), n, k0) for m in m_values]
    )
    standardized = standardize_statistics(raw, part.H, k0, m_values)
    best = int(np.argmax(standardized))
    return NeymanStatistic(float(standardized[best]), int(m_values[best]))


def simulate_neyman_critical(
    H: int,
    k0: int,
    N: int,
    alpha: float,
    replicates: int = 100_000,
    seed: int = DEFAULT_CRITICAL_SEED,
) -> NeymanCriticalTable:
    """Empirical upper-alpha quantile of the bound process maximum.

    Each replicate draws N - k0 independent chi-square variables with
    H - k0 - 1 degrees of freedom, forms their partial sums, standardizes
    every partial sum by its mean and standard deviation, and records the
    maximum. The returned quantile uses linear interpolation (type 7).
    The simulation is one vectorized draw from a single seeded stream, so
    results do not depend on any threading configuration.
    """
    df_step = H - k0 - 1
    if df_step < 1 or N <= k0:
        raise DomainError(f"no valid bound process for H={H}, k0={k0}, N={N}")
    if replicates < 10_000:
        raise DomainError("critical values need at least 10,000 replicates")
    rng = np.random.default_rng(seed)
    m_values = np.arange(k0 + 1, N + 1)
    df = (m_values - k0) * df_step
    maxima = np.full(replicates, -np.inf)
    # Blocked to bound memory at large replicate counts.
    block = 65_536
    for start in range(0, replicates, block):
        stop = min(start + block, replicates)
        draws = rng.chisquare(df_step, size=(stop - start, N - k0))
        partial = np.cumsum(draws, axis=1)
        standardized = (partial - df) / np.sqrt(2.0 * df)
        maxima[start:stop] = standardized.max(axis=1)
    u_alpha = float(np.quantile(maxima, 1.0 - alpha))
    return NeymanCriticalTable(H, k0, N, alpha, replicates, seed, u_alpha)


@lru_cache(maxsize=128)
def _cached_critical(
    H: int, k0: int, N: int, alpha: float, replicates: int, seed: int
) -> NeymanCriticalTable:
    return simulate_neyman_critical(H, k0, N, alpha, replicates, seed)


def neyman_test(
    scores_full: ScoreMatrix,
    part: SlicePartition,
    n: int,
    k0: int,
    N: int,
    alpha: float,
    crit: NeymanCriticalTable,
) -> TestResult:
    """Adaptive Neyman test of H0: K <= k0; rejects on strict exceedance."""
    if (crit.H, crit.k0, crit.N) != (part.H, k0, N):
        raise DomainError(
            "critical table simulated for "
            f"(H={crit.H}, k0={crit.k0}, N={crit.N}), "
            f"test invoked with (H={part.H}, k0={k0}, N={N})"
        )
    stat = neyman_statistic(scores_full, part, n, k0, N)
    return TestResult(
        method="adaptive_neyman",
        k0=k0,
        statistic=stat.value,
        alpha=alpha,
        reject=stat.value > crit.u_alpha,
        critical_value=crit.u_alpha,
        max_at_m=stat.max_at_m,
    )


@dataclass(frozen=True)
class DimensionConfig:
    """Knobs of the sequential dimension estimator.

    m is required for the chi-square methods. N, when left unset, grows
    with the hypothesis as k0 + 30 capped at the usable score rank.
    `seed` and `critical_replicates` control the simulated critical values
    of the adaptive test.
    """

    method: str = "chi2"
    H: int = 8
    m: int | None = None
    N: int | None = None
    alpha: float = 0.05
    seed: int = DEFAULT_CRITICAL_SEED
    critical_replicates: int = 100_000

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}")
        if self.method in CHI2_METHODS and self.m is None:
            raise DomainError(f"method {self.method!r} needs an explicit m")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must lie strictly between 0 and 1")
        if self.H < 2:
            raise DomainError("need at least two slices")


@dataclass(frozen=True)
class DimensionEstimate:
    """Result of the sequential testing loop.

    The trace holds one result per tested hypothesis; every entry below
    k_hat rejects, and the entry at k_hat fails to reject unless the
    estimate hit the feasibility cap.
    """

    k_hat: int
    trace: tuple[TestResult, ...]
    capped: bool

    def __post_init__(self):
        for i, result in enumerate(self.trace):
            if result.k0 != i:
                raise DomainError("trace must cover k0 = 0, 1, 2, ... in order")
            expected_reject = i < self.k_hat
            if result.reject != expected_reject:
                raise DomainError("trace decisions inconsistent with k_hat")
        if not self.capped and (not self.trace or self.trace[-1].reject):
            raise DomainError("an uncapped estimate must end in a non-rejection")

    def to_json_dict(self) -> dict:
        return {
            "k_hat": self.k_hat,
            "capped": self.capped,
            "trace": [r.to_json_dict() for r in self.trace],
        }


def _auto_n(k0: int, available: int, fixed_n: int | None) -> int:
    if fixed_n is not None:
        return fixed_n
    return min(k0 + 30, available)


def sequential_dimension_test(
    scores_full: ScoreMatrix,
    part: SlicePartition,
    n: int,
    config: DimensionConfig,
) -> DimensionEstimate:
    """Run the chosen test at k0 = 0, 1, ... until it fails to reject.

    `scores_full` must carry every component the loop can touch: at least
    m columns for the chi-square methods, and up to N (or k0 + 30 at the
    largest feasible k0) for the adaptive test. The loop stops at the
    largest k0 with positive degrees of freedom; if every hypothesis up to
    that point is rejected the estimate is flagged as capped.
    """
    H = part.H
    available = scores_full.m

    if config.method in CHI2_METHODS:
        m = config.m
        if m > available:
            raise RankError(f"m={m} exceeds the {available} available components")
        k0_cap = min(m - 1, H - 2)
        sir = build_sir(scores_full, part).leading(m)
        scores_m = _leading_scores(scores_full, m) if available > m else scores_full
    else:
        fixed_n = config.N
        if fixed_n is not None and fixed_n > available:
            raise RankError(
                f"N={fixed_n} exceeds the {available} available components"
            )
        k0_cap = min(H - 2, available - 1)
        if fixed_n is not None:
            k0_cap = min(k0_cap, fixed_n - 1)
        sir = None

    if k0_cap < 0:
        raise DomainError("no testable hypothesis under this configuration")

    trace: list[TestResult] = []
    for k0 in range(k0_cap + 1):
        if config.method == "chi2":
            result = chi2_test(sir, n, k0, config.alpha)
        elif config.method == "adjusted_chi2":
            result = adjusted_chi2_test(scores_m, part, sir, n, k0, config.alpha)
        else:
            N = _auto_n(k0, available, config.N)
            crit = _cached_critical(
                H, k0, N, config.alpha, config.critical_replicates, config.seed
            )
            result = neyman_test(scores_full, part, n, k0, N, config.alpha, crit)
        trace.append(result)
        if not result.reject:
            return DimensionEstimate(k0, tuple(trace), capped=False)
    return DimensionEstimate(k0_cap + 1, tuple(trace), capped=True)


def _leading_scores(scores: ScoreMatrix, m: int) -> ScoreMatrix:
    return ScoreMatrix(scores.scores[:, :m])


def estimate_dimension(
    x: CurveSet | MultivariateSet,
    y: ResponseVector,
    config: DimensionConfig,
) -> DimensionEstimate:
    """End-to-end dimension estimate from raw predictors and responses."""
    curves = x.to_curves() if isinstance(x, MultivariateSet) else x
    if curves.n != y.n:
        raise ShapeError(f"{curves.n} predictors but {y.n} responses")
    eig = eigensystem(curves)
    available = usable_rank(eig)
    part = make_slices(y, config.H)
    if config.method in CHI2_METHODS:
        needed = config.m
    else:
        needed = min(config.N or (min(config.H - 2, available - 1) + 30), available)
    scores = pc_scores(curves, eig, needed)
    return sequential_dimension_test(scores, part, curves.n, config)
