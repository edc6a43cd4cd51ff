"""Sample principal components of a curve set.

The covariance eigenproblem is solved in quadrature geometry: with
W = diag(weights) and C the T x T sample covariance matrix (divisor 1/n),
the eigenpairs of W^{1/2} C W^{1/2} are computed and the eigenvectors are
mapped back through W^{-1/2}. Eigenfunctions are therefore orthonormal in
the quadrature inner product, and standardized scores are uncorrelated
with unit sample variance by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, RankError, ShapeError
from .fdata import CurveSet, Grid

__all__ = [
    "EigenSystem",
    "ScoreMatrix",
    "sample_mean",
    "eigensystem",
    "pc_scores",
    "usable_rank",
]

# Components with eigenvalue below this fraction of the largest one are too
# close to zero for score standardization.
USABLE_EIGENVALUE_RTOL = 1e-12


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues and grid-sampled eigenfunctions of the sample covariance.

    Eigenvalues are sorted nonincreasing and clamped at zero; row j of
    `eigenfunctions` is the j-th eigenfunction. The sign of each
    eigenfunction is fixed so that its entry of largest magnitude is
    positive.
    """

    grid: Grid
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.eigenvalues, dtype=float)
        funcs = np.asarray(self.eigenfunctions, dtype=float)
        if vals.ndim != 1 or funcs.ndim != 2 or funcs.shape[0] != vals.size:
            raise ShapeError("eigenvalues and eigenfunction rows must align")
        if funcs.shape[1] != self.grid.size:
            raise ShapeError("eigenfunctions must be sampled on the grid")
        if np.any(np.diff(vals) > 0):
            raise ShapeError("eigenvalues must be sorted nonincreasing")
        if vals.size and vals[-1] < 0:
            raise ShapeError("eigenvalues must be nonnegative")
        vals.setflags(write=False)
        funcs.setflags(write=False)
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "eigenfunctions", funcs)

    @property
    def rank(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class ScoreMatrix:
    """n x m matrix of standardized principal-component scores.

    Columns have sample mean zero and (1/n) scores' scores = identity.
    """

    scores: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float)
        if scores.ndim != 2:
            raise ShapeError("scores must be a 2-d matrix")
        n = scores.shape[0]
        if np.max(np.abs(scores.mean(axis=0)), initial=0.0) > 1e-10:
            raise ShapeError("score columns must have sample mean zero")
        gram = scores.T @ scores / n
        if np.max(np.abs(gram - np.eye(scores.shape[1])), initial=0.0) > 1e-8:
            raise ShapeError("scores must satisfy (1/n) S'S = I")
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

    @property
    def n(self) -> int:
        return self.scores.shape[0]

    @property
    def m(self) -> int:
        return self.scores.shape[1]


def sample_mean(curves: CurveSet) -> np.ndarray:
    """Pointwise average curve."""
    return curves.values.mean(axis=0)


def eigensystem(curves: CurveSet) -> EigenSystem:
    """Eigendecomposition of the sample covariance operator.

    Returns the leading min(n-1, T) eigenpairs; trailing eigenvalues beyond
    the sample rank are numerically zero and kept so that the eigenvalue sum
    carries the total variance.

    Raises
    ------
    DegenerateError
        All curves are identical (zero total variance).
    """
    values = curves.values
    n, size = values.shape
    centered = values - values.mean(axis=0)

    total_var = float(np.sum((centered * curves.grid.weights) * centered)) / n
    if total_var <= 0.0:
        raise DegenerateError("sample has zero total variance")

    root_w = np.sqrt(curves.grid.weights)
    weighted = centered * root_w
    cov_w = weighted.T @ weighted / n
    lam, vec = np.linalg.eigh(cov_w)

    rank = min(n - 1, size)
    order = np.argsort(lam)[::-1][:rank]
    lam = np.maximum(lam[order], 0.0)
    funcs = vec[:, order].T / root_w

    # Sign convention: largest-magnitude entry of each eigenfunction positive.
    peaks = np.argmax(np.abs(funcs), axis=1)
    flip = funcs[np.arange(rank), peaks] < 0
    funcs[flip] *= -1.0

    return EigenSystem(curves.grid, lam, funcs)


def usable_rank(eig: EigenSystem) -> int:
    """Number of components safe to standardize against."""
    if eig.rank == 0 or eig.eigenvalues[0] <= 0.0:
        return 0
    return int(np.sum(eig.eigenvalues > USABLE_EIGENVALUE_RTOL * eig.eigenvalues[0]))


def pc_scores(curves: CurveSet, eig: EigenSystem, m: int) -> ScoreMatrix:
    """Standardized scores of the leading m components.

    Score (i, j) is the quadrature projection of the centered curve i onto
    eigenfunction j, divided by the square root of eigenvalue j.

    Raises
    ------
    RankError
        m exceeds the usable rank of the eigensystem.
    """
    limit = usable_rank(eig)
    if not 1 <= m <= limit:
        raise RankError(f"m={m} outside the usable component range 1..{limit}")
    if curves.grid.size != eig.grid.size:
        raise ShapeError("curves and eigensystem live on different grids")
    centered = curves.values - curves.values.mean(axis=0)
    proj = (centered * curves.grid.weights) @ eig.eigenfunctions[:m].T
    return ScoreMatrix(proj / np.sqrt(eig.eigenvalues[:m]))
