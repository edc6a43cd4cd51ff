"""Response slicing and the between-slice covariance of standardized scores.

Slicing is contiguous in sorted response order with near-equal counts
(remainder samples go to the earliest slices); ties follow stable sort
order so results are reproducible. The between-slice covariance is built
as V = B B' with B = M G (I - g g'), where M holds within-slice score
means, g the square roots of slice proportions, and G = diag(g).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankError, ShapeError, SliceError
from .fdata import ResponseVector
from .fpca import EigenSystem, ScoreMatrix

__all__ = [
    "SlicePartition",
    "SirModel",
    "make_slices",
    "build_sir",
    "estimate_edr_directions",
]


@dataclass(frozen=True)
class SlicePartition:
    """Assignment of samples to H contiguous response slices."""

    H: int
    assignment: np.ndarray
    counts: np.ndarray
    boundaries: np.ndarray

    def __post_init__(self):
        assignment = np.asarray(self.assignment, dtype=np.intp)
        counts = np.asarray(self.counts, dtype=np.intp)
        boundaries = np.asarray(self.boundaries, dtype=float)
        if counts.size != self.H or boundaries.size != self.H - 1:
            raise SliceError("counts/boundaries do not match the slice count")
        if counts.sum() != assignment.size:
            raise SliceError("slice counts do not add up to the sample size")
        if np.any(counts < 2):
            raise SliceError("every slice needs at least two samples")
        assignment.setflags(write=False)
        counts.setflags(write=False)
        boundaries.setflags(write=False)
        object.__setattr__(self, "assignment", assignment)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "boundaries", boundaries)

    @property
    def n(self) -> int:
        return self.assignment.size


@dataclass(frozen=True)
class SirModel:
    """Between-slice summary of an m-column score matrix.

    g_hat  : square roots of slice proportions, unit norm.
    M_hat  : m x H matrix of within-slice score means.
    B_hat  : M_hat G (I - g g'); annihilates g_hat.
    V_hat  : B_hat B_hat', the between-slice covariance.
    """

    m: int
    H: int
    g_hat: np.ndarray
    M_hat: np.ndarray
    B_hat: np.ndarray
    V_hat: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g_hat, dtype=float)
        M = np.asarray(self.M_hat, dtype=float)
        B = np.asarray(self.B_hat, dtype=float)
        V = np.asarray(self.V_hat, dtype=float)
        if g.shape != (self.H,) or M.shape != (self.m, self.H):
            raise ShapeError("g_hat/M_hat shapes do not match (m, H)")
        if B.shape != (self.m, self.H) or V.shape != (self.m, self.m):
            raise ShapeError("B_hat/V_hat shapes do not match (m, H)")
        if abs(np.linalg.norm(g) - 1.0) > 1e-12:
            raise ShapeError("g_hat must have unit Euclidean norm")
        if np.max(np.abs(B @ g), initial=0.0) > 1e-10:
            raise ShapeError("B_hat must annihilate g_hat")
        if np.max(np.abs(V - V.T), initial=0.0) > 1e-12:
            raise ShapeError("V_hat must be symmetric")
        for a in (g, M, B, V):
            a.setflags(write=False)
        object.__setattr__(self, "g_hat", g)
        object.__setattr__(self, "M_hat", M)
        object.__setattr__(self, "B_hat", B)
        object.__setattr__(self, "V_hat", V)

    def leading(self, m: int) -> "SirModel":
        """Model restricted to the first m score components.

        Rows of B_hat are per-component, so the restriction is exact: the
        restricted V_hat is the leading m x m principal submatrix.
        """
        if not 1 <= m <= self.m:
            raise RankError(f"cannot restrict an order-{self.m} model to m={m}")
        if m == self.m:
            return self
        return SirModel(
            m, self.H, self.g_hat, self.M_hat[:m], self.B_hat[:m],
            self.V_hat[:m, :m],
        )

    def to_json_dict(self) -> dict:
        """Summary used by the CLI inspect command."""
        eigvals = np.sort(np.linalg.eigvalsh(self.V_hat))[::-1]
        return {
            "m": self.m,
            "H": self.H,
            "g_hat": self.g_hat.tolist(),
            "M_hat": self.M_hat.tolist(),
            "v_hat_eigenvalues": eigvals.tolist(),
        }


def make_slices(y: ResponseVector, H: int) -> SlicePartition:
    """Partition samples into H contiguous, near-equal-count response slices.

    Counts are n // H plus one extra for the first n % H slices. Ties in y
    are resolved by stable sort on the original index.

    Raises
    ------
    SliceError
        H < 2 or n < 2H (a slice would hold fewer than two samples).
    """
    if H < 2:
        raise SliceError("need at least two slices")
    n = y.n
    if n < 2 * H:
        raise SliceError(f"n={n} too small for H={H} slices of at least 2")

    order = np.argsort(y.y, kind="stable")
    base, extra = divmod(n, H)
    counts = np.full(H, base, dtype=np.intp)
    counts[:extra] += 1

    assignment = np.empty(n, dtype=np.intp)
    assignment[order] = np.repeat(np.arange(H), counts)

    ends = np.cumsum(counts)[:-1]
    y_sorted = y.y[order]
    boundaries = (y_sorted[ends - 1] + y_sorted[ends]) / 2.0
    return SlicePartition(H, assignment, counts, boundaries)


def slice_means(scores: np.ndarray, part: SlicePartition) -> np.ndarray:
    """Within-slice means of score columns, as an m x H matrix."""
    if scores.shape[0] != part.n:
        raise ShapeError("scores and partition disagree on the sample size")
    if np.any(part.counts < 1):
        raise SliceError("partition contains an empty slice")
    H = part.H
    sums = np.zeros((H, scores.shape[1]))
    np.add.at(sums, part.assignment, scores)
    return (sums / part.counts[:, None]).T


def build_sir(scores: ScoreMatrix, part: SlicePartition) -> SirModel:
    """Between-slice covariance model of the given standardized scores."""
    M = slice_means(scores.scores, part)
    g = np.sqrt(part.counts / part.n)
    # F = G (I - g g'); fold the diagonal G in before the rank-one update.
    # Row projections are taken one dot product at a time so that rows of B
    # do not depend on how many components sit below them (exact nesting).
    MG = M * g
    proj = np.array([float(np.dot(row, g)) for row in MG])
    B = MG - np.outer(proj, g)
    return SirModel(scores.m, part.H, g, M, B, B @ B.T)


def estimate_edr_directions(sir: SirModel, eig: EigenSystem, K: int) -> np.ndarray:
    """Plain direction estimates from the top-K eigenvectors of V_hat.

    Direction k is the grid-sampled combination
    sum_j eigenvalue_j^{-1/2} b_{kj} eigenfunction_j, returned as a K x T
    matrix.

    Raises
    ------
    RankError
        K outside 1..min(m, H-1).
    """
    limit = min(sir.m, sir.H - 1)
    if not 1 <= K <= limit:
        raise RankError(f"K={K} outside the identifiable range 1..{limit}")
    if eig.rank < sir.m:
        raise RankError("eigensystem rank below the score order m")
    lam, vec = np.linalg.eigh(sir.V_hat)
    top = vec[:, np.argsort(lam)[::-1][:K]]
    return (top.T / np.sqrt(eig.eigenvalues[: sir.m])) @ eig.eigenfunctions[: sir.m]
