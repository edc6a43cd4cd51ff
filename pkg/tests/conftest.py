"""Shared test helpers."""

import numpy as np
import pytest

from edrdim.fpca import ScoreMatrix


def random_standardized_scores(rng, n: int, m: int) -> ScoreMatrix:
    """Exactly standardized score matrix: mean zero, (1/n) S'S = I.

    Built by orthonormalizing centered Gaussian columns, so it satisfies
    the ScoreMatrix invariants to machine precision.
    """
    z = rng.standard_normal((n, m))
    z -= z.mean(axis=0)
    q = np.linalg.qr(z)[0] * np.sqrt(n)
    return ScoreMatrix(q - q.mean(axis=0))


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
