"""Data model for densely observed functional and multivariate predictors.

Curves are kept on their observation grid and integrated with trapezoid
quadrature; multivariate data are the special case of an integer grid with
unit weights, so the inner product reduces to the ordinary dot product.
All containers are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import GridError, ParseError, ShapeError

__all__ = [
    "Grid",
    "CurveSet",
    "ResponseVector",
    "MultivariateSet",
    "inner_product",
    "load_curves",
    "save_curves",
    "load_multivariate",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.asarray(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Grid:
    """Observation grid with quadrature weights.

    Parameters
    ----------
    points : array-like
        Strictly increasing observation times, length T >= 2.
    weights : array-like
        Positive quadrature weights, one per point.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = _freeze(self.points)
        weights = _freeze(self.weights)
        if points.ndim != 1 or points.size < 2:
            raise GridError("grid needs at least two points")
        if not np.all(np.isfinite(points)):
            raise GridError("grid points must be finite")
        if np.any(np.diff(points) <= 0):
            raise GridError("grid points must be strictly increasing")
        if weights.shape != points.shape:
            raise ShapeError(
                f"got {weights.size} weights for {points.size} grid points"
            )
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise GridError("quadrature weights must be positive and finite")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def trapezoid(cls, points) -> "Grid":
        """Grid with trapezoid-rule weights; they sum to the grid span."""
        points = np.asarray(points, dtype=float)
        if points.ndim != 1 or points.size < 2:
            raise GridError("grid needs at least two points")
        if np.any(np.diff(points) <= 0):
            raise GridError("grid points must be strictly increasing")
        gaps = np.diff(points)
        weights = np.empty_like(points)
        weights[0] = gaps[0] / 2.0
        weights[-1] = gaps[-1] / 2.0
        weights[1:-1] = (gaps[:-1] + gaps[1:]) / 2.0
        return cls(points, weights)

    @classmethod
    def uniform(cls, size: int, start: float = 0.0, stop: float = 1.0) -> "Grid":
        """Trapezoid grid on `size` equally spaced points of [start, stop]."""
        return cls.trapezoid(np.linspace(start, stop, size))

    @classmethod
    def integer(cls, size: int) -> "Grid":
        """Grid {1, ..., size} with unit weights (dot-product geometry)."""
        return cls(np.arange(1.0, size + 1.0), np.ones(size))

    @property
    def size(self) -> int:
        return self.points.size


@dataclass(frozen=True)
class CurveSet:
    """n curves sampled on a shared grid, stored as an n x T matrix."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = _freeze(self.values)
        if values.ndim != 2:
            raise ShapeError("curve values must be a 2-d matrix")
        if values.shape[0] < 2:
            raise ShapeError("need at least two curves")
        if values.shape[1] != self.grid.size:
            raise ShapeError(
                f"curves have {values.shape[1]} columns but grid has "
                f"{self.grid.size} points"
            )
        if not np.all(np.isfinite(values)):
            raise ParseError("curve values must all be finite")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ResponseVector:
    """Scalar responses aligned with the rows of a CurveSet."""

    y: np.ndarray

    def __post_init__(self):
        y = _freeze(self.y)
        if y.ndim != 1:
            raise ShapeError("response must be one-dimensional")
        if not np.all(np.isfinite(y)):
            raise ParseError("response values must all be finite")
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.size


@dataclass(frozen=True)
class MultivariateSet:
    """n x p multivariate sample, treated as curves on the grid {1,...,p}."""

    values: np.ndarray
    grid: Grid = field(init=False)

    def __post_init__(self):
        values = _freeze(self.values)
        if values.ndim != 2:
            raise ShapeError("multivariate values must be a 2-d matrix")
        if values.shape[1] < 2:
            raise ShapeError("need at least two coordinates")
        if not np.all(np.isfinite(values)):
            raise ParseError("multivariate values must all be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "grid", Grid.integer(values.shape[1]))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def to_curves(self) -> CurveSet:
        return CurveSet(self.grid, self.values)


def inner_product(a, b, grid: Grid) -> float:
    """Quadrature inner product sum_t w_t a_t b_t.

    Approximates the integral of a*b over the grid span; exact for the
    dot product on integer grids with unit weights.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (grid.size,) or b.shape != (grid.size,):
        raise ShapeError(
            f"inner_product needs two vectors of length {grid.size}, "
            f"got shapes {a.shape} and {b.shape}"
        )
    return float(np.dot(grid.weights * a, b))


def _parse_float(token: str, where: str) -> float:
    try:
        return float(token)
    except ValueError as exc:
        raise ParseError(f"{where}: cannot parse {token!r} as a number") from exc


def _read_csv_rows(path) -> list[list[float]]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            rows.append(
                [
                    _parse_float(tok, f"{os.fspath(path)}:{lineno}")
                    for tok in line.split(",")
                ]
            )
    if not rows:
        raise ParseError(f"{os.fspath(path)}: file is empty")
    width = len(rows[0])
    for i, row in enumerate(rows, start=1):
        if len(row) != width:
            raise ParseError(
                f"{os.fspath(path)}:{i}: row has {len(row)} fields, expected {width}"
            )
    return rows


def load_curves(curve_path, response_path) -> tuple[CurveSet, ResponseVector]:
    """Read a curve CSV (header row of grid times) and an aligned response file.

    The curve file's first line holds the grid times; every following line is
    one curve sampled at those times. The response file holds one decimal per
    line. Trapezoid weights are attached to the grid.

    Raises
    ------
    ParseError
        Ragged rows or non-numeric fields.
    GridError
        Header times not strictly increasing.
    ShapeError
        Curve and response row counts disagree.
    """
    rows = _read_csv_rows(curve_path)
    if len(rows) < 2:
        raise ParseError(f"{os.fspath(curve_path)}: no curve rows after the header")
    grid = Grid.trapezoid(np.array(rows[0]))
    values = np.array(rows[1:])

    with open(response_path, "r", encoding="utf-8") as fh:
        y = [
            _parse_float(line.strip(), f"{os.fspath(response_path)}:{i}")
            for i, line in enumerate(fh, start=1)
            if line.strip()
        ]
    if len(y) != values.shape[0]:
        raise ShapeError(
            f"{values.shape[0]} curves but {len(y)} response values"
        )
    return CurveSet(grid, values), ResponseVector(np.array(y))


def save_curves(curves: CurveSet, response: ResponseVector, curve_path, response_path) -> None:
    """Write files in the format accepted by load_curves.

    Floats are written with repr, so a load/save/load cycle is bit-identical.
    """
    if response.n != curves.n:
        raise ShapeError(f"{curves.n} curves but {response.n} response values")
    with open(curve_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(repr(float(t)) for t in curves.grid.points) + "\n")
        for row in curves.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    with open(response_path, "w", encoding="utf-8") as fh:
        for v in response.y:
            fh.write(repr(float(v)) + "\n")


def load_multivariate(path) -> MultivariateSet:
    """Read a headerless n x p CSV as a multivariate sample."""
    return MultivariateSet(np.array(_read_csv_rows(path)))
