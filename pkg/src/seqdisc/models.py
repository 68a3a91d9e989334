"""Model abstraction: boxes, parametric models, noise, experimental data."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import EvaluationFailure, OutOfBounds


class _Box:
    """Axis-aligned box of (lo, hi) intervals."""

    def __init__(self, bounds: Sequence[tuple[float, float]]):
        arr = np.asarray(bounds, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
            raise ValueError("bounds must be a non-empty list of (lo, hi) pairs")
        if not np.all(arr[:, 0] < arr[:, 1]):
            raise ValueError("every interval needs lo < hi")
        self.bounds = arr

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    @property
    def lower(self) -> np.ndarray:
        return self.bounds[:, 0]

    @property
    def upper(self) -> np.ndarray:
        return self.bounds[:, 1]

    def contains(self, v: np.ndarray, atol: float = 1e-12) -> bool:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            return False
        return bool(
            np.all(v >= self.lower - atol) and np.all(v <= self.upper + atol)
        )

    def clip(self, v: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(v, dtype=float), self.lower, self.upper)

    def __eq__(self, other) -> bool:
        return type(other) is type(self) and np.array_equal(
            self.bounds, other.bounds
        )

    def __repr__(self):
        return f"{type(self).__name__}({self.bounds.tolist()})"


class DesignSpace(_Box):
    """Operating boundaries for the design variables."""


class ParameterSpace(_Box):
    """Box constraint for a model's parameters."""


@dataclass(frozen=True)
class ParametricModel:
    """A rival hypothesis with a deterministic evaluator f(x, theta).

    ``evaluator`` maps (x[d], theta[D]) to an output vector of length
    ``output_dim``. It must be deterministic: equal inputs give bitwise
    equal outputs.
    """

    name: str
    design_space: DesignSpace
    parameter_space: ParameterSpace
    output_dim: int
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    # Optional batched evaluator: (X (n,d), Theta (n,D)) -> (n,E). Used by
    # hot paths when present; must agree with `evaluator` elementwise.
    batch_evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.output_dim < 1:
            raise ValueError("output_dim must be >= 1")

    @property
    def n_params(self) -> int:
        return self.parameter_space.dim

    def evaluate(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Evaluate f(x, theta) with box checking."""
        x = np.asarray(x, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if not self.design_space.contains(x):
            raise OutOfBounds(f"{self.name}: x={x} outside design space")
        if not self.parameter_space.contains(theta):
            raise OutOfBounds(f"{self.name}: theta outside parameter space")
        out = np.asarray(self.evaluator(x, theta), dtype=float)
        if out.shape != (self.output_dim,):
            raise EvaluationFailure(
                f"{self.name}: evaluator returned shape {out.shape}, "
                f"expected ({self.output_dim},)"
            )
        if not np.all(np.isfinite(out)):
            raise EvaluationFailure(f"{self.name}: non-finite output at x={x}")
        return out

    def evaluate_batch(self, X: np.ndarray, Theta: np.ndarray) -> np.ndarray:
        """Evaluate rows of (X, Theta) without per-row box checks.

        Falls back to a Python loop when no batched evaluator was supplied.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Theta = np.atleast_2d(np.asarray(Theta, dtype=float))
        if Theta.shape[0] == 1 and X.shape[0] > 1:
            Theta = np.broadcast_to(Theta, (X.shape[0], Theta.shape[1]))
        if self.batch_evaluator is not None:
            out = np.asarray(self.batch_evaluator(X, Theta), dtype=float)
        else:
            out = np.stack(
                [
                    np.asarray(self.evaluator(x, t), dtype=float)
                    for x, t in zip(X, Theta)
                ]
            )
        if not np.all(np.isfinite(out)):
            raise EvaluationFailure(f"{self.name}: non-finite batched output")
        return out


class NoiseModel:
    """Known measurement-noise covariance (symmetric positive definite)."""

    def __init__(self, covariance: np.ndarray):
        cov = np.atleast_2d(np.asarray(covariance, dtype=float))
        if cov.shape[0] != cov.shape[1]:
            raise ValueError("covariance must be square")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ValueError("covariance must be symmetric within 1e-12")
        eig = np.linalg.eigvalsh(cov)
        if np.min(eig) <= 0:
            raise ValueError("covariance must be positive definite")
        self.covariance = 0.5 * (cov + cov.T)
        self._inv = np.linalg.inv(self.covariance)
        self._chol = np.linalg.cholesky(self.covariance)

    @property
    def dim(self) -> int:
        return self.covariance.shape[0]

    @property
    def inverse(self) -> np.ndarray:
        return self._inv

    def sample(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        """Draw n zero-mean noise vectors."""
        return rng.standard_normal((n, self.dim)) @ self._chol.T


@dataclass
class ExperimentDataset:
    """Append-only record of (x, y) observations with provenance tags."""

    design_space: DesignSpace
    output_dim: int
    _xs: list[np.ndarray] = field(default_factory=list)
    _ys: list[np.ndarray] = field(default_factory=list)
    _tags: list[str] = field(default_factory=list)

    _VALID_TAGS = ("initial", "designed", "manual")

    def append(self, x: np.ndarray, y: np.ndarray, tag: str = "manual") -> None:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if not self.design_space.contains(x):
            raise OutOfBounds(f"x={x} outside design space")
        if y.shape != (self.output_dim,):
            raise ValueError(f"y must have shape ({self.output_dim},)")
        if tag not in self._VALID_TAGS:
            raise ValueError(f"unknown provenance tag {tag!r}")
        self._xs.append(x.copy())
        self._ys.append(y.copy())
        self._tags.append(tag)

    def __len__(self) -> int:
        return len(self._xs)

    @property
    def X(self) -> np.ndarray:
        if not self._xs:
            return np.empty((0, self.design_space.dim))
        return np.stack(self._xs)

    @property
    def Y(self) -> np.ndarray:
        if not self._ys:
            return np.empty((0, self.output_dim))
        return np.stack(self._ys)

    @property
    def tags(self) -> tuple[str, ...]:
        return tuple(self._tags)

    def to_records(self) -> list[dict]:
        return [
            {"x": x.tolist(), "y": y.tolist(), "tag": t}
            for x, y, t in zip(self._xs, self._ys, self._tags)
        ]

    @classmethod
    def from_records(
        cls, design_space: DesignSpace, output_dim: int, records: list[dict]
    ) -> "ExperimentDataset":
        ds = cls(design_space, output_dim)
        for r in records:
            ds.append(np.array(r["x"]), np.array(r["y"]), r["tag"])
        return ds


def evaluate(model: ParametricModel, x, theta) -> np.ndarray:
    """Functional alias for :meth:`ParametricModel.evaluate`."""
    return model.evaluate(x, theta)
