"""Smooth convex objectives consumed by the greedy solver.

Two concrete instances are provided: the least-squares sensing objective
``Q(x) = ||Ax - y||^2`` and a logistic loss on +-1 labels.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .linalg import as_matrix, as_support, as_vector, read_csv, restricted_least_squares, tol_opt

__all__ = [
    "SolverError",
    "Objective",
    "SensingProblem",
    "QuadraticObjective",
    "LogisticObjective",
    "quadratic_value",
    "quadratic_gradient",
    "logistic_objective",
    "load_problem",
]


class SolverError(RuntimeError):
    """Raised when an inner restricted minimization fails to converge."""


class Objective:
    """Interface: ``value``, ``gradient`` and ``restricted_minimize``.

    Subclasses set ``dimension`` and ``tol_opt``; the latter bounds
    ``|gradient(x)_i|`` for ``i`` in ``F`` at ``x = restricted_minimize(F)``.
    """

    dimension: int
    tol_opt: float

    def value(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def restricted_minimize(self, F: Sequence[int]) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class SensingProblem:
    A: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", as_vector(self.y, A.shape[0]))

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


def quadratic_value(p: SensingProblem, x) -> float:
    r = p.A @ as_vector(x, p.A.shape[1]) - p.y
    return float(r @ r)


def quadratic_gradient(p: SensingProblem, x) -> np.ndarray:
    r = p.A @ as_vector(x, p.A.shape[1]) - p.y
    return 2.0 * (p.A.T @ r)


class QuadraticObjective(Objective):
    """``Q(x) = ||Ax - y||^2`` with exact restricted least-squares solves."""

    def __init__(self, problem: SensingProblem):
        self.problem = problem
        self.dimension = problem.A.shape[1]
        self.tol_opt = tol_opt(problem.A, problem.y)

    @classmethod
    def from_arrays(cls, A, y) -> "QuadraticObjective":
        return cls(SensingProblem(A, y))

    @property
    def A(self) -> np.ndarray:
        return self.problem.A

    @property
    def y(self) -> np.ndarray:
        return self.problem.y

    def value(self, x) -> float:
        return quadratic_value(self.problem, x)

    def gradient(self, x) -> np.ndarray:
        return quadratic_gradient(self.problem, x)

    def restricted_minimize(self, F):
        return restricted_least_squares(self.problem.A, self.problem.y, F)


def _log1pexp(t):
    # log(1 + exp(t)) without overflow
    return np.where(t > 0, t + np.log1p(np.exp(-np.abs(t))), np.log1p(np.exp(np.minimum(t, 0.0))))


def _sigmoid(t):
    e = np.exp(-np.abs(t))
    return np.where(t >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


class LogisticObjective(Objective):
    """``Q(x) = sum_i log(1 + exp(-label_i <row_i, x>))``.

    Restricted minimization runs damped Newton on the coordinates in ``F``
    with Armijo backtracking (halving, ``c = 1e-4``) for at most
    ``max_newton`` iterations.
    """

    armijo_c = 1e-4
    max_newton = 100

    def __init__(self, features, labels):
        X = as_matrix(features)
        labels = as_vector(labels, X.shape[0])
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        self.X = X
        self.labels = labels
        self.dimension = X.shape[1]
        self.tol_opt = tol_opt(X, labels)
        self._Z = labels[:, None] * X  # margin rows: <Z_i, x> = label_i <row_i, x>

    def value(self, x) -> float:
        m = self._Z @ as_vector(x, self.dimension)
        return float(np.sum(_log1pexp(-m)))

    def gradient(self, x) -> np.ndarray:
        m = self._Z @ as_vector(x, self.dimension)
        return -(self._Z.T @ _sigmoid(-m))

    def hessian(self, x) -> np.ndarray:
        m = self._Z @ as_vector(x, self.dimension)
        w = _sigmoid(m) * _sigmoid(-m)
        return (self._Z * w[:, None]).T @ self._Z

    def restricted_minimize(self, F):
        F = list(as_support(F, self.dimension))
        x = np.zeros(self.dimension)
        if not F:
            return x
        Z = self._Z[:, F]
        w = np.zeros(len(F))

        def f(v):
            return float(np.sum(_log1pexp(-(Z @ v))))

        fw = f(w)
        for _ in range(self.max_newton):
            m = Z @ w
            g = -(Z.T @ _sigmoid(-m))
            if np.max(np.abs(g)) <= self.tol_opt:
                x[F] = w
                return x
            curv = _sigmoid(m) * _sigmoid(-m)
            H = (Z * curv[:, None]).T @ Z
            try:
                step = -np.linalg.solve(H + 1e-12 * np.eye(len(F)), g)
            except np.linalg.LinAlgError:
                step = -g
            slope = float(g @ step)
            if slope >= 0:
                step, slope = -g, -float(g @ g)
            t = 1.0
            gmax = np.max(np.abs(g))
            while True:
                cand = w + t * step
                fc = f(cand)
                if fc <= fw + self.armijo_c * t * slope:
                    break
                # values agree to rounding: accept if the gradient still shrinks
                if abs(fc - fw) <= 1e-13 * max(1.0, abs(fw)):
                    gc = -(Z.T @ _sigmoid(-(Z @ cand)))
                    if np.max(np.abs(gc)) < gmax:
                        break
                t *= 0.5
                if t < 1e-20:
                    raise SolverError("line search stalled in restricted logistic solve")
            w, fw = cand, fc
        raise SolverError(
            f"restricted logistic solve on {len(F)} features did not reach "
            f"gradient tolerance {self.tol_opt:.3g} in {self.max_newton} Newton steps"
        )


def logistic_objective(features, labels) -> LogisticObjective:
    return LogisticObjective(features, labels)


def load_problem(path: str | Path) -> Objective:
    """Load a problem file ``{kind, matrix_csv, observation_csv}``.

    CSV paths are resolved relative to the problem file.
    """
    path = Path(path)
    spec = json.loads(path.read_text())
    kind = spec.get("kind")
    base = path.parent
    A = read_csv(base / spec["matrix_csv"])
    y = read_csv(base / spec["observation_csv"])
    if kind == "quadratic":
        return QuadraticObjective.from_arrays(A, y)
    if kind == "logistic":
        return LogisticObjective(A, y)
    raise ValueError(f"unknown problem kind {kind!r}")
