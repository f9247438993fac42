"""Fully corrective greedy selection (generalized OMP) with a full trace."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import as_support, write_csv
from .objective import Objective

__all__ = ["OmpConfig", "OmpResult", "select_coordinate", "omp_run", "write_trace"]


@dataclass(frozen=True)
class OmpConfig:
    """Iteration budget, warm-start feature set and early-stop tolerance.

    ``early_stop_grad_tol=None`` selects the default ``1e-10 * (1 + Q(x0))``;
    ``0.0`` disables early stopping so exactly ``k0`` greedy steps run
    whenever there is an unselected coordinate left.
    """

    k0: int
    F0: tuple[int, ...] = ()
    early_stop_grad_tol: float | None = None

    def __post_init__(self):
        if self.k0 < 0:
            raise ValueError("k0 must be nonnegative")
        object.__setattr__(self, "F0", tuple(sorted(set(int(i) for i in self.F0))))


@dataclass
class OmpResult:
    iterates: list[np.ndarray] = field(default_factory=list)
    supports: list[tuple[int, ...]] = field(default_factory=list)
    selected: list[int] = field(default_factory=list)
    objective_values: list[float] = field(default_factory=list)
    grad_infnorms: list[float] = field(default_factory=list)
    stopped_early: bool = False

    @property
    def x(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def support(self) -> tuple[int, ...]:
        return self.supports[-1]

    @property
    def iterations(self) -> int:
        return len(self.iterates) - 1

    def trace_records(self) -> list[dict]:
        return [
            {
                "k": k,
                "selected_j": None if k == 0 else self.selected[k - 1],
                "objective": self.objective_values[k],
                "grad_infnorm": self.grad_infnorms[k],
                "support": list(self.supports[k]),
            }
            for k in range(len(self.iterates))
        ]


def select_coordinate(grad, exclude=()) -> int:
    """Index of the largest ``|grad_i|``; ties go to the lowest index.

    Coordinates in ``exclude`` are skipped.
    """
    g = np.abs(np.asarray(grad, dtype=np.float64))
    if g.ndim != 1 or g.size == 0:
        raise ValueError("gradient must be a nonempty vector")
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient has non-finite entries")
    if exclude:
        g = g.copy()
        g[list(exclude)] = -1.0
        if np.max(g) < 0:
            raise ValueError("every coordinate is excluded")
    return int(np.argmax(g))  # argmax returns the first maximizer


def omp_run(obj: Objective, cfg: OmpConfig) -> OmpResult:
    d = obj.dimension
    F = as_support(cfg.F0, d)
    x = obj.restricted_minimize(F)
    g = obj.gradient(x)
    q = obj.value(x)
    res = OmpResult()

    def record():
        res.iterates.append(x)
        res.supports.append(F)
        res.objective_values.append(q)
        res.grad_infnorms.append(float(np.max(np.abs(g))))

    record()
    tol = cfg.early_stop_grad_tol
    if tol is None:
        tol = 1e-10 * (1.0 + q)

    for _ in range(cfg.k0):
        if tol > 0 and res.grad_infnorms[-1] <= tol:
            res.stopped_early = True
            break
        if len(F) == d:
            res.stopped_early = True
            break
        j = select_coordinate(g)
        if j in F:
            # only reachable through inner-solver slack on F
            j = select_coordinate(g, exclude=F)
        F = tuple(sorted(F + (j,)))
        x = obj.restricted_minimize(F)
        g = obj.gradient(x)
        q = obj.value(x)
        res.selected.append(j)
        record()
    return res


def write_trace(result: OmpResult, trace_path, iterate_path=None) -> None:
    """Trace JSON (one record per iterate) and optionally the final iterate CSV."""
    Path(trace_path).write_text(json.dumps(result.trace_records(), indent=2, sort_keys=True) + "\n")
    if iterate_path is not None:
        write_csv(iterate_path, result.x)
