"""Restricted strong convexity constants, the RIP constant and eps_s.

For the quadratic objective the constants at sparsity ``s`` are the extreme
eigenvalues of ``A_S^T A_S`` over all ``|S| = s``. ``rho_exact`` enumerates
every support (colexicographic order); ``rho_sampled`` visits random
supports and so only brackets the truth from the inside:
the returned ``rho_minus`` is >= the true value and ``rho_plus`` <= it.
"""
from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass
from functools import partial
from itertools import islice
from typing import Callable, Iterator

import numpy as np

from ._parallel import parallel_map
from .linalg import as_matrix, as_vector, jacobi_eigenvalues
from .objective import Objective

__all__ = [
    "DEFAULT_BUDGET",
    "BudgetExceeded",
    "BoundViolationError",
    "RscLevel",
    "RscProfile",
    "OptimalityReport",
    "enumeration_budget",
    "colex_supports",
    "rho_exact",
    "rho_sampled",
    "rho_general_sampled",
    "build_profile",
    "epsilon_from_gradient",
    "epsilon_s",
    "proposition1_check",
]

DEFAULT_BUDGET = 2_000_000
_CHUNK = 4096


class BudgetExceeded(RuntimeError):
    """Exact enumeration would visit more supports than the budget allows."""


class BoundViolationError(AssertionError):
    """A bound that must hold by construction was violated."""


def enumeration_budget() -> int:
    env = os.environ.get("OMP_RIP_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


def colex_supports(d: int, s: int) -> Iterator[tuple[int, ...]]:
    """All ``s``-subsets of ``range(d)`` in colexicographic order."""
    if s == 0:
        yield ()
        return
    for top in range(s - 1, d):
        for rest in colex_supports(top, s - 1):
            yield rest + (top,)


def _unrank_colex(rank: int, s: int) -> tuple[int, ...]:
    out = []
    for k in range(s, 0, -1):
        c = k - 1
        while math.comb(c + 1, k) <= rank:
            c += 1
        out.append(c)
        rank -= math.comb(c, k)
    return tuple(reversed(out))


def _chunk_extremes(G: np.ndarray, idx: np.ndarray) -> tuple[float, float]:
    sub = G[idx[:, :, None], idx[:, None, :]]
    ev = jacobi_eigenvalues(sub)
    return float(ev[:, 0].min()), float(ev[:, -1].max())


def _reduce_extremes(G, chunks, jobs) -> tuple[float, float]:
    parts = parallel_map(partial(_chunk_extremes, G), chunks, jobs)
    lo = min(p[0] for p in parts)
    hi = max(p[1] for p in parts)
    # Gram matrices are PSD; negative values are rounding
    return max(lo, 0.0), max(hi, 0.0)


def _is_diagonal(G: np.ndarray) -> bool:
    return not np.any(G - np.diag(np.diag(G)))


def rho_exact(A, s: int, budget: int | None = None, jobs: int = 1) -> tuple[float, float]:
    """Tightest ``(rho_minus(s), rho_plus(s))`` for ``||A dx||^2`` over s-sparse ``dx``.

    Levels ``s > d`` coincide with ``s = d``. A diagonal Gram matrix (mutually
    orthogonal columns) is resolved without enumeration.
    """
    A = as_matrix(A)
    d = A.shape[1]
    if s < 1:
        raise ValueError("sparsity level must be >= 1")
    s = min(s, d)
    G = A.T @ A
    if _is_diagonal(G):
        diag = np.diag(G)
        return float(diag.min()), float(diag.max())
    budget = enumeration_budget() if budget is None else budget
    total = math.comb(d, s)
    if total > budget:
        raise BudgetExceeded(f"C({d},{s}) = {total} supports exceeds budget {budget}")
    gen = colex_supports(d, s)
    chunks = []
    while True:
        block = list(islice(gen, _CHUNK))
        if not block:
            break
        chunks.append(np.array(block, dtype=np.intp).reshape(len(block), s))
    return _reduce_extremes(G, chunks, jobs)


def rho_sampled(
    A,
    s: int,
    trials: int,
    seed: int,
    distinct: bool = False,
    jobs: int = 1,
) -> tuple[float, float]:
    """Envelope of sparse eigen-extremes over ``trials`` random supports.

    With ``distinct=True`` supports are drawn without replacement (by colex
    rank); once ``trials >= C(d, s)`` this is exhaustive and equals
    :func:`rho_exact`.
    """
    A = as_matrix(A)
    d = A.shape[1]
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if s < 1:
        raise ValueError("sparsity level must be >= 1")
    s = min(s, d)
    rng = np.random.Generator(np.random.Philox(seed))
    if distinct:
        total = math.comb(d, s)
        if trials >= total:
            ranks = range(total)
        else:
            ranks = sorted(int(r) for r in rng.choice(total, size=trials, replace=False))
        idx = np.array([_unrank_colex(r, s) for r in ranks], dtype=np.intp).reshape(-1, s)
    else:
        keys = rng.random((trials, d))
        idx = np.sort(np.argsort(keys, axis=1)[:, :s], axis=1)
    G = A.T @ A
    chunks = [idx[i:i + _CHUNK] for i in range(0, len(idx), _CHUNK)]
    return _reduce_extremes(G, chunks, jobs)


def rho_general_sampled(
    obj: Objective,
    center,
    s: int,
    radius: float,
    trials: int,
    seed: int,
) -> tuple[float, float]:
    """Sampled curvature envelope for a general objective.

    Probes ``D(x, x') = Q(x') - Q(x) - grad Q(x)^T (x' - x)`` divided by
    ``||x' - x||^2`` at points ``x`` uniform in the box of half-width
    ``radius`` around ``center`` and ``x' - x`` Gaussian on a random
    ``s``-support. Returns ``(min ratio, max ratio)``.
    """
    d = obj.dimension
    center = as_vector(center, d)
    s = min(s, d)
    rng = np.random.Generator(np.random.Philox(seed))
    lo, hi = math.inf, -math.inf
    for _ in range(trials):
        x = center + radius * rng.uniform(-1.0, 1.0, d)
        supp = rng.choice(d, size=s, replace=False)
        dx = np.zeros(d)
        dx[supp] = radius * rng.standard_normal(s)
        nrm2 = float(dx @ dx)
        if nrm2 == 0.0:
            continue
        breg = obj.value(x + dx) - obj.value(x) - float(obj.gradient(x) @ dx)
        r = breg / nrm2
        lo, hi = min(lo, r), max(hi, r)
    return max(lo, 0.0), hi


@dataclass(frozen=True)
class RscLevel:
    s: int
    rho_minus: float
    rho_plus: float
    delta: float
    mode: str
    sample_count: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


class RscProfile:
    """Per-level constants with an ``(rho_minus, rho_plus)`` lookup.

    Levels above the ambient dimension resolve to the dimension itself.
    """

    def __init__(self, levels, d: int):
        self.levels: dict[int, RscLevel] = {lv.s: lv for lv in levels}
        self.d = d

    def level(self, s: int) -> RscLevel:
        s = min(int(s), self.d)
        try:
            return self.levels[s]
        except KeyError:
            raise KeyError(f"no constants available at sparsity level {s}") from None

    def __call__(self, s: int) -> tuple[float, float]:
        lv = self.level(s)
        return lv.rho_minus, lv.rho_plus

    def is_exact(self, *levels: int) -> bool:
        return all(self.level(s).mode == "exact" for s in levels)

    def to_list(self) -> list[dict]:
        return [self.levels[s].to_dict() for s in sorted(self.levels)]

    @classmethod
    def constant(cls, rho_minus: float, rho_plus: float, d: int) -> "RscProfile":
        """Same constants at every level; useful for arithmetic checks."""
        delta = max(rho_plus - 1.0, 1.0 - rho_minus)
        return cls([RscLevel(s, rho_minus, rho_plus, delta, "exact") for s in range(1, d + 1)], d)


def _level(s, lo, hi, mode, count=None) -> RscLevel:
    return RscLevel(s, lo, hi, max(hi - 1.0, 1.0 - lo), mode, count)


def build_profile(
    A,
    s_max: int,
    mode: str = "exact",
    trials: int = 1000,
    seed: int | None = None,
    budget: int | None = None,
    jobs: int = 1,
    levels=None,
) -> RscProfile:
    """Constants for ``s = 1..s_max`` (or the given ``levels``).

    Values are made monotone in ``s`` by running min/max. For sampled
    envelopes this keeps them one-sided; for exact ones it only removes
    rounding noise at rank-deficient levels.
    """
    A = as_matrix(A)
    d = A.shape[1]
    wanted = sorted(set(min(int(s), d) for s in (levels or range(1, s_max + 1))))
    if mode == "sampled" and seed is None:
        raise ValueError("sampled mode needs an explicit seed")
    if mode not in ("exact", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    out = []
    run_lo, run_hi = math.inf, -math.inf
    for s in wanted:
        if mode == "exact":
            lo, hi = rho_exact(A, s, budget=budget, jobs=jobs)
        else:
            lo, hi = rho_sampled(A, s, trials, seed + s, jobs=jobs)
        run_lo, run_hi = min(run_lo, lo), max(run_hi, hi)
        out.append(_level(s, run_lo, run_hi, mode, None if mode == "exact" else trials))
    return RscProfile(out, d)


def epsilon_from_gradient(g, s: int) -> float:
    """2-norm of the ``s`` largest-magnitude entries of ``g``.

    This is the exact supremum of ``|g^T u| / ||u||`` over s-sparse ``u``.
    """
    a = np.abs(np.asarray(g, dtype=np.float64).ravel())
    if s < 1:
        raise ValueError("sparsity level must be >= 1")
    top = np.sort(a)[::-1][:s]
    return float(np.sqrt(top @ top))


def epsilon_s(obj: Objective, xbar, s: int) -> float:
    return epsilon_from_gradient(obj.gradient(xbar), s)


@dataclass(frozen=True)
class OptimalityReport:
    epsilon_s: float
    bound_sqrt_s_inf: float
    bound_l2: float
    bound_suboptimality: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def proposition1_check(
    obj: Objective,
    xbar,
    s: int,
    rho_plus_s: float | None = None,
    epsbar: float | None = None,
    slack: float = 1e-9,
) -> OptimalityReport:
    """eps_s(xbar) together with its three upper bounds.

    ``sqrt(s) * ||g||_inf`` and ``||g||_2`` always apply. When ``epsbar`` is
    given it must satisfy ``Q(xbar) <= inf_{||x||_0 <= ||xbar||_0 + s} Q(x) + epsbar``
    and the bound ``2 sqrt(rho_plus(s) * epsbar)`` is checked too.

    Raises :class:`BoundViolationError` if any bound fails by more than ``slack``.
    """
    g = obj.gradient(xbar)
    eps = epsilon_from_gradient(g, s)
    b_inf = math.sqrt(s) * float(np.max(np.abs(g), initial=0.0))
    b_l2 = float(np.linalg.norm(g))
    b_sub = None
    if epsbar is not None:
        if rho_plus_s is None or rho_plus_s <= 0:
            raise ValueError("rho_plus_s must be positive when epsbar is given")
        b_sub = 2.0 * math.sqrt(rho_plus_s * max(epsbar, 0.0))
    report = OptimalityReport(eps, b_inf, b_l2, b_sub)
    for name, bound in (("sqrt(s)*inf-norm", b_inf), ("l2-norm", b_l2), ("suboptimality", b_sub)):
        if bound is not None and eps > bound + slack:
            raise BoundViolationError(f"eps_s = {eps!r} exceeds {name} bound {bound!r}")
    return report


ProfileLookup = Callable[[int], "tuple[float, float]"]
