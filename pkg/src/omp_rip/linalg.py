"""Dense kernels: restricted least squares, batched Jacobi eigenvalues, CSV I/O.

Matrices and vectors are plain float64 numpy arrays; supports are sorted
tuples of column indices.
"""
from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "as_matrix",
    "as_vector",
    "as_support",
    "tol_opt",
    "restricted_least_squares",
    "jacobi_eigenvalues",
    "symmetric_eig_extremes",
    "read_csv",
    "format_csv",
    "write_csv",
]

RANK_RTOL = 1e-10
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


def as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def as_vector(x, size: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2 and 1 in x.shape:
        x = x.reshape(-1)
    if x.ndim != 1:
        raise ValueError(f"expected a vector, got shape {x.shape}")
    if size is not None and x.size != size:
        raise ValueError(f"expected length {size}, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector has non-finite entries")
    return x


def as_support(indices: Iterable[int], d: int) -> tuple[int, ...]:
    """Validate and canonicalize a feature set as a sorted tuple."""
    F = tuple(sorted(set(int(i) for i in indices)))
    if F and (F[0] < 0 or F[-1] >= d):
        raise ValueError(f"support {F} out of range for dimension {d}")
    return F


def tol_opt(A: np.ndarray, y: np.ndarray) -> float:
    """On-support gradient tolerance, relative to the data scale."""
    return 1e-8 * (1.0 + float(np.max(np.abs(A.T @ y), initial=0.0)))


def restricted_least_squares(A, y, F: Sequence[int]) -> np.ndarray:
    """Minimize ``||Az - y||^2`` over ``z`` supported on ``F``.

    Rank-deficient column blocks get the minimum-norm minimizer; singular
    values below ``1e-10 * s_max`` are treated as zero.
    """
    A = as_matrix(A)
    n, d = A.shape
    y = as_vector(y, n)
    F = as_support(F, d)
    z = np.zeros(d)
    if not F:
        return z
    cols = list(F)
    coef, *_ = np.linalg.lstsq(A[:, cols], y, rcond=RANK_RTOL)
    z[cols] = coef
    return z


def jacobi_eigenvalues(M: np.ndarray, tol: float = JACOBI_TOL) -> np.ndarray:
    """Eigenvalues of a stack of symmetric matrices by cyclic Jacobi sweeps.

    ``M`` has shape ``(..., s, s)``; the result has shape ``(..., s)`` and is
    sorted ascending along the last axis. Sweeps stop once every matrix has
    off-diagonal Frobenius mass ``<= tol * ||M||_F``.
    """
    M = np.array(M, dtype=np.float64, copy=True)
    batch_shape = M.shape[:-2]
    s = M.shape[-1]
    M = M.reshape((-1, s, s))
    if s == 1:
        return M[:, 0, 0].reshape(batch_shape + (1,))

    scale = np.sqrt(np.einsum("bij,bij->b", M, M))
    off_mask = ~np.eye(s, dtype=bool)
    with np.errstate(over="ignore"):
        _jacobi_sweeps(M, s, scale, off_mask, tol)
    ev = np.sort(np.diagonal(M, axis1=1, axis2=2), axis=1)
    return ev.reshape(batch_shape + (s,))


def _round_robin(s: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Rounds of disjoint index pairs covering every pair once (circle method)."""
    m = s + (s % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a < s and b < s]
        rounds.append((np.array([a for a, _ in pairs]), np.array([b for _, b in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi_sweeps(M, s, scale, off_mask, tol):
    # rotations within a round touch disjoint rows/columns, so they commute
    rounds = _round_robin(s)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(M[:, off_mask] ** 2, axis=1))
        if np.all(off <= tol * scale):
            return
        for P, Q in rounds:
            apq = M[:, P, Q]
            active = apq != 0.0
            if not np.any(active):
                continue
            app = M[:, P, P]
            aqq = M[:, Q, Q]
            theta = (aqq - app) / (2.0 * np.where(active, apq, 1.0))
            t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(theta == 0.0, 1.0, t)
            t = np.where(active, t, 0.0)
            c = (1.0 / np.sqrt(t * t + 1.0))[:, :, None]
            sn = t[:, :, None] * c

            rp = M[:, P, :]
            rq = M[:, Q, :]
            M[:, P, :] = c * rp - sn * rq
            M[:, Q, :] = sn * rp + c * rq
            cp = M[:, :, P]
            cq = M[:, :, Q]
            c2 = c.transpose(0, 2, 1)
            s2 = sn.transpose(0, 2, 1)
            M[:, :, P] = c2 * cp - s2 * cq
            M[:, :, Q] = s2 * cp + c2 * cq
            M[:, P, Q] = 0.0
            M[:, Q, P] = 0.0
    raise RuntimeError("Jacobi iteration did not converge")


def symmetric_eig_extremes(M) -> tuple[float, float]:
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix must be square, got {M.shape}")
    if not np.allclose(M, M.T, rtol=0.0, atol=1e-12):
        raise ValueError("matrix is not symmetric")
    ev = jacobi_eigenvalues(0.5 * (M + M.T))
    return float(ev[0]), float(ev[-1])


def read_csv(path: str | Path) -> np.ndarray:
    """Read the ``rows,cols`` header CSV format into a 2-d array."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError(f"{path}: empty file")
    try:
        rows, cols = (int(v) for v in lines[0].split(","))
        data = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    if len(data) != rows or any(len(r) != cols for r in data):
        raise ValueError(f"{path}: header says {rows}x{cols}, body disagrees")
    M = np.array(data, dtype=np.float64).reshape(rows, cols)
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{path}: non-finite entries")
    return M


def format_csv(M) -> str:
    """Matrix text in the ``rows,cols`` header format; vectors become one column."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    out = [f"{M.shape[0]},{M.shape[1]}"]
    out += [",".join(repr(float(v)) for v in row) for row in M]
    return "\n".join(out) + "\n"


def write_csv(path: str | Path, M) -> None:
    Path(path).write_text(format_csv(M))
