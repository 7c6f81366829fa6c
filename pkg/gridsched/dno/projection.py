"""Euclidean projections onto halfspaces and boxes."""

from typing import Optional, Tuple

import numpy as np

FEASIBILITY_TOL = 1e-9
BISECTION_STEPS = 200


def _box(point: np.ndarray, lower: Optional[np.ndarray], upper: Optional[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    lo = np.full(point.shape, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    hi = np.full(point.shape, np.inf) if upper is None else np.asarray(upper, dtype=float)
    return lo, hi


def project_halfspaces(point: np.ndarray, normals: np.ndarray, offsets: np.ndarray,
                       max_iters: int = 500, tol: float = 1e-9,
                       lower: Optional[np.ndarray] = None,
                       upper: Optional[np.ndarray] = None) -> Tuple[np.ndarray, bool]:
    """
    Projects `point` onto {y : normals @ y <= offsets, lower <= y <= upper} by cyclic Dykstra
    passes, the box being one more set in the cycle. Returns (projection, converged).
    Rows with a zero normal are ignored.
    """
    x = np.array(point, dtype=float)
    lo, hi = _box(x, lower, upper)
    keep = np.einsum("ij,ij->i", normals, normals) > 0
    normals, offsets = normals[keep], offsets[keep]

    def inside(y: np.ndarray, slack: float) -> bool:
        return bool(np.all(normals @ y <= offsets + slack) and np.all(y >= lo - slack) and np.all(y <= hi + slack))

    if inside(x, FEASIBILITY_TOL):
        return x, True

    norms = np.einsum("ij,ij->i", normals, normals)
    corrections = np.zeros_like(normals)
    box_correction = np.zeros_like(x)
    for _ in range(max_iters):
        previous = x.copy()
        for i in range(normals.shape[0]):
            y = x + corrections[i]
            excess = normals[i] @ y - offsets[i]
            x = y - (max(excess, 0.0) / norms[i]) * normals[i]
            corrections[i] = y - x
        y = x + box_correction
        x = np.clip(y, lo, hi)
        box_correction = y - x
        moved = np.linalg.norm(x - previous)
        if moved <= tol * (1.0 + np.linalg.norm(x)) and inside(x, 1e-7):
            return x, True
    return x, False


def project_box_halfspace(point: np.ndarray, normal: np.ndarray, offset: float,
                          lower: Optional[np.ndarray] = None,
                          upper: Optional[np.ndarray] = None) -> Tuple[np.ndarray, bool]:
    """
    Exact projection onto {y : normal @ y <= offset, lower <= y <= upper}.

    The projection is clip(point - lam * normal) for the smallest lam >= 0 meeting the
    halfspace. When the set is empty, returns the box point minimizing normal @ y and False.
    """
    z = np.array(point, dtype=float)
    n = np.asarray(normal, dtype=float)
    lo, hi = _box(z, lower, upper)

    def clipped(lam: float) -> np.ndarray:
        return np.clip(z - lam * n, lo, hi)

    y = clipped(0.0)
    if n @ y <= offset + FEASIBILITY_TOL:
        return y, True

    with np.errstate(invalid="ignore"):
        lowest = float(np.sum(np.where(n > 0, n * lo, np.where(n < 0, n * hi, 0.0))))
    if lowest > offset + FEASIBILITY_TOL:
        corner = np.where(n > 0, lo, np.where(n < 0, hi, y))
        return corner, False

    norm2 = float(n @ n)
    lam = (float(n @ z) - offset) / norm2
    direct = z - lam * n
    if np.all(direct >= lo) and np.all(direct <= hi):
        return direct, True

    low, high = 0.0, max(lam, 1.0)
    for _ in range(BISECTION_STEPS):
        if n @ clipped(high) <= offset:
            break
        low, high = high, 2.0 * high
    for _ in range(BISECTION_STEPS):
        middle = 0.5 * (low + high)
        if n @ clipped(middle) <= offset:
            high = middle
        else:
            low = middle
        if high - low <= 1e-15 * max(1.0, high):
            break
    return clipped(high), True
