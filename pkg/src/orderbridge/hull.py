"""Lower convex hull of formation energies over composition.

Used both to weight training configurations (points on or near the
hull dominate the fit) and to find two-phase windows from a sampled
free energy curve.
"""
from __future__ import annotations

import numpy as np

HULL_TIE = 1e-12


def lower_hull(x: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull vertices, sorted by composition.

    Only points with e <= 0 or end members can be vertices of a physical
    formation-energy hull, but no such filter is applied here; callers
    get the geometric hull of whatever they pass in. Ties within
    HULL_TIE at the same composition keep the lower point; exact
    duplicates keep the first.
    """
    x = np.asarray(x, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    if x.shape != e.shape or x.ndim != 1:
        raise ValueError("x and e must be matching 1d arrays")
    if len(x) < 2:
        return np.arange(len(x))
    order = np.lexsort((e, x))
    hull: list[int] = []
    for idx in order:
        if hull and abs(x[hull[-1]] - x[idx]) <= HULL_TIE:
            continue  # same composition, higher or equal energy
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            cross = (x[j] - x[i]) * (e[idx] - e[i]) - (e[j] - e[i]) * (x[idx] - x[i])
            if cross < -HULL_TIE:
                hull.pop()  # j lies above the i-idx chord
            else:
                break
        hull.append(idx)
    return np.array(hull, dtype=np.int64)


def hull_energy(x: np.ndarray, e: np.ndarray, xq: np.ndarray) -> np.ndarray:
    """Piecewise-linear hull energy evaluated at query compositions."""
    idx = lower_hull(x, e)
    return np.interp(np.asarray(xq, dtype=np.float64), x[idx], e[idx])


def hull_distances(x: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Vertical distance of every point above the lower hull (>= 0)."""
    d = np.asarray(e) - hull_energy(x, e, x)
    return np.where(d < 0, 0.0, d)


def hull_weights(x: np.ndarray, e: np.ndarray, scale: float = 0.005,
                 amp: float = 15.0, floor: float = 0.5) -> np.ndarray:
    """Fit weights that emphasize configurations on or near the hull.

    w_i = amp * exp(-d_i / scale) + floor with d_i the hull distance in
    eV per site. On-hull points get amp + floor exactly.
    """
    return amp * np.exp(-hull_distances(x, e) / scale) + floor


def on_hull_mask(x: np.ndarray, e: np.ndarray, tol: float = HULL_TIE) -> np.ndarray:
    """Boolean mask of points lying on the lower hull within tol."""
    return hull_distances(x, e) <= tol
