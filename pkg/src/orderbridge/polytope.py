"""Admissible region of order-parameter space and its samplers.

The physical eta vectors are those whose reconstructed sublattice
occupancies all lie in [0, 1]: 64 half-space constraints in 7
dimensions. Interior points are drawn with a billiard walk (straight
trajectories of random exponential length reflecting specularly off
the bounding planes); the reflection points are kept as quasi-random
boundary samples.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import symmetry


@dataclass(frozen=True)
class Polytope:
    a: np.ndarray    # (m, d) rows of A in A y <= b
    b: np.ndarray    # (m,)

    def __post_init__(self):
        if self.a.ndim != 2 or self.b.shape != (self.a.shape[0],):
            raise ValueError("A and b shapes disagree")

    @property
    def dim(self) -> int:
        return self.a.shape[1]

    def contains(self, y: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        slack = self.b - np.atleast_2d(y) @ self.a.T
        ok = (slack >= -tol).all(axis=1)
        return bool(ok[0]) if y.ndim == 1 else ok

    def project(self, y: np.ndarray) -> np.ndarray:
        """Nearest feasible point (Euclidean), via SLSQP."""
        y = np.asarray(y, dtype=np.float64)
        if self.contains(y):
            return y.copy()
        res = minimize(lambda z: 0.5 * float((z - y) @ (z - y)), y,
                       jac=lambda z: z - y, method="SLSQP",
                       constraints=[{"type": "ineq",
                                     "fun": lambda z: self.b - self.a @ z,
                                     "jac": lambda z: -self.a}])
        if not res.success:
            raise RuntimeError(f"projection failed: {res.message}")
        out = res.x
        # SLSQP can stop a hair outside; pull onto the worst plane
        slack = self.b - self.a @ out
        worst = slack.min()
        if worst < 0:
            k = int(slack.argmin())
            out = out + self.a[k] * (worst / (self.a[k] @ self.a[k]))
        return out


def eta_polytope(qm: symmetry.QMatrix | None = None) -> Polytope:
    """0 <= x_s(eta) <= 1 for the 32 reconstructed occupancies."""
    if qm is None:
        qm = symmetry.default_q()
    r = symmetry.SQRT32 * qm.q[:7].T          # (32, 7): x = R eta
    a = np.vstack([-r, r])
    b = np.concatenate([np.zeros(32), np.ones(32)])
    return Polytope(a=a, b=b)


def unit_box(dim: int) -> Polytope:
    a = np.vstack([-np.eye(dim), np.eye(dim)])
    b = np.concatenate([np.zeros(dim), np.ones(dim)])
    return Polytope(a=a, b=b)


class TrajectoryError(RuntimeError):
    """A billiard trajectory exceeded the reflection cap repeatedly."""


REFLECT_CAP = 10_000


def billiard_walk(poly: Polytope, n: int, tau: float = 1.0,
                  seed: int = 0, start: np.ndarray | None = None,
                  rng: np.random.Generator | None = None):
    """n interior samples plus the boundary hit points passed en route.

    Each move picks a uniform direction and a trajectory length
    l = -tau log(u), then follows the ray, reflecting specularly at
    every bounding plane. A trajectory that exceeds the reflection cap
    is abandoned and redrawn from the same start point.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    d = poly.dim
    if start is None:
        x = _interior_start(poly)
    else:
        x = np.asarray(start, dtype=np.float64).copy()
    if not poly.contains(x, tol=1e-12):
        raise ValueError("billiard start point must be inside the polytope")
    norms = np.linalg.norm(poly.a, axis=1)
    points = np.empty((n, d))
    boundary: list[np.ndarray] = []
    k = 0
    aborts = 0
    while k < n:
        u = rng.normal(size=d)
        u /= np.linalg.norm(u)
        length = -tau * np.log(rng.random())
        y = x.copy()
        ok = True
        for _ in range(REFLECT_CAP):
            au = poly.a @ u
            slack = poly.b - poly.a @ y
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(au > 1e-14, slack / au, np.inf)
            t = np.where(t < 0, 0.0, t)
            hit = int(np.argmin(t))
            t_hit = t[hit]
            if length <= t_hit:
                y = y + length * u
                break
            y = y + t_hit * u
            boundary.append(y.copy())
            nrm = poly.a[hit] / norms[hit]
            u = u - 2.0 * (u @ nrm) * nrm
            # nudge back inside to avoid re-hitting the same plane
            y = y - 1e-12 * nrm
            length -= t_hit
        else:
            ok = False
        if ok and poly.contains(y, tol=1e-9):
            x = y
            points[k] = y
            k += 1
        else:
            aborts += 1
            if aborts > 50 * (n + 1):
                raise TrajectoryError("billiard walk kept aborting; "
                                      "check the polytope scale")
    return points, (np.array(boundary) if boundary
                    else np.empty((0, d)))


def _interior_start(poly: Polytope) -> np.ndarray:
    """Deterministic interior point: Chebyshev-style slack maximizer."""
    d = poly.dim
    norms = np.linalg.norm(poly.a, axis=1)
    res = minimize(lambda z: -np.min((poly.b - poly.a @ z) / norms),
                   np.zeros(d), method="Nelder-Mead",
                   options={"maxiter": 4000, "xatol": 1e-10, "fatol": 1e-12})
    x = res.x
    if not poly.contains(x, tol=0):
        raise RuntimeError("no interior point found")
    return x
