"""Interaction-value fitting and genetic basis selection.

fit_eci solves the hull-weighted least squares problem for a fixed
orbit basis. select_basis_ga searches over subsets of a candidate
orbit pool with a genetic algorithm whose fitness is 10-fold
cross-validated RMSE, restricted to bases whose refit reproduces the
ground-state line of the training data.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hull import hull_weights, on_hull_mask


class SingularFitError(RuntimeError):
    """Raised when the unregularized normal equations are rank deficient."""


def fit_eci(phi: np.ndarray, energies: np.ndarray,
            weights: np.ndarray | None = None,
            ridge: float = 0.0) -> np.ndarray:
    """Weighted least squares for interaction values.

    phi: (n_configs, n_terms) correlation matrix.
    energies: (n_configs,) formation energies, eV per site.
    weights: per-configuration weights; hull_weights output typically.
    ridge: Tikhonov strength; 0 demands full column rank.
    """
    phi = np.asarray(phi, dtype=np.float64)
    energies = np.asarray(energies, dtype=np.float64)
    if phi.ndim != 2 or energies.shape != (phi.shape[0],):
        raise ValueError("phi must be (n, m) with matching energies")
    if weights is None:
        weights = np.ones(len(energies))
    w = np.sqrt(np.asarray(weights, dtype=np.float64))
    a = phi * w[:, None]
    b = energies * w
    if ridge > 0.0:
        m = phi.shape[1]
        a = np.vstack([a, np.sqrt(ridge) * np.eye(m)])
        b = np.concatenate([b, np.zeros(m)])
    sol, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if ridge == 0.0 and rank < phi.shape[1]:
        raise SingularFitError(
            f"rank {rank} < {phi.shape[1]} columns; add data or ridge")
    return sol


def _cv_rmse(phi: np.ndarray, e: np.ndarray, w: np.ndarray,
             folds: int, ridge: float) -> float:
    """K-fold cross-validated RMSE with deterministic contiguous folds."""
    n = len(e)
    idx = np.arange(n)
    errs = []
    for f in range(folds):
        test = idx[f::folds]
        train = np.setdiff1d(idx, test)
        try:
            sol = fit_eci(phi[train], e[train], w[train], ridge=ridge)
        except SingularFitError:
            return np.inf
        r = phi[test] @ sol - e[test]
        errs.append(r * r)
    return float(np.sqrt(np.concatenate(errs).mean()))


@dataclass
class GAResult:
    mask: np.ndarray          # over candidate orbit names
    names: tuple[str, ...]
    eci: np.ndarray
    cv_rmse: float
    history: list = field(default_factory=list)


def select_basis_ga(phi_all: np.ndarray, energies: np.ndarray, x: np.ndarray,
                    candidate_names: tuple[str, ...],
                    generations: int = 40, pop_size: int = 50,
                    mutation: float = 0.02, elitism: int = 2,
                    folds: int = 10, ridge: float = 0.0,
                    rng: np.random.Generator | None = None) -> GAResult:
    """Genetic search over orbit subsets.

    phi_all columns are [1, x, candidates...]; the constant and point
    terms are always kept. A candidate basis is feasible only if the
    refit on all data reproduces the data hull membership exactly;
    infeasible bases get infinite fitness.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    phi_all = np.asarray(phi_all, dtype=np.float64)
    energies = np.asarray(energies, dtype=np.float64)
    n_cand = len(candidate_names)
    if phi_all.shape[1] != 2 + n_cand:
        raise ValueError("phi_all must have 2 + n_candidate columns")
    w = hull_weights(x, energies)
    data_hull = on_hull_mask(x, energies, tol=1e-9)

    def columns(mask: np.ndarray) -> np.ndarray:
        return np.concatenate([[0, 1], 2 + np.flatnonzero(mask)])

    cache: dict[bytes, float] = {}

    def fitness(mask: np.ndarray) -> float:
        key = np.packbits(mask).tobytes()
        if key in cache:
            return cache[key]
        cols = columns(mask)
        score = _cv_rmse(phi_all[:, cols], energies, w, folds, ridge)
        if np.isfinite(score):
            try:
                sol = fit_eci(phi_all[:, cols], energies, w, ridge=ridge)
            except SingularFitError:
                score = np.inf
            else:
                pred = phi_all[:, cols] @ sol
                if not np.array_equal(on_hull_mask(x, pred, tol=1e-9), data_hull):
                    score = np.inf
        cache[key] = score
        return score

    pop = rng.random((pop_size, n_cand)) < 0.5
    pop[0] = True  # seed the full basis
    history = []
    for _ in range(generations):
        scores = np.array([fitness(m) for m in pop])
        order = np.argsort(scores, kind="stable")
        pop = pop[order]
        scores = scores[order]
        history.append(scores[0])
        nxt = [pop[i].copy() for i in range(elitism)]
        while len(nxt) < pop_size:
            # size-2 tournaments for each parent
            picks = rng.integers(0, pop_size, size=4)
            pa = pop[min(picks[0], picks[1], key=lambda i: scores[i])]
            pb = pop[min(picks[2], picks[3], key=lambda i: scores[i])]
            cut = rng.integers(1, n_cand) if n_cand > 1 else 0
            child = np.concatenate([pa[:cut], pb[cut:]])
            flip = rng.random(n_cand) < mutation
            child = child ^ flip
            nxt.append(child)
        pop = np.array(nxt)
    scores = np.array([fitness(m) for m in pop])
    best = int(np.argmin(scores))
    if not np.isfinite(scores[best]):
        raise SingularFitError("no feasible basis found")
    mask = pop[best]
    cols = columns(mask)
    sol = fit_eci(phi_all[:, cols], energies, w, ridge=ridge)
    names = tuple(n for n, m in zip(candidate_names, mask) if m)
    return GAResult(mask=mask, names=names, eci=sol,
                    cv_rmse=float(scores[best]), history=history)
