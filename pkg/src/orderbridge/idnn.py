"""Integrable network: free energy as the antiderivative of fitted
chemical potentials.

A scalar fully-connected network Y(h) is evaluated on the invariant
features h(eta); its exact input gradient, chain-ruled through the
analytic feature Jacobian, predicts the seven chemical potentials
mu = J^T dY/dh. Training minimizes the gradient-matching loss, which
requires differentiating the input-gradient with respect to weights:
the forward-over-reverse pass below is exact (verified against finite
differences) and keeps the free energy and its gradient consistent by
construction, so quadrature of mu along any path reproduces free
energy differences to integration tolerance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, asdict, replace

import numpy as np
from scipy.special import expit

from . import symmetry

N_ETA = 7


@dataclass(frozen=True)
class Hyperparams:
    n_hidden: int = 2
    width: int = 20
    lr: float = 0.05
    epochs: int = 500
    batch_size: int = 0        # 0 = full batch
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not (1 <= self.n_hidden <= 3):
            raise ValueError("hidden layer count must be 1..3")
        if self.width < 1 or self.lr <= 0 or self.epochs < 1:
            raise ValueError("bad hyperparameters")


class DivergenceError(RuntimeError):
    """Training hit a non-finite loss; carries the last good model."""

    def __init__(self, msg: str, model: "IDNNModel | None" = None,
                 history: list | None = None):
        super().__init__(msg)
        self.model = model
        self.history = history or []


def _softplus(z):
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


@dataclass
class IDNNModel:
    weights: list        # W[l] of shape (out, in)
    biases: list         # b[l] of shape (out,)
    feature_mode: str = "invariant12"   # or "composition"
    hyperparams: Hyperparams | None = None

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def n_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def _features(self, eta: np.ndarray):
        eta = np.atleast_2d(np.asarray(eta, dtype=np.float64))
        if self.feature_mode == "composition":
            h = eta[:, :1].copy()
            j = np.zeros((len(eta), 1, N_ETA))
            j[:, 0, 0] = 1.0
            return h, j
        return symmetry.eval_features(eta)

    def _forward(self, h: np.ndarray):
        a = [h]
        z = [None]
        cur = h
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            zz = cur @ w.T + b
            if l < len(self.weights) - 1:
                cur = _softplus(zz)
            else:
                cur = zz
            z.append(zz)
            a.append(cur)
        return a, z

    def free_energy(self, eta: np.ndarray) -> np.ndarray:
        """g(eta) = Y(h(eta)); scalar per row."""
        eta = np.asarray(eta, dtype=np.float64)
        single = eta.ndim == 1
        h, _ = self._features(eta)
        y = self._forward(h)[0][-1][:, 0]
        return float(y[0]) if single else y

    def grad_features(self, h: np.ndarray) -> np.ndarray:
        """dY/dh for a batch of feature rows."""
        a, z = self._forward(h)
        n_l = len(self.weights)
        g = np.broadcast_to(self.weights[-1][0], (len(h), self.weights[-1].shape[1])).copy()
        for l in range(n_l - 1, 0, -1):
            g = (g * expit(z[l])) @ self.weights[l - 1]
        return g

    def chem_potentials(self, eta: np.ndarray) -> np.ndarray:
        """mu = J(eta)^T dY/dh, exact chain rule."""
        eta = np.asarray(eta, dtype=np.float64)
        single = eta.ndim == 1
        h, j = self._features(eta)
        g = self.grad_features(h)
        mu = np.einsum("nkj,nk->nj", j, g)
        return mu[0] if single else mu

    # --- serialization --------------------------------------------------
    def to_json(self) -> str:
        return json.dumps({
            "schema": 1,
            "feature_mode": self.feature_mode,
            "layer_sizes": self.layer_sizes,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "hyperparams": asdict(self.hyperparams) if self.hyperparams else None,
        })

    @classmethod
    def from_json(cls, text: str) -> "IDNNModel":
        d = json.loads(text)
        hp = Hyperparams(**d["hyperparams"]) if d.get("hyperparams") else None
        return cls(weights=[np.array(w) for w in d["weights"]],
                   biases=[np.array(b) for b in d["biases"]],
                   feature_mode=d["feature_mode"], hyperparams=hp)

    def copy(self) -> "IDNNModel":
        return IDNNModel(weights=[w.copy() for w in self.weights],
                         biases=[b.copy() for b in self.biases],
                         feature_mode=self.feature_mode,
                         hyperparams=self.hyperparams)


def init_model(hp: Hyperparams, feature_mode: str = "invariant12",
               rng: np.random.Generator | None = None) -> IDNNModel:
    if rng is None:
        rng = np.random.default_rng(hp.seed)
    d_in = 1 if feature_mode == "composition" else symmetry.N_FEATURES
    sizes = [d_in] + [hp.width] * hp.n_hidden + [1]
    weights, biases = [], []
    for a, b in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / a), size=(b, a)))
        biases.append(np.zeros(b))
    return IDNNModel(weights=weights, biases=biases, feature_mode=feature_mode,
                     hyperparams=hp)


def _loss_and_grads(model: IDNNModel, h: np.ndarray, j: np.ndarray,
                    mu: np.ndarray, wrow: np.ndarray):
    """Gradient-matching loss and its exact parameter gradients.

    Forward-over-reverse: the loss contraction d = J (2 w r) seeds a
    tangent pass whose directional output is differentiated in reverse
    through the combined primal+tangent graph. The final-layer bias
    never enters the input gradient, so its gradient is exactly zero.
    """
    ws, bs = model.weights, model.biases
    n_l = len(ws)
    a, z = model._forward(h)
    sig = [None] + [expit(z[l]) for l in range(1, n_l)]        # s'(z_l)
    # input gradient g = dY/dh
    g = np.broadcast_to(ws[-1][0], (len(h), ws[-1].shape[1])).copy()
    gz = [None] * n_l                                           # dY/dz_l per layer
    for l in range(n_l - 1, 0, -1):
        gz[l] = g * sig[l]
        g = gz[l] @ ws[l - 1]
    mu_pred = np.einsum("nkj,nk->nj", j, g)
    r = mu_pred - mu
    loss = float((wrow * (r * r).sum(axis=1)).sum())
    d = np.einsum("nkj,nj->nk", j, 2.0 * wrow[:, None] * r)

    # tangent pass along d
    at = [d]
    zt = [None]
    for l in range(1, n_l):
        ztl = at[-1] @ ws[l - 1].T
        zt.append(ztl)
        at.append(sig[l] * ztl)

    w_g = [np.zeros_like(w) for w in ws]
    b_g = [np.zeros_like(b) for b in bs]
    # reverse from the tangent output S = W_L at[L-1]
    w_g[-1] = at[-1].sum(axis=0, keepdims=True)
    atbar = np.broadcast_to(ws[-1][0], at[-1].shape).copy()
    abar = np.zeros_like(atbar)
    for l in range(n_l - 1, 0, -1):
        spp = sig[l] * (1.0 - sig[l])                           # s''(z_l)
        ztbar = atbar * sig[l]
        zbar = atbar * zt[l] * spp + abar * sig[l]
        w_g[l - 1] = ztbar.T @ at[l - 1] + zbar.T @ a[l - 1]
        b_g[l - 1] = zbar.sum(axis=0)
        atbar = ztbar @ ws[l - 1]
        abar = zbar @ ws[l - 1]
    return loss, w_g, b_g


def loss_mse(model: IDNNModel, eta: np.ndarray, mu: np.ndarray,
             weights: np.ndarray | None = None) -> float:
    """Mean over rows of the squared mu residual norm."""
    eta = np.atleast_2d(eta)
    mu = np.atleast_2d(mu)
    r = model.chem_potentials(eta) - mu
    w = np.ones(len(eta)) if weights is None else np.asarray(weights, float)
    w = w / w.sum()
    return float((w * (r * r).sum(axis=1)).sum())


def train(eta: np.ndarray, mu: np.ndarray, hp: Hyperparams,
          init: IDNNModel | None = None,
          row_weights: np.ndarray | None = None,
          feature_mode: str = "invariant12"):
    """Momentum gradient descent with cosine-decayed learning rate.

    Returns (model, history). Raises DivergenceError (carrying the last
    finite-loss checkpoint) if the loss leaves the reals.
    """
    eta = np.atleast_2d(np.asarray(eta, dtype=np.float64))
    mu = np.atleast_2d(np.asarray(mu, dtype=np.float64))
    if len(eta) == 0:
        raise ValueError("empty dataset")
    if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(mu))):
        raise ValueError("dataset must be finite")
    rng = np.random.default_rng(hp.seed)
    model = init.copy() if init is not None else init_model(hp, feature_mode, rng)
    h, j = model._features(eta)
    w_all = np.ones(len(eta)) if row_weights is None else np.asarray(row_weights, float)
    w_all = w_all / w_all.sum()

    vel_w = [np.zeros_like(w) for w in model.weights]
    vel_b = [np.zeros_like(b) for b in model.biases]
    history: list[float] = []
    bsz = hp.batch_size if hp.batch_size > 0 else len(eta)
    lr_scale = 1.0
    for epoch in range(hp.epochs):
        lr = lr_scale * hp.lr * 0.5 * (1.0 + np.cos(np.pi * epoch / hp.epochs))
        snap = (model.copy(), [v.copy() for v in vel_w], [v.copy() for v in vel_b])
        order = rng.permutation(len(eta)) if bsz < len(eta) else np.arange(len(eta))
        for lo in range(0, len(eta), bsz):
            sel = order[lo:lo + bsz]
            wn = w_all[sel] / w_all[sel].sum()
            _, w_g, b_g = _loss_and_grads(model, h[sel], j[sel], mu[sel], wn)
            for k in range(len(model.weights)):
                vel_w[k] = hp.momentum * vel_w[k] + lr * w_g[k]
                vel_b[k] = hp.momentum * vel_b[k] + lr * b_g[k]
                model.weights[k] -= vel_w[k]
                model.biases[k] -= vel_b[k]
        cur = _loss_and_grads(model, h, j, mu, w_all)[0]
        if not np.isfinite(cur):
            raise DivergenceError(f"loss diverged at epoch {epoch}",
                                  model=snap[0], history=history)
        if history and cur > history[-1]:
            # reject the epoch: restore state, damp the step, record a
            # flat entry so the history stays non-increasing
            model, vel_w, vel_b = snap
            vel_w = [np.zeros_like(v) for v in vel_w]
            vel_b = [np.zeros_like(v) for v in vel_b]
            lr_scale *= 0.5
            history.append(history[-1])
        else:
            lr_scale = min(1.0, lr_scale * 1.1)
            history.append(cur)
    model.hyperparams = hp
    return model, history


def hyperparam_search(eta: np.ndarray, mu: np.ndarray, grid,
                      seed: int = 0, row_weights: np.ndarray | None = None,
                      feature_mode: str = "invariant12"):
    """Hold out 10% for validation; argmin validation MSE, ties toward
    fewer parameters. Deterministic for a given seed."""
    grid = list(grid)
    if not grid:
        raise ValueError("empty hyperparameter grid")
    eta = np.atleast_2d(eta)
    mu = np.atleast_2d(mu)
    rng = np.random.default_rng(seed)
    n = len(eta)
    perm = rng.permutation(n)
    n_val = max(1, n // 10) if n > 1 else 0
    val, tr = perm[:n_val], perm[n_val:]
    if len(tr) == 0:
        tr = perm
    results = []
    for k, hp in enumerate(grid):
        hp_k = replace(hp, seed=int(rng.integers(1 << 31)))
        try:
            m, _ = train(eta[tr], mu[tr], hp_k,
                         row_weights=None if row_weights is None else row_weights[tr],
                         feature_mode=feature_mode)
            score = loss_mse(m, eta[val], mu[val]) if n_val else loss_mse(m, eta[tr], mu[tr])
        except DivergenceError:
            m, score = None, np.inf
        results.append((score, m.n_params if m else np.inf, k, hp_k))
    results.sort(key=lambda t: (t[0], t[1], t[2]))
    best = results[0]
    return best[3], [(r[0], r[3]) for r in sorted(results, key=lambda t: t[2])]
