"""Metropolis Monte Carlo in semi-grand and umbrella ensembles.

The sampled potential is Phi = E - M eta.mu (semi-grand) or
Phi = E + sum_i phi_i (eta_i - kappa_i)^2 (umbrella), with eta the
seven order parameters of the whole simulation cell and M the number
of 32-site supercells tiling it. Single-site flips; the change in Phi
is computed incrementally from the local neighborhood and the
per-site eta map column, which tests compare against a full-recompute
oracle.

Chemical potentials conjugate to eta are recovered from umbrella
averages as mu_i = -2 M phi_i (eta_i - kappa_i); they carry units of
eV per supercell per unit eta.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .constants import KB_EV
from .lattice import Lattice
from .cluster import ClusterExpansion
from . import symmetry

VAR_TARGET = 3e-4
N_ETA = 7


@dataclass(frozen=True)
class BiasSpec:
    phi: np.ndarray     # (7,) curvatures, eV
    kappa: np.ndarray   # (7,) centers

    def __post_init__(self):
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=np.float64))
        object.__setattr__(self, "kappa", np.asarray(self.kappa, dtype=np.float64))
        if self.phi.shape != (N_ETA,) or self.kappa.shape != (N_ETA,):
            raise ValueError("phi and kappa must be length-7")
        if np.any(self.phi < 0):
            raise ValueError("bias curvatures must be >= 0")


def default_bias(t: float, kappa: np.ndarray) -> BiasSpec:
    """Spring constant of about 20 k_BT per unit eta^2 on every slot."""
    return BiasSpec(phi=np.full(N_ETA, 20.0 * KB_EV * t), kappa=kappa)


@dataclass(frozen=True)
class EnsembleSpec:
    m: int
    t: float
    mode: str                      # "sgc" | "umbrella"
    mu_hat: np.ndarray | None = None
    bias: BiasSpec | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("simulation cell must tile at least one supercell")
        if self.mode == "sgc":
            if self.mu_hat is None:
                raise ValueError("sgc needs mu_hat")
            object.__setattr__(self, "mu_hat",
                               np.asarray(self.mu_hat, dtype=np.float64))
            if self.mu_hat.shape != (N_ETA,):
                raise ValueError("mu_hat must be length-7")
        elif self.mode == "umbrella":
            if self.bias is None:
                raise ValueError("umbrella needs a BiasSpec")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class SampleRecord:
    t: float
    mode: str
    phi: np.ndarray
    kappa: np.ndarray
    eta: np.ndarray
    mu: np.ndarray
    var: np.ndarray
    n_steps: int
    seed: int
    converged: bool
    n_accepted: int = 0

    def as_dict(self) -> dict:
        d = {"T": self.t, "mode": self.mode}
        for k in range(N_ETA):
            d[f"phi{k}"] = self.phi[k]
        for k in range(N_ETA):
            d[f"kappa{k}"] = self.kappa[k]
        for k in range(N_ETA):
            d[f"eta{k}"] = self.eta[k]
        for k in range(N_ETA):
            d[f"mu{k}"] = self.mu[k]
        for k in range(N_ETA):
            d[f"var{k}"] = self.var[k]
        d["steps"] = self.n_steps
        d["seed"] = self.seed
        d["converged"] = int(self.converged)
        return d


@dataclass
class System:
    """Flat interaction tables consumed by the flip kernel."""

    nbrs: np.ndarray      # (n, K) neighbor indices, every incident bond
    jcol: np.ndarray      # (K,) bond coupling per column, eV
    v_pt: float           # per-site point coefficient, eV
    e_const: float        # constant energy per site, eV
    wsite: np.ndarray     # (7, n) site columns of the eta map
    m: int

    @property
    def n_sites(self) -> int:
        return self.nbrs.shape[0]

    @classmethod
    def from_model(cls, ce: ClusterExpansion, lat: Lattice) -> "System":
        for orb in ce.orbits:
            if orb.size != 2 or orb.name not in lat.shells:
                raise ValueError("flip kernel supports pair models only")
        nbrs, shell_id = lat.neighbor_table(ce.orbit_names)
        # site-transitive orbits: every row draws the same column pattern
        if not np.array_equal(shell_id, np.broadcast_to(shell_id[0], shell_id.shape)):
            raise AssertionError("neighbor columns not uniform across sites")
        j_shell = np.array([ce.eci[2 + k] / lat.shells[n].per_site
                            for k, n in enumerate(ce.orbit_names)])
        jcol = j_shell[shell_id[0]]
        qm = symmetry.default_q()
        pos = lat.supercell_positions()
        wsite = qm.q[:N_ETA][:, pos] / symmetry.SQRT32
        return cls(nbrs=nbrs, jcol=jcol, v_pt=float(ce.eci[1]),
                   e_const=float(ce.eci[0]), wsite=wsite, m=lat.n_supercells)

    def eta_of(self, occ: np.ndarray) -> np.ndarray:
        return self.wsite @ np.asarray(occ, dtype=np.float64) / self.m

    def energy_per_site(self, occ: np.ndarray) -> float:
        occ = np.asarray(occ, dtype=np.float64)
        pair = 0.0
        for k in range(self.nbrs.shape[1]):
            pair += self.jcol[k] * float(occ @ occ[self.nbrs[:, k]])
        pair *= 0.5  # table lists each bond from both endpoints
        return self.e_const + (self.v_pt * occ.sum() + pair) / self.n_sites


def phi_total(system: System, occ: np.ndarray, spec: EnsembleSpec) -> float:
    """Full-recompute ensemble potential, the oracle for the
    incremental kernel. Extensive (eV for the whole cell)."""
    occ = np.asarray(occ, dtype=np.float64)
    e = (system.energy_per_site(occ) - system.e_const) * system.n_sites
    eta = system.eta_of(occ)
    if spec.mode == "sgc":
        return e - system.m * float(eta @ spec.mu_hat)
    b = spec.bias
    return e + float(b.phi @ (eta - b.kappa) ** 2)


@njit(cache=True)
def _run_chunk(occ, nbrs, jcol, v_pt, wsite, minv, eta, mode, mu, phi, kappa,
               beta, sites, us, eta_sum):
    n_acc = 0
    k_cols = nbrs.shape[1]
    for t in range(sites.size):
        s = sites[t]
        d = 1.0 - 2.0 * occ[s]
        loc = v_pt
        for k in range(k_cols):
            loc += jcol[k] * occ[nbrs[s, k]]
        dphi = d * loc
        if mode == 0:
            for i in range(N_ETA):
                dphi -= mu[i] * d * wsite[i, s]
        else:
            for i in range(N_ETA):
                deta = d * wsite[i, s] * minv
                dphi += phi[i] * (2.0 * (eta[i] - kappa[i]) * deta + deta * deta)
        if dphi <= 0.0 or us[t] < np.exp(-beta * dphi):
            occ[s] = occ[s] + d
            for i in range(N_ETA):
                eta[i] += d * wsite[i, s] * minv
            n_acc += 1
        for i in range(N_ETA):
            eta_sum[i] += eta[i]
    return n_acc


def mc_step(system: System, occ: np.ndarray, spec: EnsembleSpec,
            rng: np.random.Generator) -> bool:
    """Single flip proposal; mutates occ in place. Returns acceptance."""
    eta = system.eta_of(occ)
    site = np.array([rng.integers(0, system.n_sites)])
    u = rng.random(1)
    acc = _run_chunk(occ, system.nbrs, system.jcol, system.v_pt, system.wsite,
                     1.0 / system.m, eta, 0 if spec.mode == "sgc" else 1,
                     spec.mu_hat if spec.mode == "sgc" else np.zeros(N_ETA),
                     spec.bias.phi if spec.mode == "umbrella" else np.zeros(N_ETA),
                     spec.bias.kappa if spec.mode == "umbrella" else np.zeros(N_ETA),
                     1.0 / (KB_EV * spec.t), site, u, np.zeros(N_ETA))
    return bool(acc)


_CHUNK_CAP = 1 << 20


def _drive(system: System, spec: EnsembleSpec, budget: int, seed: int,
           occ0: np.ndarray | None, block_steps: int | None):
    rng = np.random.default_rng(seed)
    n = system.n_sites
    if occ0 is None:
        p0 = 0.5
        if spec.mode == "umbrella":
            p0 = min(max(spec.bias.kappa[0], 0.05), 0.95)
        occ = (rng.random(n) < p0).astype(np.float64)
    else:
        occ = np.asarray(occ0, dtype=np.float64).copy()
    eta = system.eta_of(occ)
    beta = 1.0 / (KB_EV * spec.t)
    mode = 0 if spec.mode == "sgc" else 1
    mu = spec.mu_hat if mode == 0 else np.zeros(N_ETA)
    phi = spec.bias.phi if mode == 1 else np.zeros(N_ETA)
    kappa = spec.bias.kappa if mode == 1 else np.zeros(N_ETA)
    minv = 1.0 / system.m
    sink = np.zeros(N_ETA)

    n_acc = 0
    n_equil = int(0.2 * budget)
    done = 0
    while done < n_equil:
        b = min(_CHUNK_CAP, n_equil - done)
        n_acc += _run_chunk(occ, system.nbrs, system.jcol, system.v_pt,
                            system.wsite, minv, eta, mode, mu, phi, kappa,
                            beta, rng.integers(0, n, b), rng.random(b), sink)
        done += b

    if block_steps is None:
        block_steps = max(1, (budget - n_equil) // 250)
    blocks: list[np.ndarray] = []
    converged = False
    while done < budget:
        b = min(block_steps, budget - done)
        eta_sum = np.zeros(N_ETA)
        n_acc += _run_chunk(occ, system.nbrs, system.jcol, system.v_pt,
                            system.wsite, minv, eta, mode, mu, phi, kappa,
                            beta, rng.integers(0, n, b), rng.random(b), eta_sum)
        blocks.append(eta_sum / b)
        done += b
        if len(blocks) >= 50 and len(blocks) % 10 == 0:
            bm = np.array(blocks[-50:])
            var = bm.var(axis=0, ddof=1) / len(bm)
            if np.all(var <= VAR_TARGET):
                converged = True
                break
    bm = np.array(blocks[-50:]) if blocks else eta[None, :]
    eta_bar = bm.mean(axis=0)
    if len(bm) > 1:
        var = bm.var(axis=0, ddof=1) / len(bm)
    else:
        var = np.full(N_ETA, np.inf)
    if not converged:
        converged = bool(np.all(var <= VAR_TARGET))
    return occ, eta_bar, var, done, n_acc, converged


def run_sgc(ce: ClusterExpansion, lat: Lattice, mu_hat: np.ndarray, t: float,
            budget: int = 400_000, seed: int = 0,
            occ0: np.ndarray | None = None,
            block_steps: int | None = None,
            system: System | None = None) -> SampleRecord:
    """Semi-grand sampling at fixed exchange potential mu_hat."""
    if system is None:
        system = System.from_model(ce, lat)
    spec = EnsembleSpec(m=system.m, t=t, mode="sgc",
                        mu_hat=np.asarray(mu_hat, dtype=np.float64))
    _, eta_bar, var, steps, n_acc, conv = _drive(system, spec, budget, seed,
                                                 occ0, block_steps)
    return SampleRecord(t=t, mode="sgc", phi=np.zeros(N_ETA),
                        kappa=np.zeros(N_ETA), eta=eta_bar,
                        mu=spec.mu_hat.copy(), var=var, n_steps=steps,
                        seed=seed, converged=conv, n_accepted=n_acc)


def run_umbrella(ce: ClusterExpansion, lat: Lattice, bias: BiasSpec, t: float,
                 budget: int = 400_000, seed: int = 0,
                 occ0: np.ndarray | None = None,
                 block_steps: int | None = None,
                 system: System | None = None) -> SampleRecord:
    """Umbrella sampling about bias.kappa; mu recovered from the offset
    of the window average."""
    if system is None:
        system = System.from_model(ce, lat)
    spec = EnsembleSpec(m=system.m, t=t, mode="umbrella", bias=bias)
    _, eta_bar, var, steps, n_acc, conv = _drive(system, spec, budget, seed,
                                                 occ0, block_steps)
    mu = mu_from_bias(eta_bar, bias, system.m)
    return SampleRecord(t=t, mode="umbrella", phi=bias.phi.copy(),
                        kappa=bias.kappa.copy(), eta=eta_bar, mu=mu, var=var,
                        n_steps=steps, seed=seed, converged=conv,
                        n_accepted=n_acc)


def mu_from_bias(eta_bar: np.ndarray, bias: BiasSpec, m: int) -> np.ndarray:
    """mu_i = -2 M phi_i (eta_i - kappa_i)."""
    return -2.0 * m * bias.phi * (np.asarray(eta_bar) - bias.kappa)


def sweep_schedule(ce: ClusterExpansion, lat: Lattice, t_list,
                   kappas: np.ndarray | None = None,
                   mus: np.ndarray | None = None,
                   budget: int = 400_000, seed: int = 0,
                   block_steps: int | None = None):
    """Run the (T, kappa) or (T, mu_hat) product grid; yields records in
    deterministic order with per-point derived seeds."""
    if (kappas is None) == (mus is None):
        raise ValueError("provide exactly one of kappas or mus")
    system = System.from_model(ce, lat)
    grid = np.asarray(kappas if kappas is not None else mus, dtype=np.float64)
    if grid.size == 0:
        return
    grid = np.atleast_2d(grid)
    idx = 0
    for t in t_list:
        for g in grid:
            sub = int(np.random.default_rng([seed, idx]).integers(1 << 31))
            if kappas is not None:
                rec = run_umbrella(ce, lat, default_bias(t, g), t,
                                   budget=budget, seed=sub,
                                   block_steps=block_steps, system=system)
            else:
                rec = run_sgc(ce, lat, g, t, budget=budget, seed=sub,
                              block_steps=block_steps, system=system)
            idx += 1
            yield rec
