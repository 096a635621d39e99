"""2D composition / order-parameter evolution on a square grid.

Composition follows conservative fourth-order dynamics (flux of the
diffusional chemical potential, semi-implicit constant-coefficient
splitting solved in cosine space for zero-flux walls); the six order
parameters relax by explicit first-order descent. The free energy is
any object exposing free_energy(rows) and chem_potentials(rows) over
(n, 7) inputs ordered (x, eta_1..eta_6), energies per site in eV.

Units: length nm, time s, energy eV per site. Grids are cell-centered;
gradient-energy sums over faces make the reflected-ghost Laplacian the
exact discrete variational derivative, so the total functional is
non-increasing under zero boundary flux.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage
from scipy.fft import dctn, idctn

from .constants import KB_EV, energy_density_si

# eV/site * nm of interface excess -> mJ/m^2
BETA_TO_MJ_M2 = energy_density_si(1.0) * 1e3 * 1e-9


def diffusivity(x, t: float):
    """Composition-dependent surrogate, nm^2/s; doubles twice per +40 K."""
    x = np.asarray(x, dtype=np.float64)
    base = 0.01 * np.exp(-274.0 * (1.05 - x) * (0.47 - x) * (1.0 - x))
    return base * 4.0 ** ((t - 300.0) / 40.0)


def default_l(t: float, dx: float) -> float:
    # order-parameter relaxation 10x faster than cell diffusion at x=0.5
    return 10.0 * float(diffusivity(0.5, t)) / (dx * dx * KB_EV * t)


@dataclass(frozen=True)
class FluxSchedule:
    """Piecewise-constant boundary influx j_n(t), x-units * nm / s,
    applied on one wall (or all four)."""
    segments: tuple          # ((t0, t1, j), ...) contiguous in t
    edge: str = "left"

    def __post_init__(self):
        if self.edge not in ("left", "right", "top", "bottom", "all"):
            raise ValueError(f"unknown edge {self.edge!r}")
        prev = None
        for t0, t1, _ in self.segments:
            if t1 <= t0:
                raise ValueError("segment must have t1 > t0")
            if prev is not None and abs(t0 - prev) > 1e-12 * max(1.0, abs(t0)):
                raise ValueError("segments must be contiguous in t")
            prev = t1

    def flux_at(self, t: float) -> float:
        for t0, t1, j in self.segments:
            if t0 <= t < t1:
                return float(j)
        return 0.0


def c_rate_to_flux(rate: float, n: int, dx: float, edge: str = "left") -> float:
    """Boundary influx giving d<x>/dt = rate/3600 s^-1 over the domain."""
    sides = 4 if edge == "all" else 1
    area = (n * dx) ** 2
    return rate / 3600.0 * area / (sides * n * dx)


def schedule_from_c_rates(rates, durations, n: int, dx: float,
                          edge: str = "left") -> FluxSchedule:
    t = 0.0
    segs = []
    for r, d in zip(rates, durations):
        segs.append((t, t + d, c_rate_to_flux(r, n, dx, edge)))
        t += d
    return FluxSchedule(segments=tuple(segs), edge=edge)


@dataclass
class PhaseFieldState:
    x: np.ndarray            # (N, N) composition
    eta: np.ndarray          # (6, N, N) order parameters
    dx: float
    t: float = 0.0
    temperature: float = 300.0
    chi0: float = 1e-3       # eV nm^2 / site
    chi: np.ndarray = field(default_factory=lambda: np.full(6, 1e-3))
    l_coeff: float | None = None
    mass_in: float = 0.0     # cumulative boundary influx ledger (x * nm^2)
    dt_last: float = 0.0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.eta = np.asarray(self.eta, dtype=np.float64)
        n = self.x.shape[0]
        if self.x.shape != (n, n) or self.eta.shape != (6, n, n):
            raise ValueError("x must be (N,N) and eta (6,N,N)")
        self.chi = np.asarray(self.chi, dtype=np.float64)
        if self.l_coeff is None:
            self.l_coeff = default_l(self.temperature, self.dx)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def total_mass(self) -> float:
        return float(self.x.sum()) * self.dx ** 2

    def copy(self) -> "PhaseFieldState":
        return replace(self, x=self.x.copy(), eta=self.eta.copy(),
                       chi=self.chi.copy())


class SolverAbort(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def _lap(u: np.ndarray, dx: float) -> np.ndarray:
    """5-point Laplacian with reflected (zero-flux) ghost cells."""
    p = np.pad(u, 1, mode="edge")
    return (p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:]
            - 4.0 * u) / (dx * dx)


def _rows(state: PhaseFieldState) -> np.ndarray:
    n = state.n
    out = np.empty((n * n, 7))
    out[:, 0] = state.x.ravel()
    for i in range(6):
        out[:, 1 + i] = state.eta[i].ravel()
    return out


def chem_potential_fields(state: PhaseFieldState, model):
    """(mu0_tilde, mu_tilde (6,N,N)): bulk derivative minus gradient term."""
    n = state.n
    mu = model.chem_potentials(_rows(state)).reshape(n, n, 7)
    mu0 = mu[:, :, 0] - state.chi0 * _lap(state.x, state.dx)
    mut = np.empty((6, n, n))
    for i in range(6):
        mut[i] = mu[:, :, 1 + i] - state.chi[i] * _lap(state.eta[i], state.dx)
    return mu0, mut


def free_energy_functional(state: PhaseFieldState, model) -> float:
    """Bulk + face-summed gradient energy, eV/site * nm^2."""
    f = model.free_energy(_rows(state)).sum()
    dx2 = state.dx ** 2

    def grad_sq(u):
        return ((np.diff(u, axis=0) ** 2).sum()
                + (np.diff(u, axis=1) ** 2).sum()) / dx2

    g = 0.5 * state.chi0 * grad_sq(state.x)
    for i in range(6):
        g += 0.5 * state.chi[i] * grad_sq(state.eta[i])
    return float(f * dx2 + g * dx2)


def _mobility(x, t):
    return diffusivity(x, t) * np.clip(x, 0.0, 1.0) / (KB_EV * t)


def _ch_rhs(state: PhaseFieldState, mu0: np.ndarray, j_n: float, edge: str):
    """Conservative divergence of M grad(mu0) over faces, plus boundary
    influx; returns (rhs, mass_rate) with mass_rate the exact ledger."""
    dx = state.dx
    m = _mobility(state.x, state.temperature)
    # face mobilities (arithmetic mean) times face gradients
    fx = 0.5 * (m[1:, :] + m[:-1, :]) * np.diff(mu0, axis=0) / dx
    fy = 0.5 * (m[:, 1:] + m[:, :-1]) * np.diff(mu0, axis=1) / dx
    rhs = np.zeros_like(state.x)
    rhs[:-1, :] += fx / dx
    rhs[1:, :] -= fx / dx
    rhs[:, :-1] += fy / dx
    rhs[:, 1:] -= fy / dx
    mass_rate = 0.0
    if j_n != 0.0:
        n = state.n
        edges = ("left", "right", "top", "bottom") if edge == "all" else (edge,)
        for e in edges:
            if e == "left":
                rhs[:, 0] += j_n / dx
            elif e == "right":
                rhs[:, -1] += j_n / dx
            elif e == "top":
                rhs[0, :] += j_n / dx
            else:
                rhs[-1, :] += j_n / dx
            mass_rate += j_n * n * dx
    return rhs, mass_rate


def _dct_symbol(n: int, dx: float) -> np.ndarray:
    k = np.arange(n)
    lam = (2.0 * np.cos(np.pi * k / n) - 2.0) / (dx * dx)   # <= 0
    return lam[:, None] + lam[None, :]


def step_once(state: PhaseFieldState, dt: float, model,
              schedule: FluxSchedule | None = None) -> PhaseFieldState:
    """One fixed-dt update; no energy safeguard (see step)."""
    j_n = schedule.flux_at(state.t) if schedule is not None else 0.0
    edge = schedule.edge if schedule is not None else "left"
    mu0, mut = chem_potential_fields(state, model)
    rhs, mass_rate = _ch_rhs(state, mu0, j_n, edge)

    n = state.n
    lam = _dct_symbol(n, state.dx)
    mbar = float(_mobility(state.x, state.temperature).max())
    stab = mbar * state.chi0 * lam * lam          # >= 0 biharmonic symbol
    xhat = dctn(state.x, type=2, norm="ortho")
    rhat = dctn(rhs, type=2, norm="ortho")
    xhat_new = (xhat + dt * (rhat + stab * xhat)) / (1.0 + dt * stab)
    x_new = idctn(xhat_new, type=2, norm="ortho")

    eta_new = state.eta - dt * state.l_coeff * mut

    if x_new.min() < -0.01 or x_new.max() > 1.01:
        raise SolverAbort(
            "composition left [-0.01, 1.01]",
            {"t": state.t, "dt": dt, "x_min": float(x_new.min()),
             "x_max": float(x_new.max()),
             "argmin": np.unravel_index(int(x_new.argmin()), x_new.shape)})
    out = state.copy()
    out.x = x_new
    out.eta = eta_new
    out.t = state.t + dt
    out.mass_in = state.mass_in + mass_rate * dt
    out.dt_last = dt
    return out


MAX_HALVINGS = 40


def step(state: PhaseFieldState, dt: float, model,
         schedule: FluxSchedule | None = None,
         adaptive: bool = True) -> PhaseFieldState:
    """Advance one accepted step. With no boundary flux the free-energy
    functional must not grow (1e-9 relative); offending steps are redone
    with halved dt."""
    j_active = (schedule is not None
                and schedule.flux_at(state.t) != 0.0)
    if not adaptive or j_active:
        return step_once(state, dt, model, schedule)
    pi0 = free_energy_functional(state, model)
    for _ in range(MAX_HALVINGS):
        out = step_once(state, dt, model, schedule)
        pi1 = free_energy_functional(out, model)
        if pi1 <= pi0 + 1e-9 * abs(pi0):
            return out
        dt *= 0.5
    raise SolverAbort("energy kept increasing after dt halvings",
                      {"t": state.t, "dt": dt, "pi0": pi0})


def run(state: PhaseFieldState, model, n_steps: int, dt: float,
        schedule: FluxSchedule | None = None,
        callback=None) -> PhaseFieldState:
    """Drive n_steps accepted steps with gentle dt recovery."""
    dt_max = dt
    for k in range(n_steps):
        state = step(state, dt, model, schedule)
        dt = min(dt_max, state.dt_last * 1.2)
        if callback is not None:
            callback(k, state)
    return state


# ---------------------------------------------------------------- 1D

def relax_profile(model, left: np.ndarray, right: np.ndarray, *,
                  chi0: float, chi, n: int = 192, dx: float = 0.05,
                  temperature: float = 300.0, n_steps: int = 4000,
                  dt: float | None = None, relax_x: bool = True,
                  l_coeff: float = 1.0):
    """Relax a two-domain 1D profile between the given (7,) states.

    Returns (s, fields (n, 7)) after first-order descent on the 1D
    functional; composition moves conservatively only if relax_x. The
    stationary profile does not depend on kinetic coefficients, so the
    descent uses constant unit mobility rather than the physical one.
    """
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    chi_all = np.concatenate([[chi0], np.broadcast_to(chi, (6,))])
    s = (np.arange(n) + 0.5) * dx
    mid = 0.5 * n * dx
    w = 4 * dx
    blend = 0.5 * (1.0 + np.tanh((s - mid) / w))
    fields = left[None, :] * (1 - blend[:, None]) + right[None, :] * blend[:, None]

    if dt is None:
        # explicit stability of the stiffest gradient term
        dt = 0.1 * dx ** 2 / (2.0 * l_coeff * max(chi_all.max(), 1e-12))
        if relax_x:
            dt = min(dt, 0.05 * dx ** 4 / max(chi0, 1e-12))

    def lap1(u):
        p = np.pad(u, 1, mode="edge")
        return (p[:-2] + p[2:] - 2 * u) / (dx * dx)

    for _ in range(n_steps):
        mu = model.chem_potentials(fields)
        for i in range(7):
            mu[:, i] -= chi_all[i] * lap1(fields[:, i])
        if relax_x:
            mf = np.diff(mu[:, 0]) / dx
            rhs = np.zeros(n)
            rhs[:-1] += mf / dx
            rhs[1:] -= mf / dx
            fields[:, 0] += dt * rhs
        fields[:, 1:] -= dt * l_coeff * mu[:, 1:]
    return s, fields


def interface_excess(model, s, fields, *, chi0, chi) -> float:
    """Grand-potential excess per unit interface area, model units * nm."""
    chi_all = np.concatenate([[chi0], np.broadcast_to(chi, (6,))])
    dx = float(s[1] - s[0])
    f = model.free_energy(fields)
    n_edge = max(2, len(s) // 16)
    mu_end = model.chem_potentials(fields[[0, -1]])[:, 0].mean()
    omega = f - mu_end * fields[:, 0]
    omega_bulk = 0.5 * (omega[:n_edge].mean() + omega[-n_edge:].mean())
    excess = (omega - omega_bulk).sum() * dx
    for i in range(7):
        g = np.diff(fields[:, i]) / dx
        excess += 0.5 * chi_all[i] * (g * g).sum() * dx
    return float(excess)


def measure_interface_energy(model, *, chi0: float, chi, mode: str,
                             x_matrix: float = 0.55, slot: int = 1,
                             temperature: float = 300.0,
                             **relax_kw) -> float:
    """beta for mode='variant' (eta = +1/2 vs -1/2 at x = 1/2) or
    beta-hat for mode='disorder' (ordered half-filling vs disordered
    matrix at x_matrix)."""
    left = np.zeros(7)
    left[0] = 0.5
    left[slot] = 0.5
    right = np.zeros(7)
    if mode == "variant":
        right[0] = 0.5
        right[slot] = -0.5
        relax_x = False
    elif mode == "disorder":
        right[0] = x_matrix
        relax_x = True
    else:
        raise ValueError(f"unknown mode {mode!r}")
    s, fields = relax_profile(model, left, right, chi0=chi0, chi=chi,
                              temperature=temperature,
                              relax_x=relax_x, **relax_kw)
    return interface_excess(model, s, fields, chi0=chi0, chi=chi)


@dataclass(frozen=True)
class ChiCalibration:
    chi0: float
    chi: float
    beta: float              # mJ/m^2
    beta_hat: float
    residual: float
    feasible: bool


def calibrate_chi(gamma_mj_m2: float, model, *,
                  chi0_grid=None, chi_grid=None, epsilon: float = 0.1,
                  x_matrix: float = 0.55, temperature: float = 300.0,
                  **relax_kw) -> ChiCalibration:
    """Grid search (chi0, chi) so the measured interface energies match
    gamma (variant-variant) and gamma/2 (order-disorder)."""
    if chi0_grid is None:
        chi0_grid = np.geomspace(1e-4, 1e-1, 6)
    if chi_grid is None:
        chi_grid = np.geomspace(1e-4, 1e-1, 6)
    best = None
    for c0 in chi0_grid:
        for c in chi_grid:
            beta = measure_interface_energy(
                model, chi0=c0, chi=c, mode="variant",
                temperature=temperature, **relax_kw) * BETA_TO_MJ_M2
            bhat = measure_interface_energy(
                model, chi0=c0, chi=c, mode="disorder", x_matrix=x_matrix,
                temperature=temperature, **relax_kw) * BETA_TO_MJ_M2
            r = float(np.hypot(beta - gamma_mj_m2, bhat - gamma_mj_m2 / 2.0))
            if best is None or r < best.residual:
                best = ChiCalibration(float(c0), float(c), beta, bhat, r,
                                      r < epsilon)
    return best


# ------------------------------------------------------------ driver

def count_domains(state: PhaseFieldState, threshold: float = 0.05) -> int:
    """Connected regions of nonzero total order."""
    order = (state.eta ** 2).sum(axis=0)
    mask = order > threshold
    _, n = ndimage.label(mask)
    return int(n)


@dataclass
class SimConfig:
    n: int = 64
    dx: float = 1.0
    temperature: float = 300.0
    x0: float = 0.5425
    amp: float = 0.05
    eta_amp: float = 0.01
    chi0: float = 1e-3
    chi: float = 1e-3
    l_coeff: float | None = None
    dt: float = 1e-4
    n_steps: int = 200
    snap_every: int = 50
    seed: int = 0
    schedule: FluxSchedule | None = None


@dataclass
class SimResult:
    times: np.ndarray
    mean_x: np.ndarray
    energy: np.ndarray
    domains: np.ndarray
    snapshots: list
    state: PhaseFieldState


def initial_state(cfg: SimConfig) -> PhaseFieldState:
    rng = np.random.default_rng(cfg.seed)
    x = cfg.x0 + cfg.amp * (rng.random((cfg.n, cfg.n)) - 0.5)
    eta = cfg.eta_amp * (rng.random((6, cfg.n, cfg.n)) - 0.5)
    return PhaseFieldState(x=x, eta=eta, dx=cfg.dx,
                           temperature=cfg.temperature, chi0=cfg.chi0,
                           chi=np.full(6, cfg.chi), l_coeff=cfg.l_coeff)


def simulate(model, cfg: SimConfig) -> SimResult:
    state = initial_state(cfg)
    times, mx, en, dom, snaps = [], [], [], [], []

    def record(state):
        times.append(state.t)
        mx.append(float(state.x.mean()))
        en.append(free_energy_functional(state, model))
        dom.append(count_domains(state))

    record(state)
    snaps.append(state.copy())
    dt = cfg.dt
    for k in range(cfg.n_steps):
        state = step(state, dt, model, cfg.schedule)
        dt = min(cfg.dt, state.dt_last * 1.2)
        if (k + 1) % cfg.snap_every == 0 or k + 1 == cfg.n_steps:
            record(state)
            snaps.append(state.copy())
    return SimResult(np.array(times), np.array(mx), np.array(en),
                     np.array(dom), snaps, state)


class QuarticWellModel:
    """Minimal stand-in free energy W * eta_slot^2 (1 - eta_slot)^2,
    exposing the same evaluation surface as the trained network."""

    def __init__(self, w: float = 1.0, slot: int = 1):
        self.w = float(w)
        self.slot = int(slot)

    def free_energy(self, rows):
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        u = rows[:, self.slot]
        return self.w * u * u * (1.0 - u) ** 2

    def chem_potentials(self, rows):
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        u = rows[:, self.slot]
        out = np.zeros_like(rows)
        out[:, self.slot] = self.w * (2 * u * (1 - u) ** 2 - 2 * u * u * (1 - u))
        return out
