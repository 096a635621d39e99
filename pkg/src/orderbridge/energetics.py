"""Nucleation energetics, parallel tangents, voltage, phase boundaries.

Free energies enter in eV per site; conversions to volumetric SI
densities go through the primitive-cell volume. The barrier formula is
the dimensionally consistent one obtained by substituting the critical
radius into the spherical-cap energy balance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize, minimize_scalar

from . import hull as hull_mod
from . import polytope as poly_mod
from . import symmetry
from .constants import CELL_VOLUME_A3, E_CHARGE, KB_J, energy_density_si


def convert_energy_density(e_ev_per_cell, v_cell_a3: float = CELL_VOLUME_A3):
    """eV per cell -> J/m^3."""
    return energy_density_si(e_ev_per_cell, v_cell_a3)


def extrapolate_gamma(rows) -> tuple[float, float]:
    """Least-squares line gamma'(N_cell); returns (intercept, slope)."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != 2 or len(rows) < 2:
        raise ValueError("need at least two (n_cell, gamma) rows")
    n, g = rows[:, 0], rows[:, 1]
    if np.ptp(n) == 0:
        raise ValueError("all rows at the same n_cell")
    slope, intercept = np.polyfit(n, g, 1)
    return float(intercept), float(slope)


# ------------------------------------------------------- tangents

@dataclass(frozen=True)
class TangentResult:
    x_mat: float
    x_nuc: float
    delta_g_v: float         # same units as the input curves
    slope_mat: float
    slope_nuc: float
    nucleating: bool


def driving_force(g_ordered, g_disordered, x_mat: float,
                  x_range: tuple = (0.0, 1.0), n_grid: int = 2001,
                  h: float = 1e-6, tol: float = 1e-9) -> TangentResult:
    """Vertical gap between the disordered tangent at x_mat and the
    ordered curve, maximized over composition; gaps below tol count as
    a common tangent (non-nucleating)."""
    lo, hi = x_range
    slope = (g_disordered(x_mat + h) - g_disordered(x_mat - h)) / (2 * h)
    g0 = float(g_disordered(x_mat))

    def gap(x):
        return g0 + slope * (x - x_mat) - g_ordered(x)

    xs = np.linspace(lo, hi, n_grid)
    gaps = np.array([gap(x) for x in np.atleast_1d(xs)])
    k = int(np.argmax(gaps))
    a = xs[max(0, k - 1)]
    b = xs[min(n_grid - 1, k + 1)]
    res = minimize_scalar(lambda x: -gap(x), bounds=(a, b), method="bounded",
                          options={"xatol": 1e-12})
    x_nuc = float(res.x)
    dgv = float(gap(x_nuc))
    slope_nuc = (g_ordered(x_nuc + h) - g_ordered(x_nuc - h)) / (2 * h)
    if dgv <= tol:
        return TangentResult(float(x_mat), x_nuc, max(dgv, 0.0),
                             float(slope), float(slope_nuc), False)
    return TangentResult(float(x_mat), x_nuc, dgv, float(slope),
                         float(slope_nuc), True)


# ------------------------------------------------------------- CNT

def critical_radius(gamma: float, delta_g_v: float) -> float:
    return 2.0 * gamma / delta_g_v


def wetting_factor(theta: float) -> float:
    # cos written as sin of the complement so the quarter-sphere value
    # is exactly 1/2 (cos(pi/2) rounds away from zero, sin(0) does not)
    c = math.sin(math.pi / 2 - theta)
    return 0.5 - 0.75 * c + 0.25 * c ** 3


def effective_driving_force(delta_g_v: float, voltage: float = 0.0,
                            delta_x: float = 0.0,
                            v_cell_a3: float = CELL_VOLUME_A3) -> float:
    """J/m^3 after the applied-voltage shift e V dx per cell."""
    return delta_g_v - voltage * delta_x * E_CHARGE / (v_cell_a3 * 1e-30)


def delta_g_star(gamma: float, delta_g_v: float, theta: float = math.pi,
                 voltage: float = 0.0, delta_x: float = 0.0) -> float:
    """Heterogeneous barrier f(theta) * 16 pi gamma^3 / (3 dG_eff^2), J."""
    dg = effective_driving_force(delta_g_v, voltage, delta_x)
    if dg <= 0.0:
        return math.inf
    hom = 16.0 * math.pi * gamma ** 3 / (3.0 * dg * dg)
    return wetting_factor(theta) * hom


@dataclass(frozen=True)
class CNTInput:
    gamma: float             # J/m^2
    delta_g_v: float         # J/m^3
    temperature: float = 300.0
    diffusivity: float = 1e-14   # m^2/s
    x0: float = 0.5
    a_lattice: float = 2.84e-10  # m
    v_element: float = 1e-24     # m^3
    theta: float = math.pi
    voltage: float = 0.0
    delta_x: float = 0.0
    dt: float = 1.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError("theta outside [0, pi]")


@dataclass(frozen=True)
class NucleationRates:
    r_star: float
    delta_g_star: float
    zn_beta: float
    j_star: float
    p_n: float


def nucleation_probability(j_star: float, dt: float) -> float:
    return float(-np.expm1(-j_star * dt))


def nucleation_rate(inp: CNTInput) -> NucleationRates:
    dg = effective_driving_force(inp.delta_g_v, inp.voltage, inp.delta_x)
    if dg <= 0.0:
        return NucleationRates(math.inf, math.inf, 0.0, 0.0, 0.0)
    rs = critical_radius(inp.gamma, dg)
    gs = delta_g_star(inp.gamma, inp.delta_g_v, inp.theta, inp.voltage,
                      inp.delta_x)
    kt = KB_J * inp.temperature
    zn_beta = (3.0 * inp.v_element * inp.diffusivity * inp.x0
               / (rs * inp.a_lattice ** 4) * math.sqrt(gs / (math.pi * kt)))
    expo = gs / kt
    j_star = 0.0 if expo > 700.0 else zn_beta * math.exp(-expo)
    return NucleationRates(rs, gs, zn_beta, j_star,
                           nucleation_probability(j_star, inp.dt))


def probability_map(inp: CNTInput, voltages, driving_forces) -> np.ndarray:
    """P_n over a (voltage, delta_g_v) grid, rows = voltages."""
    out = np.empty((len(voltages), len(driving_forces)))
    for i, v in enumerate(voltages):
        for j, dgv in enumerate(driving_forces):
            p = CNTInput(gamma=inp.gamma, delta_g_v=dgv,
                         temperature=inp.temperature,
                         diffusivity=inp.diffusivity, x0=inp.x0,
                         a_lattice=inp.a_lattice, v_element=inp.v_element,
                         theta=inp.theta, voltage=v, delta_x=inp.delta_x,
                         dt=inp.dt)
            out[i, j] = nucleation_rate(p).p_n
    return out


# --------------------------------------------------------- voltage

def reference_shift(e_full: float, e_empty: float) -> float:
    """Energy re-reference k removed from the cathode potential."""
    return -e_full + e_empty


def voltage_from_mu(mu0_cathode, k_shift: float, mu_anode: float = 0.0):
    """V(x) = -((mu0 - k) - mu_anode)/e, with mu in eV (so /e is 1)."""
    mu0_cathode = np.asarray(mu0_cathode, dtype=np.float64)
    return -((mu0_cathode - k_shift) - mu_anode)


# -------------------------------------------------- phase boundaries

@dataclass(frozen=True)
class Boundaries1D:
    binodal: tuple           # ((x_left, x_right), ...)
    spinodal: tuple          # (x, ...) roots of g''


def phase_boundaries_1d(g, x_range=(0.0, 1.0), n_grid: int = 2001,
                        h: float = 1e-5) -> Boundaries1D:
    """Common-tangent pairs via the lower convex hull of a dense curve
    sample; spinodal points as bisected roots of the second derivative."""
    lo, hi = x_range
    xs = np.linspace(lo, hi, n_grid)
    gs = np.array([g(x) for x in xs], dtype=np.float64)

    def g1(x):
        return (g(x + h) - g(x - h)) / (2.0 * h)

    def _refine_pair(a, b):
        # Newton on g'(a) = g'(b) = (g(b) - g(a))/(b - a)
        for _ in range(60):
            s = (g(b) - g(a)) / (b - a)
            f1, f2 = g1(a) - s, g1(b) - s
            if abs(f1) < 1e-12 and abs(f2) < 1e-12:
                break
            d = 1e-6
            j11 = ((g1(a + d) - (g(b) - g(a + d)) / (b - a - d)) - f1) / d
            j22 = ((g1(b + d) - (g(b + d) - g(a)) / (b + d - a)) - f2) / d
            if j11 == 0 or j22 == 0:
                break
            a_new = a - f1 / j11
            b_new = b - f2 / j22
            if not (lo <= a_new < b_new <= hi):
                break
            a, b = a_new, b_new
        return a, b

    hull_idx = hull_mod.lower_hull(xs, gs)
    binodal = []
    for ia, ib in zip(hull_idx[:-1], hull_idx[1:]):
        if ib - ia > 1:      # hull edge skipping grid points = tie line
            a, b = _refine_pair(float(xs[ia]), float(xs[ib]))
            binodal.append((a, b))

    def g2(x):
        return (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h)

    inner = xs[1:-1]
    vals = np.array([g2(x) for x in inner])
    spinodal = []
    for i in range(len(inner) - 1):
        if vals[i] == 0.0:
            spinodal.append(float(inner[i]))
        elif vals[i] * vals[i + 1] < 0.0:
            spinodal.append(float(brentq(g2, inner[i], inner[i + 1],
                                         xtol=1e-12)))
    return Boundaries1D(tuple(binodal), tuple(spinodal))


# ------------------------------------------------- 7D lowest path

@dataclass(frozen=True)
class LowestPath:
    eta0: np.ndarray         # (n,)
    g_min: np.ndarray        # (n,)
    eta_min: np.ndarray      # (n, 6) argmin ordering components
    discontinuities: tuple   # eta0 midpoints where the branch jumps


def _ordered_starts(qm: symmetry.QMatrix) -> np.ndarray:
    v = symmetry.build_variants()
    etas = np.array([symmetry.eta_from_x(x, qm) for x in v])
    return etas[:, 1:]


def lowest_path(model, eta0_grid, qm: symmetry.QMatrix | None = None,
                jump_tol: float = 0.05) -> LowestPath:
    """Minimize the free energy over ordering components at each fixed
    composition, multi-start from the twelve variant directions."""
    if qm is None:
        qm = symmetry.default_q()
    poly = poly_mod.eta_polytope(qm)
    starts6 = np.vstack([_ordered_starts(qm), np.zeros((1, 6))])
    eta0_grid = np.asarray(eta0_grid, dtype=np.float64)
    a6 = poly.a[:, 1:]

    g_min = np.empty(len(eta0_grid))
    eta_min = np.empty((len(eta0_grid), 6))
    prev = None
    for i, e0 in enumerate(eta0_grid):
        rhs = poly.b - poly.a[:, 0] * e0

        def obj(y):
            row = np.concatenate([[e0], y])
            return float(model.free_energy(row[None, :])[0])

        def jac(y):
            row = np.concatenate([[e0], y])
            return model.chem_potentials(row[None, :])[0, 1:]

        # shrink well starts toward feasibility at this composition
        scale = min(1.0, 2.0 * e0, 2.0 * (1.0 - e0))
        cand = [s * scale for s in starts6]
        if prev is not None:
            cand.append(prev)
        best_val, best_y = np.inf, None
        cons = [{"type": "ineq", "fun": lambda y: rhs - a6 @ y,
                 "jac": lambda y: -a6}]
        for y0 in cand:
            res = minimize(obj, y0, jac=jac, method="SLSQP",
                           constraints=cons,
                           options={"maxiter": 200, "ftol": 1e-12})
            if res.fun < best_val:
                best_val, best_y = float(res.fun), res.x
        g_min[i] = best_val
        eta_min[i] = best_y
        prev = best_y

    jumps = []
    for i in range(1, len(eta0_grid)):
        if np.linalg.norm(eta_min[i] - eta_min[i - 1]) > jump_tol:
            jumps.append(float(0.5 * (eta0_grid[i] + eta0_grid[i - 1])))
    return LowestPath(eta0_grid, g_min, eta_min, tuple(jumps))


def free_energy_paths(model, qm: symmetry.QMatrix | None = None,
                      n_grid: int = 101, x_range=(0.0, 1.0)):
    """(g_ordered, g_disordered) cubic-spline callables over composition,
    the ordered branch following the lowest-path minimizer."""
    xs = np.linspace(*x_range, n_grid)
    path = lowest_path(model, xs, qm=qm)
    rows = np.zeros((n_grid, 7))
    rows[:, 0] = xs
    g_dis = model.free_energy(rows)
    return (CubicSpline(xs, path.g_min), CubicSpline(xs, g_dis))
