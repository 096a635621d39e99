"""Grid-solver checks: kinetics pins, flux accounting, energy descent,
mass conservation, interface energetics, and gradient-coefficient
calibration.

Analytic oracles: the quartic double well f = w u^2 (1-u)^2 (and its
shifted twin with minima at +-1/2) has exact planar interface energy
sqrt(2 chi w) / 6, and the discrete functional's variational derivative
must match the chem-potential fields by central differences.
"""
import numpy as np
import pytest

from orderbridge import phasefield as pf
from orderbridge.constants import KB_EV


class WellModel:
    """Analytic stand-in: wells at eta_i = +-1/2, parabola in x.

    f = w * sum_i (eta_i^2 - 1/4)^2 + a (x - x*)^2. The eta_1 kink
    between -1/2 and +1/2 carries interface energy sqrt(2 chi w) / 6,
    same constant as the 0/1 quartic.
    """

    def __init__(self, w=1.0, a=0.25, x_star=0.5):
        self.w, self.a, self.x_star = float(w), float(a), float(x_star)

    def free_energy(self, rows):
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        eta = rows[:, 1:]
        return (self.w * ((eta ** 2 - 0.25) ** 2).sum(axis=1)
                + self.a * (rows[:, 0] - self.x_star) ** 2)

    def chem_potentials(self, rows):
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        out = np.empty_like(rows)
        out[:, 0] = 2.0 * self.a * (rows[:, 0] - self.x_star)
        eta = rows[:, 1:]
        out[:, 1:] = 4.0 * self.w * eta * (eta ** 2 - 0.25)
        return out


def _noisy_state(seed=7, n=32, dx=0.5, x0=0.5, x_amp=0.02, eta_amp=0.2):
    rng = np.random.default_rng(seed)
    x = x0 + x_amp * (rng.random((n, n)) - 0.5)
    eta = eta_amp * (rng.random((6, n, n)) - 0.5)
    return pf.PhaseFieldState(x=x, eta=eta, dx=dx, chi0=1e-3,
                              chi=np.full(6, 1e-3))


# ------------------------------------------------------------ kinetics

def test_diffusivity_pins():
    # exponent vanishes at both marked compositions
    assert pf.diffusivity(1.0, 300.0) == 0.01
    assert pf.diffusivity(0.47, 300.0) == 0.01
    # hand-evaluated: 0.01 * exp(-274 * 0.30 * (-0.28) * 0.25)
    assert pf.diffusivity(0.75, 300.0) == pytest.approx(3.1544993980684075,
                                                        rel=1e-12)


def test_diffusivity_temperature_quadruples_every_40k():
    x = np.linspace(0.1, 0.95, 9)
    base = pf.diffusivity(x, 300.0)
    np.testing.assert_array_equal(pf.diffusivity(x, 260.0), base / 4.0)
    np.testing.assert_array_equal(pf.diffusivity(x, 340.0), base * 4.0)
    np.testing.assert_array_equal(pf.diffusivity(x, 320.0), base * 2.0)


def test_default_l_scales_inverse_square_dx():
    assert pf.default_l(300.0, 1.0) == pytest.approx(
        pf.default_l(300.0, 0.5) * 0.25, rel=1e-14)
    assert pf.default_l(300.0, 0.5) == pytest.approx(
        10.0 * pf.diffusivity(0.5, 300.0) / (0.25 * KB_EV * 300.0), rel=1e-14)


def test_conversion_factor_between_excess_and_mj_m2():
    # eV/site*nm against the 32.502 A^3 cell volume
    assert pf.BETA_TO_MJ_M2 == pytest.approx(4929.470906405759, rel=1e-12)


# ------------------------------------------------------------ schedules

def test_flux_schedule_validation():
    with pytest.raises(ValueError, match="edge"):
        pf.FluxSchedule(((0.0, 1.0, 0.1),), edge="north")
    with pytest.raises(ValueError, match="t1 > t0"):
        pf.FluxSchedule(((1.0, 1.0, 0.1),))
    with pytest.raises(ValueError, match="contiguous"):
        pf.FluxSchedule(((0.0, 1.0, 0.1), (2.0, 3.0, 0.1)))
    # tiny mismatch within tolerance is accepted
    pf.FluxSchedule(((0.0, 1.0, 0.1), (1.0 + 1e-15, 2.0, 0.2)))


def test_flux_at_is_half_open_and_zero_outside():
    sch = pf.FluxSchedule(((0.0, 10.0, 0.5), (10.0, 20.0, -0.2)))
    assert sch.flux_at(0.0) == 0.5
    assert sch.flux_at(9.999) == 0.5
    assert sch.flux_at(10.0) == -0.2
    assert sch.flux_at(20.0) == 0.0
    assert sch.flux_at(-1.0) == 0.0


def test_c_rate_flux_matches_area_over_perimeter():
    n, dx = 32, 0.5
    j = pf.c_rate_to_flux(1.0, n, dx)
    assert j == pytest.approx((n * dx) ** 2 / (3600.0 * n * dx), rel=1e-15)
    # spreading over four walls cuts each wall's influx by four
    assert pf.c_rate_to_flux(1.0, n, dx, edge="all") == pytest.approx(
        j / 4.0, rel=1e-15)


def test_schedule_from_c_rates_builds_contiguous_segments():
    sch = pf.schedule_from_c_rates([1.0, -0.5], [100.0, 50.0], 32, 0.5,
                                   edge="right")
    assert sch.edge == "right"
    (t0, t1, j1), (t2, t3, j2) = sch.segments
    assert (t0, t1, t2, t3) == (0.0, 100.0, 100.0, 150.0)
    assert j1 == pf.c_rate_to_flux(1.0, 32, 0.5, "right")
    assert j2 == pf.c_rate_to_flux(-0.5, 32, 0.5, "right")


# ------------------------------------------------------------ state

def test_state_shape_validation():
    with pytest.raises(ValueError, match="x must be"):
        pf.PhaseFieldState(x=np.zeros((4, 5)), eta=np.zeros((6, 4, 4)), dx=1.0)
    with pytest.raises(ValueError, match="x must be"):
        pf.PhaseFieldState(x=np.zeros((4, 4)), eta=np.zeros((5, 4, 4)), dx=1.0)


def test_state_defaults_and_mass():
    st = pf.PhaseFieldState(x=np.ones((4, 4)), eta=np.zeros((6, 4, 4)), dx=0.5)
    assert st.total_mass() == pytest.approx(4.0, rel=1e-15)
    np.testing.assert_array_equal(st.chi, np.full(6, 1e-3))
    assert st.l_coeff == pytest.approx(pf.default_l(300.0, 0.5), rel=1e-14)


def test_state_copy_is_independent():
    st = _noisy_state(n=8)
    cp = st.copy()
    cp.x[0, 0] += 1.0
    cp.eta[2, 1, 1] += 1.0
    cp.chi[3] = 99.0
    assert st.x[0, 0] != cp.x[0, 0]
    assert st.eta[2, 1, 1] != cp.eta[2, 1, 1]
    assert st.chi[3] == 1e-3


# ------------------------------------------------------------ functional

def test_functional_of_uniform_state_is_bulk_only():
    n, dx = 12, 0.7
    row = np.array([0.55, 0.3, -0.1, 0.0, 0.2, 0.0, 0.0])
    st = pf.PhaseFieldState(x=np.full((n, n), row[0]),
                            eta=np.broadcast_to(row[1:, None, None],
                                                (6, n, n)).copy(),
                            dx=dx)
    model = WellModel()
    f_site = float(model.free_energy(row[None, :])[0])
    assert pf.free_energy_functional(st, model) == pytest.approx(
        f_site * n * n * dx * dx, rel=1e-12)


def test_zero_gradient_coefficients_reduce_to_bulk_derivatives():
    st = _noisy_state(n=10)
    st.chi0 = 0.0
    st.chi = np.zeros(6)
    model = WellModel()
    mu0, mut = pf.chem_potential_fields(st, model)
    mu = model.chem_potentials(np.column_stack(
        [st.x.ravel()] + [st.eta[i].ravel() for i in range(6)]))
    np.testing.assert_array_equal(mu0, mu[:, 0].reshape(10, 10))
    for i in range(6):
        np.testing.assert_array_equal(mut[i], mu[:, 1 + i].reshape(10, 10))


def test_chem_potential_fields_are_variational_derivative():
    # central-difference directional derivative of the functional
    rng = np.random.default_rng(11)
    n = 8
    st = pf.PhaseFieldState(
        x=0.5 + 0.05 * (rng.random((n, n)) - 0.5),
        eta=0.3 * (rng.random((6, n, n)) - 0.5),
        dx=0.7, chi0=2e-3, chi=np.linspace(1e-3, 3e-3, 6))
    model = WellModel()
    mu0, mut = pf.chem_potential_fields(st, model)
    dx_dir = rng.standard_normal((n, n))
    de_dir = rng.standard_normal((6, n, n))
    eps = 1e-6

    def shifted(sign):
        s = st.copy()
        s.x = st.x + sign * eps * dx_dir
        s.eta = st.eta + sign * eps * de_dir
        return s

    fd = (pf.free_energy_functional(shifted(+1), model)
          - pf.free_energy_functional(shifted(-1), model)) / (2 * eps)
    analytic = st.dx ** 2 * (float((mu0 * dx_dir).sum())
                             + float((mut * de_dir).sum()))
    assert fd == pytest.approx(analytic, rel=1e-7)


def test_laplacian_is_second_order():
    # cell-centered cosine is exactly mirror-symmetric at the walls
    errs = []
    for n in (32, 64, 128):
        dx = 1.0 / n
        c = (np.arange(n) + 0.5) * dx
        u = np.cos(np.pi * c[:, None]) * np.cos(np.pi * c[None, :])
        errs.append(np.abs(pf._lap(u, dx) + 2.0 * np.pi ** 2 * u).max())
    assert np.log2(errs[0] / errs[1]) > 1.9
    assert np.log2(errs[1] / errs[2]) > 1.9


# ------------------------------------------------------------ stepping

def test_uniform_state_is_stationary():
    n = 12
    st = pf.PhaseFieldState(x=np.full((n, n), 0.6), eta=np.zeros((6, n, n)),
                            dx=0.5)
    out = pf.step(st, 1e-2, pf.QuarticWellModel(w=1.0, slot=1))
    assert np.abs(out.x - st.x).max() < 1e-12
    np.testing.assert_array_equal(out.eta, st.eta)
    assert out.t == pytest.approx(1e-2)
    assert out.dt_last == 1e-2


def test_closed_walls_conserve_mass_and_energy_descends():
    st = _noisy_state(seed=7)
    model = WellModel()
    m0 = st.total_mass()
    pis = [pf.free_energy_functional(st, model)]
    cur = st
    for _ in range(400):
        cur = pf.step(cur, 1e-3, model)
        pis.append(pf.free_energy_functional(cur, model))
    pis = np.array(pis)
    assert abs(cur.total_mass() - m0) <= 1e-10 * abs(m0)
    assert np.all(pis[1:] <= pis[:-1] + 1e-9 * np.abs(pis[:-1]))
    # the eta noise straddles the unstable ridge, so order develops
    assert pis[-1] < 0.1 * pis[0]
    assert np.abs(cur.eta).max() == pytest.approx(0.5, abs=0.05)


def test_overlong_step_is_halved_until_energy_descends():
    rng = np.random.default_rng(3)
    n = 16
    st = pf.PhaseFieldState(x=np.full((n, n), 0.5),
                            eta=rng.random((6, n, n)), dx=0.5,
                            l_coeff=1.0)
    model = pf.QuarticWellModel(w=1.0, slot=1)
    pi0 = pf.free_energy_functional(st, model)
    out = pf.step(st, 5.0, model)
    assert out.dt_last < 5.0
    assert pf.free_energy_functional(out, model) <= pi0 + 1e-9 * abs(pi0)


def test_energy_guard_is_bypassed_while_flux_is_active():
    rng = np.random.default_rng(3)
    n = 16
    st = pf.PhaseFieldState(x=np.full((n, n), 0.5),
                            eta=rng.random((6, n, n)), dx=0.5,
                            l_coeff=1.0)
    sch = pf.FluxSchedule(((0.0, 1e9, 1e-9),))
    out = pf.step(st, 5.0, pf.QuarticWellModel(w=1.0, slot=1), schedule=sch)
    assert out.dt_last == 5.0


def test_composition_escape_aborts_with_diagnostics():
    n = 24
    st = pf.PhaseFieldState(x=np.full((n, n), 0.99), eta=np.zeros((6, n, n)),
                            dx=0.5)
    sch = pf.FluxSchedule(((0.0, 1e9, 1e3),))
    with pytest.raises(pf.SolverAbort) as ei:
        pf.step_once(st, 1e-3, WellModel(), schedule=sch)
    d = ei.value.diagnostics
    assert d["x_max"] > 1.01
    assert d["dt"] == 1e-3
    assert d["t"] == 0.0
    assert len(d["argmin"]) == 2


def test_boundary_flux_ledger_is_exact():
    n, dx = 24, 0.5
    st = pf.PhaseFieldState(x=np.full((n, n), 0.4), eta=np.zeros((6, n, n)),
                            dx=dx, chi0=1e-3, chi=np.full(6, 1e-3))
    sch = pf.schedule_from_c_rates([1.0], [3600.0], n, dx, edge="left")
    m0 = st.total_mass()
    cur = st
    for _ in range(200):
        cur = pf.step(cur, 1e-3, WellModel(), schedule=sch)
    j = pf.c_rate_to_flux(1.0, n, dx)
    assert cur.mass_in == pytest.approx(j * n * dx * 0.2, rel=1e-12)
    assert cur.total_mass() - m0 == pytest.approx(cur.mass_in, rel=1e-9)
    # 1C drains/fills the mean composition in exactly an hour
    rate = (cur.x.mean() - 0.4) / 0.2 * 3600.0
    assert rate == pytest.approx(1.0, rel=1e-9)


# ------------------------------------------------------------ interfaces

def test_quartic_kink_energy_matches_analytic():
    left = np.zeros(7)
    left[0] = 0.5
    right = left.copy()
    right[1] = 1.0
    model = pf.QuarticWellModel(w=1.0, slot=1)
    s, fields = pf.relax_profile(model, left, right, chi0=1e-3, chi=1e-2,
                                 relax_x=False)
    beta = pf.interface_excess(model, s, fields, chi0=1e-3, chi=1e-2)
    assert beta == pytest.approx(np.sqrt(2.0 * 1e-2 * 1.0) / 6.0, rel=0.02)
    # composition never moves when its relaxation is off
    np.testing.assert_array_equal(fields[:, 0], np.full(len(s), 0.5))
    assert s[0] == pytest.approx(fields.shape[0] and 0.5 * (s[1] - s[0]))


def test_variant_interface_scales_as_sqrt_chi():
    b1 = pf.measure_interface_energy(WellModel(), chi0=1e-3, chi=1e-2,
                                     mode="variant")
    b2 = pf.measure_interface_energy(WellModel(), chi0=1e-3, chi=2e-2,
                                     mode="variant")
    assert b1 == pytest.approx(np.sqrt(2.0 * 1e-2) / 6.0, rel=0.02)
    assert b2 / b1 == pytest.approx(np.sqrt(2.0), rel=0.005)


def test_disorder_mode_runs_and_unknown_mode_raises():
    bh = pf.measure_interface_energy(WellModel(), chi0=1e-3, chi=1e-2,
                                     mode="disorder", n=96, n_steps=800)
    assert np.isfinite(bh)
    with pytest.raises(ValueError, match="mode"):
        pf.measure_interface_energy(WellModel(), chi0=1e-3, chi=1e-2,
                                    mode="gradient")


def test_uniform_profile_has_zero_excess():
    s = (np.arange(64) + 0.5) * 0.05
    fields = np.tile(np.array([0.5, 0.5, 0, 0, 0, 0, 0.0]), (64, 1))
    assert pf.interface_excess(WellModel(), s, fields,
                               chi0=1e-3, chi=1e-2) == 0.0


def test_calibration_recovers_planted_gradient_coefficient():
    model = WellModel(w=1.0, a=0.25)
    g0 = np.geomspace(1e-3, 1e-2, 4)
    g = np.geomspace(1e-3, 1e-2, 4)
    kw = dict(n=96, dx=0.05, n_steps=800)
    gamma = pf.measure_interface_energy(
        model, chi0=g0[2], chi=g[1], mode="variant", **kw) * pf.BETA_TO_MJ_M2
    res = pf.calibrate_chi(gamma, model, chi0_grid=g0, chi_grid=g, **kw)
    # the variant kink pins chi to within one grid cell of the plant
    idx = int(np.argmin(np.abs(np.log(g) - np.log(res.chi))))
    assert abs(idx - 1) <= 1
    assert res.beta == pytest.approx(gamma, rel=1e-6)
    assert res.residual == pytest.approx(
        float(np.hypot(res.beta - gamma, res.beta_hat - gamma / 2.0)),
        rel=1e-12)
    assert res.feasible == (res.residual < 0.1)


def test_unreachable_target_is_flagged_infeasible():
    model = WellModel(w=1.0, a=0.25)
    g = np.geomspace(1e-3, 1e-2, 2)
    res = pf.calibrate_chi(1e6, model, chi0_grid=g, chi_grid=g,
                           n=96, dx=0.05, n_steps=800)
    assert not res.feasible
    assert res.residual > 0.1


# ------------------------------------------------------------ domains

def test_count_domains_finds_separated_blobs():
    n = 16
    st = pf.PhaseFieldState(x=np.full((n, n), 0.5), eta=np.zeros((6, n, n)),
                            dx=1.0)
    assert pf.count_domains(st) == 0
    st.eta[0, 2:5, 2:5] = 0.5
    st.eta[3, 10:13, 10:13] = -0.5
    assert pf.count_domains(st) == 2
    assert pf.count_domains(st, threshold=0.6) == 0
    st.eta[1, 2:13, 4] = 0.5      # L-shaped bridge joins the blobs
    st.eta[1, 12, 4:11] = 0.5
    assert pf.count_domains(st) == 1


# ------------------------------------------------------------ driver

def test_simulate_smoke_records_and_orders():
    cfg = pf.SimConfig(n=32, dx=1.0, x0=0.5, amp=0.02, eta_amp=0.2,
                       chi0=1e-3, chi=1e-3, dt=5e-3, n_steps=150,
                       snap_every=50, seed=3)
    res = pf.simulate(WellModel(w=2.0, a=0.25), cfg)
    np.testing.assert_allclose(res.times, [0.0, 0.25, 0.5, 0.75], atol=1e-12)
    assert len(res.snapshots) == 4
    np.testing.assert_array_equal(res.snapshots[-1].x, res.state.x)
    assert np.all(np.diff(res.energy) <= 1e-9 * np.abs(res.energy[:-1]))
    assert abs(res.mean_x[-1] - res.mean_x[0]) < 1e-12
    assert res.domains[-1] >= 1
    assert np.abs(res.state.eta).max() == pytest.approx(0.5, abs=0.05)


def test_simulate_is_deterministic():
    cfg = pf.SimConfig(n=16, dx=1.0, x0=0.5, amp=0.02, eta_amp=0.2,
                       chi0=1e-3, chi=1e-3, dt=5e-3, n_steps=20,
                       snap_every=10, seed=9)
    r1 = pf.simulate(WellModel(), cfg)
    r2 = pf.simulate(WellModel(), cfg)
    np.testing.assert_array_equal(r1.state.x, r2.state.x)
    np.testing.assert_array_equal(r1.state.eta, r2.state.eta)


def test_initial_state_respects_config():
    cfg = pf.SimConfig(n=24, x0=0.6, amp=0.04, eta_amp=0.02, chi=2e-3, seed=5)
    st = pf.initial_state(cfg)
    assert abs(st.x.mean() - 0.6) < 0.01
    assert np.abs(st.x - 0.6).max() <= 0.02
    assert np.abs(st.eta).max() <= 0.01
    np.testing.assert_array_equal(st.chi, np.full(6, 2e-3))
    st2 = pf.initial_state(cfg)
    np.testing.assert_array_equal(st.x, st2.x)
