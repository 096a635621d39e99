"""Flip-kernel correctness against full recomputes and exact partition
functions on enumerable toy systems."""
import itertools

import numpy as np
import pytest

from orderbridge.cluster import (ClusterExpansion, build_orbit,
                                 reference_model)
from orderbridge.constants import KB_EV
from orderbridge.lattice import Lattice, zigzag_occupancy
from orderbridge.montecarlo import (VAR_TARGET, BiasSpec, EnsembleSpec,
                                    System, default_bias, mc_step,
                                    mu_from_bias, phi_total, run_sgc,
                                    run_umbrella, sweep_schedule, _run_chunk)


@pytest.fixture(scope="module")
def lat():
    return Lattice(4, 4)


@pytest.fixture(scope="module")
def ref(lat):
    return reference_model(lat)


@pytest.fixture(scope="module")
def system(lat, ref):
    return System.from_model(ref, lat)


# ------------------------------------------------------- validation

def test_bias_spec_validation():
    with pytest.raises(ValueError):
        BiasSpec(phi=np.ones(6), kappa=np.zeros(7))
    with pytest.raises(ValueError):
        BiasSpec(phi=-np.ones(7), kappa=np.zeros(7))
    b = default_bias(300.0, np.zeros(7))
    np.testing.assert_allclose(b.phi, 20.0 * KB_EV * 300.0)


def test_ensemble_spec_validation():
    b = default_bias(300.0, np.zeros(7))
    with pytest.raises(ValueError):
        EnsembleSpec(m=0, t=300.0, mode="umbrella", bias=b)
    with pytest.raises(ValueError):
        EnsembleSpec(m=1, t=300.0, mode="sgc")
    with pytest.raises(ValueError):
        EnsembleSpec(m=1, t=300.0, mode="umbrella")
    with pytest.raises(ValueError):
        EnsembleSpec(m=1, t=300.0, mode="canonical", bias=b)
    with pytest.raises(ValueError):
        EnsembleSpec(m=1, t=300.0, mode="sgc", mu_hat=np.zeros(3))


def test_from_model_rejects_triplets(lat):
    names = ("in1", "t_up")
    ce = ClusterExpansion(lat, names, np.zeros(2 + len(names)))
    with pytest.raises(ValueError, match="pair"):
        System.from_model(ce, lat)


# ------------------------------------------- tables match the model

def test_system_energy_matches_cluster_expansion(lat):
    names = ("in1", "in2", "in3", "x1", "x2")
    rng = np.random.default_rng(0)
    ce = ClusterExpansion(lat, names, rng.normal(0, 0.05, 2 + len(names)))
    system = System.from_model(ce, lat)
    for _ in range(10):
        occ = (rng.random(lat.n_sites) < rng.random()).astype(float)
        assert system.energy_per_site(occ) == pytest.approx(ce.energy(occ),
                                                            abs=1e-12)


def test_eta_of_matches_symmetry_transform(lat, ref, system):
    from orderbridge import symmetry
    rng = np.random.default_rng(1)
    occ = (rng.random(lat.n_sites) < 0.5).astype(float)
    # m=1 cell: eta is exactly the order-parameter transform
    np.testing.assert_allclose(system.eta_of(occ),
                               symmetry.eta_from_x(occ), atol=1e-12)


# -------------------------------- incremental kernel vs full oracle

def _replay_python(system, occ0, spec, sites, us):
    """Metropolis replay using only full recomputes of the potential."""
    occ = occ0.copy()
    beta = 1.0 / (KB_EV * spec.t)
    for s, u in zip(sites, us):
        trial = occ.copy()
        trial[s] = 1.0 - trial[s]
        dphi = phi_total(system, trial, spec) - phi_total(system, occ, spec)
        if dphi <= 0.0 or u < np.exp(-beta * dphi):
            occ = trial
    return occ


@pytest.mark.parametrize("mode", ["sgc", "umbrella"])
@pytest.mark.parametrize("shape", [(4, 4), (8, 8)])
def test_incremental_kernel_matches_recompute_oracle(mode, shape):
    lat = Lattice(*shape)
    ref = reference_model(lat)
    system = System.from_model(ref, lat)
    rng = np.random.default_rng(42)
    if mode == "sgc":
        spec = EnsembleSpec(m=system.m, t=600.0, mode="sgc",
                            mu_hat=rng.normal(0, 0.05, 7))
    else:
        kappa = np.zeros(7)
        kappa[0], kappa[1] = 0.5, 0.3
        spec = EnsembleSpec(m=system.m, t=600.0, mode="umbrella",
                            bias=default_bias(600.0, kappa))
    occ0 = (rng.random(system.n_sites) < 0.5).astype(float)
    n_prop = 400
    sites = rng.integers(0, system.n_sites, n_prop)
    us = rng.random(n_prop)

    occ = occ0.copy()
    eta = system.eta_of(occ)
    _run_chunk(occ, system.nbrs, system.jcol, system.v_pt, system.wsite,
               1.0 / system.m, eta,
               0 if mode == "sgc" else 1,
               spec.mu_hat if mode == "sgc" else np.zeros(7),
               spec.bias.phi if mode == "umbrella" else np.zeros(7),
               spec.bias.kappa if mode == "umbrella" else np.zeros(7),
               1.0 / (KB_EV * spec.t), sites, us, np.zeros(7))

    np.testing.assert_array_equal(occ, _replay_python(system, occ0, spec,
                                                      sites, us))
    # incrementally tracked order parameters did not drift
    np.testing.assert_allclose(eta, system.eta_of(occ), atol=1e-10)


def test_mc_step_mutates_consistently(lat, ref, system):
    spec = EnsembleSpec(m=system.m, t=400.0, mode="sgc", mu_hat=np.zeros(7))
    rng = np.random.default_rng(3)
    occ = (rng.random(system.n_sites) < 0.5).astype(float)
    for k in range(50):
        probe = np.random.default_rng(k)
        site = int(probe.integers(0, system.n_sites))
        u = float(probe.random(1)[0])
        before = occ.copy()
        acc = mc_step(system, occ, spec, np.random.default_rng(k))
        trial = before.copy()
        trial[site] = 1.0 - trial[site]
        dphi = phi_total(system, trial, spec) - phi_total(system, before, spec)
        want = dphi <= 0.0 or u < np.exp(-dphi / (KB_EV * spec.t))
        assert acc == want
        np.testing.assert_array_equal(occ, trial if want else before)


# ------------------------------------- exact enumeration, 2-site toy

def _toy_two_site():
    rng = np.random.default_rng(10)
    wsite = rng.normal(0, 0.3, (7, 2))
    return System(nbrs=np.array([[1], [0]]), jcol=np.array([-0.08]),
                  v_pt=0.03, e_const=0.0, wsite=wsite, m=1)


def _exact_eta(system, spec, states):
    beta = 1.0 / (KB_EV * spec.t)
    etas, phis = [], []
    for occ in states:
        occ = np.asarray(occ, dtype=np.float64)
        etas.append(system.eta_of(occ))
        phis.append(phi_total(system, occ, spec))
    phis = np.array(phis)
    w = np.exp(-beta * (phis - phis.min()))
    w /= w.sum()
    return np.array(etas).T @ w


def test_two_site_sgc_matches_enumeration():
    system = _toy_two_site()
    mu_hat = np.array([0.02, -0.01, 0.0, 0.03, 0.0, -0.02, 0.01])
    spec = EnsembleSpec(m=1, t=500.0, mode="sgc", mu_hat=mu_hat)

    # independent oracle: hand-written potential over the 4 states
    beta = 1.0 / (KB_EV * 500.0)
    num = np.zeros(7)
    den = 0.0
    for occ in itertools.product((0.0, 1.0), repeat=2):
        occ = np.array(occ)
        e = 0.03 * occ.sum() - 0.08 * occ[0] * occ[1]
        eta = system.wsite @ occ
        bw = np.exp(-beta * (e - eta @ mu_hat))
        num += eta * bw
        den += bw
    exact = num / den
    np.testing.assert_allclose(
        _exact_eta(system, spec, itertools.product((0.0, 1.0), repeat=2)),
        exact, atol=1e-12)

    rec = run_sgc(None, None, mu_hat, 500.0, budget=400_000, seed=5,
                  system=system)
    assert rec.converged
    sigma = np.sqrt(np.maximum(rec.var, 1e-8))
    np.testing.assert_array_less(np.abs(rec.eta - exact), 3.0 * sigma)
    np.testing.assert_array_less(np.abs(rec.eta - exact),
                                 3.0 * np.sqrt(VAR_TARGET))


# ------------------------------------- exact enumeration, 4-site toy

def test_four_site_umbrella_matches_enumeration():
    rng = np.random.default_rng(20)
    wsite = rng.normal(0, 0.25, (7, 4))
    system = System(nbrs=np.array([[1, 3], [2, 0], [3, 1], [0, 2]]),
                    jcol=np.array([-0.06, -0.06]), v_pt=0.02, e_const=0.0,
                    wsite=wsite, m=1)
    kappa = np.array([0.5, 0.2, 0.0, -0.1, 0.0, 0.1, 0.0])
    bias = BiasSpec(phi=np.full(7, 0.15), kappa=kappa)
    spec = EnsembleSpec(m=1, t=400.0, mode="umbrella", bias=bias)

    beta = 1.0 / (KB_EV * 400.0)
    num = np.zeros(7)
    den = 0.0
    for occ in itertools.product((0.0, 1.0), repeat=4):
        occ = np.array(occ)
        bonds = (occ[0] * occ[1] + occ[1] * occ[2]
                 + occ[2] * occ[3] + occ[3] * occ[0])
        e = 0.02 * occ.sum() - 0.06 * bonds
        eta = wsite @ occ
        bw = np.exp(-beta * (e + 0.15 * ((eta - kappa) ** 2).sum()))
        num += eta * bw
        den += bw
    exact = num / den
    np.testing.assert_allclose(
        _exact_eta(system, spec, itertools.product((0.0, 1.0), repeat=4)),
        exact, atol=1e-12)

    rec = run_umbrella(None, None, bias, 400.0, budget=400_000, seed=9,
                       system=system)
    assert rec.converged
    np.testing.assert_array_less(np.abs(rec.eta - exact),
                                 3.0 * np.sqrt(VAR_TARGET))
    np.testing.assert_allclose(rec.mu, mu_from_bias(rec.eta, bias, 1),
                               atol=1e-14)


# --------------------------------------------------- bias inversion

def test_mu_from_bias_identity():
    bias = BiasSpec(phi=np.full(7, 5.0), kappa=np.full(7, 0.4))
    eta_bar = np.full(7, 0.38)
    np.testing.assert_allclose(mu_from_bias(eta_bar, bias, 1),
                               np.full(7, 0.2), atol=1e-14)
    # scales linearly with the supercell count
    np.testing.assert_allclose(mu_from_bias(eta_bar, bias, 4),
                               np.full(7, 0.8), atol=1e-14)


# -------------------------------------------------- thermal physics

def test_infinite_temperature_accepts_everything(lat, ref, system):
    rec = run_sgc(ref, lat, np.zeros(7), 1e9, budget=20_000, seed=0,
                  system=system)
    assert rec.n_accepted / rec.n_steps > 0.98


def test_cold_ordered_phase_is_stable(lat, ref, system):
    occ0 = zigzag_occupancy(lat)
    eta0 = system.eta_of(occ0)
    slot = int(np.argmax(np.abs(eta0[1:]))) + 1
    rec = run_sgc(ref, lat, np.zeros(7), 50.0, budget=60_000, seed=1,
                  occ0=occ0, system=system)
    assert abs(rec.eta[slot]) > 0.45
    assert rec.eta[0] == pytest.approx(0.5, abs=0.05)


def test_hot_phase_disorders(lat, ref, system):
    occ0 = zigzag_occupancy(lat)
    rec = run_sgc(ref, lat, np.zeros(7), 4000.0, budget=200_000, seed=2,
                  occ0=occ0, system=system)
    np.testing.assert_array_less(np.abs(rec.eta[1:]), 0.12)


# -------------------------------------------------------- schedules

def test_sweep_schedule_deterministic(lat, ref):
    kappas = np.zeros((2, 7))
    kappas[:, 0] = (0.4, 0.6)
    kw = dict(t_list=(300.0, 600.0), kappas=kappas, budget=8_000, seed=3)
    r1 = list(sweep_schedule(ref, lat, **kw))
    r2 = list(sweep_schedule(ref, lat, **kw))
    assert len(r1) == 4
    assert [r.seed for r in r1] == [r.seed for r in r2]
    assert len({r.seed for r in r1}) == 4
    for a, b in zip(r1, r2):
        np.testing.assert_array_equal(a.eta, b.eta)
        np.testing.assert_array_equal(a.mu, b.mu)


def test_sweep_schedule_empty_grid(lat, ref):
    assert list(sweep_schedule(ref, lat, (300.0,),
                               kappas=np.empty((0, 7)))) == []


def test_sweep_schedule_requires_one_grid(lat, ref):
    with pytest.raises(ValueError):
        list(sweep_schedule(ref, lat, (300.0,)))
    with pytest.raises(ValueError):
        list(sweep_schedule(ref, lat, (300.0,), kappas=np.zeros((1, 7)),
                            mus=np.zeros((1, 7))))
