"""Group structure, order-parameter transform, and invariant features."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orderbridge.symmetry import (EXPECTED_GROUP_ORDER, N_SITES, QMatrix,
                                  antipode_map, build_group, build_q,
                                  build_variants, default_q, eta_from_x,
                                  eval_features, features_only,
                                  induced_action, reynolds_invariant,
                                  seed_variant, x_from_eta)

SQRT32 = np.sqrt(32.0)


@pytest.fixture(scope="module")
def group():
    return build_group()


@pytest.fixture(scope="module")
def variants():
    return build_variants()


@pytest.fixture(scope="module")
def qm():
    return default_q()


# ------------------------------------------------------------ group

def test_group_order(group):
    assert len(group) == EXPECTED_GROUP_ORDER == 384


def test_group_elements_are_permutations(group):
    ref = np.arange(N_SITES)
    for p in group:
        assert np.array_equal(np.sort(p), ref)
    # all distinct
    assert len({tuple(p) for p in group}) == 384


def test_group_contains_identity_and_is_closed_spotcheck(group):
    keys = {tuple(p) for p in group}
    assert tuple(np.arange(N_SITES)) in keys
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = group[rng.integers(len(group))]
        q = group[rng.integers(len(group))]
        assert tuple(p[q]) in keys


def test_group_inverses_present(group):
    keys = {tuple(p) for p in group}
    rng = np.random.default_rng(1)
    for _ in range(20):
        p = group[rng.integers(len(group))]
        inv = np.empty(N_SITES, dtype=np.int64)
        inv[p] = np.arange(N_SITES)
        assert tuple(inv) in keys


# --------------------------------------------------------- variants

def test_twelve_distinct_half_filled_variants(variants):
    assert variants.shape == (12, N_SITES)
    assert len({tuple(v) for v in variants}) == 12
    assert np.all((variants == 0.0) | (variants == 1.0))
    np.testing.assert_array_equal(variants.sum(axis=1), np.full(12, 16.0))


def test_variants_closed_under_group(group, variants):
    keys = {tuple(v) for v in variants}
    rng = np.random.default_rng(3)
    for _ in range(60):
        p = group[rng.integers(len(group))]
        v = variants[rng.integers(12)]
        assert tuple(v[p]) in keys


def test_antipode_structure(variants):
    anti = antipode_map(variants)
    assert np.array_equal(np.sort(anti), np.arange(12))
    for a in range(12):
        assert anti[anti[a]] == a
        assert anti[a] != a
        np.testing.assert_allclose(variants[anti[a]], 1.0 - variants[a],
                                   atol=1e-12)


def test_seed_variant_is_first(variants):
    np.testing.assert_array_equal(variants[0], seed_variant())


# ------------------------------------------------------ Q transform

def test_q_certificate(qm):
    assert isinstance(qm, QMatrix)
    np.testing.assert_allclose(qm.q @ qm.q.T, np.eye(N_SITES), atol=1e-10)
    assert sorted(qm.eigen_mult) == [1, 1, 3, 3, 6, 6, 6, 6]
    # row 0 is the uniform composition direction
    np.testing.assert_allclose(qm.q[0], np.full(N_SITES, 1.0 / SQRT32),
                               atol=1e-12)


def test_build_q_deterministic(qm):
    qm2 = build_q(seed=qm.seed)
    np.testing.assert_array_equal(qm.q, qm2.q)


def test_variant_eta_patterns(variants, qm):
    """Each perfect variant lands on a single ordering slot at +-1/2."""
    slot_signs = set()
    for v in variants:
        eta = eta_from_x(v, qm)
        assert eta[0] == pytest.approx(0.5, abs=1e-10)
        tail = eta[1:]
        k = int(np.argmax(np.abs(tail)))
        assert abs(tail[k]) == pytest.approx(0.5, abs=1e-10)
        others = np.delete(tail, k)
        np.testing.assert_allclose(others, 0.0, atol=1e-10)
        slot_signs.add((k, 1 if tail[k] > 0 else -1))
    # 6 slots x 2 signs, all realized
    assert len(slot_signs) == 12


def test_variant_images_have_no_tail(variants, qm):
    tail = (qm.q @ variants.T)[7:]
    np.testing.assert_allclose(tail, 0.0, atol=1e-10)


def test_eta_roundtrip(qm):
    rng = np.random.default_rng(5)
    for _ in range(20):
        eta = rng.uniform(-0.5, 0.5, 7)
        np.testing.assert_allclose(eta_from_x(x_from_eta(eta, qm), qm), eta,
                                   atol=1e-12)


def test_eta_zero_and_mean(qm):
    x = np.full(N_SITES, 0.37)
    eta = eta_from_x(x, qm)
    assert eta[0] == pytest.approx(0.37, abs=1e-12)
    np.testing.assert_allclose(eta[1:], 0.0, atol=1e-12)


# ------------------------------------------------- induced actions

def test_induced_action_is_signed_permutation(group, qm):
    rng = np.random.default_rng(7)
    for _ in range(40):
        s = induced_action(group[rng.integers(len(group))], qm)
        assert np.array_equal(np.abs(s).sum(axis=0), np.ones(7))
        assert np.array_equal(np.abs(s).sum(axis=1), np.ones(7))
        # eta_0 never mixes with the ordering slots
        assert s[0, 0] == 1.0


def test_induced_action_matches_site_permutation(group, qm):
    rng = np.random.default_rng(9)
    x = rng.random(N_SITES)
    for _ in range(25):
        p = group[rng.integers(len(group))]
        s = induced_action(p, qm)
        np.testing.assert_allclose(eta_from_x(x[p], qm),
                                   s @ eta_from_x(x, qm), atol=1e-10)


# ---------------------------------------------- Reynolds averaging

def test_reynolds_kills_odd_monomial():
    assert reynolds_invariant((0, 1, 0, 0, 0, 0, 0)) == {}


def test_reynolds_fixes_composition():
    poly = reynolds_invariant((1, 0, 0, 0, 0, 0, 0))
    assert poly == {(1, 0, 0, 0, 0, 0, 0): 1.0}


def test_reynolds_symmetrizes_square():
    poly = reynolds_invariant((0, 2, 0, 0, 0, 0, 0))
    want = {}
    for k in range(1, 7):
        key = [0] * 7
        key[k] = 2
        want[tuple(key)] = 1.0
    assert poly == want


def test_reynolds_sextic_product_invariant():
    # the fully mixed degree-6 monomial is itself invariant up to sign
    poly = reynolds_invariant((0, 1, 1, 1, 1, 1, 1))
    assert poly == {(0, 1, 1, 1, 1, 1, 1): 1.0}


# ------------------------------------------------- feature algebra

def test_feature_pins_single_slot():
    eta = np.array([0.5, 0.5, 0, 0, 0, 0, 0.0])
    h = features_only(eta)
    want = np.zeros(12)
    want[0] = 0.5
    want[1] = want[2] = want[5] = 1.0 / 6.0
    np.testing.assert_allclose(h, want, atol=1e-12)


def test_feature_pin_sextic():
    eta = np.array([0.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5])
    h = features_only(eta)
    assert h[11] == pytest.approx(np.sqrt(5.0), abs=1e-12)


def test_features_invariant_under_group(group, qm):
    rng = np.random.default_rng(11)
    etas = rng.uniform(-0.6, 0.6, (20, 7))
    h0 = features_only(etas)
    actions = np.array([induced_action(p, qm) for p in group])
    for s in actions:
        h1 = features_only(etas @ s.T)
        np.testing.assert_allclose(h1, h0, atol=1e-9)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(13)
    step = 1e-6
    for _ in range(10):
        eta = rng.uniform(-0.8, 0.8, 7)
        h, jac = eval_features(eta)
        fd = np.empty_like(jac)
        for k in range(7):
            ep = eta.copy()
            em = eta.copy()
            ep[k] += step
            em[k] -= step
            fd[:, k] = (features_only(ep) - features_only(em)) / (2 * step)
        scale = np.maximum(np.abs(fd), 1.0)
        assert np.max(np.abs(jac - fd) / scale) < 1e-6


def test_eval_features_batch_shape():
    rng = np.random.default_rng(17)
    etas = rng.uniform(-0.5, 0.5, (4, 3, 7))
    h, jac = eval_features(etas)
    assert h.shape == (4, 3, 12)
    assert jac.shape == (4, 3, 12, 7)
    h1, j1 = eval_features(etas[2, 1])
    np.testing.assert_array_equal(h[2, 1], h1)
    np.testing.assert_array_equal(jac[2, 1], j1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=7, max_size=7),
       st.integers(0, 383))
def test_feature_invariance_property(eta_list, g_idx):
    eta = np.array(eta_list)
    group = build_group()
    s = induced_action(group[g_idx])
    np.testing.assert_allclose(features_only(s @ eta), features_only(eta),
                               atol=1e-9)
