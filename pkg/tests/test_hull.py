import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orderbridge.hull import (hull_distances, hull_energy, hull_weights,
                              lower_hull, on_hull_mask)


def brute_force_hull(x, e):
    """O(n^2) oracle: a point is a hull vertex iff some line through it
    and another point keeps every point on or above."""
    n = len(x)
    verts = set()
    order = np.lexsort((e, x))
    xs, es = x[order], e[order]
    # endpoints: lowest energy at min and max composition
    for target in (xs[0], xs[-1]):
        sel = np.flatnonzero(x == target)
        verts.add(int(sel[np.argmin(e[sel])]))
    for i in range(n):
        for j in range(n):
            if x[i] >= x[j]:
                continue
            s = (e[j] - e[i]) / (x[j] - x[i])
            line = e[i] + s * (x - x[i])
            if np.all(e >= line - 1e-9):
                verts.add(i)
                verts.add(j)
    return sorted(verts)


def test_collinear_all_on_hull():
    x = np.array([0.0, 0.5, 1.0])
    e = np.array([0.0, -0.5, -1.0])
    idx = lower_hull(x, e)
    assert list(idx) == [0, 1, 2]
    assert np.allclose(hull_distances(x, e), 0.0)


def test_hand_geometry_pin():
    x = np.array([0.0, 0.5, 1.0, 0.5])
    e = np.array([0.0, -1.0, 0.0, -0.5])
    idx = lower_hull(x, e)
    assert [x[i] for i in idx] == [0.0, 0.5, 1.0]
    d = hull_distances(x, e)
    assert d[3] == pytest.approx(0.5)
    assert np.allclose(d[:3], 0.0)


def test_random_cloud_vs_oracle():
    rng = np.random.default_rng(42)
    for trial in range(20):
        n = rng.integers(5, 101)
        x = rng.random(n)
        e = rng.normal(size=n)
        got = sorted(int(i) for i in lower_hull(x, e))
        assert got == brute_force_hull(x, e)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(4, 200))
def test_hull_property(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.random(n)
    e = rng.normal(size=n)
    idx = lower_hull(x, e)
    d = hull_distances(x, e)
    assert (d >= 0.0).all()
    assert np.allclose(d[idx], 0.0, atol=1e-9)
    # hull energies interpolate below every point
    assert np.all(e - hull_energy(x, e, x) >= -1e-9)


def test_distance_zero_iff_on_hull():
    rng = np.random.default_rng(9)
    x = rng.random(60)
    e = rng.normal(size=60)
    d = hull_distances(x, e)
    mask = on_hull_mask(x, e)
    assert np.array_equal(mask, d <= 1e-12)


def test_weights_pins():
    x = np.array([0.0, 0.3, 1.0])
    e = np.array([0.0, -1.0, 0.0])       # middle point far below: on hull
    w = hull_weights(x, e)
    assert np.allclose(w, 15.5)          # all on hull here
    # one point exactly one decay scale above
    x2 = np.array([0.0, 0.5, 1.0, 0.5])
    e2 = np.array([0.0, -1.0, 0.0, -1.0 + 0.005])
    w2 = hull_weights(x2, e2)
    assert w2[3] == pytest.approx(15.0 / np.e + 0.5, rel=1e-12)
    assert w2[3] == pytest.approx(6.0182, abs=2e-4)


def test_weights_asymptote():
    x = np.array([0.0, 0.5, 1.0, 0.5])
    e = np.array([0.0, -1.0, 0.0, 50.0])
    assert hull_weights(x, e)[3] == pytest.approx(0.5)
