import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import minimize

from permconc.minnorm import frank_wolfe_hull, min_norm_hull, min_norm_point


def test_segment_and_triangle():
    r = min_norm_hull(np.array([[1.0, -1.0], [1.0, 1.0]]))
    assert np.allclose(r.x, [1.0, 0.0])
    assert r.converged
    r = min_norm_hull(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    assert r.value == pytest.approx(1 / 3, abs=1e-14)
    assert np.allclose(r.weights, 1 / 3)


def test_origin_inside():
    V = np.array([[1.0, 0.0], [-1.0, 1.0], [-1.0, -1.0], [0.5, 0.5]])
    r = min_norm_hull(V)
    assert r.value <= 1e-20


def test_weights_reconstruct_point(rng):
    V = rng.normal(size=(30, 4)) + 2.0
    r = min_norm_hull(V)
    assert np.allclose(r.weights @ r.points, r.x)
    assert r.weights.sum() == pytest.approx(1.0)
    assert np.all(r.weights >= 0)
    for p in r.payloads:
        assert np.allclose(V[p], r.points[r.payloads.index(p)])


def test_against_slsqp(rng):
    for _ in range(20):
        V = rng.normal(size=(12, 3)) + rng.normal(size=3)
        r = min_norm_hull(V)
        res = minimize(lambda p: float(np.sum((p @ V) ** 2)), np.full(12, 1 / 12), method="SLSQP",
                       bounds=[(0, 1)] * 12, constraints=[{"type": "eq", "fun": lambda p: p.sum() - 1}],
                       options={"ftol": 1e-14, "maxiter": 500})
        assert r.value <= res.fun + 1e-9
        assert res.fun - r.value <= 1e-6
        value, _, gap = frank_wolfe_hull(V, gap_target=1e-10)
        assert abs(value - r.value) <= gap + r.gap + 1e-10


def test_stop_value_ends_early(rng):
    V = rng.normal(size=(40, 5)) + 0.3

    def oracle(x):
        k = int(np.argmin(V @ x))
        return V[k], k

    k0 = int(np.argmax(np.sum(V * V, axis=1)))
    full = min_norm_point(oracle, (V[k0], k0))
    early = min_norm_point(oracle, (V[k0], k0), stop_value=full.value + 1.0)
    assert early.major <= full.major
    assert early.value >= full.value - 1e-12
    # the Wolfe gap still bounds the distance to the optimum
    assert early.value - full.value <= early.gap + 1e-12


def test_rejects_empty():
    with pytest.raises(ValueError):
        min_norm_hull(np.zeros((0, 3)))


@given(arrays(np.float64, (6, 3), elements=st.floats(-10, 10)))
def test_gap_certificate(V):
    r = min_norm_hull(V)
    x = r.x
    # optimality: no vertex improves on x beyond the reported gap
    assert float(x @ x) - float(np.min(V @ x)) <= r.gap + 1e-9 * max(1.0, float(np.max(np.abs(V))) ** 2)
    assert r.value <= float(np.min(np.sum(V * V, axis=1))) + 1e-9
