import itertools

import numpy as np
import pytest

from permconc.measures import Measure, MeasureError, uniform
from permconc.slices import slice_carrier
from permconc.transport import (BarycentricCost, disagreement_tensor, distance_table, frank_wolfe_transport,
                                solve_transport, t2_hat, t2_paren, t2_tilde, w1)

from oracles import brute_force_weak, qp_weak, vertex_enumeration_w1, weak_value


# -- W1 -----------------------------------------------------------------------------

def test_w1_examples(s3):
    mu = uniform(s3)
    assert w1(mu, mu).value == pytest.approx(0.0, abs=1e-12)
    d0, d5 = Measure.dirac(s3, 0), Measure.dirac(s3, 5)
    D = distance_table(s3, "hamming")
    assert w1(d0, d5).value == D[0, 5]
    assert w1(d0, mu).value == pytest.approx(2.0)


@pytest.mark.parametrize("size", [2, 3, 4, 5])
def test_w1_matches_vertex_enumeration(size, rng):
    X = slice_carrier(1, size)
    D = distance_table(X, "half_hamming")
    for _ in range(2 if size == 5 else 10):
        a, b = rng.dirichlet(np.ones(size)), rng.dirichlet(np.ones(size))
        _, value, gap = solve_transport(a, b, D)
        assert value == pytest.approx(vertex_enumeration_w1(a, b, D), abs=1e-12)
        assert gap <= 1e-9
    C = rng.uniform(size=(size, size))
    a, b = rng.dirichlet(np.ones(size)), rng.dirichlet(np.ones(size))
    assert solve_transport(a, b, C)[1] == pytest.approx(vertex_enumeration_w1(a, b, C), abs=1e-12)


def test_w1_symmetric_and_feasible(s4, rng):
    for metric in ("hamming", "transposition"):
        for _ in range(20):
            nu1 = Measure(s4, rng.dirichlet(np.ones(24)))
            nu2 = Measure(s4, rng.dirichlet(np.ones(24)))
            r12, r21 = w1(nu1, nu2, metric), w1(nu2, nu1, metric)
            assert r12.value == pytest.approx(r21.value, abs=1e-10)
            P = r12.coupling.matrix
            assert np.allclose(P.sum(axis=1), nu1.weights, atol=1e-10)
            assert np.allclose(P.sum(axis=0), nu2.weights, atol=1e-10)
            assert r12.gap <= 1e-9


def test_carrier_mismatch(s3, s4):
    with pytest.raises(MeasureError):
        w1(uniform(s3), uniform(s4))


# -- weak costs -------------------------------------------------------------------

def test_weak_examples(s3):
    mu = uniform(s3)
    assert t2_tilde(mu, mu).value == pytest.approx(0.0, abs=1e-9)
    assert t2_paren(mu, mu).value == pytest.approx(0.0, abs=1e-9)
    # source Dirac: the single kernel is the target
    assert t2_tilde(Measure.dirac(s3, 0), mu).value == pytest.approx(4.0)
    # target Dirac: every kernel is that Dirac
    assert t2_tilde(mu, Measure.dirac(s3, 0)).value == pytest.approx(5.0)
    D = distance_table(s3, "hamming")
    for i, j in itertools.product(range(6), repeat=2):
        assert t2_paren(Measure.dirac(s3, i), Measure.dirac(s3, j)).value == D[i, j]
    X = slice_carrier(1, 2)
    assert t2_hat(Measure.dirac(X, 0), Measure.dirac(X, 1)).value == 2.0


def test_t2_hat_antipodal():
    X = slice_carrier(2, 4)
    assert t2_hat(Measure.dirac(X, 0), Measure.dirac(X, 5)).value == 4.0


def test_weak_two_point_grid(rng):
    X = slice_carrier(1, 2)
    B = disagreement_tensor(X).astype(np.float64)
    D = distance_table(X, "half_hamming")
    grid = np.linspace(0, 1, 1001)
    for _ in range(10):
        a, b = rng.dirichlet(np.ones(2)), rng.dirichlet(np.ones(2))
        for feat in (D, B):
            lo, hi = max(0.0, a[0] - b[1]), min(a[0], b[0])
            best = min(weak_value(np.array([[x, a[0] - x], [b[0] - x, a[1] - b[0] + x]]), feat[..., None]
                                  if feat.ndim == 2 else feat, a) for x in grid * (hi - lo) + lo)
            P, value, gap, *_ = frank_wolfe_transport(BarycentricCost(feat, a), a, b)
            assert value <= best + gap + 1e-12
            assert best - value <= gap + 5e-3


def test_weak_matches_grid_three_points(rng):
    X = slice_carrier(1, 3)
    D = distance_table(X, "half_hamming")
    for _ in range(3):
        a, b = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
        P, value, gap, *_ = frank_wolfe_transport(BarycentricCost(D, a), a, b)
        best = brute_force_weak(a, b, D[..., None], 8)
        assert value <= best + gap + 1e-9
        assert best - value <= gap + 5e-3


@pytest.mark.parametrize("size", [3, 4])
def test_weak_matches_qp_oracle(size, rng):
    X = slice_carrier(1, size)
    D = distance_table(X, "half_hamming")
    Bd = disagreement_tensor(X).astype(np.float64)
    for _ in range(5):
        a, b = rng.dirichlet(np.ones(size)), rng.dirichlet(np.ones(size))
        for feat in (D[..., None], Bd):
            P, value, gap, *_ = frank_wolfe_transport(BarycentricCost(feat, a), a, b)
            ref = qp_weak(a, b, feat)
            assert value <= ref + gap + 1e-7
            assert ref - value <= gap + 5e-3


def test_weak_chain_s4(s4, rng):
    n = 4
    for _ in range(200):
        nu1 = Measure(s4, rng.dirichlet(np.ones(24)))
        nu2 = Measure(s4, rng.dirichlet(np.ones(24)))
        a = w1(nu1, nu2).value
        t = t2_tilde(nu1, nu2)
        p = t2_paren(nu1, nu2)
        assert a * a <= t.value + 1e-9
        assert t.value - t.gap <= n * p.value + 1e-9


def test_slice_chain(rng):
    X = slice_carrier(2, 4)
    for _ in range(50):
        nu1 = Measure(X, rng.dirichlet(np.ones(6)))
        nu2 = Measure(X, rng.dirichlet(np.ones(6)))
        a = w1(nu1, nu2, "half_hamming").value
        t = t2_tilde(nu1, nu2, "half_hamming")
        h = t2_hat(nu1, nu2)
        assert a * a <= t.value + 1e-9
        assert t.value - t.gap <= X.n / 4 * h.value + 1e-9


def test_tilde_asymmetry_witness(s3):
    mu = uniform(s3)
    d = Measure.dirac(s3, 0)
    assert t2_tilde(d, mu).value != pytest.approx(t2_tilde(mu, d).value)


def test_certificate_history_monotone(s4, rng):
    D = distance_table(s4, "hamming")
    for variant in ("wolfe", "pairwise"):
        a, b = rng.dirichlet(np.ones(24)), rng.dirichlet(np.ones(24))
        P, value, gap, it, ok, hist = frank_wolfe_transport(BarycentricCost(D, a), a, b, record=True,
                                                            variant=variant, gap_target=1e-7)
        gaps = [g for _, g in hist]
        values = [v for v, _ in hist]
        assert ok and gap <= 1e-7
        assert all(x >= y - 1e-15 for x, y in zip(gaps, gaps[1:]))
        assert all(x >= y - 1e-12 for x, y in zip(values, values[1:]))
        assert np.allclose(P.sum(axis=1), a, atol=1e-10) and np.allclose(P.sum(axis=0), b, atol=1e-10)


def test_variants_agree(s3, rng):
    B = disagreement_tensor(s3)
    a, b = rng.dirichlet(np.ones(6)), rng.dirichlet(np.ones(6))
    r1 = frank_wolfe_transport(BarycentricCost(B, a), a, b, gap_target=1e-9)
    r2 = frank_wolfe_transport(BarycentricCost(B, a), a, b, gap_target=1e-9, variant="pairwise", max_iter=200_000)
    assert abs(r1[1] - r2[1]) <= r1[2] + r2[2] + 1e-9


def test_null_rows_excluded(s3):
    a = np.array([0.5, 0.5, 0, 0, 0, 0])
    b = np.full(6, 1 / 6)
    D = distance_table(s3, "hamming")
    P, value, gap, *_ = frank_wolfe_transport(BarycentricCost(D, a), a, b)
    assert np.all(P[2:] == 0)
    assert value >= 0


def test_stop_value_keeps_certificate(s4, rng):
    D = distance_table(s4, "hamming")
    a, b = rng.dirichlet(np.ones(24)), rng.dirichlet(np.ones(24))
    exact = frank_wolfe_transport(BarycentricCost(D, a), a, b, gap_target=1e-10)[1]
    _, value, gap, *_ = frank_wolfe_transport(BarycentricCost(D, a), a, b, stop_value=exact * 1.5)
    assert value - gap <= exact + 1e-9 <= value + 1e-9
