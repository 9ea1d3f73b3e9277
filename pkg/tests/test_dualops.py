import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from permconc import dualops as D
from permconc.permcore import Permutation, symmetric_group
from permconc.slices import slice_carrier
from permconc.transport import distance_table


def simplex_grid(N, res):
    """All points of the simplex with coordinates in multiples of ``1/res``."""
    pts = []
    for bars in itertools.combinations(range(res + N - 1), N - 1):
        edges = (-1,) + bars + (res + N - 1,)
        pts.append([edges[i + 1] - edges[i] - 1 for i in range(N)])
    return np.array(pts, dtype=np.float64) / res


# -- constants -----------------------------------------------------------------

def test_constant_tables():
    assert D.c_ell(2, 4, "hamming", "general") == 3
    assert D.c_ell(3, 4, "hamming", "general") == 4
    assert D.c_ell(2, 4, "hamming", "uniform") == 2
    assert D.c_ell(2, 4, "transposition", "general") == 2
    assert D.c_ell(3, 4, "transposition", "uniform") == 1
    assert D.c_ell_squared_paren(2, "uniform") == 4
    assert D.c_ell_squared_paren(3, "uniform") == 10
    assert D.c_ell_squared_paren(2, "normal") == 10
    assert D.slice_constant(2, 5) == 2
    assert D.slice_constant(1, 1) == 0


def test_c_alpha_values():
    assert D.c_alpha(0.0, 0.3) == 0.0
    # direct evaluation of the displayed formula at u = alpha = 1/2
    expected = (0.25 * math.log(0.5) - 0.75 * math.log(0.75)) / 0.25
    assert D.c_alpha(0.5, 0.5) == pytest.approx(expected, abs=1e-15)
    assert D.c_alpha(0.5, 0.5) == pytest.approx(0.16989903679539747, abs=1e-15)
    for alpha in (0.25, 0.5, 0.75):
        assert D.c_alpha(1.0, alpha) == pytest.approx(-math.log(1 - alpha) / alpha)
        u = np.arange(0, 1.0, 0.1)
        assert np.all(D.c_alpha(u, alpha) >= u * u / 2 - 1e-15)
    assert D.c_alpha(1.5, 0.5) == math.inf
    with pytest.raises(D.DualOpError):
        D.c_alpha(0.5, 1.0)


# -- linear penalty --------------------------------------------------------------

def test_r_c_examples():
    assert D.r_c([3.0, 1.0, 2.0], 0.0, 0) == 1.0
    assert D.r_c([2.0, 2.0, 2.0], 5.0, 1) == 2.0
    assert D.r_c([0.0, 5.0, 1.0], 2.0, 1) == 2.0


def test_r_c_grid(rng):
    grid = simplex_grid(3, 100)
    for _ in range(20):
        f = rng.normal(size=3) * 3
        c = rng.uniform(0, 3)
        for x in range(3):
            off = 1.0 - grid[:, x]
            brute = float(np.min(grid @ f + c * off))
            assert abs(D.r_c(f, c, x) - brute) <= 1e-2


# -- barycentric operators --------------------------------------------------------

def test_two_point_closed_form(rng):
    dist = np.array([0.0, 1.0])
    for _ in range(50):
        phi = rng.normal(size=2)
        c, t = rng.uniform(0.5, 3), rng.uniform(0.2, 3)
        k = 1 / (2 * c * c * t)
        lam = np.clip((phi[0] - phi[1]) / (2 * k), 0, 1)
        closed = lam * phi[1] + (1 - lam) * phi[0] + k * lam * lam
        assert D.q_tilde_row(phi, dist, k) == pytest.approx(closed, abs=1e-12)


def test_q_tilde_trivial(s4, rng):
    assert np.allclose(D.q_tilde_all(np.full(24, 3.0), s4, t=1.0, c_ell=2.0), 3.0)
    phi = rng.normal(size=24)
    k = int(np.argmin(phi))
    assert D.q_tilde(phi, s4, k, t=1.0, c_ell=2.0) == pytest.approx(phi[k])


def test_q_tilde_scan_matches_simplex_fw(s4, rng):
    dist_all = distance_table(s4, "hamming")
    for _ in range(100):
        phi = rng.normal(size=24) * 2
        s = int(rng.integers(24))
        kappa = 1 / (2 * 9 * 1.0)
        A = np.sqrt(kappa) * dist_all[s][:, None]
        fw = D.simplex_qp(phi, A, gap_target=1e-12)
        scan = D.q_tilde(phi, s4, s, t=1.0, c_ell=3.0)
        assert abs(scan - fw.value) <= 1e-6 + fw.gap
        assert scan <= fw.value + 1e-12


def test_scan_and_envelope_agree(s3, rng):
    for _ in range(30):
        phi = rng.normal(size=6)
        for metric in ("hamming", "transposition"):
            a = D.q_tilde_all(phi, s3, t=1.5, c_ell=2.0, metric=metric, method="scan")
            b = D.q_tilde_all(phi, s3, t=1.5, c_ell=2.0, metric=metric, method="envelope")
            assert np.allclose(a, b, atol=1e-12)


def test_q_tilde_alpha_dominates_q_tilde(s3, rng):
    for _ in range(20):
        phi = rng.normal(size=6) * 2
        for alpha in (0.25, 0.5, 0.75):
            qa = D.q_tilde_alpha_all(phi, s3, t=1.0, c_ell=2.0, alpha=alpha)
            q = D.q_tilde_all(phi, s3, t=1.0, c_ell=2.0)
            assert np.all(qa >= q - 1e-12)
            assert np.all(qa <= phi + 1e-12)


def test_r_tilde_complete_graph(rng):
    for _ in range(20):
        f = rng.normal(size=4)
        for x in range(4):
            grid = simplex_grid(4, 40)
            off = 1.0 - grid[:, x]
            brute = float(np.min(grid @ f + off ** 2 / 2))
            assert D.r_tilde(f, x) <= brute + 1e-12
            assert brute - D.r_tilde(f, x) <= 2e-2


def test_lemma_two_point_support(rng):
    # a linear functional under one moment constraint is optimised by at most two atoms
    for _ in range(20):
        c, F = rng.normal(size=5), rng.normal(size=5)
        K = float(rng.uniform(F.min(), F.max()))
        lp = linprog(c, A_eq=np.vstack([np.ones(5), F]), b_eq=[1, K], bounds=[(0, None)] * 5, method="highs")
        best = math.inf
        for i, j in itertools.combinations_with_replacement(range(5), 2):
            if F[i] == F[j]:
                if abs(F[i] - K) < 1e-15:
                    best = min(best, c[i], c[j])
                continue
            lam = (K - F[j]) / (F[i] - F[j])
            if 0 <= lam <= 1:
                best = min(best, lam * c[i] + (1 - lam) * c[j])
        assert best == pytest.approx(lp.fun, abs=1e-10)


# -- coordinate operators ----------------------------------------------------------

def test_q_paren_grid_s3(s3, rng):
    grid = simplex_grid(6, 40)
    X = s3.images
    for _ in range(3):
        phi = rng.normal(size=6)
        for s in range(6):
            res = D.q_paren(phi, s3, s, c_ell=2.0)
            dis = (X != X[s][None, :]).astype(float)
            brute = float(np.min(grid @ phi + ((grid @ dis) ** 2).sum(axis=1) / 8))
            assert res.value <= brute + res.gap + 1e-12
            assert brute - res.value <= res.gap + 2e-2


def test_q_paren_trivial(s3, rng):
    vals, _ = D.coordinate_all(D.q_paren, np.full(6, -1.5), s3, c_ell=2.0)
    assert np.allclose(vals, -1.5, atol=1e-8)
    phi = rng.normal(size=6)
    vals, gaps = D.coordinate_all(D.q_paren, phi, s3, c_ell=2.0)
    assert np.all(vals <= phi + 1e-12)
    assert np.all(gaps <= 1e-8)


def test_q_j_dominates_and_inverse_identity(s3, rng):
    inv = s3.inverse_ordinals
    for _ in range(5):
        phi = rng.normal(size=6)
        qp, _ = D.coordinate_all(D.q_paren, phi, s3, c_ell=2.0)
        for j in (1, 2, 3):
            qj, gj = D.coordinate_all(D.q_j, phi, s3, c_ell=2.0, j=j)
            assert np.all(qj >= qp - 1e-7)
            for s in range(6):
                sigma = s3.elements[s]
                rhs = D.q_j(phi[inv], s3, int(inv[s]), c_ell=2.0, j=sigma(j))
                assert qj[s] == pytest.approx(rhs.value, abs=gj[s] + rhs.gap + 1e-7)


def test_q_hat_trivial(rng):
    X = slice_carrier(2, 4)
    vals, _ = D.coordinate_all(D.q_hat, np.full(6, 2.0), X)
    assert np.allclose(vals, 2.0, atol=1e-8)
    f = rng.normal(size=6)
    vals, _ = D.coordinate_all(D.q_hat, f, X)
    assert np.all(vals <= f + 1e-12)


def _all_ops(phi, G):
    yield D.q_w1_all(phi, G)
    yield D.q_tilde_all(phi, G, t=1.0, c_ell=2.0)
    yield D.q_tilde_alpha_all(phi, G, t=1.0, c_ell=2.0, alpha=0.5)
    yield D.coordinate_all(D.q_paren, phi, G, c_ell=2.0)[0]


def test_operators_monotone_and_dominated(s3, rng):
    for _ in range(10):
        phi = rng.normal(size=6)
        psi = phi + rng.uniform(0, 1, size=6)
        for a, b in zip(_all_ops(phi, s3), _all_ops(psi, s3)):
            assert np.all(a <= b + 1e-7)
            assert np.all(a <= phi + 1e-7)


# -- W1 operator ---------------------------------------------------------------------

def test_q_w1_examples(s4, rng):
    Dm = distance_table(s4, "hamming")
    lip = Dm[3].astype(float)
    assert np.allclose(D.q_w1_all(lip, s4), lip)
    A = [0, 7, 19]
    phi = np.full(24, 1e6)
    phi[A] = 0
    assert np.allclose(D.q_w1_all(phi, s4), Dm[:, A].min(axis=1))


@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6))
def test_q_w1_is_lipschitz(vals):
    G = symmetric_group(3)
    q = D.q_w1_all(np.array(vals), G)
    Dm = distance_table(G, "hamming")
    assert np.all(np.abs(q[:, None] - q[None, :]) <= Dm + 1e-12)
    assert np.all(q <= np.array(vals) + 1e-12)


# -- Talagrand's functional ---------------------------------------------------------

def test_talagrand_examples(s4):
    Dm = distance_table(s4, "hamming")
    assert D.talagrand_f(s4, 5, [5, 9]).value == pytest.approx(0.0, abs=1e-14)
    for s in range(24):
        assert D.talagrand_f(s4, s, [0]).value == pytest.approx(Dm[s, 0])


def test_talagrand_bounds_and_optimality(s4):
    Dm = distance_table(s4, "hamming")
    for A in itertools.combinations(range(24), 2):
        for s in range(24):
            r = D.talagrand_f(s4, s, A)
            assert r.optimality >= -1e-9
            assert r.value >= Dm[s, list(A)].min() ** 2 / 4 - 1e-12
            assert r.value <= Dm[s, list(A)].min() + 1e-12


def test_talagrand_cross_check(s4, rng):
    for _ in range(20):
        A = rng.choice(24, size=4, replace=False).tolist()
        s = int(rng.integers(24))
        value, gap = D.talagrand_f_fw(s4, s, A)
        assert abs(D.talagrand_f(s4, s, A).value - value) <= gap + 1e-9


def test_talagrand_rejects_empty(s3):
    with pytest.raises(D.DualOpError):
        D.talagrand_f(s3, 0, [])


# -- dispatch -------------------------------------------------------------------------

def test_infconv_spec(s3, rng):
    phi = rng.normal(size=6)
    with pytest.raises(D.DualOpError, match="t, c_ell"):
        D.InfConvSpec("Q_tilde_t")
    with pytest.raises(D.DualOpError):
        D.InfConvSpec("nope")
    vals, gaps = D.InfConvSpec("Q_tilde_t", t=1.0, c_ell=2.0).evaluate(phi, s3)
    assert np.allclose(vals, D.q_tilde_all(phi, s3, t=1.0, c_ell=2.0))
    vals, gaps = D.InfConvSpec("R_c", c=1.0).evaluate(phi, s3)
    assert vals[0] == D.r_c(phi, 1.0, 0)
    vals, _ = D.InfConvSpec("Q_j", c_ell=2.0, j=2).evaluate(phi, s3)
    assert vals[1] == pytest.approx(D.q_j(phi, s3, 1, c_ell=2.0, j=2).value)


def test_identity_ordinal_resolution(s3):
    phi = np.arange(6, dtype=float)
    a = D.q_tilde(phi, s3, Permutation.identity(3), t=1.0, c_ell=2.0)
    b = D.q_tilde(phi, s3, 0, t=1.0, c_ell=2.0)
    assert a == b
