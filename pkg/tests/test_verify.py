import json
import math

import numpy as np
import pytest

from permconc import verify as V
from permconc.measures import Measure, ewens, uniform
from permconc.permcore import build_local_base, symmetric_group, u_map
from permconc.slices import slice_carrier

from conftest import based_uniform


def _trial(rep, witness):
    return next(t for t in rep.trials if t.witness == witness)


def test_report_verdict_rule():
    rep = V.VerificationReport("x", {}, {})
    rep.add("ok", 1.0, 2.0)
    rep.add("within-gap", 1.0, 1.0 - 1e-3, gap=2e-3)
    assert rep.finalize().passed
    rep.add("bad", 1.0, 1.0 - 1e-3, gap=1e-4)
    assert rep.finalize().status == "fail"
    assert [t.witness for t in rep.failures()] == ["bad"]
    assert rep.worst_trial().witness == "bad"


def test_tw1_s2_example():
    T, mu = based_uniform(symmetric_group(2))
    rep = V.verify_tw1(T, mu, "hamming", trials=5, seed=0)
    assert rep.passed
    assert rep.constants["c"] == 2.0 and rep.constants["K_n"] == 1
    t = _trial(rep, "dirac_mu(0)")
    assert t.lhs == pytest.approx(0.5)
    assert t.rhs == pytest.approx(math.log(2))
    e = _trial(rep, "equal(mu,mu)")
    assert e.lhs == 0.0 and e.rhs == 0.0


def test_regime_tables(s4, a4, s2xs3):
    T4 = build_local_base(s4, 2)
    _, mu = based_uniform(s4)
    assert V.regime_a(T4, mu, "hamming")["c"] == 2
    assert V.regime_a(T4, ewens(T4, 2.0), "hamming")["c"] == 3
    assert V.regime_a(T4, ewens(T4, 2.0), "transposition")["c"] == 2
    assert V.regime_b(T4, mu)["c_squared"] == 4
    assert V.regime_b(T4, ewens(T4, 0.5)) == {"regime": "normal", "c_squared": 10, "ell": 2}
    Ta, mua = based_uniform(a4)
    assert V.regime_a(Ta, mua, "hamming")["K_n"] == 2


def test_hypothesis_failure_reported_distinctly(s2xs3, rng):
    T = build_local_base(s2xs3, s2xs3.ell)
    from permconc.measures import ProductMeasure, pushforward_product
    G = T.group
    factors = {j: rng.dirichlet(np.ones(len(G.orbits[j]))) for j in range(2, G.n + 1)}
    mu = pushforward_product(T, ProductMeasure(T, factors))
    rep = V.verify_t_paren(T, mu, trials=5, seed=0)
    assert rep.status == "hypothesis_failed"
    assert not rep.trials
    with pytest.raises(V.HypothesisError):
        V.regime_b(T, mu)


def test_tw1_rejects_non_product_class(s3):
    T = build_local_base(s3, 2)
    w = np.zeros(6)
    w[s3.ordinal(u_map(T, (2, 3)))] = 0.3
    w[s3.ordinal(u_map(T, (1, 1)))] = 0.7
    mu = Measure(s3, w)
    assert not V.in_product_class(T, mu)
    with pytest.raises(V.HypothesisError):
        V.verify_tw1(T, mu, trials=1)


def test_talagrand_s3_singleton_example(s3):
    T, mu = based_uniform(s3)
    rep = V.verify_talagrand(T, mu, seed=0)
    assert rep.passed
    t = _trial(rep, "A=[0],alpha=0.5")
    # f(sigma, {id}) = d_H(sigma, id): one 0, three 2's, two 3's, exponent alpha/(2c^2) = 1/16
    expected = (1 + 3 * math.exp(2 / 16) + 2 * math.exp(3 / 16)) / 6
    # both sides are reported on the log scale
    assert math.exp(t.lhs) == pytest.approx(expected, rel=1e-12)
    assert math.exp(t.rhs) == pytest.approx(6.0)


def test_t_paren_dirac_example(s4):
    T, mu = based_uniform(s4)
    rep = V.verify_t_paren(T, mu, trials=20, seed=1)
    assert rep.passed
    assert rep.constants["c_squared"] == 4
    rhs = 4 * math.log(24)
    dirac = [t for t in rep.trials if t.witness.startswith("dirac(")]
    assert len(dirac) == 24 * 24
    assert all(t.rhs == pytest.approx(rhs) for t in dirac)
    assert max(t.lhs for t in dirac) == pytest.approx(4 / 8, abs=1e-7)


def test_slice_antipodal_example():
    X = slice_carrier(2, 4)
    rep = V.verify_slice(2, 4, trials=10, seed=0)
    assert rep.passed
    s, t = 0, len(X) - 1
    assert np.all(np.asarray(X.points[s]) != np.asarray(X.points[t]))
    hat = _trial(rep, f"hat:dirac({s},{t})")
    assert hat.lhs == pytest.approx(0.5, abs=1e-7)
    assert hat.rhs == pytest.approx(4 * math.log(6))


def test_ckp_example():
    mu = uniform(symmetric_group(2))
    rep = V.verify_ckp(mu, trials=10, seed=0)
    assert rep.passed
    t = _trial(rep, "dirac(0)")
    assert t.lhs == pytest.approx(1.0) and t.rhs == pytest.approx(2 * math.log(2))


def test_hoeffding_trivial(s4):
    T, mu = based_uniform(s4)
    rep = V.verify_hoeffding_dual(T, mu, "transposition", seed=0)
    assert rep.passed
    assert all(t.lhs <= t.rhs + 1e-12 for t in rep.trials if "lambda=0" in t.witness)


def test_canary_fails():
    rep = V.canary(seed=0)
    assert rep.status == "fail"
    assert rep.failures()


def test_dumps_deterministic(s3):
    T, mu = based_uniform(s3)
    a = V.dumps(V.verify_group_config(T, mu, trials=10, seed=3))
    b = V.dumps(V.verify_group_config(T, mu, trials=10, seed=3, threads=4))
    assert a == b
    data = json.loads(a)
    assert all(r["status"] == "pass" for r in data)
    c = V.dumps(V.verify_group_config(T, mu, trials=10, seed=4))
    assert c != a


def test_multinomial():
    rep = V.verify_multinomial((2, 1, 1), trials=20, seed=0)
    assert rep.passed
