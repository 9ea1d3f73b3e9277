"""Inequality verification engine.

Each ``verify_*`` function evaluates both sides of one inequality on a family
of witnesses and returns a :class:`VerificationReport`.  Transport costs are
primal values, hence upper bounds of the true infimum, and come with a
certified gap.  A trial fails only when ``slack < -(gap + tolerance)``, so a
failure is a proven violation up to round-off.

Witness families:

* all Dirac pairs and all ``(delta, mu)`` / ``(mu, delta)`` pairs;
* Dirichlet(1) random pairs from a seeded stream;
* for W1, tilts ``mu (1 + eps psi)`` along a high-variance Lipschitz function,
  which approach the worst case near ``mu``.
"""
from __future__ import annotations

import itertools
import json
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp

from . import dualops
from .measures import Measure, check_invariance, in_product_class, uniform
from .permcore import (GroupTable, LocalBase, build_local_base, is_ell_local,
                       is_normal_in_symmetric, symmetric_group)
from .slices import MultinomialCarrier, projection_map, slice_carrier
from .transport import (BarycentricCost, distance_table, disagreement_tensor, frank_wolfe_transport,
                        solve_transport)

TOL = 1e-8
DEFAULT_TRIALS = 500
ALPHAS = (0.25, 0.5, 0.75)
NORMALITY_MAX_N = 5


class HypothesisError(ValueError):
    """The hypotheses of the inequality do not hold for the given group and measure."""


# -- reports --------------------------------------------------------------------

@dataclass
class Trial:
    witness: str
    lhs: float
    rhs: float
    gap: float = 0.0

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


@dataclass
class VerificationReport:
    inequality_id: str
    carrier: dict
    constants: dict
    trials: list = field(default_factory=list)
    tolerance: float = TOL
    status: str = "pass"           # pass | fail | hypothesis_failed
    hypothesis: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def add(self, witness: str, lhs: float, rhs: float, gap: float = 0.0):
        self.trials.append(Trial(witness, float(lhs), float(rhs), float(max(gap, 0.0))))

    def failures(self) -> list[Trial]:
        return [t for t in self.trials if t.slack < -(t.gap + self.tolerance)]

    def finalize(self) -> "VerificationReport":
        if self.status != "hypothesis_failed":
            self.status = "fail" if self.failures() else "pass"
        return self

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @property
    def worst_slack(self) -> float | None:
        return min((t.slack for t in self.trials), default=None)

    @property
    def min_ratio(self) -> float | None:
        ratios = [t.rhs / t.lhs for t in self.trials if t.lhs > 1e-12]
        return min(ratios, default=None)

    def worst_trial(self) -> Trial | None:
        return min(self.trials, key=lambda t: t.slack + t.gap, default=None)

    def to_json(self, include_trials: bool = True) -> dict:
        out = {
            "inequality_id": self.inequality_id, "carrier": self.carrier, "constants": self.constants,
            "status": self.status, "tolerance": self.tolerance, "hypothesis": self.hypothesis,
            "n_trials": len(self.trials), "n_failures": len(self.failures()),
            "worst_slack": _finite(self.worst_slack), "min_ratio": _finite(self.min_ratio),
            "notes": self.notes,
        }
        worst = self.worst_trial()
        out["worst_trial"] = _trial_json(worst) if worst else None
        if include_trials:
            out["trials"] = [_trial_json(t) for t in self.trials]
        return out


def _finite(x):
    if x is None or not math.isfinite(x):
        return None
    return float(x)


def _trial_json(t: Trial) -> dict:
    return {"witness": t.witness, "lhs": _finite(t.lhs), "rhs": _finite(t.rhs),
            "slack": _finite(t.slack), "gap": t.gap}


def dumps(reports, include_trials: bool = True) -> str:
    """Deterministic JSON for one report or a list of reports."""
    if isinstance(reports, VerificationReport):
        data = reports.to_json(include_trials)
    else:
        data = [r.to_json(include_trials) for r in reports]
    return json.dumps(data, sort_keys=True, indent=1, allow_nan=False)


# -- helpers ----------------------------------------------------------------------

def _rng(seed: int, *keys) -> np.random.Generator:
    tag = zlib.crc32("/".join(map(str, keys)).encode())
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(tag,)))


def _entropy(a: np.ndarray, m: np.ndarray) -> float:
    pos = a > 0
    if np.any(m[pos] <= 0):
        return math.inf
    return float(np.sum(a[pos] * np.log(a[pos] / m[pos])))


def _sym_rhs(h1: float, h2: float) -> float:
    return (math.sqrt(max(h1, 0.0)) + math.sqrt(max(h2, 0.0))) ** 2


def _carrier_info(carrier, T: LocalBase | None = None) -> dict:
    info = {"name": getattr(carrier, "name", None) or type(carrier).__name__,
            "size": len(carrier), "fingerprint": carrier.fingerprint}
    if T is not None:
        info["base"] = T.fingerprint
        info["ell"] = T.ell
    return info


def _as_base(G) -> LocalBase:
    if isinstance(G, LocalBase):
        return G
    if isinstance(G, GroupTable):
        return build_local_base(G, G.ell)
    raise TypeError("expected a GroupTable or a LocalBase")


def _is_uniform(mu: Measure) -> bool:
    return bool(np.allclose(mu.weights, 1.0 / len(mu), rtol=0, atol=1e-14))


def _check_product_class(T: LocalBase, mu: Measure) -> str:
    if mu.base_fingerprint == T.fingerprint:
        return "recorded base"
    if in_product_class(T, mu):
        return "membership checked"
    raise HypothesisError("the reference measure is not in the product class of the base")


def regime_a(T: LocalBase, mu: Measure, metric: str) -> dict:
    """Constant table of the W1 and barycentric inequalities."""
    G = T.group
    regime = "uniform" if _is_uniform(mu) and is_ell_local(G, T.ell) else "general"
    c = dualops.c_ell(T.ell, G.n, metric, regime)
    return {"regime": regime, "c": c, "c_squared": c * c, "K_n": G.k_n, "ell": T.ell, "metric": metric}


def regime_b(T: LocalBase, mu: Measure) -> dict:
    """Constant table of the coordinate-wise inequality, or ``HypothesisError``."""
    G = T.group
    if _is_uniform(mu) and is_ell_local(G, T.ell):
        return {"regime": "uniform", "c_squared": dualops.c_ell_squared_paren(T.ell, "uniform"), "ell": T.ell}
    if G.n > NORMALITY_MAX_N:
        raise HypothesisError(f"normality is only checked exhaustively for n <= {NORMALITY_MAX_N}")
    if not is_normal_in_symmetric(G):
        raise HypothesisError("G is not normal in S_n and the measure is not uniform")
    if not check_invariance(mu, G, symmetric_group(G.n)):
        raise HypothesisError("measure is not invariant under inversion and conjugation by S_n")
    return {"regime": "normal", "c_squared": dualops.c_ell_squared_paren(T.ell, "normal"), "ell": T.ell}


def witness_pairs(mu: Measure, rng: np.random.Generator, trials: int, *, dirac: bool = True):
    """``(label, nu1, nu2)`` weight arrays: Dirac families, then Dirichlet(1) pairs."""
    N = len(mu)
    m = mu.weights
    out = [("equal(mu,mu)", m, m)]
    if dirac:
        eye = np.eye(N)
        for s, t in itertools.product(range(N), repeat=2):
            out.append((f"dirac({s},{t})", eye[s], eye[t]))
        for s in range(N):
            out.append((f"dirac_mu({s})", eye[s], m))
            out.append((f"mu_dirac({s})", m, eye[s]))
    for k in range(trials):
        a = rng.dirichlet(np.ones(N))
        b = rng.dirichlet(np.ones(N))
        out.append((f"dirichlet({k})", a, b))
    return out


def _pool_map(fn, items, threads: int = 1) -> list:
    """``[fn(x) for x in items]`` on up to ``threads`` workers; order is preserved."""
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _weak(features: np.ndarray, a: np.ndarray, b: np.ndarray, stop_value: float | None):
    cost = BarycentricCost(features, a)
    P, value, gap, *_ = frank_wolfe_transport(cost, a, b, stop_value=stop_value)
    return value, gap


def max_variance_lipschitz(mu: Measure, D: np.ndarray, starts: int = 8, rounds: int = 30) -> np.ndarray:
    """Local maximiser of ``Var_mu(phi)`` over 1-Lipschitz ``phi`` (successive LPs)."""
    N = len(mu)
    m = mu.weights
    rows, cols = np.nonzero(~np.eye(N, dtype=bool))
    A = np.zeros((rows.size, N))
    A[np.arange(rows.size), rows] = 1.0
    A[np.arange(rows.size), cols] = -1.0
    ub = D[rows, cols]
    bounds = [(0, 0)] + [(None, None)] * (N - 1)
    best, best_var = np.zeros(N), -1.0
    order = np.argsort(-np.max(D, axis=1))[:starts]
    for s in order:
        phi = D[s].astype(np.float64)
        for _ in range(rounds):
            grad = m * (phi - m @ phi)
            res = linprog(-grad, A_ub=A, b_ub=ub, bounds=bounds, method="highs")
            if res.status != 0:
                break
            new = res.x - m @ res.x
            if np.allclose(new, phi - m @ phi, atol=1e-12):
                break
            phi = res.x
        var = float(m @ (phi - m @ phi) ** 2)
        if var > best_var:
            best, best_var = phi - m @ phi, var
    return best


def tilt_witnesses(mu: Measure, D: np.ndarray, count: int = 12):
    """Measures ``mu (1 + eps psi)`` along a max-variance Lipschitz ``psi``, both signs."""
    psi = max_variance_lipschitz(mu, D)
    top = float(np.max(np.abs(psi)))
    if top == 0:
        return []
    out = []
    for sign in (1.0, -1.0):
        for k, eps in enumerate(np.geomspace(1e-3, 0.999, count)):
            w = mu.weights * (1.0 + sign * eps * psi / top)
            out.append((f"tilt({'+' if sign > 0 else '-'},{k})", w / w.sum()))
    return out


# -- W1 and barycentric -------------------------------------------------------------

def verify_tw1(G, mu: Measure, metric: str = "hamming", trials: int = DEFAULT_TRIALS, seed: int = 0,
               *, c_override: float | None = None, adversarial: bool = True, dirac: bool = True,
               threads: int = 1) -> VerificationReport:
    """``(2/c**2) W1(nu1, nu2)**2 <= K_n (sqrt H(nu1|mu) + sqrt H(nu2|mu))**2``."""
    T = _as_base(G)
    membership = _check_product_class(T, mu)
    const = regime_a(T, mu, metric)
    if c_override is not None:
        const = dict(const, c=float(c_override), c_squared=float(c_override) ** 2, regime="override")
    rep = VerificationReport("tw1", _carrier_info(T.group, T), const, hypothesis={"product_class": membership})
    D = distance_table(T.group, metric)
    coef = 2.0 / const["c_squared"]
    m = mu.weights
    pairs = witness_pairs(mu, _rng(seed, "tw1", metric, T.fingerprint), trials, dirac=dirac)
    if adversarial:
        pairs += [(lab, w, m) for lab, w in tilt_witnesses(mu, D)]
    def trial(item):
        label, a, b = item
        _, w1, gap = solve_transport(a, b, D)
        rhs = const["K_n"] * _sym_rhs(_entropy(a, m), _entropy(b, m))
        lo = max(w1 - gap, 0.0)
        return label, coef * w1 * w1, rhs, coef * (w1 * w1 - lo * lo)

    for row in _pool_map(trial, pairs, threads):
        rep.add(*row)
    return rep.finalize()


def verify_t_tilde(G, mu: Measure, metric: str = "hamming", trials: int = DEFAULT_TRIALS, seed: int = 0,
                   *, dual_functions: int = 20, dirac: bool = True, early_stop: bool = True,
                   threads: int = 1) -> VerificationReport:
    """``T~2(nu2|nu1) / (2 c**2) <= K_n (sqrt H1 + sqrt H2)**2`` plus its dual form."""
    T = _as_base(G)
    membership = _check_product_class(T, mu)
    const = regime_a(T, mu, metric)
    rep = VerificationReport("t_tilde", _carrier_info(T.group, T), const, hypothesis={"product_class": membership})
    D = distance_table(T.group, metric)
    coef = 1.0 / (2.0 * const["c_squared"])
    m = mu.weights
    rng = _rng(seed, "t_tilde", metric, T.fingerprint)
    def trial(item):
        label, a, b = item
        rhs = const["K_n"] * _sym_rhs(_entropy(a, m), _entropy(b, m))
        value, gap = _weak(D, a, b, rhs / coef if early_stop and math.isfinite(rhs) else None)
        return label, coef * value, rhs, coef * gap

    for row in _pool_map(trial, witness_pairs(mu, rng, trials, dirac=dirac), threads):
        rep.add(*row)
    _dual_barycentric(rep, T.group, mu, D, const, rng, dual_functions)
    return rep.finalize()


def _random_functions(rng: np.random.Generator, N: int, count: int):
    for k in range(count):
        scale = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
        yield k, rng.normal(size=N) * scale


def _log_dual(q: np.ndarray, phi: np.ndarray, logm: np.ndarray, alpha: float) -> float:
    """log of ``(int e^{alpha q} dmu)^{1/alpha} (int e^{-(1-alpha) phi} dmu)^{1/(1-alpha)}``."""
    return (logsumexp(alpha * q + logm) / alpha
            + logsumexp(-(1 - alpha) * phi + logm) / (1 - alpha))


def _dual_barycentric(rep, G, mu, D, const, rng, count):
    m = mu.weights
    logm = np.log(m, where=m > 0, out=np.full_like(m, -np.inf))
    t = float(const["K_n"])
    if t <= 0:
        return
    for k, phi in _random_functions(rng, len(G), count):
        q = dualops.q_tilde_all(phi, G, t=t, c_ell=const["c"], metric=const["metric"])
        for alpha in ALPHAS:
            rep.add(f"dual_tilde({k},{alpha})", _log_dual(q, phi, logm, alpha), 0.0)
            qa = dualops.q_tilde_alpha_all(phi, G, t=t, c_ell=const["c"], alpha=alpha, metric=const["metric"])
            rep.add(f"dual_tilde_alpha({k},{alpha})", _log_dual(qa, phi, logm, alpha), 0.0)


def verify_hoeffding_dual(G, mu: Measure, metric: str = "hamming", lambdas=None, functions: int = 50,
                          seed: int = 0) -> VerificationReport:
    """``int e^{l phi} dmu <= exp(l int phi dmu + K_n c**2 l**2 / 8)`` for 1-Lipschitz ``phi``."""
    T = _as_base(G)
    membership = _check_product_class(T, mu)
    const = regime_a(T, mu, metric)
    rep = VerificationReport("hoeffding_dual", _carrier_info(T.group, T), const,
                             hypothesis={"product_class": membership})
    lambdas = np.linspace(0.0, 4.0, 9) if lambdas is None else np.asarray(lambdas, dtype=np.float64)
    D = distance_table(T.group, metric)
    m = mu.weights
    logm = np.log(m, where=m > 0, out=np.full_like(m, -np.inf))
    rng = _rng(seed, "hoeffding", metric, T.fingerprint)
    fams = [("constant", np.zeros(len(m)))]
    fams += [(f"lip({k})", dualops.q_w1_all(psi, T.group, metric)) for k, psi in _random_functions(rng, len(m), functions)]
    fams += [(f"distance({s})", D[s].astype(np.float64)) for s in range(len(m))]
    for label, phi in fams:
        lip = float(np.max(np.abs(phi[:, None] - phi[None, :]) - D))
        if lip > 1e-12:
            raise AssertionError("generated function is not 1-Lipschitz")
        for lam in lambdas:
            lhs = float(logsumexp(lam * phi + logm))
            rhs = lam * float(m @ phi) + const["K_n"] * const["c_squared"] * lam * lam / 8.0
            rep.add(f"{label},lambda={lam:g}", lhs, rhs)
    return rep.finalize()


# -- coordinate-wise ---------------------------------------------------------------

def _hypothesis_report(iid: str, T: LocalBase, err: Exception) -> VerificationReport:
    rep = VerificationReport(iid, _carrier_info(T.group, T), {}, status="hypothesis_failed",
                             hypothesis={"error": str(err)})
    return rep.finalize()


def verify_t_paren(G, mu: Measure, trials: int = DEFAULT_TRIALS, seed: int = 0, *,
                   dual_functions: int = 10, dirac: bool = True, early_stop: bool = True,
                   threads: int = 1) -> VerificationReport:
    """``T^2(nu2|nu1) / (2 c**2) <= (sqrt H1 + sqrt H2)**2`` in the regime selected for ``(G, mu)``."""
    T = _as_base(G)
    try:
        const = regime_b(T, mu)
    except HypothesisError as err:
        return _hypothesis_report("t_paren", T, err)
    rep = VerificationReport("t_paren", _carrier_info(T.group, T), const,
                             hypothesis={"regime": const["regime"]})
    B = disagreement_tensor(T.group)
    coef = 1.0 / (2.0 * const["c_squared"])
    m = mu.weights
    rng = _rng(seed, "t_paren", T.fingerprint)
    def trial(item):
        label, a, b = item
        rhs = _sym_rhs(_entropy(a, m), _entropy(b, m))
        value, gap = _weak(B, a, b, rhs / coef if early_stop and math.isfinite(rhs) else None)
        return label, coef * value, rhs, coef * gap

    for row in _pool_map(trial, witness_pairs(mu, rng, trials, dirac=dirac), threads):
        rep.add(*row)
    c = math.sqrt(const["c_squared"])
    logm = np.log(m, where=m > 0, out=np.full_like(m, -np.inf))
    for k, phi in _random_functions(rng, len(m), dual_functions):
        q, gaps = dualops.coordinate_all(dualops.q_paren, phi, T.group, c_ell=c)
        for alpha in ALPHAS:
            rep.add(f"dual_paren({k},{alpha})", _log_dual(q, phi, logm, alpha), 0.0, float(gaps.max()))
    return rep.finalize()


def _subsets(N: int, cap: int, rng: np.random.Generator, extra: int):
    out = [tuple(A) for r in range(1, cap + 1) for A in itertools.combinations(range(N), r)]
    seen = set(out)
    for _ in range(extra):
        size = int(rng.integers(cap + 1, N + 1)) if cap < N else N
        A = tuple(sorted(rng.choice(N, size=size, replace=False).tolist()))
        if A not in seen:
            seen.add(A)
            out.append(A)
    return out


def verify_talagrand(G, mu: Measure, subset_cap: int = 2, random_subsets: int = 40, alphas=ALPHAS,
                     seed: int = 0) -> VerificationReport:
    """``int exp(alpha f(s, A) / (2 c**2)) dmu <= mu(A)**(-alpha/(1-alpha))`` and its tail form."""
    T = _as_base(G)
    try:
        const = regime_b(T, mu)
    except HypothesisError as err:
        return _hypothesis_report("talagrand", T, err)
    Gt = T.group
    rep = VerificationReport("talagrand", _carrier_info(Gt, T), const, hypothesis={"regime": const["regime"]})
    m = mu.weights
    logm = np.log(m, where=m > 0, out=np.full_like(m, -np.inf))
    c2 = const["c_squared"]
    rng = _rng(seed, "talagrand", T.fingerprint)
    t_grid = np.arange(0.0, Gt.n + 0.25, 0.25)
    for A in _subsets(len(Gt), subset_cap, rng, random_subsets) + [tuple(range(len(Gt)))]:
        f = dualops.talagrand_f_all(Gt, list(A))
        muA = float(m[list(A)].sum())
        if muA <= 0:
            continue
        for alpha in alphas:
            lhs = float(logsumexp(alpha * f / (2 * c2) + logm))
            rhs = -alpha / (1 - alpha) * math.log(muA)
            rep.add(f"A={list(A)},alpha={alpha}", lhs, rhs, 1e-12)
            if len(A) == 1:
                for t in t_grid:
                    tail = float(m[f >= t - 1e-12].sum())
                    bound = math.exp(-alpha * t / (2 * c2)) / muA ** (alpha / (1 - alpha))
                    rep.add(f"tail A={list(A)},alpha={alpha},t={t:g}", tail, bound)
    return rep.finalize()


# -- CKP -----------------------------------------------------------------------

def verify_ckp(mu: Measure, trials: int = DEFAULT_TRIALS, seed: int = 0, *,
               dual_trials: int = 20) -> VerificationReport:
    """``||mu - nu||_TV**2 <= 2 H(nu|mu)`` (TV as the l1 norm) plus the dual on 3-point spaces."""
    rep = VerificationReport("ckp", _carrier_info(mu.carrier), {"tv_convention": "l1"})
    m = mu.weights
    N = len(m)
    rng = _rng(seed, "ckp", mu.carrier.fingerprint)
    nus = [("equal", m)] + [(f"dirac({s})", np.eye(N)[s]) for s in range(N)]
    nus += [(f"dirichlet({k})", rng.dirichlet(np.ones(N))) for k in range(trials)]
    for label, nu in nus:
        tv = float(np.abs(nu - m).sum())
        rep.add(label, tv * tv, 2 * _entropy(nu, m))
    lambdas = (0.0, 0.5, 1.0, 2.0, 4.0)
    cs = (0.0, 0.5, 1.0, 2.0)
    for k in range(dual_trials):
        nu = rng.dirichlet(np.ones(3))
        f = rng.normal(size=3) * float(np.exp(rng.uniform(-1, 2)))
        for c in cs:
            R = np.array([dualops.r_c(f, c, x) for x in range(3)])
            for lam in lambdas:
                lhs = float(logsumexp(lam * R, b=nu))
                rhs = lam * float(nu @ f) + lam * lam * c * c / 8
                rep.add(f"pinsker_dual({k},c={c},lambda={lam})", lhs, rhs)
    return rep.finalize()


# -- slices ----------------------------------------------------------------------

def verify_slice(k: int, n: int, trials: int = DEFAULT_TRIALS, seed: int = 0, *, tartine_functions: int = 10,
                 dirac: bool = True, early_stop: bool = True, threads: int = 1) -> VerificationReport:
    """Slice inequalities (a) with ``C = min(k, n-k)``, (b) with 1/8, the cost chain and the projection lemma."""
    X = slice_carrier(k, n)
    C = dualops.slice_constant(k, n)
    const = {"C": C, "hat_constant": 1.0 / 8.0, "metric": "half_hamming"}
    rep = VerificationReport("slice", _carrier_info(X), const)
    if C == 0:
        rep.notes.append("singleton slice")
        return rep.finalize()
    mu = uniform(X)
    m = mu.weights
    D = distance_table(X, "half_hamming")
    B = disagreement_tensor(X)
    rng = _rng(seed, "slice", k, n)
    def trial(item):
        label, a, b = item
        rhs = _sym_rhs(_entropy(a, m), _entropy(b, m))
        _, w1, g1 = solve_transport(a, b, D)
        lo = max(w1 - g1, 0.0)
        tt, gt = _weak(D, a, b, None)
        th, gh = _weak(B, a, b, 8.0 * rhs if early_stop and math.isfinite(rhs) else None)
        rows = [(f"w1:{label}", 2.0 / C * w1 * w1, rhs, 2.0 / C * (w1 * w1 - lo * lo)),
                (f"tilde:{label}", tt / (2.0 * C), rhs, gt / (2.0 * C)),
                (f"hat:{label}", th / 8.0, rhs, gh / 8.0),
                # chain W1^2 <= T~2 <= (n/4) T^2
                (f"chain_w1:{label}", w1 * w1, tt, gt)]
        if not early_stop:
            rows.append((f"chain_hat:{label}", tt, n / 4.0 * th, gt + n / 4.0 * gh))
        return rows

    for rows in _pool_map(trial, witness_pairs(mu, rng, trials, dirac=dirac), threads):
        for row in rows:
            rep.add(*row)
    for label, lhs, rhs, gap in tartine_trials(k, n, tartine_functions, seed):
        rep.add(label, lhs, rhs, gap)
    return rep.finalize()


def tartine_trials(k: int, n: int, functions: int, seed: int = 0, c_squared_values=(4.0, 2.0)):
    """Projection lemma ``Q^(f o P)(s) >= Q_hat f(P(s))`` on every ``s`` of ``S_n``.

    Yields ``(label, lhs, rhs, gap)`` with ``lhs = Q_hat f(P(s))`` and ``rhs = Q^(f o P)(s)``.
    """
    X = slice_carrier(k, n)
    S = symmetric_group(n)
    P = projection_map(S, X)
    rng = _rng(seed, "tartine", k, n)
    for j, f in _random_functions(rng, len(X), functions):
        qhat, ghat = dualops.coordinate_all(dualops.q_hat, f, X)
        for c2 in c_squared_values:
            qp, gp = dualops.coordinate_all(dualops.q_paren, f[P], S, c_ell=math.sqrt(c2))
            for s in range(len(S)):
                # Q^ is an upper bound within its gap, Q_hat is within its own gap
                yield f"tartine(f={j},c2={c2:g},s={s})", qhat[P[s]], qp[s], ghat[P[s]] + gp[s]


def verify_multinomial(parts, trials: int = DEFAULT_TRIALS, seed: int = 0, *, dirac: bool = True,
                       early_stop: bool = True, threads: int = 1) -> VerificationReport:
    """Inequality (b) with constant 1/8 on the multinomial carrier of ``parts``."""
    X = MultinomialCarrier(tuple(parts))
    rep = VerificationReport("multinomial", _carrier_info(X), {"hat_constant": 1.0 / 8.0, "parts": list(parts)})
    mu = uniform(X)
    m = mu.weights
    B = disagreement_tensor(X)
    rng = _rng(seed, "multinomial", *parts)
    def trial(item):
        label, a, b = item
        rhs = _sym_rhs(_entropy(a, m), _entropy(b, m))
        th, gh = _weak(B, a, b, 8.0 * rhs if early_stop and math.isfinite(rhs) else None)
        return label, th / 8.0, rhs, gh / 8.0

    for row in _pool_map(trial, witness_pairs(mu, rng, trials, dirac=dirac), threads):
        rep.add(*row)
    return rep.finalize()


# -- canary ----------------------------------------------------------------------

def canary(seed: int = 0, trials: int = 50) -> VerificationReport:
    """TW1 on uniform S_3 with ``c(l)`` reduced by 0.5; must report a failure."""
    G = symmetric_group(3)
    T = build_local_base(G, 2)
    mu = uniform(G)
    c = regime_a(T, mu, "hamming")["c"] - 0.5
    rep = verify_tw1(T, mu, "hamming", trials, seed, c_override=c)
    rep.inequality_id = "canary_tw1"
    return rep


# -- suites ----------------------------------------------------------------------

VERIFIERS = ("tw1", "t_tilde", "t_paren", "talagrand", "ckp", "hoeffding_dual", "slice", "multinomial")


def verify_group_config(T: LocalBase, mu: Measure, trials: int = DEFAULT_TRIALS, seed: int = 0,
                        metrics=("hamming", "transposition"), only=None, threads: int = 1) -> list[VerificationReport]:
    """Every group inequality applicable to ``(T, mu)``."""
    only = set(only or VERIFIERS)
    out = []
    for metric in metrics:
        if "tw1" in only:
            out.append(verify_tw1(T, mu, metric, trials, seed, threads=threads))
        if "t_tilde" in only:
            out.append(verify_t_tilde(T, mu, metric, trials, seed, threads=threads))
        if "hoeffding_dual" in only:
            out.append(verify_hoeffding_dual(T, mu, metric, seed=seed))
    if "t_paren" in only:
        out.append(verify_t_paren(T, mu, trials, seed, threads=threads))
    if "talagrand" in only:
        out.append(verify_talagrand(T, mu, seed=seed))
    if "ckp" in only:
        out.append(verify_ckp(mu, trials, seed))
    for r in out:
        r.carrier["measure"] = mu.label
    return out


def default_suite():
    """``(label, kind, payload)`` entries of the default configuration list."""
    from .measures import ewens
    from .permcore import alternating_group, block_product_group
    configs = []
    for name, G in (("S3", symmetric_group(3)), ("S4", symmetric_group(4)), ("A4", alternating_group(4)),
                    ("S2xS3", block_product_group([2, 3]))):
        T = build_local_base(G, G.ell)
        configs.append((f"{name}/uniform", "group", (T, Measure(G, uniform(G).weights, T.fingerprint, "uniform"))))
    S4 = symmetric_group(4)
    T4 = build_local_base(S4, 2)
    for theta in (0.5, 2.0):
        configs.append((f"S4/ewens{theta:g}", "group", (T4, ewens(T4, theta))))
    configs.append(("X(2,2)", "slice", (2, 4)))
    configs.append(("X(2,3)", "slice", (2, 5)))
    configs.append(("X(2,1,1)", "multinomial", (2, 1, 1)))
    return configs


def verify_all(seed: int = 0, trials: int = DEFAULT_TRIALS, configs=None, only=None,
               threads: int = 1) -> list[VerificationReport]:
    """Run the suite; reports come back in configuration order."""
    only = set(only or VERIFIERS)
    reports = []
    for label, kind, payload in (configs or default_suite()):
        if kind == "group":
            T, mu = payload
            reps = verify_group_config(T, mu, trials, seed, only=only, threads=threads)
        else:
            if kind == "slice":
                carrier = slice_carrier(*payload)
                reps = [verify_slice(*payload, trials=trials, seed=seed, threads=threads)] if "slice" in only else []
            else:
                carrier = MultinomialCarrier(tuple(payload))
                reps = [verify_multinomial(payload, trials, seed, threads=threads)] if "multinomial" in only else []
            if "ckp" in only:
                reps.append(verify_ckp(uniform(carrier), trials, seed))
        for r in reps:
            r.carrier["config"] = label
        reports.extend(reps)
    return reports


def lipschitz_constants(T: LocalBase, mu: Measure, metrics=("hamming", "transposition")) -> dict:
    """``metric -> (D, K_n, c(l)**2)`` of the W1 regime, for deviation experiments."""
    out = {}
    for metric in metrics:
        const = regime_a(T, mu, metric)
        out[metric] = (distance_table(T.group, metric), const["K_n"], const["c_squared"])
    return out
