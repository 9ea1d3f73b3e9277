"""Sampling from product-class measures and deviation experiments.

A product-class measure is drawn letter by letter: ``i_j`` is sampled from
the factor on ``O_j`` and the word is mapped through ``U_T``.  Streams are
derived from a mandatory master seed by ``SeedSequence.spawn`` on fixed-size
chunks, so the output does not depend on the thread count.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .measures import Measure, ProductMeasure, pushforward_product
from .permcore import GroupTable, LocalBase, Permutation, u_map

CHUNK = 4096
EXACT_CAP = 5040


class SamplingError(ValueError):
    pass


def _word_index(T: LocalBase) -> tuple[np.ndarray, np.ndarray]:
    """Mixed-radix strides and a lookup array from encoded words to element ordinals."""
    G = T.group
    sizes = [len(G.orbits[j]) for j in range(2, G.n + 1)]
    strides = np.ones(len(sizes), dtype=np.int64)
    for k in range(len(sizes) - 2, -1, -1):
        strides[k] = strides[k + 1] * sizes[k + 1]
    pos = np.zeros_like(T.word_table)
    for col, j in enumerate(range(2, G.n + 1)):
        lookup = {i: k for k, i in enumerate(G.orbits[j])}
        pos[:, col] = [lookup[i] for i in T.word_table[:, col]]
    table = np.empty(len(G), dtype=np.int64)
    table[pos @ strides] = np.arange(len(G))
    return strides, table


def sample_ordinals(nu_hat: ProductMeasure, seed, count: int, threads: int = 1) -> np.ndarray:
    """Element ordinals of ``count`` independent draws from ``U_T # nu_hat``."""
    if seed is None:
        raise SamplingError("a seed is required")
    if count < 0:
        raise SamplingError("count must be nonnegative")
    T = nu_hat.base
    G = T.group
    strides, table = _word_index(T)
    factors = [np.asarray(nu_hat.factors[j], dtype=np.float64) for j in range(2, G.n + 1)]
    n_chunks = -(-count // CHUNK)
    seeds = np.random.SeedSequence(seed).spawn(n_chunks)

    def draw(k):
        m = min(CHUNK, count - k * CHUNK)
        rng = np.random.default_rng(seeds[k])
        code = np.zeros(m, dtype=np.int64)
        for col, w in enumerate(factors):
            code += strides[col] * rng.choice(len(w), size=m, p=w)
        return table[code]

    if n_chunks == 0:
        return np.zeros(0, dtype=np.int64)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(draw, range(n_chunks)))
    else:
        parts = [draw(k) for k in range(n_chunks)]
    return np.concatenate(parts)


def sample(nu_hat: ProductMeasure, seed, count: int, threads: int = 1) -> list[Permutation]:
    """Draw ``count`` permutations from the product-class measure of ``nu_hat``."""
    G = nu_hat.base.group
    return [G.elements[k] for k in sample_ordinals(nu_hat, seed, count, threads)]


def sample_word(nu_hat: ProductMeasure, rng: np.random.Generator) -> Permutation:
    """One draw through the explicit word map; slow, used as a reference."""
    G = nu_hat.base.group
    word = [G.orbits[j][rng.choice(len(G.orbits[j]), p=nu_hat.factors[j])] for j in range(2, G.n + 1)]
    return u_map(nu_hat.base, word)


# -- statistics --------------------------------------------------------------

def l_cycle_statistic(sigma: Permutation, l: int) -> int:
    """Number of cycles of length ``l`` (fixed points count as 1-cycles)."""
    if not 1 <= l <= sigma.n:
        raise SamplingError(f"l={l} outside [1, {sigma.n}]")
    return sum(1 for c in sigma.cycles if len(c) == l)


def l_cycle_alpha(sigma: Permutation, l: int) -> np.ndarray:
    """Certificate weights: 1 on the supports of the ``l``-cycles of ``sigma``."""
    if not 1 <= l <= sigma.n:
        raise SamplingError(f"l={l} outside [1, {sigma.n}]")
    a = np.zeros(sigma.n)
    for c in sigma.cycles:
        if len(c) == l:
            a[[k - 1 for k in c]] = 1.0
    return a


@dataclass(frozen=True)
class ConvexLipschitz:
    """``phi(y) = max_r <w_r, y> + b_r`` with ``||w_r||_2 <= 1``: convex and 1-Lipschitz."""

    weights: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.weights, dtype=np.float64))
        b = np.atleast_1d(np.asarray(self.offsets, dtype=np.float64))
        if W.shape[0] != b.shape[0]:
            raise SamplingError("one offset per affine piece")
        if np.any(np.linalg.norm(W, axis=1) > 1 + 1e-12):
            raise SamplingError("affine pieces must have gradient norm at most 1")
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "offsets", b)

    def active(self, y: np.ndarray) -> np.ndarray:
        return np.argmax(y @ self.weights.T + self.offsets, axis=-1)

    def __call__(self, y: np.ndarray) -> np.ndarray:
        return np.max(y @ self.weights.T + self.offsets, axis=-1)


def statistic_table(G: GroupTable, kind: str, params: dict) -> tuple[np.ndarray, np.ndarray, dict]:
    """Values ``g``, certificate weights ``alpha`` (``|G| x n``) and extras for a statistic.

    Kinds: ``l_cycle_count`` (param ``l``), ``lipschitz_convex`` (``x``,
    ``weights``, ``offsets``) and ``sup_linear_family`` (``coefficients`` of
    shape ``(F, n, n)``, nonnegative).
    """
    n = G.n
    imgs = G.images  # 0-based
    if kind == "l_cycle_count":
        l = int(params.get("l", 0))
        g = np.array([l_cycle_statistic(s, l) for s in G.elements], dtype=np.float64)
        alpha = np.array([l_cycle_alpha(s, l) for s in G.elements])
        return g, alpha, {"M": float(l)}
    if kind == "lipschitz_convex":
        x = np.asarray(params["x"], dtype=np.float64)
        if x.shape != (n,) or np.any(x < 0) or np.any(x > 1):
            raise SamplingError("x must be a vector of [0, 1]^n")
        phi = ConvexLipschitz(params["weights"], params["offsets"])
        xs = x[imgs]  # x_sigma(k) = x[sigma(k)]
        g = phi(xs)
        alpha = np.abs(phi.weights[phi.active(xs)])
        return g, alpha, {}
    if kind == "sup_linear_family":
        A = np.asarray(params["coefficients"], dtype=np.float64)
        if A.ndim == 2:
            A = A[None]
        if A.shape[1:] != (n, n) or np.any(A < 0):
            raise SamplingError("coefficients must be nonnegative arrays of shape (F, n, n)")
        rows = np.arange(n)
        vals = A[:, rows[None, :], imgs]          # (F, N, n): a^t_{k, sigma(k)}
        sums = vals.sum(axis=2)
        best = np.argmax(sums, axis=0)
        g = sums[best, np.arange(len(G))]
        alpha = vals[best, np.arange(len(G))]
        h = np.max(np.sum(vals ** 2, axis=2), axis=0)
        return g, alpha, {"M": float(A.max()), "h": h}
    raise SamplingError(f"unknown statistic kind {kind!r}")


def random_parameters(kind: str, n: int, rng: np.random.Generator, pieces: int = 4, family: int = 3) -> dict:
    """Seeded parameters for the ``lipschitz_convex`` and ``sup_linear_family`` statistics."""
    if kind == "lipschitz_convex":
        W = rng.normal(size=(pieces, n))
        W /= np.maximum(np.linalg.norm(W, axis=1, keepdims=True), 1.0) * rng.uniform(1.0, 2.0, size=(pieces, 1))
        return {"x": rng.uniform(size=n), "weights": W, "offsets": rng.normal(size=pieces) * 0.1}
    if kind == "sup_linear_family":
        return {"coefficients": rng.uniform(size=(family, n, n))}
    if kind == "l_cycle_count":
        return {"l": 2}
    raise SamplingError(f"unknown statistic kind {kind!r}")


def check_configuration(G: GroupTable, g: np.ndarray, alpha: np.ndarray, tol: float = 1e-12) -> float:
    """Worst slack of ``g(t) - g(s) <= sum_k alpha_k(t) 1[t(k) != s(k)]`` over all pairs."""
    imgs = G.images
    worst = np.inf
    for t in range(len(G)):
        diff = (imgs != imgs[t]).astype(np.float64)  # rows s
        slack = diff @ alpha[t] - (g[t] - g)
        worst = min(worst, float(slack.min()))
    return worst


# -- deviation bounds -----------------------------------------------------------

def median_bound(u: np.ndarray, c: float, sup_alpha_norm: float) -> np.ndarray:
    """``(1/2) exp(-w(s))`` with ``w(s) = s(s - 2 sqrt(log 2))`` and ``s = u/(sqrt 2 c sup|alpha|)``.

    The formula comes from optimising the convex-hull bound over ``alpha`` in
    ``(0, 1)``; that optimum is interior only for ``s >= sqrt(log 2)``.  Below
    it the bound is 1.
    """
    u = np.asarray(u, dtype=np.float64)
    if sup_alpha_norm == 0:
        return np.where(u > 0, 0.0, 1.0)
    s = u / (math.sqrt(2) * c * sup_alpha_norm)
    r = math.sqrt(math.log(2))
    return np.where(s >= r, 0.5 * np.exp(-s * (s - 2 * r)), 1.0)


def _gauss(u, denom):
    u = np.asarray(u, dtype=np.float64)
    if denom <= 0:
        return np.where(u > 0, 0.0, 1.0)
    return np.exp(-u * u / denom)


@dataclass
class DeviationExperiment:
    statistic_kind: str
    parameters: dict
    sample_count: int = 0
    seed: int | None = None
    u_grid: np.ndarray | None = None
    results: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sample_count < 0:
            raise SamplingError("sample_count must be nonnegative")


def _median(values: np.ndarray, weights: np.ndarray) -> float:
    order = np.argsort(values, kind="stable")
    cdf = np.cumsum(weights[order])
    return float(values[order][np.searchsorted(cdf, 0.5 - 1e-12)])


def lipschitz_profile(g: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Smallest ``beta`` with ``g(tau) - g(sigma) <= beta(tau) d(tau, sigma)`` for all pairs."""
    diff = g[:, None] - g[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(D > 0, np.maximum(diff, 0.0) / np.where(D > 0, D, 1.0), 0.0)
    return ratio.max(axis=1)


def metric_bounds(g: np.ndarray, w: np.ndarray, u: np.ndarray, D: np.ndarray, k_n: int,
                  c_squared: float) -> dict:
    """Mean-deviation bounds for a ``beta``-Lipschitz statistic under the metric ``D``."""
    beta = lipschitz_profile(g, D)
    sup2 = float(np.max(beta ** 2))
    mean4 = 4.0 * float(w @ beta ** 2)
    scale = k_n * c_squared
    upper = _gauss(u, scale * sup2 / 2.0)
    lower = _gauss(u, scale * min(sup2, mean4) / 2.0)
    return {"beta_sup2": sup2, "beta_4mean2": mean4, "lower_branch": "sup" if sup2 <= mean4 else "4mean",
            "upper": upper, "lower": lower}


def run_deviation_experiment(exp: DeviationExperiment, mu: Measure, c_squared: float,
                             nu_hat: ProductMeasure | None = None, threads: int = 1,
                             metric_constants: dict | None = None) -> dict:
    """Exact (or sampled) tails of the statistic against the deviation bounds.

    ``c_squared`` is ``c(l)**2`` of the coordinate-wise regime.  Tails are
    exact by enumeration when ``|G| <= 5040``; otherwise ``exp.sample_count``
    draws from ``nu_hat`` are used and standard errors are reported.

    ``metric_constants`` maps a metric name to ``(D, K_n, c_squared)`` and adds
    the Lipschitz-profile bounds for that metric (exact mode only).
    """
    G = mu.carrier
    if not isinstance(G, GroupTable):
        raise SamplingError("deviation experiments need a permutation-group carrier")
    g, alpha, extra = statistic_table(G, exp.statistic_kind, exp.parameters)
    norm2 = np.sum(alpha ** 2, axis=1)
    exact = len(G) <= EXACT_CAP
    if exact:
        w = mu.weights
        mode = "exact"
    else:
        if nu_hat is None or exp.seed is None or exp.sample_count < 1:
            raise SamplingError("sampling beyond the enumeration cap needs nu_hat, a seed and sample_count")
        draws = sample_ordinals(nu_hat, exp.seed, exp.sample_count, threads)
        w = np.bincount(draws, minlength=len(G)) / exp.sample_count
        mode = "monte_carlo"
    mean = float(w @ g)
    med = _median(g, w)
    c = math.sqrt(c_squared)
    sup_norm2 = float(norm2.max())
    mean_norm2 = float(w @ norm2)
    u = np.asarray(exp.u_grid if exp.u_grid is not None else np.linspace(0, max(g.max() - g.min(), 1.0), 50),
                   dtype=np.float64)
    eps = 1e-12
    upper = np.array([w[g >= mean + x - eps].sum() for x in u])
    lower = np.array([w[g <= mean - x + eps].sum() for x in u])
    med_upper = np.array([w[g >= med + x - eps].sum() for x in u])
    med_lower = np.array([w[g <= med - x + eps].sum() for x in u])

    bound_upper_sup = _gauss(u, 2 * c_squared * sup_norm2)
    bounds_upper = {"sup": bound_upper_sup}
    if "M" in extra:
        M = extra["M"]
        bounds_upper["linear_M"] = _gauss(u, 1.0) if M == 0 else np.exp(-u * u / (2 * c_squared * M * (mean + u)))
    if "h" in extra:
        mh = float(w @ extra["h"])
        bounds_upper["bernstein"] = np.minimum(1.0, 2 * np.exp(-u * u / (2 * c_squared * (mh + extra["M"] * u))))
    lower_scale = float(w @ extra["h"]) if "h" in extra else mean_norm2
    bounds_lower = {"configuration": _gauss(u, 2 * c_squared * lower_scale)}
    profiles = {}
    if metric_constants and exact:
        for name, (D, k_n, c2a) in sorted(metric_constants.items()):
            mb = metric_bounds(g, w, u, np.asarray(D, dtype=np.float64), k_n, c2a)
            bounds_upper[f"lipschitz_{name}"] = mb.pop("upper")
            bounds_lower[f"lipschitz_{name}"] = mb.pop("lower")
            profiles[name] = dict(mb, K_n=k_n, c_squared=c2a)
    bound_upper = np.minimum.reduce(list(bounds_upper.values()))
    bound_lower = np.minimum.reduce(list(bounds_lower.values()))
    bound_med = median_bound(u, c, math.sqrt(sup_norm2))
    report = {
        "statistic": exp.statistic_kind, "parameters": _jsonable(exp.parameters), "mode": mode,
        "seed": exp.seed, "sample_count": exp.sample_count if not exact else len(G),
        "c_squared": c_squared, "mean": mean, "median": med,
        "sup_alpha_norm2": sup_norm2, "mean_alpha_norm2": mean_norm2,
        "u": u.tolist(), "empirical_upper_tail": upper.tolist(), "bound_upper": bound_upper.tolist(),
        "bound_upper_branches": {k: v.tolist() for k, v in bounds_upper.items()},
        "empirical_lower_tail": lower.tolist(), "bound_lower": bound_lower.tolist(),
        "bound_lower_branches": {k: v.tolist() for k, v in bounds_lower.items()},
        "lipschitz_profiles": profiles,
        "median_upper_tail": med_upper.tolist(), "median_lower_tail": med_lower.tolist(),
        "bound_median": bound_med.tolist(),
    }
    if mode == "monte_carlo":
        n = exp.sample_count
        report["stderr_upper"] = np.sqrt(upper * (1 - upper) / n).tolist()
        report["stderr_lower"] = np.sqrt(lower * (1 - lower) / n).tolist()
    slack = 0.0 if exact else 4.0 / math.sqrt(exp.sample_count)
    checks = {
        "upper": bool(np.all(upper <= bound_upper + 1e-12 + slack)),
        "lower": bool(np.all(lower <= bound_lower + 1e-12 + slack)),
        "median_upper": bool(np.all(med_upper <= bound_med + 1e-12 + slack)),
        "median_lower": bool(np.all(med_lower <= bound_med + 1e-12 + slack)),
    }
    checks.update(_exposure_check(g, norm2, w, mean, c_squared, slack))
    if exp.statistic_kind == "lipschitz_convex":
        two = np.array([w[np.abs(g - mean) >= x - eps].sum() for x in u])
        two_bound = np.minimum(1.0, 2 * np.exp(-u * u / (2 * c_squared)))
        report["two_sided_tail"] = two.tolist()
        report["bound_two_sided"] = two_bound.tolist()
        checks["two_sided"] = bool(np.all(two <= two_bound + 1e-12 + slack))
    report["checks"] = checks
    report["pass"] = all(checks.values())
    exp.results = report
    return report


def _exposure_check(g, norm2, w, mean, c_squared, slack) -> dict:
    # mu(g >= mean + v + lam c^2 |alpha|^2 / 2) <= exp(-lam v) on a (v, lam) grid
    ok = True
    for v in np.linspace(0, 3, 13):
        for lam in np.linspace(0, 3, 13):
            tail = w[g >= mean + v + lam * c_squared * norm2 / 2 - 1e-12].sum()
            ok &= tail <= math.exp(-lam * v) + 1e-12 + slack
    return {"exponential_random_threshold": bool(ok)}


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def report_csv(report: dict) -> str:
    """CSV with columns u, empirical_upper_tail, bound_upper, empirical_lower_tail, bound_lower, bound_median."""
    cols = ["u", "empirical_upper_tail", "bound_upper", "empirical_lower_tail", "bound_lower", "bound_median"]
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(cols)
    for row in zip(*(report[c] for c in cols)):
        wr.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def exact_law(nu_hat: ProductMeasure) -> Measure:
    return pushforward_product(nu_hat.base, nu_hat)
