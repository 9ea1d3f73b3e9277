"""Finite probability measures, the product class M_T and Ewens distributions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .permcore import GroupTable, LocalBase, cycle_count

SUM_TOL = 1e-12


class MeasureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Measure:
    """A probability vector indexed by the canonical order of ``carrier``.

    ``base_fingerprint`` is set when the measure was built as a pushforward
    through a local base, which is what membership in ``M_T`` refers to.
    """

    carrier: object
    weights: np.ndarray
    base_fingerprint: str | None = None
    label: str | None = field(default=None, compare=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        if w.shape[0] != len(self.carrier):
            raise MeasureError(f"{w.shape[0]} weights for a carrier of size {len(self.carrier)}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise MeasureError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > SUM_TOL * max(1, len(w)):
            raise MeasureError(f"weights sum to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.weights)

    @classmethod
    def normalized(cls, carrier, weights, **kw) -> "Measure":
        w = np.asarray(weights, dtype=np.float64)
        return cls(carrier, w / w.sum(), **kw)

    @classmethod
    def dirac(cls, carrier, k: int) -> "Measure":
        w = np.zeros(len(carrier))
        w[k] = 1.0
        return cls(carrier, w, label=f"dirac[{k}]")

    def expect(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=np.float64)))

    def is_dirac(self) -> bool:
        return int(np.count_nonzero(self.weights)) == 1

    def to_json(self) -> dict:
        return {"carrier": getattr(self.carrier, "fingerprint", None),
                "base": self.base_fingerprint,
                "weights": [float(x) for x in self.weights]}


@dataclass(frozen=True, eq=False)
class ProductMeasure:
    """Factors ``j -> weights over O_j`` (orbit points in increasing order)."""

    base: LocalBase
    factors: dict

    def __post_init__(self):
        G = self.base.group
        for j in range(2, G.n + 1):
            if j not in self.factors:
                raise MeasureError(f"missing factor for level {j}")
            w = np.asarray(self.factors[j], dtype=np.float64)
            if w.shape != (len(G.orbits[j]),):
                raise MeasureError(f"factor {j} has {w.shape} weights, orbit O_{j} has {len(G.orbits[j])} points")
            if np.any(w < 0) or abs(w.sum() - 1.0) > SUM_TOL * len(w):
                raise MeasureError(f"factor {j} is not a probability vector")

    def factor(self, j: int) -> dict[int, float]:
        return dict(zip(self.base.group.orbits[j], map(float, self.factors[j])))


def _carrier_size(carrier) -> int:
    n = len(carrier)
    if n == 0:
        raise MeasureError("empty carrier")
    return n


def uniform(carrier) -> Measure:
    N = _carrier_size(carrier)
    return Measure(carrier, np.full(N, 1.0 / N), label="uniform")


def uniform_factors(T: LocalBase) -> ProductMeasure:
    G = T.group
    return ProductMeasure(T, {j: np.full(len(G.orbits[j]), 1.0 / len(G.orbits[j]))
                              for j in range(2, G.n + 1)})


def pushforward_product(T: LocalBase, nu_hat: ProductMeasure) -> Measure:
    """Law of ``U_T(i_2, ..., i_n)`` when the letters are independent with laws ``nu_hat``."""
    if nu_hat.base is not T:
        if nu_hat.base.fingerprint != T.fingerprint:
            raise MeasureError("product measure was built on a different base")
    G = T.group
    words = T.word_table
    w = np.ones(len(G))
    for col, j in enumerate(range(2, G.n + 1)):
        orbit = G.orbits[j]
        pos = {i: k for k, i in enumerate(orbit)}
        fac = np.asarray(nu_hat.factors[j], dtype=np.float64)
        w *= fac[[pos[i] for i in words[:, col]]]
    return Measure(G, w, base_fingerprint=T.fingerprint, label="pushforward")


def word_marginals(T: LocalBase, mu: Measure) -> ProductMeasure:
    """Marginal law of each letter of the word of a ``mu``-distributed element."""
    G = T.group
    words = T.word_table
    factors = {}
    for col, j in enumerate(range(2, G.n + 1)):
        orbit = G.orbits[j]
        factors[j] = np.array([mu.weights[words[:, col] == i].sum() for i in orbit])
        factors[j] = factors[j] / factors[j].sum()
    return ProductMeasure(T, factors)


def in_product_class(T: LocalBase, mu: Measure, tol: float = 1e-12) -> bool:
    """Whether ``mu`` factorises as a product over the letters of ``T`` (membership in M_T)."""
    if mu.carrier is not T.group:
        return False
    push = pushforward_product(T, word_marginals(T, mu))
    return bool(np.max(np.abs(push.weights - mu.weights)) <= tol)


def attach_base(T: LocalBase, mu: Measure, tol: float = 1e-12) -> Measure:
    """Return ``mu`` tagged with the base fingerprint, after checking it lies in M_T."""
    if not in_product_class(T, mu, tol):
        raise MeasureError("measure is not a pushforward of a product measure through this base")
    return Measure(mu.carrier, mu.weights, base_fingerprint=T.fingerprint, label=mu.label)


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not theta > 0 or not math.isfinite(theta):
        raise MeasureError(f"theta must be positive, got {theta}")
    return theta


def log_rising_factorial(theta: float, n: int) -> float:
    """``log(theta (theta+1) ... (theta+n-1))``."""
    return math.lgamma(theta + n) - math.lgamma(theta)


def ewens_closed(G: GroupTable, theta: float) -> Measure:
    """Ewens law ``theta^{#cycles} / theta^{(n)}`` on the full symmetric group."""
    theta = _check_theta(theta)
    if len(G) != math.factorial(G.n):
        raise MeasureError("the Ewens closed form needs the full symmetric group as carrier")
    cycles = np.array([cycle_count(s) for s in G.elements], dtype=np.float64)
    logw = cycles * math.log(theta) - log_rising_factorial(theta, G.n)
    return Measure(G, np.exp(logw), label=f"ewens[{theta}]")


def ewens_product(T: LocalBase, theta: float) -> ProductMeasure:
    """Chinese-restaurant factors: ``j`` gets ``theta/(theta+j-1)``, others ``1/(theta+j-1)``."""
    theta = _check_theta(theta)
    G = T.group
    factors = {}
    for j in range(2, G.n + 1):
        if G.orbits[j] != tuple(range(1, j + 1)):
            raise MeasureError("the restaurant construction needs O_j = [j] at every level")
        w = np.full(j, 1.0 / (theta + j - 1))
        w[j - 1] = theta / (theta + j - 1)
        factors[j] = w
    return ProductMeasure(T, factors)


def ewens(T: LocalBase, theta: float) -> Measure:
    m = pushforward_product(T, ewens_product(T, theta))
    return Measure(m.carrier, m.weights, base_fingerprint=m.base_fingerprint, label=f"ewens[{theta}]")


def _same_carrier(a: Measure, b: Measure):
    if a.carrier is not b.carrier and getattr(a.carrier, "fingerprint", 0) != getattr(b.carrier, "fingerprint", 1):
        raise MeasureError("measures live on different carriers")


def relative_entropy(nu: Measure, mu: Measure) -> float:
    """``H(nu | mu)``; ``math.inf`` when ``nu`` charges a ``mu``-null point."""
    _same_carrier(nu, mu)
    p, q = nu.weights, mu.weights
    on = p > 0
    if np.any(q[on] == 0):
        return math.inf
    val = float(np.sum(p[on] * (np.log(p[on]) - np.log(q[on]))))
    return max(val, 0.0)


def total_variation(mu: Measure, nu: Measure) -> float:
    """``sum |mu - nu|``, i.e. twice the largest event discrepancy."""
    _same_carrier(mu, nu)
    return float(np.abs(mu.weights - nu.weights).sum())


def check_invariance(mu: Measure, G: GroupTable, ambient: GroupTable, tol: float = 1e-12) -> bool:
    """Inverse- and conjugation-invariance of ``mu`` under the ambient symmetric group."""
    w = mu.weights
    if np.max(np.abs(w - w[G.inverse_ordinals])) > tol:
        return False
    for t in ambient.elements:
        ti = t.inverse()
        for k, s in enumerate(G.elements):
            c = ti * s * t
            if c not in G.index or abs(w[k] - w[G.index[c]]) > tol:
                return False
    return True


def dirichlet(carrier, rng: np.random.Generator, concentration: float = 1.0) -> Measure:
    return Measure.normalized(carrier, rng.dirichlet(np.full(len(carrier), concentration)), label="dirichlet")


def measure_from_json(carrier, data) -> Measure:
    if isinstance(data, dict):
        data = data.get("weights")
    if not isinstance(data, list):
        raise MeasureError("measure JSON must be a weight array or {'weights': [...]}")
    return Measure(carrier, np.asarray(data, dtype=np.float64))
