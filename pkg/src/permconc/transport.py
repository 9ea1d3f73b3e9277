"""Optimal and weak optimal transport costs on finite carriers.

``w1`` is solved exactly by the network simplex kernel.  The barycentric
costs ``t2_tilde``, ``t2_paren`` and ``t2_hat`` are squared norms of a
linear image of the coupling.  They are minimised over the transportation
polytope by a fully corrective Frank-Wolfe method (Wolfe's min-norm-point
iteration) or by plain pairwise Frank-Wolfe; both use the same exact
network simplex as linear oracle.  The Frank-Wolfe gap
``<grad F(pi), pi - s>`` bounds ``F(pi) - min F`` and is reported as the
certificate.
"""
from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .minnorm import min_norm_point
from .measures import Measure, MeasureError
from .permcore import GroupTable, hamming_table, transposition_table
from .slices import MultinomialCarrier

CARRIER_CAP = 2000
GAP_TARGET = 1e-7
MAX_ITER = 50_000
MARGINAL_TOL = 1e-10

METRICS = ("hamming", "transposition", "half_hamming")
_ALIASES = {"d_h": "hamming", "dh": "hamming", "hamming": "hamming", "h": "hamming",
            "d_t": "transposition", "dt": "transposition", "transposition": "transposition", "t": "transposition",
            "half_hamming": "half_hamming", "slice": "half_hamming"}


class TransportError(RuntimeError):
    pass


def canonical_metric(metric: str) -> str:
    try:
        return _ALIASES[metric.lower()]
    except KeyError:
        raise TransportError(f"unknown metric {metric!r}; expected one of {METRICS}") from None


_TABLES: dict = {}


def _cache_path(key: str) -> str | None:
    root = os.environ.get("PERMCONC_CACHE_DIR")
    if not root:
        return None
    os.makedirs(root, exist_ok=True)
    return os.path.join(root, hashlib.sha256(key.encode()).hexdigest()[:24] + ".npy")


def distance_table(carrier, metric: str = "hamming") -> np.ndarray:
    """All-pairs distance matrix (float64), memoised per carrier fingerprint."""
    metric = canonical_metric(metric)
    key = f"{carrier.fingerprint}:{metric}:{getattr(carrier, 'ell', None)}"
    if key in _TABLES:
        return _TABLES[key]
    path = _cache_path(key)
    if path and os.path.exists(path):
        table = np.load(path)
    else:
        if isinstance(carrier, GroupTable):
            if metric == "hamming":
                table = hamming_table(carrier).astype(np.float64)
            elif metric == "transposition":
                table = transposition_table(carrier).astype(np.float64)
            else:
                raise TransportError("half_hamming is defined on slices, not on groups")
        elif isinstance(carrier, MultinomialCarrier):
            if metric == "transposition":
                raise TransportError("the transposition distance needs a group carrier")
            table = carrier.hamming_half() if metric == "half_hamming" else carrier.disagreement().sum(axis=2).astype(np.float64)
        else:
            raise TransportError(f"no distance available on {type(carrier).__name__}")
        if path:
            np.save(path, table)
    table.setflags(write=False)
    _TABLES[key] = table
    return table


def disagreement_tensor(carrier) -> np.ndarray:
    """``(N, N, n)`` float tensor ``1[x(i) != y(i)]`` over coordinates ``i``."""
    if isinstance(carrier, GroupTable):
        imgs = carrier.images
        return (imgs[:, None, :] != imgs[None, :, :]).astype(np.float64)
    if isinstance(carrier, MultinomialCarrier):
        return carrier.disagreement().astype(np.float64)
    raise TransportError(f"no coordinates on {type(carrier).__name__}")


@dataclass(frozen=True, eq=False)
class Coupling:
    matrix: np.ndarray
    row_marginal: Measure
    col_marginal: Measure

    def __post_init__(self):
        P = self.matrix
        if np.max(np.abs(P.sum(axis=1) - self.row_marginal.weights)) > MARGINAL_TOL or \
                np.max(np.abs(P.sum(axis=0) - self.col_marginal.weights)) > MARGINAL_TOL:
            raise TransportError("coupling marginals are off")

    def kernel(self, k: int) -> np.ndarray:
        """Disintegration ``p_k`` (row ``k`` over its mass); undefined on null rows."""
        mass = self.row_marginal.weights[k]
        if mass <= 0:
            raise TransportError(f"row {k} carries no mass; its kernel is unconstrained")
        return self.matrix[k] / mass


@dataclass
class CostResult:
    value: float
    coupling: Coupling
    gap: float
    iterations: int
    metric: str
    kind: str = "w1"
    converged: bool = True
    history: list = field(default_factory=list, repr=False)

    @property
    def lower_bound(self) -> float:
        return self.value - self.gap

    def to_json(self, emit_coupling: bool = False) -> dict:
        out = {"kind": self.kind, "value": self.value, "gap": self.gap,
               "iterations": self.iterations, "metric": self.metric, "converged": self.converged}
        if emit_coupling:
            out["coupling"] = self.coupling.matrix.tolist()
        return out


def _check_pair(nu1: Measure, nu2: Measure):
    if nu1.carrier is not nu2.carrier and nu1.carrier.fingerprint != nu2.carrier.fingerprint:
        raise MeasureError("measures live on different carriers")
    if len(nu1) > CARRIER_CAP:
        raise TransportError(f"carrier of size {len(nu1)} exceeds the cap {CARRIER_CAP}")


def _balanced(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    b = b * (a.sum() / b.sum())
    return b


def solve_transport(a: np.ndarray, b: np.ndarray, cost: np.ndarray):
    """Exact min-cost transport restricted to the supports of ``a`` and ``b``.

    Returns ``(plan, value, certified_gap)``; the gap compares the primal value
    with a dual-feasible lower bound built from the simplex potentials.
    """
    rows = np.flatnonzero(a > 0)
    cols = np.flatnonzero(b > 0)
    sub = cost[np.ix_(rows, cols)]
    ar, bc = a[rows], _balanced(a[rows], b[cols])
    flow, u, v, _, status = kernels.transport_simplex(ar, bc, sub)
    if status != 0:
        raise TransportError("network simplex hit its pivot limit")
    plan = np.zeros_like(cost, dtype=np.float64)
    plan[np.ix_(rows, cols)] = flow
    value = float(np.sum(flow * sub))
    # repair potentials into a feasible dual point
    v = np.min(sub - u[:, None], axis=0)
    dual = float(ar @ u + bc @ v)
    return plan, value, max(value - dual, 0.0)


def w1(nu1: Measure, nu2: Measure, metric: str = "hamming") -> CostResult:
    """Wasserstein-1 distance for the chosen metric, exactly."""
    _check_pair(nu1, nu2)
    metric = canonical_metric(metric)
    D = distance_table(nu1.carrier, metric)
    plan, value, gap = solve_transport(nu1.weights, nu2.weights, D)
    return CostResult(value=value, coupling=Coupling(plan, nu1, nu2), gap=gap,
                      iterations=1, metric=metric, kind="w1")


class BarycentricCost:
    """``F(pi) = sum_s (1/nu1(s)) sum_r (sum_t pi[s,t] B[s,t,r])**2`` on the transportation polytope."""

    def __init__(self, features: np.ndarray, nu1: np.ndarray):
        self.B = np.asarray(features, dtype=np.float64)
        if self.B.ndim == 2:
            self.B = self.B[:, :, None]
        self.w = np.where(nu1 > 0, 1.0 / np.where(nu1 > 0, nu1, 1.0), 0.0)

    def moments(self, P: np.ndarray) -> np.ndarray:
        return np.einsum("st,str->sr", P, self.B)

    def value(self, P: np.ndarray) -> float:
        M = self.moments(P)
        return float(np.sum(self.w[:, None] * M * M))

    def grad(self, P: np.ndarray) -> np.ndarray:
        M = self.moments(P)
        return 2.0 * np.einsum("sr,str->st", self.w[:, None] * M, self.B)


def frank_wolfe_transport(cost: BarycentricCost, a: np.ndarray, b: np.ndarray, *,
                          gap_target: float = GAP_TARGET, max_iter: int = MAX_ITER,
                          stop_value: float | None = None, record: bool = False,
                          variant: str = "wolfe"):
    """Minimise ``cost`` over couplings of ``a`` and ``b``.

    ``variant="wolfe"`` runs the fully corrective min-norm-point iteration,
    ``variant="pairwise"`` pairwise Frank-Wolfe with exact line search.

    Returns ``(plan, value, gap, iterations, converged, history)``.  With
    ``stop_value`` the run also ends as soon as the objective drops to that
    level; the returned gap is still a valid certificate.
    """
    if variant not in ("wolfe", "pairwise"):
        raise ValueError(f"unknown Frank-Wolfe variant {variant!r}")

    def lmo(G):
        plan, _, _ = solve_transport(a, b, G)
        return plan

    history = []
    P = np.outer(a, _balanced(a, b)) if np.count_nonzero(a) == 1 or np.count_nonzero(b) == 1 else None
    if P is not None:
        # the polytope is a single point
        return P, cost.value(P), 0.0, 0, True, history
    if variant == "wolfe":
        return _wolfe_transport(cost, lmo, a, b, gap_target, max_iter, stop_value, record)
    s0 = lmo(cost.grad(np.outer(a, b)))
    vertices = [s0]
    weights = [1.0]
    P = s0.copy()
    gap = np.inf
    it = 0
    converged = False
    M = cost.moments(P)
    while it < max_iter:
        G = 2.0 * np.einsum("sr,str->st", cost.w[:, None] * M, cost.B)
        s = lmo(G)
        gap = min(gap, float(np.sum(G * (P - s))))
        value = float(np.sum(cost.w[:, None] * M * M))
        if record:
            history.append((value, max(gap, 0.0)))
        if gap <= gap_target:
            converged = True
            break
        if stop_value is not None and value <= stop_value:
            break
        scores = [float(np.sum(G * v)) for v in vertices]
        away = int(np.argmax(scores))
        D = s - vertices[away]
        gmax = weights[away]
        MD = cost.moments(D)
        slope = float(np.sum(cost.w[:, None] * M * MD)) * 2.0
        curv = float(np.sum(cost.w[:, None] * MD * MD))
        if slope >= 0:
            # pairwise direction not descending; fall back to the plain FW step
            D = s - P
            gmax = 1.0
            MD = cost.moments(D)
            slope = float(np.sum(cost.w[:, None] * M * MD)) * 2.0
            curv = float(np.sum(cost.w[:, None] * MD * MD))
            step = min(gmax, -slope / (2 * curv)) if curv > 0 else gmax
            weights = [w * (1 - step) for w in weights]
            _add_vertex(vertices, weights, s, step)
        else:
            step = min(gmax, -slope / (2 * curv)) if curv > 0 else gmax
            weights[away] -= step
            _add_vertex(vertices, weights, s, step)
            if weights[away] <= 1e-15:
                del vertices[away], weights[away]
        P = P + step * D
        M = M + step * MD
        it += 1
    value = cost.value(P)
    return P, value, max(gap, 0.0), it, converged, history


def _wolfe_transport(cost, lmo, a, b, gap_target, max_iter, stop_value, record):
    root = np.sqrt(cost.w)[:, None]
    history = []
    best = [np.inf]

    def embed(P):
        return (root * cost.moments(P)).ravel()

    def oracle(x):
        X = root * x.reshape(len(a), -1)
        S = lmo(np.einsum("sr,str->st", X, cost.B))
        z = embed(S)
        if record:
            # objective values decrease, so the running minimum gap certifies the current iterate
            best[0] = min(best[0], 2.0 * float(x @ x - x @ z))
            history.append((float(x @ x), max(best[0], 0.0)))
        return z, S

    s0 = lmo(cost.grad(np.outer(a, _balanced(a, b))))
    res = min_norm_point(oracle, (embed(s0), s0), gap_target=gap_target / 2,
                         max_major=max_iter, stop_value=stop_value)
    P = sum(w * S for w, S in zip(res.weights, res.payloads))
    # the certificate is recomputed from the assembled plan
    G = cost.grad(P)
    gap = max(min(float(np.sum(G * (P - lmo(G)))), best[0]), 0.0)
    return P, cost.value(P), gap, res.major, gap <= gap_target, history


def _add_vertex(vertices, weights, s, step):
    for k, v in enumerate(vertices):
        if np.array_equal(v, s):
            weights[k] += step
            return
    vertices.append(s)
    weights.append(step)


def _weak_cost(nu1: Measure, nu2: Measure, features: np.ndarray, kind: str, metric: str,
               **fw) -> CostResult:
    cost = BarycentricCost(features, nu1.weights)
    P, value, gap, it, ok, hist = frank_wolfe_transport(cost, nu1.weights, nu2.weights, **fw)
    return CostResult(value=value, coupling=Coupling(P, nu1, nu2), gap=gap, iterations=it,
                      metric=metric, kind=kind, converged=ok, history=hist)


def t2_tilde(nu1: Measure, nu2: Measure, metric: str = "hamming", **fw) -> CostResult:
    """``T~2(nu2 | nu1) = inf_pi sum_s nu1(s) (int d(s, t) dp_s(t))**2``; ``nu1`` is the source."""
    _check_pair(nu1, nu2)
    metric = canonical_metric(metric)
    D = distance_table(nu1.carrier, metric)
    return _weak_cost(nu1, nu2, D, "t2_tilde", metric, **fw)


def t2_paren(nu1: Measure, nu2: Measure, **fw) -> CostResult:
    """``inf_pi sum_s nu1(s) sum_i (p_s{t : t(i) != s(i)})**2`` on a permutation group."""
    _check_pair(nu1, nu2)
    if not isinstance(nu1.carrier, GroupTable):
        raise TransportError("t2_paren needs a permutation-group carrier")
    return _weak_cost(nu1, nu2, disagreement_tensor(nu1.carrier), "t2_paren", "coordinates", **fw)


def t2_hat(nu1: Measure, nu2: Measure, **fw) -> CostResult:
    """Coordinate-wise barycentric cost on a slice (or multinomial carrier)."""
    _check_pair(nu1, nu2)
    if not isinstance(nu1.carrier, MultinomialCarrier):
        raise TransportError("t2_hat needs a slice or multinomial carrier")
    return _weak_cost(nu1, nu2, disagreement_tensor(nu1.carrier), "t2_hat", "coordinates", **fw)


def pushforward(mu: Measure, mapping: np.ndarray, target) -> Measure:
    """Image measure of ``mu`` under an ordinal map into ``target``."""
    w = np.zeros(len(target))
    np.add.at(w, mapping, mu.weights)
    return Measure(target, w, label="image")
