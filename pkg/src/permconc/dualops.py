"""Infimum-convolution operators and Talagrand's convex-hull functional.

Every operator has the form ``inf_p { int phi dp + penalty(p) }`` over
probability measures ``p`` on a finite carrier.

* ``q_w1`` and ``r_c`` have linear penalties and are closed forms.
* ``q_tilde``, ``q_tilde_alpha`` and ``r_tilde`` penalise a convex function of
  the barycentre ``int d(x, y) dp(y)``.  Optimal measures charge at most two
  points, so the infimum is the minimum of the penalty added to the lower
  convex envelope of ``{(d(x, y), phi(y))}``.  This is evaluated exactly.
* ``q_paren``, ``q_j`` and ``q_hat`` penalise squared coordinate
  disagreement probabilities.  They are solved by pairwise Frank-Wolfe on
  the simplex and return a certified gap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .minnorm import frank_wolfe_hull, min_norm_hull
from .permcore import GroupTable
from .slices import MultinomialCarrier
from .transport import distance_table

GAP_TARGET = 1e-8
MAX_ITER = 100_000
ALPHA_EDGE = 1e-6

KINDS = ("Q", "Q_tilde_t", "Q_tilde_alpha", "Q_paren", "Q_j", "Q_hat", "R_c", "R_tilde", "R_tilde_alpha")


class DualOpError(ValueError):
    pass


# -- constants -------------------------------------------------------------

def c_ell(ell: int, n: int, metric: str = "hamming", regime: str = "general") -> float:
    """Constant ``c(l)`` of the W1 and barycentric inequalities.

    ``regime="general"`` covers every measure of the product class,
    ``regime="uniform"`` the uniform law on an ``l``-local group.
    """
    if metric not in ("hamming", "transposition"):
        raise DualOpError(f"no constant for metric {metric!r}")
    if regime == "general":
        return float(min(2 * ell - 1, n)) if metric == "hamming" else 2.0
    if regime == "uniform":
        return float(ell) if metric == "hamming" else 1.0
    raise DualOpError(f"unknown regime {regime!r}")


def c_ell_squared_paren(ell: int, regime: str = "uniform") -> float:
    """``c(l)**2`` for the coordinate-wise inequality.

    ``"uniform"``: uniform law on an ``l``-local group.  ``"normal"``: normal
    subgroup of ``S_n`` with an inversion- and conjugation-invariant measure.
    """
    if regime == "uniform":
        return 2.0 * (ell - 1) ** 2 + 2.0
    if regime == "normal":
        return 8.0 * (ell - 1) ** 2 + 2.0
    raise DualOpError(f"unknown regime {regime!r}")


def slice_constant(k: int, n: int) -> int:
    """``C_{k,n-k} = min(k, n - k)``."""
    if not 0 <= k <= n:
        raise DualOpError(f"k={k} outside [0, {n}]")
    return min(k, n - k)


# -- c_alpha -----------------------------------------------------------------

def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not ALPHA_EDGE <= alpha <= 1 - ALPHA_EDGE:
        raise DualOpError(f"alpha={alpha} outside [{ALPHA_EDGE}, 1 - {ALPHA_EDGE}]")
    return alpha


def _xlogx(x):
    x = np.asarray(x, dtype=np.float64)
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, x * np.log(safe), 0.0)


def c_alpha(u, alpha: float):
    """Convex cost ``[a(1-u)log(1-u) - (1-au)log(1-au)] / (a(1-a))`` on ``[0, 1]``.

    ``+inf`` beyond ``u = 1``; the endpoint uses ``0 log 0 = 0``.
    """
    a = _check_alpha(alpha)
    u = np.asarray(u, dtype=np.float64)
    inside = (u >= 0) & (u <= 1)
    uu = np.clip(u, 0.0, 1.0)
    val = (a * _xlogx(1 - uu) - _xlogx(1 - a * uu)) / (a * (1 - a))
    out = np.where(inside, np.maximum(val, 0.0), np.inf)
    return float(out) if out.ndim == 0 else out


def c_alpha_inverse_slope(r: float, alpha: float) -> float:
    """Solve ``c_alpha'(u) = r`` for ``r >= 0``; the derivative diverges at ``u = 1``."""
    if r <= 0:
        return 0.0
    s = math.exp(min(r * (1 - alpha), 700.0))
    return (s - 1.0) / (s - alpha)


# -- convex envelope machinery -------------------------------------------------

def lower_envelope(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull of the points ``(x, y)``, left to right."""
    order = np.lexsort((y, x))
    hull: list[int] = []
    for k in order:
        if hull and x[hull[-1]] == x[k]:
            continue  # same abscissa, larger ordinate
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            cross = (x[j] - x[i]) * (y[k] - y[i]) - (y[j] - y[i]) * (x[k] - x[i])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(int(k))
    return np.array(hull, dtype=np.int64)


def envelope_minimum(dist: np.ndarray, phi: np.ndarray, penalty, argmin_slope, domain: float = np.inf):
    """``min_p { int phi dp + penalty(int dist dp) }`` for a convex penalty.

    ``argmin_slope(s)`` returns the unconstrained minimiser of ``s*m + penalty(m)``.
    Returns ``(value, m, (y1, y2, lam))`` with ``m`` the optimal barycentre.
    """
    d = np.asarray(dist, dtype=np.float64)
    f = np.asarray(phi, dtype=np.float64)
    hull = lower_envelope(d, f)
    best = (np.inf, np.nan, (int(hull[0]), int(hull[0]), 1.0))
    for k in hull:
        if d[k] <= domain:
            v = f[k] + penalty(d[k])
            if v < best[0]:
                best = (float(v), float(d[k]), (int(k), int(k), 1.0))
    for i, j in zip(hull[:-1], hull[1:]):
        lo, hi = d[i], min(d[j], domain)
        if lo >= hi:
            continue
        s = (f[j] - f[i]) / (d[j] - d[i])
        m = float(np.clip(argmin_slope(s), lo, hi))
        v = f[i] + s * (m - d[i]) + penalty(m)
        if v < best[0]:
            lam = (m - d[i]) / (d[j] - d[i])
            best = (float(v), m, (int(j), int(i), float(lam)))
    return best


def _quadratic(kappa: float):
    return (lambda m: kappa * m * m), (lambda s: -s / (2 * kappa))


def _calpha_penalty(scale: float, alpha: float, weight: float):
    # penalty(m) = weight * c_alpha(m / scale)
    def penalty(m):
        return weight * c_alpha(m / scale, alpha)

    def argmin_slope(s):
        # weight/scale * c_alpha'(m/scale) = -s
        return scale * c_alpha_inverse_slope(-s * scale / weight, alpha)

    return penalty, argmin_slope


# -- helpers -----------------------------------------------------------------

def _ordinal(carrier, sigma) -> int:
    if isinstance(sigma, (int, np.integer)):
        k = int(sigma)
        if not 0 <= k < len(carrier):
            raise DualOpError(f"ordinal {k} outside the carrier")
        return k
    return carrier.ordinal(sigma)


def _phi(phi, carrier) -> np.ndarray:
    f = np.asarray(phi, dtype=np.float64)
    if f.shape != (len(carrier),):
        raise DualOpError(f"function has shape {f.shape}, carrier has {len(carrier)} points")
    if not np.all(np.isfinite(f)):
        raise DualOpError("function values must be finite")
    return f


def _coordinates(carrier) -> np.ndarray:
    if isinstance(carrier, GroupTable):
        return carrier.images
    if isinstance(carrier, MultinomialCarrier):
        return carrier.coords
    raise DualOpError(f"no coordinates on {type(carrier).__name__}")


# -- linear penalties ------------------------------------------------------------

def r_c(f, c: float, x: int) -> float:
    """``inf_p { int f dp + c p(y != x) } = min(f(x), min_{y != x} f(y) + c)``."""
    if c < 0:
        raise DualOpError("c must be nonnegative")
    f = np.asarray(f, dtype=np.float64)
    others = np.delete(f, x)
    return float(min(f[x], others.min() + c)) if others.size else float(f[x])


def q_w1(phi, carrier, sigma, metric: str = "hamming") -> float:
    """``min_t phi(t) + d(sigma, t)``."""
    f = _phi(phi, carrier)
    D = distance_table(carrier, metric)
    return float(np.min(f + D[_ordinal(carrier, sigma)]))


def q_w1_all(phi, carrier, metric: str = "hamming") -> np.ndarray:
    f = _phi(phi, carrier)
    D = distance_table(carrier, metric)
    return np.min(f[None, :] + D, axis=1)


# -- barycentric penalties -------------------------------------------------------

def q_tilde_row(phi: np.ndarray, dist: np.ndarray, kappa: float, method: str = "scan") -> float:
    """``min_p { int phi dp + kappa (int dist dp)**2 }`` exactly."""
    if kappa <= 0:
        raise DualOpError("penalty weight must be positive")
    if method == "scan":
        return float(kernels.two_point_scan(dist, phi, kappa)[0])
    if method == "envelope":
        pen, arg = _quadratic(kappa)
        return envelope_minimum(dist, phi, pen, arg)[0]
    raise DualOpError(f"unknown method {method!r}")


def q_tilde(phi, carrier, sigma, *, t: float, c_ell: float, metric: str = "hamming",
            method: str = "scan") -> float:
    """``inf_p { int phi dp + (int d(sigma, y) dp(y))**2 / (2 c**2 t) }``."""
    if t <= 0 or c_ell <= 0:
        raise DualOpError("t and c_ell must be positive")
    f = _phi(phi, carrier)
    D = distance_table(carrier, metric)
    return q_tilde_row(f, D[_ordinal(carrier, sigma)], 1.0 / (2 * c_ell ** 2 * t), method)


def q_tilde_all(phi, carrier, *, t: float, c_ell: float, metric: str = "hamming",
                method: str = "scan") -> np.ndarray:
    if t <= 0 or c_ell <= 0:
        raise DualOpError("t and c_ell must be positive")
    f = _phi(phi, carrier)
    D = distance_table(carrier, metric)
    kappa = 1.0 / (2 * c_ell ** 2 * t)
    return np.array([q_tilde_row(f, D[s], kappa, method) for s in range(len(f))])


def q_tilde_alpha_row(phi: np.ndarray, dist: np.ndarray, *, t: float, c_ell: float, alpha: float) -> float:
    pen, arg = _calpha_penalty(c_ell * t, _check_alpha(alpha), t)
    return envelope_minimum(dist, phi, pen, arg, domain=c_ell * t)[0]


def q_tilde_alpha(phi, carrier, sigma, *, t: float, c_ell: float, alpha: float,
                  metric: str = "hamming") -> float:
    """``inf_p { int phi dp + t c_alpha(int d(sigma, y) dp(y) / (c t)) }``.

    Measures whose barycentre exceeds ``c t`` are excluded (infinite cost).
    """
    if t <= 0 or c_ell <= 0:
        raise DualOpError("t and c_ell must be positive")
    f = _phi(phi, carrier)
    D = distance_table(carrier, metric)
    return q_tilde_alpha_row(f, D[_ordinal(carrier, sigma)], t=t, c_ell=c_ell, alpha=alpha)


def q_tilde_alpha_all(phi, carrier, *, t: float, c_ell: float, alpha: float,
                      metric: str = "hamming") -> np.ndarray:
    f = _phi(phi, carrier)
    D = distance_table(carrier, metric)
    return np.array([q_tilde_alpha_row(f, D[s], t=t, c_ell=c_ell, alpha=alpha) for s in range(len(f))])


def r_tilde(f, x: int, alpha: float | None = None) -> float:
    """Complete-graph operator: penalty ``(p(y != x))**2 / 2``, or ``c_alpha(p(y != x))``."""
    f = np.asarray(f, dtype=np.float64)
    d = np.ones_like(f)
    d[x] = 0.0
    if alpha is None:
        return q_tilde_row(f, d, 0.5, "scan")
    pen, arg = _calpha_penalty(1.0, _check_alpha(alpha), 1.0)
    return envelope_minimum(d, f, pen, arg, domain=1.0)[0]


# -- coordinate penalties --------------------------------------------------------

@dataclass
class SimplexResult:
    value: float
    weights: np.ndarray
    gap: float
    iterations: int
    converged: bool


def simplex_qp(phi: np.ndarray, A: np.ndarray, *, gap_target: float = GAP_TARGET,
               max_iter: int = MAX_ITER, polish_every: int = 25) -> SimplexResult:
    """Minimise ``<phi, p> + ||A^T p||**2`` over the probability simplex.

    Pairwise Frank-Wolfe with exact line search; every ``polish_every``
    iterations the iterate jumps to the minimiser on the affine hull of its
    support whenever that point is feasible and better.  The returned gap is
    the Frank-Wolfe gap ``<grad, p - e_s>``, an upper bound on the error.
    """
    phi = np.asarray(phi, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    N = phi.shape[0]
    start = int(np.argmin(phi + np.sum(A * A, axis=1)))
    p = np.zeros(N)
    p[start] = 1.0
    m = A[start].copy()
    gap = np.inf
    it = 0
    converged = False

    def objective(q, mq):
        return float(phi @ q + mq @ mq)

    while it < max_iter:
        g = phi + 2.0 * (A @ m)
        s = int(np.argmin(g))
        gap = min(gap, float(g @ p - g[s])) if it else float(g @ p - g[s])
        if gap <= gap_target:
            converged = True
            break
        active = np.flatnonzero(p > 0)
        a = active[int(np.argmax(g[active]))]
        if a == s:
            break
        dm = A[s] - A[a]
        slope = g[s] - g[a]
        curv = float(dm @ dm)
        step = p[a] if curv <= 0 else min(p[a], -slope / (2 * curv))
        p[s] += step
        p[a] -= step
        if p[a] < 1e-16:
            p[a] = 0.0
        m = m + step * dm
        it += 1
        if it % polish_every == 0:
            p, m = _polish(phi, A, p, m, objective)
    value = objective(p, m)
    return SimplexResult(value=value, weights=p, gap=max(gap, 0.0), iterations=it, converged=converged)


def _polish(phi, A, p, m, objective):
    S = np.flatnonzero(p > 0)
    k = S.size
    if k < 2:
        return p, m
    As = A[S]
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = 2.0 * As @ As.T
    K[:k, k] = 1.0
    K[k, :k] = 1.0
    rhs = np.concatenate([-phi[S], [1.0]])
    sol, *_ = np.linalg.lstsq(K, rhs, rcond=1e-12)
    beta = sol[:k]
    if not np.all(np.isfinite(beta)):
        return p, m
    # move from p towards beta as far as the simplex allows
    cur = p[S]
    direction = beta - cur
    neg = direction < 0
    theta = 1.0
    if np.any(neg):
        theta = min(1.0, float(np.min(cur[neg] / -direction[neg])))
    cand = np.zeros_like(p)
    cand[S] = np.maximum(cur + theta * direction, 0.0)
    total = cand.sum()
    if total <= 0:
        return p, m
    cand /= total
    mc = cand @ A
    if objective(cand, mc) < objective(p, m):
        return cand, mc
    return p, m


def coordinate_infconv(phi, carrier, sigma, weights, **solver) -> SimplexResult:
    """``inf_p { int phi dp + sum_k w_k (p(y_k != x_k))**2 }`` at ``x = sigma``."""
    f = _phi(phi, carrier)
    X = _coordinates(carrier)
    x = X[_ordinal(carrier, sigma)]
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (X.shape[1],) or np.any(w < 0):
        raise DualOpError("coordinate weights must be nonnegative, one per coordinate")
    A = (X != x[None, :]).astype(np.float64) * np.sqrt(w)[None, :]
    return simplex_qp(f, A, **solver)


def _paren_weights(n: int, c_ell: float, j: int | None = None) -> np.ndarray:
    if c_ell <= 0:
        raise DualOpError("c_ell must be positive")
    w = np.full(n, 1.0 / (2 * c_ell ** 2))
    if j is not None:
        if not 1 <= j <= n:
            raise DualOpError(f"j={j} outside [1, {n}]")
        w[j - 1] = 1.0 / c_ell ** 2
    return w


def q_paren(phi, G: GroupTable, sigma, *, c_ell: float, **solver) -> SimplexResult:
    """Coordinate-wise operator with weight ``1/(2 c**2)`` on every coordinate."""
    if not isinstance(G, GroupTable):
        raise DualOpError("q_paren needs a permutation group")
    return coordinate_infconv(phi, G, sigma, _paren_weights(G.n, c_ell), **solver)


def q_j(phi, G: GroupTable, sigma, *, c_ell: float, j: int, **solver) -> SimplexResult:
    """As ``q_paren`` with coordinate ``j`` (1-based) weighted ``1/c**2``."""
    if not isinstance(G, GroupTable):
        raise DualOpError("q_j needs a permutation group")
    return coordinate_infconv(phi, G, sigma, _paren_weights(G.n, c_ell, j), **solver)


def q_hat(f, carrier: MultinomialCarrier, x, **solver) -> SimplexResult:
    """Slice operator with weight ``1/8`` on every coordinate."""
    if not isinstance(carrier, MultinomialCarrier):
        raise DualOpError("q_hat needs a slice or multinomial carrier")
    return coordinate_infconv(f, carrier, x, np.full(carrier.n, 1.0 / 8.0), **solver)


def coordinate_all(op, phi, carrier, **kw) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate a coordinate operator at every point; returns ``(values, gaps)``."""
    res = [op(phi, carrier, s, **kw) for s in range(len(carrier))]
    return np.array([r.value for r in res]), np.array([r.gap for r in res])


# -- Talagrand's functional --------------------------------------------------------

@dataclass
class TalagrandResult:
    value: float
    point: np.ndarray
    vertices: np.ndarray
    optimality: float   # min over vertices of <x, v - x>; >= 0 at the exact optimum


def disagreement_vectors(G, sigma, A) -> np.ndarray:
    X = _coordinates(G)
    x = X[_ordinal(G, sigma)]
    rows = [X[_ordinal(G, a)] for a in A]
    return (np.array(rows) != x[None, :]).astype(np.float64)


def talagrand_f(G, sigma, A) -> TalagrandResult:
    """Squared distance from the origin to the hull of 0/1 disagreement vectors."""
    A = list(A)
    if not A:
        raise DualOpError("A must be nonempty")
    V = np.unique(disagreement_vectors(G, sigma, A), axis=0)
    res = min_norm_hull(V, gap_target=1e-14)
    x = res.x
    opt = float(np.min(V @ x - x @ x))
    return TalagrandResult(value=float(x @ x), point=x, vertices=V, optimality=opt)


def talagrand_f_fw(G, sigma, A, gap_target: float = 1e-9) -> tuple[float, float]:
    """Frank-Wolfe cross-check of ``talagrand_f``: ``(value, gap)``."""
    V = np.unique(disagreement_vectors(G, sigma, list(A)), axis=0)
    value, _, gap = frank_wolfe_hull(V, gap_target=gap_target)
    return value, gap


def talagrand_f_all(G, A) -> np.ndarray:
    return np.array([talagrand_f(G, s, A).value for s in range(len(G))])


# -- dispatch ------------------------------------------------------------------

@dataclass(frozen=True)
class InfConvSpec:
    """Operator kind plus its parameters."""

    kind: str
    t: float | None = None
    c_ell: float | None = None
    alpha: float | None = None
    j: int | None = None
    c: float | None = None
    metric: str = "hamming"

    _needs = {
        "Q": (), "Q_tilde_t": ("t", "c_ell"), "Q_tilde_alpha": ("t", "c_ell", "alpha"),
        "Q_paren": ("c_ell",), "Q_j": ("c_ell", "j"), "Q_hat": (),
        "R_c": ("c",), "R_tilde": (), "R_tilde_alpha": ("alpha",),
    }

    def __post_init__(self):
        if self.kind not in self._needs:
            raise DualOpError(f"unknown operator kind {self.kind!r}")
        missing = [k for k in self._needs[self.kind] if getattr(self, k) is None]
        if missing:
            raise DualOpError(f"{self.kind} needs {', '.join(missing)}")
        if self.alpha is not None:
            _check_alpha(self.alpha)

    def evaluate(self, phi, carrier) -> tuple[np.ndarray, np.ndarray]:
        """Values and certified gaps at every point of ``carrier``."""
        N = len(carrier)
        zero = np.zeros(N)
        k = self.kind
        if k == "Q":
            return q_w1_all(phi, carrier, self.metric), zero
        if k == "Q_tilde_t":
            return q_tilde_all(phi, carrier, t=self.t, c_ell=self.c_ell, metric=self.metric), zero
        if k == "Q_tilde_alpha":
            return q_tilde_alpha_all(phi, carrier, t=self.t, c_ell=self.c_ell, alpha=self.alpha,
                                     metric=self.metric), zero
        if k == "Q_paren":
            return coordinate_all(q_paren, phi, carrier, c_ell=self.c_ell)
        if k == "Q_j":
            return coordinate_all(q_j, phi, carrier, c_ell=self.c_ell, j=self.j)
        if k == "Q_hat":
            return coordinate_all(q_hat, phi, carrier)
        f = _phi(phi, carrier)
        if k == "R_c":
            return np.array([r_c(f, self.c, x) for x in range(N)]), zero
        if k == "R_tilde":
            return np.array([r_tilde(f, x) for x in range(N)]), zero
        return np.array([r_tilde(f, x, self.alpha) for x in range(N)]), zero
