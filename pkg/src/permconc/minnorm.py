"""Wolfe's minimum-norm-point algorithm over a polytope given by a linear oracle.

The polytope is ``conv{z(v)}`` for vertices ``v`` reachable through
``oracle(x) -> (z, v)``, which must return a vertex minimising ``<x, z>``.
On termination ``norm2(x) - <x, z_s>`` (the Wolfe gap) bounds
``norm2(x) - min norm2`` from above: the point is optimal up to that gap.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class MinNormResult:
    x: np.ndarray
    weights: np.ndarray
    points: np.ndarray       # corral, one row per point
    payloads: list
    gap: float               # ||x||^2 - min_v <x, z(v)>, >= ||x||^2 - min ||.||^2
    major: int
    minor: int
    converged: bool

    @property
    def value(self) -> float:
        return float(self.x @ self.x)


def _affine_minimizer(Z: np.ndarray) -> np.ndarray:
    """Coefficients ``a`` (summing to 1) of the min-norm point of ``aff(rows of Z)``."""
    k = Z.shape[0]
    if k == 1:
        return np.ones(1)
    # least squares on differences is better conditioned than the Gram system
    D = (Z[1:] - Z[0]).T
    beta, *_ = np.linalg.lstsq(D, -Z[0], rcond=1e-12)
    return np.concatenate([[1.0 - beta.sum()], beta])


def min_norm_point(oracle: Callable[[np.ndarray], tuple], start, *, gap_target: float = 1e-12,
                   max_major: int = 10_000, max_minor: int = 10_000,
                   stop_value: float | None = None) -> MinNormResult:
    """Run Wolfe's method from the vertex ``start = (z, payload)``.

    ``stop_value`` ends the run early once ``||x||^2`` reaches it.
    """
    z0, v0 = start
    Z = np.atleast_2d(np.asarray(z0, dtype=np.float64))
    payloads = [v0]
    lam = np.ones(1)
    x = Z[0].copy()
    major = minor = 0
    gap = np.inf
    converged = False
    while major < max_major:
        z, v = oracle(x)
        z = np.asarray(z, dtype=np.float64)
        xx = float(x @ x)
        gap = xx - float(x @ z)
        scale = max(1.0, xx, float(np.max(np.sum(Z * Z, axis=1))))
        if gap <= gap_target or gap <= 1e-15 * scale:
            converged = True
            break
        if stop_value is not None and xx <= stop_value:
            break
        if np.any(np.all(np.abs(Z - z) <= 1e-14 * scale, axis=1)):
            # oracle returned a corral point: x is optimal up to round-off
            converged = gap <= 1e-9 * scale
            break
        major += 1
        Z = np.vstack([Z, z])
        payloads.append(v)
        lam = np.append(lam, 0.0)
        while minor < max_minor:
            minor += 1
            a = _affine_minimizer(Z)
            if np.all(a > 1e-14):
                lam = a
                x = lam @ Z
                break
            neg = a <= 1e-14
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(neg, lam / (lam - a), np.inf)
            theta = float(min(1.0, np.min(ratios)))
            lam = theta * a + (1 - theta) * lam
            lam[lam < 1e-15] = 0.0
            keep = lam > 0
            if not np.any(keep):
                keep[np.argmax(a)] = True
                lam[keep] = 1.0
            Z = Z[keep]
            payloads = [p for p, k in zip(payloads, keep) if k]
            lam = lam[keep] / lam[keep].sum()
            x = lam @ Z
    return MinNormResult(x=x, weights=lam, points=Z, payloads=payloads, gap=max(gap, 0.0),
                         major=major, minor=minor, converged=converged)


def min_norm_hull(vertices: np.ndarray, **kw) -> MinNormResult:
    """Minimum-norm point of the convex hull of the rows of ``vertices``."""
    V = np.asarray(vertices, dtype=np.float64)
    if V.ndim != 2 or V.shape[0] == 0:
        raise ValueError("need a nonempty 2-D array of vertices")

    def oracle(x):
        k = int(np.argmin(V @ x))
        return V[k], k

    k0 = int(np.argmin(np.sum(V * V, axis=1)))
    return min_norm_point(oracle, (V[k0], k0), **kw)


def frank_wolfe_hull(vertices: np.ndarray, *, gap_target: float = 1e-9, max_iter: int = 200_000):
    """Pairwise Frank-Wolfe on ``min ||V^T p||^2`` over the simplex; independent cross-check.

    Returns ``(value, weights, gap)``.
    """
    V = np.asarray(vertices, dtype=np.float64)
    m = V.shape[0]
    p = np.zeros(m)
    p[int(np.argmin(np.sum(V * V, axis=1)))] = 1.0
    x = p @ V
    gap = np.inf
    for _ in range(max_iter):
        g = 2.0 * (V @ x)
        s = int(np.argmin(g))
        gap = float(g @ p - g[s])
        if gap <= gap_target:
            break
        active = np.flatnonzero(p > 0)
        a = active[int(np.argmax(g[active]))]
        d = V[s] - V[a]
        dd = float(d @ d)
        if dd == 0:
            break
        step = min(p[a], max(0.0, -float(x @ d) / dd))
        p[s] += step
        p[a] -= step
        x = x + step * d
    return float(x @ x), p, max(gap, 0.0)
