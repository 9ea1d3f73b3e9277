"""Slices of the discrete cube, multinomial carriers and their projections from S_n."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np

from .permcore import GroupError, Permutation, _fingerprint


@dataclass(frozen=True, eq=False)
class MultinomialCarrier:
    """Words in ``{1..m}^n`` where letter ``l`` occurs exactly ``parts[l-1]`` times.

    The two-part case ``parts == (k, n - k)`` is the slice ``X_{k,n-k}``; its
    points are reported as 0/1 indicator vectors (letter 1 -> 1, letter 2 -> 0).
    """

    parts: tuple[int, ...]
    points: tuple[tuple[int, ...], ...] = field(init=False, repr=False)
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        parts = tuple(int(k) for k in self.parts)
        if not parts or any(k < 0 for k in parts):
            raise GroupError(f"malformed parts {self.parts}")
        object.__setattr__(self, "parts", parts)
        n = sum(parts)
        pts = sorted(_arrangements(parts, n))
        if self.is_slice:
            pts = sorted({tuple(1 if x == 1 else 0 for x in p) for p in pts}, reverse=True)
        object.__setattr__(self, "points", tuple(pts))
        object.__setattr__(self, "index", {p: k for k, p in enumerate(pts)})

    @property
    def n(self) -> int:
        return sum(self.parts)

    @property
    def is_slice(self) -> bool:
        return len(self.parts) == 2

    def __len__(self) -> int:
        return len(self.points)

    @cached_property
    def coords(self) -> np.ndarray:
        return np.array(self.points, dtype=np.int64).reshape(len(self), self.n)

    @cached_property
    def fingerprint(self) -> str:
        return _fingerprint("multinomial", self.parts)

    def labels(self) -> list[list[int]]:
        return [list(p) for p in self.points]

    def ordinal(self, x) -> int:
        try:
            return self.index[tuple(int(v) for v in x)]
        except KeyError:
            raise GroupError(f"{x} is not a point of the carrier") from None

    def disagreement(self) -> np.ndarray:
        """``(N, N, n)`` boolean tensor ``1[x_i != y_i]``."""
        c = self.coords
        return c[:, None, :] != c[None, :, :]

    def hamming_half(self) -> np.ndarray:
        """``d_h(x, y) = (1/2) #{i : x_i != y_i}``."""
        return 0.5 * self.disagreement().sum(axis=2)


def _arrangements(parts, n):
    """All words of length ``n`` with letter counts ``parts``."""
    if not parts:
        return [()] if n == 0 else []
    out = []
    first, rest = parts[0], parts[1:]
    for spots in combinations(range(n), first):
        others = [i for i in range(n) if i not in spots]
        for tail in _arrangements(rest, n - first):
            word = [0] * n
            for i in spots:
                word[i] = 1
            for i, letter in zip(others, tail):
                word[i] = letter + 1
            out.append(tuple(word))
    return out


def slice_carrier(k: int, n: int) -> MultinomialCarrier:
    if not 0 <= k <= n:
        raise GroupError(f"k={k} out of range for n={n}")
    return MultinomialCarrier((k, n - k))


def slice_projection(sigma: Permutation, k: int) -> tuple[int, ...]:
    """Indicator vector of ``{sigma(1), ..., sigma(k)}``."""
    if not 1 <= k <= sigma.n:
        raise GroupError(f"k={k} out of range for n={sigma.n}")
    top = set(sigma.images[:k])
    return tuple(1 if i in top else 0 for i in range(1, sigma.n + 1))


def multinomial_projection(sigma: Permutation, parts) -> tuple[int, ...]:
    """``x`` with ``x_{sigma(i)} = l`` for ``i`` in the ``l``-th consecutive block of sizes ``parts``."""
    parts = tuple(int(k) for k in parts)
    if sum(parts) != sigma.n or any(k < 1 for k in parts):
        raise GroupError(f"parts {parts} must be positive and sum to n={sigma.n}")
    x = [0] * sigma.n
    pos = 0
    for letter, k in enumerate(parts, start=1):
        for i in range(pos, pos + k):
            x[sigma.images[i] - 1] = letter
        pos += k
    if len(parts) == 2:
        return tuple(1 if v == 1 else 0 for v in x)
    return tuple(x)


def projection_map(G, carrier: MultinomialCarrier) -> np.ndarray:
    """Ordinal map ``G -> carrier`` induced by :func:`multinomial_projection`."""
    if G.n != carrier.n:
        raise GroupError("group and carrier act on different n")
    return np.array([carrier.ordinal(multinomial_projection(s, carrier.parts)) for s in G.elements],
                    dtype=np.int64)
