"""Permutations, permutation groups, local bases and the word bijection.

Labels are 1-based throughout the public API: a permutation of ``[n]`` is
stored as the tuple of images ``(s(1), ..., s(n))``.  Composition is
functional, ``(a * b)(i) == a(b(i))``.
"""
from __future__ import annotations

import hashlib
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product as _cartesian
from typing import Iterable, Iterator, Sequence

import numpy as np

DEFAULT_ELEMENT_CAP = 10_000


class GroupError(ValueError):
    """Raised for malformed permutations, groups or bases."""


@dataclass(frozen=True)
class Permutation:
    """A bijection of ``{1, ..., n}`` given by its image tuple."""

    images: tuple[int, ...]

    def __post_init__(self):
        imgs = tuple(int(x) for x in self.images)
        object.__setattr__(self, "images", imgs)
        if sorted(imgs) != list(range(1, len(imgs) + 1)):
            raise GroupError(f"{imgs} is not a permutation of 1..{len(imgs)}")

    # constructors
    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_cycles(cls, n: int, cycles: Iterable[Sequence[int]]) -> "Permutation":
        """Build from disjoint cycles, e.g. ``from_cycles(5, [(1, 2, 3), (4, 5)])``."""
        imgs = list(range(1, n + 1))
        seen: set[int] = set()
        for cyc in cycles:
            cyc = [int(c) for c in cyc]
            if any(c < 1 or c > n for c in cyc) or seen.intersection(cyc) or len(set(cyc)) != len(cyc):
                raise GroupError(f"invalid cycle {cyc} for n={n}")
            seen.update(cyc)
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                imgs[a - 1] = b
        return cls(tuple(imgs))

    @classmethod
    def transposition(cls, n: int, i: int, j: int) -> "Permutation":
        return cls.from_cycles(n, [(i, j)])

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def __mul__(self, other: "Permutation") -> "Permutation":
        return compose(self, other)

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, img in enumerate(self.images, start=1):
            inv[img - 1] = i
        return Permutation(tuple(inv))

    @cached_property
    def cycles(self) -> tuple[tuple[int, ...], ...]:
        """Cycle decomposition, fixed points included, each cycle led by its minimum."""
        seen = [False] * (self.n + 1)
        out = []
        for start in range(1, self.n + 1):
            if seen[start]:
                continue
            cyc = []
            x = start
            while not seen[x]:
                seen[x] = True
                cyc.append(x)
                x = self.images[x - 1]
            out.append(tuple(cyc))
        return tuple(out)

    @cached_property
    def support(self) -> frozenset[int]:
        return frozenset(i for i, img in enumerate(self.images, start=1) if img != i)

    @property
    def degree(self) -> int:
        return len(self.support)

    def is_identity(self) -> bool:
        return not self.support

    def cycle_notation(self) -> str:
        parts = ["(" + " ".join(map(str, c)) + ")" for c in self.cycles if len(c) > 1]
        return "".join(parts) or "id"

    def __repr__(self) -> str:
        return f"Permutation({self.cycle_notation()}, n={self.n})"


def compose(a: Permutation, b: Permutation) -> Permutation:
    """Return ``a * b``, the permutation ``i -> a(b(i))``."""
    if a.n != b.n:
        raise GroupError(f"size mismatch: {a.n} != {b.n}")
    ai = a.images
    return Permutation(tuple(ai[x - 1] for x in b.images))


def cycle_count(sigma: Permutation) -> int:
    """Number of cycles of ``sigma``, fixed points counted as 1-cycles."""
    return len(sigma.cycles)


def hamming(sigma: Permutation, tau: Permutation) -> int:
    """Number of points where ``sigma`` and ``tau`` disagree."""
    if sigma.n != tau.n:
        raise GroupError(f"size mismatch: {sigma.n} != {tau.n}")
    return sum(1 for a, b in zip(sigma.images, tau.images) if a != b)


def _fingerprint(*chunks: object) -> str:
    h = hashlib.sha256()
    for c in chunks:
        h.update(repr(c).encode())
    return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class GroupTable:
    """A fully enumerated permutation group with its stabiliser chain.

    ``elements`` is sorted lexicographically by image tuple, so the identity
    has ordinal 0 and the order does not depend on the generating set.
    """

    n: int
    elements: tuple[Permutation, ...]
    generators: tuple[Permutation, ...]
    ell: int | None = None
    name: str | None = None
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {p: k for k, p in enumerate(self.elements)})

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Permutation]:
        return iter(self.elements)

    def __contains__(self, sigma: Permutation) -> bool:
        return sigma in self.index

    def ordinal(self, sigma: Permutation) -> int:
        try:
            return self.index[sigma]
        except KeyError:
            raise GroupError(f"{sigma!r} is not an element of the group") from None

    @cached_property
    def images(self) -> np.ndarray:
        """``(|G|, n)`` array of 0-based images, row ``k`` is element ``k``."""
        return np.array([p.images for p in self.elements], dtype=np.int64).reshape(len(self), self.n) - 1

    @cached_property
    def identity_ordinal(self) -> int:
        return self.index[Permutation.identity(self.n)]

    @cached_property
    def inverse_ordinals(self) -> np.ndarray:
        return np.array([self.index[p.inverse()] for p in self.elements], dtype=np.int64)

    def product_ordinal(self, a: int, b: int) -> int:
        return self.index[self.elements[a] * self.elements[b]]

    @cached_property
    def subgroup_chain(self) -> dict[int, tuple[int, ...]]:
        """``j -> ordinals of G_j``, the elements fixing every point above ``j``."""
        imgs = self.images
        chain = {}
        fixed_above = np.ones(len(self), dtype=bool)
        for j in range(self.n, 0, -1):
            chain[j] = tuple(np.flatnonzero(fixed_above).tolist())
            fixed_above &= imgs[:, j - 1] == j - 1
        return chain

    @cached_property
    def orbits(self) -> dict[int, tuple[int, ...]]:
        """``j -> O_j``, the orbit of ``j`` under ``G_j`` (sorted, 1-based)."""
        imgs = self.images
        return {j: tuple(sorted({int(imgs[k, j - 1]) + 1 for k in self.subgroup_chain[j]}))
                for j in range(1, self.n + 1)}

    @property
    def k_n(self) -> int:
        """Number of chain levels ``j >= 2`` with a nontrivial orbit."""
        return sum(1 for j in range(2, self.n + 1) if self.orbits[j] != (j,))

    @cached_property
    def fingerprint(self) -> str:
        return _fingerprint("group", self.n, tuple(p.images for p in self.elements))

    @cached_property
    def degrees(self) -> np.ndarray:
        return (self.images != np.arange(self.n)).sum(axis=1)

    def labels(self) -> list[list[int]]:
        return [list(p.images) for p in self.elements]

    def describe(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "order": len(self),
            "ell": self.ell,
            "K_n": self.k_n,
            "orbits": {str(j): list(o) for j, o in self.orbits.items()},
            "fingerprint": self.fingerprint,
        }


def enumerate_group(generators: Sequence[Permutation], n: int | None = None, *,
                    ell: int | None = None, name: str | None = None,
                    cap: int = DEFAULT_ELEMENT_CAP) -> GroupTable:
    """Close ``generators`` under composition by breadth-first search.

    Raises :class:`GroupError` when the group would exceed ``cap`` elements.
    """
    gens = tuple(generators)
    if n is None:
        if not gens:
            raise GroupError("n is required when no generators are given")
        n = gens[0].n
    if any(g.n != n for g in gens):
        raise GroupError("generators must all act on the same ground set")
    ident = Permutation.identity(n)
    seen = {ident}
    queue = deque([ident])
    while queue:
        x = queue.popleft()
        for g in gens:
            y = x * g
            if y not in seen:
                seen.add(y)
                if len(seen) > cap:
                    raise GroupError(f"group exceeds element cap {cap}")
                queue.append(y)
    elements = tuple(sorted(seen, key=lambda p: p.images))
    return GroupTable(n=n, elements=elements, generators=gens, ell=ell, name=name)


# -- builtin groups ---------------------------------------------------------

def symmetric_group(n: int, *, cap: int = DEFAULT_ELEMENT_CAP) -> GroupTable:
    gens = [Permutation.transposition(n, i, i + 1) for i in range(1, n)]
    return enumerate_group(gens, n, ell=2, name=f"S{n}", cap=cap)


def alternating_group(n: int, *, cap: int = DEFAULT_ELEMENT_CAP) -> GroupTable:
    gens = [Permutation.from_cycles(n, [(1, 2, k)]) for k in range(3, n + 1)]
    return enumerate_group(gens, n, ell=3, name=f"A{n}", cap=cap)


def block_product_group(blocks: Sequence[int | str], *,
                        cap: int = DEFAULT_ELEMENT_CAP) -> GroupTable:
    """Direct product of symmetric (``3``) or alternating (``"a4"``) groups on consecutive blocks."""
    specs = []
    for b in blocks:
        s = str(b).strip().lower()
        alt = s.startswith("a")
        size = int(s.lstrip("as"))
        if size < 1:
            raise GroupError(f"bad block {b!r}")
        specs.append((size, alt))
    n = sum(s for s, _ in specs)
    gens = []
    start = 1
    for size, alt in specs:
        pts = list(range(start, start + size))
        if alt:
            gens += [Permutation.from_cycles(n, [(pts[0], pts[1], p)]) for p in pts[2:]]
        else:
            gens += [Permutation.transposition(n, a, b) for a, b in zip(pts, pts[1:])]
        start += size
    ell = 3 if any(alt and size >= 3 for size, alt in specs) else 2
    name = "x".join(("A" if alt else "S") + str(size) for size, alt in specs)
    return enumerate_group(gens, n, ell=ell, name=name, cap=cap)


def builtin_group(name: str, n: int | None = None, blocks: Sequence[int | str] | None = None,
                  *, cap: int = DEFAULT_ELEMENT_CAP) -> GroupTable:
    key = name.lower()
    if key in ("sn", "s", "symmetric"):
        if n is None:
            raise GroupError("n is required for Sn")
        return symmetric_group(n, cap=cap)
    if key in ("an", "a", "alternating"):
        if n is None:
            raise GroupError("n is required for An")
        return alternating_group(n, cap=cap)
    if key in ("product", "blocks"):
        if not blocks:
            raise GroupError("blocks are required for a product group")
        return block_product_group(blocks, cap=cap)
    raise GroupError(f"unknown builtin group {name!r}")


def group_from_spec(spec: dict, *, cap: int = DEFAULT_ELEMENT_CAP) -> GroupTable:
    """Build a group from ``{"n": int, "generators": [[images]...], "ell": int}``."""
    if "n" not in spec:
        raise GroupError("group spec: missing field 'n'")
    n = spec["n"]
    if not isinstance(n, int) or n < 1:
        raise GroupError("group spec: field 'n' must be a positive integer")
    gens = []
    for k, g in enumerate(spec.get("generators", [])):
        try:
            p = Permutation(tuple(g))
        except (GroupError, TypeError) as exc:
            raise GroupError(f"group spec: field 'generators[{k}]': {exc}") from None
        if p.n != n:
            raise GroupError(f"group spec: field 'generators[{k}]' has length {p.n}, expected {n}")
        gens.append(p)
    ell = spec.get("ell")
    if ell is not None and (not isinstance(ell, int) or ell < 2):
        raise GroupError("group spec: field 'ell' must be an integer >= 2")
    return enumerate_group(gens, n, ell=ell, name=spec.get("name"), cap=cap)


# -- locality ---------------------------------------------------------------

def _support_masks(G: GroupTable) -> np.ndarray:
    moved = G.images != np.arange(G.n)
    weights = (1 << np.arange(G.n, dtype=np.int64))
    return (moved * weights).sum(axis=1)


def is_ell_local(G: GroupTable, ell: int) -> bool:
    """Exhaustive check of the ``ell``-locality condition.

    For every ``s`` in ``G`` and every ``i`` moved by ``s`` there must be a
    ``t`` in ``G`` with ``supp(t) <= supp(s)``, ``deg(t) <= ell`` and
    ``t(i) == s(i)``.
    """
    masks = _support_masks(G)
    small = np.flatnonzero((G.degrees <= ell) & (G.degrees > 0))
    small_masks = masks[small]
    small_imgs = G.images[small]
    for k in range(len(G)):
        m = masks[k]
        if m == 0:
            continue
        inside = (small_masks & ~m) == 0
        cand = small_imgs[inside]
        row = G.images[k]
        for i in range(G.n):
            if row[i] != i and not np.any(cand[:, i] == row[i]):
                return False
    return True


@dataclass(frozen=True, eq=False)
class LocalBase:
    """A family ``t[(i, j)]`` of group elements with ``t(i) == j`` inside ``G_j``."""

    group: GroupTable
    ell: int
    entries: dict  # (i, j) -> element ordinal

    def element(self, i: int, j: int) -> Permutation:
        return self.group.elements[self.entries[(i, j)]]

    @cached_property
    def fingerprint(self) -> str:
        return _fingerprint("base", self.group.fingerprint, self.ell, sorted(self.entries.items()))

    @property
    def word_space(self) -> list[tuple[int, ...]]:
        return [self.group.orbits[j] for j in range(2, self.group.n + 1)]

    def words(self) -> Iterator[tuple[int, ...]]:
        return _cartesian(*self.word_space)

    @cached_property
    def _inverse_entries(self) -> dict:
        G = self.group
        return {key: G.inverse_ordinals[k] for key, k in self.entries.items()}

    @cached_property
    def word_table(self) -> np.ndarray:
        """``(|G|, n-1)`` array: row ``k`` is the word of element ``k`` (1-based letters)."""
        out = np.zeros((len(self.group), max(self.group.n - 1, 0)), dtype=np.int64)
        for k, sigma in enumerate(self.group.elements):
            out[k] = u_inverse(self, sigma)
        return out

    def describe(self) -> dict:
        return {
            "ell": self.ell,
            "fingerprint": self.fingerprint,
            "entries": {f"{i},{j}": self.element(i, j).cycle_notation()
                        for (i, j) in sorted(self.entries, key=lambda ij: (ij[1], ij[0]))},
        }


def build_local_base(G: GroupTable, ell: int, *, check_local: bool = True) -> LocalBase:
    """Pick ``t_{i,j}`` of minimal degree (then minimal ordinal) for every orbit point.

    With ``check_local`` the group is first verified to be ``ell``-local.
    """
    if ell < 2:
        raise GroupError("ell must be at least 2")
    if check_local and not is_ell_local(G, ell):
        raise GroupError(f"group is not {ell}-local")
    imgs = G.images
    degs = G.degrees
    entries = {}
    for j in range(2, G.n + 1):
        members = np.asarray(G.subgroup_chain[j], dtype=np.int64)
        for i in G.orbits[j]:
            if i == j:
                entries[(j, j)] = G.identity_ordinal
                continue
            ok = members[(imgs[members, i - 1] == j - 1) & (degs[members] <= ell)]
            if ok.size == 0:
                raise GroupError(f"no element of G_{j} of degree <= {ell} maps {i} to {j}")
            best = min(ok.tolist(), key=lambda k: (degs[k], k))
            entries[(i, j)] = best
    return LocalBase(group=G, ell=ell, entries=entries)


def u_map(T: LocalBase, word: Sequence[int]) -> Permutation:
    """Return ``t_{i_2,2} * t_{i_3,3} * ... * t_{i_n,n}``."""
    G = T.group
    word = tuple(int(w) for w in word)
    if len(word) != G.n - 1:
        raise GroupError(f"word has length {len(word)}, expected {G.n - 1}")
    out = Permutation.identity(G.n)
    for j, i in enumerate(word, start=2):
        if i not in G.orbits[j]:
            raise GroupError(f"letter {i} at position {j} is outside O_{j}={G.orbits[j]}")
        out = out * T.element(i, j)
    return out


def u_inverse(T: LocalBase, sigma: Permutation) -> tuple[int, ...]:
    """Peel ``sigma`` into its word, top level first."""
    G = T.group
    if sigma.n != G.n:
        raise GroupError("size mismatch")
    letters = []
    cur = sigma
    inv_elements = G.elements
    for j in range(G.n, 1, -1):
        i = cur.inverse()(j)
        if (i, j) not in T.entries:
            raise GroupError(f"{sigma!r} is not in G (letter {i} not in O_{j})")
        cur = cur * inv_elements[T._inverse_entries[(i, j)]]
        if any(cur(k) != k for k in range(j, G.n + 1)):
            raise GroupError(f"peeling left G_{j - 1}; corrupted base or foreign element")
        letters.append(i)
    if not cur.is_identity():
        raise GroupError(f"{sigma!r} is not generated by the base")
    return tuple(reversed(letters))


# -- distances --------------------------------------------------------------

def hamming_table(G: GroupTable) -> np.ndarray:
    from .kernels import hamming_matrix
    return hamming_matrix(G.images)


def word_lengths(G: GroupTable, ell: int | None = None) -> np.ndarray:
    """Cayley-graph distance from the identity w.r.t. the elements of degree <= ell."""
    ell = G.ell if ell is None else ell
    if ell is None:
        raise GroupError("a locality bound ell is required for the transposition distance")
    gens = [k for k in range(len(G)) if 0 < G.degrees[k] <= ell]
    dist = np.full(len(G), -1, dtype=np.int64)
    e = G.identity_ordinal
    dist[e] = 0
    queue = deque([e])
    while queue:
        x = queue.popleft()
        for g in gens:
            y = G.product_ordinal(x, g)
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def transposition_table(G: GroupTable, ell: int | None = None) -> np.ndarray:
    """All-pairs ``d_T``; raises when the small-degree elements do not generate ``G``."""
    lengths = word_lengths(G, ell)
    if np.any(lengths < 0):
        raise GroupError("elements of degree <= ell do not generate the group")
    N = len(G)
    inv = G.inverse_ordinals
    table = np.empty((N, N), dtype=np.int64)
    for a in range(N):
        ia = inv[a]
        for b in range(N):
            table[a, b] = lengths[G.product_ordinal(ia, b)]
    return table


def transposition_distance(G: GroupTable, sigma: Permutation, tau: Permutation,
                           ell: int | None = None) -> int:
    """Fewest elements of degree <= ell whose product carries sigma to tau."""
    a, b = G.ordinal(sigma), G.ordinal(tau)
    lengths = word_lengths(G, ell)
    d = lengths[G.product_ordinal(G.inverse_ordinals[a], b)]
    if d < 0:
        raise GroupError("tau is unreachable from sigma with elements of degree <= ell")
    return int(d)


def is_normal_in_symmetric(G: GroupTable) -> bool:
    """Exhaustive normality test ``t^-1 G t == G`` for all ``t`` in ``S_n``."""
    if math.factorial(G.n) > DEFAULT_ELEMENT_CAP:
        raise GroupError("normality is only checked for small n")
    from itertools import permutations
    gens = G.generators or G.elements
    for imgs in permutations(range(1, G.n + 1)):
        t = Permutation(imgs)
        ti = t.inverse()
        for g in gens:
            if ti * g * t not in G:
                return False
    return True
