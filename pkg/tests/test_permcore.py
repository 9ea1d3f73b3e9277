import itertools
from collections import deque

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from permconc.permcore import (GroupError, Permutation, build_local_base, builtin_group, compose, cycle_count,
                               enumerate_group, group_from_spec, hamming, hamming_table, is_ell_local,
                               is_normal_in_symmetric, symmetric_group, transposition_distance,
                               transposition_table, u_inverse, u_map)

perms = st.integers(2, 7).flatmap(lambda n: st.permutations(range(1, n + 1)).map(Permutation))


def P(*imgs):
    return Permutation(imgs)


def test_compose_order_convention():
    a = Permutation.transposition(3, 1, 2)
    b = Permutation.transposition(3, 2, 3)
    # (a*b)(i) = a(b(i)): 1 -> 2, 2 -> 3, 3 -> 1
    assert compose(a, b) == P(2, 3, 1)
    assert compose(a, b).cycle_notation() == "(1 2 3)"


@given(perms)
def test_compose_identity_and_inverse(s):
    e = Permutation.identity(s.n)
    assert compose(e, s) == s == compose(s, e)
    assert compose(s, s.inverse()) == e


def test_cycle_count_examples():
    assert cycle_count(Permutation.identity(5)) == 5
    assert cycle_count(Permutation.transposition(5, 2, 4)) == 4
    assert cycle_count(Permutation.from_cycles(6, [(1, 2, 3), (4, 5)])) == 3


def test_bad_permutation_rejected():
    with pytest.raises(GroupError):
        P(1, 1, 2)
    with pytest.raises(GroupError):
        Permutation.from_cycles(3, [(1, 2), (2, 3)])


def test_hamming_examples(s4):
    e = Permutation.identity(4)
    assert hamming(e, e) == 0
    assert hamming(e, Permutation.transposition(4, 1, 3)) == 2
    for s, t in itertools.product(s4, repeat=2):
        assert hamming(s, t) == compose(s, t.inverse()).degree


def _bfs_distance(G, ell):
    movers = [g for g in G if 0 < g.degree <= ell]
    out = {}
    for src in G:
        dist = {src: 0}
        q = deque([src])
        while q:
            x = q.popleft()
            for m in movers:
                y = compose(x, m)
                if y not in dist:
                    dist[y] = dist[x] + 1
                    q.append(y)
        out[src] = dist
    return out


def test_transposition_distance_matches_bfs(s4):
    table = transposition_table(s4, 2)
    bfs = _bfs_distance(s4, 2)
    for i, s in enumerate(s4):
        for j, t in enumerate(s4):
            assert table[i, j] == bfs[s][t]
            # Cayley formula: n minus number of cycles of s^{-1} t
            assert table[i, j] == 4 - cycle_count(compose(s.inverse(), t))
    c3 = Permutation.from_cycles(4, [(1, 2, 3)])
    assert transposition_distance(s4, Permutation.identity(4), c3, 2) == 2


def test_metric_comparison_s4(s4):
    H = hamming_table(s4)
    T = transposition_table(s4, 2)
    off = ~np.eye(len(s4), dtype=bool)
    assert np.all(0.5 * H[off] <= T[off])
    assert np.all(T[off] <= H[off] - 1)


def test_enumerate_examples():
    triv = enumerate_group([], 4)
    assert len(triv) == 1 and all(triv.orbits[j] == (j,) for j in range(1, 5))
    s4 = symmetric_group(4)
    assert len(s4) == 24
    assert all(s4.orbits[j] == tuple(range(1, j + 1)) for j in range(1, 5))
    a4 = builtin_group("An", 4)
    assert len(a4) == 12
    assert s4.elements[0] == Permutation.identity(4)


def test_orbit_product_equals_order(s4, a4, s2xs3):
    for G in (s4, a4, s2xs3, symmetric_group(5)):
        assert len(G) == int(np.prod([len(G.orbits[j]) for j in range(1, G.n + 1)]))


def test_k_n(s4, a4, s2xs3):
    assert s4.k_n == 3
    assert a4.k_n == 2
    assert s2xs3.k_n == 3  # O_2, O_4, O_5 are nontrivial


def test_locality(s4, a4):
    assert is_ell_local(s4, 2)
    assert not is_ell_local(a4, 2)
    assert is_ell_local(a4, 3)
    assert is_ell_local(enumerate_group([], 3), 2)


def test_local_base_examples(s3, a4):
    T = build_local_base(s3, 2)
    for (i, j), k in T.entries.items():
        expect = Permutation.identity(3) if i == j else Permutation.transposition(3, i, j)
        assert s3.elements[k] == expect
    TA = build_local_base(a4, 3)
    assert all(TA.element(i, j).degree <= 3 for (i, j) in TA.entries)
    with pytest.raises(GroupError):
        build_local_base(a4, 2)
    assert build_local_base(enumerate_group([], 3), 2).word_table.tolist() == [[2, 3]]


def test_u_map_examples(s3):
    T = build_local_base(s3, 2)
    assert u_map(T, (2, 3)) == Permutation.identity(3)
    assert u_map(T, (1, 3)) == Permutation.transposition(3, 1, 2)
    assert u_inverse(T, Permutation.identity(3)) == (2, 3)
    assert u_inverse(T, Permutation.transposition(3, 1, 3)) == (2, 1)
    with pytest.raises(GroupError):
        u_map(T, (3, 3))


@pytest.mark.parametrize("name", ["S3", "S4", "S5", "A4", "S2xS3"])
def test_bijection_exhaustive(name):
    G = {"S3": lambda: symmetric_group(3), "S4": lambda: symmetric_group(4), "S5": lambda: symmetric_group(5),
         "A4": lambda: builtin_group("An", 4), "S2xS3": lambda: builtin_group("product", blocks=[2, 3])}[name]()
    T = build_local_base(G, G.ell)
    words = list(T.words())
    assert len(words) == len(G)
    images = {u_map(T, w) for w in words}
    assert images == set(G.elements)
    for w in words:
        assert u_inverse(T, u_map(T, w)) == tuple(w)
    for s in G:
        assert u_map(T, u_inverse(T, s)) == s


def test_normality():
    assert is_normal_in_symmetric(symmetric_group(4))
    assert is_normal_in_symmetric(builtin_group("An", 4))
    assert not is_normal_in_symmetric(builtin_group("product", blocks=[2, 3]))


def test_group_spec_errors():
    with pytest.raises(GroupError, match="'n'"):
        group_from_spec({"generators": []})
    with pytest.raises(GroupError, match=r"generators\[0\]"):
        group_from_spec({"n": 3, "generators": [[1, 2]]})
    with pytest.raises(GroupError, match="'ell'"):
        group_from_spec({"n": 3, "generators": [[2, 1, 3]], "ell": 1})
    G = group_from_spec({"n": 3, "generators": [[2, 1, 3], [1, 3, 2]], "ell": 2})
    assert len(G) == 6


@given(perms, perms)
def test_hamming_is_metric_on_same_size(a, b):
    if a.n != b.n:
        return
    assert hamming(a, b) == hamming(b, a)
    assert (hamming(a, b) == 0) == (a == b)
    assert hamming(a, b) != 1
