import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracle
from qlab import suplat as sl
from qlab.budget import Budget, BudgetExceeded
from qlab.laws import StructureError


def _laws(vs):
    return [v.law for v in vs]


# ----------------------------------------------------------------- validation


def test_two_is_valid():
    L = sl.validate_suplattice([[0, 1], [1, 1]])
    assert (L.bottom, L.top) == (0, 1)


def test_chain3_order_is_total():
    L = sl.chain3()
    assert L.leq.tolist() == [[True, True, True], [False, True, True], [False, False, True]]


def test_noncommutative_witness():
    # join(a,b) = a, join(b,a) = b
    vs = sl.check_suplattice([[0, 1, 2], [1, 1, 1], [2, 2, 2]])
    assert ("NotCommutative", (1, 2)) in [(v.law, v.witness) for v in vs]


def test_missing_bottom_and_idempotence():
    assert "NoBottom" in _laws(sl.check_suplattice([[1, 1], [1, 1]]))
    assert "NotIdempotent" in _laws(sl.check_suplattice([[1, 1], [1, 1]]))


def test_nonassociative_witness():
    # 0 v 1 = 2, 1 v 2 = 0, ... built to break associativity
    J = [[0, 2, 2], [2, 1, 0], [2, 0, 2]]
    assert "NonAssociative" in _laws(sl.check_suplattice(J))


def test_validate_raises_with_violations():
    with pytest.raises(StructureError) as e:
        sl.validate_suplattice([[0, 0], [1, 1]])
    assert e.value.violations


def test_order_form_rejects_cycles_and_missing_joins():
    with pytest.raises(StructureError, match="NotAntisymmetric"):
        sl.lattice_from_order(2, [(0, 1), (1, 0)])
    # two maximal elements above 0: a and b have no join
    with pytest.raises(StructureError, match="NoLeastUpperBound"):
        sl.lattice_from_order(3, [(0, 1), (0, 2)])


# -------------------------------------------------------------- right adjoints


def test_right_adjoint_identity():
    L = sl.diamond()
    f = sl.LatticeMap(L, L, (0, 1, 2, 3))
    assert sl.right_adjoint(f).values == (0, 1, 2, 3)


def test_right_adjoint_of_bottom_map_is_top():
    L = sl.two()
    assert sl.right_adjoint(sl.LatticeMap(L, L, (0, 0))).values == (1, 1)


def test_right_adjoint_collapsing_middle():
    L = sl.chain3()
    f = sl.LatticeMap(L, L, (0, 0, 2))
    # independent scan: g(t) = max{s : f(s) <= t}
    scan = tuple(max(s for s in range(3) if f.values[s] <= t) for t in range(3))
    assert scan == (1, 1, 2)
    assert sl.right_adjoint(f).values == scan


def test_right_adjoint_requires_join_preservation():
    L = sl.chain3()
    with pytest.raises(StructureError):
        sl.right_adjoint(sl.LatticeMap(L, L, (1, 1, 2)))


# ------------------------------------------------------------- enumeration


def _raw_count(S, T):
    return sum(oracle_jp(S, T, v) for v in itertools.product(range(T.n), repeat=S.n))


def oracle_jp(S, T, v):
    J, K = S.J, T.J
    return v[S.bottom] == T.bottom and all(v[J[a][b]] == K[v[a]][v[b]] for a in range(S.n) for b in range(S.n))


def test_enumerate_two_to_two():
    maps = [f.values for f in sl.enumerate_latmaps(sl.two(), sl.two())]
    assert maps == [(0, 0), (0, 1)]


def test_enumerate_two_to_chain3():
    assert len(list(sl.enumerate_latmaps(sl.two(), sl.chain3()))) == 3


def test_enumerate_with_predicate():
    L = sl.two()
    got = list(sl.enumerate_latmaps(L, L, lambda f: f(L.top) == L.bottom))
    assert [f.values for f in got] == [(0, 0)]


@pytest.mark.parametrize("S,T", [(sl.diamond(), sl.diamond()), (sl.chain3(), sl.diamond()),
                                 (sl.diamond(), sl.chain(4)), (sl.boolean(3), sl.chain3())])
def test_enumeration_matches_raw_filtering(S, T):
    fast = {f.values for f in sl.enumerate_latmaps(S, T)}
    raw = {f.values for f in sl.enumerate_latmaps_raw(S, T)}
    assert fast == raw
    assert len(fast) == _raw_count(S, T)


def test_enumeration_budget():
    with pytest.raises(BudgetExceeded):
        list(sl.iter_latmap_values(sl.boolean(3), sl.boolean(3), Budget(scan=10)))


# ----------------------------------------------------------------- isomorphism


def test_iso_identity_on_diamond():
    L = sl.diamond()
    f = sl.lattice_iso_search(L, L)
    assert f is not None and sl.is_join_preserving(L, L, f.values)


def test_iso_chain_vs_diamond_exhausts():
    assert sl.lattice_iso_search(sl.chain3(), sl.diamond()) is None
    assert sl.lattice_iso_search(sl.chain(4), sl.diamond()) is None


def test_iso_relabelled_diamond():
    # elements listed as 1, b, 0, a
    perm = [2, 3, 1, 0]  # old -> new position
    L = sl.diamond()
    J = np.empty((4, 4), dtype=np.int64)
    for a in range(4):
        for b in range(4):
            J[perm[a], perm[b]] = perm[L.J[a][b]]
    R = sl.validate_suplattice(J)
    f = sl.lattice_iso_search(L, R)
    assert f is not None and f.values != (0, 1, 2, 3)
    assert sl.is_join_preserving(L, R, f.values) and len(set(f.values)) == 4


def test_generated_lattice_counts():
    # number of unlabelled lattices with n elements: 1, 1, 1, 2, 5, 15
    assert [len(sl.generate_lattices(n)) for n in range(1, 7)] == [1, 1, 1, 2, 5, 15]


def test_generated_lattices_are_pairwise_nonisomorphic():
    Ls = sl.generate_lattices(5)
    for A, B in itertools.combinations(Ls, 2):
        assert sl.lattice_iso_search(A, B) is None


# ---------------------------------------------------------------- properties


@st.composite
def lattices(draw):
    n = draw(st.integers(1, 5))
    return draw(st.sampled_from(sl.generate_lattices(n)))


@settings(max_examples=40, deadline=None)
@given(lattices())
def test_order_is_derived_from_join(L):
    assert oracle.lattice_ok(L.join)
    for a in range(L.n):
        for b in range(L.n):
            assert L.le(a, b) == (L.J[a][b] == b)


@settings(max_examples=40, deadline=None)
@given(lattices(), lattices(), st.data())
def test_galois_law_and_round_trip(S, T, data):
    maps = list(sl.iter_latmap_values(S, T))
    f = sl.LatticeMap(S, T, data.draw(st.sampled_from(maps)))
    g = sl.right_adjoint(f)
    for s in range(S.n):
        for t in range(T.n):
            assert T.le(f(s), t) == S.le(s, g(t))
    assert sl.left_adjoint(g) == f


@settings(max_examples=30, deadline=None)
@given(lattices(), st.randoms(use_true_random=False))
def test_relabelling_is_found_by_iso_search(L, rnd):
    perm = list(range(L.n))
    rnd.shuffle(perm)
    J = np.empty((L.n, L.n), dtype=np.int64)
    for a in range(L.n):
        for b in range(L.n):
            J[perm[a], perm[b]] = perm[L.J[a][b]]
    R = sl.SupLattice(J)
    f = sl.lattice_iso_search(L, R)
    assert f is not None
    assert sl.is_join_preserving(L, R, f.values) and sorted(f.values) == list(range(L.n))
