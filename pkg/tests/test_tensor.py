import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracle
from qlab import hilbmod as hm
from qlab import quantale as qq
from qlab import tensor as tn
from qlab.cli.loader import resolve
from qlab.laws import StructureError


def cat(name):
    return resolve(name, ("module", "bimodule")).obj


def _triple(A):
    return (A.lat.join, A.mult, A.star)


# ------------------------------------------------------------------ bimodules


@pytest.mark.parametrize("A", [qq.two(), qq.chain3_frame()], ids=["two", "chain3"])
def test_regular_bimodule(A):
    X = tn.validate_bimodule(tn.regular_bimodule(A), "strict")
    assert X.left.m_regular and X.right.m_regular
    assert oracle.bimodule_ok(_triple(A), _triple(A), A.lat.join, X.lact, X.ract, X.lip, X.rip, "strict")


def test_column_bimodule_is_valid():
    X = cat("col2")
    assert not tn.check_bimodule(X)
    assert (X.left_level, X.right_level) == ("strict", "strict")
    assert oracle.bimodule_ok(_triple(X.A), _triple(X.B), X.lat.join, X.lact, X.ract, X.lip, X.rip, "strict")


def test_left_action_ignoring_scalars_is_rejected(two):
    R = tn.regular_bimodule(two)
    X = tn.HilbertBimodule(two, two, R.lat, np.array([[0, 0], [1, 1]]), R.ract, None, R.rip)
    vs = tn.check_bimodule(X)
    assert [(v.law, v.witness) for v in vs] == [("LeftM3", (1, 0))]
    with pytest.raises(StructureError):
        tn.validate_bimodule(X)


def test_left_action_not_adjoint_is_rejected(two):
    # on 2 x 2 over 2, swapping coordinates as the left action of 1 breaks
    # both the left module laws and the adjointness against the right ip
    from qlab.hilbmod import free_module
    F = free_module(two, 2)
    H = F.H
    swap = [F.vector(tuple(reversed(F.coords(v)))) for v in range(4)]
    lact = np.array([[0, swap[v]] for v in range(4)])
    X = tn.HilbertBimodule(two, two, H.lat, lact, H.act, None, H.ip)
    assert "LeftM1" in [v.law for v in tn.check_bimodule(X)]


def test_conjugate_is_an_involution():
    X = cat("col2")
    Y = tn.conjugate(tn.conjugate(X))
    for a in ("lact", "ract", "lip", "rip"):
        assert np.array_equal(getattr(X, a), getattr(Y, a))
    assert not tn.check_bimodule(tn.conjugate(X))


# --------------------------------------------------------------------- tensor


def test_two_tensor_two(two):
    R = tn.regular_bimodule(two)
    T = tn.interior_tensor(R, R)
    assert T.n == 2
    assert hm.module_iso_search(T.right, hm.regular_module(two)) is not None


def test_free_tensor_is_power(two):
    F = hm.free_module(two, 2)
    T = tn.interior_tensor(F.H, tn.regular_bimodule(two))
    R = hm.regular_module(two)
    assert T.n == 4
    assert hm.module_iso_search(T.right, hm.biproduct([R, R]).H) is not None


@pytest.mark.parametrize("pair", [("diamond", "two_bi"), ("chain3_bi", "chain3_bi"), ("col2", "two_bi")])
def test_elements_are_joins_of_simple_tensors(pair):
    X, Y = cat(pair[0]), cat(pair[1])
    T = tn.interior_tensor(X, Y)
    gens = set(T.gen_of.ravel().tolist())
    for e in range(T.n):
        below = [g for g in gens if T.lat.le(g, e)]
        assert T.lat.join_all(below) == e
    assert T.decomposition_consistent


def test_tensor_values_follow_the_simple_tensor_formula(diamond_mod, two):
    R = tn.regular_bimodule(two)
    T = tn.interior_tensor(diamond_mod, R)
    P, M = diamond_mod.P, two.M
    for (m, a), (x, b) in itertools.product(itertools.product(range(4), range(2)), repeat=2):
        # <m (x) a, x (x) b> = <a, <m,x> . b>
        assert T.rip[T.simple(m, a), T.simple(x, b)] == M[a][M[P[m][x]][b]]


def test_standard_iso_for_m_regular_modules(two, diamond_mod):
    for M in (hm.regular_module(two), diamond_mod):
        T, rep = tn.unit_iso(M)
        assert rep.unitary and not rep.preconditions


def test_standard_iso_names_the_failing_clause():
    T, rep = tn.unit_iso(cat("trivial_chain3"))
    assert not rep.unitary and "essential" in rep.preconditions
    assert rep.preconditions["essential"] == (1,)
    assert "surjective" in rep.witness


# ------------------------------------------------------------- left actions


def test_left_action_on_two_is_meet(two):
    R = tn.regular_bimodule(two)
    X = tn.tensor_left_action(R, R)
    assert X.n == 2 and X.lact.tolist() == two.mult.tolist()


def test_column_row_composite():
    X = cat("col2")
    XX = tn.tensor_left_action(X, tn.conjugate(X))
    assert XX.n == 16
    assert (XX.left_level, XX.right_level) == ("strict", "strict")


def test_left_action_requires_a_bimodule(diamond_mod, two):
    with pytest.raises(ValueError):
        tn.tensor_left_action(diamond_mod, tn.regular_bimodule(two))


@pytest.mark.parametrize("name", ["two_bi", "chain3_bi"])
def test_tensor_associativity(name):
    X = cat(name)
    lhs = tn.interior_tensor(tn.tensor_left_action(X, X), X)
    rhs = tn.interior_tensor(X, tn.tensor_left_action(X, X))
    assert lhs.n == rhs.n
    assert tn.tensor_iso_search(lhs, rhs) is not None


def test_budget_guards_the_grid(two):
    from qlab.budget import Budget, BudgetExceeded
    X = cat("col2")
    with pytest.raises(BudgetExceeded):
        tn.interior_tensor(X, tn.conjugate(X), Budget(scan=10))


# ----------------------------------------------------------------- properties

PAIRS = [("two_bi", "two_bi"), ("diamond", "two_bi"), ("degenerate_chain3", "two_bi"),
         ("trivial_chain3", "two_bi"), ("chain3_bi", "chain3_bi"), ("col2", "two_bi")]


@settings(max_examples=12, deadline=None)
@given(st.sampled_from(PAIRS))
def test_inner_product_is_hermitian_and_hilbert(pair):
    X, Y = cat(pair[0]), cat(pair[1])
    T = tn.interior_tensor(X, Y)
    assert np.array_equal(T.C.star[T.rip], T.rip.T)
    assert T.right.level in ("hilbert", "strict")
    C = T.C
    assert oracle.inner_level(C.lat.join, C.mult, C.star, T.lat.join, T.ract, T.rip) in ("hilbert", "strict")


@settings(max_examples=12, deadline=None)
@given(st.sampled_from(PAIRS))
def test_function_representation_matches_the_oracle(pair):
    X, Y = cat(pair[0]), cat(pair[1])
    T = tn.interior_tensor(X, Y)
    O = tn.tensor_oracle(X, Y)
    assert tn.oracle_matches(T, O)
