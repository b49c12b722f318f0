import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracle
from qlab import morita as mo
from qlab import quantale as qq
from qlab import suplat as sl
from qlab import tensor as tn
from qlab.cli.loader import resolve
from qlab.hilbmod import free_module


def cat(name):
    return resolve(name, ("bimodule",)).obj


def _triple(A):
    return (A.lat.join, A.mult, A.star)


def linking_holds(X):
    """_A<x,y> . z == x <> <y,z>_B, one triple at a time."""
    for x, y, z in itertools.product(range(X.n), repeat=3):
        if X.lact[z, X.lip[x, y]] != X.ract[x, X.rip[y, z]]:
            return False
    return True


@pytest.fixture(scope="module")
def diagonal(two):
    # 2 x 2 with the same scalar action and coordinate inner product on both sides
    H = free_module(two, 2).H
    return tn.HilbertBimodule(two, two, H.lat, H.act, H.act, H.ip, H.ip)


# ------------------------------------------------------------ imprimitivity


@pytest.mark.parametrize("name", ["two_bi", "chain3_bi", "col2"])
def test_catalog_bimodules_are_imprimitivity(name):
    X = cat(name)
    imp = mo.verify_imprimitivity(X)
    assert imp.verified
    assert [r.law for r in imp.certificate] == list(mo.BIMODULE_LAWS)
    assert linking_holds(X)


def test_diagonal_square_fails_only_linking(diagonal):
    imp = mo.verify_imprimitivity(diagonal)
    assert [(r.law, r.witness) for r in imp.failed()] == [("linking", ("(0,1)", "(0,1)", "(1,0)"))]
    assert not linking_holds(diagonal)


def test_missing_inner_product_is_reported(two):
    R = tn.regular_bimodule(two)
    X = tn.HilbertBimodule(two, two, R.lat, R.lact, R.ract, None, R.rip)
    imp = mo.verify_imprimitivity(X)
    assert not imp.verified
    assert imp.failed()[-1].law == "inner-products"


def test_conjugate_of_imprimitivity_is_imprimitivity():
    X = cat("col2")
    Xc = tn.conjugate(X)
    assert mo.verify_imprimitivity(Xc).verified
    assert (Xc.A.n, Xc.B.n) == (X.B.n, X.A.n)


def test_opposite_bimodule_stays_imprimitivity():
    X = cat("col2")
    Xd = mo.opposite_bimodule(X)
    assert oracle.bimodule_ok(_triple(Xd.A), _triple(Xd.B), Xd.lat.join, Xd.lact, Xd.ract, Xd.lip, Xd.rip, "hilbert")
    assert mo.verify_imprimitivity(Xd).verified


# ------------------------------------------------------------- witnesses


@pytest.mark.parametrize("name", ["two_bi", "chain3_bi", "col2"])
def test_morita_witness_tensors_collapse(name):
    X = cat(name)
    W = mo.morita_witness(X)
    assert W.verified
    assert (W.left_tensor.n, W.right_tensor.n) == (X.A.n, X.B.n)


def test_matrix_witness_small(two):
    W = mo.canonical_matrix_witness(two, 1)
    assert W.verified and W.left_tensor.n == 2


def test_matrix_witness_two_by_two(two, mat2):
    M2, codec = mat2
    X = mo.canonical_matrix_bimodule(two, 2)
    W = mo.morita_witness(X)
    assert W.verified
    assert (W.left_tensor.n, W.right_tensor.n) == (16, 2)
    code = {tuple(int(v) for v in X.lat.labels[i].strip("()").split(",")): i for i in range(X.n)}
    e1, e2 = code[(1, 0)], code[(0, 1)]
    assert X.rip[e1, e2] == 0
    assert X.rip[e1, e1] == 1
    assert codec.decode(int(X.lip[e1, e2])) == ((0, 1), (0, 0))


def test_hilbert_two_module_witness_on_diamond():
    H = mo.hilbert2_witness(sl.diamond(), (3, 2, 1, 0))
    assert H.witness.verified
    assert H.q0_matches
    assert H.K.n == 16 and H.theta_count == 10
    M2, _ = qq.matrix_quantale(qq.two(), 2)
    assert qq.quantale_iso_search(H.K, M2) is not None


def test_hilbert_two_module_witness_on_two():
    H = mo.hilbert2_witness(sl.two(), (1, 0))
    assert H.witness.verified
    assert qq.quantale_iso_search(H.K, qq.two()) is not None


def test_theta_count_on_chain3():
    S, d = sl.chain3(), (2, 1, 0)
    L = S.L

    def ip(m, x):
        return 0 if L[x][d[m]] else 1

    maps = {tuple(n if ip(m, x) else 0 for x in range(3)) for n in range(3) for m in range(3)}
    assert len(maps) == 5
    assert mo.theta_generator_count(S, d) == 5


def test_hilbert2_needs_a_strict_duality():
    with pytest.raises(Exception):
        mo.hilbert2_bimodule(sl.chain3(), (1, 1, 0))


# ----------------------------------------------------------------- centers


@pytest.mark.parametrize("A,size", [(qq.two(), 2), (qq.chain3_frame(), 3), (qq.matrix_quantale(qq.two(), 2)[0], 2)],
                         ids=["two", "chain3", "M2"])
def test_center_sizes_and_routes(A, size):
    C = mo.center(A)
    assert C.Q.n == size
    assert mo.center(A, method="general").maps == C.maps
    assert C.Q.commutative
    assert mo.misa_check(A).agree


def test_center_unital_route_needs_a_unit():
    A = qq.validate_quantale(sl.chain3(), np.zeros((3, 3), dtype=int), [0, 1, 2])
    with pytest.raises(ValueError):
        mo.center_maps_unital(A)
    C = mo.center(A)
    assert C.Q.n == len(mo.center_maps_general(A))


@pytest.mark.parametrize("name", ["two_bi", "chain3_bi", "col2"])
def test_center_transport(name):
    X = cat(name)
    ct = mo.center_transport(X)
    assert ct.is_iso and ct.roundtrip
    ident_a = ct.CA.index[tuple(range(X.A.n))]
    ident_b = ct.CB.index[tuple(range(X.B.n))]
    assert ct.gamma[ident_a] == ident_b


def test_transport_probe_rejects_noncentral_maps(two):
    M2, codec = qq.matrix_quantale(two, 2)
    X = mo.canonical_matrix_bimodule(two, 2)
    e22 = codec.encode([[0, 0], [0, 1]])
    f = tuple(M2.M[e22][r] for r in range(M2.n))
    with pytest.raises(mo.IllDefined):
        mo.gamma(X, f)


def test_commutative_iso_on_chain3():
    X = cat("chain3_bi")
    assert mo.commutative_iso(X) == (0, 1, 2)
    with pytest.raises(ValueError):
        mo.commutative_iso(cat("col2"))


# ------------------------------------------------------------------ search


@pytest.mark.parametrize("pair,where", [(("two", "two"), (2, 0)), (("M2", "two"), (4, 0)), (("two", "M2"), (4, 0))])
def test_search_finds_a_witness(pair, where, two, M2):
    Q = {"two": two, "M2": M2}
    r = mo.morita_search(Q[pair[0]], Q[pair[1]], 4)
    assert r.found is not None and r.found.verified
    assert r.lattice == where
    assert linking_holds(r.found.X)


def test_search_exhausts_chain3_against_two(chain3, two):
    r = mo.morita_search(chain3, two, 4)
    assert r.found is None
    cert = r.certificate.to_json()
    assert cert["lattices"] == {"1": 1, "2": 1, "3": 1, "4": 2}
    assert cert["counts"]["verified"] == 0
    assert cert["counts"]["right_actions"] == 32


def test_search_is_independent_of_workers(two, M2):
    a = mo.morita_search(M2, two, 4, workers=1)
    b = mo.morita_search(M2, two, 4, workers=2)
    assert a.certificate.to_json() == b.certificate.to_json()
    assert a.lattice == b.lattice
    assert np.array_equal(a.found.X.lact, b.found.X.lact)


# -------------------------------------------------------------- properties


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["two_bi", "chain3_bi", "col2"]), st.integers(0, 2**16))
def test_gamma_is_stable_under_probe_order(name, seed):
    X = cat(name)
    CA = mo.center(X.A)
    for f in CA.maps:
        assert mo.gamma(X, f, seed) == mo.gamma(X, f, 0)
