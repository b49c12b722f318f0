"""Acceptance suite: one test per criterion, each under its time limit.

Every test prints a single ``criterion N: PASS|FAIL`` line to the terminal.
"""
import contextlib
import io
import itertools
import json
import os
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

import mutants
import oracle
from qlab import hilbmod as hm
from qlab import morita as mo
from qlab import quantale as qq
from qlab import suplat as sl
from qlab import tensor as tn
from qlab.cli.loader import CATALOG, resolve
from qlab.cli.main import main


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def run(n, limit, what):
        start = time.perf_counter()
        ok = False
        try:
            yield
            ok = True
        finally:
            dt = time.perf_counter() - start
            within = limit is None or dt < limit
            bound = "" if limit is None else f" < {limit:g} s"
            with capsys.disabled():
                print(f"\ncriterion {n:>2}: {'PASS' if ok and within else 'FAIL'}  {what}  ({dt:.2f} s{bound})")
        if ok:
            assert within, f"criterion {n} took {dt:.2f} s, limit {limit} s"
    return run


def cli(*argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf), contextlib.redirect_stderr(io.StringIO()):
        code = main(list(argv))
    return code, buf.getvalue()


def same_quantale(A, B):
    return A.n == B.n and np.array_equal(A.mult, B.mult) and np.array_equal(A.star, B.star) \
        and np.array_equal(A.lat.join, B.lat.join)


def catalog_objects(kind):
    out = {}
    for name in CATALOG:
        got = resolve(name, ("suplattice", "quantale", "module", "bimodule"))
        if got.kind == kind:
            out[name] = got.obj
    return out


def hilbert_modules():
    """Catalog right Hilbert modules at the separated level, including right parts of bimodules."""
    mods = {k: v for k, v in catalog_objects("module").items() if v.level in ("hilbert", "strict")}
    for k, X in catalog_objects("bimodule").items():
        mods[k + ".right"] = X.right
    return mods


# --------------------------------------------------------------------------- 1


def test_axiom_suite(criterion):
    with criterion(1, 5, "axiom suite and 20 rejected mutants"):
        for name in mutants.PRIMARY:
            code, out = cli("check", name, "--json")
            assert code == 0 and json.loads(out)["verdict"] == "verified", name
        rejected, seed = 0, 0
        while rejected < 20:
            entry, desc, text = mutants.mutant(seed)
            seed += 1
            expect = mutants.oracle_verdict(text)
            path = f"/tmp/qlab_mutant_{os.getpid()}.qlab"
            with open(path, "w") as f:
                f.write(text)
            code, out = cli("check", path, "--json")
            rep = json.loads(out)
            assert (code == 0) == expect, desc
            if expect:
                continue
            first = next(d for d in rep["definitions"] if not d["passed"])
            assert first["violations"][0]["witness"], desc
            rejected += 1
        os.remove(path)


# --------------------------------------------------------------------------- 2


def test_residuation(criterion):
    with criterion(2, 1, "residuation Galois laws on 2, chain3, M2(2)"):
        for A in (qq.two(), qq.chain3_frame(), qq.matrix_quantale(qq.two(), 2)[0]):
            L, M = A.lat.L, A.M
            for a, c in itertools.product(range(A.n), repeat=2):
                r, l = qq.residuate(A, a, c, "r"), qq.residuate(A, a, c, "l")
                for b in range(A.n):
                    assert L[M[a][b]][c] == L[b][r]
                    assert L[M[b][a]][c] == L[b][l]


# --------------------------------------------------------------------------- 3


def test_compact_operator_laws(criterion, two):
    with criterion(3, 10, "Omega*, Theta* and absorption"):
        mods = dict(catalog_objects("module"))
        for k, X in catalog_objects("bimodule").items():
            mods[k + ".right"] = X.right
        for name, M in mods.items():
            for size in (1, 2):
                F = hm.free_module(M.A, size)
                for mu in itertools.product(range(M.n), repeat=size):
                    om = hm.omega(F, M, mu)
                    want = tuple(F.vector([int(M.ip[m, x]) for m in mu]) for x in range(M.n))
                    assert hm.star_adjoint(F.H, M, om).f_star == want, (name, mu)
        for name, M in hilbert_modules().items():
            adj = [f for f in hm.iter_module_maps(M, M) if hm.is_adjointable(M, M, f)]
            stars = {f: hm.star_adjoint(M, M, f).f_star for f in adj}
            for n, m in itertools.product(range(M.n), repeat=2):
                th = hm.theta(M, M, n, m)
                assert hm.star_adjoint(M, M, th).f_star == hm.theta(M, M, m, n), (name, n, m)
                for f in adj:
                    assert hm.compose(f, th) == hm.theta(M, M, f[n], m)
                    assert hm.compose(th, f) == hm.theta(M, M, n, stars[f][m])


# --------------------------------------------------------------------------- 4


def test_compacts_from_free_modules(criterion, two, diamond_mod):
    with criterion(4, 5, "|K_2(2^J, M)| = |M|^|J|"):
        for M in (hm.regular_module(two), diamond_mod):
            for size in (1, 2):
                F = hm.free_module(two, size)
                K = hm.compact_closure(F.H, M)
                assert len(K) == M.n ** size
                vecs = list(itertools.product(range(M.n), repeat=size))
                om = {mu: hm.omega(F, M, mu) for mu in vecs}
                assert set(om.values()) == set(K)
                J = M.lat.J
                for mu, nu in itertools.product(vecs, repeat=2):
                    joined = tuple(J[a][b] for a, b in zip(mu, nu))
                    assert om[joined] == hm.pointwise_join(M.lat, om[mu], om[nu])


# --------------------------------------------------------------------------- 5


def test_compact_quantale_of_diamond(criterion, diamond_mod):
    with criterion(5, 5, "K_2(diamond) m-regular, diamond full m-regular over it"):
        CQ = hm.compact_quantale(diamond_mod)
        K = CQ.K
        qq.validate_quantale(K.lat, K.mult, K.star)
        assert oracle.quantale_ok(K.lat.join, K.mult, K.star)
        assert K.m_regular
        H = CQ.as_left_module(diamond_mod)
        assert H.mod.m_regular and H.full
        assert H.level in ("hilbert", "strict")
        assert oracle.module_ok(K.lat.join, K.mult, H.lat.join, H.mod.act, "left")
        assert oracle.at_least(
            oracle.inner_level(K.lat.join, K.mult, K.star, H.lat.join, H.mod.act, H.ip, "left"), "hilbert")


# --------------------------------------------------------------------------- 6


def _tensor_pairs():
    lefts = {**catalog_objects("module"), **catalog_objects("bimodule")}
    rights = dict(catalog_objects("bimodule"))
    rights["col2°"] = tn.conjugate(rights["col2"])
    lefts["col2°"] = rights["col2°"]
    out = []
    for (a, X), (b, Y) in itertools.product(lefts.items(), rights.items()):
        B = X.B if isinstance(X, tn.HilbertBimodule) else X.A
        if same_quantale(B, Y.A) and X.n * Y.n <= 16:
            out.append((a, X, b, Y))
    return out


def test_tensor_oracle(criterion):
    with criterion(6, 30, "function tensor vs brute-force oracle"):
        pairs = _tensor_pairs()
        names = {(a, b) for a, _, b, _ in pairs}
        assert {("col2", "col2°"), ("col2°", "col2"), ("diamond", "two_bi")} <= names
        for a, X, b, Y in pairs:
            T = tn.interior_tensor(X, Y)
            assert tn.oracle_matches(T, tn.tensor_oracle(X, Y)), (a, b)


# --------------------------------------------------------------------------- 7


def test_standard_isomorphism(criterion):
    with criterion(7, 5, "M (x) A = M unitarily; non-m-regular rejected"):
        for name, M in hilbert_modules().items():
            if M.mod.m_regular:
                _, rep = tn.unit_iso(M)
                assert rep.unitary, name
        _, rep = tn.unit_iso(resolve("trivial_chain3", ("module",)).obj)
        assert not rep.unitary and "essential" in rep.preconditions
        _, rep = tn.unit_iso(resolve("degenerate_chain3", ("module",)).obj)
        assert not rep.unitary and "hilbert" in rep.preconditions


# --------------------------------------------------------------------------- 8


def test_matrix_witness(criterion, two, M2):
    with criterion(8, 60, "canonical matrix witness for M2(2) and 2"):
        W = mo.canonical_matrix_witness(two, 2)
        assert W.imp.verified
        assert W.left_iso.unitary and W.right_iso.unitary
        assert tn.tensor_iso_search(W.right_tensor, tn.interior_tensor(tn.regular_bimodule(two),
                                                                       tn.regular_bimodule(two))) is not None
        assert hm.module_iso_search(W.left_tensor.right, hm.regular_module(M2)) is not None
        assert W.verified


# --------------------------------------------------------------------------- 9


def test_centers(criterion, two, chain3, M2):
    with criterion(9, 30, "centers and transport along the matrix witness"):
        for A, target in ((two, two), (chain3, chain3), (M2, two)):
            assert qq.quantale_iso_search(mo.center(A).Q, target) is not None
        ct = mo.center_transport(mo.canonical_matrix_bimodule(two, 2))
        assert ct.is_iso and ct.roundtrip
        assert qq.is_quantale_morphism(ct.CA.Q, ct.CB.Q, ct.gamma)
        assert all(ct.delta[ct.gamma[i]] == i for i in range(ct.CA.Q.n))


# -------------------------------------------------------------------------- 10


def test_chain3_not_morita_equivalent_to_two(criterion, chain3, two):
    with criterion(10, 120, "chain3 vs 2: search and iso search both exhaust"):
        r = mo.morita_search(chain3, two, 4)
        assert r.found is None
        assert r.certificate.max_size == 4
        assert qq.quantale_iso_search(chain3, two) is None


# -------------------------------------------------------------------------- 11


def test_center_two_routes(criterion, two, chain3, M2):
    with criterion(11, 30, "adjointable vs bimodule-endo centers coincide"):
        for A in (two, chain3, M2):
            rep = mo.misa_check(A)
            assert rep.agree and rep.adjointable


# -------------------------------------------------------------------------- 12


def _targets(A, max_size=4):
    for k in range(1, max_size + 1):
        for L in sl.generate_lattices(k):
            for act in hm.iter_actions(A, L):
                Z = hm.QModule(A, L, act, "right")
                if Z.m_regular:
                    yield Z


def test_kernel_pair_coequalizer(criterion, two):
    with criterion(12, 60, "p_M is the coequalizer of its kernel pair presentation"):
        M = hm.regular_module(two)
        gm = hm.generator_maps(M)
        P, p = gm.F.H, gm.p
        kp = hm.kernel_pair_presentation(P, M, p)
        assert hm.compose(p, kp.u) == hm.compose(p, kp.v)
        Q = hm.coequalizer(P, kp.u, kp.v)
        for x, y in itertools.product(range(P.n), repeat=2):
            assert (Q.q[x] == Q.q[y]) == (p[x] == p[y])
        cones = 0
        for Z in _targets(two):
            for f in hm.iter_module_maps(P, Z):
                if hm.compose(f, kp.u) != hm.compose(f, kp.v):
                    continue
                cones += 1
                through = [g for g in hm.iter_module_maps(M, Z) if hm.compose(g, p) == tuple(f)]
                assert len(through) == 1
        assert cones > 0


# -------------------------------------------------------------------------- 13


COMMANDS = [
    *[("check", name) for name in mutants.PRIMARY],
    ("residuate", "chain3", "m", "m"),
    ("tensor", "diamond", "two", "--oracle"),
    ("tensor", "trivial_chain3", "two"),
    ("compact", "diamond"),
    ("center", "mat2_two"),
    ("matrix", "two", "2"),
    ("morita", "verify", "mat2_two", "two", "col2"),
    ("iso", "chain3", "two"),
    ("catalog", "list"),
]
SEARCHES = [("morita", "search", "chain3", "two", "--max-size", "4"),
            ("morita", "search", "mat2_two", "two", "--max-size", "4")]


def _run_cli(argv, seed):
    env = dict(os.environ, PYTHONHASHSEED=str(seed))
    p = subprocess.run([sys.executable, "-m", "qlab", *argv, "--json"], capture_output=True, env=env)
    return p.returncode, p.stdout


def test_determinism(criterion):
    with criterion(13, None, "byte-identical JSON over 3 runs and workers 1, 4"):
        jobs = [(c, s) for c in COMMANDS for s in (0, 1, 2)]
        jobs += [(c + ("--workers", w), s) for c in SEARCHES for w in ("1", "4") for s in (0, 1, 2)]
        with ThreadPoolExecutor(8) as ex:
            res = list(ex.map(lambda j: _run_cli(*j), jobs))
        by_cmd = {}
        for (cmd, _), out in zip(jobs, res):
            key = tuple(a for a in cmd if a not in ("--workers", "1", "4")) if cmd[:2] == ("morita", "search") else cmd
            by_cmd.setdefault(key, set()).add(out)
        for cmd, outs in by_cmd.items():
            assert len(outs) == 1, cmd
            code, out = next(iter(outs))
            assert code in (0, 1) and json.loads(out)
