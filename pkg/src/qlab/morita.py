"""Imprimitivity bimodules, centers and their transport, and the search for
Morita witnesses between small quantales."""
from __future__ import annotations

import itertools
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .budget import Budget, BudgetExceeded, default_budget
from .hilbmod import (
    HilbertModule,
    QModule,
    check_inner,
    compact_quantale,
    duality_module,
    is_adjointable,
    iter_actions,
    iter_inner_products,
    iter_module_maps,
    module_iso_search,
    regular_module,
    star_adjoint,
    theta,
)
from .laws import StructureError, Violation
from .quantale import InvQuantale, endo_quantales, matrix_quantale, opposite, quantale_iso_search, two
from .suplat import SupLattice, generate_lattices, iter_latmap_values, lattice_of_tuples, product_lattice
from .tensor import (
    HilbertBimodule,
    IsoReport,
    TensorModule,
    check_bimodule,
    conjugate,
    interior_tensor,
    regular_bimodule,
    standard_iso,
)

# ------------------------------------------------------------ imprimitivity


@dataclass
class LawResult:
    law: str
    passed: bool
    witness: tuple = ()
    detail: str = ""

    def to_json(self):
        return {"law": self.law, "passed": self.passed, "witness": [str(w) for w in self.witness],
                "detail": self.detail}


@dataclass
class ImprimitivityBimodule:
    X: HilbertBimodule
    certificate: list[LawResult]

    @property
    def verified(self) -> bool:
        return all(r.passed for r in self.certificate)

    def failed(self) -> list[LawResult]:
        return [r for r in self.certificate if not r.passed]


BIMODULE_LAWS = ("bimodule-laws", "left-inner-product", "right-inner-product",
                 "left-separated", "left-m-regular", "left-full",
                 "right-separated", "right-m-regular", "right-full", "linking")


def verify_imprimitivity(X: HilbertBimodule) -> ImprimitivityBimodule:
    """Exhaustively check every imprimitivity law; the certificate lists each with its witness."""
    cert = []
    vs = check_bimodule(X)
    structural = [v for v in vs if not v.law.startswith(("LeftIP", "RightIP"))]
    cert.append(_law("bimodule-laws", structural))
    if X.lip is None or X.rip is None:
        missing = "left" if X.lip is None else "right"
        cert.append(LawResult("inner-products", False, (), f"no {missing} inner product"))
        return ImprimitivityBimodule(X, cert)
    cert.append(_law("left-inner-product", [v for v in vs if v.law.startswith("LeftIP")]))
    cert.append(_law("right-inner-product", [v for v in vs if v.law.startswith("RightIP")]))
    if structural:
        return ImprimitivityBimodule(X, cert)
    for side in ("left", "right"):
        H = getattr(X, side)
        chk = check_inner(H.mod, H.ip)
        cert.append(_law(f"{side}-separated", [chk.separation] if chk.separation else []))
        mod = H.mod
        w = ()
        if not mod.essential:
            w = (sorted(set(range(X.n)) - set(mod.ess))[0],)
        elif not mod.separated:
            from .hilbmod import _first_duplicate

            w = _first_duplicate(mod.X)
        cert.append(LawResult(f"{side}-m-regular", mod.m_regular, tuple(X.labels[i] for i in w),
                              "" if mod.m_regular else ("not essential" if not mod.essential else "not separated")))
        Q = H.A
        missing = sorted(set(range(Q.n)) - set(H.values))
        cert.append(LawResult(f"{side}-full", not missing, tuple(Q.labels[m] for m in missing[:1]),
                              "" if not missing else "not a join of inner-product values"))
    # _A<x,y> . z = x <> <y,z>_B
    L, R, P, Q = X.lact, X.ract, X.lip, X.rip
    lhs = L[np.arange(X.n)[None, None, :], P[:, :, None]]  # [x, y, z]
    rhs = R[np.arange(X.n)[:, None, None], Q[None, :, :]]
    bad = np.argwhere(lhs != rhs)
    w = tuple(X.labels[i] for i in bad[0]) if len(bad) else ()
    cert.append(LawResult("linking", not len(bad), w, "" if not len(bad) else "_A<x,y>.z != x<><y,z>_B"))
    return ImprimitivityBimodule(X, cert)


def _law(name: str, vs: Sequence[Violation]) -> LawResult:
    if not vs:
        return LawResult(name, True)
    v = vs[0]
    return LawResult(name, False, v.witness, str(v))


@dataclass
class MoritaWitness:
    imp: ImprimitivityBimodule
    Xc: HilbertBimodule
    left_tensor: TensorModule  # X (x)_B X°
    left_iso: IsoReport  # -> A
    right_tensor: TensorModule  # X° (x)_A X
    right_iso: IsoReport  # -> B
    left_search: tuple | None = None
    right_search: tuple | None = None

    @property
    def X(self) -> HilbertBimodule:
        return self.imp.X

    @property
    def verified(self) -> bool:
        return (self.imp.verified and self.left_iso.unitary and self.right_iso.unitary
                and self.left_search is not None and self.right_search is not None)


def morita_witness(X: HilbertBimodule, budget: Budget | None = None) -> MoritaWitness:
    """Verify X and build both linked tensor products with their canonical maps."""
    imp = verify_imprimitivity(X)
    Xc = conjugate(X)
    TL = interior_tensor(X, Xc, budget)
    TR = interior_tensor(Xc, X, budget)
    lip, rip = X.lip.tolist(), X.rip.tolist()
    left = standard_iso(TL, regular_bimodule(X.A), lambda x, y: lip[x][y])
    right = standard_iso(TR, regular_bimodule(X.B), lambda x, y: rip[x][y])
    ls = module_iso_search(TL.right, regular_module(X.A))
    rs = module_iso_search(TR.right, regular_module(X.B))
    return MoritaWitness(imp, Xc, TL, left, TR, right, ls, rs)


def canonical_matrix_bimodule(A: InvQuantale, n: int, budget: Budget | None = None) -> HilbertBimodule:
    """The column module ``A^n`` between ``M^n(A)`` (left) and ``A`` (right)."""
    Mn, codec = matrix_quantale(A, n, budget)
    lat, cols = product_lattice([A.lat] * n)
    code = {t: i for i, t in enumerate(cols)}
    AM, AS, AJ = A.M, A.S, A.lat.J
    k = len(cols)

    def jall(vals):
        acc = A.bottom
        for v in vals:
            acc = AJ[acc][v]
        return acc

    mats = [codec.decode(m) for m in range(Mn.n)]
    lact = np.empty((k, Mn.n), dtype=np.int64)
    for xi, x in enumerate(cols):
        for mi, m in enumerate(mats):
            lact[xi, mi] = code[tuple(jall(AM[m[i][j]][x[j]] for j in range(n)) for i in range(n))]
    ract = np.array([[code[tuple(AM[v][a] for v in x)] for a in range(A.n)] for x in cols], dtype=np.int64)
    rip = np.array([[jall(AM[AS[u]][v] for u, v in zip(x, y)) for y in cols] for x in cols], dtype=np.int64)
    lip = np.array([[codec.encode([[AM[x[i]][AS[y[j]]] for j in range(n)] for i in range(n)]) for y in cols]
                    for x in cols], dtype=np.int64)
    return HilbertBimodule(Mn, A, lat, lact, ract, lip, rip, name=f"col{n}({A.name})")


def canonical_matrix_witness(A: InvQuantale, n: int, budget: Budget | None = None) -> MoritaWitness:
    return morita_witness(canonical_matrix_bimodule(A, n, budget), budget)


@dataclass
class Hilbert2Witness:
    witness: MoritaWitness
    K: InvQuantale
    compact_maps: list[tuple[int, ...]]
    q0_matches: bool  # K_2(S,S) and Q0(S) have the same maps
    theta_count: int


def hilbert2_bimodule(S: SupLattice, duality: Sequence[int]) -> tuple[HilbertBimodule, list]:
    A = two()
    D = duality_module(A, S, duality)
    if D.level != "strict":
        raise StructureError("strict Hilbert 2-module", [Violation("IP6", (), "duality is not strict")])
    K = compact_quantale(D)
    L = K.as_left_module(D)
    return HilbertBimodule(K.K, A, S, L.act, D.act, L.ip, D.ip, name="S"), K


def theta_generator_count(S: SupLattice, duality: Sequence[int]) -> int:
    """Number of distinct maps ``Theta_{n,m}`` on S with its duality inner product."""
    D = duality_module(two(), S, duality)
    return len({theta(D, D, n, m) for n in range(S.n) for m in range(S.n)})


def hilbert2_witness(S: SupLattice, duality: Sequence[int], budget: Budget | None = None) -> Hilbert2Witness:
    """S with its duality as a ``K_2(S,S)``-2 imprimitivity bimodule, cross-checked against Q0(S)."""
    X, K = hilbert2_bimodule(S, duality)
    E = endo_quantales(S, duality, budget)
    return Hilbert2Witness(morita_witness(X, budget), K.K, K.maps, set(E.q0_maps) == set(K.maps),
                           theta_generator_count(S, duality))


def opposite_bimodule(X: HilbertBimodule) -> HilbertBimodule:
    """X over the opposite quantales: ``a ._d x = a* . x``, ``x <>_d b = x <> b*``, transposed inner products."""
    return HilbertBimodule(
        opposite(X.A), opposite(X.B), X.lat,
        X.lact[:, X.A.star], X.ract[:, X.B.star],
        None if X.lip is None else X.lip.T, None if X.rip is None else X.rip.T,
        name=(X.name + "^d") if X.name else "",
    )


# ------------------------------------------------------------------- center


@dataclass
class Center:
    A: InvQuantale
    maps: list[tuple[int, ...]]
    index: dict
    Q: InvQuantale


def _is_bimodule_endo(A: InvQuantale, f) -> bool:
    M = A.M
    return all(f[M[a][b]] == M[a][f[b]] == M[f[a]][b] for a in range(A.n) for b in range(A.n))


def center_maps_general(A: InvQuantale, budget: Budget | None = None) -> list[tuple[int, ...]]:
    """Join-preserving maps with ``f(a.b) = a.f(b) = f(a).b``."""
    return sorted(f for f in iter_latmap_values(A.lat, A.lat, budget) if _is_bimodule_endo(A, f))


def center_maps_unital(A: InvQuantale) -> list[tuple[int, ...]]:
    """``c . (-)`` for central c (unital A)."""
    if not A.unital:
        raise ValueError("the central-element description needs a unital quantale")
    M = A.M
    central = [c for c in range(A.n) if all(M[c][a] == M[a][c] for a in range(A.n))]
    return sorted({tuple(M[c][a] for a in range(A.n)) for c in central})


def center_maps_adjointable(A: InvQuantale, budget: Budget | None = None) -> list[tuple[int, ...]]:
    """Maps adjointable both on A as a right and as a left Hilbert module over itself."""
    R, L = regular_module(A, "right"), regular_module(A, "left")
    return sorted(f for f in iter_latmap_values(A.lat, A.lat, budget)
                  if is_adjointable(R, R, f) and is_adjointable(L, L, f))


def center(A: InvQuantale, budget: Budget | None = None, method: str = "auto") -> Center:
    """``Cen(A)`` with pointwise join, composition and ``f*(x) = f(x*)*``.

    When A separates itself, the star is cross-checked against the adjoint on A over itself.
    """
    if method == "auto":
        method = "unital" if A.unital else "general"
    maps = center_maps_unital(A) if method == "unital" else center_maps_general(A, budget)
    index = {f: i for i, f in enumerate(maps)}
    S = A.S
    lat = lattice_of_tuples(maps, A.lat, [_center_label(A, f) for f in maps])
    mult = [[index[tuple(f[g[x]] for x in range(A.n))] for g in maps] for f in maps]
    R = regular_module(A)
    separated = check_inner(R.mod, R.ip).separation is None
    star = []
    for f in maps:
        fs = tuple(S[f[S[x]]] for x in range(A.n))
        if separated and star_adjoint(R, R, f).f_star != fs:
            raise AssertionError("center star disagrees with the adjoint")
        star.append(index[fs])
    ident = tuple(range(A.n))
    Q = InvQuantale(lat, mult, star, index.get(ident), f"Cen({A.name})" if A.name else "Cen")
    return Center(A, maps, index, Q)


def _center_label(A: InvQuantale, f) -> str:
    if A.unital:
        return A.labels[f[A.unit]]
    return "f_" + "_".join(A.labels[v] for v in f)


class IllDefined(ValueError):
    def __init__(self, b, first, second):
        super().__init__(f"value at {b} depends on the decomposition: {first} vs {second}")
        self.b, self.first, self.second = b, first, second


def _transport(P: np.ndarray, act, f, target: InvQuantale, rng: random.Random) -> tuple[int, ...]:
    """``g(t) = V{P[x, f(r) . y] : P[x, r . y] <= t}``, probed with a random irredundant sub-decomposition."""
    n = P.shape[0]
    src_n = len(f)
    triples = [(x, r, y) for x in range(n) for r in range(src_n) for y in range(n)]
    vals = [(int(P[x, act[y][r]]), int(P[x, act[y][f[r]]])) for x, r, y in triples]
    J, Lt = target.lat.J, target.lat.L
    out = []
    for t in range(target.n):
        below = [(v, w) for v, w in vals if Lt[v][t]]
        span = target.bottom
        acc = target.bottom
        for v, w in below:
            span = J[span][v]
            acc = J[acc][w]
        if span != t:
            raise ValueError(f"{target.labels[t]} is not a join of inner-product values")
        order = list(range(len(below)))
        rng.shuffle(order)
        keep = list(order)
        for i in order:
            trial = [k for k in keep if k != i]
            if target.join_all(below[k][0] for k in trial) == t:
                keep = trial
        probe = target.join_all(below[k][1] for k in keep)
        if probe != acc:
            raise IllDefined(target.labels[t], acc, probe)
        out.append(acc)
    return tuple(out)


def gamma(X: HilbertBimodule, f: Sequence[int], seed: int = 0) -> tuple[int, ...]:
    """``gamma(f)(V <x_i, r_i . y_i>_B) = V <x_i, f(r_i) . y_i>_B`` for f in Cen(A)."""
    return _transport(X.rip, X.lact.tolist(), f, X.B, random.Random(seed))


def delta(X: HilbertBimodule, g: Sequence[int], seed: int = 0) -> tuple[int, ...]:
    """``delta(g)(V _A<x_i <> s_i, y_i>) = V _A<x_i <> g(s_i), y_i>`` for g in Cen(B)."""
    # _A<x <> s, y> = P[y, x <> s] with P the transposed left inner product
    return _transport(X.lip.T, X.ract.tolist(), g, X.A, random.Random(seed))


@dataclass
class CenterTransport:
    CA: Center
    CB: Center
    gamma: list[int]  # index in CB for each element of CA
    delta: list[int]
    is_iso: bool
    roundtrip: bool
    checks: dict


def center_transport(X: HilbertBimodule, budget: Budget | None = None, seed: int = 0) -> CenterTransport:
    CA, CB = center(X.A, budget), center(X.B, budget)
    g, d = [], []
    for f in CA.maps:
        v = gamma(X, f, seed)
        if v not in CB.index:
            raise ValueError("transported map is not in the center of B")
        g.append(CB.index[v])
    for h in CB.maps:
        v = delta(X, h, seed)
        if v not in CA.index:
            raise ValueError("transported map is not in the center of A")
        d.append(CA.index[v])
    from .quantale import is_quantale_morphism

    checks = {
        "bijective": sorted(g) == list(range(CB.Q.n)) and CA.Q.n == CB.Q.n,
        "morphism": is_quantale_morphism(CA.Q, CB.Q, g),
        "unit": CA.Q.unit is None or g[CA.Q.unit] == CB.Q.unit,
    }
    rt = all(d[g[i]] == i for i in range(CA.Q.n)) and all(g[d[j]] == j for j in range(CB.Q.n))
    return CenterTransport(CA, CB, g, d, all(checks.values()), rt, checks)


def commutative_iso(X: HilbertBimodule, budget: Budget | None = None) -> tuple[int, ...]:
    """For commutative unital A and B, the iso ``A -> B`` through ``a |-> gamma(a . -)``."""
    A, B = X.A, X.B
    if not (A.commutative and B.commutative and A.unital and B.unital):
        raise ValueError("needs commutative unital quantales on both sides")
    out = []
    for a in range(A.n):
        g = gamma(X, tuple(A.M[a][x] for x in range(A.n)))
        out.append(g[B.unit])
    return tuple(out)


@dataclass
class MisaReport:
    adjointable: list[tuple[int, ...]]
    bimodule_endos: list[tuple[int, ...]]

    @property
    def agree(self) -> bool:
        return self.adjointable == self.bimodule_endos


def misa_check(A: InvQuantale, budget: Budget | None = None) -> MisaReport:
    return MisaReport(center_maps_adjointable(A, budget), center_maps_general(A, budget))


# ------------------------------------------------------------------- search


@dataclass
class ExhaustionCertificate:
    max_size: int
    lattices: dict  # size -> number of canonical lattices
    counts: dict  # stage -> candidates examined

    def to_json(self):
        return {"max_size": self.max_size, "lattices": {str(k): v for k, v in self.lattices.items()},
                "counts": dict(self.counts)}


STAGES = ("right_actions", "right_m_regular", "right_inner_products", "left_actions", "left_inner_products",
          "verified")


@dataclass
class SearchResult:
    found: MoritaWitness | None
    certificate: ExhaustionCertificate
    lattice: tuple | None = None  # (size, canonical index)


def _search_one(A: InvQuantale, B: InvQuantale, L: SupLattice, budget: Budget):
    counts = dict.fromkeys(STAGES, 0)
    for ract in iter_actions(B, L, "right", budget):
        counts["right_actions"] += 1
        rmod = QModule(B, L, ract, "right")
        if not rmod.m_regular:
            continue
        counts["right_m_regular"] += 1
        for rip in iter_inner_products(rmod, "hilbert", budget):
            Hr = HilbertModule(rmod, rip, check_inner(rmod, rip).level)
            if not Hr.full:
                continue
            counts["right_inner_products"] += 1
            # left operators: adjointable right-module endomaps
            endo = [f for f in iter_module_maps(Hr, Hr, budget) if is_adjointable(Hr, Hr, f)]
            for lact in iter_actions(A, L, "left", budget, endo=endo):
                if not _left_adjoint_ok(rip, lact, A.star, A.n):
                    continue
                lmod = QModule(A, L, lact, "left")
                if not lmod.m_regular:
                    continue
                counts["left_actions"] += 1
                for lip in _iter_left_ips(A, L, lact, rip, ract, budget):
                    counts["left_inner_products"] += 1
                    X = HilbertBimodule(A, B, L, lact, ract, lip, rip)
                    if verify_imprimitivity(X).verified:
                        counts["verified"] += 1
                        return X, counts
    return None, counts


def _left_adjoint_ok(rip, lact, SA, nA) -> bool:
    for a in range(nA):
        if not (rip[lact[:, a], :] == rip[:, lact[:, SA[a]]]).all():
            return False
    return True


def _iter_left_ips(A: InvQuantale, L: SupLattice, lact, rip, ract, budget: Budget):
    """Left inner products forced by the linking law: ``_A<x,y>`` must act as ``Theta_{x,y}``."""
    n = L.n
    ops = {}
    for a in range(A.n):
        ops.setdefault(tuple(lact[:, a].tolist()), []).append(a)
    ji = L.join_irreducibles
    cand = {}
    for i, x in enumerate(ji):
        for y in ji[i:]:
            th = tuple(int(ract[x, rip[y, z]]) for z in range(n))
            cs = ops.get(th)
            if not cs:
                return
            cand[x, y] = cs
    pairs = sorted(cand)
    total = 1
    for p in pairs:
        total *= len(cand[p])
    budget.check_scan("left inner-product assignments", total)
    below = L.ji_below
    S, JA = A.S, A.lat.J
    for vals in itertools.product(*(cand[p] for p in pairs)):
        v = {}
        ok = True
        for (x, y), a in zip(pairs, vals):
            if x == y and S[a] != a:
                ok = False
                break
            v[x, y] = a
            v[y, x] = S[a]
        if not ok:
            continue
        ip = np.empty((n, n), dtype=np.int64)
        for x in range(n):
            for y in range(n):
                acc = A.bottom
                for i in below[x]:
                    for j in below[y]:
                        acc = JA[acc][v[i, j]]
                ip[x, y] = acc
        chk = check_inner(QModule(A, L, lact, "left"), ip)
        if chk.level in ("hilbert", "strict"):
            yield ip


def _search_task(args):
    A, B, size, idx, L, budget = args
    X, counts = _search_one(A, B, L, budget)
    tables = None
    if X is not None:
        tables = (X.lact, X.ract, X.lip, X.rip)
    return size, idx, tables, counts


def morita_search(A: InvQuantale, B: InvQuantale, max_size: int, budget: Budget | None = None,
                  workers: int = 1) -> SearchResult:
    """Look for an A-B imprimitivity bimodule on carriers of at most ``max_size`` elements.

    Carriers are canonical lattices in generation order; the first witness in
    that order is returned whatever the number of workers.
    """
    budget = budget or default_budget()
    tasks = []
    lattices = {}
    for size in range(1, max_size + 1):
        lats = generate_lattices(size)
        lattices[size] = len(lats)
        for idx, L in enumerate(lats):
            tasks.append((A, B, size, idx, L, budget))
    counts = dict.fromkeys(STAGES, 0)
    hit = None
    if workers <= 1:
        results = map(_search_task, tasks)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_search_task, tasks)
    try:
        for (size, idx, tables, c), task in zip(results, tasks):
            for k in STAGES:
                counts[k] += c[k]
            if tables is not None:
                hit = (size, idx, task[4], tables)
                break
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    cert = ExhaustionCertificate(max_size, lattices, counts)
    if hit is None:
        return SearchResult(None, cert)
    size, idx, L, (lact, ract, lip, rip) = hit
    X = HilbertBimodule(A, B, L, lact, ract, lip, rip, name="X")
    return SearchResult(morita_witness(X, budget), cert, (size, idx))
