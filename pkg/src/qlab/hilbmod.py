"""Modules and Hilbert modules over a finite involutive quantale.

Action tables are stored uniformly as ``act[m, a]``: ``m <> a`` for right
modules and ``a . m`` for left modules. Inner products are ``ip[m, n]``, an
element of A, linear in the second argument for right modules
(``<m,n>.a = <m, n<>a>``) and in the first for left ones
(``a.<m,n> = <a.m, n>``).

Levels: ``pre`` satisfies conditions (1)-(4) (module linearity, join-linearity
in both arguments, hermitian symmetry), ``hilbert`` adds separation, ``strict``
adds ``<m,m> = 0 => m = 0``. "Full" means every element of A is a join of
inner-product values.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .budget import Budget, default_budget
from .laws import LawLog, StructureError, Violation
from .quantale import InvQuantale
from .suplat import (
    Signature,
    SupLattice,
    _frozen,
    find_isomorphism,
    is_join_preserving,
    iter_latmap_values,
    join_closure,
    lattice_of_tuples,
    product_lattice,
    sublattice,
)

LEVELS = ("pre", "hilbert", "strict")


class NotAdjointable(ValueError):
    def __init__(self, n: int):
        super().__init__(f"no *-adjoint value exists at {n}")
        self.witness = n


class QModule:
    def __init__(self, A: InvQuantale, lat: SupLattice, act, side: str = "right"):
        if side not in ("right", "left"):
            raise ValueError(side)
        self.A = A
        self.lat = lat
        self.act = _frozen(act)
        self.side = side
        self.n = lat.n

    def __repr__(self):
        return f"QModule({self.side}, n={self.n}, over {self.A!r})"

    @cached_property
    def X(self) -> list[list[int]]:
        return self.act.tolist()

    @cached_property
    def ess(self) -> list[int]:
        """The essential part: join-closure of all ``m <> a``."""
        gens = sorted(set(int(v) for v in self.act.ravel()))
        return sorted(join_closure(gens, lambda a, b: self.lat.J[a][b], self.lat.bottom))

    @cached_property
    def essential(self) -> bool:
        return len(self.ess) == self.n

    @cached_property
    def separated(self) -> bool:
        return len({tuple(r) for r in self.X}) == self.n

    @property
    def m_regular(self) -> bool:
        return self.essential and self.separated

    @cached_property
    def faithful(self) -> bool:
        return len({tuple(c) for c in self.act.T.tolist()}) == self.A.n


class HilbertModule:
    def __init__(self, mod: QModule, ip, level: str):
        self.mod = mod
        self.ip = _frozen(ip)
        self.level = level
        self.name = ""

    def __repr__(self):
        return f"HilbertModule({self.side}, n={self.n}, level={self.level}, over {self.A!r})"

    A = property(lambda self: self.mod.A)
    lat = property(lambda self: self.mod.lat)
    act = property(lambda self: self.mod.act)
    X = property(lambda self: self.mod.X)
    side = property(lambda self: self.mod.side)
    n = property(lambda self: self.mod.n)
    labels = property(lambda self: self.mod.lat.labels)

    @cached_property
    def P(self) -> list[list[int]]:
        return self.ip.tolist()

    @cached_property
    def values(self) -> list[int]:
        """Join-closure of the inner-product values."""
        gens = sorted(set(int(v) for v in self.ip.ravel()))
        return sorted(join_closure(gens, self.A.join, self.A.bottom))

    @property
    def full(self) -> bool:
        return len(self.values) == self.A.n

    @property
    def m_regular(self) -> bool:
        return self.mod.m_regular

    def key(self):
        return (self.side, self.A.key(), self.lat.key(), self.act.tobytes(), self.ip.tobytes())


# --------------------------------------------------------------- validation


def check_module(A: InvQuantale, lat: SupLattice, act, side: str = "right") -> list[Violation]:
    log = LawLog()
    n = lat.n
    try:
        X = np.asarray(act, dtype=np.int64)
    except (TypeError, ValueError):
        return [Violation("Malformed", detail="action table is not an integer table")]
    if X.shape != (n, A.n) or ((X < 0) | (X >= n)).any():
        return [Violation("Malformed", detail="action table has wrong shape or range")]
    MA, JA, JM = A.mult, A.lat.join, lat.join
    # (M1)
    for a in range(A.n):
        for b in range(A.n):
            if side == "right":
                bad = np.flatnonzero(X[:, MA[a, b]] != X[X[:, a], b])
            else:
                bad = np.flatnonzero(X[:, MA[a, b]] != X[X[:, b], a])
            if len(bad):
                log.fail("M1", int(bad[0]), a, b)
                break
        if log.failed("M1"):
            break
    # (M2): join-preserving in the module argument, including the empty join
    for a in range(A.n):
        if X[lat.bottom, a] != lat.bottom:
            log.fail("M2", lat.bottom, a, detail="0 <> a = 0")
            break
        bad = np.argwhere(X[JM, a] != JM[X[:, a][:, None], X[:, a][None, :]])
        if len(bad):
            m1, m2 = bad[0]
            log.fail("M2", int(m1), int(m2), a)
            break
    # (M3): join-preserving in the quantale argument
    for m in range(n):
        if X[m, A.bottom] != lat.bottom:
            log.fail("M3", m, A.bottom, detail="m <> 0 = 0")
            break
        bad = np.argwhere(X[m, JA] != JM[X[m, :][:, None], X[m, :][None, :]])
        if len(bad):
            a, b = bad[0]
            log.fail("M3", m, int(a), int(b))
            break
    return log.violations


def validate_module(A: InvQuantale, lat: SupLattice, act, side: str = "right") -> QModule:
    vs = check_module(A, lat, act, side)
    if vs:
        raise StructureError(f"{side} module", vs)
    return QModule(A, lat, act, side)


@dataclass
class InnerCheck:
    pre: list[Violation]
    separation: Violation | None
    strictness: Violation | None

    @property
    def level(self) -> str | None:
        if self.pre:
            return None
        if self.separation is not None:
            return "pre"
        if self.strictness is not None:
            return "hilbert"
        return "strict"


def check_inner(mod: QModule, ip) -> InnerCheck:
    A, L = mod.A, mod.lat
    n = mod.n
    log = LawLog()
    try:
        P = np.asarray(ip, dtype=np.int64)
    except (TypeError, ValueError):
        return InnerCheck([Violation("Malformed", detail="inner product is not an integer table")], None, None)
    if P.shape != (n, n) or ((P < 0) | (P >= A.n)).any():
        return InnerCheck([Violation("Malformed", detail="inner product has wrong shape or range")], None, None)
    X, MA, JA, JM, SA = mod.act, A.mult, A.lat.join, L.join, A.star
    # (1)
    for a in range(A.n):
        if mod.side == "right":
            bad = np.argwhere(MA[P, a] != P[:, X[:, a]])
        else:
            bad = np.argwhere(MA[a, P] != P[X[:, a], :])
        if len(bad):
            m, k = bad[0]
            log.fail("IP1", int(m), int(k), a, detail="module linearity")
            break
    # (2) first argument, (3) second argument
    if (P[L.bottom, :] != A.bottom).any():
        log.fail("IP2", L.bottom, int(np.flatnonzero(P[L.bottom, :] != A.bottom)[0]), detail="<0,n> = 0")
    else:
        for k in range(n):
            bad = np.argwhere(P[JM, k] != JA[P[:, k][:, None], P[:, k][None, :]])
            if len(bad):
                m1, m2 = bad[0]
                log.fail("IP2", int(m1), int(m2), k)
                break
    if (P[:, L.bottom] != A.bottom).any():
        log.fail("IP3", int(np.flatnonzero(P[:, L.bottom] != A.bottom)[0]), L.bottom, detail="<m,0> = 0")
    else:
        for m in range(n):
            bad = np.argwhere(P[m, JM] != JA[P[m, :][:, None], P[m, :][None, :]])
            if len(bad):
                k1, k2 = bad[0]
                log.fail("IP3", m, int(k1), int(k2))
                break
    # (4)
    bad = np.argwhere(SA[P] != P.T)
    if len(bad):
        m, k = bad[0]
        log.fail("IP4", int(m), int(k), detail="<m,n>* = <n,m>")
    sep = None
    cols = {}
    vecs = P.T if mod.side == "right" else P
    for m in range(n):
        t = tuple(vecs[m].tolist())
        if t in cols:
            sep = Violation("IP5", (cols[t], m), "inner product does not separate")
            break
        cols[t] = m
    strict = None
    for m in range(n):
        if m != L.bottom and P[m, m] == A.bottom:
            strict = Violation("IP6", (m,), "<m,m> = 0 for m != 0")
            break
    return InnerCheck(log.violations, sep, strict)


def validate_hilbert(mod: QModule, ip, level: str | None = None) -> HilbertModule:
    """Classify ``(mod, ip)``; raise if (1)-(4) fail or ``level`` is requested but not reached."""
    chk = check_inner(mod, ip)
    if chk.pre:
        raise StructureError("pre-Hilbert module", chk.pre)
    got = chk.level
    if level is not None:
        need = LEVELS.index(level)
        if LEVELS.index(got) < need:
            missing = [v for v in (chk.separation, chk.strictness)[: need] if v is not None]
            raise StructureError(f"{level} Hilbert module", missing)
    return HilbertModule(mod, ip, got)


@dataclass
class ModuleReport:
    level: str
    essential: bool
    separated: bool
    full: bool
    faithful: bool
    essential_witness: tuple = ()
    separated_witness: tuple = ()
    full_witness: tuple = ()
    faithful_witness: tuple = ()
    separation: Violation | None = None
    strictness: Violation | None = None

    @property
    def m_regular(self) -> bool:
        return self.essential and self.separated


def module_report(H: HilbertModule) -> ModuleReport:
    mod = H.mod
    chk = check_inner(mod, H.ip)
    ess_w = () if mod.essential else (sorted(set(range(H.n)) - set(mod.ess))[0],)
    sep_w = _first_duplicate(mod.X)
    full_w = () if H.full else (sorted(set(range(H.A.n)) - set(H.values))[0],)
    faith_w = _first_duplicate(mod.act.T.tolist())
    return ModuleReport(
        level=H.level,
        essential=mod.essential,
        separated=mod.separated,
        full=H.full,
        faithful=mod.faithful,
        essential_witness=ess_w,
        separated_witness=sep_w,
        full_witness=full_w,
        faithful_witness=faith_w,
        separation=chk.separation,
        strictness=chk.strictness,
    )


def _first_duplicate(rows) -> tuple:
    seen = {}
    for i, r in enumerate(rows):
        t = tuple(r)
        if t in seen:
            return (seen[t], i)
        seen[t] = i
    return ()


# ---------------------------------------------------------- basic modules


def regular_module(A: InvQuantale, side: str = "right") -> HilbertModule:
    """A over itself: ``<a,b> = a*.b`` (right) or ``a.b*`` (left)."""
    M, S = A.mult, A.star
    if side == "right":
        act = M
        ip = M[S[:, None], np.arange(A.n)[None, :]]
    else:
        act = M.T  # act[m, a] = a . m
        ip = M[np.arange(A.n)[:, None], S[None, :]]
    mod = QModule(A, A.lat, act, side)
    return HilbertModule(mod, ip, check_inner(mod, ip).level)


def duality_module(A: InvQuantale, lat: SupLattice, duality: Sequence[int]) -> HilbertModule:
    """A sup-lattice with duality d as a right Hilbert module over the quantale 2.

    ``<m,n> = 0`` iff ``n <= d(m)``; the action is ``m <> 1 = m``.
    A must be the two-element quantale (bottom 0-index, top 1-index in its lattice).
    """
    if A.n != 2:
        raise ValueError("duality modules live over the two-element quantale")
    z, o = A.bottom, A.top
    act = np.empty((lat.n, 2), dtype=np.int64)
    act[:, z] = lat.bottom
    act[:, o] = np.arange(lat.n)
    ip = np.array(
        [[z if lat.L[n][duality[m]] else o for n in range(lat.n)] for m in range(lat.n)], dtype=np.int64
    )
    mod = QModule(A, lat, act, "right")
    return validate_hilbert(mod, ip)


def residuate_module(M: QModule | HilbertModule, x: int, y: int, which: str) -> int:
    """``->R``: ``m ->R n = V{a : m<>a <= n}`` (in A); ``->L``: ``a ->L n = V{m : m<>a <= n}`` (in M)."""
    mod = M.mod if isinstance(M, HilbertModule) else M
    A, L, X = mod.A, mod.lat.L, mod.X
    if which == "R":
        return A.join_all(a for a in range(A.n) if L[X[x][a]][y])
    if which == "L":
        return mod.lat.join_all(m for m in range(mod.n) if L[X[m][x]][y])
    raise ValueError(f"which must be 'R' or 'L', not {which!r}")


# ------------------------------------------------------------------- maps


def is_module_map(M: HilbertModule | QModule, N: HilbertModule | QModule, f: Sequence[int]) -> bool:
    if not is_join_preserving(M.lat, N.lat, f):
        return False
    f = np.asarray(f)
    return bool((f[M.act] == N.act[f, :]).all())


def iter_module_maps(M, N, budget: Budget | None = None) -> Iterator[tuple[int, ...]]:
    for vals in iter_latmap_values(M.lat, N.lat, budget):
        if is_module_map(M, N, vals):
            yield vals


def compose(f: Sequence[int], g: Sequence[int]) -> tuple[int, ...]:
    """``f o g``."""
    return tuple(f[x] for x in g)


@dataclass(frozen=True)
class AdjointablePair:
    f: tuple[int, ...]
    f_star: tuple[int, ...]


def _column_index(M: HilbertModule) -> dict:
    idx: dict = {}
    for p, col in enumerate(M.ip.T.tolist()):
        idx.setdefault(tuple(col), []).append(p)
    return idx


def star_adjoint(M: HilbertModule, N: HilbertModule, f: Sequence[int]) -> AdjointablePair:
    """``f*(n) = V P_n`` with ``P_n = {p : <m,p> = <f(m),n> for all m}``; raises NotAdjointable."""
    cols = _column_index(M)
    target = N.ip[np.asarray(f), :]  # target[m, n] = <f(m), n>
    out = []
    for n in range(N.n):
        ps = cols.get(tuple(target[:, n].tolist()))
        if not ps:
            raise NotAdjointable(n)
        top = M.lat.join_all(ps)
        assert top in ps, "join of *-adjoint values is not itself a *-adjoint value"
        out.append(top)
    return AdjointablePair(tuple(int(x) for x in f), tuple(out))


def is_adjointable(M: HilbertModule, N: HilbertModule, f: Sequence[int]) -> bool:
    try:
        star_adjoint(M, N, f)
    except NotAdjointable:
        return False
    return True


def adjoint_pair_holds(M: HilbertModule, N: HilbertModule, f, g) -> bool:
    """``<f(m), n> = <m, g(n)>`` for all m, n."""
    return bool((N.ip[np.asarray(f), :] == M.ip[:, np.asarray(g)]).all())


def iso_module_signature(H: HilbertModule) -> Signature:
    unary = [H.act[:, a] for a in range(H.A.n)]
    colors = [(c, int(H.ip[m, m])) for m, c in enumerate(H.lat.colors)]
    return Signature(H.n, binary=[H.lat.join], unary=unary, valued=[H.ip], colors=colors)


def module_iso_search(M: HilbertModule, N: HilbertModule) -> tuple[int, ...] | None:
    """A unitary: bijection preserving joins, action and inner product (requires same A tables)."""
    if not M.A.same_as(N.A) or M.side != N.side:
        return None
    return find_isomorphism(iso_module_signature(M), iso_module_signature(N))


# --------------------------------------------------------------- products


@dataclass
class Biproduct:
    H: HilbertModule
    factors: list[HilbertModule]
    tuples: list[tuple[int, ...]]
    code: dict

    def injection(self, j: int) -> tuple[int, ...]:
        zeros = [F.lat.bottom for F in self.factors]
        out = []
        for x in range(self.factors[j].n):
            t = list(zeros)
            t[j] = x
            out.append(self.code[tuple(t)])
        return tuple(out)

    def projection(self, j: int) -> tuple[int, ...]:
        return tuple(t[j] for t in self.tuples)


def biproduct(factors: Sequence[HilbertModule], budget: Budget | None = None, side: str | None = None) -> Biproduct:
    """Cartesian product with componentwise action and ``<(m_j),(n_j)> = V_j <m_j,n_j>``."""
    budget = budget or default_budget()
    A = factors[0].A
    size = 1
    for F in factors:
        if not F.A.same_as(A):
            raise ValueError("biproduct factors must share the quantale")
        size *= F.n
    budget.check_carrier("biproduct", size)
    lat, tuples = product_lattice([F.lat for F in factors])
    code = {t: i for i, t in enumerate(tuples)}
    T = np.array(tuples, dtype=np.int64).reshape(len(tuples), len(factors))
    act = np.empty((size, A.n), dtype=np.int64)
    for a in range(A.n):
        cols = np.stack([F.act[T[:, j], a] for j, F in enumerate(factors)], axis=1)
        act[:, a] = [code[tuple(r)] for r in cols.tolist()]
    JA = A.lat.join
    ip = np.full((size, size), A.bottom, dtype=np.int64)
    for j, F in enumerate(factors):
        ip = JA[ip, F.ip[T[:, j][:, None], T[:, j][None, :]]]
    mod = QModule(A, lat, act, side or factors[0].side)
    H = HilbertModule(mod, ip, check_inner(mod, ip).level)
    return Biproduct(H, list(factors), tuples, code)


@dataclass
class FreeModule:
    """``A^X`` with unit vectors ``e_x`` (for unital A)."""

    A: InvQuantale
    size: int
    bp: Biproduct

    @property
    def H(self) -> HilbertModule:
        return self.bp.H

    def vector(self, coords: Sequence[int]) -> int:
        return self.bp.code[tuple(coords)]

    def coords(self, v: int) -> tuple[int, ...]:
        return self.bp.tuples[v]

    def unit_vector(self, x: int) -> int:
        if self.A.unit is None:
            raise ValueError("unit vectors need a unital quantale")
        t = [self.A.bottom] * self.size
        t[x] = self.A.unit
        return self.vector(t)

    def extend(self, M: HilbertModule, f: Sequence[int]) -> AdjointablePair:
        """The module map ``g = Omega_(f(x))`` with ``g(e_x) = f(x)`` and its adjoint
        ``h(n) = (<f(x), n>)_x``."""
        return AdjointablePair(omega(self, M, f), omega_star(self, M, f))


def free_module(A: InvQuantale, size: int, budget: Budget | None = None) -> FreeModule:
    R = regular_module(A)
    return FreeModule(A, size, biproduct([R] * size, budget))


def omega(F: FreeModule, M: HilbertModule, mu: Sequence[int]) -> tuple[int, ...]:
    """``Omega_mu((a_j)) = V_j m_j <> a_j`` as a map ``A^J -> M``."""
    X, J = M.X, M.lat.J
    out = []
    for t in F.bp.tuples:
        acc = M.lat.bottom
        for m, a in zip(mu, t):
            acc = J[acc][X[m][a]]
        out.append(acc)
    return tuple(out)


def omega_star(F: FreeModule, M: HilbertModule, mu: Sequence[int]) -> tuple[int, ...]:
    """``Omega_mu*(x) = (<m_j, x>)_j`` as a map ``M -> A^J``."""
    P = M.P
    return tuple(F.vector([P[m][x] for m in mu]) for x in range(M.n))


# ------------------------------------------------------- compact operators


def theta(M: HilbertModule, N: HilbertModule, n: int, m: int) -> tuple[int, ...]:
    """``Theta_{n,m}(x) = n <> <m, x>`` as a map ``M -> N``."""
    return tuple(N.X[n][M.P[m][x]] for x in range(M.n))


def theta_generators(M: HilbertModule, N: HilbertModule) -> dict:
    """Distinct Theta maps, each with the first (n, m) producing it."""
    gens: dict = {}
    for n in range(N.n):
        for m in range(M.n):
            gens.setdefault(theta(M, N, n, m), (n, m))
    return gens


def pointwise_join(N: SupLattice, f, g) -> tuple[int, ...]:
    J = N.J
    return tuple(J[a][b] for a, b in zip(f, g))


def compact_closure(M: HilbertModule, N: HilbertModule, budget: Budget | None = None) -> list[tuple[int, ...]]:
    """``K_A(M, N)``: join-closure of the Theta maps, sorted."""
    budget = budget or default_budget()
    gens = sorted(theta_generators(M, N))
    zero = tuple([N.lat.bottom] * M.n)
    out = []
    seen = {zero}
    out.append(zero)
    for g in gens:
        if g in seen:
            continue
        new = []
        for x in out:
            y = pointwise_join(N.lat, x, g)
            if y not in seen:
                seen.add(y)
                new.append(y)
        out.extend(new)
        budget.check_carrier("compact operators", len(out))
    return sorted(out)


def is_compact(M: HilbertModule, N: HilbertModule, f: Sequence[int]) -> bool:
    """f is a join of the Theta maps below it."""
    L = N.lat.L
    f = tuple(f)
    below = [g for g in theta_generators(M, N) if all(L[a][b] for a, b in zip(g, f))]
    acc = tuple([N.lat.bottom] * M.n)
    for g in below:
        acc = pointwise_join(N.lat, acc, g)
    return acc == f


@dataclass
class CompactQuantale:
    K: InvQuantale
    maps: list[tuple[int, ...]]
    index: dict

    def as_left_module(self, M: HilbertModule) -> HilbertModule:
        """M as a left K-module: ``f . m = f(m)``, ``_K<y,x> = Theta_{y,x}``."""
        act = np.array([[self.maps[f][m] for f in range(self.K.n)] for m in range(M.n)], dtype=np.int64)
        ip = np.array([[self.index[theta(M, M, y, x)] for x in range(M.n)] for y in range(M.n)], dtype=np.int64)
        mod = QModule(self.K, M.lat, act, "left")
        chk = check_module(self.K, M.lat, act, "left")
        if chk:
            raise StructureError("left module", chk)
        return validate_hilbert(mod, ip)


def compact_quantale(M: HilbertModule, budget: Budget | None = None) -> CompactQuantale:
    """``K_A(M)`` with pointwise join, composition ``f.g = f o g`` and the *-adjoint."""
    maps = compact_closure(M, M, budget)
    index = {f: i for i, f in enumerate(maps)}
    lat = lattice_of_tuples(maps, M.lat, [f"k{i}" for i in range(len(maps))])
    mult = np.array([[index[compose(f, g)] for g in maps] for f in maps], dtype=np.int64)
    star = [index[star_adjoint(M, M, f).f_star] for f in maps]
    ident = tuple(range(M.n))
    K = InvQuantale(lat, mult, star, index.get(ident), "K(M)")
    return CompactQuantale(K, maps, index)


@dataclass
class CompactOps:
    thetas: dict
    closure: list[tuple[int, ...]]
    quantale: CompactQuantale | None


def compact_ops(M: HilbertModule, N: HilbertModule | None = None, budget: Budget | None = None) -> CompactOps:
    """Theta generators and ``K_A(M, N)``; with ``N`` omitted also ``K_A(M)`` as a quantale."""
    N = M if N is None else N
    Q = compact_quantale(M, budget) if N is M else None
    closure = Q.maps if Q is not None else compact_closure(M, N, budget)
    return CompactOps(theta_generators(M, N), closure, Q)


# --------------------------------------------------------------- quotients


@dataclass
class Quotient:
    """A quotient realised on class maxima; ``q[m]`` is the index of m's class in ``H``."""

    H: HilbertModule | QModule
    q: tuple[int, ...]
    reps: list[int]


def _quotient_by_classes(M: QModule, cls: Sequence[int]) -> tuple[QModule, tuple[int, ...], list[int]]:
    """Induced module on class maxima; ``cls`` labels every element with a class id."""
    groups: dict = {}
    for m, c in enumerate(cls):
        groups.setdefault(c, []).append(m)
    maxima = {c: M.lat.join_all(ms) for c, ms in groups.items()}
    reps = sorted(maxima.values())
    pos = {r: i for i, r in enumerate(reps)}
    q = tuple(pos[maxima[c]] for c in cls)
    J = M.lat.J
    join = [[q[J[a][b]] for b in reps] for a in reps]
    lat = SupLattice(join, [M.lat.labels[r] for r in reps])
    act = [[q[M.X[r][a]] for a in range(M.A.n)] for r in reps]
    return QModule(M.A, lat, act, M.side), q, reps


def hilbert_quotient(M: HilbertModule) -> Quotient:
    """``M / R_H`` with ``R_H = {(m,n) : <m,-> = <n,->}`` and ``j_H(m) = V[m]``."""
    cls = [tuple(r) for r in M.P]
    mod, q, reps = _quotient_by_classes(M.mod, cls)
    ip = [[M.P[a][b] for b in reps] for a in reps]
    return Quotient(validate_hilbert(mod, ip), q, reps)


def congruence_closure(M: QModule, pairs) -> list[int]:
    """Smallest module congruence containing ``pairs``; returns a class id per element."""
    n = M.n
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[max(ra, rb)] = min(ra, rb)
        return True

    for a, b in pairs:
        union(a, b)
    J, X = M.lat.J, M.X
    changed = True
    while changed:
        changed = False
        cls = [find(x) for x in range(n)]
        for x in range(n):
            for y in range(x + 1, n):
                if cls[x] != cls[y]:
                    continue
                for z in range(n):
                    if union(J[x][z], J[y][z]):
                        changed = True
                for a in range(M.A.n):
                    if union(X[x][a], X[y][a]):
                        changed = True
    return [find(x) for x in range(n)]


def coequalizer(N: HilbertModule | QModule, u: Sequence[int], v: Sequence[int]) -> Quotient:
    """Quotient of N by the congruence generated by ``(u(x), v(x))``.

    The inner product is carried only when it is constant on classes in both
    arguments; the result is then passed through :func:`hilbert_quotient`.
    """
    mod = N.mod if isinstance(N, HilbertModule) else N
    cls = congruence_closure(mod, zip(u, v))
    qmod, q, reps = _quotient_by_classes(mod, cls)
    if isinstance(N, HilbertModule):
        P = N.P
        if all(P[a][b] == P[reps[q[a]]][reps[q[b]]] for a in range(N.n) for b in range(N.n)):
            ip = [[P[a][b] for b in reps] for a in reps]
            chk = check_inner(qmod, ip)
            if not chk.pre:
                Hq = HilbertModule(qmod, ip, chk.level)
                hq = hilbert_quotient(Hq)
                return Quotient(hq.H, tuple(hq.q[x] for x in q), [reps[r] for r in hq.reps])
    return Quotient(qmod, q, reps)


def submodule(M: HilbertModule, elements: Sequence[int]) -> HilbertModule:
    """Induced (pre-)Hilbert structure on a join- and action-closed subset."""
    elements = sorted(elements)
    pos = {e: i for i, e in enumerate(elements)}
    lat = sublattice(M.lat, elements)
    act = [[pos[M.X[e][a]] for a in range(M.A.n)] for e in elements]
    ip = [[M.P[a][b] for b in elements] for a in elements]
    mod = QModule(M.A, lat, act, M.side)
    chk = check_inner(mod, ip)
    if chk.pre:
        raise StructureError("submodule", chk.pre)
    return HilbertModule(mod, ip, chk.level)


# ------------------------------------------------------------------ limits


@dataclass
class Limit:
    H: HilbertModule
    tuples: list[tuple[int, ...]]
    elements: list[int]  # indices in the full product
    product: Biproduct

    def projection(self, i: int) -> tuple[int, ...]:
        return tuple(t[i] for t in self.tuples)


def finite_limit(objects: Sequence[HilbertModule], arrows, budget: Budget | None = None) -> Limit:
    """Commuting tuples ``{(x_i) : x_c(j) = f_j(x_d(j))}``; ``arrows`` are ``(d, c, values)``."""
    bp = biproduct(objects, budget)
    keep = [i for i, t in enumerate(bp.tuples) if all(t[c] == f[t[d]] for d, c, f in arrows)]
    H = submodule(bp.H, keep)
    return Limit(H, [bp.tuples[i] for i in keep], keep, bp)


def equalizer(M: HilbertModule, N: HilbertModule, f, g, budget: Budget | None = None) -> Limit:
    return finite_limit([M, N], [(0, 1, f), (0, 1, g)], budget)


# ------------------------------------------------------ generators/cogenerators


@dataclass
class GeneratorMaps:
    F: FreeModule
    p: tuple[int, ...]  # A^M -> M
    i: tuple[int, ...]  # M -> A^M
    u: tuple[int, ...]  # u[n] is an element of A^M with p(u[n]) = n


def generator_maps(M: HilbertModule, budget: Budget | None = None) -> GeneratorMaps:
    """``p_M = Omega_(m)_m``, ``i_M = Omega*``, ``u_n = (m ->R n)_m``."""
    budget = budget or default_budget()
    budget.check_carrier("A^M", M.A.n**M.n)
    F = free_module(M.A, M.n, budget)
    mu = list(range(M.n))
    p = omega(F, M, mu)
    i = omega_star(F, M, mu)
    u = tuple(F.vector([residuate_module(M, m, n, "R") for m in range(M.n)]) for n in range(M.n))
    return GeneratorMaps(F, p, i, u)


@dataclass
class KernelPair:
    D: HilbertModule
    D_pairs: list[tuple[int, int]]
    essD: HilbertModule
    essD_pairs: list[tuple[int, int]]
    F: FreeModule
    u: tuple[int, ...]
    v: tuple[int, ...]


def kernel_pair_presentation(P: HilbertModule, M: HilbertModule, p: Sequence[int],
                             budget: Budget | None = None) -> KernelPair:
    """``D = {(x,y) : p(x) = p(y)}``, ``ess(D)``, and ``u, v = Omega_(d1), Omega_(d2)``
    over ``A^ess(D)``."""
    bp = biproduct([P, P], budget)
    keep = [i for i, (x, y) in enumerate(bp.tuples) if p[x] == p[y]]
    D = submodule(bp.H, keep)
    pairs = [bp.tuples[i] for i in keep]
    ess_idx = D.mod.ess
    essD = submodule(D, ess_idx)
    ess_pairs = [pairs[i] for i in ess_idx]
    F = free_module(P.A, len(ess_pairs), budget)
    u = omega(F, P, [d[0] for d in ess_pairs])
    v = omega(F, P, [d[1] for d in ess_pairs])
    return KernelPair(D, pairs, essD, ess_pairs, F, u, v)


# ------------------------------------------------ nuclearity & projectivity


@dataclass
class NuclearReport:
    nuclear: bool
    theta_pairs: list[tuple[int, int]] = field(default_factory=list)
    retract: tuple | None = None  # (J, mu, nu) with Omega_nu o Omega_mu* = id
    weakly_projective: bool | None = None


def nuclearity_and_projectivity(M: HilbertModule, budget: Budget | None = None,
                                max_index: int | None = None) -> NuclearReport:
    """Nuclearity (``id in K_A(M)``) and the retract-of-``A^J`` search.

    The retract search ranges over tuples ``mu, nu`` in ``M^J`` for
    ``J = 1..max_index`` (default ``|M|``); weak projectivity is decided by
    the retract criterion and is only meaningful for unital A.
    """
    budget = budget or default_budget()
    ident = tuple(range(M.n))
    L = M.lat.L
    gens = theta_generators(M, M)
    below = [(nm, g) for g, nm in sorted(gens.items(), key=lambda kv: kv[1]) if all(L[a][b] for a, b in zip(g, ident))]
    acc = tuple([M.lat.bottom] * M.n)
    for _, g in below:
        acc = pointwise_join(M.lat, acc, g)
    nuclear = acc == ident
    pairs = []
    if nuclear:
        chosen = [g for _, g in below]
        names = [nm for nm, _ in below]
        keep = list(range(len(chosen)))
        for k in list(keep):
            trial = [i for i in keep if i != k]
            acc = tuple([M.lat.bottom] * M.n)
            for i in trial:
                acc = pointwise_join(M.lat, acc, chosen[i])
            if acc == ident:
                keep = trial
        pairs = [names[i] for i in keep]
    retract = None
    limit = max_index if max_index is not None else M.n
    for J in range(1, limit + 1):
        if (M.n ** J) ** 2 > budget.scan or M.A.n**J > budget.carrier:
            break
        F = free_module(M.A, J, budget)
        for mu in itertools.product(range(M.n), repeat=J):
            i_map = omega_star(F, M, mu)
            for nu in itertools.product(range(M.n), repeat=J):
                r_map = omega(F, M, nu)
                if compose(r_map, i_map) == ident:
                    retract = (J, mu, nu)
                    break
            if retract:
                break
        if retract:
            break
    wp = (retract is not None) if M.A.unital else None
    return NuclearReport(nuclear, pairs, retract, wp)


# -------------------------------------------------------- image factorisation


@dataclass
class ImageFactorization:
    image: HilbertModule
    image_elements: list[int]
    fbar: tuple[int, ...]
    fhat: tuple[int, ...]
    surjective: bool
    injective: bool
    f_adjointable: bool
    fbar_adjointable: bool
    fhat_adjointable: bool
    image_separates: bool


def image_factorization(M: HilbertModule, N: HilbertModule, f: Sequence[int]) -> ImageFactorization:
    """``f = fhat o fbar`` through ``f(M)`` with the inner product induced from N."""
    elems = sorted(set(f))
    image = submodule(N, elems)
    pos = {e: i for i, e in enumerate(elems)}
    fbar = tuple(pos[x] for x in f)
    fhat = tuple(elems)
    # f(M) separates N when <n1,-> and <n2,-> already differ on f(M)
    restricted = [tuple(N.P[n][e] for e in elems) for n in range(N.n)]
    return ImageFactorization(
        image=image,
        image_elements=elems,
        fbar=fbar,
        fhat=fhat,
        surjective=len(elems) == N.n,
        injective=len(elems) == M.n,
        f_adjointable=is_adjointable(M, N, f),
        fbar_adjointable=is_adjointable(M, image, fbar),
        fhat_adjointable=is_adjointable(image, N, fhat),
        image_separates=len(set(restricted)) == N.n,
    )


def is_mono(f: Sequence[int], M: HilbertModule, probes: Sequence[HilbertModule],
            budget: Budget | None = None) -> bool:
    """Left-cancellability of f against every module map from each probe into M."""
    for X in probes:
        seen: dict = {}
        for g in iter_module_maps(X, M, budget):
            fg = compose(f, g)
            if fg in seen and seen[fg] != g:
                return False
            seen[fg] = g
    return True


# ------------------------------------------------ structure enumeration


def iter_actions(A: InvQuantale, L: SupLattice, side: str = "right",
                 budget: Budget | None = None, endo: Sequence[tuple[int, ...]] | None = None) -> Iterator[np.ndarray]:
    """Every module action of A on L, as ``act[m, a]`` tables.

    ``endo`` restricts the operators ``(-) <> a`` to a given list of endomaps.

    Values on join-irreducibles of A are endomaps of L; products of assigned
    join-irreducibles are checked as soon as every join-irreducible below them
    is assigned.
    """
    budget = budget or default_budget()
    if endo is None:
        endo = list(iter_latmap_values(L, L, budget))
    endo = list(endo)
    ji = A.lat.join_irreducibles
    budget.check_scan("action assignments", len(endo) ** len(ji))
    below = A.lat.ji_below
    pos = {j: k for k, j in enumerate(ji)}
    need = [max((pos[j] for j in below[a]), default=-1) for a in range(A.n)]
    JL = L.J
    n = L.n
    assign: list = [None] * len(ji)
    ident = tuple(range(n))

    def value(a):
        acc = [L.bottom] * n
        for j in below[a]:
            r = endo[assign[pos[j]]]
            acc = [JL[x][y] for x, y in zip(acc, r)]
        return acc

    checks = []  # (k, a, b): checkable once ji #k is assigned
    for a in range(A.n):
        for b in range(A.n):
            k = max(need[a], need[b], need[A.M[a][b]])
            checks.append((k, a, b))
    by_k: dict = {}
    for k, a, b in checks:
        by_k.setdefault(k, []).append((a, b))

    def ok_upto(k):
        for a, b in by_k.get(k, []):
            va, vb, vab = value(a), value(b), value(A.M[a][b])
            comp = [vb[va[x]] for x in range(n)] if side == "right" else [va[vb[x]] for x in range(n)]
            if comp != vab:
                return False
        return True

    def rec(k):
        if k == len(ji):
            act = np.array([value(a) for a in range(A.n)], dtype=np.int64).T.copy()
            if not check_module(A, L, act, side):
                yield act
            return
        for e in range(len(endo)):
            # monotone in the quantale argument
            if any(A.le(j, ji[k]) and not all(L.L[x][y] for x, y in zip(endo[assign[pos[j]]], endo[e]))
                   for j in ji[:k]):
                continue
            assign[k] = e
            if ok_upto(k):
                yield from rec(k + 1)
        assign[k] = None

    if not ji:
        act = np.full((n, A.n), L.bottom, dtype=np.int64)
        if not check_module(A, L, act, side):
            yield act
        return
    yield from rec(0)


def iter_inner_products(mod: QModule, min_level: str = "pre",
                        budget: Budget | None = None) -> Iterator[np.ndarray]:
    """Every inner product on ``mod`` reaching ``min_level``; determined by its values on
    pairs of join-irreducibles, enumerated with hermitian symmetry built in."""
    budget = budget or default_budget()
    A, L = mod.A, mod.lat
    ji = L.join_irreducibles
    pairs = [(i, j) for i in range(len(ji)) for j in range(i, len(ji))]
    budget.check_scan("inner-product assignments", A.n ** len(pairs))
    below = [[ji.index(j) for j in L.ji_below[x]] for x in range(L.n)]
    S, JA = A.S, A.lat.J
    selfadj = [a for a in range(A.n) if S[a] == a]
    need = LEVELS.index(min_level)
    for vals in itertools.product(*[(selfadj if i == j else range(A.n)) for i, j in pairs]):
        v = {}
        for (i, j), a in zip(pairs, vals):
            v[i, j] = a
            v[j, i] = S[a]
        ip = np.empty((L.n, L.n), dtype=np.int64)
        for x in range(L.n):
            for y in range(L.n):
                acc = A.bottom
                for i in below[x]:
                    for j in below[y]:
                        acc = JA[acc][v[i, j]]
                ip[x, y] = acc
        chk = check_inner(mod, ip)
        if chk.level is not None and LEVELS.index(chk.level) >= need:
            yield ip


def iter_hilbert_modules(A: InvQuantale, L: SupLattice, min_level: str = "hilbert", m_regular: bool = True,
                         side: str = "right", budget: Budget | None = None) -> Iterator[HilbertModule]:
    for act in iter_actions(A, L, side, budget):
        mod = QModule(A, L, act, side)
        if m_regular and not mod.m_regular:
            continue
        for ip in iter_inner_products(mod, min_level, budget):
            yield HilbertModule(mod, ip, check_inner(mod, ip).level)
