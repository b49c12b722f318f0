"""Involutive quantales on finite sup-lattices.

Multiplication tables are indexed ``mult[a, b] = a . b``; the involution is a
length-n table. Distributivity over arbitrary joins is checked as binary
distributivity plus ``x.0 = 0.x = 0``, which is equivalent on finite lattices.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .budget import Budget, default_budget
from .laws import LawLog, StructureError, Violation
from .suplat import (
    LatticeMap,
    Signature,
    SupLattice,
    _frozen,
    chain,
    duality_violations,
    find_isomorphism,
    involution_violations,
    iter_latmap_values,
    join_closure,
    lattice_of_tuples,
    right_adjoint,
    sublattice,
)


class MissingDuality(ValueError):
    pass


class InvQuantale:
    """A validated involutive quantale. Build with :func:`validate_quantale` or a constructor."""

    def __init__(self, lat: SupLattice, mult, star, unit: int | None = None, name: str = ""):
        self.lat = lat
        self.mult = _frozen(mult)
        self.star = _frozen(star)
        self.n = lat.n
        self.name = name
        self._unit = unit

    def __repr__(self):
        return f"InvQuantale({self.name or '?'}, n={self.n})"

    def key(self):
        return (self.lat.key(), self.mult.tobytes(), self.star.tobytes())

    def same_as(self, other: "InvQuantale") -> bool:
        return self.key() == other.key()

    @property
    def labels(self):
        return self.lat.labels

    @cached_property
    def M(self) -> list[list[int]]:
        return self.mult.tolist()

    @cached_property
    def S(self) -> list[int]:
        return self.star.tolist()

    @property
    def bottom(self) -> int:
        return self.lat.bottom

    @property
    def top(self) -> int:
        return self.lat.top

    def join(self, a: int, b: int) -> int:
        return self.lat.J[a][b]

    def join_all(self, xs) -> int:
        return self.lat.join_all(xs)

    def le(self, a: int, b: int) -> bool:
        return self.lat.L[a][b]

    @cached_property
    def unit(self) -> int | None:
        if self._unit is not None:
            return self._unit
        M = self.M
        for e in range(self.n):
            if all(M[e][a] == a and M[a][e] == a for a in range(self.n)):
                return e
        return None

    @property
    def unital(self) -> bool:
        return self.unit is not None

    @cached_property
    def commutative(self) -> bool:
        return bool(np.array_equal(self.mult, self.mult.T))

    @cached_property
    def products(self) -> list[int]:
        """Join-closure of all products b.c (the essential part of A over itself)."""
        prods = sorted(set(int(x) for x in self.mult.ravel()))
        return sorted(join_closure(prods, self.join, self.bottom))

    @cached_property
    def essential(self) -> bool:
        return len(self.products) == self.n

    @cached_property
    def separated(self) -> bool:
        return len({tuple(r) for r in self.M}) == self.n

    @property
    def m_regular(self) -> bool:
        return self.essential and self.separated

    def report(self) -> "QuantaleReport":
        return quantale_report(self)


@dataclass
class QuantaleReport:
    valid: bool
    violations: list[Violation] = field(default_factory=list)
    unital: bool = False
    unit: int | None = None
    commutative: bool = False
    essential: bool = False
    separated: bool = False
    essential_witness: tuple = ()
    separated_witness: tuple = ()

    @property
    def m_regular(self) -> bool:
        return self.essential and self.separated


def quantale_report(A: InvQuantale) -> QuantaleReport:
    ess_w = ()
    if not A.essential:
        missing = sorted(set(range(A.n)) - set(A.products))
        ess_w = (missing[0],)
    sep_w = ()
    if not A.separated:
        rows = {}
        for a, r in enumerate(A.M):
            t = tuple(r)
            if t in rows:
                sep_w = (rows[t], a)
                break
            rows[t] = a
    return QuantaleReport(
        valid=True,
        unital=A.unital,
        unit=A.unit,
        commutative=A.commutative,
        essential=A.essential,
        separated=A.separated,
        essential_witness=ess_w,
        separated_witness=sep_w,
    )


def check_quantale(lat: SupLattice, mult, star, unit: int | None = None) -> list[Violation]:
    log = LawLog()
    n = lat.n
    try:
        M = np.asarray(mult, dtype=np.int64)
        S = np.asarray(star, dtype=np.int64)
    except (TypeError, ValueError):
        return [Violation("Malformed", detail="tables are not integer tables")]
    if M.shape != (n, n) or ((M < 0) | (M >= n)).any():
        return [Violation("Malformed", detail="multiplication table has wrong shape or range")]
    if S.shape != (n,) or ((S < 0) | (S >= n)).any():
        return [Violation("Malformed", detail="involution table has wrong shape or range")]
    J = lat.join
    z = lat.bottom
    for a in range(n):
        if M[a, z] != z or M[z, a] != z:
            log.fail("AbsorbingZero", a, detail="x.0 = 0.x = 0")
            break
    for x in range(n):
        # x.(a v b) vs x.a v x.b
        bad = np.argwhere(M[x, J] != J[M[x, :][:, None], M[x, :][None, :]])
        if len(bad):
            a, b = bad[0]
            log.fail("LeftDistributive", x, int(a), int(b))
            break
    for x in range(n):
        bad = np.argwhere(M[J, x] != J[M[:, x][:, None], M[:, x][None, :]])
        if len(bad):
            a, b = bad[0]
            log.fail("RightDistributive", int(a), int(b), x)
            break
    for a in range(n):
        lhs = M[M[a, :], :]  # (a.b).c
        rhs = M[a, M]  # a.(b.c)
        bad = np.argwhere(lhs != rhs)
        if len(bad):
            b, c = bad[0]
            log.fail("NonAssociative", a, int(b), int(c))
            break
    for v in involution_violations(lat, S.tolist()):
        log.fail(v.law, *v.witness, detail=v.detail)
    bad = np.argwhere(S[M] != M[S[None, :], S[:, None]])
    if len(bad):
        a, b = bad[0]
        log.fail("InvolutionAntiMultiplicative", int(a), int(b), detail="(a.b)* = b*.a*")
    if unit is not None:
        if not 0 <= unit < n:
            log.fail("Malformed", unit, detail="unit out of range")
        else:
            for a in range(n):
                if M[unit, a] != a or M[a, unit] != a:
                    log.fail("NotUnit", unit, a)
                    break
    return log.violations


def validate_quantale(lat: SupLattice, mult, star, unit: int | None = None, name: str = "") -> InvQuantale:
    vs = check_quantale(lat, mult, star, unit)
    if vs:
        raise StructureError("quantale", vs)
    return InvQuantale(lat, mult, star, unit, name)


def residuate(A: InvQuantale, a: int, c: int, side: str = "r") -> int:
    """``a ->_r c = V{s : a.s <= c}`` or ``a ->_l c = V{t : t.a <= c}``."""
    L = A.lat.L
    M = A.M
    if side == "r":
        return A.join_all(s for s in range(A.n) if L[M[a][s]][c])
    if side == "l":
        return A.join_all(t for t in range(A.n) if L[M[t][a]][c])
    raise ValueError(f"side must be 'r' or 'l', not {side!r}")


# ------------------------------------------------------------ constructors


def two() -> InvQuantale:
    L = chain(2, ["0", "1"])
    return InvQuantale(L, [[0, 0], [0, 1]], [0, 1], 1, "two")


def chain3_frame() -> InvQuantale:
    L = chain(3, ["0", "m", "1"])
    idx = np.arange(3)
    return InvQuantale(L, np.minimum(idx[:, None], idx[None, :]), [0, 1, 2], 2, "chain3")


def opposite(A: InvQuantale) -> InvQuantale:
    return InvQuantale(A.lat, A.mult.T, A.star, A.unit, (A.name + "^d") if A.name else "")


@dataclass(frozen=True)
class MatrixCodec:
    """Base-|A| encoding of n x n matrices; entry (0,0) is the most significant digit."""

    base: int
    n: int

    def encode(self, m: Sequence[Sequence[int]]) -> int:
        code = 0
        for row in m:
            for v in row:
                code = code * self.base + int(v)
        return code

    def decode(self, code: int) -> tuple[tuple[int, ...], ...]:
        digits = []
        for _ in range(self.n * self.n):
            code, d = divmod(code, self.base)
            digits.append(d)
        digits.reverse()
        return tuple(tuple(digits[i * self.n : (i + 1) * self.n]) for i in range(self.n))

    def unit_matrix(self, zero: int, one: int) -> int:
        return self.encode([[one if i == j else zero for j in range(self.n)] for i in range(self.n)])

    def matrix_unit(self, i: int, j: int, value: int, zero: int) -> int:
        return self.encode([[value if (r, c) == (i, j) else zero for c in range(self.n)] for r in range(self.n)])


def _matrix_label(A: InvQuantale, m) -> str:
    labs = [A.labels[v] for row in m for v in row]
    if all(len(s) == 1 and s.isalnum() for s in A.labels):
        return "m" + "".join(labs)
    return "m_" + "_".join(labs)


def matrix_quantale(A: InvQuantale, n: int, budget: Budget | None = None) -> tuple[InvQuantale, MatrixCodec]:
    """n x n matrices over A: entrywise join, (XY)_ik = V_j X_ij.Y_jk, involution = star-transpose.

    Element codes are the :class:`MatrixCodec` encodings of the entry indices.
    """
    budget = budget or default_budget()
    size = A.n ** (n * n)
    budget.check_carrier(f"matrix quantale M^{n}", size)
    codec = MatrixCodec(A.n, n)
    E = np.array([np.array(codec.decode(c)) for c in range(size)], dtype=np.int64).reshape(size, n, n)
    JA, MA, SA = A.lat.join, A.mult, A.star
    weights = A.n ** np.arange(n * n - 1, -1, -1)

    def enc(arr):  # (..., n, n) -> codes
        return (arr.reshape(*arr.shape[:-2], n * n) * weights).sum(axis=-1)

    join = np.empty((size, size), dtype=np.int64)
    for x in range(size):
        join[x] = enc(JA[E[x][None], E])
    mult = np.empty((size, size), dtype=np.int64)
    for x in range(size):
        # P[y, i, j, k] = X_ij . Y_jk
        P = MA[E[x][None, :, :, None], E[:, None, :, :]]
        acc = P[:, :, 0, :]
        for j in range(1, n):
            acc = JA[acc, P[:, :, j, :]]
        mult[x] = enc(acc)
    star = enc(SA[np.transpose(E, (0, 2, 1))])
    lat = SupLattice(join, [_matrix_label(A, codec.decode(c)) for c in range(size)])
    unit = None
    if A.unit is not None:
        unit = codec.unit_matrix(A.bottom, A.unit)
    name = f"M{n}({A.name})" if A.name else ""
    return InvQuantale(lat, mult, star, unit, name), codec


# ------------------------------------------------------ endomorphism quantales


@dataclass
class EndoQuantales:
    """Q(S) with composition ``f.g = f o g`` and involution ``f* = d o r_f o d``,
    its right-sided elements ``{q : q.1 <= q}`` and the involutive sub-quantale Q0(S)
    they generate. ``maps[i]`` is the value tuple of element i of ``Q``;
    ``q0_maps[i]`` that of element i of ``Q0``."""

    S: SupLattice
    duality: tuple[int, ...]
    Q: InvQuantale
    maps: list[tuple[int, ...]]
    right_sided: list[int]
    Q0: InvQuantale
    q0_maps: list[tuple[int, ...]]
    q0_in_q: list[int]


def endo_quantales(S: SupLattice, duality: Sequence[int] | None, budget: Budget | None = None) -> EndoQuantales:
    if duality is None:
        raise MissingDuality("Q(S) and Q0(S) need a duality on S for their involution")
    vs = duality_violations(S, duality)
    if vs:
        raise StructureError("duality", vs)
    budget = budget or default_budget()
    d = list(duality)
    maps = list(iter_latmap_values(S, S, budget))
    budget.check_carrier("Q(S)", len(maps))
    pos = {m: i for i, m in enumerate(maps)}
    k = len(maps)
    lat = lattice_of_tuples(maps, S, [_map_label(S, m) for m in maps])
    mult = np.array([[pos[tuple(f[x] for x in g)] for g in maps] for f in maps], dtype=np.int64)
    star = []
    for f in maps:
        r = right_adjoint(LatticeMap(S, S, f)).values
        star.append(pos[tuple(d[r[d[x]]] for x in range(S.n))])
    unit = pos[tuple(range(S.n))]
    Q = InvQuantale(lat, mult, star, unit, "Q(S)")
    top = Q.top
    M = Q.M
    right_sided = [q for q in range(k) if Q.le(M[q][top], q)]
    # sub-quantale closure under V, composition and *
    elems = set(right_sided) | {Q.bottom}
    while True:
        new = set(elems)
        new |= {Q.S[x] for x in elems}
        new |= {M[x][y] for x in elems for y in elems}
        new = set(join_closure(sorted(new), Q.join, Q.bottom))
        if new == elems:
            break
        elems = new
    sub = sorted(elems)
    spos = {e: i for i, e in enumerate(sub)}
    lat0 = sublattice(Q.lat, sub)
    mult0 = [[spos[M[a][b]] for b in sub] for a in sub]
    star0 = [spos[Q.S[a]] for a in sub]
    unit0 = spos.get(unit)
    Q0 = InvQuantale(lat0, mult0, star0, unit0, "Q0(S)")
    return EndoQuantales(S, tuple(d), Q, maps, right_sided, Q0, [maps[e] for e in sub], sub)


def _map_label(S: SupLattice, m) -> str:
    return "f_" + "_".join(S.labels[v] for v in m)


# ------------------------------------------------------------ isomorphism


def quantale_signature(A: InvQuantale) -> Signature:
    M, S = A.M, A.S
    colors = [(c, M[a][a] == a, S[a] == a) for a, c in enumerate(A.lat.colors)]
    return Signature(A.n, binary=[A.lat.join, A.mult], unary=[A.star], colors=colors)


def quantale_iso_search(A: InvQuantale, B: InvQuantale) -> tuple[int, ...] | None:
    """A bijection preserving joins, multiplication and involution, or None when exhausted."""
    return find_isomorphism(quantale_signature(A), quantale_signature(B))


def is_quantale_morphism(A: InvQuantale, B: InvQuantale, f: Sequence[int]) -> bool:
    for a, b in itertools.product(range(A.n), repeat=2):
        if f[A.lat.J[a][b]] != B.lat.J[f[a]][f[b]] or f[A.M[a][b]] != B.M[f[a]][f[b]]:
            return False
    return all(f[A.S[a]] == B.S[f[a]] for a in range(A.n)) and f[A.bottom] == B.bottom
