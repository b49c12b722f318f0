"""Finite sup-lattices, join-preserving maps, adjoints, enumeration and isomorphism search.

Elements are the dense indices ``0..n-1``. The order is derived from the join
table (``a <= b`` iff ``a v b == b``) and never stored separately.

On a finite lattice a map preserves arbitrary joins iff it preserves binary
joins and the bottom element (the empty join); that pair of checks is what
"join-preserving" means throughout the package.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .budget import Budget, default_budget
from .laws import LawLog, StructureError, Violation


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.int64)
    arr.flags.writeable = False
    return arr


class SupLattice:
    """A validated finite complete lattice given by its join table.

    Build through :func:`validate_suplattice` (checked) or the constructors
    below (correct by construction).
    """

    def __init__(self, join, labels: Sequence[str] | None = None):
        self.join = _frozen(join)
        self.n = self.join.shape[0]
        self.labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(self.n))

    def __repr__(self):
        return f"SupLattice(n={self.n})"

    def key(self):
        return (self.n, self.join.tobytes())

    def same_as(self, other: "SupLattice") -> bool:
        return self.key() == other.key()

    @cached_property
    def J(self) -> list[list[int]]:
        return self.join.tolist()

    @cached_property
    def leq(self) -> np.ndarray:
        out = self.join == np.arange(self.n)[None, :]
        out.flags.writeable = False
        return out

    @cached_property
    def L(self) -> list[list[bool]]:
        return self.leq.tolist()

    @cached_property
    def bottom(self) -> int:
        return int(np.flatnonzero(self.leq.all(axis=1))[0])

    @cached_property
    def top(self) -> int:
        return int(np.flatnonzero(self.leq.all(axis=0))[0])

    def le(self, a: int, b: int) -> bool:
        return self.J[a][b] == b

    def join_all(self, xs: Iterable[int]) -> int:
        acc = self.bottom
        J = self.J
        for x in xs:
            acc = J[acc][x]
        return acc

    @cached_property
    def meet(self) -> np.ndarray:
        L = self.L
        n = self.n
        out = np.empty((n, n), dtype=np.int64)
        for a in range(n):
            for b in range(a, n):
                m = self.join_all(c for c in range(n) if L[c][a] and L[c][b])
                out[a, b] = out[b, a] = m
        out.flags.writeable = False
        return out

    def meet_all(self, xs: Iterable[int]) -> int:
        acc = self.top
        M = self.meet.tolist()
        for x in xs:
            acc = M[acc][x]
        return acc

    @cached_property
    def join_irreducibles(self) -> tuple[int, ...]:
        """Nonzero elements that are not the join of the elements strictly below them."""
        L = self.L
        out = []
        for a in range(self.n):
            if a == self.bottom:
                continue
            below = [c for c in range(self.n) if L[c][a] and c != a]
            if self.join_all(below) != a:
                out.append(a)
        return tuple(sorted(out, key=lambda a: (self.downset_size[a], a)))

    @cached_property
    def ji_below(self) -> list[list[int]]:
        L = self.L
        return [[j for j in self.join_irreducibles if L[j][s]] for s in range(self.n)]

    @cached_property
    def downset_size(self) -> tuple[int, ...]:
        return tuple(int(x) for x in self.leq.sum(axis=0))

    @cached_property
    def upset_size(self) -> tuple[int, ...]:
        return tuple(int(x) for x in self.leq.sum(axis=1))

    @cached_property
    def colors(self) -> tuple:
        """Per-element isomorphism invariants used to prune searches."""
        ji = set(self.join_irreducibles)
        return tuple((self.downset_size[a], self.upset_size[a], a in ji) for a in range(self.n))

    def index(self, label: str) -> int:
        return self.labels.index(label)


# ---------------------------------------------------------------- validation


def check_suplattice(join) -> list[Violation]:
    """Every violated join-semilattice law, one witness per law."""
    log = LawLog()
    try:
        J = np.asarray(join, dtype=np.int64)
    except (TypeError, ValueError):
        return [Violation("Malformed", detail="join table is not a square integer table")]
    if J.ndim != 2 or J.shape[0] != J.shape[1] or J.shape[0] < 1:
        return [Violation("Malformed", detail=f"join table has shape {J.shape}")]
    n = J.shape[0]
    bad = np.argwhere((J < 0) | (J >= n))
    if len(bad):
        a, b = bad[0]
        return [Violation("OutOfRange", (int(a), int(b)), f"entry {int(J[a, b])}")]
    for a in range(n):
        if J[a, a] != a:
            log.fail("NotIdempotent", a)
            break
    asym = np.argwhere(J != J.T)
    if len(asym):
        a, b = asym[0]
        log.fail("NotCommutative", int(a), int(b))
    for a in range(n):
        lhs = J[J[a, :], :]  # (a v b) v c
        rhs = J[a, J]  # a v (b v c)
        diff = np.argwhere(lhs != rhs)
        if len(diff):
            b, c = diff[0]
            log.fail("NonAssociative", a, int(b), int(c))
            break
    idx = np.arange(n)
    bottoms = [b for b in range(n) if np.array_equal(J[b, :], idx)]
    if not bottoms:
        log.fail("NoBottom")
    return log.violations


def validate_suplattice(join, labels: Sequence[str] | None = None) -> SupLattice:
    violations = check_suplattice(join)
    if violations:
        raise StructureError("sup-lattice", violations)
    return SupLattice(join, labels)


def lattice_from_order(n: int, pairs: Iterable[tuple[int, int]], labels=None) -> SupLattice:
    """Build a lattice from generating order relations ``a <= b`` (reflexive-transitive closure).

    Raises StructureError with ``NotAntisymmetric`` when two distinct elements are
    identified and ``NoLeastUpperBound`` when some pair lacks a join.
    """
    leq = np.eye(n, dtype=bool)
    for a, b in pairs:
        leq[a, b] = True
    for k in range(n):
        leq |= leq[:, k : k + 1] & leq[k : k + 1, :]
    log = LawLog()
    dup = np.argwhere(leq & leq.T & ~np.eye(n, dtype=bool))
    if len(dup):
        a, b = dup[0]
        log.fail("NotAntisymmetric", int(a), int(b), detail="distinct elements are mutually below each other")
        raise StructureError("sup-lattice", log.violations)
    join = np.zeros((n, n), dtype=np.int64)
    for a in range(n):
        for b in range(a, n):
            ubs = np.flatnonzero(leq[a, :] & leq[b, :])
            least = [u for u in ubs if leq[u, ubs].all()]
            if not least:
                log.fail("NoLeastUpperBound", a, b)
                raise StructureError("sup-lattice", log.violations)
            join[a, b] = join[b, a] = least[0]
    return validate_suplattice(join, labels)


# -------------------------------------------------------------- constructors


def chain(n: int, labels=None) -> SupLattice:
    idx = np.arange(n)
    return SupLattice(np.maximum(idx[:, None], idx[None, :]), labels)


def boolean(k: int, labels=None) -> SupLattice:
    """The powerset of a k-set; element i is the bitmask i."""
    idx = np.arange(2**k)
    return SupLattice(idx[:, None] | idx[None, :], labels)


def two() -> SupLattice:
    return chain(2, ["0", "1"])


def chain3() -> SupLattice:
    return chain(3, ["0", "m", "1"])


def diamond() -> SupLattice:
    return boolean(2, ["0", "a", "b", "1"])


def product_lattice(lats: Sequence[SupLattice]) -> tuple[SupLattice, list[tuple[int, ...]]]:
    """Cartesian product; element codes are mixed-radix with the first factor most significant."""
    tuples = list(itertools.product(*(range(L.n) for L in lats)))
    code = {t: i for i, t in enumerate(tuples)}
    n = len(tuples)
    join = np.empty((n, n), dtype=np.int64)
    for i, s in enumerate(tuples):
        for j, t in enumerate(tuples):
            join[i, j] = code[tuple(L.J[a][b] for L, a, b in zip(lats, s, t))]
    labels = ["(" + ",".join(L.labels[a] for L, a in zip(lats, t)) + ")" for t in tuples]
    return SupLattice(join, labels), tuples


def sublattice(L: SupLattice, elements: Sequence[int]) -> SupLattice:
    """Induced lattice on a join-closed subset containing bottom; element order is as given."""
    pos = {e: i for i, e in enumerate(elements)}
    k = len(elements)
    join = np.empty((k, k), dtype=np.int64)
    for i, a in enumerate(elements):
        for j, b in enumerate(elements):
            join[i, j] = pos[L.J[a][b]]
    return SupLattice(join, [L.labels[e] for e in elements])


def join_closure(gens: Iterable, join2: Callable, bottom) -> list:
    """All joins of finite subsets of ``gens`` (bottom included), in discovery order."""
    seen = {bottom: None}
    order = [bottom]
    for g in gens:
        if g in seen:
            continue
        new = []
        for x in order:
            y = join2(x, g)
            if y not in seen:
                seen[y] = None
                new.append(y)
        order.extend(new)
    return order


def lattice_of_tuples(elements: Sequence[tuple], target: SupLattice, labels=None) -> SupLattice:
    """Lattice of pointwise-joined value tuples (maps into ``target``); must be join-closed."""
    pos = {e: i for i, e in enumerate(elements)}
    arr = np.array(elements, dtype=np.int64).reshape(len(elements), -1)
    k = len(elements)
    join = np.empty((k, k), dtype=np.int64)
    T = target.join
    for i in range(k):
        rows = T[arr[i][None, :], arr]
        join[i] = [pos[tuple(r)] for r in rows.tolist()]
    return SupLattice(join, labels)


# ------------------------------------------------------------------- maps


@dataclass(frozen=True)
class LatticeMap:
    source: SupLattice = field(repr=False)
    target: SupLattice = field(repr=False)
    values: tuple[int, ...]

    def __call__(self, x: int) -> int:
        return self.values[x]

    def __eq__(self, other):
        return isinstance(other, LatticeMap) and self.values == other.values

    def __hash__(self):
        return hash(self.values)

    def compose(self, inner: "LatticeMap") -> "LatticeMap":
        """``self o inner``."""
        return LatticeMap(inner.source, self.target, tuple(self.values[v] for v in inner.values))


def join_preservation_witness(S: SupLattice, T: SupLattice, values: Sequence[int]):
    """First violation of ``f(a v b) = f(a) v f(b)`` / ``f(0) = 0``, or None."""
    f = np.asarray(values, dtype=np.int64)
    if f[S.bottom] != T.bottom:
        return Violation("NotJoinPreserving", (S.bottom,), "bottom not preserved")
    bad = np.argwhere(f[S.join] != T.join[f[:, None], f[None, :]])
    if len(bad):
        a, b = bad[0]
        return Violation("NotJoinPreserving", (int(a), int(b)))
    return None


def is_join_preserving(S: SupLattice, T: SupLattice, values: Sequence[int]) -> bool:
    return join_preservation_witness(S, T, values) is None


@dataclass(frozen=True)
class LatticeInvolution:
    carrier: SupLattice = field(repr=False)
    values: tuple[int, ...]


def involution_violations(L: SupLattice, values: Sequence[int]) -> list[Violation]:
    log = LawLog()
    v = list(values)
    if len(v) != L.n or any(not 0 <= x < L.n for x in v):
        return [Violation("Malformed", detail="involution table has wrong length or range")]
    for a in range(L.n):
        if v[v[a]] != a:
            log.fail("NotInvolutive", a)
            break
    w = join_preservation_witness(L, L, v)
    if w is not None:
        log.fail("InvolutionNotJoinPreserving", *w.witness)
    return log.violations


def validate_involution(L: SupLattice, values: Sequence[int]) -> LatticeInvolution:
    vs = involution_violations(L, values)
    if vs:
        raise StructureError("involution", vs)
    return LatticeInvolution(L, tuple(int(x) for x in values))


def duality_violations(L: SupLattice, values: Sequence[int]) -> list[Violation]:
    """A duality is an order-reversing involution."""
    log = LawLog()
    v = list(values)
    for a in range(L.n):
        if v[v[a]] != a:
            log.fail("NotInvolutive", a)
            break
    for a in range(L.n):
        for b in range(L.n):
            if L.L[a][b] and not L.L[v[b]][v[a]]:
                log.fail("NotAntitone", a, b)
                break
    return log.violations


def right_adjoint(f: LatticeMap) -> LatticeMap:
    """``g(t) = V{s : f(s) <= t}``; f must be join-preserving."""
    S, T = f.source, f.target
    w = join_preservation_witness(S, T, f.values)
    if w is not None:
        raise StructureError("lattice map", [w])
    TL = T.L
    vals = tuple(S.join_all(s for s in range(S.n) if TL[f.values[s]][t]) for t in range(T.n))
    return LatticeMap(T, S, vals)


def left_adjoint(g: LatticeMap) -> LatticeMap:
    """``f(s) = /\\{t : s <= g(t)}``; inverse construction to :func:`right_adjoint`."""
    T, S = g.source, g.target
    SL = S.L
    vals = tuple(T.meet_all(t for t in range(T.n) if SL[s][g.values[t]]) for s in range(S.n))
    return LatticeMap(S, T, vals)


# ------------------------------------------------------------ enumeration


def count_latmap_candidates(S: SupLattice, T: SupLattice) -> int:
    return T.n ** len(S.join_irreducibles)


def iter_latmap_values(S: SupLattice, T: SupLattice, budget: Budget | None = None) -> Iterator[tuple[int, ...]]:
    """Value tuples of every join-preserving S -> T, in lexicographic order of the
    values on join-irreducibles (sorted by down-set size, then index)."""
    budget = budget or default_budget()
    ji = S.join_irreducibles
    budget.check_scan("join-irreducible assignments", T.n ** len(ji))
    SL, TL, TJ = S.L, T.L, T.J
    below = S.ji_below
    # earlier ji's below each ji, for monotonicity pruning
    prev_le = [[i for i in range(k) if SL[ji[i]][ji[k]]] for k in range(len(ji))]
    n = S.n
    assign = [0] * len(ji)
    pos = {j: i for i, j in enumerate(ji)}

    def extend():
        vals = []
        for s in range(n):
            acc = T.bottom
            for j in below[s]:
                acc = TJ[acc][assign[pos[j]]]
            vals.append(acc)
        return vals

    def rec(k):
        if k == len(ji):
            vals = extend()
            if is_join_preserving(S, T, vals):
                yield tuple(vals)
            return
        for v in range(T.n):
            if all(TL[assign[i]][v] for i in prev_le[k]):
                assign[k] = v
                yield from rec(k + 1)

    yield from rec(0)


def enumerate_latmaps(
    S: SupLattice,
    T: SupLattice,
    predicate: Callable[[LatticeMap], bool] | None = None,
    budget: Budget | None = None,
) -> Iterator[LatticeMap]:
    for vals in iter_latmap_values(S, T, budget):
        f = LatticeMap(S, T, vals)
        if predicate is None or predicate(f):
            yield f


def enumerate_latmaps_raw(S: SupLattice, T: SupLattice, budget: Budget | None = None) -> Iterator[LatticeMap]:
    """Cross-check oracle: filter all ``|T|^|S|`` functions."""
    budget = budget or default_budget()
    budget.check_scan("raw map scan", T.n**S.n)
    for vals in itertools.product(range(T.n), repeat=S.n):
        if is_join_preserving(S, T, vals):
            yield LatticeMap(S, T, tuple(vals))


# ---------------------------------------------------- isomorphism search


@dataclass
class Signature:
    """Tables an isomorphism must respect.

    binary: n x n tables into the carrier; unary: length-n tables into the carrier;
    valued: n x n tables into an external set (compared verbatim);
    colors: per-element invariants (compared verbatim).
    """

    n: int
    binary: list = field(default_factory=list)
    unary: list = field(default_factory=list)
    valued: list = field(default_factory=list)
    colors: list = field(default_factory=list)

    def _lists(self):
        return (
            [np.asarray(t).tolist() for t in self.binary],
            [np.asarray(t).tolist() for t in self.unary],
            [np.asarray(t).tolist() for t in self.valued],
        )


def lattice_signature(L: SupLattice) -> Signature:
    return Signature(L.n, binary=[L.join], colors=list(L.colors))


def iter_isomorphisms(src: Signature, dst: Signature) -> Iterator[tuple[int, ...]]:
    """All bijections ``phi`` with ``phi(op(a,b)) = op'(phi a, phi b)`` for every table pair."""
    n = src.n
    if n != dst.n or len(src.binary) != len(dst.binary) or len(src.unary) != len(dst.unary):
        return
    if len(src.valued) != len(dst.valued):
        return
    if sorted(map(repr, src.colors)) != sorted(map(repr, dst.colors)):
        return
    sb, su, sv = src._lists()
    db, du, dv = dst._lists()
    cand = [[y for y in range(n) if dst.colors[y] == src.colors[x]] for x in range(n)]
    order = sorted(range(n), key=lambda x: (len(cand[x]), x))
    phi = [-1] * n
    inv = [-1] * n

    def consistent(x, y):
        for V, W in zip(sv, dv):
            if V[x][x] != W[y][y]:
                return False
        for z in range(n):
            pz = phi[z]
            if pz < 0:
                continue
            for V, W in zip(sv, dv):
                if V[x][z] != W[y][pz] or V[z][x] != W[pz][y]:
                    return False
            for B, C in zip(sb, db):
                for r, v in ((B[x][z], C[y][pz]), (B[z][x], C[pz][y])):
                    pr = phi[r]
                    if pr >= 0 and pr != v:
                        return False
                    iv = inv[v]
                    if iv >= 0 and iv != r:
                        return False
        for B, C in zip(sb, db):
            r, v = B[x][x], C[y][y]
            if phi[r] >= 0 and phi[r] != v:
                return False
            if inv[v] >= 0 and inv[v] != r:
                return False
        for U, W in zip(su, du):
            r, v = U[x], W[y]
            if phi[r] >= 0 and phi[r] != v:
                return False
            if inv[v] >= 0 and inv[v] != r:
                return False
            # preimages already assigned
            for z in range(n):
                if phi[z] >= 0 and U[z] == x and W[phi[z]] != y:
                    return False
        return True

    def rec(k):
        if k == n:
            yield tuple(phi)
            return
        x = order[k]
        for y in cand[x]:
            if inv[y] >= 0:
                continue
            phi[x], inv[y] = y, x
            if consistent(x, y):
                yield from rec(k + 1)
            phi[x], inv[y] = -1, -1

    for p in rec(0):
        if _full_check(sb, su, sv, db, du, dv, p):
            yield p


def _full_check(sb, su, sv, db, du, dv, p) -> bool:
    n = len(p)
    for B, C in zip(sb, db):
        for a in range(n):
            for b in range(n):
                if p[B[a][b]] != C[p[a]][p[b]]:
                    return False
    for U, W in zip(su, du):
        for a in range(n):
            if p[U[a]] != W[p[a]]:
                return False
    for V, W in zip(sv, dv):
        for a in range(n):
            for b in range(n):
                if V[a][b] != W[p[a]][p[b]]:
                    return False
    return True


def find_isomorphism(src: Signature, dst: Signature) -> tuple[int, ...] | None:
    return next(iter_isomorphisms(src, dst), None)


def lattice_iso_search(S: SupLattice, T: SupLattice) -> LatticeMap | None:
    """A join-preserving bijection S -> T (its inverse is then join-preserving too), or None."""
    phi = find_isomorphism(lattice_signature(S), lattice_signature(T))
    return None if phi is None else LatticeMap(S, T, phi)


# ------------------------------------------------ canonical generation


def canonical_form(L: SupLattice) -> tuple:
    """Lexicographically least order matrix over relabellings fixing bottom and top."""
    n = L.n
    if n <= 2:
        return (n, tuple(map(tuple, L.leq.astype(int).tolist())))
    inner = [a for a in range(n) if a not in (L.bottom, L.top)]
    leq = L.leq
    best = None
    for perm in itertools.permutations(inner):
        order = [L.bottom, *perm, L.top]
        m = leq[np.ix_(order, order)].astype(int)
        key = tuple(map(tuple, m.tolist()))
        if best is None or key > best:
            best = key
    return (n, best)


def generate_lattices(n: int) -> list[SupLattice]:
    """All lattices with n elements up to isomorphism, sorted by canonical form.

    Element 0 is bottom, n-1 is top, and the labelling is a linear extension.
    """
    if n == 1:
        return [SupLattice([[0]], ["0"])]
    if n == 2:
        return [chain(2)]
    inner = list(range(1, n - 1))
    pairs = [(i, j) for i in inner for j in inner if i < j]
    found = {}
    for mask in range(2 ** len(pairs)):
        rel = [p for k, p in enumerate(pairs) if mask >> k & 1]
        leq = np.eye(n, dtype=bool)
        leq[0, :] = True
        leq[:, n - 1] = True
        for a, b in rel:
            leq[a, b] = True
        closed = leq.copy()
        for k in range(n):
            closed |= closed[:, k : k + 1] & closed[k : k + 1, :]
        if not np.array_equal(closed, leq):
            continue
        try:
            L = lattice_from_order(n, [(a, b) for a in range(n) for b in range(n) if leq[a, b]])
        except StructureError:
            continue
        cf = canonical_form(L)
        if cf not in found:
            found[cf] = _relabel_canonical(L, cf)
    return [found[k] for k in sorted(found)]


def _relabel_canonical(L: SupLattice, cf) -> SupLattice:
    n = L.n
    m = np.array(cf[1], dtype=bool)
    join = np.zeros((n, n), dtype=np.int64)
    for a in range(n):
        for b in range(n):
            ubs = np.flatnonzero(m[a] & m[b])
            join[a, b] = [u for u in ubs if m[u, ubs].all()][0]
    return SupLattice(join)
