"""Hilbert bimodules, the interior tensor product and the conjugate bimodule.

Elements of ``X (x)_B Y`` are represented by their inner products against
simple tensors: ``Phi(x, y) = <Phi, x (x) y>_C`` on the grid ``X x Y``. The
generator ``phi_{m,n}`` has values ``<n, <m,x>_B . y>_C``; every element is a
pointwise join of generators, which already performs the Hilbert quotient.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .budget import Budget, BudgetExceeded, default_budget
from .hilbmod import (
    HilbertModule,
    QModule,
    check_inner,
    _first_duplicate,
    check_module,
    module_iso_search,
)
from .laws import LawLog, StructureError, Violation
from .quantale import InvQuantale
from .suplat import Signature, SupLattice, _frozen, find_isomorphism, join_closure, lattice_of_tuples

# ---------------------------------------------------------------- bimodules


class HilbertBimodule:
    """An A-B bimodule ``X`` with optional inner products ``_A<-,->`` and ``<-,->_B``.

    ``lact[x, a] = a . x`` and ``ract[x, b] = x <> b``.
    """

    def __init__(self, A: InvQuantale, B: InvQuantale, lat: SupLattice, lact, ract, lip=None, rip=None, name=""):
        self.A, self.B, self.lat = A, B, lat
        self.lact = _frozen(lact)
        self.ract = _frozen(ract)
        self.lip = None if lip is None else _frozen(lip)
        self.rip = None if rip is None else _frozen(rip)
        self.n = lat.n
        self.name = name

    def __repr__(self):
        return f"HilbertBimodule(n={self.n}, {self.A!r} | {self.B!r})"

    @property
    def labels(self):
        return self.lat.labels

    @cached_property
    def left(self) -> HilbertModule | QModule:
        mod = QModule(self.A, self.lat, self.lact, "left")
        if self.lip is None:
            return mod
        return HilbertModule(mod, self.lip, check_inner(mod, self.lip).level)

    @cached_property
    def right(self) -> HilbertModule | QModule:
        mod = QModule(self.B, self.lat, self.ract, "right")
        if self.rip is None:
            return mod
        return HilbertModule(mod, self.rip, check_inner(mod, self.rip).level)

    @property
    def left_level(self):
        return getattr(self.left, "level", None)

    @property
    def right_level(self):
        return getattr(self.right, "level", None)


def check_bimodule(X: HilbertBimodule) -> list[Violation]:
    """Module laws on both sides, commuting actions, inner-product laws (1)-(4)
    on each side and the adjointness of each action for the other inner product."""
    out = []
    for v in check_module(X.A, X.lat, X.lact, "left"):
        out.append(Violation("Left" + v.law, v.witness, v.detail))
    for v in check_module(X.B, X.lat, X.ract, "right"):
        out.append(Violation("Right" + v.law, v.witness, v.detail))
    if out:
        return out
    log = LawLog()
    L, R = X.lact, X.ract
    for a in range(X.A.n):
        for b in range(X.B.n):
            bad = np.flatnonzero(R[L[:, a], b] != L[R[:, b], a])
            if len(bad):
                log.fail("ActionsCommute", int(bad[0]), a, b, detail="(a.x)<>b = a.(x<>b)")
    out.extend(log.violations)
    if X.lip is not None:
        chk = check_inner(QModule(X.A, X.lat, L, "left"), X.lip)
        out.extend(Violation("Left" + v.law, v.witness, v.detail) for v in chk.pre)
        if not chk.pre:
            # _A<x<>b, y> = _A<x, y<>b*>
            SB = X.B.star
            for b in range(X.B.n):
                bad = np.argwhere(X.lip[R[:, b], :] != X.lip[:, R[:, SB[b]]])
                if len(bad):
                    x, y = bad[0]
                    out.append(Violation("RightActionAdjoint", (int(x), int(y), b), "_A<x<>b,y> = _A<x,y<>b*>"))
                    break
    if X.rip is not None:
        chk = check_inner(QModule(X.B, X.lat, R, "right"), X.rip)
        out.extend(Violation("Right" + v.law, v.witness, v.detail) for v in chk.pre)
        if not chk.pre:
            SA = X.A.star
            for a in range(X.A.n):
                bad = np.argwhere(X.rip[L[:, a], :] != X.rip[:, L[:, SA[a]]])
                if len(bad):
                    x, y = bad[0]
                    out.append(Violation("LeftActionAdjoint", (int(x), int(y), a), "<a.x,y>_B = <x,a*.y>_B"))
                    break
    return out


def validate_bimodule(X: HilbertBimodule, level: str | None = None) -> HilbertBimodule:
    vs = check_bimodule(X)
    if vs:
        raise StructureError("Hilbert bimodule", vs)
    if level is not None:
        from .hilbmod import LEVELS

        for side, got in (("left", X.left_level), ("right", X.right_level)):
            if got is not None and LEVELS.index(got) < LEVELS.index(level):
                chk = check_inner(getattr(X, side).mod, getattr(X, side).ip)
                miss = [v for v in (chk.separation, chk.strictness) if v is not None]
                raise StructureError(f"{level} {side} Hilbert module", miss)
    return X


def regular_bimodule(A: InvQuantale) -> HilbertBimodule:
    """A as an A-A bimodule: ``_A<a,b> = a.b*``, ``<a,b>_A = a*.b``."""
    M, S = A.mult, A.star
    idx = np.arange(A.n)
    return HilbertBimodule(
        A, A, A.lat, M.T, M, M[idx[:, None], S[None, :]], M[S[:, None], idx[None, :]], name=f"{A.name}_bi"
    )


def conjugate(X: HilbertBimodule) -> HilbertBimodule:
    """``X°``: same carrier, ``b .° x = x <> b*``, ``x <>° a = a* . x``, inner products swapped."""
    lact = X.ract[:, X.B.star]
    ract = X.lact[:, X.A.star]
    return HilbertBimodule(X.B, X.A, X.lat, lact, ract, lip=X.rip, rip=X.lip, name=(X.name + "°") if X.name else "")


# ------------------------------------------------------------- the tensor


@dataclass
class TensorModule:
    """``X (x)_B Y`` as a C-module (and A-module when X carries a left action)."""

    X: HilbertModule | HilbertBimodule
    Y: HilbertBimodule
    elements: list[tuple[int, ...]]
    index: dict
    lat: SupLattice
    gen_of: np.ndarray  # gen_of[m, n] = element index of m (x) n
    ract: np.ndarray
    rip: np.ndarray
    lact: np.ndarray | None = None
    lip: np.ndarray | None = None
    decomposition_consistent: bool = True

    @property
    def n(self) -> int:
        return len(self.elements)

    @property
    def A(self):
        return self.X.A if isinstance(self.X, HilbertBimodule) else None

    @property
    def C(self) -> InvQuantale:
        return self.Y.B

    @cached_property
    def right(self) -> HilbertModule:
        mod = QModule(self.C, self.lat, self.ract, "right")
        return HilbertModule(mod, self.rip, check_inner(mod, self.rip).level)

    def bimodule(self) -> HilbertBimodule:
        if self.lact is None:
            raise ValueError("the left factor has no left action")
        return HilbertBimodule(self.A, self.C, self.lat, self.lact, self.ract, self.lip, self.rip)

    def simple(self, m: int, n: int) -> int:
        return int(self.gen_of[m, n])

    def label(self, e: int) -> str:
        return self.lat.labels[e]


def _right_parts(X):
    """(B, right action, right ip) of a right Hilbert module or bimodule."""
    if isinstance(X, HilbertBimodule):
        if X.rip is None:
            raise ValueError("the left factor needs a right inner product")
        return X.B, X.ract, X.rip
    return X.A, X.act, X.ip


def simple_tensor_values(X, Y: HilbertBimodule) -> np.ndarray:
    """``G[m, n, x, y] = <n, <m,x>_B . y>_C``."""
    B, _, PX = _right_parts(X)
    if not Y.A.same_as(B):
        raise ValueError("the tensor factors are over different quantales")
    if Y.rip is None:
        raise ValueError("the right factor needs a right inner product")
    # T[y, m, x] = <m,x>_B . y
    T = Y.lact[:, PX]
    # V[n, y, m, x] = <n, T[y,m,x]>
    V = Y.rip[:, T]
    return np.ascontiguousarray(V.transpose(2, 0, 3, 1))


def _irredundant(gens: list[int], target: tuple, elements, joinC, order) -> list[int]:
    """Greedily drop generators (in ``order``) whose removal keeps the join equal to ``target``."""
    keep = list(gens)
    for g in order:
        trial = [h for h in keep if h != g]
        acc = None
        for h in trial:
            e = np.asarray(elements[h])
            acc = e if acc is None else joinC[acc, e]
        if acc is None:
            continue
        if tuple(acc.tolist()) == target:
            keep = trial
    return keep


def interior_tensor(X, Y: HilbertBimodule, budget: Budget | None = None) -> TensorModule:
    """``X (x)_B Y`` for a right Hilbert B-module (or A-B bimodule) ``X`` and a B-C bimodule ``Y``."""
    budget = budget or default_budget()
    B, XR, PX = _right_parts(X)
    C = Y.B
    nx, ny = PX.shape[0], Y.n
    budget.check_scan("tensor grid", (nx * ny) ** 2)
    G = simple_tensor_values(X, Y).reshape(nx, ny, nx * ny)
    JC = C.lat.join
    gens = {}
    for m in range(nx):
        for n in range(ny):
            gens.setdefault(tuple(G[m, n].tolist()), (m, n))
    zero = tuple([C.bottom] * (nx * ny))

    def j2(s, t):
        return tuple(JC[np.asarray(s), np.asarray(t)].tolist())

    elements = join_closure(sorted(gens), j2, zero)
    budget.check_carrier("tensor carrier", len(elements))
    elements = sorted(elements)
    index = {e: i for i, e in enumerate(elements)}
    gen_of = np.array([[index[tuple(G[m, n].tolist())] for n in range(ny)] for m in range(nx)], dtype=np.int64)
    labels = []
    for e in elements:
        if e in gens:
            m, n = gens[e]
            labels.append(f"{_lab(X, m)}*{Y.labels[n]}")
        elif e == zero:
            labels.append("0")
        else:
            labels.append(f"t{index[e]}")
    lat = lattice_of_tuples(elements, C.lat, labels)
    E = np.array(elements, dtype=np.int64).reshape(len(elements), nx * ny)
    k = len(elements)
    # right action: (Phi <> c)(x,y) = c* . Phi(x,y)
    MC, SC = C.mult, C.star
    ract = np.empty((k, C.n), dtype=np.int64)
    for c in range(C.n):
        ract[:, c] = [index[tuple(r)] for r in MC[SC[c], E].tolist()]
    # generators below each element; flattened grid positions (x, y)
    leq = lat.leq
    flat_gen = gen_of.ravel()
    below = [np.flatnonzero(leq[flat_gen, e]) for e in range(k)]
    # <Phi, Psi> = V_{(x,y) : phi_xy <= Psi} Phi(x,y)
    rip = np.empty((k, k), dtype=np.int64)
    for j in range(k):
        vals = E[:, below[j]]
        acc = np.full(k, C.bottom, dtype=np.int64)
        for col in vals.T:
            acc = JC[acc, col]
        rip[:, j] = acc
    consistent = True
    # cross-check against an irredundant decomposition
    for j in range(k):
        gj = sorted(set(int(flat_gen[p]) for p in below[j]))
        keep = _irredundant(gj, elements[j], elements, JC, gj)
        pos = [int(np.flatnonzero(flat_gen == g)[0]) for g in keep]
        acc = np.full(k, C.bottom, dtype=np.int64)
        for p in pos:
            acc = JC[acc, E[:, p]]
        if not np.array_equal(acc, rip[:, j]):
            consistent = False
    lact = lip = None
    if isinstance(X, HilbertBimodule):
        A = X.A
        SA = A.star
        # (a . Phi)(x, y) = Phi(a* . x, y)
        grid = np.arange(nx * ny).reshape(nx, ny)
        lact = np.empty((k, A.n), dtype=np.int64)
        for a in range(A.n):
            perm = grid[X.lact[:, SA[a]], :].ravel()
            lact[:, a] = [index[tuple(r)] for r in E[:, perm].tolist()]
        if X.lip is not None and Y.lip is not None:
            lip = _left_tensor_ip(X, Y, elements, gen_of, below, flat_gen, E, k)
            if lip is None:
                consistent = False
    return TensorModule(X, Y, elements, index, lat, gen_of, ract, rip, lact, lip, consistent)


def tensor_left_action(X: HilbertBimodule, Y: HilbertBimodule, budget: Budget | None = None) -> HilbertBimodule:
    """``X (x)_B Y`` as an A-C bimodule for an A-B bimodule ``X``.

    ``a . [x (x) y] = [(a . x) (x) y]``; on the function representation this is
    ``(a . Phi)(p, q) = Phi(a* . p, q)`` because ``<a . x, p>_B = <x, a* . p>_B``.
    """
    if not isinstance(X, HilbertBimodule):
        raise ValueError("the left factor has no left action")
    return validate_bimodule(interior_tensor(X, Y, budget).bimodule())


def _left_tensor_ip(X: HilbertBimodule, Y: HilbertBimodule, elements, gen_of, below, flat_gen, E, k):
    """``_A<x(x)y, x'(x)y'> = _A<x <> _B<y,y'>, x'>`` extended over two different
    irredundant decompositions; ``None`` if they disagree."""
    A = X.A
    JA = A.lat.J
    nx, ny = gen_of.shape
    JC = Y.B.lat.join
    rep = {}
    for p in range(nx * ny):
        rep.setdefault(int(flat_gen[p]), divmod(p, ny))
    decs = []
    for order in (lambda g: g, lambda g: list(reversed(g))):
        dec = []
        for j in range(k):
            gj = sorted(set(int(flat_gen[p]) for p in below[j]))
            dec.append([rep[g] for g in _irredundant(gj, elements[j], elements, JC, order(gj))])
        decs.append(dec)
    XR, XL = X.ract.tolist(), X.lip.tolist()
    YL = Y.lip.tolist()
    results = []
    for dec in decs:
        out = np.empty((k, k), dtype=np.int64)
        for i in range(k):
            for j in range(k):
                acc = A.bottom
                for x, y in dec[i]:
                    for x2, y2 in dec[j]:
                        acc = JA[acc][XL[XR[x][YL[y][y2]]][x2]]
                out[i, j] = acc
        results.append(out)
    if not np.array_equal(results[0], results[1]):
        return None
    return results[0]


def _lab(X, m):
    return X.lat.labels[m]


# ---------------------------------------------------------- brute-force oracle


@dataclass
class OracleTensor:
    lat: SupLattice
    ract: np.ndarray
    rip: np.ndarray
    simple: np.ndarray  # simple[m, n]


def tensor_oracle(X, Y: HilbertBimodule, max_grid: int = 16) -> OracleTensor:
    """Independent construction: formal joins of simple tensors (subsets of ``X x Y``),
    the pre-inner product by formal double join, and the quotient by ``R_H``."""
    B, _, PX = _right_parts(X)
    C = Y.B
    nx, ny = PX.shape[0], Y.n
    g = nx * ny
    if g > max_grid:
        raise BudgetExceeded("tensor oracle grid", g, max_grid)
    pairs = [(m, n) for m in range(nx) for n in range(ny)]
    PXl, YA, YP = PX.tolist(), Y.lact.tolist(), Y.rip.tolist()
    JC, MC, SC = C.lat.J, C.M, C.S
    # <(m,n), (m2,n2)> = <n, <m,m2>_B . n2>_C
    base = [[YP[n][YA[n2][PXl[m][m2]]] for (m2, n2) in pairs] for (m, n) in pairs]
    # key of a subset: its inner products against every singleton
    keys = []
    for mask in range(1 << g):
        acc = [C.bottom] * g
        for i in range(g):
            if mask >> i & 1:
                row = base[i]
                acc = [JC[a][b] for a, b in zip(acc, row)]
        keys.append(tuple(acc))
    classes = sorted(set(keys))
    cid = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    rep = {}
    for mask, key in enumerate(keys):
        rep.setdefault(key, mask)
    repm = [rep[c] for c in classes]
    join = [[cid[keys[repm[i] | repm[j]]] for j in range(k)] for i in range(k)]
    lat = SupLattice(join)
    # (m,n) <> c = (m, n <> c)
    YR = Y.ract.tolist()
    pidx = {p: i for i, p in enumerate(pairs)}
    ract = np.empty((k, C.n), dtype=np.int64)
    for i in range(k):
        for c in range(C.n):
            mask = 0
            for b in range(g):
                if repm[i] >> b & 1:
                    m, n = pairs[b]
                    mask |= 1 << pidx[(m, YR[n][c])]
            ract[i, c] = cid[keys[mask]]
    # <S, T> = V_{s in S, t in T} <s, t>
    rip = np.empty((k, k), dtype=np.int64)
    for i in range(k):
        for j in range(k):
            acc = C.bottom
            for a in range(g):
                if repm[i] >> a & 1:
                    for b in range(g):
                        if repm[j] >> b & 1:
                            acc = JC[acc][base[a][b]]
            rip[i, j] = acc
    simple = np.array([[cid[keys[1 << pidx[(m, n)]]] for n in range(ny)] for m in range(nx)], dtype=np.int64)
    return OracleTensor(lat, ract, rip, simple)


def oracle_matches(T: TensorModule, O: OracleTensor) -> bool:
    """A join/action/inner-product preserving bijection that sends simple tensors to simple tensors."""
    if T.n != O.lat.n:
        return False
    src = Signature(T.n, binary=[T.lat.join], unary=[T.ract[:, c] for c in range(T.C.n)], valued=[T.rip],
                    colors=[(c, int(T.rip[e, e])) for e, c in enumerate(T.lat.colors)])
    dst = Signature(O.lat.n, binary=[O.lat.join], unary=[O.ract[:, c] for c in range(T.C.n)], valued=[O.rip],
                    colors=[(c, int(O.rip[e, e])) for e, c in enumerate(O.lat.colors)])
    from .suplat import iter_isomorphisms

    for phi in iter_isomorphisms(src, dst):
        if all(phi[T.gen_of[m, n]] == O.simple[m, n] for m in range(T.gen_of.shape[0]) for n in range(T.gen_of.shape[1])):
            return True
    return False


# -------------------------------------------------------- canonical maps


@dataclass
class IsoReport:
    """Clauses of "the canonical map ``m (x) n |-> g(m, n)`` is a unitary"."""

    well_defined: bool
    join_preserving: bool
    action_preserving: bool
    ip_preserving: bool
    injective: bool
    surjective: bool
    left_action_preserving: bool | None = None
    left_ip_preserving: bool | None = None
    values: tuple[int, ...] = ()
    witness: dict = field(default_factory=dict)
    preconditions: dict = field(default_factory=dict)  # failed clause -> witness

    @property
    def unitary(self) -> bool:
        ok = (self.well_defined and self.join_preserving and self.action_preserving and self.ip_preserving
              and self.injective and self.surjective)
        return ok and self.left_action_preserving is not False and self.left_ip_preserving is not False


def standard_iso(T: TensorModule, target: HilbertModule | HilbertBimodule,
                 gen: Callable[[int, int], int]) -> IsoReport:
    """Check the map induced by ``m (x) n |-> gen(m, n)`` from ``T`` into ``target``.

    The map is read off on each element as the join of ``gen`` over the simple
    tensors below it; well-definedness asks that this agree with ``gen`` on
    every simple tensor.
    """
    if isinstance(target, HilbertBimodule):
        tlat, tract, trip = target.lat, target.ract, target.rip
        tlact, tlip = target.lact, target.lip
    else:
        tlat, tract, trip = target.lat, target.act, target.ip
        tlact = tlip = None
    nx, ny = T.gen_of.shape
    leq = T.lat.leq
    JT = tlat.J
    wit = {}
    vals = []
    for e in range(T.n):
        acc = tlat.bottom
        for m in range(nx):
            for n in range(ny):
                if leq[T.gen_of[m, n], e]:
                    acc = JT[acc][gen(m, n)]
        vals.append(acc)
    well = True
    for m in range(nx):
        for n in range(ny):
            if vals[T.gen_of[m, n]] != gen(m, n):
                well = False
                wit.setdefault("well_defined", (m, n))
    f = np.array(vals, dtype=np.int64)
    jp = bool((f[T.lat.join] == tlat.join[f[:, None], f[None, :]]).all())
    ap = bool((f[T.ract] == tract[f, :]).all())
    ipp = bool((T.rip == trip[f[:, None], f[None, :]]).all())
    inj = len(set(vals)) == T.n
    sur = len(set(vals)) == tlat.n
    if not sur:
        wit["surjective"] = tuple(sorted(set(range(tlat.n)) - set(vals)))[:1]
    if not inj:
        seen = {}
        for e, v in enumerate(vals):
            if v in seen:
                wit["injective"] = (seen[v], e)
                break
            seen[v] = e
    lap = lipp = None
    if tlact is not None and T.lact is not None:
        lap = bool((f[T.lact] == tlact[f, :]).all())
    if tlip is not None and T.lip is not None:
        lipp = bool((T.lip == tlip[f[:, None], f[None, :]]).all())
    return IsoReport(well, jp, ap, ipp, inj, sur, lap, lipp, tuple(vals), wit)


def unit_iso(M: HilbertModule) -> tuple[TensorModule, IsoReport]:
    """``M (x)_A A -> M``, ``m (x) a |-> m <> a``.

    ``preconditions`` names the failing clauses among essential, separated and
    hilbert (separation of the inner product); the map is a unitary exactly
    when none fails.
    """
    R = regular_bimodule(M.A)
    T = interior_tensor(M, R)
    rep = standard_iso(T, M, lambda m, a: M.X[m][a])
    mod = M.mod
    if not mod.essential:
        rep.preconditions["essential"] = (min(set(range(M.n)) - set(mod.ess)),)
    dup = _first_duplicate(mod.X)
    if dup:
        rep.preconditions["separated"] = dup
    chk = check_inner(mod, M.ip)
    if chk.separation is not None:
        rep.preconditions["hilbert"] = chk.separation.witness
    return T, rep


def left_linking_iso(X: HilbertBimodule, budget: Budget | None = None) -> tuple[TensorModule, IsoReport]:
    """``X (x)_B X° -> A``, ``x (x) y° |-> _A<x,y>``."""
    T = interior_tensor(X, conjugate(X), budget)
    A = regular_bimodule(X.A)
    L = X.lip.tolist()
    return T, standard_iso(T, A, lambda x, y: L[x][y])


def right_linking_iso(X: HilbertBimodule, budget: Budget | None = None) -> tuple[TensorModule, IsoReport]:
    """``X° (x)_A X -> B``, ``x° (x) y |-> <x,y>_B``."""
    T = interior_tensor(conjugate(X), X, budget)
    B = regular_bimodule(X.B)
    R = X.rip.tolist()
    return T, standard_iso(T, B, lambda x, y: R[x][y])


def tensor_iso_search(T1: TensorModule, T2: TensorModule) -> tuple[int, ...] | None:
    return module_iso_search(T1.right, T2.right)
