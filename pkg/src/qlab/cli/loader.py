"""Turning documents into tables (and back), resolving references against the bundled catalog."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ..hilbmod import HilbertModule, QModule, check_inner
from ..laws import StructureError
from ..quantale import InvQuantale
from ..suplat import SupLattice, lattice_from_order
from ..tensor import HilbertBimodule
from .document import (
    BimoduleDef,
    Diagnostic,
    Document,
    ModuleDef,
    QuantaleDef,
    SupLatticeDef,
    Table,
    parse,
)

# ----------------------------------------------------------------- catalog

CATALOG = ("two", "chain3", "diamond", "mat2_two", "col2", "degenerate_chain3", "trivial_chain3", "two_bi", "chain3_bi")


def catalog_text(name: str) -> str:
    return resources.files("qlab.catalog").joinpath(f"{name}.qlab").read_text()


def catalog_document(name: str) -> Document:
    return parse(catalog_text(name), f"{name}.qlab")


# -------------------------------------------------------------- resolution


@dataclass
class Loaded:
    name: str
    kind: str
    obj: object
    definition: object
    duality: tuple | None = None


class Workspace:
    """Builds the objects of one document, resolving unknown names in the catalog."""

    def __init__(self, doc: Document, source: str = ""):
        self.doc = doc
        self.source = source
        self._cache: dict = {}
        self._stack: list = []

    def names(self) -> list[str]:
        return self.doc.names()

    def get(self, name: str, span=None) -> Loaded:
        if name in self._cache:
            return self._cache[name]
        d = self.doc.get(name)
        if d is None:
            if name in CATALOG or any(name == n for n in _catalog_names()):
                entry = _catalog_owner(name)
                ws = _catalog_workspace(entry)
                return ws.get(name)
            raise Diagnostic(f"unresolved reference {name!r}", span, self.source)
        if name in self._stack:
            raise Diagnostic(f"cyclic reference through {name!r}", d.span, self.source)
        self._stack.append(name)
        try:
            out = self._build(d)
        finally:
            self._stack.pop()
        self._cache[name] = out
        return out

    def _expect(self, name: str, kind: str, span) -> Loaded:
        got = self.get(name, span)
        if got.kind != kind:
            raise Diagnostic(f"{name!r} is a {got.kind}, expected a {kind}", span, self.source)
        return got

    def _build(self, d) -> Loaded:
        if isinstance(d, SupLatticeDef):
            L = self._lattice(d)
            dual = None
            if d.duality is not None:
                dual = tuple(int(v) for v in self._unary(d.duality, L.labels, L.labels, "duality", d.span))
            return Loaded(d.name, "suplattice", L, d, dual)
        if isinstance(d, QuantaleDef):
            L = self._expect(d.lattice, "suplattice", d.span).obj
            mult = self._binary(d.mult, L.labels, L.labels, L.labels, "mult", d.span)
            star = self._unary(d.star, L.labels, L.labels, "star", d.span)
            unit = None
            if d.unit is not None:
                unit = self._index(L.labels, d.unit, "unit", d.span)
            return Loaded(d.name, "quantale", InvQuantale(L, mult, star, unit, d.name), d)
        if isinstance(d, ModuleDef):
            A = self._expect(d.quantale, "quantale", d.span).obj
            lat = self._expect(d.lattice, "suplattice", d.span)
            L = lat.obj
            if d.side == "right":
                act = self._binary(d.action, L.labels, A.labels, L.labels, "action", d.span)
            else:
                act = self._binary(d.action, A.labels, L.labels, L.labels, "action", d.span).T
            mod = QModule(A, L, act, d.side)
            if d.inner is None:
                return Loaded(d.name, "module", mod, d, lat.duality)
            ip = self._binary(d.inner, L.labels, L.labels, A.labels, "inner", d.span)
            H = HilbertModule(mod, ip, _level_or_none(mod, ip))
            H.name = d.name
            return Loaded(d.name, "module", H, d, lat.duality)
        if isinstance(d, BimoduleDef):
            A = self._expect(d.left, "quantale", d.span).obj
            B = self._expect(d.right, "quantale", d.span).obj
            lat = self._expect(d.carrier, "suplattice", d.span)
            L = lat.obj
            lact = self._binary(d.lact, A.labels, L.labels, L.labels, "lact", d.span).T
            ract = self._binary(d.ract, L.labels, B.labels, L.labels, "ract", d.span)
            lip = None if d.linner is None else self._binary(d.linner, L.labels, L.labels, A.labels, "linner", d.span)
            rip = None if d.rinner is None else self._binary(d.rinner, L.labels, L.labels, B.labels, "rinner", d.span)
            return Loaded(d.name, "bimodule", HilbertBimodule(A, B, L, lact, ract, lip, rip, d.name), d, lat.duality)
        raise TypeError(d)

    # tables

    def _index(self, labels, name, what, span) -> int:
        try:
            return labels.index(name)
        except ValueError:
            raise Diagnostic(f"{what}: unknown element {name!r}", span, self.source) from None

    def _lattice(self, d: SupLatticeDef) -> SupLattice:
        els = list(d.elements)
        dup = [e for e, c in Counter(els).items() if c > 1]
        if dup:
            raise Diagnostic(f"duplicate element {dup[0]!r}", d.span, self.source)
        n = len(els)
        if n == 0:
            raise Diagnostic("a sup-lattice needs at least one element", d.span, self.source)
        if d.order is not None:
            pairs = [(self._index(els, a, "order", d.span), self._index(els, b, "order", d.span)) for a, b in d.order]
            try:
                return lattice_from_order(n, pairs, els)
            except StructureError as e:
                v = e.violations[0]
                if v.law == "NotAntisymmetric":
                    a, b = v.witness[:2]
                    raise Diagnostic(f"duplicate element: {els[a]!r} and {els[b]!r} are equal under the order",
                                     d.span, self.source) from None
                if v.law == "NoLeastUpperBound":
                    a, b = v.witness[:2]
                    raise Diagnostic(f"join-incomplete order: {els[a]!r} and {els[b]!r} have no least upper bound",
                                     d.span, self.source) from None
                raise Diagnostic(str(e), d.span, self.source) from None
        t = d.join
        table = {}
        for (a, b), c in t.entries:
            table[self._index(els, a, "join", d.span), self._index(els, b, "join", d.span)] = \
                self._index(els, c, "join", d.span)
        dflt = None if t.default is None else self._index(els, t.default, "join", d.span)
        join = np.empty((n, n), dtype=np.int64)
        for i in range(n):
            for j in range(n):
                if (i, j) in table:
                    join[i, j] = table[i, j]
                elif (j, i) in table:
                    join[i, j] = table[j, i]
                elif i == j:
                    join[i, j] = i
                elif dflt is not None:
                    join[i, j] = dflt
                else:
                    raise Diagnostic(f"join: entry ({els[i]},{els[j]}) missing", d.span, self.source)
        return SupLattice(join, els)

    def _binary(self, t: Table, rows, cols, vals, what, span) -> np.ndarray:
        out = np.full((len(rows), len(cols)), -1, dtype=np.int64)
        for (a, b), c in t.entries:
            out[self._index(rows, a, what, span), self._index(cols, b, what, span)] = self._index(vals, c, what, span)
        if t.default is not None:
            out[out < 0] = self._index(vals, t.default, what, span)
        miss = np.argwhere(out < 0)
        if len(miss):
            i, j = miss[0]
            raise Diagnostic(f"{what}: entry ({rows[i]},{cols[j]}) missing", span, self.source)
        return out

    def _unary(self, t: Table, keys, vals, what, span) -> np.ndarray:
        out = np.full(len(keys), -1, dtype=np.int64)
        for (a,), c in t.entries:
            out[self._index(keys, a, what, span)] = self._index(vals, c, what, span)
        if t.default is not None:
            out[out < 0] = self._index(vals, t.default, what, span)
        miss = np.flatnonzero(out < 0)
        if len(miss):
            raise Diagnostic(f"{what}: entry {keys[miss[0]]} missing", span, self.source)
        return out


def _level_or_none(mod: QModule, ip):
    try:
        return check_inner(mod, ip).level
    except Exception:
        return None


_CATALOG_WS: dict = {}
_OWNERS: dict | None = None


def _catalog_workspace(entry: str) -> Workspace:
    if entry not in _CATALOG_WS:
        _CATALOG_WS[entry] = Workspace(catalog_document(entry), f"{entry}.qlab")
    return _CATALOG_WS[entry]


def _catalog_names() -> list[str]:
    global _OWNERS
    if _OWNERS is None:
        _OWNERS = {}
        for entry in CATALOG:
            for n in catalog_document(entry).names():
                _OWNERS.setdefault(n, entry)
    return list(_OWNERS)


def _catalog_owner(name: str) -> str:
    _catalog_names()
    return name if name in CATALOG else _OWNERS[name]


def load_file(path: str) -> Workspace:
    """A ``.qlab`` file on disk, or a bundled catalog entry by name (with or without ``.qlab``)."""
    p = Path(path)
    if p.exists():
        return Workspace(parse(p.read_text(), str(path)), str(path))
    stem = p.name[:-5] if p.name.endswith(".qlab") else p.name
    if stem in CATALOG:
        return _catalog_workspace(stem)
    raise Diagnostic(f"no such file or catalog entry: {path}")


def resolve(ref: str, kinds: tuple[str, ...]) -> Loaded:
    """``file.qlab``, ``file.qlab:NAME`` or a catalog name; without ``:NAME`` the last
    definition of an accepted kind is used."""
    path, _, name = ref.partition(":")
    ws = load_file(path)
    if name:
        got = ws.get(name)
        if got.kind not in kinds:
            raise Diagnostic(f"{ref!r} is a {got.kind}, expected {' or '.join(kinds)}")
        return got
    stem = Path(path).name
    stem = stem[:-5] if stem.endswith(".qlab") else stem
    if ws.doc.get(stem) is not None and ws.doc.get(stem).kind in kinds:
        return ws.get(stem)
    cands = [d.name for d in ws.doc.defs if d.kind in kinds]
    if not cands:
        raise Diagnostic(f"{ref!r} has no {' or '.join(kinds)} definition")
    return ws.get(cands[-1])


# ---------------------------------------------------------------- export

_IDENT = re.compile(r"^[A-Za-z0-9_]+$")


def _check_labels(labels):
    bad = [s for s in labels if not _IDENT.match(s)]
    if bad or len(set(labels)) != len(labels):
        raise ValueError(f"labels are not distinct identifiers: {bad[:3] or labels}")


def _common(values) -> str | None:
    c = Counter(values).most_common(1)
    return c[0][0] if c else None


def _binary_table(arr, rows, cols, vals, use_default=True) -> Table:
    flat = [vals[v] for v in np.asarray(arr).ravel().tolist()]
    dflt = _common(flat) if use_default else None
    entries = []
    for i, r in enumerate(rows):
        for j, c in enumerate(cols):
            v = vals[int(arr[i][j])]
            if v != dflt:
                entries.append(((r, c), v))
    return Table(tuple(entries), dflt, 2)


def lattice_def(name: str, L: SupLattice, duality=None) -> SupLatticeDef:
    _check_labels(L.labels)
    lab = L.labels
    entries = tuple(((lab[i], lab[j]), lab[L.J[i][j]]) for i in range(L.n) for j in range(i + 1, L.n))
    dual = None
    if duality is not None:
        dual = Table(tuple(((lab[i],), lab[v]) for i, v in enumerate(duality)), None, 1)
    return SupLatticeDef(name, tuple(lab), Table(entries, None, 2), None, dual)


def quantale_def(name: str, A: InvQuantale, lattice: str) -> QuantaleDef:
    lab = A.labels
    _check_labels(lab)
    star = Table(tuple(((lab[i],), lab[v]) for i, v in enumerate(A.S)), None, 1)
    return QuantaleDef(name, lattice, _binary_table(A.mult, lab, lab, lab), star,
                       None if A.unit is None else lab[A.unit])


def module_def(name: str, H, quantale: str, lattice: str, level: str | None = None) -> ModuleDef:
    mod = H.mod if isinstance(H, HilbertModule) else H
    A, L = mod.A, mod.lat
    _check_labels(L.labels)
    if mod.side == "right":
        action = _binary_table(mod.act, L.labels, A.labels, L.labels)
    else:
        action = _binary_table(mod.act.T, A.labels, L.labels, L.labels)
    inner = None
    if isinstance(H, HilbertModule):
        inner = _binary_table(H.ip, L.labels, L.labels, A.labels)
    return ModuleDef(name, quantale, lattice, mod.side, action, inner, level)


def bimodule_def(name: str, X: HilbertBimodule, left: str, right: str, carrier: str,
                 level: str | None = None) -> BimoduleDef:
    L = X.lat
    _check_labels(L.labels)
    lact = _binary_table(X.lact.T, X.A.labels, L.labels, L.labels)
    ract = _binary_table(X.ract, L.labels, X.B.labels, L.labels)
    lip = None if X.lip is None else _binary_table(X.lip, L.labels, L.labels, X.A.labels)
    rip = None if X.rip is None else _binary_table(X.rip, L.labels, L.labels, X.B.labels)
    return BimoduleDef(name, left, right, carrier, lact, ract, lip, rip, level)
