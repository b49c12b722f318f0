"""The ``.qlab`` description format: document model, parser and printer.

::

    suplattice NAME { elements: [a, b, ...]; join: { (a,b)=c; ... }; duality: { a=b; ... }; }
    suplattice NAME { elements: [...]; order: { a<=b; ... }; }
    quantale NAME { lattice: REF; mult: { (a,b)=c; ... }; star: { a=b; ... }; unit: e; }
    module NAME { quantale: REF; lattice: REF; side: right; action: {...}; inner: {...}; level: strict; }
    bimodule NAME { left: REF; right: REF; carrier: REF; lact: {...}; ract: {...};
                    linner: {...}; rinner: {...}; level: hilbert; }

Tables take an optional ``default: x;`` entry. Join tables may omit ``(a,a)``
and one of ``(a,b)``/``(b,a)``. Module actions are keyed ``(m,a)`` for right
modules and ``(a,m)`` for left ones; ``lact`` is keyed ``(a,x)`` and ``ract``
``(x,b)``. ``#`` starts a line comment.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

# ------------------------------------------------------------------ model


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self):
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class Table:
    entries: tuple  # ((key, ...), value) with keys as tuples of names
    default: str | None = None
    arity: int = 2


@dataclass(frozen=True)
class SupLatticeDef:
    name: str
    elements: tuple[str, ...]
    join: Table | None = None
    order: tuple[tuple[str, str], ...] | None = None
    duality: Table | None = None
    span: Span | None = field(default=None, compare=False)
    kind = "suplattice"


@dataclass(frozen=True)
class QuantaleDef:
    name: str
    lattice: str
    mult: Table
    star: Table
    unit: str | None = None
    span: Span | None = field(default=None, compare=False)
    kind = "quantale"


@dataclass(frozen=True)
class ModuleDef:
    name: str
    quantale: str
    lattice: str
    side: str
    action: Table
    inner: Table | None = None
    level: str | None = None
    span: Span | None = field(default=None, compare=False)
    kind = "module"


@dataclass(frozen=True)
class BimoduleDef:
    name: str
    left: str
    right: str
    carrier: str
    lact: Table
    ract: Table
    linner: Table | None = None
    rinner: Table | None = None
    level: str | None = None
    span: Span | None = field(default=None, compare=False)
    kind = "bimodule"


@dataclass(frozen=True)
class Document:
    defs: tuple

    def get(self, name: str):
        for d in self.defs:
            if d.name == name:
                return d
        return None

    def names(self) -> list[str]:
        return [d.name for d in self.defs]


class Diagnostic(Exception):
    def __init__(self, message: str, span: Span | None = None, source: str = ""):
        self.message, self.span, self.source = message, span, source
        where = f"{source}:" if source else ""
        where += f"{span}: " if span else (": " if source else "")
        super().__init__(f"{where}{message}")


# ------------------------------------------------------------------ lexer

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>\#[^\n]*)|(?P<le><=)|(?P<punct>[{}\[\](),;:=])|(?P<ident>[A-Za-z0-9_]+)"
)


@dataclass
class _Tok:
    kind: str
    text: str
    span: Span


def tokenize(text: str, source: str = "") -> list[_Tok]:
    toks = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise Diagnostic(f"unexpected character {text[pos]!r}", Span(line, col), source)
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind in ("le", "punct", "ident"):
                toks.append(_Tok("punct" if kind == "le" else kind, s, Span(line, col)))
            col += len(s)
        pos = m.end()
    toks.append(_Tok("eof", "", Span(line, col)))
    return toks


# ------------------------------------------------------------------ parser

_FIELDS = {
    "suplattice": {"elements", "join", "order", "duality"},
    "quantale": {"lattice", "mult", "star", "unit"},
    "module": {"quantale", "lattice", "side", "action", "inner", "level"},
    "bimodule": {"left", "right", "carrier", "lact", "ract", "linner", "rinner", "level"},
}
_REQUIRED = {
    "suplattice": {"elements"},
    "quantale": {"lattice", "mult", "star"},
    "module": {"quantale", "lattice", "action"},
    "bimodule": {"left", "right", "carrier", "lact", "ract"},
}
_TABLE_FIELDS = {"join": 2, "duality": 1, "mult": 2, "star": 1, "action": 2, "inner": 2,
                 "lact": 2, "ract": 2, "linner": 2, "rinner": 2}
LEVELS = ("pre", "hilbert", "strict")


class _Parser:
    def __init__(self, text: str, source: str):
        self.toks = tokenize(text, source)
        self.i = 0
        self.source = source

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        return Diagnostic(msg, tok.span, self.source)

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text or t.kind == "eof":
            shown = repr(t.text) if t.kind != "eof" else "end of input"
            raise self.error(f"expected {text!r}, found {shown}", t)
        return t

    def ident(self, what: str = "identifier") -> str:
        t = self.next()
        if t.kind != "ident":
            shown = repr(t.text) if t.kind != "eof" else "end of input"
            raise self.error(f"expected {what}, found {shown}", t)
        return t.text

    def document(self) -> Document:
        defs = []
        seen = {}
        while self.peek().kind != "eof":
            d = self.definition()
            if d.name in seen:
                raise Diagnostic(f"duplicate name {d.name!r} (first defined at {seen[d.name]})", d.span, self.source)
            seen[d.name] = d.span
            defs.append(d)
        return Document(tuple(defs))

    def definition(self):
        t = self.next()
        if t.kind != "ident" or t.text not in _FIELDS:
            raise self.error("expected 'suplattice', 'quantale', 'module' or 'bimodule'", t)
        kind = t.text
        name = self.ident("a name")
        self.expect("{")
        vals: dict = {}
        while self.peek().text != "}":
            ft = self.next()
            if ft.kind == "eof":
                raise self.error("expected '}', found end of input", ft)
            if ft.kind != "ident" or ft.text not in _FIELDS[kind]:
                raise self.error(f"unknown field {ft.text!r} for {kind}", ft)
            if ft.text in vals:
                raise self.error(f"field {ft.text!r} given twice", ft)
            self.expect(":")
            vals[ft.text] = self.value(kind, ft.text)
            self.expect(";")
        self.expect("}")
        missing = sorted(_REQUIRED[kind] - set(vals))
        if missing:
            raise Diagnostic(f"{kind} {name!r} is missing {', '.join(missing)}", t.span, self.source)
        return self.build(kind, name, vals, t)

    def value(self, kind: str, fname: str):
        if fname == "elements":
            self.expect("[")
            out = []
            if self.peek().text != "]":
                out.append(self.ident("an element"))
                while self.peek().text == ",":
                    self.next()
                    out.append(self.ident("an element"))
            self.expect("]")
            return tuple(out)
        if fname == "order":
            return self.order()
        if fname in _TABLE_FIELDS:
            return self.table(_TABLE_FIELDS[fname])
        tok = self.peek()
        v = self.ident()
        if fname == "side" and v not in ("left", "right"):
            raise self.error("side must be 'left' or 'right'", tok)
        if fname == "level" and v not in LEVELS:
            raise self.error("level must be 'pre', 'hilbert' or 'strict'", tok)
        return v

    def order(self):
        self.expect("{")
        pairs = []
        while self.peek().text != "}":
            a = self.ident("an element")
            self.expect("<=")
            b = self.ident("an element")
            self.expect(";")
            pairs.append((a, b))
        self.expect("}")
        return tuple(pairs)

    def table(self, arity: int) -> Table:
        self.expect("{")
        entries = []
        default = None
        seen = set()
        while self.peek().text != "}":
            tok = self.peek()
            if tok.text == "default" and self.toks[self.i + 1].text == ":":
                self.next()
                self.next()
                if default is not None:
                    raise self.error("default given twice", tok)
                default = self.ident("an element")
                self.expect(";")
                continue
            if arity == 2:
                self.expect("(")
                a = self.ident("an element")
                self.expect(",")
                b = self.ident("an element")
                self.expect(")")
                key = (a, b)
            else:
                key = (self.ident("an element"),)
            self.expect("=")
            v = self.ident("an element")
            self.expect(";")
            if key in seen:
                raise self.error(f"entry {_key_text(key)} given twice", tok)
            seen.add(key)
            entries.append((key, v))
        self.expect("}")
        return Table(tuple(entries), default, arity)

    def build(self, kind, name, v, tok):
        span = tok.span
        if kind == "suplattice":
            if ("join" in v) == ("order" in v):
                raise Diagnostic(f"suplattice {name!r} needs exactly one of join or order", span, self.source)
            return SupLatticeDef(name, v["elements"], v.get("join"), v.get("order"), v.get("duality"), span)
        if kind == "quantale":
            return QuantaleDef(name, v["lattice"], v["mult"], v["star"], v.get("unit"), span)
        if kind == "module":
            return ModuleDef(name, v["quantale"], v["lattice"], v.get("side", "right"), v["action"], v.get("inner"),
                             v.get("level"), span)
        return BimoduleDef(name, v["left"], v["right"], v["carrier"], v["lact"], v["ract"], v.get("linner"),
                           v.get("rinner"), v.get("level"), span)


def parse(text: str, source: str = "") -> Document:
    return _Parser(text, source).document()


# ----------------------------------------------------------------- printer


def _key_text(key) -> str:
    return f"({key[0]},{key[1]})" if len(key) == 2 else key[0]


def _print_table(t: Table, indent: str) -> str:
    if not t.entries and t.default is None:
        return "{ }"
    lines = [f"{indent}  {_key_text(k)}={v};" for k, v in t.entries]
    if t.default is not None:
        lines.append(f"{indent}  default: {t.default};")
    return "{\n" + "\n".join(lines) + f"\n{indent}}}"


def print_document(doc: Document) -> str:
    out = []
    for d in doc.defs:
        lines = [f"{d.kind} {d.name} {{"]
        ind = "  "
        if isinstance(d, SupLatticeDef):
            lines.append(f"{ind}elements: [{', '.join(d.elements)}];")
            if d.join is not None:
                lines.append(f"{ind}join: {_print_table(d.join, ind)};")
            if d.order is not None:
                body = "".join(f"\n{ind}  {a}<={b};" for a, b in d.order)
                lines.append(f"{ind}order: {{{body}\n{ind}}};" if d.order else f"{ind}order: {{ }};")
            if d.duality is not None:
                lines.append(f"{ind}duality: {_print_table(d.duality, ind)};")
        elif isinstance(d, QuantaleDef):
            lines.append(f"{ind}lattice: {d.lattice};")
            lines.append(f"{ind}mult: {_print_table(d.mult, ind)};")
            lines.append(f"{ind}star: {_print_table(d.star, ind)};")
            if d.unit is not None:
                lines.append(f"{ind}unit: {d.unit};")
        elif isinstance(d, ModuleDef):
            lines.append(f"{ind}quantale: {d.quantale};")
            lines.append(f"{ind}lattice: {d.lattice};")
            lines.append(f"{ind}side: {d.side};")
            lines.append(f"{ind}action: {_print_table(d.action, ind)};")
            if d.inner is not None:
                lines.append(f"{ind}inner: {_print_table(d.inner, ind)};")
            if d.level is not None:
                lines.append(f"{ind}level: {d.level};")
        else:
            lines.append(f"{ind}left: {d.left};")
            lines.append(f"{ind}right: {d.right};")
            lines.append(f"{ind}carrier: {d.carrier};")
            lines.append(f"{ind}lact: {_print_table(d.lact, ind)};")
            lines.append(f"{ind}ract: {_print_table(d.ract, ind)};")
            if d.linner is not None:
                lines.append(f"{ind}linner: {_print_table(d.linner, ind)};")
            if d.rinner is not None:
                lines.append(f"{ind}rinner: {_print_table(d.rinner, ind)};")
            if d.level is not None:
                lines.append(f"{ind}level: {d.level};")
        lines.append("}")
        out.append("\n".join(lines))
    return "\n\n".join(out) + "\n"
