"""``qlab`` commands. Exit codes: 0 verified/found, 1 refuted/exhausted, 2 usage or parse error,
3 budget exceeded."""
from __future__ import annotations

import argparse
import json
import sys
import time

from ..budget import Budget, BudgetExceeded, default_budget, parse_budget
from ..hilbmod import (
    HilbertModule,
    QModule,
    check_inner,
    check_module,
    compact_closure,
    compact_quantale,
    module_iso_search,
    nuclearity_and_projectivity,
    residuate_module,
)
from ..laws import StructureError, Violation
from ..morita import center, misa_check, morita_search, morita_witness
from ..quantale import check_quantale, matrix_quantale, quantale_iso_search, residuate
from ..suplat import check_suplattice, duality_violations, lattice_iso_search
from ..tensor import (HilbertBimodule, check_bimodule, interior_tensor, oracle_matches, regular_bimodule,
                      tensor_oracle, unit_iso)
from .document import Diagnostic, Document, print_document
from .loader import CATALOG, catalog_document, catalog_text, load_file, quantale_def, lattice_def, resolve

EXIT_OK, EXIT_REFUTED, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
LEVELS = ("pre", "hilbert", "strict")


class UsageError(Exception):
    pass


def _vjson(v: Violation, labels=None) -> dict:
    w = [labels[x] if labels is not None and isinstance(x, int) and 0 <= x < len(labels) else str(x)
         for x in v.witness]
    return {"law": v.law, "witness": [str(x) for x in w], "detail": v.detail}


def _laws(vs, labels=None) -> list[dict]:
    return [_vjson(v, labels) for v in vs]


# ------------------------------------------------------------------ check


def _check_entry(ws, name: str, want_level: str | None) -> dict:
    got = ws.get(name)
    d = got.definition
    entry = {"name": name, "kind": got.kind}
    if got.kind == "suplattice":
        L = got.obj
        vs = check_suplattice(L.join)
        if not vs and got.duality is not None:
            vs = duality_violations(L, got.duality)
        entry.update(passed=not vs, violations=_laws(vs, L.labels), size=L.n)
        return entry
    if got.kind == "quantale":
        A = got.obj
        vs = check_suplattice(A.lat.join) or check_quantale(A.lat, A.mult, A.star, A._unit)
        entry.update(passed=not vs, violations=_laws(vs, A.labels), size=A.n)
        if not vs:
            r = A.report()
            entry["flags"] = {"unital": r.unital, "commutative": r.commutative, "essential": r.essential,
                              "separated": r.separated, "m_regular": r.m_regular}
        return entry
    level = want_level or d.level
    if got.kind == "module":
        H = got.obj
        mod = H.mod if isinstance(H, HilbertModule) else H
        vs = check_suplattice(mod.lat.join) or check_module(mod.A, mod.lat, mod.act, mod.side)
        entry.update(size=mod.n, side=mod.side)
        if not isinstance(H, HilbertModule):
            if level is not None:
                raise UsageError(f"module {name!r} has no inner product; level {level!r} needs one")
            entry.update(passed=not vs, violations=_laws(vs, mod.lat.labels))
            return entry
        reached = None
        if not vs:
            chk = check_inner(mod, H.ip)
            vs = chk.pre
            reached = chk.level
            need = level or "pre"
            if reached is not None and LEVELS.index(reached) < LEVELS.index(need):
                vs = [v for v in (chk.separation, chk.strictness) if v is not None][: LEVELS.index(need)]
        entry.update(passed=not vs, violations=_laws(vs, mod.lat.labels), level=reached, required=level or "pre")
        if reached is not None:
            entry["flags"] = {"essential": mod.essential, "separated": mod.separated, "m_regular": mod.m_regular,
                              "full": H.full, "faithful": mod.faithful}
        return entry
    X = got.obj
    if level is not None and (X.lip is None or X.rip is None):
        raise UsageError(f"bimodule {name!r} lacks an inner product; level {level!r} needs both")
    vs = check_suplattice(X.lat.join) or check_bimodule(X)
    entry.update(size=X.n)
    levels = {}
    if not vs:
        for side in ("left", "right"):
            part = getattr(X, side)
            if isinstance(part, HilbertModule):
                chk = check_inner(part.mod, part.ip)
                levels[side] = chk.level
                if level is not None and LEVELS.index(chk.level) < LEVELS.index(level):
                    vs = vs + [Violation(side.capitalize() + v.law, v.witness, v.detail)
                               for v in (chk.separation, chk.strictness) if v is not None][:1]
        entry["flags"] = {
            f"{side}_{k}": v
            for side in ("left", "right")
            for k, v in (("m_regular", getattr(X, side).mod.m_regular if isinstance(getattr(X, side), HilbertModule)
                          else getattr(X, side).m_regular),
                         ("full", getattr(X, side).full if isinstance(getattr(X, side), HilbertModule) else None))
        }
    entry.update(passed=not vs, violations=_laws(vs, X.lat.labels), levels=levels, required=level)
    return entry


def _deps(d) -> list[str]:
    if d.kind == "quantale":
        return [d.lattice]
    if d.kind == "module":
        return [d.quantale, d.lattice]
    if d.kind == "bimodule":
        return [d.left, d.right, d.carrier]
    return []


def cmd_check(args, budget) -> tuple[dict, int]:
    ws = load_file(args.file)
    entries = []
    failed = set()
    for n in ws.names():
        bad = [r for r in _deps(ws.doc.get(n)) if r in failed]
        if bad:
            e = {"name": n, "kind": ws.doc.get(n).kind, "passed": False,
                 "violations": [{"law": "InvalidDependency", "witness": bad, "detail": "depends on an invalid definition"}]}
        else:
            e = _check_entry(ws, n, args.level)
        if not e["passed"]:
            failed.add(n)
        entries.append(e)
    ok = all(e["passed"] for e in entries)
    return {"command": "check", "inputs": {"file": args.file, "level": args.level},
            "verdict": "verified" if ok else "refuted", "definitions": entries}, (EXIT_OK if ok else EXIT_REFUTED)


# -------------------------------------------------------------- residuate


def cmd_residuate(args, budget):
    got = resolve(args.ref, ("quantale", "module"))
    if got.kind == "quantale":
        A = got.obj
        side = args.side or "r"
        if side not in ("r", "l"):
            raise UsageError("quantale residuation side is 'r' or 'l'")
        a, c = _el(A.labels, args.x), _el(A.labels, args.y)
        v = residuate(A, a, c, side)
        M = A.M
        prod = (lambda s: M[a][s]) if side == "r" else (lambda s: M[s][a])
        galois = all(A.le(prod(s), c) == A.le(s, v) for s in range(A.n))
        labels = A.labels
    else:
        H = got.obj
        mod = H.mod if isinstance(H, HilbertModule) else H
        side = args.side or "R"
        if side not in ("R", "L"):
            raise UsageError("module residuation side is 'R' or 'L'")
        X, Lm = mod.X, mod.lat.L
        if side == "R":
            m, n = _el(mod.lat.labels, args.x), _el(mod.lat.labels, args.y)
            v = residuate_module(mod, m, n, "R")
            galois = all(Lm[X[m][a]][n] == mod.A.le(a, v) for a in range(mod.A.n))
            labels = mod.A.labels
        else:
            a, n = _el(mod.A.labels, args.x), _el(mod.lat.labels, args.y)
            v = residuate_module(mod, a, n, "L")
            galois = all(Lm[X[m][a]][n] == Lm[m][v] for m in range(mod.n))
            labels = mod.lat.labels
    return {"command": "residuate", "inputs": {"ref": args.ref, "x": args.x, "y": args.y, "side": side},
            "verdict": "verified" if galois else "refuted", "value": labels[v], "galois": galois}, \
        (EXIT_OK if galois else EXIT_REFUTED)


def _el(labels, name):
    if name not in labels:
        raise UsageError(f"unknown element {name!r}; elements are {', '.join(labels)}")
    return labels.index(name)


# ------------------------------------------------------------------ tensor


def cmd_tensor(args, budget):
    M = resolve(args.m, ("module", "bimodule")).obj
    got = resolve(args.n, ("bimodule", "quantale"))
    N = regular_bimodule(got.obj) if got.kind == "quantale" else got.obj
    over = M.B if isinstance(M, HilbertBimodule) else M.A
    if not over.same_as(N.A):
        raise UsageError("the right quantale of M is not the left quantale of N")
    if isinstance(M, QModule) or (isinstance(M, HilbertBimodule) and M.rip is None):
        raise UsageError("the left factor needs a right inner product")
    if isinstance(M, HilbertModule) and M.side != "right":
        raise UsageError("the left factor must be a right module")
    T = interior_tensor(M, N, budget)
    R = T.right
    out = {"command": "tensor", "inputs": {"m": args.m, "n": args.n}, "verdict": "verified",
           "size": T.n, "level": R.level, "decomposition_consistent": T.decomposition_consistent,
           "elements": list(T.lat.labels)}
    ok = T.decomposition_consistent and R.level in ("hilbert", "strict")
    if got.kind == "quantale" and isinstance(M, HilbertModule):
        _, rep = unit_iso(M)
        out["standard_iso"] = {"unitary": rep.unitary,
                               "failed_preconditions": {k: [M.labels[x] for x in v]
                                                        for k, v in sorted(rep.preconditions.items())},
                               "failed_clauses": sorted(rep.witness)}
        ok = ok and rep.unitary
    if args.oracle:
        o = tensor_oracle(M, N)
        out["oracle"] = {"size": o.lat.n, "unitary": oracle_matches(T, o)}
        ok = ok and out["oracle"]["unitary"]
    out["verdict"] = "verified" if ok else "refuted"
    return out, (EXIT_OK if ok else EXIT_REFUTED)


# ----------------------------------------------------------------- compact


def _hilbert(ref):
    got = resolve(ref, ("module", "bimodule"))
    H = got.obj
    if isinstance(H, HilbertBimodule):
        H = H.right
    if not isinstance(H, HilbertModule):
        raise UsageError(f"{ref!r} has no inner product")
    return H


def cmd_compact(args, budget):
    M = _hilbert(args.m)
    if args.n:
        N = _hilbert(args.n)
        if not M.A.same_as(N.A):
            raise UsageError("the modules are over different quantales")
        K = compact_closure(M, N, budget)
        return {"command": "compact", "inputs": {"m": args.m, "n": args.n}, "verdict": "verified",
                "size": len(K)}, EXIT_OK
    K = compact_quantale(M, budget)
    r = K.K.report()
    nuc = nuclearity_and_projectivity(M, budget)
    left = K.as_left_module(M)
    out = {"command": "compact", "inputs": {"m": args.m}, "verdict": "verified", "size": K.K.n,
           "quantale": {"unital": r.unital, "commutative": r.commutative, "m_regular": r.m_regular,
                        "valid": not check_quantale(K.K.lat, K.K.mult, K.K.star)},
           "left_module": {"level": left.level, "full": left.full, "m_regular": left.m_regular},
           "nuclear": nuc.nuclear, "retract_index": None if nuc.retract is None else nuc.retract[0],
           "weakly_projective": nuc.weakly_projective}
    return out, EXIT_OK


# ------------------------------------------------------------------ center


def cmd_center(args, budget):
    A = resolve(args.a, ("quantale",)).obj
    C = center(A, budget)
    mi = misa_check(A, budget)
    r = C.Q.report()
    ok = mi.agree and r.commutative and r.unital
    out = {"command": "center", "inputs": {"a": args.a}, "verdict": "verified" if ok else "refuted",
           "size": C.Q.n, "elements": list(C.Q.labels), "commutative": r.commutative, "unital": r.unital,
           "computations_agree": mi.agree,
           "valid": not check_quantale(C.Q.lat, C.Q.mult, C.Q.star)}
    return out, (EXIT_OK if ok else EXIT_REFUTED)


# ------------------------------------------------------------------ matrix


def cmd_matrix(args, budget):
    got = resolve(args.a, ("quantale",))
    A = got.obj
    Mn, _ = matrix_quantale(A, args.n, budget)
    r = Mn.report()
    out = {"command": "matrix", "inputs": {"a": args.a, "n": args.n}, "verdict": "verified", "size": Mn.n,
           "unital": r.unital, "commutative": r.commutative, "m_regular": r.m_regular}
    if args.emit:
        name = f"mat{args.n}_{got.name}"
        doc = Document((lattice_def(f"{got.name}_lat", A.lat), quantale_def(got.name, A, f"{got.name}_lat"),
                        lattice_def(f"{name}_lat", Mn.lat), quantale_def(name, Mn, f"{name}_lat")))
        out["text"] = print_document(doc)
    return out, EXIT_OK


# ------------------------------------------------------------------ morita


def _witness_json(W) -> dict:
    return {
        "certificate": [r.to_json() for r in W.imp.certificate],
        "left_tensor": {"size": W.left_tensor.n, **_iso_json(W.left_iso), "iso_search": W.left_search is not None},
        "right_tensor": {"size": W.right_tensor.n, **_iso_json(W.right_iso), "iso_search": W.right_search is not None},
    }


def _iso_json(rep) -> dict:
    return {"unitary": rep.unitary, "well_defined": rep.well_defined, "injective": rep.injective,
            "surjective": rep.surjective, "action_preserving": rep.action_preserving,
            "ip_preserving": rep.ip_preserving}


def cmd_morita_verify(args, budget):
    A = resolve(args.a, ("quantale",)).obj
    B = resolve(args.b, ("quantale",)).obj
    X = resolve(args.x, ("bimodule",)).obj
    if not (X.A.same_as(A) and X.B.same_as(B)):
        raise UsageError("the bimodule is not over the given quantales")
    if X.lip is None or X.rip is None:
        raise UsageError("an imprimitivity bimodule needs both inner products")
    vs = check_suplattice(X.lat.join)
    if vs:
        raise StructureError("carrier", vs)
    W = morita_witness(X, budget)
    ok = W.verified
    out = {"command": "morita verify", "inputs": {"a": args.a, "b": args.b, "x": args.x},
           "verdict": "verified" if ok else "refuted", **_witness_json(W)}
    return out, (EXIT_OK if ok else EXIT_REFUTED)


def cmd_morita_search(args, budget):
    A = resolve(args.a, ("quantale",)).obj
    B = resolve(args.b, ("quantale",)).obj
    res = morita_search(A, B, args.max_size, budget, workers=args.workers)
    out = {"command": "morita search", "inputs": {"a": args.a, "b": args.b, "max_size": args.max_size}}
    if res.found is None:
        out.update(verdict="exhausted", certificate=res.certificate.to_json())
        return out, EXIT_REFUTED
    X = res.found.X
    out.update(verdict="found", carrier={"size": res.lattice[0], "index": res.lattice[1]},
               lact=X.lact.tolist(), ract=X.ract.tolist(), linner=X.lip.tolist(), rinner=X.rip.tolist(),
               **_witness_json(res.found), counts=res.certificate.counts)
    return out, (EXIT_OK if res.found.verified else EXIT_REFUTED)


# --------------------------------------------------------------------- iso


def cmd_iso(args, budget):
    a = resolve(args.a, ("quantale", "suplattice", "module"))
    b = resolve(args.b, ("quantale", "suplattice", "module"))
    if a.kind != b.kind:
        raise UsageError(f"cannot compare a {a.kind} with a {b.kind}")
    if a.kind == "quantale":
        phi = quantale_iso_search(a.obj, b.obj)
        la, lb = a.obj.labels, b.obj.labels
    elif a.kind == "suplattice":
        f = lattice_iso_search(a.obj, b.obj)
        phi = None if f is None else f.values
        la, lb = a.obj.labels, b.obj.labels
    else:
        if not (isinstance(a.obj, HilbertModule) and isinstance(b.obj, HilbertModule)):
            raise UsageError("module isomorphism needs inner products")
        phi = module_iso_search(a.obj, b.obj)
        la, lb = a.obj.labels, b.obj.labels
    out = {"command": "iso", "inputs": {"a": args.a, "b": args.b}}
    if phi is None:
        out.update(verdict="exhausted")
        return out, EXIT_REFUTED
    out.update(verdict="found", map={la[i]: lb[v] for i, v in enumerate(phi)})
    return out, EXIT_OK


# ----------------------------------------------------------------- catalog


def cmd_catalog(args, budget):
    entries = []
    for name in CATALOG:
        text = catalog_text(name)
        head = text.splitlines()[0].lstrip("# ").strip() if text.startswith("#") else ""
        doc = catalog_document(name)
        entries.append({"name": name, "description": head,
                        "definitions": [f"{d.kind} {d.name}" for d in doc.defs]})
    return {"command": "catalog list", "verdict": "verified", "entries": entries}, EXIT_OK


# ------------------------------------------------------------------- main


def _budget_arg(text: str) -> Budget:
    base = default_budget()
    if text.isdigit():
        return base.with_(scan=int(text))
    try:
        return parse_budget(text, base)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print a JSON report")
    common.add_argument("--timing", action="store_true", help="include wall-clock time in the report")
    common.add_argument("--budget", type=_budget_arg, default=None,
                        help="scan limit N, or carrier=N,scan=M (default from QLAB_BUDGET)")
    p = argparse.ArgumentParser(prog="qlab", description=" ".join(__doc__.split()))
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check", parents=[common], help="validate every definition in a file")
    s.add_argument("file")
    s.add_argument("--level", choices=LEVELS)
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("residuate", parents=[common], help="residuals in a quantale or module")
    s.add_argument("ref")
    s.add_argument("x")
    s.add_argument("y")
    s.add_argument("--side", choices=("r", "l", "R", "L"))
    s.set_defaults(func=cmd_residuate)

    s = sub.add_parser("tensor", parents=[common], help="interior tensor product M (x) N; N may be a quantale A, which also checks M (x) A = M")
    s.add_argument("m")
    s.add_argument("n")
    s.add_argument("--oracle", action="store_true", help="cross-check against the brute-force construction")
    s.set_defaults(func=cmd_tensor)

    s = sub.add_parser("compact", parents=[common], help="compact operators K(M) or K(M, N)")
    s.add_argument("m")
    s.add_argument("n", nargs="?")
    s.set_defaults(func=cmd_compact)

    s = sub.add_parser("center", parents=[common], help="the center Cen(A)")
    s.add_argument("a")
    s.set_defaults(func=cmd_center)

    s = sub.add_parser("matrix", parents=[common], help="the matrix quantale M^n(A)")
    s.add_argument("a")
    s.add_argument("n", type=int)
    s.add_argument("--emit", action="store_true", help="include the .qlab text of M^n(A)")
    s.set_defaults(func=cmd_matrix)

    m = sub.add_parser("morita", help="Morita witnesses")
    msub = m.add_subparsers(dest="morita_command", required=True)
    s = msub.add_parser("verify", parents=[common], help="verify an A-B imprimitivity bimodule")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("x")
    s.set_defaults(func=cmd_morita_verify, name="morita verify")
    s = msub.add_parser("search", parents=[common], help="search for an A-B imprimitivity bimodule")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--max-size", type=int, default=4)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_morita_search, name="morita search")

    s = sub.add_parser("iso", parents=[common], help="isomorphism search")
    s.add_argument("a")
    s.add_argument("b")
    s.set_defaults(func=cmd_iso)

    c = sub.add_parser("catalog", help="bundled examples")
    csub = c.add_subparsers(dest="catalog_command", required=True)
    s = csub.add_parser("list", parents=[common])
    s.set_defaults(func=cmd_catalog, name="catalog list")
    return p


def render_text(report: dict) -> str:
    lines = [f"{report['command']}: {report['verdict']}"]
    for k, v in report.items():
        if k in ("command", "verdict", "inputs"):
            continue
        if k in ("definitions",):
            for e in v:
                status = "PASS" if e["passed"] else "FAIL"
                lvl = e.get("level") or ",".join(f"{s}={l}" for s, l in (e.get("levels") or {}).items())
                lines.append(f"  {status} {e['kind']} {e['name']}" + (f" [{lvl}]" if lvl else ""))
                for viol in e["violations"]:
                    lines.append(f"       {viol['law']}({', '.join(viol['witness'])}) {viol['detail']}".rstrip())
        elif k == "certificate" and isinstance(v, list):
            for r in v:
                status = "PASS" if r["passed"] else "FAIL"
                w = f" ({', '.join(r['witness'])})" if r["witness"] else ""
                lines.append(f"  {status} {r['law']}{w}")
        elif k == "entries":
            for e in v:
                lines.append(f"  {e['name']}: {e['description']}")
        elif k == "text":
            lines.append(v.rstrip())
        elif isinstance(v, (dict, list)) and k in ("lact", "ract", "linner", "rinner"):
            continue
        else:
            lines.append(f"  {k}: {json.dumps(v)}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    budget = args.budget or default_budget()
    name = getattr(args, "name", args.command)
    start = time.perf_counter()
    try:
        report, code = args.func(args, budget)
    except (Diagnostic, UsageError) as e:
        report, code = {"command": name, "verdict": "error", "error": str(e)}, EXIT_USAGE
    except BudgetExceeded as e:
        report, code = {"command": name, "verdict": "budget-exceeded", "error": str(e),
                        "needed": e.needed, "limit": e.limit}, EXIT_BUDGET
    except StructureError as e:
        report, code = {"command": name, "verdict": "refuted", "error": str(e),
                        "violations": _laws(e.violations)}, EXIT_REFUTED
    if args.timing:
        report["seconds"] = round(time.perf_counter() - start, 6)
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        text = render_text(report)
        print(text, file=sys.stderr if code == EXIT_USAGE else sys.stdout)
    return code


def entry() -> None:
    sys.exit(main())
