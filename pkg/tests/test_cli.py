import json
import subprocess
import sys

import pytest

from qlab.cli import document as doc
from qlab.cli.loader import CATALOG, Workspace, catalog_text, resolve
from qlab.cli.main import main

CYCLE = """\
suplattice bad {
  elements: [0, a, b, 1];
  order: { 0<=a; a<=b; b<=a; b<=1; };
}
"""

NO_INNER = """\
suplattice two_lat { elements: [0, 1]; join: { (0,1)=1; }; }
quantale two { lattice: two_lat; mult: { (1,1)=1; default: 0; }; star: { 0=0; 1=1; }; unit: 1; }
module m { quantale: two; lattice: two_lat; side: right; action: { (1,1)=1; default: 0; }; }
"""


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--json")
    return code, json.loads(out)


# ------------------------------------------------------------------ documents


def test_parse_two():
    d = doc.parse(catalog_text("two"), "two.qlab")
    assert d.names() == ["two_lat", "two"]
    q = d.defs[1]
    assert q.kind == "quantale" and q.lattice == "two_lat"


@pytest.mark.parametrize("name", CATALOG)
def test_print_parse_round_trip(name):
    d = doc.parse(catalog_text(name))
    text = doc.print_document(d)
    again = doc.parse(text)
    assert doc.print_document(again) == text
    a, b = Workspace(d).get(name), Workspace(again).get(name)
    assert a.kind == b.kind


def test_order_cycle_is_a_duplicate_element(tmp_path, capsys):
    p = tmp_path / "cyc.qlab"
    p.write_text(CYCLE)
    code, _, err = run(capsys, "check", str(p))
    assert code == 2
    assert "cyc.qlab:1:1" in err and "duplicate element" in err


def test_syntax_error_has_a_position():
    with pytest.raises(doc.Diagnostic) as e:
        doc.parse("suplattice x {\n  elements: [0, 1]\n}\n", "x.qlab")
    assert e.value.span is not None
    assert str(e.value).startswith("x.qlab:")


def test_missing_inner_product_with_level(tmp_path, capsys):
    p = tmp_path / "m.qlab"
    p.write_text(NO_INNER)
    code, _, err = run(capsys, "check", str(p), "--level", "hilbert")
    assert code == 2 and "no inner product" in err
    assert run(capsys, "check", str(p))[0] == 0


# ------------------------------------------------------------------ exit codes


@pytest.mark.parametrize("argv,code", [
    (("check", "two"), 0),
    (("check", "degenerate_chain3", "--level", "hilbert"), 1),
    (("check", "/no/such/file"), 2),
    (("frobnicate",), 2),
    (("matrix", "two", "3", "--budget", "carrier=100"), 3),
    (("tensor", "diamond", "two"), 0),
    (("tensor", "trivial_chain3", "two"), 1),
    (("center", "mat2_two"), 0),
    (("iso", "two", "chain3"), 1),
    (("morita", "search", "two", "two", "--max-size", "2"), 0),
    (("morita", "search", "chain3", "two", "--max-size", "3"), 1),
])
def test_exit_codes(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_check_reports_witnesses(capsys):
    code, rep = run_json(capsys, "check", "degenerate_chain3", "--level", "hilbert")
    assert code == 1 and rep["verdict"] == "refuted"
    bad = [e for e in rep["definitions"] if not e["passed"]]
    assert [e["name"] for e in bad] == ["degenerate_chain3"]
    assert bad[0]["violations"][0]["witness"] == ["m", "1"]


def test_tensor_reports_failed_preconditions(capsys):
    code, rep = run_json(capsys, "tensor", "trivial_chain3", "two")
    assert code == 1
    assert "essential" in rep["standard_iso"]["failed_preconditions"]


def test_morita_verify_certificate(capsys):
    code, rep = run_json(capsys, "morita", "verify", "mat2_two", "two", "col2")
    assert code == 0
    assert all(r["passed"] for r in rep["certificate"])


def test_matrix_emit_parses(capsys):
    code, rep = run_json(capsys, "matrix", "two", "2", "--emit")
    assert code == 0 and rep["size"] == 16
    d = doc.parse(rep["text"])
    assert Workspace(d).get("mat2_two").obj.n == 16


def test_catalog_list(capsys):
    code, rep = run_json(capsys, "catalog", "list")
    assert code == 0
    assert [e["name"] for e in rep["entries"]] == list(CATALOG)


def test_resolve_rejects_wrong_kind():
    with pytest.raises(doc.Diagnostic):
        resolve("two", ("bimodule",))


# ------------------------------------------------------------------ determinism


def test_json_is_deterministic(capsys):
    outs = {run(capsys, "morita", "search", "mat2_two", "two", "--json", "--workers", w)[1] for w in ("1", "2")}
    assert len(outs) == 1


def test_timing_is_opt_in(capsys):
    assert "seconds" not in run_json(capsys, "center", "two")[1]
    code, out, _ = run(capsys, "center", "two", "--json", "--timing")
    assert "seconds" in json.loads(out)


def test_console_entry_point():
    p = subprocess.run([sys.executable, "-m", "qlab", "check", "two"], capture_output=True, text=True)
    assert p.returncode == 0 and "verified" in p.stdout
