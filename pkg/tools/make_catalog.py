"""Regenerate the bundled catalog from library constructions.

    python tools/make_catalog.py src/qlab/catalog
"""
import sys
from pathlib import Path

import numpy as np

from qlab.cli.document import Document, print_document
from qlab.cli.loader import bimodule_def, lattice_def, module_def, quantale_def
from qlab.hilbmod import HilbertModule, QModule, check_inner, duality_module
from qlab.morita import canonical_matrix_bimodule
from qlab.quantale import chain3_frame, matrix_quantale, two
from qlab.suplat import SupLattice, diamond
from qlab.tensor import regular_bimodule

HEADERS = {
    "two": "The two-element quantale 2 (a frame: multiplication is meet).",
    "chain3": "The three-element chain 0 < m < 1 as a frame.",
    "diamond": "The diamond 0 < a, b < 1 with the duality swapping a and b, as a strict Hilbert 2-module.",
    "mat2_two": "2x2 matrices over 2; element mXYZW has rows XY and ZW.",
    "col2": "Column vectors 2^2 as an M^2(2)-2 imprimitivity bimodule.",
    "degenerate_chain3": "The 3-chain over 2 with <m,n> = 1 iff m and n are nonzero: pre-Hilbert only.",
    "trivial_chain3": "The 3-chain over 2 where m <> 1 = 0: not essential, so not m-regular; pre-Hilbert.",
    "two_bi": "2 as a bimodule over itself.",
    "chain3_bi": "The 3-chain frame as a bimodule over itself.",
}


def relabel(L: SupLattice, labels) -> SupLattice:
    return SupLattice(L.join, labels)


def build():
    A = two()
    C3 = chain3_frame()
    M2, _ = matrix_quantale(A, 2)
    two_defs = [lattice_def("two_lat", A.lat), quantale_def("two", A, "two_lat")]
    m2_defs = [lattice_def("mat2_two_lat", M2.lat), quantale_def("mat2_two", M2, "mat2_two_lat")]
    c3_defs = [lattice_def("chain3_lat", C3.lat), quantale_def("chain3", C3, "chain3_lat")]
    docs = {"two": two_defs, "chain3": c3_defs, "mat2_two": two_defs + m2_defs}

    D = diamond()
    D = relabel(D, ["0", "a", "b", "1"])
    dual = [3, 2, 1, 0]
    H = duality_module(A, D, dual)
    docs["diamond"] = two_defs + [lattice_def("diamond_lat", D, dual), module_def("diamond", H, "two", "diamond_lat", "strict")]

    X = canonical_matrix_bimodule(A, 2)
    lat = relabel(X.lat, ["c00", "c01", "c10", "c11"])
    from qlab.tensor import HilbertBimodule

    X = HilbertBimodule(M2, A, lat, X.lact, X.ract, X.lip, X.rip)
    docs["col2"] = two_defs + m2_defs + [lattice_def("col2_lat", lat), bimodule_def("col2", X, "mat2_two", "two", "col2_lat", "strict")]

    L3 = relabel(C3.lat, ["0", "m", "1"])
    act = [[0, 0], [0, 1], [0, 2]]
    ip = [[0, 0, 0], [0, 1, 1], [0, 1, 1]]
    mod = QModule(A, L3, act, "right")
    Hd = HilbertModule(mod, ip, check_inner(mod, ip).level)
    docs["degenerate_chain3"] = two_defs + [lattice_def("chain3_lat", L3),
                                           module_def("degenerate_chain3", Hd, "two", "chain3_lat", "pre")]
    act = [[0, 0], [0, 0], [0, 2]]
    ip = [[0, 0, 0], [0, 0, 0], [0, 0, 1]]
    mod = QModule(A, L3, act, "right")
    Ht = HilbertModule(mod, ip, check_inner(mod, ip).level)
    docs["trivial_chain3"] = two_defs + [lattice_def("chain3_lat", L3),
                                        module_def("trivial_chain3", Ht, "two", "chain3_lat", "pre")]
    docs["two_bi"] = two_defs + [bimodule_def("two_bi", regular_bimodule(A), "two", "two", "two_lat", "strict")]
    docs["chain3_bi"] = c3_defs + [bimodule_def("chain3_bi", regular_bimodule(C3), "chain3", "chain3", "chain3_lat",
                                                "strict")]
    return docs


def main(out):
    out = Path(out)
    for name, defs in build().items():
        text = f"# {HEADERS[name]}\n\n" + print_document(Document(tuple(defs)))
        (out / f"{name}.qlab").write_text(text)


if __name__ == "__main__":
    main(sys.argv[1])
