"""Wire formats: JSON instance and tuple documents, verdict JSON, DOT export.

All numbers travel as exact Gaussian-rational strings, never floats.  The
instance schema:

    {"rank": int,
     "poles": [
       {"point": "infinity" | <tag>, "order": int,
        "blocks": [
          {"size": int,
           "q": [gauss, ...],                 # degrees 2..order
           "residue": {"jordan": [{"value": gauss, "blocks": [int, ...]}, ...]}
                    | {"matrix": [[gauss, ...], ...]},
           "xi": [gauss, ...]                 # optional
          }, ...]}, ...]}

A tuple document carries explicit principal-part matrices per pole:

    {"rank": int,
     "poles": [{"point": ..., "matrices": [[[gauss, ...], ...], ...]}, ...]}

with matrices[j-1] the coefficient of x^-j.
"""

from __future__ import annotations

import json

from .builder import QuiverInstance
from .matrixops import MatrixTuple
from .numeric import ExactMatrix, gauss_parse
from .spectral import (
    IrregularBlock,
    PoleData,
    ResidueSpec,
    SpectralData,
    SpectralDataError,
    make_spectral_data,
)


def _g(value) -> str:
    return str(value)


def _parse_g(value, where):
    if not isinstance(value, str):
        raise SpectralDataError("%s: numbers must be exact strings" % where)
    try:
        return gauss_parse(value)
    except ValueError as exc:
        raise SpectralDataError("%s: %s" % (where, exc)) from None


def _require(cond, message):
    if not cond:
        raise SpectralDataError(message)


def parse_spectral(document) -> SpectralData:
    """Validate an instance document and build the spectral data."""
    if isinstance(document, (str, bytes)):
        document = json.loads(document)
    _require(isinstance(document, dict), "document must be an object")
    _require(isinstance(document.get("rank"), int), "rank must be an integer")
    poles_doc = document.get("poles")
    _require(isinstance(poles_doc, list) and poles_doc, "poles must be a non-empty list")
    poles = []
    for pi, pole_doc in enumerate(poles_doc):
        where = "pole %d" % pi
        _require(isinstance(pole_doc, dict), where + " must be an object")
        label = pole_doc.get("point")
        _require(isinstance(label, str) and label, where + ": point tag required")
        order = pole_doc.get("order")
        _require(isinstance(order, int) and order >= 1, where + ": order must be >= 1")
        blocks_doc = pole_doc.get("blocks")
        _require(isinstance(blocks_doc, list) and blocks_doc,
                 where + ": blocks must be a non-empty list")
        blocks = []
        for bi, blk in enumerate(blocks_doc):
            bwhere = "%s block %d" % (where, bi)
            _require(isinstance(blk, dict), bwhere + " must be an object")
            size = blk.get("size")
            _require(isinstance(size, int) and size >= 1,
                     bwhere + ": size must be >= 1")
            q_doc = blk.get("q", [])
            _require(isinstance(q_doc, list), bwhere + ": q must be a list")
            q = tuple(_parse_g(c, bwhere + " q") for c in q_doc)
            residue = _parse_residue(blk.get("residue"), bwhere)
            xi_doc = blk.get("xi")
            xi = ()
            if xi_doc is not None:
                _require(isinstance(xi_doc, list) and xi_doc,
                         bwhere + ": xi must be a non-empty list")
                xi = tuple(_parse_g(x, bwhere + " xi") for x in xi_doc)
            blocks.append(IrregularBlock(q, size, residue, xi=xi))
        poles.append(PoleData(label, order, tuple(blocks)))
    return make_spectral_data(document["rank"], tuple(poles))


def _parse_residue(doc, where) -> ResidueSpec:
    _require(isinstance(doc, dict), where + ": residue must be an object")
    if "jordan" in doc:
        jd = doc["jordan"]
        _require(isinstance(jd, list) and jd, where + ": jordan must be non-empty")
        out = []
        for item in jd:
            _require(isinstance(item, dict) and "value" in item and "blocks" in item,
                     where + ": jordan entries need value and blocks")
            value = _parse_g(item["value"], where + " jordan value")
            sizes = item["blocks"]
            _require(isinstance(sizes, list) and sizes
                     and all(isinstance(b, int) and b >= 1 for b in sizes),
                     where + ": jordan blocks must be positive integers")
            out.append((value, tuple(sizes)))
        return ResidueSpec(jordan=tuple(out))
    if "matrix" in doc:
        rows = doc["matrix"]
        _require(isinstance(rows, list) and rows, where + ": matrix must be non-empty")
        parsed = [[_parse_g(x, where + " matrix entry") for x in row] for row in rows]
        _require(all(len(r) == len(parsed) for r in parsed),
                 where + ": residue matrix must be square")
        return ResidueSpec(explicit=ExactMatrix.from_rows(parsed))
    raise SpectralDataError(where + ": residue needs jordan or matrix")


def spectral_to_document(data: SpectralData) -> dict:
    poles = []
    for pole in data.poles:
        blocks = []
        for blk in pole.blocks:
            residue = blk.residue
            if residue.jordan is not None:
                res_doc = {"jordan": [{"value": _g(v), "blocks": list(b)}
                                      for v, b in residue.jordan]}
            else:
                mat = residue.explicit
                res_doc = {"matrix": [[_g(x) for x in mat.row_list(i)]
                                      for i in range(mat.rows)]}
            blocks.append({
                "size": blk.size,
                "q": [_g(c) for c in blk.q_coeffs],
                "residue": res_doc,
                "xi": [_g(x) for x in blk.xi],
            })
        poles.append({"point": pole.label, "order": pole.order, "blocks": blocks})
    return {"rank": data.rank, "poles": poles}


def parse_tuple(document, data: SpectralData) -> MatrixTuple:
    if isinstance(document, (str, bytes)):
        document = json.loads(document)
    _require(isinstance(document, dict), "tuple document must be an object")
    _require(document.get("rank") == data.rank, "tuple rank mismatch")
    poles_doc = document.get("poles")
    _require(isinstance(poles_doc, list) and len(poles_doc) == len(data.poles),
             "tuple must list one entry per pole")
    parts = []
    for pi, pole_doc in enumerate(poles_doc):
        where = "tuple pole %d" % pi
        _require(isinstance(pole_doc, dict), where + " must be an object")
        _require(pole_doc.get("point") == data.poles[pi].label,
                 where + ": point tag mismatch")
        mats_doc = pole_doc.get("matrices")
        _require(isinstance(mats_doc, list)
                 and len(mats_doc) == data.poles[pi].order,
                 where + ": needs one matrix per power 1..order")
        mats = []
        for mj, rows in enumerate(mats_doc):
            parsed = [[_parse_g(x, "%s matrix %d" % (where, mj + 1)) for x in row]
                      for row in rows]
            _require(len(parsed) == data.rank
                     and all(len(r) == data.rank for r in parsed),
                     where + ": matrices must be rank x rank")
            mats.append(ExactMatrix.from_rows(parsed))
        parts.append(tuple(mats))
    return MatrixTuple(data.rank, tuple(p.order for p in data.poles), tuple(parts))


def tuple_to_document(t: MatrixTuple, data: SpectralData) -> dict:
    poles = []
    for pole, part in zip(data.poles, t.parts):
        poles.append({
            "point": pole.label,
            "matrices": [[[_g(x) for x in m.row_list(i)] for i in range(m.rows)]
                         for m in part],
        })
    return {"rank": t.n, "poles": poles}


def vertex_name(v) -> str:
    return "v_" + "_".join(str(x) for x in v)


def dimvec_to_document(inst: QuiverInstance, vec) -> dict:
    return {vertex_name(v): x for v, x in zip(inst.quiver.vertices, vec)}


def paramvec_to_document(inst: QuiverInstance, vec) -> dict:
    return {vertex_name(v): _g(x) for v, x in zip(inst.quiver.vertices, vec)}


def instance_report(inst: QuiverInstance) -> dict:
    from .builder import alpha_dot_lambda, lattice_member
    return {
        "vertices": [vertex_name(v) for v in inst.quiver.vertices],
        "arrows": [[vertex_name(s), vertex_name(t)] for s, t in inst.quiver.arrows],
        "alpha": dimvec_to_document(inst, inst.alpha),
        "lambda": paramvec_to_document(inst, inst.lam),
        "i_irr": sorted(inst.i_irr),
        "lattice_ok": lattice_member(inst, inst.alpha),
        "alpha_dot_lambda": _g(alpha_dot_lambda(inst)),
    }


def quiver_dot(inst: QuiverInstance) -> str:
    """DOT rendering; parallel arrows are emitted individually."""
    lines = ["digraph quiver {"]
    for v, a in zip(inst.quiver.vertices, inst.alpha):
        lines.append('  %s [label="%s | %d"];'
                     % (vertex_name(v), ",".join(str(x) for x in v), a))
    for s, t in inst.quiver.arrows:
        lines.append("  %s -> %s;" % (vertex_name(s), vertex_name(t)))
    lines.append("}")
    return "\n".join(lines) + "\n"


def verdict_to_document(inst: QuiverInstance, verdict) -> dict:
    from .sigma import ExhaustiveWitness, ViolatingDecomposition
    doc = {
        "solvable": verdict.solvable,
        "moduli_nonempty": verdict.moduli_nonempty,
        "reasons": list(verdict.reasons),
        "alpha": dimvec_to_document(inst, inst.alpha),
        "lambda": paramvec_to_document(inst, inst.lam),
    }
    cert = verdict.certificate
    if isinstance(cert, ViolatingDecomposition):
        doc["certificate"] = {
            "kind": "violating_decomposition",
            "parts": [dimvec_to_document(inst, part) for part in cert.parts],
            "p_values": list(cert.p_values),
            "p_alpha": cert.p_alpha,
        }
    elif isinstance(cert, ExhaustiveWitness):
        doc["certificate"] = {
            "kind": "exhaustive_witness",
            "roots_considered": cert.roots_considered,
            "decompositions_checked": cert.decompositions_checked,
        }
    else:
        doc["certificate"] = None
    return doc


def dumps(document) -> str:
    """Deterministic JSON: sorted keys, fixed separators, trailing newline."""
    return json.dumps(document, sort_keys=True, separators=(",", ": "),
                      indent=1) + "\n"
