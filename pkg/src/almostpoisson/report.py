"""Structure reports: one nested dict per system, rendered as JSON or text."""

from __future__ import annotations

import json

from . import jacobi
from .presets import BuiltSystem
from .symexpr import DEFAULT_SEED, to_text

SCHEMA = 1
FORMATS = ("json", "text")


class UnsupportedFormatError(ValueError):
    pass


def _table(obj) -> dict:
    names = obj.chart.names
    return {",".join(names[i] for i in k): to_text(v) for k, v in obj.items()}


def _matrix(m) -> list:
    return [[to_text(c) for c in row] for row in m]


def _vector(X) -> dict | None:
    if X is None:
        return None
    return {n: to_text(c) for n, c in zip(X.chart.names, X.components)}


def _verdict(v: jacobi.StructureVerdict) -> dict:
    out = {"tag": v.tag, "summary": str(v)}
    if v.residual is not None:
        out["residual"] = v.residual
    if v.witness is not None:
        out["witness"] = dict(v.witness)
    pts = v.diagnostics.get("pointwise")
    if pts:
        out["min_pointwise_residual"] = min(r for _, r in pts)
        out["max_pointwise_residual"] = max(r for _, r in pts)
    if "confidence" in v.diagnostics:
        out["confidence"] = v.diagnostics["confidence"]
    if "reason" in v.diagnostics:
        out["reason"] = v.diagnostics["reason"]
    return out


def build_report(system: BuiltSystem, *, points: int = jacobi.DEFAULT_POINTS,
                 threshold: float = jacobi.DEFAULT_THRESHOLD, seed: int = DEFAULT_SEED) -> dict:
    d = system.definition
    cs = system.constrained
    frame = system.frame
    rep: dict = {
        "schema": SCHEMA,
        "system": {
            "name": d.name,
            "chart": list(d.chart),
            "m": d.m,
            "fiber": list(d.fiber),
            "description": d.description,
        },
        "frame": {
            "vectors": [[to_text(c) for c in v.components] for v in frame.vectors],
            "coframe": [[to_text(c) for c in eps.components] for eps in frame.coframe],
        },
    }
    if system.metric is not None:
        rep["system"]["metric"] = _matrix(system.metric.g)
    cverdict = jacobi.classify(cs.bivector, points=points, threshold=threshold, seed=seed)
    rep["constrained"] = {
        "hamiltonian": to_text(system.hamiltonian),
        "R": _matrix(cs.R),
        "R_constrained": _matrix(cs.R_constrained),
        "elimination": {k: to_text(v) for k, v in cs.elimination.items()},
        "reduced_hamiltonian": to_text(cs.hamiltonian),
        "bivector": _table(cs.bivector),
        "defect": _table(cverdict.defect),
        "verdict": _verdict(cverdict),
    }
    comp = system.compressed
    if comp is None:
        rep["compressed"] = None
        return rep
    v = jacobi.classify(comp.bivector, points=points, threshold=threshold, seed=seed)
    E = v.E if v.E is not None else v.diagnostics.get("E")
    if E is None:
        try:
            E = jacobi.solve_E_symbolic_compressed(comp.bivector, v.defect)
        except (jacobi.ShapeError, jacobi.VerificationError):
            E = None
    block = {
        "chart": list(comp.chart.names),
        "hamiltonian": to_text(comp.hamiltonian),
        "bivector": _table(comp.bivector),
        "reconstruction": {k: to_text(r) for k, r in comp.reconstruction.items()},
        "defect": _table(v.defect),
        "E": _vector(E),
        "LE": _table(jacobi.check_LE(comp.bivector, E)) if E is not None else None,
        "restriction": None,
        "verdict": _verdict(v),
        "conformal_factor": None,
    }
    try:
        a, b = jacobi.compressed_ratios(comp.bivector)
        names = comp.chart.names
        block["ratios"] = [to_text(a), to_text(b)]
        block["restriction"] = to_text(jacobi.restriction_condition(a, b, names[0], names[1]))
    except jacobi.ShapeError:
        pass
    if v.f is not None:
        block["conformal_factor"] = str(v.f)
    rep["compressed"] = block
    return rep


def _lines_table(title: str, table: dict | None, indent: str = "  ") -> list:
    if table is None:
        return [f"{indent}{title}: (none)"]
    if not table:
        return [f"{indent}{title}: 0"]
    out = [f"{indent}{title}:"]
    out += [f"{indent}  [{k}] {v}" for k, v in table.items()]
    return out


def _lines_verdict(v: dict, indent: str = "  ") -> list:
    out = [f"{indent}verdict: {v['summary']}"]
    if "min_pointwise_residual" in v:
        out.append(f"{indent}  pointwise residual range: [{v['min_pointwise_residual']:.6g}, {v['max_pointwise_residual']:.6g}]")
    if "witness" in v:
        w = ", ".join(f"{k}={x:.6g}" for k, x in v["witness"].items())
        out.append(f"{indent}  witness: {w}")
    if "reason" in v:
        out.append(f"{indent}  reason: {v['reason']}")
    if "confidence" in v:
        out.append(f"{indent}  confidence: {v['confidence']}")
    return out


def render_text(rep: dict) -> str:
    s = rep["system"]
    out = [f"system {s['name']}  chart ({', '.join(s['chart'])})  m = {s['m']}"]
    if s["description"]:
        out.append(f"  {s['description']}")
    out.append("frame:")
    out += [f"  e{i + 1} = ({', '.join(v)})" for i, v in enumerate(rep["frame"]["vectors"])]
    out.append("coframe:")
    out += [f"  eps{i + 1} = ({', '.join(v)})" for i, v in enumerate(rep["frame"]["coframe"])]
    c = rep["constrained"]
    out.append("constrained system:")
    out.append(f"  H = {c['hamiltonian']}")
    out.append("  R = " + "; ".join(", ".join(r) for r in c["R"]))
    out += [f"  {k} = {v}" for k, v in c["elimination"].items()]
    out.append(f"  reduced H = {c['reduced_hamiltonian']}")
    out += _lines_table("bivector", c["bivector"])
    out += _lines_table("[B,B]", c["defect"])
    out += _lines_verdict(c["verdict"])
    comp = rep["compressed"]
    if comp is None:
        out.append("compressed system: (no fiber variables)")
        return "\n".join(out) + "\n"
    out.append(f"compressed system on ({', '.join(comp['chart'])}):")
    out.append(f"  H = {comp['hamiltonian']}")
    out += _lines_table("bivector", comp["bivector"])
    out += [f"  d{k}/dt = {r}" for k, r in comp["reconstruction"].items()]
    out += _lines_table("[B,B]", comp["defect"])
    out.append("  E = " + ("(none)" if comp["E"] is None else ", ".join(f"{k}: {v}" for k, v in comp["E"].items())))
    out += _lines_table("L_E B", comp["LE"])
    if comp["restriction"] is not None:
        out.append(f"  restriction = {comp['restriction']}")
    out += _lines_verdict(comp["verdict"])
    out.append(f"  conformal factor = {comp['conformal_factor'] or '(none)'}")
    return "\n".join(out) + "\n"


def render(rep: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rep, indent=2) + "\n"
    if fmt == "text":
        return render_text(rep)
    raise UnsupportedFormatError(f"unsupported format {fmt!r}; choose from {', '.join(FORMATS)}")
