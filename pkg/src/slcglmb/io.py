"""JSON density snapshots and deterministic CSV writers."""
from __future__ import annotations

import csv
import io
import json
import math

from .glmb import GlmbDensity
from .labels import Label
from .models import SpatialPdf
from .slc import SlcDensity

__all__ = [
    "fmt",
    "encode_index",
    "decode_index",
    "glmb_to_json",
    "slc_to_json",
    "density_from_json",
    "write_csv",
]


def fmt(v) -> str:
    """Fixed float formatting so repeated runs give identical bytes."""
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.12e}"


def encode_index(o) -> list:
    return [[tag, list(vals)] for tag, vals in o]


def decode_index(data) -> tuple:
    return tuple((tag, tuple(int(v) for v in vals)) for tag, vals in data)


def _labels(L) -> list:
    return [str(l) for l in L]


def _spatial_entries(spatial: dict, keys) -> list:
    out = []
    for o, l in sorted(keys):
        s = spatial[(o, l)]
        comps = [
            {"weight": float(w), "mean": m.tolist(), "cov": P.tolist()}
            for w, m, P in zip(s.weights, s.means, s.covs)
        ]
        out.append({"index": encode_index(o), "label": str(l), "components": comps})
    return out


def _used_keys(pairs) -> set:
    return {(o, l) for o, L in pairs for l in L}


def glmb_to_json(d: GlmbDensity, step: int | None = None) -> dict:
    hyps = [
        {"index": encode_index(o), "labels": _labels(L), "log_weight": math.log(w)}
        for (o, L), w in sorted(d.weights.items())
    ]
    return {
        "kind": "glmb",
        "step": step,
        "label_universe": _labels(d.label_universe),
        "hypotheses": hyps,
        "spatial": _spatial_entries(d.spatial, _used_keys(d.weights)),
    }


def slc_to_json(d: SlcDensity, step: int | None = None) -> dict:
    out = glmb_to_json(
        GlmbDensity({(o, L): w for o, L, w in d.pairs() if w > 0}, d.spatial, d.label_universe), step
    )
    out["kind"] = "slc"
    out["label_weight"] = [{"labels": _labels(L), "weight": w} for L, w in sorted(d.label_weight.items())]
    out["correlation_weight"] = [
        {"labels": _labels(L), "index": encode_index(o), "alpha": a}
        for L in sorted(d.correlation_weight)
        for o, a in sorted(d.correlation_weight[L].items())
    ]
    return out


def density_from_json(data: dict):
    """Rebuild a :class:`GlmbDensity` or :class:`SlcDensity` from a snapshot."""
    def lset(names):
        return tuple(sorted(Label.parse(n) for n in names))

    spatial = {}
    for e in data["spatial"]:
        c = e["components"]
        spatial[(decode_index(e["index"]), Label.parse(e["label"]))] = SpatialPdf(
            [x["weight"] for x in c], [x["mean"] for x in c], [x["cov"] for x in c]
        )
    universe = lset(data["label_universe"])
    if data["kind"] == "slc":
        omega = {lset(e["labels"]): float(e["weight"]) for e in data["label_weight"]}
        alpha: dict = {L: {} for L in omega}
        for e in data["correlation_weight"]:
            alpha[lset(e["labels"])][decode_index(e["index"])] = float(e["alpha"])
        return SlcDensity(omega, alpha, spatial, universe)
    weights = {(decode_index(h["index"]), lset(h["labels"])): math.exp(h["log_weight"]) for h in data["hypotheses"]}
    return GlmbDensity(weights, spatial, universe)


def write_csv(path, header_comments, columns, rows) -> None:
    """Write ``# key=value`` comment lines, a header row, then formatted rows."""
    buf = io.StringIO()
    for line in header_comments:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def dump_json(path, data) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")
