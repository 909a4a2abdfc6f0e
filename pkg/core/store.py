"""
Snapshots de un solo archivo: línea de versión, cabecera JSON con el número
de registros y el sha256 del cuerpo, y después un registro JSON por línea.
"""
import hashlib
import json
import os
from typing import List, Union

from core.discourse_graph import DiscourseGraph
from core.errors import SnapshotIntegrityError, SnapshotVersionError
from core.log import get_logger
from entities.eventuality import Eventuality
from entities.relation_graph import RelationGraph
from entities.tuples import CommonsenseTuple, DiscourseEdge, Provenance

SNAPSHOT_VERSION = "ckgp-snapshot-v1"

log = get_logger("Snapshot")

Storable = Union[DiscourseGraph, RelationGraph, List[CommonsenseTuple]]


def _ev_record(ev: Eventuality) -> dict:
    return {"t": "node", "tokens": list(ev.tokens), "pattern": ev.pattern, "subject_index": ev.subject_index}


def _ev_from(rec: dict) -> Eventuality:
    return Eventuality(tuple(rec["tokens"]), rec["pattern"], rec["subject_index"])


def _prov_record(p: Provenance) -> dict:
    e = p.edge
    return {"head": e.head, "relation": e.relation, "tail": e.tail, "weight": e.weight, "u": p.u, "v": p.v}


def _prov_from(rec: dict) -> Provenance:
    return Provenance(DiscourseEdge(rec["head"], rec["relation"], rec["tail"], rec["weight"]), rec["u"], rec["v"])


def _encode(obj: Storable):
    if isinstance(obj, DiscourseGraph):
        records = [_ev_record(obj.nodes[k]) for k in sorted(obj.nodes)]
        records += [{"t": "edge", "h": h, "r": r, "tl": t, "w": obj.edges[(h, r, t)]} for (h, r, t) in sorted(obj.edges)]
        return "discourse_graph", {"relations": list(obj.relations), "merged": obj.merged, "rejected": obj.rejected}, records
    if isinstance(obj, RelationGraph):
        records = [_ev_record(obj.nodes[k]) for k in sorted(obj.nodes)]
        records += [{"t": "candidate", "u": u, "v": v, "prov": _prov_record(obj.candidate_edges[(u, v)])}
                    for (u, v) in sorted(obj.candidate_edges)]
        records += [{"t": "seed", "u": u, "v": v, "split": obj.seed_positive_edges[(u, v)]}
                    for (u, v) in sorted(obj.seed_positive_edges)]
        return "relation_graph", {"relation": obj.relation}, records
    if isinstance(obj, list):
        records = []
        for t in obj:
            if not isinstance(t, CommonsenseTuple):
                raise TypeError(f"cannot snapshot list item of type {type(t).__name__}")
            records.append({
                "t": "tuple", "head": t.head, "relation": t.relation, "tail": t.tail, "split": t.split,
                "label": t.label, "score": t.score,
                "prov": _prov_record(t.provenance) if t.provenance is not None else None,
            })
        return "seed_kb", {}, records
    raise TypeError(f"cannot snapshot object of type {type(obj).__name__}")


def _decode(kind: str, meta: dict, records: List[dict]) -> Storable:
    if kind == "discourse_graph":
        graph = DiscourseGraph(tuple(meta["relations"]))
        for rec in records:
            if rec["t"] == "node":
                graph.add_node(_ev_from(rec))
        for rec in records:
            if rec["t"] == "edge":
                graph.add_edge(graph.nodes[rec["h"]], rec["r"], graph.nodes[rec["tl"]], rec["w"])
        # contadores de la carga original, no de esta reconstrucción
        graph.merged = meta.get("merged", 0)
        graph.rejected = meta.get("rejected", 0)
        return graph.freeze()
    if kind == "relation_graph":
        rg = RelationGraph(meta["relation"])
        for rec in records:
            if rec["t"] == "node":
                ev = _ev_from(rec)
                rg.nodes[ev.key] = ev
            elif rec["t"] == "candidate":
                rg.candidate_edges[(rec["u"], rec["v"])] = _prov_from(rec["prov"])
            elif rec["t"] == "seed":
                rg.seed_positive_edges[(rec["u"], rec["v"])] = rec["split"]
        return rg
    if kind == "seed_kb":
        return [CommonsenseTuple(r["head"], r["relation"], r["tail"], r["split"], r["label"], r["score"],
                                 _prov_from(r["prov"]) if r["prov"] is not None else None)
                for r in records]
    raise SnapshotIntegrityError(f"unknown snapshot kind {kind!r}")


def snapshot_store(obj: Storable, path: str):
    kind, meta, records = _encode(obj)
    body = "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in records)
    header = {"kind": kind, "meta": meta, "records": len(records),
              "sha256": hashlib.sha256(body.encode("utf-8")).hexdigest()}
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as f:
        f.write(SNAPSHOT_VERSION + "\n")
        f.write(json.dumps(header, sort_keys=True) + "\n")
        f.write(body)
    os.replace(tmp, path)
    log.debug(f"wrote {kind} with {len(records)} records to {path}")


def load_snapshot(path: str) -> Storable:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, "r", encoding="utf-8", newline="\n") as f:
        text = f.read()
    version, _, rest = text.partition("\n")
    if version != SNAPSHOT_VERSION:
        if version.startswith("ckgp-snapshot-"):
            raise SnapshotVersionError(f"snapshot {path} has version {version!r}, reader expects {SNAPSHOT_VERSION!r}")
        raise SnapshotIntegrityError(f"{path} is not a ckgp snapshot")
    header_line, _, body = rest.partition("\n")
    try:
        header = json.loads(header_line)
        kind, meta, count, digest = header["kind"], header["meta"], header["records"], header["sha256"]
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise SnapshotIntegrityError(f"corrupt snapshot header in {path}: {e}")
    if hashlib.sha256(body.encode("utf-8")).hexdigest() != digest:
        raise SnapshotIntegrityError(f"snapshot body of {path} does not match its digest (truncated?)")
    lines = body.splitlines()
    if len(lines) != count:
        raise SnapshotIntegrityError(f"snapshot {path} declares {count} records, found {len(lines)}")
    records = [json.loads(ln) for ln in lines]
    return _decode(kind, meta, records)
