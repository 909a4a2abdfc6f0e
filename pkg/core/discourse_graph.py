import os
from collections import Counter
from typing import Dict, Iterator, List, Optional, Tuple

from core.errors import ParseError
from core.log import get_logger
from core.normalize import Normalizer, default_normalizer
from entities.eventuality import Eventuality
from entities.relations import DEFAULT_DISCOURSE_RELATIONS
from entities.tuples import DiscourseEdge

log = get_logger("DiscourseGraph")

Triple = Tuple[str, str, str]


class DiscourseGraph:
    """
    Grafo de eventualidades G=(V,E) con índices de entrada/salida por relación.
    Se construye una vez (ingesta) y después se congela: lectura concurrente segura.
    """

    def __init__(self, relations: Tuple[str, ...] = DEFAULT_DISCOURSE_RELATIONS):
        self.relations = tuple(relations)
        self.nodes: Dict[str, Eventuality] = {}
        self.edges: Dict[Triple, float] = {}
        # node -> relation -> [neighbor keys]
        self.out_index: Dict[str, Dict[str, List[str]]] = {}
        self.in_index: Dict[str, Dict[str, List[str]]] = {}
        self.frozen = False
        self.rejected = 0
        self.merged = 0

    # --- construcción ---
    def add_node(self, ev: Eventuality) -> str:
        self._check_mutable()
        self.nodes.setdefault(ev.key, ev)
        return ev.key

    def add_edge(self, head: Eventuality, relation: str, tail: Eventuality, weight: float = 1.0):
        self._check_mutable()
        if relation not in self.relations:
            raise ValueError(f"unknown discourse relation {relation!r}; expected one of {', '.join(self.relations)}")
        if weight < 0:
            raise ValueError(f"negative edge weight {weight}")
        h = self.add_node(head)
        t = self.add_node(tail)
        triple = (h, relation, t)
        if triple in self.edges:
            self.edges[triple] += weight
            self.merged += 1
            return
        self.edges[triple] = weight
        self.out_index.setdefault(h, {}).setdefault(relation, []).append(t)
        self.in_index.setdefault(t, {}).setdefault(relation, []).append(h)

    def freeze(self) -> "DiscourseGraph":
        for index in (self.out_index, self.in_index):
            for by_rel in index.values():
                for rel in by_rel:
                    by_rel[rel].sort()
        self.frozen = True
        return self

    def _check_mutable(self):
        if self.frozen:
            raise RuntimeError("DiscourseGraph is frozen")

    # --- consultas ---
    def __contains__(self, key: str) -> bool:
        return key in self.nodes

    def __len__(self):
        return len(self.nodes)

    def edge(self, head: str, relation: str, tail: str) -> Optional[DiscourseEdge]:
        w = self.edges.get((head, relation, tail))
        if w is None:
            return None
        return DiscourseEdge(head, relation, tail, w)

    def iter_edges(self) -> Iterator[DiscourseEdge]:
        for (h, r, t) in sorted(self.edges):
            yield DiscourseEdge(h, r, t, self.edges[(h, r, t)])

    def out_edges(self, key: str) -> Iterator[DiscourseEdge]:
        for rel, tails in sorted(self.out_index.get(key, {}).items()):
            for t in tails:
                yield DiscourseEdge(key, rel, t, self.edges[(key, rel, t)])

    def in_edges(self, key: str) -> Iterator[DiscourseEdge]:
        for rel, heads in sorted(self.in_index.get(key, {}).items()):
            for h in heads:
                yield DiscourseEdge(h, rel, key, self.edges[(h, rel, key)])

    def check_invariants(self):
        """Reescaneo completo: extremos presentes e índices consistentes con el conjunto de aristas."""
        out_seen = Counter()
        in_seen = Counter()
        for h, by_rel in self.out_index.items():
            for rel, tails in by_rel.items():
                out_seen.update((h, rel, t) for t in tails)
        for t, by_rel in self.in_index.items():
            for rel, heads in by_rel.items():
                in_seen.update((h, rel, t) for h in heads)
        expected = Counter(self.edges.keys())
        if out_seen != expected or in_seen != expected:
            raise AssertionError("adjacency indices disagree with the edge set")
        for h, _, t in self.edges:
            if h not in self.nodes or t not in self.nodes:
                raise AssertionError(f"edge endpoint missing from nodes: {h!r} / {t!r}")

    def __eq__(self, other):
        if not isinstance(other, DiscourseGraph):
            return NotImplemented
        return self.relations == other.relations and self.nodes == other.nodes and self.edges == other.edges


def load_discourse_graph(path: str, format: str = "tsv", strict: bool = True,
                         relations: Tuple[str, ...] = DEFAULT_DISCOURSE_RELATIONS,
                         normalizer: Optional[Normalizer] = None) -> DiscourseGraph:
    """
    Lee ``head\\trelation\\ttail[\\tweight]``. Las líneas duplicadas se fusionan
    sumando pesos; sin peso se asume 1.0. Con ``strict=False`` las relaciones
    desconocidas se cuentan en ``graph.rejected`` en vez de fallar.
    """
    if format != "tsv":
        raise ValueError(f"unsupported discourse graph format {format!r}")
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    normalizer = normalizer or default_normalizer()
    graph = DiscourseGraph(relations)
    cache: Dict[str, Eventuality] = {}

    def node(text: str) -> Eventuality:
        if text not in cache:
            cache[text] = normalizer.normalize(text)
        return cache[text]

    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < 3 or len(fields) > 4:
                raise ParseError(f"expected 3 or 4 tab-separated fields, got {len(fields)}", lineno, path)
            head, relation, tail = (x.strip() for x in fields[:3])
            if not head or not tail:
                raise ParseError("empty head or tail", lineno, path)
            weight = 1.0
            if len(fields) == 4 and fields[3].strip():
                try:
                    weight = float(fields[3])
                except ValueError:
                    raise ParseError(f"weight {fields[3]!r} is not a number", lineno, path)
                if weight < 0:
                    raise ParseError(f"negative weight {weight}", lineno, path)
            if relation not in graph.relations:
                if strict:
                    raise ParseError(f"unknown relation {relation!r}; expected one of {', '.join(graph.relations)}",
                                     lineno, path)
                graph.rejected += 1
                continue
            graph.add_edge(node(head), relation, node(tail), weight)

    graph.freeze()
    log.info(f"{len(graph.nodes)} nodes, {len(graph.edges)} edges from {path} "
             f"(merged {graph.merged}, rejected {graph.rejected})")
    return graph


def graph_statistics(graph: DiscourseGraph) -> dict:
    per_relation = Counter(r for (_, r, _) in graph.edges)
    n = len(graph.nodes)
    return {
        "nodes": n,
        "edges": len(graph.edges),
        "avg_degree": (2 * len(graph.edges) / n) if n else 0.0,
        "merged": graph.merged,
        "rejected": graph.rejected,
        "edges_per_relation": {r: per_relation.get(r, 0) for r in graph.relations},
    }
