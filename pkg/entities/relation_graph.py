from dataclasses import dataclass, field
from typing import Dict, List, Set, Tuple

from entities.eventuality import Eventuality
from entities.relations import PLACEHOLDERS, check_atomic_relation
from entities.tuples import Provenance

Pair = Tuple[str, str]


@dataclass
class RelationGraph:
    """
    Grafo alineado por relación: aristas candidatas (con procedencia
    discursiva) más las aristas positivas semilla del KB, todo en forma
    PersonX/PersonY/PersonZ.
    """
    relation: str
    nodes: Dict[str, Eventuality] = field(default_factory=dict)
    candidate_edges: Dict[Pair, Provenance] = field(default_factory=dict)
    seed_positive_edges: Dict[Pair, str] = field(default_factory=dict)  # pair -> split
    _neighbors: Dict[str, List[str]] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        check_atomic_relation(self.relation)

    def seed_pairs(self, split: str = None) -> Set[Pair]:
        if split is None:
            return set(self.seed_positive_edges)
        return {p for p, s in self.seed_positive_edges.items() if s == split}

    def positives_and_candidates(self) -> Set[Pair]:
        return set(self.seed_positive_edges) | set(self.candidate_edges)

    def sorted_nodes(self) -> List[str]:
        return sorted(self.nodes)

    def neighbors(self, key: str) -> List[str]:
        """Vecinos no dirigidos por aristas candidatas, ordenados; [] si el nodo no está."""
        if not self._neighbors and self.candidate_edges:
            adj: Dict[str, Set[str]] = {}
            for u, v in self.candidate_edges:
                adj.setdefault(u, set()).add(v)
                adj.setdefault(v, set()).add(u)
            self._neighbors = {k: sorted(vs) for k, vs in adj.items()}
        return self._neighbors.get(key, [])

    def candidate_tails(self, head: str) -> List[str]:
        return sorted(v for (u, v) in self.candidate_edges if u == head)

    def check_invariants(self):
        for u, v in list(self.candidate_edges) + list(self.seed_positive_edges):
            if u not in self.nodes or v not in self.nodes:
                raise ValueError(f"edge ({u!r}, {v!r}) has an endpoint outside the node set")

    def concrete_pronouns(self, pronoun_forms) -> Set[str]:
        forms = set(pronoun_forms)
        return {tok for key in self.nodes for tok in key.split(" ") if tok in forms and tok not in PLACEHOLDERS}

    def statistics(self) -> dict:
        n = len(self.nodes)
        degree_sum = 2 * len(self.candidate_edges)
        return {
            "relation": self.relation,
            "nodes": n,
            "candidate_edges": len(self.candidate_edges),
            "seed_edges": len(self.seed_positive_edges),
            "avg_degree": (degree_sum / n) if n else 0.0,
        }
