"""
Extracción de aristas candidatas por relación ATOMIC a partir del grafo
discursivo (reglas temporales + restricción de pronombres), agregación de
pronombres a PersonX/Y/Z y recorte del grafo para entrenamiento.
"""
import csv
import os
from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, Iterator, List, Optional, Set, Tuple

from tqdm import tqdm

from core.align import AlignmentTable, MappingRuleSet, seed_nodes
from core.discourse_graph import DiscourseGraph
from core.errors import ExtractionError
from core.log import get_logger
from core.normalize import Normalizer, default_normalizer
from core.rulebook import RuleBook, default_rulebook
from entities.eventuality import Eventuality
from entities.relation_graph import RelationGraph
from entities.relations import RelationCategory
from entities.tuples import DiscourseEdge, Provenance

log = get_logger("Extract")

SPLIT_ORDER = ("train", "dev", "test")


class PronounConstraint(Enum):
    SAME_SUBJECT = "same_subject"
    DIFFERENT_SUBJECT = "different_subject"


@dataclass(frozen=True)
class TemporalRule:
    category: RelationCategory
    forward: FrozenSet[str]
    backward: FrozenSet[str]
    symmetric: FrozenSet[str]
    pronoun_constraint: PronounConstraint
    # relación -> patrones admitidos en la cola; otras relaciones de la categoría no se filtran
    tail_pattern_filter: Optional[Dict[str, FrozenSet[str]]] = None

    @property
    def effect_direction(self) -> bool:
        """True si la cola ocurre después (o a la vez) que la cabeza."""
        return self.category in (RelationCategory.EFFECT_AGENT, RelationCategory.EFFECT_THEME)

    def orientations(self, relation: str) -> List[str]:
        out = []
        if relation in self.forward or relation in self.symmetric:
            out.append("forward")
        if relation in self.backward or relation in self.symmetric:
            out.append("backward")
        return out

    def tail_filter(self, relation: str) -> Optional[FrozenSet[str]]:
        return (self.tail_pattern_filter or {}).get(relation)


@dataclass(frozen=True)
class SubgraphConfig:
    k: int = 20

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"degree threshold k must be >= 0, got {self.k}")


@dataclass(frozen=True)
class CandidatePair:
    u: str
    v: str
    provenance: Provenance


def temporal_rules(rules: Optional[RuleBook] = None) -> Dict[RelationCategory, TemporalRule]:
    rules = rules or default_rulebook()
    out = {}
    for name, spec in rules.temporal_rules.items():
        cat = RelationCategory(name)
        filt = spec.get("tail_pattern_filter")
        out[cat] = TemporalRule(
            category=cat,
            forward=frozenset(spec.get("forward", ())),
            backward=frozenset(spec.get("backward", ())),
            symmetric=frozenset(spec.get("symmetric", ())),
            pronoun_constraint=PronounConstraint(spec["pronoun_constraint"]),
            tail_pattern_filter={rel: frozenset(p) for rel, p in filt.items()} if filt else None,
        )
    return out


def _subject_class(ev: Eventuality, rules: RuleBook) -> Optional[str]:
    if ev.subject is None:
        return None
    return rules.pronoun_class(ev.subject)


def _pronoun_ok(u: Eventuality, v: Eventuality, rule: TemporalRule, rules: RuleBook) -> bool:
    cu, cv = _subject_class(u, rules), _subject_class(v, rules)
    if cu is None or cv is None:
        return False
    if rule.pronoun_constraint is PronounConstraint.SAME_SUBJECT:
        return cu == cv
    return cu != cv


def select_candidates(graph: DiscourseGraph, relation: str,
                      rules: Optional[Dict[RelationCategory, TemporalRule]] = None,
                      rulebook: Optional[RuleBook] = None, progress: bool = False) -> Iterator[CandidatePair]:
    """
    Emite (u, v) si existe (u, X, v) con X hacia delante, (v, X, u) con X hacia
    atrás, o una arista en cualquier sentido con X simétrica; después aplica la
    restricción de pronombres y el filtro de patrón de la cola. Orden: (u, v, origen).
    """
    rulebook = rulebook or default_rulebook()
    rules = rules or temporal_rules(rulebook)
    category = rulebook.category_of(relation)
    if category not in rules:
        raise ExtractionError(f"no temporal rule for category {category.value}")
    rule = rules[category]
    tail_filter = rule.tail_filter(relation)
    found: List[CandidatePair] = []
    edges = graph.iter_edges()
    if progress:
        edges = tqdm(edges, total=len(graph.edges), desc=f"candidates {relation}")
    for edge in edges:
        for orientation in rule.orientations(edge.relation):
            u, v = (edge.head, edge.tail) if orientation == "forward" else (edge.tail, edge.head)
            if u == v:
                continue
            u_ev, v_ev = graph.nodes[u], graph.nodes[v]
            if not _pronoun_ok(u_ev, v_ev, rule, rulebook):
                continue
            if tail_filter is not None and v_ev.pattern not in tail_filter:
                continue
            found.append(CandidatePair(u, v, Provenance(edge, u, v)))
    found.sort(key=lambda c: (c.u, c.v) + c.provenance.sort_key)
    return iter(found)


def aggregate_pronouns(u: Eventuality, v: Eventuality, category: RelationCategory,
                       rulebook: Optional[RuleBook] = None,
                       normalizer: Optional[Normalizer] = None) -> Optional[Tuple[Eventuality, Eventuality]]:
    """
    Sustituye clases de pronombres por PersonX/PersonY/PersonZ. Devuelve None
    (par descartado) si aparecen más de tres clases distintas.
    """
    rulebook = rulebook or default_rulebook()
    normalizer = normalizer or default_normalizer()
    assign: Dict[str, str] = {}
    free = ["PersonY", "PersonZ"]
    cu, cv = _subject_class(u, rulebook), _subject_class(v, rulebook)
    if cu is not None:
        assign[cu] = "PersonX"
    if category.is_theme and cv is not None and cv not in assign:
        assign[cv] = "PersonY"
        free = ["PersonZ"]
    for tok in u.tokens + v.tokens:
        cls = rulebook.pronoun_class(tok)
        if cls is None or cls in assign:
            continue
        if not free:
            return None
        assign[cls] = free.pop(0)
    # "her" es objeto o posesivo; se trata como objeto
    possessive = set(rulebook.possessives.values()) - {"her"}

    def rewrite(ev: Eventuality) -> Eventuality:
        out: List[str] = []
        for tok in ev.tokens:
            cls = rulebook.pronoun_class(tok)
            if cls is None:
                out.append(tok)
            elif tok in possessive:
                out.extend([assign[cls], "'s"])
            else:
                out.append(assign[cls])
        return normalizer.normalize(" ".join(out))

    return rewrite(u), rewrite(v)


def _adjacency(pairs: List[CandidatePair]) -> Dict[str, Set[str]]:
    adj: Dict[str, Set[str]] = {}
    for c in pairs:
        adj.setdefault(c.u, set()).add(c.v)
        adj.setdefault(c.v, set()).add(c.u)
    return adj


def restrict_subgraph(pairs: List[CandidatePair], anchors: Set[str], config: SubgraphConfig) -> Set[str]:
    """
    Nodos retenidos: vecinos a un salto de los nodos ATOMIC alineados, más los
    de dos saltos para los anclajes con grado < k (grado = vecinos únicos no dirigidos).
    """
    adj = _adjacency(pairs)
    keep = set(anchors)
    for a in sorted(anchors):
        first = adj.get(a, set())
        keep |= first
        if len(first) < config.k:
            for n in sorted(first):
                keep |= adj.get(n, set())
    return keep


def build_relation_graph(graph: DiscourseGraph, alignment: AlignmentTable, relation: str,
                         rulebook: Optional[RuleBook] = None,
                         subgraph: Optional[SubgraphConfig] = None,
                         rules: Optional[Dict[RelationCategory, TemporalRule]] = None,
                         mapping: Optional[MappingRuleSet] = None,
                         normalizer: Optional[Normalizer] = None,
                         progress: bool = False) -> RelationGraph:
    rulebook = rulebook or default_rulebook()
    subgraph = subgraph or SubgraphConfig()
    rules = rules or temporal_rules(rulebook)
    normalizer = normalizer or default_normalizer()
    mapping = mapping or MappingRuleSet.from_rulebook(rulebook)
    category = rulebook.category_of(relation)

    candidates = list(select_candidates(graph, relation, rules, rulebook, progress=progress))
    kb = [t for t in alignment if t.relation == relation]
    anchors: Set[str] = set()
    for t in kb:
        anchors.update(alignment[t].head_hits)
        anchors.update(alignment[t].tail_hits)
    keep = restrict_subgraph(candidates, anchors, subgraph)

    rg = RelationGraph(relation)
    dropped = 0
    nodes: Dict[str, Eventuality] = {}
    edges: Dict[Tuple[str, str], Provenance] = {}
    aggregated: Dict[Tuple[str, str], Optional[Tuple[Eventuality, Eventuality]]] = {}
    for c in candidates:
        if c.u not in keep or c.v not in keep:
            continue
        if (c.u, c.v) not in aggregated:
            aggregated[(c.u, c.v)] = aggregate_pronouns(graph.nodes[c.u], graph.nodes[c.v], category,
                                                        rulebook, normalizer)
            if aggregated[(c.u, c.v)] is None:
                dropped += 1
        pair = aggregated[(c.u, c.v)]
        if pair is None:
            continue
        u_ev, v_ev = pair
        if u_ev.key == v_ev.key:
            continue
        key = (u_ev.key, v_ev.key)
        # la procedencia mínima gana; candidates ya viene ordenado
        if key not in edges:
            edges[key] = c.provenance
        nodes[u_ev.key] = u_ev
        nodes[v_ev.key] = v_ev
    if dropped:
        log.warning(f"{relation}: dropped {dropped} pairs with more than 3 pronoun classes")

    seeds: Dict[Tuple[str, str], str] = {}
    collisions = 0
    for t in sorted(kb, key=lambda t: (SPLIT_ORDER.index(t.split) if t.split in SPLIT_ORDER else 9,
                                       t.head, t.tail)):
        if t.split not in SPLIT_ORDER:
            continue
        try:
            h_ev, t_ev = seed_nodes(t, mapping, normalizer)
        except ValueError as e:
            log.warning(f"{relation}: skipping seed tuple ({t.head!r}, {t.tail!r}): {e}")
            continue
        if h_ev.key == t_ev.key:
            continue
        key = (h_ev.key, t_ev.key)
        if key in seeds:
            if seeds[key] != t.split:
                collisions += 1
            continue
        seeds[key] = t.split
        nodes[h_ev.key] = h_ev
        nodes[t_ev.key] = t_ev
    if collisions:
        log.warning(f"{relation}: {collisions} seed pairs appear in more than one split; kept the earliest split")
    if not seeds:
        raise ExtractionError(f"no seed positive edges for {relation}: training impossible")

    rg.nodes = {k: nodes[k] for k in sorted(nodes)}
    rg.candidate_edges = {k: edges[k] for k in sorted(edges)}
    rg.seed_positive_edges = {k: seeds[k] for k in sorted(seeds)}
    stats = rg.statistics()
    log.info(f"{relation}: {stats['nodes']} nodes, {stats['candidate_edges']} candidate edges, "
             f"{stats['seed_edges']} seed edges")
    return rg


def temporal_position(edge: DiscourseEdge, u: str, order_table: Dict[str, str]) -> Optional[str]:
    """Orden de u respecto a v ('before', 'after', 'simultaneous') según la arista de origen."""
    order = order_table.get(edge.relation)
    if order is None:
        return None
    if u == edge.head:
        return order
    return {"before": "after", "after": "before", "simultaneous": "simultaneous"}[order]


def check_temporal_soundness(prov: Provenance, rule: TemporalRule,
                             rulebook: Optional[RuleBook] = None,
                             graph: Optional[DiscourseGraph] = None) -> bool:
    """Rejuega la arista de origen: existe, respeta la orientación de la regla y el orden temporal."""
    rulebook = rulebook or default_rulebook()
    e = prov.edge
    if graph is not None and graph.edge(e.head, e.relation, e.tail) is None:
        return False
    if (prov.u, prov.v) == (e.head, e.tail):
        allowed = rule.forward | rule.symmetric
    elif (prov.u, prov.v) == (e.tail, e.head):
        allowed = rule.backward | rule.symmetric
    else:
        return False
    if e.relation not in allowed:
        return False
    pos = temporal_position(e, prov.u, rulebook.temporal_order)
    if pos is None:
        return False
    if rule.effect_direction:
        return pos in ("before", "simultaneous")
    return pos in ("after", "simultaneous")


def write_relation_graph_tsv(rg: RelationGraph, path: str):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    pairs = sorted(set(rg.candidate_edges) | set(rg.seed_positive_edges))
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, delimiter="\t", lineterminator="\n")
        writer.writerow(["u", "v", "source_relation", "source_weight", "is_seed_positive"])
        for u, v in pairs:
            prov = rg.candidate_edges.get((u, v))
            writer.writerow([
                u, v,
                prov.edge.relation if prov else "seed",
                repr(prov.edge.weight) if prov else "0.0",
                int((u, v) in rg.seed_positive_edges),
            ])
