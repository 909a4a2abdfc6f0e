"""
Alineación del KB semilla con el grafo discursivo: reescritura de cabezas y
colas ATOMIC a formato de nodo, búsqueda por clave canónica y estadísticas
de cobertura y de patrones.
"""
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from itertools import permutations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from core.discourse_graph import DiscourseGraph
from core.errors import AlignmentError, UndefinedCorrelationError
from core.log import get_logger
from core.normalize import Normalizer, default_normalizer, tokenize
from core.rulebook import RuleBook, default_rulebook
from entities.eventuality import UNMATCHED, Eventuality
from entities.relations import ATOMIC_RELATIONS, PLACEHOLDERS, RelationCategory
from entities.tuples import CommonsenseTuple

log = get_logger("Align")


class TailRule(Enum):
    ADD_PRONOUN_DROP_TO = "ADD_PRONOUN_DROP_TO"
    ADD_PRONOUN = "ADD_PRONOUN"
    ADD_PRONOUN_BE = "ADD_PRONOUN_BE"


@dataclass
class MappingRuleSet:
    subject_pool: Tuple[str, ...]
    tail_rules: Dict[str, TailRule]
    pronoun_equivalence: Dict[str, Tuple[str, ...]]
    possessives: Dict[str, str] = field(default_factory=dict)
    xattr_patterns: Tuple[str, ...] = ("s-v-a", "s-v-o")
    first_match_only: bool = False

    def __post_init__(self):
        if not self.subject_pool:
            raise ValueError("subject_pool must not be empty")
        missing = [r for r in ATOMIC_RELATIONS if r not in self.tail_rules]
        if missing:
            raise ValueError(f"no tail rule for {missing}")
        seen = set()
        for forms in self.pronoun_equivalence.values():
            if seen & set(forms):
                raise ValueError(f"pronoun equivalence classes overlap on {sorted(seen & set(forms))}")
            seen |= set(forms)

    @classmethod
    def from_rulebook(cls, rules: Optional[RuleBook] = None, **overrides) -> "MappingRuleSet":
        rules = rules or default_rulebook()
        stative = rules.temporal_rules.get(RelationCategory.STATIVE.value, {})
        kw = dict(
            subject_pool=tuple(rules.subject_pool),
            tail_rules={rel: TailRule(name) for rel, name in rules.tail_rules.items()},
            pronoun_equivalence=dict(rules.pronoun_classes),
            possessives=dict(rules.possessives),
            xattr_patterns=tuple((stative.get("tail_pattern_filter") or {}).get("xAttr", ())),
        )
        kw.update(overrides)
        return cls(**kw)


def _possessive(pronoun: str, possessives: Dict[str, str]) -> List[str]:
    if pronoun in possessives:
        return [possessives[pronoun]]
    return [pronoun, "'s"]


def _substitute(tokens: Sequence[str], mapping: Dict[str, str], possessives: Dict[str, str]) -> List[str]:
    out: List[str] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok in mapping:
            pron = mapping[tok]
            if i + 1 < len(tokens) and tokens[i + 1] == "'s":
                out.extend(_possessive(pron, possessives))
                i += 2
                continue
            out.append(pron)
        else:
            out.append(tok)
        i += 1
    return out


def map_head(head: str, subject: str, object: Optional[str] = None, third: Optional[str] = None,
             rules: Optional[MappingRuleSet] = None, normalizer: Optional[Normalizer] = None) -> Eventuality:
    """PersonX -> subject, PersonY -> object (PersonZ -> third) y normalización."""
    rules = rules or MappingRuleSet.from_rulebook()
    normalizer = normalizer or default_normalizer()
    chosen = [p for p in (subject, object, third) if p is not None]
    if len(set(chosen)) != len(chosen):
        raise AlignmentError(f"pronouns must differ, got {chosen}")
    tokens = tokenize(head)
    if "PersonY" in tokens and object is None:
        raise AlignmentError(f"head {head!r} mentions PersonY: an object pronoun is required")
    if "PersonZ" in tokens and third is None:
        raise AlignmentError(f"head {head!r} mentions PersonZ: a third pronoun is required")
    mapping = {"PersonX": subject}
    if object is not None:
        mapping["PersonY"] = object
    if third is not None:
        mapping["PersonZ"] = third
    return normalizer.normalize(" ".join(_substitute(tokens, mapping, rules.possessives)))


def map_tail(relation: str, tail: str, pronoun: str, others: Optional[Dict[str, str]] = None,
             rules: Optional[MappingRuleSet] = None, normalizer: Optional[Normalizer] = None) -> Eventuality:
    """Aplica la regla de cola de la relación (pronombre delante, quitar "to", añadir "be")."""
    rules = rules or MappingRuleSet.from_rulebook()
    normalizer = normalizer or default_normalizer()
    if relation not in rules.tail_rules:
        raise AlignmentError(f"unknown ATOMIC relation {relation!r}")
    rule = rules.tail_rules[relation]
    mapping = dict(others or {})
    tokens = tokenize(tail)
    unmapped = [t for t in tokens if t in PLACEHOLDERS and t not in mapping]
    if unmapped and pronoun not in PLACEHOLDERS:
        raise AlignmentError(f"tail {tail!r} mentions {unmapped[0]} but no pronoun was given for it")
    tokens = _substitute(tokens, mapping, rules.possessives)
    if rule is TailRule.ADD_PRONOUN_DROP_TO and tokens and tokens[0] == "to":
        tokens = tokens[1:]
    if not tokens:
        raise AlignmentError(f"tail {tail!r} is empty after applying {rule.value}")
    prefix = [pronoun, "be"] if rule is TailRule.ADD_PRONOUN_BE else [pronoun]
    return normalizer.normalize(" ".join(prefix + tokens))


def unmap_tail(relation: str, ev: Eventuality, rules: Optional[MappingRuleSet] = None) -> Tuple[str, ...]:
    """Inversa de map_tail sobre colas bien formadas: quita el pronombre (y "be"), repone "to"."""
    rules = rules or MappingRuleSet.from_rulebook()
    rule = rules.tail_rules[relation]
    tokens = list(ev.tokens[1:])
    if rule is TailRule.ADD_PRONOUN_BE:
        if not tokens or tokens[0] != "be":
            raise AlignmentError(f"{ev.key!r} does not start with '<pronoun> be'")
        tokens = tokens[1:]
    elif rule is TailRule.ADD_PRONOUN_DROP_TO:
        tokens = ["to"] + tokens
    return tuple(tokens)


def seed_pronoun(relation: str) -> str:
    """Placeholder que encabeza la cola en forma de nodo: PersonY para relaciones o*, PersonX si no."""
    return "PersonY" if relation.startswith("o") else "PersonX"


def seed_nodes(t: CommonsenseTuple, rules: Optional[MappingRuleSet] = None,
               normalizer: Optional[Normalizer] = None) -> Tuple[Eventuality, Eventuality]:
    """Cabeza y cola de una tupla ATOMIC en forma de nodo con placeholders."""
    normalizer = normalizer or default_normalizer()
    head = normalizer.normalize(t.head)
    identity = {p: p for p in PLACEHOLDERS}
    tail = map_tail(t.relation, t.tail, seed_pronoun(t.relation), identity, rules, normalizer)
    return head, tail


@dataclass
class AlignmentHits:
    head_hits: List[str] = field(default_factory=list)
    tail_hits: List[str] = field(default_factory=list)
    pair_hits: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def full(self) -> bool:
        return bool(self.head_hits) and bool(self.tail_hits)


AlignmentTable = Dict[CommonsenseTuple, AlignmentHits]


def _needed_placeholders(t: CommonsenseTuple) -> int:
    toks = set(tokenize(t.head)) | set(tokenize(t.tail))
    if "PersonZ" in toks:
        return 3
    if "PersonY" in toks or t.relation.startswith("o"):
        return 2
    return 1


def _append_unique(items: list, value):
    if value not in items:
        items.append(value)


def match_into_graph(kb: Iterable[CommonsenseTuple], graph: DiscourseGraph,
                     rules: Optional[MappingRuleSet] = None,
                     normalizer: Optional[Normalizer] = None) -> AlignmentTable:
    """
    Para cada tupla se generan todas las instancias de pronombres del
    subject_pool y se buscan por clave exacta. Para xAttr solo cuentan colas
    con patrón en ``rules.xattr_patterns``.
    """
    rules = rules or MappingRuleSet.from_rulebook()
    normalizer = normalizer or default_normalizer()
    if not graph.frozen:
        raise AlignmentError("graph must be frozen before alignment")
    table: AlignmentTable = {}
    head_cache: Dict[Tuple[str, tuple], Optional[str]] = {}
    for t in kb:
        if t in table:
            continue
        hits = AlignmentHits()
        k = _needed_placeholders(t)
        for inst in permutations(rules.subject_pool, k):
            mapping = dict(zip(PLACEHOLDERS, inst))
            ck = (t.head, inst)
            if ck not in head_cache:
                try:
                    head_cache[ck] = map_head(t.head, *inst, rules=rules, normalizer=normalizer).key
                except (AlignmentError, ValueError):
                    head_cache[ck] = None
            head_key = head_cache[ck]
            pronoun = mapping["PersonY"] if t.relation.startswith("o") else mapping["PersonX"]
            try:
                tail_ev = map_tail(t.relation, t.tail, pronoun, mapping, rules, normalizer)
            except (AlignmentError, ValueError):
                tail_ev = None
            head_ok = head_key is not None and head_key in graph
            tail_ok = tail_ev is not None and tail_ev.key in graph
            if tail_ok and t.relation == "xAttr" and rules.xattr_patterns:
                tail_ok = graph.nodes[tail_ev.key].pattern in rules.xattr_patterns
            if head_ok:
                _append_unique(hits.head_hits, head_key)
            if tail_ok:
                _append_unique(hits.tail_hits, tail_ev.key)
            if head_ok and tail_ok:
                _append_unique(hits.pair_hits, (head_key, tail_ev.key))
                if rules.first_match_only:
                    break
        table[t] = hits
    log.info(f"aligned {sum(h.full for h in table.values())}/{len(table)} tuples")
    return table


def coverage_stats(table: AlignmentTable) -> dict:
    """
    Cobertura por relación: fracción de tuplas con al menos un acierto en
    cabeza Y en cola; también la cobertura solo-cabeza y sus medias macro.
    """
    if not table:
        raise AlignmentError("coverage needs a non-empty alignment table")
    per_rel: Dict[str, Counter] = {}
    for t, hits in table.items():
        c = per_rel.setdefault(t.relation, Counter())
        c["tuples"] += 1
        c["full"] += int(hits.full)
        c["head"] += int(bool(hits.head_hits))
        c["tail"] += int(bool(hits.tail_hits))
    relations = {}
    for rel in ATOMIC_RELATIONS:
        if rel not in per_rel:
            continue
        c = per_rel[rel]
        relations[rel] = {
            "tuples": c["tuples"],
            "coverage": c["full"] / c["tuples"],
            "head_coverage": c["head"] / c["tuples"],
            "tail_coverage": c["tail"] / c["tuples"],
        }
    total = sum(c["tuples"] for c in per_rel.values())
    return {
        "relations": relations,
        "overall_coverage": sum(c["full"] for c in per_rel.values()) / total,
        "overall_head_coverage": sum(c["head"] for c in per_rel.values()) / total,
        "macro_coverage": float(np.mean([r["coverage"] for r in relations.values()])),
        "macro_head_coverage": float(np.mean([r["head_coverage"] for r in relations.values()])),
    }


def pattern_distribution(items: Sequence[Eventuality], codes: Optional[Sequence[str]] = None) -> Dict[str, float]:
    if not items:
        raise AlignmentError("pattern distribution of an empty list")
    counts = Counter(ev.pattern for ev in items)
    keys = list(codes or []) + [UNMATCHED]
    keys += sorted(k for k in counts if k not in keys)
    n = len(items)
    return {k: counts.get(k, 0) / n for k in keys}


def pearson_r(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """Correlación de Pearson con p-valor bilateral."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError(f"pearson_r needs two equal-length vectors of length >= 2, got {x.shape} and {y.shape}")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise UndefinedCorrelationError("correlation undefined: zero variance input")
    r, p = stats.pearsonr(x, y)
    return float(np.clip(r, -1.0, 1.0)), float(p)


def compare_pattern_distributions(kb_heads: Sequence[Eventuality], graph_nodes: Sequence[Eventuality],
                                  codes: Sequence[str]) -> dict:
    a = pattern_distribution(kb_heads, codes)
    b = pattern_distribution(graph_nodes, codes)
    keys = list(a)
    for k in b:
        if k not in a:
            keys.append(k)
    xa = [a.get(k, 0.0) for k in keys]
    xb = [b.get(k, 0.0) for k in keys]
    try:
        r, p = pearson_r(xa, xb)
    except UndefinedCorrelationError:
        r, p = float("nan"), float("nan")
    return {"patterns": keys, "kb": xa, "graph": xb, "pearson_r": r, "p_value": p}
