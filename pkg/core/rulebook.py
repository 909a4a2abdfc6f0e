import json
import os
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from entities.relations import (
    ATOMIC_RELATIONS,
    DEFAULT_CATEGORIES,
    DEFAULT_DISCOURSE_RELATIONS,
    RelationCategory,
    category_index,
)

DEFAULT_RULES_FILE = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "rules.json")

# Tablas mínimas si no se encuentra rules.json
_FALLBACK = {
    "discourse_relations": list(DEFAULT_DISCOURSE_RELATIONS),
    "temporal_order": {
        "Precedence": "before", "Result": "before",
        "Succession": "after", "Reason": "after", "Condition": "after",
        "Synchronization": "simultaneous", "Conjunction": "simultaneous",
    },
    "relation_categories": {cat.value: list(rels) for cat, rels in DEFAULT_CATEGORIES.items()},
    "temporal_rules": {
        "effect_agent": {"forward": ["Precedence", "Result"], "backward": ["Succession", "Condition", "Reason"],
                         "symmetric": ["Synchronization", "Conjunction"], "pronoun_constraint": "same_subject"},
        "effect_theme": {"forward": ["Precedence", "Result"], "backward": ["Succession", "Condition", "Reason"],
                         "symmetric": ["Synchronization", "Conjunction"], "pronoun_constraint": "different_subject"},
        "cause_agent": {"forward": ["Succession", "Condition", "Reason"], "backward": ["Precedence", "Result"],
                        "symmetric": ["Synchronization", "Conjunction"], "pronoun_constraint": "same_subject"},
        "stative": {"forward": [], "backward": ["Precedence", "Result"],
                    "symmetric": ["Synchronization", "Conjunction"], "pronoun_constraint": "same_subject",
                    "tail_pattern_filter": {"xAttr": ["s-v-a", "s-v-o"]}},
    },
    "subject_pool": ["i", "he", "she", "man", "woman", "person"],
    "tail_rules": {
        "xWant": "ADD_PRONOUN_DROP_TO", "oWant": "ADD_PRONOUN_DROP_TO",
        "xIntent": "ADD_PRONOUN_DROP_TO", "xNeed": "ADD_PRONOUN_DROP_TO",
        "xEffect": "ADD_PRONOUN", "oEffect": "ADD_PRONOUN",
        "xReact": "ADD_PRONOUN_BE", "oReact": "ADD_PRONOUN_BE", "xAttr": "ADD_PRONOUN_BE",
    },
    "pronoun_classes": {
        "i": ["i", "me", "my", "mine", "myself"],
        "he": ["he", "him", "his", "himself"],
        "she": ["she", "her", "hers", "herself"],
        "man": ["man"], "woman": ["woman"], "person": ["person"],
    },
    "possessives": {"i": "my", "he": "his", "she": "her"},
    "subject_nouns": [],
    "copulas": ["am", "is", "are", "was", "were", "be", "been", "being"],
    "prepositions": ["to", "at", "in", "on", "for", "with", "about", "from", "of"],
    "function_words": ["a", "an", "the", "'s", "will", "would", "can", "could", "not"],
    "adjectives": [],
    "adjective_suffixes": ["ful", "ous", "ive", "able", "ible", "less", "ish", "ic", "al", "ed"],
    "verbs": [],
    "irregular_verbs": {"am": "be", "is": "be", "are": "be", "was": "be", "were": "be", "been": "be"},
    "patterns": [
        {"code": "s-v", "template": ["s", "v"]},
        {"code": "s-v-a", "template": ["s", "v", "a"]},
        {"code": "s-v-o", "template": ["s", "v", "o"]},
    ],
}


@dataclass(frozen=True)
class PatternSpec:
    code: str
    template: Tuple[str, ...]


@dataclass
class RuleBook:
    """
    Lexicones, patrones y tablas de reglas cargados desde rules.json.
    """
    discourse_relations: Tuple[str, ...]
    temporal_order: Dict[str, str]
    categories: Dict[RelationCategory, Tuple[str, ...]]
    temporal_rules: Dict[str, dict]
    subject_pool: Tuple[str, ...]
    tail_rules: Dict[str, str]
    pronoun_classes: Dict[str, Tuple[str, ...]]
    possessives: Dict[str, str]
    subject_nouns: frozenset
    copulas: frozenset
    prepositions: frozenset
    function_words: frozenset
    adjectives: frozenset
    adjective_suffixes: Tuple[str, ...]
    verbs: frozenset
    irregular_verbs: Dict[str, str]
    patterns: Tuple[PatternSpec, ...]
    source: Optional[str] = None
    _class_of: Dict[str, str] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        seen: Dict[str, str] = {}
        for name, forms in self.pronoun_classes.items():
            for form in forms:
                if form in seen:
                    raise ValueError(f"pronoun form {form!r} in classes {seen[form]!r} and {name!r}")
                seen[form] = name
        self._class_of = seen
        codes = [p.code for p in self.patterns]
        if len(codes) != len(set(codes)):
            raise ValueError(f"duplicate pattern codes in {codes}")
        if not self.subject_pool:
            raise ValueError("subject_pool must not be empty")
        missing = [r for r in ATOMIC_RELATIONS if r not in self.tail_rules]
        if missing:
            raise ValueError(f"tail rules missing for {missing}")
        category_index(self.categories)

    def pronoun_class(self, token: str) -> Optional[str]:
        return self._class_of.get(token)

    @property
    def pronoun_forms(self) -> frozenset:
        return frozenset(self._class_of)

    @property
    def subject_lexicon(self) -> frozenset:
        return frozenset(self._class_of) | self.subject_nouns

    @property
    def pattern_codes(self) -> Tuple[str, ...]:
        return tuple(p.code for p in self.patterns)

    def category_of(self, relation: str) -> RelationCategory:
        return category_index(self.categories)[relation]

    def move_relation(self, relation: str, category: RelationCategory) -> "RuleBook":
        """Reasigna una relación a otra categoría (p. ej. xReact -> stative)."""
        cats = {c: tuple(r for r in rels if r != relation) for c, rels in self.categories.items()}
        cats[category] = cats[category] + (relation,)
        return replace(self, categories=cats)

    def without_symmetric(self, category: str) -> "RuleBook":
        rules = {k: dict(v) for k, v in self.temporal_rules.items()}
        rules[category]["symmetric"] = []
        return replace(self, temporal_rules=rules)


def _build(data: dict, source: Optional[str]) -> RuleBook:
    merged = dict(_FALLBACK)
    merged.update(data)
    categories = {RelationCategory(name): tuple(rels) for name, rels in merged["relation_categories"].items()}
    return RuleBook(
        discourse_relations=tuple(merged["discourse_relations"]),
        temporal_order=dict(merged["temporal_order"]),
        categories=categories,
        temporal_rules={k: dict(v) for k, v in merged["temporal_rules"].items()},
        subject_pool=tuple(merged["subject_pool"]),
        tail_rules=dict(merged["tail_rules"]),
        pronoun_classes={k: tuple(v) for k, v in merged["pronoun_classes"].items()},
        possessives=dict(merged["possessives"]),
        subject_nouns=frozenset(merged["subject_nouns"]),
        copulas=frozenset(merged["copulas"]),
        prepositions=frozenset(merged["prepositions"]),
        function_words=frozenset(merged["function_words"]),
        adjectives=frozenset(merged["adjectives"]),
        adjective_suffixes=tuple(merged["adjective_suffixes"]),
        verbs=frozenset(merged["verbs"]),
        irregular_verbs=dict(merged["irregular_verbs"]),
        patterns=tuple(PatternSpec(p["code"], tuple(p["template"])) for p in merged["patterns"]),
        source=source,
    )


def load_rulebook(file_path: Optional[str] = None) -> RuleBook:
    """
    Carga las reglas. Sin ruta explícita usa el rules.json del repositorio y,
    si no existe, las tablas mínimas de este módulo.
    """
    if file_path is None:
        if not os.path.exists(DEFAULT_RULES_FILE):
            return _build({}, None)
        file_path = DEFAULT_RULES_FILE
    elif not os.path.exists(file_path):
        raise FileNotFoundError(file_path)
    with open(file_path, "r", encoding="utf-8") as f:
        data = json.load(f)
    return _build(data, file_path)


_default: Optional[RuleBook] = None


def default_rulebook() -> RuleBook:
    global _default
    if _default is None:
        _default = load_rulebook()
    return _default
