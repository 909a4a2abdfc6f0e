from enum import Enum
from typing import Dict, Tuple

ATOMIC_RELATIONS: Tuple[str, ...] = (
    "xIntent", "xNeed", "xAttr", "xEffect", "xWant", "xReact", "oEffect", "oWant", "oReact",
)

DEFAULT_DISCOURSE_RELATIONS: Tuple[str, ...] = (
    "Precedence", "Succession", "Synchronization", "Reason", "Result", "Condition",
    "Contrast", "Concession", "Conjunction", "Instantiation", "Restatement",
    "Alternative", "ChosenAlternative", "Exception", "Co_Occurrence",
)

SPLITS: Tuple[str, ...] = ("train", "dev", "test", "populated")

# ATOMIC pivoted CSV uses short split names
SPLIT_ALIASES: Dict[str, str] = {
    "trn": "train", "train": "train",
    "dev": "dev", "valid": "dev",
    "tst": "test", "test": "test",
    "populated": "populated",
}

PLACEHOLDERS: Tuple[str, ...] = ("PersonX", "PersonY", "PersonZ")


class RelationCategory(Enum):
    CAUSE_AGENT = "cause_agent"
    STATIVE = "stative"
    EFFECT_AGENT = "effect_agent"
    EFFECT_THEME = "effect_theme"

    @property
    def is_theme(self) -> bool:
        return self is RelationCategory.EFFECT_THEME


DEFAULT_CATEGORIES: Dict[RelationCategory, Tuple[str, ...]] = {
    RelationCategory.CAUSE_AGENT: ("xIntent", "xNeed"),
    RelationCategory.STATIVE: ("xAttr",),
    RelationCategory.EFFECT_AGENT: ("xEffect", "xWant", "xReact"),
    RelationCategory.EFFECT_THEME: ("oEffect", "oWant", "oReact"),
}


def check_atomic_relation(relation: str) -> str:
    if relation not in ATOMIC_RELATIONS:
        raise ValueError(f"unknown ATOMIC relation {relation!r}; expected one of {', '.join(ATOMIC_RELATIONS)}")
    return relation


def category_index(categories: Dict[RelationCategory, Tuple[str, ...]]) -> Dict[str, RelationCategory]:
    """Invierte la tabla categoría -> relaciones; exige una partición de las 9 relaciones."""
    index: Dict[str, RelationCategory] = {}
    for cat, members in categories.items():
        for rel in members:
            check_atomic_relation(rel)
            if rel in index:
                raise ValueError(f"relation {rel} assigned to both {index[rel].value} and {cat.value}")
            index[rel] = cat
    missing = [r for r in ATOMIC_RELATIONS if r not in index]
    if missing:
        raise ValueError(f"relations without category: {missing}")
    return index
