from dataclasses import dataclass
from typing import Optional

from entities.relations import SPLITS, check_atomic_relation


@dataclass(frozen=True, order=True)
class DiscourseEdge:
    head: str
    relation: str
    tail: str
    weight: float = 1.0

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError(f"negative weight {self.weight} on {self.head!r} -{self.relation}-> {self.tail!r}")

    @property
    def triple(self):
        return (self.head, self.relation, self.tail)


@dataclass(frozen=True)
class Provenance:
    """Arista discursiva de origen más la orientación concreta (u, v) que se eligió."""
    edge: DiscourseEdge
    u: str
    v: str

    @property
    def sort_key(self):
        return (self.edge.head, self.edge.relation, self.edge.tail, self.u, self.v)


@dataclass(frozen=True)
class CommonsenseTuple:
    head: str
    relation: str
    tail: str
    split: str = "train"
    label: Optional[bool] = None
    score: Optional[float] = None
    provenance: Optional[Provenance] = None

    def __post_init__(self):
        check_atomic_relation(self.relation)
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")
        if self.score is not None and not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score} outside [0, 1]")
        if self.split == "populated" and self.provenance is None:
            raise ValueError("populated tuples must carry a provenance edge")
