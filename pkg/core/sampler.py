"""
Muestreo de ejemplos negativos: RAND (pares de nodos al azar), O (positivos
de otras relaciones), I (inversiones de positivos) y S (cabeza y cola
barajadas), y su composición en mezclas reproducibles.

Todo el azar sale de ``numpy.random.Generator.integers`` con semillas
explícitas: misma semilla, misma salida byte a byte.
"""
import csv
import os
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from core.errors import SamplerError
from core.log import get_logger
from entities.relation_graph import RelationGraph

log = get_logger("Sampler")

Pair = Tuple[str, str]

CAP_FACTOR = 100


class Strategy(Enum):
    RAND = "RAND"
    O = "O"
    I = "I"
    S = "S"


# orden fijo: desempates del resto mayor y orden de salida
STRATEGY_ORDER = (Strategy.O, Strategy.I, Strategy.S, Strategy.RAND)


@dataclass(frozen=True)
class NegativeExample:
    u: str
    v: str
    strategy: Strategy
    split: str = "train"

    @property
    def pair(self) -> Pair:
        return (self.u, self.v)


@dataclass
class SamplerConfig:
    seed: int
    mixture: Dict[Strategy, float] = field(default_factory=dict)
    exclude_candidates: bool = True
    shuffle_heads: str = "all"  # "all" | "relation"

    def __post_init__(self):
        self.mixture = {Strategy(k) if not isinstance(k, Strategy) else k: v for k, v in self.mixture.items()}
        for s, frac in self.mixture.items():
            if not (0.0 <= frac <= 1.0):
                raise ValueError(f"mixture fraction for {s.value} must be in [0, 1], got {frac}")
        if sum(_exact(f) for f in self.mixture.values()) > 1:
            raise ValueError(f"mixture fractions sum above 1: {self.mixture}")
        if self.shuffle_heads not in ("all", "relation"):
            raise ValueError(f"shuffle_heads must be 'all' or 'relation', got {self.shuffle_heads!r}")

    def fractions(self) -> Dict[Strategy, Fraction]:
        out = {s: _exact(self.mixture.get(s, 0.0)) for s in STRATEGY_ORDER if s is not Strategy.RAND}
        out[Strategy.RAND] = 1 - sum(out.values())
        return out


def _exact(x: float) -> Fraction:
    return Fraction(repr(float(x)))


def strategy_rng(seed: int, strategy: Strategy) -> np.random.Generator:
    return np.random.default_rng([int(seed), STRATEGY_ORDER.index(strategy)])


def largest_remainder(fractions: Mapping[Strategy, Fraction], n: int) -> Dict[Strategy, int]:
    quotas = {s: fractions.get(s, Fraction(0)) * n for s in STRATEGY_ORDER}
    counts = {s: int(q.numerator // q.denominator) for s, q in quotas.items()}
    left = n - sum(counts.values())
    by_remainder = sorted(STRATEGY_ORDER, key=lambda s: (-(quotas[s] - counts[s]), STRATEGY_ORDER.index(s)))
    for s in by_remainder[:left]:
        counts[s] += 1
    return counts


def _draw(rng: np.random.Generator, size: int) -> int:
    return int(rng.integers(0, size))


def sample_rand(rg: RelationGraph, n: int, rng: np.random.Generator,
                exclude_candidates: bool = True) -> List[Pair]:
    """Pares uniformes (u, v), u != v, fuera de los positivos (y de las candidatas si se pide)."""
    if n == 0:
        return []
    nodes = rg.sorted_nodes()
    if len(nodes) < 2:
        raise SamplerError("RAND", f"relation graph {rg.relation} needs at least 2 nodes", 0)
    excluded: Set[Pair] = set(rg.seed_positive_edges)
    if exclude_candidates:
        excluded |= set(rg.candidate_edges)
    out: List[Pair] = []
    attempts = 0
    while len(out) < n:
        if attempts >= CAP_FACTOR * n:
            raise SamplerError("RAND", f"attempt cap {CAP_FACTOR * n} exceeded", len(out))
        attempts += 1
        i, j = _draw(rng, len(nodes)), _draw(rng, len(nodes))
        if i == j:
            continue
        pair = (nodes[i], nodes[j])
        if pair in excluded:
            continue
        out.append(pair)
    return out


def sample_others(rg_all: Mapping[str, RelationGraph], target: str, n: int,
                  rng: np.random.Generator) -> List[Pair]:
    """Pares uniformes de la unión de positivos de las demás relaciones, sin positivos de ``target``."""
    if n == 0:
        return []
    own = rg_all[target].seed_pairs() if target in rg_all else set()
    pool: Set[Pair] = set()
    for rel, rg in rg_all.items():
        if rel != target:
            pool |= rg.seed_pairs()
    ordered = sorted(pool - own)
    if not ordered:
        raise SamplerError("O", f"no positives from relations other than {target}", 0)
    return [ordered[_draw(rng, len(ordered))] for _ in range(n)]


def sample_inversion(rg: RelationGraph, n: int, rng: np.random.Generator) -> List[Pair]:
    """Inversiones (v, u) de positivos (u, v) cuya inversa no es positiva."""
    if n == 0:
        return []
    positives = rg.seed_pairs()
    valid = sorted((v, u) for (u, v) in positives if (v, u) not in positives)
    if not valid:
        raise SamplerError("I", f"every positive of {rg.relation} is symmetric", 0)
    return [valid[_draw(rng, len(valid))] for _ in range(n)]


def sample_shuffle(heads: Set[str], tails: Set[str], positives: Set[Pair], n: int,
                   rng: np.random.Generator) -> List[Pair]:
    """u uniforme sobre cabezas, v uniforme sobre colas; se emite si (u, v) no es positivo."""
    if n == 0:
        return []
    if not heads or not tails:
        raise SamplerError("S", "empty head or tail set", 0)
    hs, ts = sorted(heads), sorted(tails)
    taken = sum(1 for (u, v) in positives if u in heads and v in tails)
    selfs = len(heads & tails)
    if taken + selfs >= len(hs) * len(ts):
        raise SamplerError("S", "every head x tail pair is positive", 0)
    out: List[Pair] = []
    attempts = 0
    while len(out) < n:
        if attempts >= CAP_FACTOR * n:
            raise SamplerError("S", f"attempt cap {CAP_FACTOR * n} exceeded", len(out))
        attempts += 1
        pair = (hs[_draw(rng, len(hs))], ts[_draw(rng, len(ts))])
        if pair[0] == pair[1] or pair in positives:
            continue
        out.append(pair)
    return out


def shuffle_pools(rg: RelationGraph, rg_all: Mapping[str, RelationGraph], scope: str = "all"):
    sources = rg_all.values() if scope == "all" else [rg]
    heads = {u for g in sources for (u, _) in g.seed_positive_edges}
    heads |= {u for (u, _) in rg.seed_positive_edges}
    tails = {v for (_, v) in rg.seed_positive_edges}
    return heads, tails


def compose(config: SamplerConfig, rg: RelationGraph, rg_all: Mapping[str, RelationGraph], n: int,
            split: str = "train", heads: Optional[Set[str]] = None) -> List[NegativeExample]:
    """
    Exactamente ``n`` negativos; cuentas por estrategia con resto mayor, el
    resto para RAND. Cada estrategia usa su propio generador derivado de la semilla.
    """
    counts = largest_remainder(config.fractions(), n)
    positives = rg.seed_pairs()
    out: List[NegativeExample] = []
    for strategy in STRATEGY_ORDER:
        k = counts[strategy]
        if k == 0:
            continue
        rng = strategy_rng(config.seed, strategy)
        try:
            if strategy is Strategy.RAND:
                pairs = sample_rand(rg, k, rng, config.exclude_candidates)
            elif strategy is Strategy.O:
                pairs = sample_others(rg_all, rg.relation, k, rng)
            elif strategy is Strategy.I:
                pairs = sample_inversion(rg, k, rng)
            else:
                h, t = shuffle_pools(rg, rg_all, config.shuffle_heads)
                pairs = sample_shuffle(heads if heads is not None else h, t, positives, k, rng)
        except SamplerError:
            raise
        except Exception as e:
            raise SamplerError(strategy.value, f"sampler failed: {e}") from e
        out.extend(NegativeExample(u, v, strategy, split) for (u, v) in pairs)
    if len(out) != n:
        raise SamplerError("compose", f"expected {n} negatives, built {len(out)}", len(out))
    log.debug(f"{rg.relation}/{split}: " + ", ".join(f"{s.value}={counts[s]}" for s in STRATEGY_ORDER))
    return out


def write_negatives(examples: Sequence[NegativeExample], path: str):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, delimiter="\t", lineterminator="\n")
        for ex in examples:
            writer.writerow([ex.u, ex.v, ex.strategy.value, ex.split])


def read_negatives(path: str) -> List[NegativeExample]:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    out = []
    with open(path, "r", newline="", encoding="utf-8") as f:
        for row in csv.reader(f, delimiter="\t"):
            if not row:
                continue
            u, v, strategy, split = row
            out.append(NegativeExample(u, v, Strategy(strategy), split))
    return out
