"""
Inferencia: ranking de colas para cabezas existentes y población de tuplas
nuevas a partir de las aristas candidatas.
"""
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, List, Optional, Sequence, Set, Tuple

import numpy as np
from tqdm import tqdm

from core.encoders import NodeEmbedder
from core.errors import NoCandidatesError, UnknownHeadError
from core.log import get_logger
from core.scorer import Encode, ScorerParams, score_pair
from entities.relation_graph import RelationGraph
from entities.tuples import CommonsenseTuple

log = get_logger("Inference")

Pair = Tuple[str, str]


@dataclass(frozen=True)
class PopulatedTuple:
    tuple: CommonsenseTuple
    novel_head: bool
    novel_tail: bool

    def as_record(self) -> dict:
        t = self.tuple
        edge = t.provenance.edge
        return {
            "head": t.head,
            "relation": t.relation,
            "tail": t.tail,
            "score": round(t.score, 6),
            "novel_head": self.novel_head,
            "novel_tail": self.novel_tail,
            "provenance": {"source_head": edge.head, "source_relation": edge.relation, "source_tail": edge.tail},
        }


@dataclass
class PopulationResult:
    relation: str
    threshold: float
    tuples: List[PopulatedTuple] = field(default_factory=list)
    scored: int = 0

    def __len__(self):
        return len(self.tuples)


def rank_tails(head: str, relation: str, params: ScorerParams, rg: RelationGraph, k: int,
               encode: Optional[Encode] = None) -> List[Tuple[str, float]]:
    """Las k colas candidatas mejor puntuadas; empates por orden lexicográfico de la cola."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if head not in rg.nodes:
        raise UnknownHeadError(head, relation)
    tails = rg.candidate_tails(head)
    if not tails:
        raise NoCandidatesError(head, relation)
    encode = encode if encode is not None else NodeEmbedder(params.encoder)
    scored = [(v, score_pair(head, v, params, rg, encode)) for v in tails]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]


def _score_partition(pairs: Sequence[Pair], params: ScorerParams, rg: RelationGraph, encode: Encode):
    return [score_pair(u, v, params, rg, encode) for (u, v) in pairs]


def iter_population(relation: str, params: ScorerParams, rg: RelationGraph, threshold: float = 0.5,
                    train_heads: Iterable[str] = (), train_tails: Iterable[str] = (),
                    encode: Optional[Encode] = None, workers: int = 1, chunk: int = 512,
                    progress: bool = False) -> Iterator[PopulatedTuple]:
    """
    Puntúa cada arista candidata y emite las que superan el umbral, en orden
    de (u, v). Con ``workers`` > 1 los bloques se puntúan en paralelo y se
    emiten en el mismo orden.
    """
    encode = encode if encode is not None else NodeEmbedder(params.encoder)
    heads: Set[str] = set(train_heads)
    tails: Set[str] = set(train_tails)
    pairs = sorted(rg.candidate_edges)
    blocks = [pairs[i:i + chunk] for i in range(0, len(pairs), chunk)]
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        if executor is not None:
            scores_iter = executor.map(lambda b: _score_partition(b, params, rg, encode), blocks)
        else:
            scores_iter = (_score_partition(b, params, rg, encode) for b in blocks)
        with tqdm(total=len(pairs), desc=f"populate {relation}", disable=not progress) as bar:
            for block, scores in zip(blocks, scores_iter):
                for (u, v), p in zip(block, scores):
                    bar.update(1)
                    if not p > threshold:
                        continue
                    t = CommonsenseTuple(u, relation, v, "populated", True, p, rg.candidate_edges[(u, v)])
                    yield PopulatedTuple(t, u not in heads, v not in tails)
    finally:
        if executor is not None:
            executor.shutdown(wait=True)


def populate(relation: str, params: ScorerParams, rg: RelationGraph, threshold: float = 0.5,
             train_heads: Iterable[str] = (), train_tails: Iterable[str] = (),
             encode: Optional[Encode] = None, workers: int = 1, progress: bool = False) -> PopulationResult:
    result = PopulationResult(relation, threshold)
    for item in iter_population(relation, params, rg, threshold, train_heads, train_tails, encode, workers,
                                progress=progress):
        result.tuples.append(item)
    result.scored = len(rg.candidate_edges)
    log.info(f"{relation}: kept {len(result)} of {result.scored} candidate edges above {threshold}")
    return result


def write_populated(items: Iterable[PopulatedTuple], path: str) -> int:
    """Escribe una tupla JSON por línea a medida que llegan; devuelve cuántas."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for item in items:
            f.write(json.dumps(item.as_record(), ensure_ascii=False) + "\n")
            n += 1
    return n


def read_populated(path: str) -> List[dict]:
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def sample_for_inspection(result: PopulationResult, n: int = 100, seed: int = 0) -> List[PopulatedTuple]:
    """Deduplica por (cabeza, relación, cola) y muestra ``n`` tuplas sin reemplazo."""
    unique = {}
    for item in result.tuples:
        key = (item.tuple.head, item.tuple.relation, item.tuple.tail)
        unique.setdefault(key, item)
    pool = [unique[k] for k in sorted(unique)]
    if n >= len(pool):
        return pool
    rng = np.random.default_rng([int(seed), 2])
    for i in range(n):
        j = int(rng.integers(i, len(pool)))
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:n]
