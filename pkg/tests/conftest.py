import os
from typing import Dict, Iterable, Tuple

import numpy as np
import pytest

from entities.eventuality import Eventuality
from entities.relation_graph import RelationGraph
from entities.tuples import DiscourseEdge, Provenance

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA_DIR = os.path.join(ROOT, "data")
GOLDEN_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "golden")
TOY_GRAPH = os.path.join(DATA_DIR, "toy_graph.tsv")
TOY_KB = os.path.join(DATA_DIR, "toy_kb.tsv")


def node(key: str) -> Eventuality:
    return Eventuality(tuple(key.split(" ")))


def make_rg(relation: str, seeds: Dict[Tuple[str, str], str] = None,
            candidates: Iterable[Tuple[str, str]] = (), extra_nodes: Iterable[str] = ()) -> RelationGraph:
    """RelationGraph a mano: semillas {par: split}, aristas candidatas con procedencia Result."""
    rg = RelationGraph(relation)
    seeds = seeds or {}
    for (u, v), split in seeds.items():
        rg.seed_positive_edges[(u, v)] = split
    for u, v in candidates:
        rg.candidate_edges[(u, v)] = Provenance(DiscourseEdge(u, "Result", v), u, v)
    keys = set(extra_nodes)
    for u, v in list(seeds) + list(candidates):
        keys.update((u, v))
    rg.nodes = {k: node(k) for k in sorted(keys)}
    return rg


class DictEncoder:
    """Vectores fijos por clave de nodo."""

    def __init__(self, vectors: Dict[str, Iterable[float]]):
        self.vectors = {k: np.asarray(v, dtype=np.float64) for k, v in vectors.items()}

    def __call__(self, key: str) -> np.ndarray:
        return self.vectors[key]


TOY_CONFIG = """\
paths.graph = {graph}
paths.seed_kb = {kb}
paths.workdir = {workdir}
relations = xIntent, xWant
encoder.dim = 16
train.lr = 0.01
train.max_epochs = 3
infer.threshold = {threshold}
seeds.sample = 11
seeds.eval_negatives = 12
seeds.init = 13
seeds.neighbors = 14
seeds.inspect = 15
"""


@pytest.fixture
def clean_env(monkeypatch):
    monkeypatch.delenv("CKGP_WORKDIR", raising=False)
    monkeypatch.delenv("CKGP_STRICT", raising=False)


@pytest.fixture
def toy_config(tmp_path, clean_env):
    def write(threshold: float = 0.5, name: str = "toy.cfg") -> str:
        path = tmp_path / name
        path.write_text(TOY_CONFIG.format(graph=TOY_GRAPH, kb=TOY_KB, workdir=tmp_path / "work",
                                          threshold=threshold))
        return str(path)
    return write
