"""
Modelo de puntuación de aristas: codificador de nodos, una capa de agregación
de vecinos (media sobre una muestra de tamaño fijo) y una cabeza softmax de
dos clases. Sin la capa de vecinos queda el modelo base sólo-codificador.

La clase 0 de la cabeza es "plausible".
"""
import json
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from core.encoders import EncoderConfig, NodeEmbedder, stable_hash
from core.errors import NonFiniteLossError, ScorerConfigError, SnapshotVersionError
from core.log import get_logger
from entities.relation_graph import RelationGraph
from entities.relations import check_atomic_relation

log = get_logger("Scorer")

MODEL_VERSION = "ckgp-model-v1"
PLAUSIBLE = 0

Encode = Callable[[str], np.ndarray]
LabeledPair = Tuple[str, str, int]


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_grad(z):
    return (z > 0).astype(np.float64)


def _tanh_grad(z):
    return 1.0 - np.tanh(z) ** 2


ACTIVATIONS = {
    "relu": (_relu, _relu_grad),
    "tanh": (np.tanh, _tanh_grad),
    "identity": (lambda z: z, np.ones_like),
}


@dataclass
class SageLayerParams:
    W: np.ndarray  # out_dim x 2d
    activation: str = "relu"
    aggregate: str = "mean"
    neighbor_size: int = 4

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ScorerConfigError(f"unknown activation {self.activation!r}; use one of {sorted(ACTIVATIONS)}")
        if self.aggregate != "mean":
            raise ScorerConfigError(f"only mean aggregation is supported, got {self.aggregate!r}")
        if self.neighbor_size <= 0:
            raise ScorerConfigError(f"neighbor_size must be > 0, got {self.neighbor_size}")

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]


@dataclass
class OutputHeadParams:
    W: np.ndarray  # 2 x 2*out_dim
    b: np.ndarray = field(default_factory=lambda: np.zeros(2))


@dataclass
class ScorerParams:
    encoder: EncoderConfig
    head: OutputHeadParams
    relation: str
    sage: Optional[SageLayerParams] = None
    seed: int = 0  # muestreo de vecinos

    def __post_init__(self):
        check_atomic_relation(self.relation)
        self.check()

    @property
    def hidden_dim(self) -> int:
        return self.sage.out_dim if self.sage is not None else self.encoder.dim

    def check(self):
        d = self.encoder.dim
        if self.sage is not None:
            if self.sage.W.ndim != 2 or self.sage.W.shape[1] != 2 * d or self.sage.W.shape[0] <= 0:
                raise ScorerConfigError(f"sage W has shape {self.sage.W.shape}, expected (out_dim, {2 * d})")
        want = (2, 2 * self.hidden_dim)
        if self.head.W.shape != want:
            raise ScorerConfigError(f"output head W has shape {self.head.W.shape}, expected {want}")
        if self.head.b.shape != (2,):
            raise ScorerConfigError(f"output head b has shape {self.head.b.shape}, expected (2,)")

    def arrays(self) -> Dict[str, np.ndarray]:
        out = {"head_W": self.head.W, "head_b": self.head.b}
        if self.sage is not None:
            out["sage_W"] = self.sage.W
        return out


def init_params(encoder: EncoderConfig, relation: str, seed: int, use_sage: bool = True,
                out_dim: Optional[int] = None, activation: str = "relu", neighbor_size: int = 4) -> ScorerParams:
    rng = np.random.default_rng([int(seed), 0])
    d = encoder.dim
    sage = None
    hidden = d
    if use_sage:
        hidden = out_dim or d
        W = rng.standard_normal((hidden, 2 * d)) * np.sqrt(1.0 / (2 * d))
        sage = SageLayerParams(W, activation, "mean", neighbor_size)
    head_W = rng.standard_normal((2, 2 * hidden)) * np.sqrt(1.0 / (2 * hidden))
    return ScorerParams(encoder, OutputHeadParams(head_W, np.zeros(2)), relation, sage, seed)


def sample_neighbors(v: str, graph: Optional[RelationGraph], size: int, seed: int,
                     epoch: Optional[int] = None) -> List[str]:
    """
    Muestra de ``size`` vecinos de ``v``: con reemplazo si el grado es menor,
    sin reemplazo si no; vacía si el nodo no tiene vecinos (o no está).
    """
    neigh = graph.neighbors(v) if graph is not None else []
    degree = len(neigh)
    if degree == 0:
        return []
    entropy = [int(seed), stable_hash(v, 4)]
    if epoch is not None:
        entropy.append(int(epoch))
    rng = np.random.default_rng(entropy)
    if degree < size:
        return [neigh[int(i)] for i in rng.integers(0, degree, size=size)]
    pool = list(range(degree))
    for i in range(size):
        j = int(rng.integers(i, degree))
        pool[i], pool[j] = pool[j], pool[i]
    return [neigh[i] for i in pool[:size]]


@dataclass
class NodeForward:
    e: np.ndarray
    x: Optional[np.ndarray] = None  # [e ; h_N]
    z: Optional[np.ndarray] = None
    h: Optional[np.ndarray] = None


def _neighbor_mean(v: str, e: np.ndarray, graph: Optional[RelationGraph], size: int, seed: int,
                   encode: Encode, epoch: Optional[int]) -> np.ndarray:
    sample = sample_neighbors(v, graph, size, seed, epoch)
    h_n = np.zeros_like(e)
    for key in sample:
        h_n = h_n + encode(key)
    if sample:
        h_n = h_n / len(sample)
    return h_n


def _node_forward(v: str, graph: Optional[RelationGraph], params: ScorerParams, encode: Encode,
                  epoch: Optional[int]) -> NodeForward:
    e = encode(v)
    sage = params.sage
    if sage is None:
        return NodeForward(e=e, h=e)
    x = np.concatenate([e, _neighbor_mean(v, e, graph, sage.neighbor_size, params.seed, encode, epoch)])
    z = sage.W @ x
    act, _ = ACTIVATIONS[sage.activation]
    return NodeForward(e=e, x=x, z=z, h=act(z))


def aggregate_neighbors(v: str, graph: Optional[RelationGraph], params: SageLayerParams, encode: Encode,
                        seed: int = 0, epoch: Optional[int] = None) -> np.ndarray:
    """h_v = σ(W · [e_v ; media de los vecinos muestreados]); vector cero de vecinos con grado 0."""
    e = encode(v)
    h_n = _neighbor_mean(v, e, graph, params.neighbor_size, seed, encode, epoch)
    act, _ = ACTIVATIONS[params.activation]
    return act(params.W @ np.concatenate([e, h_n]))


def _embedder(params: ScorerParams, encode: Optional[Encode]) -> Encode:
    return encode if encode is not None else NodeEmbedder(params.encoder)


def pair_logits(u: str, v: str, params: ScorerParams, graph: Optional[RelationGraph] = None,
                encode: Optional[Encode] = None, epoch: Optional[int] = None):
    encode = _embedder(params, encode)
    fu = _node_forward(u, graph, params, encode, epoch)
    fv = _node_forward(v, graph, params, encode, epoch)
    hcat = np.concatenate([fu.h, fv.h])
    return params.head.W @ hcat + params.head.b, fu, fv, hcat


def softmax2(logits: np.ndarray) -> np.ndarray:
    return np.exp(logits - logsumexp(logits))


def score_pair(u: str, v: str, params: ScorerParams, graph: Optional[RelationGraph] = None,
               encode: Optional[Encode] = None, epoch: Optional[int] = None) -> float:
    logits, _, _, _ = pair_logits(u, v, params, graph, encode, epoch)
    # p(plausible) = 1 / (1 + exp(l1 - l0)): la pareja suma 1 exactamente
    return float(1.0 / (1.0 + np.exp(logits[1] - logits[PLAUSIBLE])))


@dataclass
class Gradients:
    head_W: np.ndarray
    head_b: np.ndarray
    sage_W: Optional[np.ndarray] = None

    def as_dict(self) -> Dict[str, np.ndarray]:
        out = {"head_W": self.head_W, "head_b": self.head_b}
        if self.sage_W is not None:
            out["sage_W"] = self.sage_W
        return out


def loss_and_gradients(batch: Sequence[LabeledPair], params: ScorerParams, graph: Optional[RelationGraph] = None,
                       encode: Optional[Encode] = None, epoch: Optional[int] = None) -> Tuple[float, Gradients]:
    """
    Entropía cruzada media de dos clases y sus gradientes respecto de la cabeza
    y de W de la capa de vecinos (compartida por u y v). El codificador queda
    congelado.
    """
    if not batch:
        raise ValueError("loss_and_gradients needs a non-empty batch")
    encode = _embedder(params, encode)
    sage = params.sage
    g_head_W = np.zeros_like(params.head.W)
    g_head_b = np.zeros_like(params.head.b)
    g_sage_W = np.zeros_like(sage.W) if sage is not None else None
    hidden = params.hidden_dim
    total = 0.0
    for i, (u, v, label) in enumerate(batch):
        if label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {label!r} at batch example {i}")
        logits, fu, fv, hcat = pair_logits(u, v, params, graph, encode, epoch)
        log_probs = logits - logsumexp(logits)
        target = PLAUSIBLE if label == 1 else 1 - PLAUSIBLE
        loss = -float(log_probs[target])
        if not np.isfinite(loss):
            raise NonFiniteLossError(i, loss)
        total += loss
        d_logits = np.exp(log_probs)
        d_logits[target] -= 1.0
        g_head_W += np.outer(d_logits, hcat)
        g_head_b += d_logits
        if sage is not None:
            d_h = params.head.W.T @ d_logits
            _, act_grad = ACTIVATIONS[sage.activation]
            for part, fwd in ((d_h[:hidden], fu), (d_h[hidden:], fv)):
                d_z = part * act_grad(fwd.z)
                g_sage_W += np.outer(d_z, fwd.x)
    n = len(batch)
    grads = Gradients(g_head_W / n, g_head_b / n, g_sage_W / n if g_sage_W is not None else None)
    return total / n, grads


def save_params(params: ScorerParams, directory: str, config_digest: str = ""):
    os.makedirs(directory, exist_ok=True)
    np.savez(os.path.join(directory, "params.npz"), **params.arrays())
    meta = {
        "version": MODEL_VERSION,
        "relation": params.relation,
        "encoder": {"encoder_id": params.encoder.encoder_id, "dim": params.encoder.dim,
                    "model_name": params.encoder.model_name},
        "sage": None if params.sage is None else {
            "activation": params.sage.activation, "aggregate": params.sage.aggregate,
            "neighbor_size": params.sage.neighbor_size},
        "seed": params.seed,
        "config_digest": config_digest,
    }
    with open(os.path.join(directory, "model.json"), "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, sort_keys=True)


def load_params(directory: str) -> ScorerParams:
    meta_path = os.path.join(directory, "model.json")
    if not os.path.exists(meta_path):
        raise FileNotFoundError(meta_path)
    with open(meta_path, "r", encoding="utf-8") as f:
        meta = json.load(f)
    if meta.get("version") != MODEL_VERSION:
        raise SnapshotVersionError(f"model in {directory} has version {meta.get('version')!r}, "
                                   f"reader expects {MODEL_VERSION!r}")
    arrays = np.load(os.path.join(directory, "params.npz"))
    encoder = EncoderConfig(**meta["encoder"])
    sage = None
    if meta["sage"] is not None:
        if "sage_W" not in arrays.files:
            raise ScorerConfigError(f"model in {directory} declares a sage layer but has no sage_W")
        sage = SageLayerParams(arrays["sage_W"], **meta["sage"])
    head = OutputHeadParams(arrays["head_W"], arrays["head_b"])
    # ScorerParams.__post_init__ rechaza dimensiones incompatibles aquí, no al puntuar
    return ScorerParams(encoder, head, meta["relation"], sage, int(meta["seed"]))


def read_model_meta(directory: str) -> dict:
    with open(os.path.join(directory, "model.json"), "r", encoding="utf-8") as f:
        return json.load(f)
