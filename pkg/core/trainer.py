"""
Entrenamiento por predicción de enlaces sobre un RelationGraph y evaluación
por accuracy en conjuntos balanceados.
"""
import copy
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from core.encoders import EncoderConfig, NodeEmbedder
from core.errors import EvaluationError, TrainingError
from core.log import get_logger
from core.scorer import Encode, LabeledPair, ScorerParams, init_params, loss_and_gradients, score_pair
from entities.relation_graph import RelationGraph

log = get_logger("Trainer")

Pair = Tuple[str, str]

THRESHOLD = 0.5
CHANCE_MARGIN = 1e-6


@dataclass
class TrainRun:
    relation: str
    seed: int
    train_positives: List[Pair]
    train_negatives: List[Pair]
    dev_positives: List[Pair] = field(default_factory=list)
    dev_negatives: List[Pair] = field(default_factory=list)
    test_positives: List[Pair] = field(default_factory=list)
    test_negatives: List[Pair] = field(default_factory=list)
    batch_size: int = 64
    lr: float = 1e-3
    max_epochs: int = 10
    patience: int = 3
    use_sage: bool = True
    activation: str = "relu"
    neighbor_size: int = 4
    out_dim: Optional[int] = None
    neighbor_seed: Optional[int] = None

    def check(self):
        if not self.train_positives:
            raise TrainingError(f"{self.relation}: no train positives")
        if self.batch_size <= 0 or self.max_epochs <= 0 or self.patience <= 0:
            raise TrainingError("batch_size, max_epochs and patience must be > 0")
        splits = {"train": set(self.train_positives), "dev": set(self.dev_positives),
                  "test": set(self.test_positives)}
        for a, b in (("train", "dev"), ("train", "test"), ("dev", "test")):
            shared = splits[a] & splits[b]
            if shared:
                raise TrainingError(f"{len(shared)} positives shared by {a} and {b}, e.g. {sorted(shared)[0]}")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_accuracy: float

    def as_line(self) -> str:
        return f"epoch={self.epoch} train_loss={self.train_loss:.6f} dev_accuracy={self.dev_accuracy:.6f}"


@dataclass
class TrainResult:
    params: ScorerParams
    log: List[EpochRecord]
    best_epoch: int
    best_dev_accuracy: float
    warning: Optional[str] = None


class Adam:
    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]):
        """Actualiza ``params`` en sitio."""
        self.t += 1
        for name in sorted(grads):
            g = grads[name]
            m = self.m.get(name, np.zeros_like(g))
            v = self.v.get(name, np.zeros_like(g))
            m = self.beta1 * m + (1 - self.beta1) * g
            v = self.beta2 * v + (1 - self.beta2) * g * g
            self.m[name], self.v[name] = m, v
            m_hat = m / (1 - self.beta1 ** self.t)
            v_hat = v / (1 - self.beta2 ** self.t)
            params[name] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _permutation(n: int, rng: np.random.Generator) -> List[int]:
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        order[i], order[j] = order[j], order[i]
    return order


def accuracy(params: ScorerParams, positives: Sequence[Pair], negatives: Sequence[Pair],
             graph: Optional[RelationGraph] = None, encode: Optional[Encode] = None) -> float:
    """Aciertos al umbral 0.5 (empate cuenta como negativo) sobre el total."""
    total = len(positives) + len(negatives)
    if total == 0:
        raise EvaluationError("accuracy over an empty set")
    encode = encode if encode is not None else NodeEmbedder(params.encoder)
    correct = sum(1 for (u, v) in positives if score_pair(u, v, params, graph, encode) > THRESHOLD)
    correct += sum(1 for (u, v) in negatives if not score_pair(u, v, params, graph, encode) > THRESHOLD)
    return correct / total


def evaluate_link_prediction(params: ScorerParams, positives: Sequence[Pair], negatives: Sequence[Pair],
                             graph: Optional[RelationGraph] = None, encode: Optional[Encode] = None) -> float:
    if len(positives) != len(negatives):
        raise EvaluationError(f"unbalanced evaluation set: {len(positives)} positives vs {len(negatives)} negatives")
    if not positives:
        raise EvaluationError("empty evaluation set")
    return accuracy(params, positives, negatives, graph, encode)


def train(rg: RelationGraph, run: TrainRun, encoder: EncoderConfig, encode: Optional[Encode] = None,
          progress: bool = False) -> TrainResult:
    """
    Adam sobre la entropía cruzada, parada temprana por accuracy de dev
    (paciencia ``run.patience``); devuelve el mejor checkpoint de dev.
    """
    run.check()
    encode = encode if encode is not None else NodeEmbedder(encoder)
    params = init_params(encoder, run.relation, run.seed, run.use_sage, run.out_dim, run.activation,
                         run.neighbor_size)
    if run.neighbor_seed is not None:
        params.seed = run.neighbor_seed
    examples: List[LabeledPair] = [(u, v, 1) for (u, v) in run.train_positives]
    examples += [(u, v, 0) for (u, v) in run.train_negatives]
    dev_pos, dev_neg = run.dev_positives, run.dev_negatives
    if not dev_pos and not dev_neg:
        log.warning(f"{run.relation}: no dev set, early stopping on train accuracy")
        dev_pos, dev_neg = run.train_positives, run.train_negatives

    rng = np.random.default_rng([int(run.seed), 1])
    optimizer = Adam(run.lr)
    history: List[EpochRecord] = []
    best, best_epoch, best_acc, waited = copy.deepcopy(params), 0, -1.0, 0
    epochs = range(1, run.max_epochs + 1)
    for epoch in tqdm(epochs, desc=f"train {run.relation}", disable=not progress):
        order = _permutation(len(examples), rng)
        loss_sum = 0.0
        for start in range(0, len(order), run.batch_size):
            batch = [examples[i] for i in order[start:start + run.batch_size]]
            loss, grads = loss_and_gradients(batch, params, rg, encode, epoch)
            optimizer.step(params.arrays(), grads.as_dict())
            loss_sum += loss * len(batch)
        dev_acc = accuracy(params, dev_pos, dev_neg, rg, encode)
        record = EpochRecord(epoch, loss_sum / len(examples), dev_acc)
        history.append(record)
        log.debug(record.as_line())
        if dev_acc > best_acc:
            best, best_epoch, best_acc, waited = copy.deepcopy(params), epoch, dev_acc, 0
        else:
            waited += 1
            if waited >= run.patience:
                log.info(f"{run.relation}: early stop at epoch {epoch}, best epoch {best_epoch}")
                break
    warning = None
    if best_acc <= THRESHOLD + CHANCE_MARGIN:
        warning = f"dev accuracy never exceeded {THRESHOLD} (best {best_acc:.4f})"
        log.warning(f"{run.relation}: {warning}")
    return TrainResult(best, history, best_epoch, best_acc, warning)


def write_training_log(result: TrainResult, path: str):
    with open(path, "w", encoding="utf-8") as f:
        for record in result.log:
            f.write(record.as_line() + "\n")
        f.write(f"best_epoch={result.best_epoch} best_dev_accuracy={result.best_dev_accuracy:.6f}\n")
        if result.warning:
            f.write(f"warning={result.warning.replace(' ', '_')}\n")


def read_training_log(path: str) -> List[Dict[str, str]]:
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(dict(item.split("=", 1) for item in line.split(" ")))
    return records
