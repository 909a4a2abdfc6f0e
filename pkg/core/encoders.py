"""
Codificadores de nodos. Cada eventualidad se representa con la media de los
vectores de sus tokens, marcadores de inicio y fin incluidos:
e_v = (e_[CLS] + e_w1 + ... + e_wn + e_[SEP]) / (n + 2).

``hash-64`` es el codificador de referencia (sin modelo preentrenado): cada
token recibe un vector unitario pseudoaleatorio sembrado con 64 bits de su
sha256. ``contextual-lm-base`` usa un modelo de ``transformers`` y se carga
sólo cuando se pide.
"""
import hashlib
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Optional

import numpy as np

from core.errors import ScorerConfigError
from core.log import get_logger
from entities.eventuality import Eventuality

log = get_logger("Encoder")

START_MARKER = "[CLS]"
END_MARKER = "[SEP]"


@dataclass(frozen=True)
class EncoderConfig:
    encoder_id: str = "hash-64"
    dim: int = 768
    model_name: str = "bert-base-uncased"

    def __post_init__(self):
        if self.dim <= 0:
            raise ScorerConfigError(f"encoder dim must be > 0, got {self.dim}")


def stable_hash(text: str, nbytes: int = 8) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:nbytes], "little")


class HashEncoder:
    """Vectores de token deterministas; el orden de los tokens no cambia el resultado."""

    def __init__(self, config: EncoderConfig):
        self.config = config
        self._tokens: Dict[str, np.ndarray] = {}

    def token_vector(self, token: str) -> np.ndarray:
        vec = self._tokens.get(token)
        if vec is None:
            rng = np.random.default_rng(stable_hash(token))
            vec = rng.standard_normal(self.config.dim)
            vec /= np.linalg.norm(vec)
            self._tokens[token] = vec
        return vec

    def encode(self, ev: Eventuality) -> np.ndarray:
        total = self.token_vector(START_MARKER).copy()
        for tok in ev.tokens:
            total += self.token_vector(tok)
        total += self.token_vector(END_MARKER)
        return total / (len(ev.tokens) + 2)


class ContextualEncoder:
    """Modelo enmascarado de ``transformers``; media de ``last_hidden_state`` sobre todos los tokens."""

    def __init__(self, config: EncoderConfig):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as e:
            raise ScorerConfigError(
                "contextual-lm-base needs torch and transformers: pip install torch transformers") from e
        self.config = config
        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(config.model_name)
        self.model = AutoModel.from_pretrained(config.model_name)
        self.model.eval()
        hidden = int(self.model.config.hidden_size)
        if hidden != config.dim:
            raise ScorerConfigError(f"{config.model_name} has hidden size {hidden}, config says dim={config.dim}")

    def encode(self, ev: Eventuality) -> np.ndarray:
        # una sola secuencia por llamada: sin relleno que excluir
        batch = self.tokenizer(ev.key, return_tensors="pt", truncation=True, max_length=128)
        with self._torch.no_grad():
            out = self.model(**batch)
        return out.last_hidden_state[0].mean(dim=0).cpu().numpy().astype(np.float64)


_REGISTRY: Dict[str, Callable[[EncoderConfig], object]] = {
    "hash-64": HashEncoder,
    "contextual-lm-base": ContextualEncoder,
}


def register_encoder(encoder_id: str, factory: Callable[[EncoderConfig], object]):
    _REGISTRY[encoder_id] = factory


def registered_encoders():
    return sorted(_REGISTRY)


@lru_cache(maxsize=None)
def make_encoder(config: EncoderConfig):
    factory = _REGISTRY.get(config.encoder_id)
    if factory is None:
        raise ScorerConfigError(
            f"unknown encoder {config.encoder_id!r}; registered: {', '.join(registered_encoders())}")
    return factory(config)


def encode_node(ev: Eventuality, config: EncoderConfig) -> np.ndarray:
    return make_encoder(config).encode(ev)


class EmbeddingCache:
    """
    Caché en disco de vectores de nodo para codificadores congelados: binario
    plano de registros (hash de clave u8, d flotantes f8).
    """

    def __init__(self, path: str, dim: int):
        self.path = path
        self.dim = dim
        self.dtype = np.dtype([("key", "<u8"), ("vec", "<f8", (dim,))])
        self._vectors: Dict[int, np.ndarray] = {}
        self._dirty = False
        if os.path.exists(path):
            records = np.fromfile(path, dtype=self.dtype)
            for rec in records:
                self._vectors[int(rec["key"])] = np.array(rec["vec"], dtype=np.float64)
            log.debug(f"loaded {len(records)} cached vectors from {path}")

    def __len__(self):
        return len(self._vectors)

    def get(self, key: str) -> Optional[np.ndarray]:
        return self._vectors.get(stable_hash(key))

    def put(self, key: str, vec: np.ndarray):
        if vec.shape != (self.dim,):
            raise ScorerConfigError(f"cache holds {self.dim}-dim vectors, got shape {vec.shape}")
        self._vectors[stable_hash(key)] = vec
        self._dirty = True

    def flush(self):
        if not self._dirty:
            return
        records = np.zeros(len(self._vectors), dtype=self.dtype)
        for i, h in enumerate(sorted(self._vectors)):
            records[i]["key"] = h
            records[i]["vec"] = self._vectors[h]
        os.makedirs(os.path.dirname(os.path.abspath(self.path)), exist_ok=True)
        tmp = self.path + ".tmp"
        records.tofile(tmp)
        os.replace(tmp, self.path)
        self._dirty = False


class NodeEmbedder:
    """Clave de nodo -> vector, memorizado (y en caché de disco si se da una)."""

    def __init__(self, config: EncoderConfig, cache: Optional[EmbeddingCache] = None):
        self.config = config
        make_encoder(config)  # falla pronto si el id no está registrado
        self.cache = cache
        self._memo: Dict[str, np.ndarray] = {}

    def __call__(self, key: str) -> np.ndarray:
        vec = self._memo.get(key)
        if vec is not None:
            return vec
        if self.cache is not None:
            vec = self.cache.get(key)
        if vec is None:
            vec = encode_node(Eventuality(tuple(key.split(" "))), self.config)
            if self.cache is not None:
                self.cache.put(key, vec)
        self._memo[key] = vec
        return vec
