"""
Configuración del pipeline: archivo de texto plano ``seccion.clave = valor``
validado con pydantic.

Variables de entorno leídas: ``CKGP_WORKDIR`` (sustituye paths.workdir) y
``CKGP_STRICT`` (modo estricto, reproducible bit a bit). Ninguna otra.
"""
import hashlib
import json
import os
from typing import Dict, List, Optional

from pydantic import BaseModel, ValidationError, field_validator, model_validator

from core.errors import ConfigError
from entities.relations import ATOMIC_RELATIONS, RelationCategory

ENV_WORKDIR = "CKGP_WORKDIR"
ENV_STRICT = "CKGP_STRICT"
TRUTHY = ("1", "true", "yes", "on")


class PathsConfig(BaseModel):
    graph: str
    seed_kb: str
    workdir: str = "work"
    graph_format: str = "tsv"
    kb_format: str = "triple_tsv"


class RulesConfig(BaseModel):
    file: Optional[str] = None
    xreact_category: str = "effect_agent"
    cause_symmetric: bool = True
    first_match_only: bool = False

    @field_validator("xreact_category")
    @classmethod
    def _known_category(cls, value: str) -> str:
        RelationCategory(value)
        return value


class ExtractConfig(BaseModel):
    k: int = 20
    strict_graph: bool = True

    @field_validator("k")
    @classmethod
    def _non_negative(cls, value: int) -> int:
        if value < 0:
            raise ValueError("extract.k must be >= 0")
        return value


class MixtureSection(BaseModel):
    O: float = 0.0
    I: float = 0.0
    S: float = 0.0


class SamplerSection(BaseModel):
    O: float = 0.2
    I: float = 0.1
    S: float = 0.0
    # mezcla de los negativos de test; sin ella se usa la de train
    test: Optional[MixtureSection] = None
    exclude_candidates: bool = True
    shuffle_heads: str = "all"
    ratio: int = 1  # negativos de train por positivo


class EncoderSection(BaseModel):
    id: str = "hash-64"
    dim: int = 768
    fine_tune: bool = False
    model_name: str = "bert-base-uncased"
    cache: bool = True

    @field_validator("fine_tune")
    @classmethod
    def _frozen_encoder(cls, value: bool) -> bool:
        # el scorer es numpy puro: no hay gradiente hacia el codificador
        if value:
            raise ValueError("encoder.fine_tune = true is not supported; the encoder stays frozen")
        return value


class ModelSection(BaseModel):
    use_sage: bool = True
    activation: str = "relu"
    neighbor_size: int = 4
    out_dim: Optional[int] = None


class TrainSection(BaseModel):
    batch_size: int = 64
    lr: float = 1e-3
    max_epochs: int = 10
    patience: int = 3


class EvalSection(BaseModel):
    # report.jsonl de otra ejecución; activa el z-test de accuracy
    baseline: Optional[str] = None


class InferSection(BaseModel):
    threshold: float = 0.5
    top_k: int = 10
    workers: int = 1
    inspect_n: int = 100


class SeedsSection(BaseModel):
    # sin valores por defecto: toda semilla se declara
    sample: int
    eval_negatives: int
    init: int
    neighbors: int
    inspect: int


class PipelineConfig(BaseModel):
    paths: PathsConfig
    relations: List[str] = list(ATOMIC_RELATIONS)
    rules: RulesConfig = RulesConfig()
    extract: ExtractConfig = ExtractConfig()
    sampler: SamplerSection = SamplerSection()
    encoder: EncoderSection = EncoderSection()
    model: ModelSection = ModelSection()
    train: TrainSection = TrainSection()
    infer: InferSection = InferSection()
    eval: EvalSection = EvalSection()
    seeds: SeedsSection
    strict: bool = False

    @field_validator("relations", mode="before")
    @classmethod
    def _split_relations(cls, value):
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        return value

    @field_validator("relations")
    @classmethod
    def _known_relations(cls, value: List[str]) -> List[str]:
        unknown = [r for r in value if r not in ATOMIC_RELATIONS]
        if unknown:
            raise ValueError(f"unknown ATOMIC relations {unknown}")
        if not value:
            raise ValueError("relations must list at least one relation")
        return value

    @model_validator(mode="after")
    def _paths_exist(self):
        for name in ("graph", "seed_kb"):
            path = getattr(self.paths, name)
            if not os.path.exists(path):
                raise ValueError(f"paths.{name} does not exist: {path}")
        if self.rules.file is not None and not os.path.exists(self.rules.file):
            raise ValueError(f"rules.file does not exist: {self.rules.file}")
        if self.eval.baseline is not None and not os.path.exists(self.eval.baseline):
            raise ValueError(f"eval.baseline does not exist: {self.eval.baseline}")
        return self

    def digest(self) -> str:
        """sha256 de la configuración efectiva (sin workdir ni modo estricto)."""
        data = self.model_dump(mode="json")
        data["paths"].pop("workdir", None)
        data.pop("strict", None)
        return hashlib.sha256(json.dumps(data, sort_keys=True).encode("utf-8")).hexdigest()

    def relation_dir(self, relation: str) -> str:
        return os.path.join(self.paths.workdir, relation)


def parse_flat(text: str, path: str = "<config>") -> Dict:
    """``a.b = v`` por línea, ``#`` comenta; devuelve diccionarios anidados."""
    tree: Dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or any(not part for part in key.split(".")):
            raise ConfigError(f"{path}:{lineno}: malformed key {key!r}")
        node = tree
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"{path}:{lineno}: {key!r} nests under a plain value")
        if parts[-1] in node:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        node[parts[-1]] = value
    return tree


def _resolve(base: str, value: Optional[str]) -> Optional[str]:
    if value is None or os.path.isabs(value):
        return value
    return os.path.normpath(os.path.join(base, value))


def load_config(path: str, seed: Optional[int] = None, strict: Optional[bool] = None) -> PipelineConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        tree = parse_flat(f.read(), path)
    base = os.path.dirname(os.path.abspath(path))
    paths = tree.setdefault("paths", {})
    if not isinstance(paths, dict):
        raise ConfigError(f"{path}: 'paths' must be a section")
    for key in ("graph", "seed_kb", "workdir"):
        if key in paths:
            paths[key] = _resolve(base, paths[key])
    if ENV_WORKDIR in os.environ:
        paths["workdir"] = os.environ[ENV_WORKDIR]
    elif "workdir" not in paths:
        paths["workdir"] = _resolve(base, "work")
    if isinstance(tree.get("rules"), dict) and "file" in tree["rules"]:
        tree["rules"]["file"] = _resolve(base, tree["rules"]["file"])
    if isinstance(tree.get("eval"), dict) and "baseline" in tree["eval"]:
        tree["eval"]["baseline"] = _resolve(base, tree["eval"]["baseline"])
    if seed is not None:
        tree["seeds"] = {name: str(seed + i) for i, name in enumerate(SeedsSection.model_fields)}
    if strict is not None:
        tree["strict"] = strict
    elif os.environ.get(ENV_STRICT, "").strip().lower() in TRUTHY:
        tree["strict"] = True
    try:
        return PipelineConfig.model_validate(tree)
    except ValidationError as e:
        raise ConfigError(f"invalid config {path}:\n{e}") from e
