"""
Métricas automáticas: novedad (NT instancia a instancia, NU sobre colas
únicas), diversidad dist-1/dist-2 por cabeza y el informe por relación.

Los valores se calculan como ``Fraction`` para poder compararlos
exactamente; el informe los pasa a float.
"""
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from nltk.util import ngrams
from scipy.stats import norm

from core.errors import MetricsError
from core.log import get_logger

log = get_logger("Metrics")

NOVELTY_KS = (1, 2, 5, 10)
SIGNIFICANCE_LEVEL = 0.05

# orden fijo de columnas de report.tsv
COLUMNS = ["accuracy"] + [f"{m}@{k}" for k in NOVELTY_KS for m in ("NT", "NU")] + ["dist1", "dist2"]


def _top_k_pool(generated: Mapping[str, Sequence[str]], k: int) -> List[str]:
    pool: List[str] = []
    for head in sorted(generated):
        pool.extend(generated[head][:k])
    return pool


def novelty(generated: Mapping[str, Sequence[str]], train_tails: Set[str], k: int) -> Tuple[Fraction, Fraction]:
    """
    NT = colas novedosas / colas del pool (con repeticiones);
    NU = colas únicas novedosas / colas únicas del pool.
    Novedosa = ausente (igualdad exacta) de ``train_tails``.
    """
    if k < 1:
        raise MetricsError(f"k must be >= 1, got {k}")
    pool = _top_k_pool(generated, k)
    if not pool:
        raise MetricsError("novelty over an empty pool of generated tails")
    nt = Fraction(sum(1 for t in pool if t not in train_tails), len(pool))
    unique = set(pool)
    nu = Fraction(sum(1 for t in unique if t not in train_tails), len(unique))
    return nt, nu


def novelty_at_k(generated: Mapping[str, Sequence[str]], train_tails: Set[str],
                 ks: Iterable[int] = NOVELTY_KS) -> Dict[int, Tuple[Fraction, Fraction]]:
    return {k: novelty(generated, train_tails, k) for k in ks}


@dataclass
class DiversityResult:
    dist1: Fraction
    dist2: Optional[Fraction]
    excluded1: int = 0
    excluded2: int = 0


def _head_dist(tails: Sequence[str], n: int) -> Optional[Fraction]:
    grams = []
    for tail in tails:
        grams.extend(ngrams(tail.split(), n))
    if not grams:
        return None
    return Fraction(len(set(grams)), len(grams))


def diversity(generated: Mapping[str, Sequence[str]]) -> DiversityResult:
    """
    dist-n por cabeza (n-gramas distintos / n-gramas totales de sus colas),
    promediado sobre las cabezas. Una cabeza sin n-gramas queda fuera de esa
    media y se cuenta en ``excluded``.
    """
    if not generated:
        raise MetricsError("diversity needs at least one head")
    per_n: Dict[int, List[Fraction]] = {1: [], 2: []}
    excluded = {1: 0, 2: 0}
    for head in sorted(generated):
        tails = generated[head]
        if not tails:
            raise MetricsError(f"head {head!r} has no generated tails")
        for n in (1, 2):
            value = _head_dist(tails, n)
            if value is None:
                excluded[n] += 1
            else:
                per_n[n].append(value)
    if not per_n[1]:
        raise MetricsError("every generated tail is empty")
    dist1 = sum(per_n[1], Fraction(0)) / len(per_n[1])
    dist2 = sum(per_n[2], Fraction(0)) / len(per_n[2]) if per_n[2] else None
    return DiversityResult(dist1, dist2, excluded[1], excluded[2])


def accuracy_z_test(acc_a: float, n_a: int, acc_b: float, n_b: int) -> Tuple[float, float]:
    """z de dos proporciones (varianza combinada) y p bilateral."""
    if n_a <= 0 or n_b <= 0:
        raise MetricsError("z-test needs non-empty samples")
    pooled = (acc_a * n_a + acc_b * n_b) / (n_a + n_b)
    se = math.sqrt(pooled * (1 - pooled) * (1 / n_a + 1 / n_b))
    if se == 0:
        return 0.0, 1.0
    z = (acc_a - acc_b) / se
    return z, float(2 * norm.sf(abs(z)))


@dataclass
class MetricsReport:
    relations: Dict[str, Dict[str, Optional[float]]] = field(default_factory=dict)
    macro: Dict[str, Optional[float]] = field(default_factory=dict)
    missing: Dict[str, int] = field(default_factory=dict)
    test_sizes: Dict[str, int] = field(default_factory=dict)
    # relación -> (z, p) frente al informe de referencia
    significance: Dict[str, Tuple[float, float]] = field(default_factory=dict)

    def is_significant(self, relation: str) -> bool:
        return relation in self.significance and self.significance[relation][1] < SIGNIFICANCE_LEVEL

    def footnotes(self) -> List[str]:
        notes = [f"{col}: {n} missing" for col, n in self.missing.items() if n]
        if self.significance:
            notes.append(f"*: p < {SIGNIFICANCE_LEVEL} against the baseline accuracy (two-proportion z-test)")
        return notes


def relation_metrics(accuracy: Optional[float] = None,
                     generated: Optional[Mapping[str, Sequence[str]]] = None,
                     train_tails: Optional[Set[str]] = None) -> Dict[str, Optional[float]]:
    """Fila del informe para una relación; las celdas que no se pueden calcular quedan en None."""
    row: Dict[str, Optional[float]] = {col: None for col in COLUMNS}
    row["accuracy"] = accuracy
    if generated:
        for k, (nt, nu) in novelty_at_k(generated, train_tails or set()).items():
            row[f"NT@{k}"], row[f"NU@{k}"] = float(nt), float(nu)
        div = diversity(generated)
        row["dist1"] = float(div.dist1)
        row["dist2"] = float(div.dist2) if div.dist2 is not None else None
    return row


def assemble_report(per_relation: Mapping[str, Mapping[str, Optional[float]]],
                    test_sizes: Optional[Mapping[str, int]] = None,
                    baseline: Optional[Mapping[str, Tuple[float, int]]] = None) -> MetricsReport:
    """
    Filas por relación y media macro. Con ``baseline`` (relación -> (accuracy, n))
    cada accuracy se contrasta con ``accuracy_z_test`` usando ``test_sizes``.
    """
    if not per_relation:
        raise MetricsError("report needs at least one evaluated relation")
    report = MetricsReport()
    for rel in sorted(per_relation):
        row = per_relation[rel]
        report.relations[rel] = {col: row.get(col) for col in COLUMNS}
    for col in COLUMNS:
        present = [r[col] for r in report.relations.values() if r[col] is not None]
        report.missing[col] = len(report.relations) - len(present)
        report.macro[col] = sum(present) / len(present) if present else None
    report.test_sizes = dict(test_sizes or {})
    for rel, row in report.relations.items():
        if baseline and rel in baseline and row["accuracy"] is not None and rel in report.test_sizes:
            base_acc, base_n = baseline[rel]
            report.significance[rel] = accuracy_z_test(row["accuracy"], report.test_sizes[rel], base_acc, base_n)
    return report


def read_baseline(path: str) -> Dict[str, Tuple[float, int]]:
    """(accuracy, n_test) por relación de un report.jsonl anterior."""
    out: Dict[str, Tuple[float, int]] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            if rec.get("relation") == "macro" or rec.get("accuracy") is None or not rec.get("n_test"):
                continue
            out[rec["relation"]] = (float(rec["accuracy"]), int(rec["n_test"]))
    return out


def _cell(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.4f}"


def render_tsv(report: MetricsReport) -> str:
    lines = ["\t".join(["relation"] + COLUMNS)]
    for rel, row in report.relations.items():
        cells = [_cell(row[c]) for c in COLUMNS]
        if report.is_significant(rel):
            cells[0] += "*"
        lines.append("\t".join([rel] + cells))
    lines.append("\t".join(["macro"] + [_cell(report.macro[c]) for c in COLUMNS]))
    lines.extend(f"# {note}" for note in report.footnotes())
    return "\n".join(lines) + "\n"


def render_jsonl(report: MetricsReport) -> str:
    records = []
    for rel, row in report.relations.items():
        rec = {"relation": rel, **row}
        if rel in report.test_sizes:
            rec["n_test"] = report.test_sizes[rel]
        if rel in report.significance:
            rec["z"], rec["p"] = report.significance[rel]
        records.append(rec)
    records.append({"relation": "macro", **report.macro, "missing": report.missing})
    return "".join(json.dumps(r, sort_keys=False) + "\n" for r in records)
