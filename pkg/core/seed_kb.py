import csv
import json
import os
from typing import List

import pandas as pd

from core.errors import ParseError
from core.log import get_logger
from entities.relations import ATOMIC_RELATIONS, SPLIT_ALIASES
from entities.tuples import CommonsenseTuple

log = get_logger("SeedKB")

NONE_TAIL = "none"


def _split_name(value: str, where: str, path: str, line: int) -> str:
    split = SPLIT_ALIASES.get(str(value).strip().lower())
    if split is None or split == "populated":
        raise ParseError(f"unknown split value {value!r} in {where}", line, path)
    return split


def _load_pivoted(path: str) -> List[CommonsenseTuple]:
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    for col in ("event", "split"):
        if col not in df.columns:
            raise ParseError(f"pivoted CSV lacks a {col!r} column", None, path)
    rel_cols = [c for c in df.columns if c in ATOMIC_RELATIONS]
    tuples: List[CommonsenseTuple] = []
    for idx, row in df.iterrows():
        row_no = int(idx) + 2  # cabecera + base 1
        split = _split_name(row["split"], f"row {idx}", path, row_no)
        head = row["event"].strip()
        for rel in rel_cols:
            cell = row[rel].strip()
            if not cell:
                continue
            try:
                tails = json.loads(cell)
            except json.JSONDecodeError as e:
                raise ParseError(f"row {idx}: cannot parse {rel} cell {cell!r}: {e.msg}", row_no, path)
            if not isinstance(tails, list) or not all(isinstance(t, str) for t in tails):
                raise ParseError(f"row {idx}: {rel} cell is not a string array", row_no, path)
            for tail in tails:
                tail = tail.strip()
                if not tail or tail.lower() == NONE_TAIL:
                    continue
                tuples.append(CommonsenseTuple(head, rel, tail, split))
    return tuples


def _load_triples(path: str) -> List[CommonsenseTuple]:
    try:
        df = pd.read_csv(path, sep="\t", header=None, dtype=str, keep_default_na=False,
                         quoting=csv.QUOTE_NONE)
    except pd.errors.EmptyDataError:
        return []
    except pd.errors.ParserError as e:
        raise ParseError(f"malformed triple TSV: {e}", None, path)
    if df.empty:
        return []
    if df.shape[1] != 4:
        raise ParseError(f"triple TSV needs 4 columns (head, relation, tail, split), got {df.shape[1]}", None, path)
    tuples: List[CommonsenseTuple] = []
    for idx, (head, rel, tail, split) in enumerate(df.itertuples(index=False, name=None), start=1):
        if rel not in ATOMIC_RELATIONS:
            raise ParseError(f"unknown ATOMIC relation {rel!r}", idx, path)
        split = _split_name(split, f"line {idx}", path, idx)
        tail = tail.strip()
        if not tail or tail.lower() == NONE_TAIL:
            continue
        tuples.append(CommonsenseTuple(head.strip(), rel, tail, split))
    return tuples


def load_seed_kb(path: str, format: str = "triple_tsv") -> List[CommonsenseTuple]:
    """Carga el KB semilla (CSV pivotado estilo ATOMIC o TSV de triples)."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    if format == "pivoted_csv":
        tuples = _load_pivoted(path)
    elif format == "triple_tsv":
        tuples = _load_triples(path)
    else:
        raise ValueError(f"unsupported seed KB format {format!r}")
    log.info(f"{len(tuples)} tuples from {path}")
    return tuples
