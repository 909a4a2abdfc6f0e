from collections import Counter

import pytest

from conftest import TOY_KB
from core.errors import ParseError
from core.seed_kb import load_seed_kb
from entities.tuples import CommonsenseTuple

PIVOTED = '''event,oEffect,xIntent,prefix,split
PersonX eats food,[],"[""to be full"", ""none""]","[""eat""]",trn
PersonX helps PersonY,"[""thanks PersonX""]","[""to be nice""]",[],tst
'''


def test_toy_kb_skips_none_tails():
    kb = load_seed_kb(TOY_KB)
    assert len(kb) == 30
    assert Counter(t.split for t in kb) == {"train": 22, "dev": 3, "test": 5}
    assert all(t.tail != "none" for t in kb)


def test_pivoted_csv(tmp_path):
    path = tmp_path / "atomic.csv"
    path.write_text(PIVOTED)
    kb = load_seed_kb(str(path), format="pivoted_csv")
    assert kb == [
        CommonsenseTuple("PersonX eats food", "xIntent", "to be full", "train"),
        CommonsenseTuple("PersonX helps PersonY", "oEffect", "thanks PersonX", "test"),
        CommonsenseTuple("PersonX helps PersonY", "xIntent", "to be nice", "test"),
    ]


def test_pivoted_bad_cell(tmp_path):
    path = tmp_path / "atomic.csv"
    path.write_text('event,xIntent,split\nPersonX eats,[to be full,trn\n')
    with pytest.raises(ParseError) as exc:
        load_seed_kb(str(path), format="pivoted_csv")
    assert exc.value.line == 2


def test_pivoted_requires_split_column(tmp_path):
    path = tmp_path / "atomic.csv"
    path.write_text('event,xIntent\nPersonX eats,[]\n')
    with pytest.raises(ParseError, match="split"):
        load_seed_kb(str(path), format="pivoted_csv")


def test_triples_unknown_split(tmp_path):
    path = tmp_path / "kb.tsv"
    path.write_text("PersonX eats\txIntent\tto be full\ttrain\nPersonX eats\txWant\tto sleep\tholdout\n")
    with pytest.raises(ParseError) as exc:
        load_seed_kb(str(path))
    assert exc.value.line == 2


def test_triples_unknown_relation(tmp_path):
    path = tmp_path / "kb.tsv"
    path.write_text("PersonX eats\tisA\tfood\ttrain\n")
    with pytest.raises(ParseError, match="isA"):
        load_seed_kb(str(path))


def test_triples_wrong_width(tmp_path):
    path = tmp_path / "kb.tsv"
    path.write_text("PersonX eats\txIntent\tto be full\n")
    with pytest.raises(ParseError):
        load_seed_kb(str(path))


def test_empty_file(tmp_path):
    path = tmp_path / "kb.tsv"
    path.write_text("")
    assert load_seed_kb(str(path)) == []


def test_unknown_format(tmp_path):
    path = tmp_path / "kb.tsv"
    path.write_text("")
    with pytest.raises(ValueError):
        load_seed_kb(str(path), format="jsonl")
