import json
from fractions import Fraction

import numpy as np
import pytest

from core.errors import MetricsError
from core.metrics import (
    COLUMNS,
    accuracy_z_test,
    assemble_report,
    diversity,
    novelty,
    novelty_at_k,
    read_baseline,
    relation_metrics,
    render_jsonl,
    render_tsv,
)

GENERATED = {"h1": ["a b", "c"], "h2": ["a b", "d"]}


def test_novelty_by_hand():
    assert novelty(GENERATED, {"a b"}, 1) == (Fraction(0), Fraction(0))
    assert novelty(GENERATED, {"a b"}, 2) == (Fraction(1, 2), Fraction(2, 3))
    assert novelty(GENERATED, set(), 10) == (Fraction(1), Fraction(1))


def test_novelty_at_all_ks():
    table = novelty_at_k(GENERATED, {"a b"})
    assert sorted(table) == [1, 2, 5, 10]
    assert table[5] == table[2]


def test_novelty_errors():
    with pytest.raises(MetricsError):
        novelty(GENERATED, set(), 0)
    with pytest.raises(MetricsError):
        novelty({"h": []}, set(), 1)


def test_diversity_by_hand():
    result = diversity({"h1": ["he eat food", "he eat cake"], "h2": ["sleep"]})
    assert result.dist1 == Fraction(5, 6)
    assert result.dist2 == Fraction(3, 4)
    assert result.excluded1 == 0
    assert result.excluded2 == 1


def test_diversity_without_bigrams():
    result = diversity({"h": ["sleep", "eat"]})
    assert result.dist1 == 1
    assert result.dist2 is None


def test_diversity_errors():
    with pytest.raises(MetricsError):
        diversity({})
    with pytest.raises(MetricsError):
        diversity({"h": []})


def test_z_test():
    z, p = accuracy_z_test(0.9, 100, 0.8, 100)
    assert z == pytest.approx(1.9803, abs=1e-4)
    assert p < 0.05
    assert accuracy_z_test(1.0, 10, 1.0, 10) == (0.0, 1.0)
    with pytest.raises(MetricsError):
        accuracy_z_test(0.5, 0, 0.5, 10)


def _report():
    return assemble_report({
        "xWant": relation_metrics(0.8, GENERATED, {"a b"}),
        "xIntent": relation_metrics(None, {"h": ["go home"]}, set()),
    })


def test_report_macro_and_missing():
    report = _report()
    assert list(report.relations) == ["xIntent", "xWant"]
    assert report.macro["accuracy"] == 0.8
    assert report.missing["accuracy"] == 1
    assert report.macro["NT@1"] == pytest.approx(0.5)
    assert report.missing["dist2"] == 0
    assert report.footnotes() == ["accuracy: 1 missing"]


def test_render_tsv():
    lines = render_tsv(_report()).splitlines()
    assert lines[0] == "\t".join(["relation"] + COLUMNS)
    assert lines[1].startswith("xIntent\t\t1.0000")
    assert lines[3].split("\t")[:2] == ["macro", "0.8000"]
    assert lines[-1] == "# accuracy: 1 missing"


def test_render_jsonl():
    records = [json.loads(line) for line in render_jsonl(_report()).splitlines()]
    assert [r["relation"] for r in records] == ["xIntent", "xWant", "macro"]
    assert records[0]["accuracy"] is None
    assert records[-1]["missing"]["accuracy"] == 1


def test_empty_report():
    with pytest.raises(MetricsError):
        assemble_report({})


def test_novelty_pool_with_repeats():
    assert novelty({"h": ["a", "b", "b", "c"]}, {"a"}, 4) == (Fraction(3, 4), Fraction(2, 3))


@pytest.mark.parametrize("tails, dist1, dist2", [
    (["go home", "go to school"], Fraction(4, 5), Fraction(1)),
    (["a b", "a b"], Fraction(1, 2), Fraction(1, 2)),
])
def test_diversity_single_head(tails, dist1, dist2):
    result = diversity({"h": tails})
    assert (result.dist1, result.dist2) == (dist1, dist2)


def _windows(words, n):
    return [tuple(words[i:i + n]) for i in range(len(words) - n + 1)]


def _brute_dist(generated, n):
    values = []
    for head in generated:
        grams = [g for tail in generated[head] for g in _windows(tail.split(), n)]
        if grams:
            values.append(Fraction(len(set(grams)), len(grams)))
    return sum(values, Fraction(0)) / len(values) if values else None


def _brute_novelty(generated, train, k):
    pool = [t for head in generated for t in generated[head][:k]]
    novel = [t for t in pool if t not in train]
    unique = set(pool)
    return Fraction(len(novel), len(pool)), Fraction(len(unique - train), len(unique))


@pytest.mark.parametrize("seed", range(10))
def test_metrics_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    vocab = ["go", "home", "eat", "food", "to", "school", "sleep"]
    generated = {}
    for h in range(1 + rng.integers(4)):
        generated[f"h{h}"] = [" ".join(vocab[i] for i in rng.integers(0, len(vocab), 1 + rng.integers(4)))
                              for _ in range(1 + rng.integers(5))]
    pool = sorted({t for tails in generated.values() for t in tails})
    train = {t for t in pool if rng.random() < 0.4}
    for k in (1, 2, 5, 10):
        assert novelty(generated, train, k) == _brute_novelty(generated, train, k)
    assert novelty_at_k(generated, train) == {k: _brute_novelty(generated, train, k) for k in (1, 2, 5, 10)}
    result = diversity(generated)
    assert result.dist1 == _brute_dist(generated, 1)
    assert result.dist2 == _brute_dist(generated, 2)


def test_report_marks_significant_accuracy(tmp_path):
    rows = {"xWant": relation_metrics(0.9), "xIntent": relation_metrics(0.81)}
    report = assemble_report(rows, {"xWant": 100, "xIntent": 100}, {"xWant": (0.8, 100), "xIntent": (0.8, 100)})
    assert report.significance["xWant"][0] == pytest.approx(1.9803, abs=1e-4)
    assert report.is_significant("xWant")
    assert not report.is_significant("xIntent")
    lines = render_tsv(report).splitlines()
    assert lines[1].split("\t")[1] == "0.8100"
    assert lines[2].split("\t")[1] == "0.9000*"
    assert lines[-1].startswith("# *: p < 0.05")

    path = tmp_path / "report.jsonl"
    path.write_text(render_jsonl(report))
    assert read_baseline(str(path)) == {"xIntent": (0.81, 100), "xWant": (0.9, 100)}


def test_report_without_baseline_has_no_marker():
    report = assemble_report({"xWant": relation_metrics(0.9)}, {"xWant": 100})
    assert report.significance == {}
    assert "*" not in render_tsv(report)
