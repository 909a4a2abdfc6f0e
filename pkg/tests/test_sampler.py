from collections import Counter
from fractions import Fraction

import pytest
from scipy.stats import chisquare

from conftest import make_rg
from core.errors import SamplerError
from core.sampler import (
    SamplerConfig,
    Strategy,
    compose,
    largest_remainder,
    read_negatives,
    sample_inversion,
    sample_others,
    sample_rand,
    sample_shuffle,
    strategy_rng,
    write_negatives,
)


@pytest.fixture
def graphs():
    want = make_rg("xWant", seeds={(f"h{i}", f"t{i}"): "train" for i in range(6)},
                   candidates=[("h0", "c0"), ("c0", "c1")])
    intent = make_rg("xIntent", seeds={(f"h{i}", f"s{i}"): "train" for i in range(4)})
    return want, {"xWant": want, "xIntent": intent}


def test_largest_remainder_example():
    cfg = SamplerConfig(seed=1, mixture={"O": 0.2, "I": 0.1})
    assert largest_remainder(cfg.fractions(), 7) == {Strategy.O: 1, Strategy.I: 1, Strategy.S: 0, Strategy.RAND: 5}
    assert largest_remainder(cfg.fractions(), 10) == {Strategy.O: 2, Strategy.I: 1, Strategy.S: 0, Strategy.RAND: 7}


def test_largest_remainder_ties_follow_strategy_order():
    quarter = Fraction(1, 4)
    fractions = {Strategy.O: quarter, Strategy.I: quarter, Strategy.S: quarter, Strategy.RAND: quarter}
    assert largest_remainder(fractions, 2) == {Strategy.O: 1, Strategy.I: 1, Strategy.S: 0, Strategy.RAND: 0}


@pytest.mark.parametrize("n", [0, 1, 3, 17, 99, 1000])
def test_largest_remainder_sums_to_n(n):
    cfg = SamplerConfig(seed=1, mixture={"O": 0.3, "I": 0.15, "S": 0.05})
    counts = largest_remainder(cfg.fractions(), n)
    assert sum(counts.values()) == n
    for s, frac in cfg.fractions().items():
        assert abs(counts[s] - frac * n) < 1


def test_fractions_are_exact():
    cfg = SamplerConfig(seed=1, mixture={"O": 0.2, "I": 0.1})
    assert cfg.fractions()[Strategy.RAND] == Fraction(7, 10)


@pytest.mark.parametrize("kwargs", [
    {"mixture": {"O": 1.5}},
    {"mixture": {"O": 0.6, "I": 0.5}},
    {"shuffle_heads": "some"},
])
def test_invalid_config(kwargs):
    with pytest.raises(ValueError):
        SamplerConfig(seed=1, **kwargs)


def test_rand_excludes_positives_and_candidates(graphs):
    want, _ = graphs
    pairs = sample_rand(want, 200, strategy_rng(3, Strategy.RAND))
    assert len(pairs) == 200
    for u, v in pairs:
        assert u != v
        assert (u, v) not in want.seed_positive_edges
        assert (u, v) not in want.candidate_edges
    with_candidates = sample_rand(want, 500, strategy_rng(3, Strategy.RAND), exclude_candidates=False)
    assert not set(with_candidates) & set(want.seed_positive_edges)


def test_rand_is_reproducible(graphs):
    want, _ = graphs
    a = sample_rand(want, 50, strategy_rng(9, Strategy.RAND))
    b = sample_rand(want, 50, strategy_rng(9, Strategy.RAND))
    c = sample_rand(want, 50, strategy_rng(10, Strategy.RAND))
    assert a == b
    assert a != c


def test_rand_attempt_cap():
    rg = make_rg("xWant", seeds={("a", "b"): "train", ("b", "a"): "train"})
    with pytest.raises(SamplerError) as exc:
        sample_rand(rg, 3, strategy_rng(1, Strategy.RAND))
    assert exc.value.strategy == "RAND"
    assert exc.value.achieved == 0


def test_rand_needs_two_nodes():
    rg = make_rg("xWant", extra_nodes=["a"])
    with pytest.raises(SamplerError):
        sample_rand(rg, 1, strategy_rng(1, Strategy.RAND))


def test_others_come_from_other_relations(graphs):
    _, rg_all = graphs
    pairs = sample_others(rg_all, "xWant", 30, strategy_rng(2, Strategy.O))
    assert set(pairs) <= rg_all["xIntent"].seed_pairs()
    assert not set(pairs) & rg_all["xWant"].seed_pairs()


def test_others_without_other_relations(graphs):
    want, _ = graphs
    with pytest.raises(SamplerError) as exc:
        sample_others({"xWant": want}, "xWant", 1, strategy_rng(2, Strategy.O))
    assert exc.value.strategy == "O"


def test_inversions(graphs):
    want, _ = graphs
    pairs = sample_inversion(want, 20, strategy_rng(4, Strategy.I))
    for u, v in pairs:
        assert (v, u) in want.seed_positive_edges
        assert (u, v) not in want.seed_positive_edges


def test_inversions_all_symmetric():
    rg = make_rg("xWant", seeds={("a", "b"): "train", ("b", "a"): "train"})
    with pytest.raises(SamplerError):
        sample_inversion(rg, 1, strategy_rng(1, Strategy.I))


def test_shuffle():
    heads, tails = {"h0", "h1", "h2"}, {"t0", "t1", "t2"}
    positives = {("h0", "t0"), ("h1", "t1")}
    pairs = sample_shuffle(heads, tails, positives, 40, strategy_rng(5, Strategy.S))
    for u, v in pairs:
        assert u in heads and v in tails
        assert (u, v) not in positives


def test_shuffle_every_pair_positive():
    with pytest.raises(SamplerError):
        sample_shuffle({"h"}, {"t"}, {("h", "t")}, 1, strategy_rng(5, Strategy.S))


def test_compose_counts_and_determinism(graphs):
    want, rg_all = graphs
    cfg = SamplerConfig(seed=11, mixture={"O": 0.2, "I": 0.1, "S": 0.1})
    negatives = compose(cfg, want, rg_all, 20)
    assert len(negatives) == 20
    assert Counter(ex.strategy for ex in negatives) == {
        Strategy.O: 4, Strategy.I: 2, Strategy.S: 2, Strategy.RAND: 12}
    assert negatives == compose(cfg, want, rg_all, 20)
    assert all(ex.split == "train" for ex in negatives)


def test_compose_dev_split(graphs):
    want, rg_all = graphs
    negatives = compose(SamplerConfig(seed=12), want, rg_all, 5, split="dev")
    assert {ex.strategy for ex in negatives} == {Strategy.RAND}
    assert {ex.split for ex in negatives} == {"dev"}


def test_compose_propagates_sampler_errors(graphs):
    want, _ = graphs
    with pytest.raises(SamplerError):
        compose(SamplerConfig(seed=1, mixture={"O": 0.5}), want, {"xWant": want}, 4)


def test_negatives_file(graphs, tmp_path):
    want, rg_all = graphs
    negatives = compose(SamplerConfig(seed=11, mixture={"O": 0.5}), want, rg_all, 6)
    path = str(tmp_path / "neg" / "train.tsv")
    write_negatives(negatives, path)
    assert read_negatives(path) == negatives


@pytest.mark.parametrize("n, expected", [
    (10, (2, 1, 0, 7)),
    (100, (20, 10, 0, 70)),
    (10000, (2000, 1000, 0, 7000)),
])
def test_compose_counts_scale_with_n(graphs, n, expected):
    want, rg_all = graphs
    negatives = compose(SamplerConfig(seed=21, mixture={"O": 0.2, "I": 0.1}), want, rg_all, n)
    counts = Counter(ex.strategy for ex in negatives)
    assert tuple(counts[s] for s in (Strategy.O, Strategy.I, Strategy.S, Strategy.RAND)) == expected


def test_no_positive_contamination_over_many_draws(graphs):
    want, rg_all = graphs
    negatives = compose(SamplerConfig(seed=5, mixture={"O": 0.2, "I": 0.1, "S": 0.1}), want, rg_all, 100_000)
    assert len(negatives) == 100_000
    assert not {ex.pair for ex in negatives} & want.seed_pairs()
    shares = Counter(ex.strategy for ex in negatives)
    assert shares[Strategy.O] / 100_000 == 0.2
    assert shares[Strategy.S] / 100_000 == 0.1
    assert shares[Strategy.RAND] / 100_000 == 0.6


def test_rand_tails_are_uniform():
    rg = make_rg("xWant", extra_nodes=[f"n{i}" for i in range(10)])
    pairs = sample_rand(rg, 20_000, strategy_rng(17, Strategy.RAND))
    observed = Counter(v for _, v in pairs)
    _, p = chisquare([observed[k] for k in rg.sorted_nodes()])
    assert p > 1e-3


def test_negatives_file_bitwise_deterministic(graphs, tmp_path):
    want, rg_all = graphs
    cfg = SamplerConfig(seed=3, mixture={"O": 0.2, "I": 0.1, "S": 0.1})
    paths = [str(tmp_path / f"run{i}.tsv") for i in range(2)]
    for path in paths:
        write_negatives(compose(cfg, want, rg_all, 1000), path)
    with open(paths[0], "rb") as a, open(paths[1], "rb") as b:
        assert a.read() == b.read()
