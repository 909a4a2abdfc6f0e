import numpy as np
import pytest

from conftest import DictEncoder, make_rg
from core.encoders import EncoderConfig, NodeEmbedder
from core.errors import EvaluationError, TrainingError
from core.sampler import SamplerConfig, compose
from core.scorer import OutputHeadParams, ScorerParams
from core.trainer import (
    Adam,
    TrainRun,
    accuracy,
    evaluate_link_prediction,
    read_training_log,
    train,
    write_training_log,
)


def _split(pairs, sizes, seed):
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pairs))
    out, start = [], 0
    for size in sizes:
        out.append([pairs[i] for i in order[start:start + size]])
        start += size
    return out


def _planted():
    heads = [f"alpha alpha alpha x{i}" for i in range(20)]
    tails = [f"omega omega omega y{i}" for i in range(20)]
    fillers = [f"filler filler filler z{i}" for i in range(160)]
    pairs = [(h, t) for h in heads for t in tails]
    train_pos, dev_pos, test_pos = _split(pairs, (300, 50, 50), 0)
    seeds = {p: "train" for p in train_pos}
    seeds.update({p: "dev" for p in dev_pos})
    seeds.update({p: "test" for p in test_pos})
    rg = make_rg("xWant", seeds=seeds, extra_nodes=fillers)
    return rg, train_pos, dev_pos, test_pos


def _negatives(rg, n, seed, split, rg_all=None, mixture=None):
    cfg = SamplerConfig(seed=seed, mixture=mixture or {})
    return [ex.pair for ex in compose(cfg, rg, rg_all or {rg.relation: rg}, n, split)]


def _run(relation, train_pos, train_neg, dev_pos, dev_neg, **kw):
    kw.setdefault("lr", 1e-2)
    kw.setdefault("max_epochs", 30)
    kw.setdefault("patience", 5)
    kw.setdefault("use_sage", False)
    return TrainRun(relation=relation, seed=kw.pop("seed", 7), train_positives=train_pos, train_negatives=train_neg,
                    dev_positives=dev_pos, dev_negatives=dev_neg, **kw)


@pytest.fixture(scope="module")
def planted():
    rg, train_pos, dev_pos, test_pos = _planted()
    run = _run("xWant", train_pos, _negatives(rg, 300, 1, "train"), dev_pos, _negatives(rg, 50, 2, "dev"))
    config = EncoderConfig(dim=32)
    result = train(rg, run, config, NodeEmbedder(config))
    return rg, run, config, result, test_pos


def test_learns_planted_signal(planted):
    rg, run, config, result, test_pos = planted
    assert result.best_dev_accuracy >= 0.9
    assert result.warning is None
    test_neg = _negatives(rg, 50, 3, "test")
    assert evaluate_link_prediction(result.params, test_pos, test_neg, rg, NodeEmbedder(config)) >= 0.9
    assert result.log[0].epoch == 1
    assert 1 <= result.best_epoch <= len(result.log)


def test_training_is_reproducible(planted):
    rg, run, config, result, _ = planted
    again = train(rg, run, config, NodeEmbedder(config))
    assert again.best_epoch == result.best_epoch
    np.testing.assert_array_equal(again.params.head.W, result.params.head.W)
    np.testing.assert_array_equal(again.params.head.b, result.params.head.b)


def test_training_log_file(planted, tmp_path):
    _, _, _, result, _ = planted
    path = str(tmp_path / "train.log")
    write_training_log(result, path)
    records = read_training_log(path)
    assert len(records) == len(result.log) + 1
    assert records[0]["epoch"] == "1"
    assert int(records[-1]["best_epoch"]) == result.best_epoch


def test_sage_uses_neighborhood():
    hubs = {"alpha": "hub alpha", "omega": "hub omega"}
    side = {}
    leaves = {"train": {"alpha": [], "omega": []}, "test": {"alpha": [], "omega": []}}
    for i in range(120):
        kind = "alpha" if i % 2 == 0 else "omega"
        part = "train" if i < 80 else "test"
        key = f"n{i}"
        side[key] = kind
        leaves[part][kind].append(key)

    def pairs_for(part, n_pos, n_neg, seed):
        r = np.random.default_rng(seed)
        a, o = leaves[part]["alpha"], leaves[part]["omega"]
        pos = sorted({(a[r.integers(len(a))], o[r.integers(len(o))]) for _ in range(n_pos * 3)})[:n_pos]
        everyone = a + o
        neg = set()
        while len(neg) < n_neg:
            u, v = everyone[r.integers(len(everyone))], everyone[r.integers(len(everyone))]
            if u != v and not (side[u] == "alpha" and side[v] == "omega"):
                neg.add((u, v))
        return pos, sorted(neg)

    train_pos, train_neg = pairs_for("train", 200, 200, 1)
    dev_pos, dev_neg = pairs_for("train", 260, 40, 2)
    dev_pos = [p for p in dev_pos if p not in set(train_pos)][:40]
    dev_neg = dev_neg[:len(dev_pos)]
    test_pos, test_neg = pairs_for("test", 40, 40, 3)
    seeds = {p: "train" for p in train_pos}
    seeds.update({p: "dev" for p in dev_pos})
    seeds.update({p: "test" for p in test_pos})
    rg = make_rg("xWant", seeds=seeds, candidates=[(k, hubs[kind]) for k, kind in sorted(side.items())])
    config = EncoderConfig(dim=32)
    embed = NodeEmbedder(config)

    scores = {}
    for use_sage in (False, True):
        run = _run("xWant", train_pos, train_neg, dev_pos, dev_neg, use_sage=use_sage, activation="identity",
                   neighbor_size=2, max_epochs=40, patience=10)
        result = train(rg, run, config, embed)
        scores[use_sage] = evaluate_link_prediction(result.params, test_pos, test_neg, rg, embed)
    assert scores[True] >= 0.75
    assert scores[True] >= scores[False] + 0.05


def test_other_relation_negatives_help_on_mixed_test_set():
    heads = [f"alpha alpha alpha x{i}" for i in range(20)]
    tails = [f"omega omega omega y{i}" for i in range(20)]
    sigma = [f"omega omega sigma s{i}" for i in range(20)]
    betas = [f"beta beta beta b{i}" for i in range(5)]
    fillers = [f"filler filler filler z{i}" for i in range(100)]
    pairs = [(h, t) for h in heads for t in tails]
    train_pos, dev_pos, test_pos = _split(pairs, (300, 50, 50), 4)
    seeds = {p: "train" for p in train_pos}
    seeds.update({p: "dev" for p in dev_pos})
    seeds.update({p: "test" for p in test_pos})
    rg = make_rg("xWant", seeds=seeds, extra_nodes=fillers)
    other_seeds = {(h, s): "train" for h in heads + betas for s in sigma}
    rg_all = {"xWant": rg, "xIntent": make_rg("xIntent", seeds=other_seeds)}
    dev_neg = _negatives(rg, 50, 9, "dev")
    test_neg = _negatives(rg, 50, 6, "test", rg_all, {"O": 0.2, "I": 0.1, "S": 0.1})
    assert sum(1 for (_, v) in test_neg if "sigma" in v) >= 5

    config = EncoderConfig(dim=32)
    embed = NodeEmbedder(config)
    results = {}
    for name, mixture in (("rand", {}), ("mixed", {"O": 0.2, "I": 0.1})):
        train_neg = _negatives(rg, 300, 8, "train", rg_all, mixture)
        result = train(rg, _run("xWant", train_pos, train_neg, dev_pos, dev_neg), config, embed)
        results[name] = evaluate_link_prediction(result.params, test_pos, test_neg, rg, embed)
    assert results["mixed"] > results["rand"]


def _by_hand():
    enc = DictEncoder({"a": [1, 0], "b": [0, 1], "c": [0, 0], "d": [-1, -1]})
    params = ScorerParams(EncoderConfig(dim=2), OutputHeadParams(np.array([[1.0, 0, 0, 1], [0, 0, 0, 0]])), "xWant")
    return enc, params


def test_accuracy_by_hand():
    enc, params = _by_hand()
    acc = evaluate_link_prediction(params, [("a", "b"), ("c", "d")], [("d", "c"), ("c", "a")], encode=enc)
    assert acc == 0.75


def test_tie_counts_as_negative():
    enc, params = _by_hand()
    assert accuracy(params, [("c", "a")], [], encode=enc) == 0.0
    assert accuracy(params, [], [("c", "a")], encode=enc) == 1.0


def test_unbalanced_evaluation():
    enc, params = _by_hand()
    with pytest.raises(EvaluationError):
        evaluate_link_prediction(params, [("a", "b")], [], encode=enc)
    with pytest.raises(EvaluationError):
        evaluate_link_prediction(params, [], [], encode=enc)


def test_run_checks():
    rg = make_rg("xWant", seeds={("a", "b"): "train"})
    with pytest.raises(TrainingError, match="shared"):
        train(rg, _run("xWant", [("a", "b")], [], [("a", "b")], []), EncoderConfig(dim=4))
    with pytest.raises(TrainingError):
        train(rg, _run("xWant", [], [], [], []), EncoderConfig(dim=4))


def test_adam_moves_against_gradient():
    params = {"w": np.array([1.0, -1.0])}
    opt = Adam(lr=0.1)
    opt.step(params, {"w": np.array([2.0, -3.0])})
    np.testing.assert_allclose(params["w"], [0.9, -0.9])
