import sys

import numpy as np
import pytest

from core.encoders import (
    END_MARKER,
    START_MARKER,
    EmbeddingCache,
    EncoderConfig,
    HashEncoder,
    NodeEmbedder,
    encode_node,
    make_encoder,
    register_encoder,
    registered_encoders,
)
from core.errors import ScorerConfigError
from entities.eventuality import Eventuality


def _ev(key):
    return Eventuality(tuple(key.split(" ")))


def test_hash_encoder_mean_of_tokens():
    enc = HashEncoder(EncoderConfig(dim=32))
    ev = _ev("PersonX eat food")
    expected = sum(enc.token_vector(t) for t in (START_MARKER, "PersonX", "eat", "food", END_MARKER)) / 5
    np.testing.assert_allclose(enc.encode(ev), expected)
    assert enc.encode(ev).shape == (32,)


def test_hash_token_vectors_are_stable_unit_vectors():
    a = HashEncoder(EncoderConfig(dim=16))
    b = HashEncoder(EncoderConfig(dim=16))
    np.testing.assert_array_equal(a.token_vector("eat"), b.token_vector("eat"))
    assert np.linalg.norm(a.token_vector("eat")) == pytest.approx(1.0)
    assert not np.allclose(a.token_vector("eat"), a.token_vector("drink"))


def test_hash_encoder_ignores_token_order():
    enc = HashEncoder(EncoderConfig(dim=16))
    np.testing.assert_allclose(enc.encode(_ev("PersonX eat food")), enc.encode(_ev("food eat PersonX")))


def test_invalid_dim():
    with pytest.raises(ScorerConfigError):
        EncoderConfig(dim=0)


def test_unknown_encoder():
    with pytest.raises(ScorerConfigError, match="hash-64"):
        make_encoder(EncoderConfig(encoder_id="word2vec", dim=8))


def test_register_encoder():
    class Ones:
        def __init__(self, config):
            self.config = config

        def encode(self, ev):
            return np.ones(self.config.dim)

    register_encoder("ones", Ones)
    assert "ones" in registered_encoders()
    embed = NodeEmbedder(EncoderConfig(encoder_id="ones", dim=3))
    np.testing.assert_array_equal(embed("PersonX eat"), np.ones(3))


def test_contextual_encoder_without_torch(monkeypatch):
    monkeypatch.setitem(sys.modules, "torch", None)
    with pytest.raises(ScorerConfigError, match="torch"):
        make_encoder(EncoderConfig(encoder_id="contextual-lm-base", dim=768))


def test_embedding_cache_persists(tmp_path):
    path = str(tmp_path / "cache" / "vectors.bin")
    cache = EmbeddingCache(path, 4)
    cache.put("PersonX eat", np.arange(4, dtype=np.float64))
    cache.flush()
    reloaded = EmbeddingCache(path, 4)
    assert len(reloaded) == 1
    np.testing.assert_array_equal(reloaded.get("PersonX eat"), np.arange(4))
    assert reloaded.get("PersonX sleep") is None


def test_embedding_cache_rejects_wrong_shape(tmp_path):
    cache = EmbeddingCache(str(tmp_path / "v.bin"), 4)
    with pytest.raises(ScorerConfigError):
        cache.put("PersonX eat", np.zeros(3))


def test_node_embedder_fills_cache(tmp_path):
    config = EncoderConfig(dim=8)
    cache = EmbeddingCache(str(tmp_path / "v.bin"), 8)
    vec = NodeEmbedder(config, cache)("PersonX eat food")
    cache.flush()
    again = NodeEmbedder(config, EmbeddingCache(str(tmp_path / "v.bin"), 8))("PersonX eat food")
    np.testing.assert_array_equal(vec, again)
    np.testing.assert_allclose(vec, HashEncoder(config).encode(_ev("PersonX eat food")))


def test_node_embedder_goes_through_encode_node():
    calls = []

    class Counting:
        def __init__(self, config):
            self.config = config

        def encode(self, ev):
            calls.append(ev.key)
            return np.full(self.config.dim, float(len(ev.tokens)))

    register_encoder("counting", Counting)
    config = EncoderConfig(encoder_id="counting", dim=2)
    embed = NodeEmbedder(config)
    np.testing.assert_array_equal(embed("PersonX eat food"), encode_node(_ev("PersonX eat food"), config))
    embed("PersonX eat food")
    assert calls == ["PersonX eat food", "PersonX eat food"]
    assert make_encoder(config) is make_encoder(EncoderConfig(encoder_id="counting", dim=2))
