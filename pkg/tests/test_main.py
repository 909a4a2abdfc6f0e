import os

from conftest import TOY_CONFIG, TOY_KB
from main import EXIT_DATA, EXIT_OK, EXIT_UPSTREAM, EXIT_USAGE, run


def test_align_ok(toy_config, capsys):
    path = toy_config()
    assert run(["align", "--config", path]) == EXIT_OK
    out = capsys.readouterr().out
    assert "align done" in out
    assert run(["align", "--config", path]) == EXIT_OK
    assert "up-to-date" in capsys.readouterr().out


def test_unknown_command():
    assert run(["bake", "--config", "x.cfg"]) == EXIT_USAGE


def test_missing_config_argument():
    assert run(["align"]) == EXIT_USAGE


def test_missing_config_file(tmp_path, clean_env):
    assert run(["align", "--config", str(tmp_path / "none.cfg")]) == EXIT_USAGE


def test_relation_not_configured(toy_config):
    assert run(["extract", "--config", toy_config(), "--relation", "xAttr"]) == EXIT_USAGE


def test_populate_before_train(toy_config, capsys):
    assert run(["populate", "--config", toy_config(), "--relation", "xIntent"]) == EXIT_UPSTREAM
    assert "run cmd_train first" in capsys.readouterr().err


def test_malformed_graph_is_data_error(tmp_path, clean_env):
    graph = tmp_path / "graph.tsv"
    graph.write_text("he eats\tBecause\the is hungry\n")
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(TOY_CONFIG.format(graph=graph, kb=TOY_KB, workdir=tmp_path / "work", threshold=0.5))
    assert run(["align", "--config", str(cfg)]) == EXIT_DATA
    assert not os.path.exists(tmp_path / "work" / "align" / "manifest.json")
