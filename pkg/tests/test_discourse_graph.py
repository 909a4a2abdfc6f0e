import pytest

from conftest import TOY_GRAPH
from core.discourse_graph import DiscourseGraph, graph_statistics, load_discourse_graph
from core.errors import ParseError
from core.normalize import normalize


def test_load_toy_graph():
    graph = load_discourse_graph(TOY_GRAPH)
    assert graph.frozen
    assert len(graph) == 42
    assert len(graph.edges) == 29
    assert graph.merged == 1
    assert graph.rejected == 0
    graph.check_invariants()


def test_duplicate_edges_sum_weights():
    graph = load_discourse_graph(TOY_GRAPH)
    edge = graph.edge("he go to school", "Precedence", "he study")
    assert edge.weight == 3.0
    assert graph.edge("i be hungry", "Result", "i have lunch").weight == 3.0


def test_statistics():
    stats = graph_statistics(load_discourse_graph(TOY_GRAPH))
    per_rel = stats["edges_per_relation"]
    assert per_rel["Precedence"] == 7
    assert per_rel["Result"] == 11
    assert per_rel["Reason"] == 3
    assert per_rel["Exception"] == 0
    assert sum(per_rel.values()) == stats["edges"]
    assert stats["avg_degree"] == pytest.approx(2 * 29 / 42)
    assert (stats["merged"], stats["rejected"]) == (1, 0)


def test_adjacency_indices_are_sorted():
    graph = load_discourse_graph(TOY_GRAPH)
    outs = [e.tail for e in graph.out_edges("he punch she")]
    assert outs == ["he apologize to she", "she cry"]
    ins = [e.head for e in graph.in_edges("he be tired")]
    assert ins == ["he study"]
    assert [e.head for e in graph.in_edges("he study")] == ["he go to school"]


def test_unknown_relation_strict(tmp_path):
    path = tmp_path / "g.tsv"
    path.write_text("he runs\tPrecedence\the sleeps\nhe eats\tBecause\the sleeps\n")
    with pytest.raises(ParseError) as exc:
        load_discourse_graph(str(path))
    assert exc.value.line == 2


def test_unknown_relation_lenient(tmp_path):
    path = tmp_path / "g.tsv"
    path.write_text("he runs\tPrecedence\the sleeps\nhe eats\tBecause\the sleeps\n")
    graph = load_discourse_graph(str(path), strict=False)
    assert graph.rejected == 1
    assert len(graph.edges) == 1


@pytest.mark.parametrize("line", [
    "he runs\tPrecedence",
    "he runs\tPrecedence\the sleeps\tabc",
    "he runs\tPrecedence\the sleeps\t-1",
    "\tPrecedence\the sleeps",
])
def test_malformed_lines(tmp_path, line):
    path = tmp_path / "g.tsv"
    path.write_text(line + "\n")
    with pytest.raises(ParseError):
        load_discourse_graph(str(path))


def test_comments_and_blank_lines(tmp_path):
    path = tmp_path / "g.tsv"
    path.write_text("# comentario\n\nhe runs\tResult\the is tired\n")
    assert len(load_discourse_graph(str(path)).edges) == 1


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_discourse_graph(str(tmp_path / "nope.tsv"))


def test_frozen_graph_rejects_mutation():
    graph = DiscourseGraph()
    graph.add_edge(normalize("he runs"), "Result", normalize("he is tired"))
    graph.freeze()
    with pytest.raises(RuntimeError):
        graph.add_node(normalize("she sleeps"))


def test_add_edge_validation():
    graph = DiscourseGraph()
    with pytest.raises(ValueError):
        graph.add_edge(normalize("he runs"), "Because", normalize("he is tired"))
    with pytest.raises(ValueError):
        graph.add_edge(normalize("he runs"), "Result", normalize("he is tired"), -1.0)
