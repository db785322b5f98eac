import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trafficbn.errors import ContractError, NotAnnotatedError
from trafficbn.network import Edge, Skeleton, group_strengths, predefined_skeleton, prune
from trafficbn.synth import planted_model, sample
from trafficbn.viz import ancestor_subgraph, filter_strong, node_label, to_dot

EDGE_LINE = re.compile(r'^\s+"([^"]+)" -> "([^"]+)" \[penwidth=(\d+)')
NODE_LINE = re.compile(r'^\s+"([^"]+)" \[label=')


def parse_dot(text):
    nodes, edges = set(), []
    for line in text.splitlines():
        m = EDGE_LINE.match(line)
        if m:
            edges.append((m.group(1), m.group(2), int(m.group(3))))
            continue
        m = NODE_LINE.match(line)
        if m:
            nodes.add(m.group(1))
    return nodes, edges


CHAIN = Skeleton(("A", "B", "C", "D"), (Edge("A", "B", 5.0, 0.01), Edge("B", "C", 20000.0, 0.0)))


def test_ancestor_chain():
    sub = ancestor_subgraph(CHAIN, "C")
    assert sub.nodes == ("A", "B", "C")
    assert sub.edge_keys() == {("A", "B"), ("B", "C")}
    assert "D" not in sub.nodes
    with pytest.raises(ContractError):
        ancestor_subgraph(CHAIN, "Z")


@pytest.fixture(scope="module")
def pruned():
    ds = sample(planted_model(), 5000, seed=11)
    sk = prune(predefined_skeleton(), ds)
    return sk.with_edges(group_strengths(sk.edges, 4))


def reaches(sk, node, sink):
    # reverse BFS from the sink
    seen, frontier = {sink}, [sink]
    while frontier:
        n = frontier.pop()
        for p in sk.parents(n):
            if p not in seen:
                seen.add(p)
                frontier.append(p)
    return node in seen


def test_ancestor_subgraph_on_pruned_model(pruned):
    for sink in ("Accident_L", "Congestion_L"):
        sub = ancestor_subgraph(pruned, sink)
        assert all(reaches(pruned, n, sink) for n in sub.nodes)
        assert sub.edge_keys() <= pruned.edge_keys()
        assert ancestor_subgraph(sub, sink) == sub
        # every retained edge lies on a path to the sink
        assert all(reaches(sub, e.child, sink) for e in sub.edges)


def test_filter_strong_thresholds():
    assert filter_strong(CHAIN, 0).edges == CHAIN.edges
    assert filter_strong(CHAIN, float("inf")).edges == ()
    strong = filter_strong(CHAIN, 10000)
    assert strong.edge_keys() == {("B", "C")}
    assert strong.nodes == ("B", "C")
    with pytest.raises(NotAnnotatedError, match="prune first"):
        filter_strong(Skeleton(("A", "B"), (Edge("A", "B"),)), 1)


def test_empty_dot():
    assert to_dot(Skeleton(())) == "digraph { }\n"


def test_single_edge_penwidth():
    sk = Skeleton(("Rain", "Accident_L"), (Edge("Rain", "Accident_L", 50.0, 1e-12, 2),))
    dot = to_dot(sk)
    nodes, edges = parse_dot(dot)
    assert edges == [("Rain", "Accident_L", 3)]
    assert 'label="Acci\'"' in dot
    assert "cluster_former" in dot and "cluster_latter" in dot and "rank=same" in dot


def test_labels():
    assert node_label("Congestion_L") == "Cong'"
    assert node_label("BrokenVehicle") == "Bro"
    assert node_label("Rain") == "Rain"
    assert node_label("Rain", {"Rain": "R"}) == "R"


def test_full_model_dot(pruned):
    dot = to_dot(pruned)
    nodes, edges = parse_dot(dot)
    assert len(edges) == len(pruned.edges)
    assert {(a, b) for a, b, _ in edges} == pruned.edge_keys()
    assert all(a in nodes and b in nodes for a, b, _ in edges)
    widths = {(e.parent, e.child): 1 + e.strength_class for e in pruned.edges}
    assert all(widths[(a, b)] == w for a, b, w in edges)
    assert to_dot(pruned) == dot


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_dot_deterministic_and_closed(seed):
    rng = np.random.default_rng(seed)
    full = predefined_skeleton()
    keep = [e for e in full.edges if rng.random() < 0.1]
    edges = [Edge(e.parent, e.child, float(rng.uniform(0, 100)), 0.01, int(rng.integers(0, 4))) for e in keep]
    sk = Skeleton(full.nodes, tuple(edges))
    shuffled = Skeleton(tuple(rng.permutation(full.nodes)), tuple(edges[::-1]))
    assert to_dot(sk) == to_dot(shuffled)
    nodes, parsed = parse_dot(to_dot(sk))
    assert all(a in nodes and b in nodes for a, b, _ in parsed)
