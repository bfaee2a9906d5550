import math

import pytest
from hypothesis import given, settings, strategies as st

from conftest import chain3, fig3_graph, iv_graph
from degid.graphmodel import (
    DirectedCycle,
    DuplicateEdge,
    GraphError,
    MixedGraph,
    NodeOutOfRange,
    SelfLoop,
    BudgetExceeded,
    canonical_form,
    count_graphs,
    enumerate_graphs,
    longest_path_lengths,
    random_graph,
    tian_decompose,
    topological_order,
    trek_weights,
    validate,
)


def test_validate_iv_graph():
    validate(iv_graph())


def test_two_cycle_rejected():
    with pytest.raises(DirectedCycle):
        MixedGraph.build(2, [(1, 2), (2, 1)])


def test_self_loop_rejected():
    with pytest.raises(SelfLoop):
        MixedGraph.build(1, [(1, 1)])
    with pytest.raises(SelfLoop):
        MixedGraph.build(2, [], [(2, 2)])


def test_out_of_range_and_duplicates():
    with pytest.raises(NodeOutOfRange):
        MixedGraph.build(2, [(1, 3)])
    with pytest.raises(DuplicateEdge):
        MixedGraph.build(3, [], [(1, 2), (2, 1)])


def test_error_hierarchy():
    for cls in (SelfLoop, DuplicateEdge, NodeOutOfRange, DirectedCycle):
        assert issubclass(cls, GraphError)


def test_topological_order_respects_edges():
    g = MixedGraph.build(4, [(4, 1), (3, 4), (2, 3)])
    order = topological_order(g)
    pos = {v: i for i, v in enumerate(order)}
    assert all(pos[u] < pos[v] for u, v in g.directed)


def test_longest_paths_chain():
    L = longest_path_lengths(chain3())
    assert L[0][2] == 2
    assert L[2][0] is None
    assert L[1][1] == 0


def test_longest_paths_fig3():
    assert longest_path_lengths(fig3_graph())[0][3] == 1


def test_longest_paths_prefers_longer_route():
    g = MixedGraph.build(3, [(1, 2), (2, 3), (1, 3)])
    assert longest_path_lengths(g)[0][2] == 2


def test_trek_weights_iv():
    tw = trek_weights(iv_graph())
    assert tw[(2, 3)] == 4
    assert tw[(1, 3)] == 3
    assert tw[(1, 2)] == 2
    # 3 <- 2 <- 1 -> 2 -> 3 has monomial w11 l12^2 l23^2
    assert tw[(3, 3)] == 5
    assert tw.w_trek == 5


def test_trek_weights_edgeless():
    tw = trek_weights(MixedGraph.build(3))
    assert set(tw.sigma_weight.values()) == {1}
    assert tw.w_trek == 1


def test_trek_weights_fig3():
    tw = trek_weights(fig3_graph())
    # only trek 2 <-> 3
    assert tw[(2, 3)] == 1
    # 2 <- 1 -> 4 beats 2 <-> 3 -> 4
    assert tw[(2, 4)] == 3
    assert tw[(4, 4)] == 3


def test_tian_fig3():
    comps = tian_decompose(fig3_graph())
    assert len(comps) == 2
    c1, c2 = comps
    assert c1.internal == (1,)
    assert c1.nodes == (1,) and not c1.directed and not c1.bidirected
    assert c2.internal == (2, 3, 4)
    assert c2.nodes == (1, 2, 3, 4)
    assert c2.directed == {(1, 2), (1, 4), (3, 4)}
    assert c2.bidirected == {(2, 3), (3, 4)}
    assert c2.incoming == (1,)


def test_tian_subgraph_relabels():
    g = MixedGraph.build(4, [(1, 3)], [(3, 4)])
    comp = [c for c in tian_decompose(g) if 3 in c.internal][0]
    sub, labels = comp.subgraph()
    assert labels == (1, 3, 4)
    assert sub.directed == {(1, 2)}
    assert sub.bidirected == {(2, 3)}


def test_encode_roundtrip():
    g = fig3_graph()
    assert MixedGraph.decode(g.encode()) == g
    with pytest.raises(GraphError):
        MixedGraph.decode("p4|D:1-x|B:")


def test_json_roundtrip():
    g = iv_graph()
    assert MixedGraph.from_json(g.to_json()) == g
    with pytest.raises(GraphError):
        MixedGraph.from_json({"directed": []})


def test_enumerate_p2():
    gs = list(enumerate_graphs(2, 2))
    assert len(gs) == 4
    assert gs[0] == MixedGraph(2)
    assert {(tuple(g.directed), tuple(g.bidirected)) for g in gs} == {
        ((), ()), (((1, 2),), ()), ((), ((1, 2),)), (((1, 2),), ((1, 2),))
    }


def test_enumerate_empty():
    assert len(list(enumerate_graphs(3, 0))) == 1


def test_enumerate_labeled_count():
    assert len(list(enumerate_graphs(3, 3))) == count_graphs(3, 3) == 1 + 6 + 15 + 20


def test_enumerate_deterministic_and_unique():
    a = [g.encode() for g in enumerate_graphs(3, 6)]
    assert a == [g.encode() for g in enumerate_graphs(3, 6)]
    assert len(set(a)) == len(a) == 64


def test_enumerate_isomorphism_classes_distinct():
    gs = list(enumerate_graphs(3, 6, up_to_isomorphism=True))
    keys = {canonical_form(g) for g in gs}
    assert len(keys) == len(gs)
    assert all(canonical_form(g) in keys for g in enumerate_graphs(3, 6))


def test_enumerate_cap():
    with pytest.raises(BudgetExceeded):
        list(enumerate_graphs(4, 6, cap=100))


def test_random_graph_extremes():
    assert random_graph(5, 0, 1).n_edges == 0
    g = random_graph(3, 1, 1)
    assert g.directed == {(1, 2), (1, 3), (2, 3)}
    assert g.bidirected == {(1, 2), (1, 3), (2, 3)}


def test_random_graph_reproducible():
    assert random_graph(10, "1/5", 7) == random_graph(10, "1/5", 7)


def test_random_graph_mean_edges():
    n = 1000
    counts = [len(random_graph(10, "1/5", s).directed) for s in range(n)]
    mean = sum(counts) / n
    se = math.sqrt(45 * 0.2 * 0.8 / n)
    assert abs(mean - 9) < 3 * se


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 7), st.integers(0, 10_000))
def test_random_graphs_valid_and_trek_weights_bounded(p, seed):
    g = random_graph(p, "1/2", seed)
    validate(g)
    tw = trek_weights(g)
    # the longest trek has at most two legs of length p - 1 plus the top
    assert 1 <= tw.w_trek <= 2 * (p - 1) + 1
    comps = tian_decompose(g)
    assert sorted(v for c in comps for v in c.internal) == list(g.nodes)
