import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from mfgnet import presets
from mfgnet.network import (Edge, MetricNetwork, edge_coordinate, load_network,
                            net_from_dict, net_to_dict, normalize_orientation,
                            original_coordinate, save_network, validate)


def test_star_is_valid_with_expected_jump_weights(star):
    rep = validate(star)
    assert rep.ok
    # gamma = p / mu at the center
    assert [star.gamma[(0, a)] for a in range(3)] == [0.5, 0.25, 0.25]


def test_probability_sum_violation_reported():
    net = presets.star_network(ps=(0.5, 0.25, 0.2))
    rep = validate(net)
    assert not rep.ok
    assert any("probabilities sum" in v for v in rep.violations)


def test_single_edge_with_boundary_probability_one_valid():
    net = presets.single_edge()
    assert net.p[(0, 0)] == 1.0 and net.p[(1, 0)] == 1.0
    assert validate(net).ok


def test_default_entry_probs_proportional_to_mu():
    net = MetricNetwork(
        ["c", "l1", "l2", "l3"],
        [Edge("e1", 0, 1, 1.0, 2.0), Edge("e2", 0, 2, 1.0, 1.0),
         Edge("e3", 0, 3, 1.0, 1.0)])
    assert np.isclose(net.p[(0, 0)], 0.5)
    assert np.isclose(net.p[(0, 1)], 0.25)
    # the proportional default makes gamma constant per vertex
    gammas = [net.gamma[(0, a)] for a in range(3)]
    assert np.allclose(gammas, gammas[0])


def test_parallel_edges_rejected():
    net = MetricNetwork(["a", "b"], [Edge("e1", 0, 1, 1.0, 1.0),
                                     Edge("e2", 0, 1, 2.0, 1.0)])
    rep = validate(net)
    assert any("parallel" in v for v in rep.violations)


def test_disconnected_rejected():
    net = MetricNetwork(["a", "b", "c", "d"],
                        [Edge("e1", 0, 1, 1.0, 1.0),
                         Edge("e2", 2, 3, 1.0, 1.0)])
    assert any("connected" in v for v in validate(net).violations)


def test_nonpositive_length_and_mu_rejected():
    net = MetricNetwork(["a", "b"], [Edge("e1", 0, 1, -1.0, 0.0)])
    rep = validate(net)
    assert any("length" in v for v in rep.violations)
    assert any("mu" in v for v in rep.violations)


# -- orientation normalization ---------------------------------------------------

def test_normalize_four_edge_network_adds_one_artificial_vertex():
    net = presets.four_edge_network()
    assert not net.is_oriented()
    norm = normalize_orientation(net)
    assert norm.n_vertices == 5 and norm.n_edges == 5
    assert norm.is_oriented()
    assert len(norm.artificial) == 1
    mid = next(iter(norm.artificial))
    inc = norm.incident(mid)
    assert len(inc) == 2
    assert all(norm.p[(mid, a)] == 0.5 for a in inc)
    # same diffusion on the two halves
    assert norm.edges[inc[0]].mu == norm.edges[inc[1]].mu
    assert validate(norm).ok


def test_normalize_oriented_star_is_identity(star):
    assert normalize_orientation(star) is star


def test_normalize_single_edge_is_identity():
    net = presets.single_edge()
    assert normalize_orientation(net) is net


def test_normalize_idempotent_on_cycle():
    net = presets.cycle_network(3)
    norm = normalize_orientation(net)
    assert norm.is_oriented()
    assert norm.n_vertices == 4 and norm.n_edges == 4
    assert normalize_orientation(norm) is norm


def test_split_halves_map_back_to_original_coordinates():
    net = presets.cycle_network(3)
    norm = normalize_orientation(net)
    halves = [a for a in range(norm.n_edges) if "/" in norm.edges[a].name]
    assert len(halves) == 2
    covered = []
    origs = set()
    for a in halves:
        orig, y0 = original_coordinate(norm, a, 0.0)
        orig2, y1 = original_coordinate(norm, a, norm.edges[a].length)
        assert orig == orig2
        origs.add(orig)
        covered.append(tuple(sorted((float(y0), float(y1)))))
    assert len(origs) == 1  # both halves cover the same original edge
    assert sorted(covered) == [(0.0, 0.5), (0.5, 1.0)]


@st.composite
def connected_graphs(draw):
    n = draw(st.integers(min_value=2, max_value=7))
    pairs = set()
    for i in range(1, n):
        j = draw(st.integers(min_value=0, max_value=i - 1))
        pairs.add((j, i))
    extras = draw(st.integers(min_value=0, max_value=3))
    for _ in range(extras):
        i = draw(st.integers(min_value=0, max_value=n - 1))
        j = draw(st.integers(min_value=0, max_value=n - 1))
        if i != j and (min(i, j), max(i, j)) not in pairs:
            pairs.add((min(i, j), max(i, j)))
    edges = [Edge(f"e{k}", i, j, 1.0, 1.0)
             for k, (i, j) in enumerate(sorted(pairs))]
    return MetricNetwork([f"v{k}" for k in range(n)], edges)


@settings(max_examples=40, deadline=None)
@given(connected_graphs())
def test_normalize_properties_on_random_graphs(net):
    norm = normalize_orientation(net)
    assert norm.is_oriented()
    # at every vertex the incidence sign is constant over incident edges
    for i in range(norm.n_vertices):
        signs = {norm.sign(i, a) for a in norm.incident(i)}
        assert len(signs) == 1
    assert normalize_orientation(norm) is norm
    assert validate(norm).ok
    # total length is preserved
    assert np.isclose(norm.total_length(), net.total_length())


# -- coordinates -------------------------------------------------------------------

def test_edge_coordinate_examples(star):
    assert edge_coordinate(star, 0, 0.5) == 0.5
    assert edge_coordinate(star, 0, ("vertex", 0)) == 0.0
    net = MetricNetwork(["a", "b"], [Edge("e", 0, 1, 2.0, 1.0)])
    assert edge_coordinate(net, 0, ("vertex", 1)) == 2.0


def test_edge_coordinate_rejects_points_off_the_edge(star):
    with pytest.raises(ValueError):
        edge_coordinate(star, 0, 1.5)
    with pytest.raises(ValueError):
        edge_coordinate(star, 0, ("vertex", 2))


def test_incidence_signs(star):
    assert star.sign(0, 0) == -1  # center is the tail
    assert star.sign(1, 0) == 1  # leaf is the head


# -- file format -------------------------------------------------------------------

def test_file_roundtrip(tmp_path, star):
    path = tmp_path / "net.json"
    save_network(star, path)
    loaded = load_network(path)
    assert loaded.vertex_names == star.vertex_names
    assert [(e.tail, e.head, e.length, e.mu) for e in loaded.edges] == \
        [(e.tail, e.head, e.length, e.mu) for e in star.edges]
    assert loaded.p == star.p


def test_duplicate_vertex_names_rejected():
    with pytest.raises(ValueError):
        net_from_dict({"vertices": [{"name": "a"}, {"name": "a"}],
                       "edges": []})


def test_partial_entry_probs_fall_back_to_default():
    d = net_to_dict(presets.star_network())
    d["entry_probs"] = [r for r in d["entry_probs"] if r["vertex"] == "c"]
    net = net_from_dict(d)
    assert net.p[(1, 0)] == 1.0
    assert net.p[(0, 0)] == 0.5
