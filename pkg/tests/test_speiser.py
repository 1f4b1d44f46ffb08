import json

import pytest

from gridnet.errors import InvalidParameter
from gridnet.speiser import (
    LABELS,
    SpeiserGraph,
    anchor_face,
    build_gamma,
    build_grid,
    check_graph,
    check_labeling_cyclic,
    classify_faces,
    edge_multiplicity,
    euler_characteristic,
    label_faces,
    mark,
    region_connected,
    split_AB,
)


@pytest.fixture(scope="module")
def gamma6():
    return build_gamma(6)


def test_marking_parity():
    assert mark((0, 0)) == "o"
    assert mark((1, 0)) == "x"
    assert mark((-2, -1)) == "x"


@pytest.mark.parametrize("window", range(3, 11))
def test_graph_invariants(window):
    g = build_gamma(window)
    assert check_graph(g) == []
    assert euler_characteristic(g) == 1


def test_degree_and_bipartite(gamma6):
    for v in gamma6.vertices:
        if gamma6.interior(v):
            assert gamma6.degree(v) == 4
    for u, v, _ in gamma6.edges:
        assert mark(u) != mark(v)


def test_missing_lower_horizontal(gamma6):
    assert edge_multiplicity(gamma6, (0, -1), (1, -1)) == 0
    assert edge_multiplicity(gamma6, (-2, -1), (-1, -1)) == 1


def test_upper_vertex_simple(gamma6):
    assert gamma6.degree((3, 5)) == 4
    assert {edge_multiplicity(gamma6, (3, 5), w) for w in [(3, 6), (3, 4), (2, 5), (4, 5)]} == {1}


@pytest.mark.parametrize("m,expected", [(0, 2), (1, 3), (2, 3), (4, 3)])
def test_duplicated_edge_multiplicity(gamma6, m, expected):
    assert edge_multiplicity(gamma6, (m, -2), (m, -1)) == expected
    assert edge_multiplicity(gamma6, (m, -4), (m, -3)) == expected
    assert edge_multiplicity(gamma6, (m, -3), (m, -2)) == 1


def test_small_window_rejected():
    with pytest.raises(InvalidParameter):
        build_gamma(1)


def test_anchor_label_and_cyclic_order(gamma6):
    lab = label_faces(gamma6)
    assert lab[anchor_face(gamma6).key] == "e"
    assert check_labeling_cyclic(gamma6, lab) == []
    v = (1, 2)
    assert mark(v) == "x"
    seq = lab.at_vertex(gamma6, v)
    i = seq.index("0")
    assert [seq[(i + j) % 4] for j in range(4)] == list(LABELS)


def test_adjacent_faces_differ(gamma6):
    lab = label_faces(gamma6)
    fod = gamma6.face_of_dart
    for d in gamma6.darts:
        rev = (d[1], d[0], d[2])
        if rev in fod:
            assert lab[fod[d].key] != lab[fod[rev].key]


@pytest.mark.parametrize("start", [(0, 0), (2, 3), (-3, -2), (1, -4)])
def test_labeling_independent_of_start(gamma6, start):
    assert label_faces(gamma6, start).labels == label_faces(gamma6).labels


def test_face_kinds(gamma6):
    kinds = classify_faces(gamma6)
    values = list(kinds.values())
    assert ("algebraic", 2) in values
    assert ("algebraic", 4) in values
    logs = [f for f in gamma6.faces if f.kind == "logarithmic"]
    # one logarithmic face between consecutive columns m, m+1 in the lower half
    assert len(logs) == gamma6.window
    walls = sorted({min(d[0][0] for d in f.darts) for f in logs})
    assert walls == list(range(gamma6.window))


def test_split_ab(gamma6):
    part = split_AB(gamma6)
    assert part[(2, -3)] == "B"
    assert part[(0, -4)] == "Q"
    assert part[(-1, -1)] == "A"
    assert region_connected(gamma6, part, {"A"})
    assert region_connected(gamma6, part, {"B", "Q"})


def test_grid_is_all_squares():
    g = build_grid(5)
    assert check_graph(g) == []
    assert {k for k, n in classify_faces(g).values() if n == 4} == {"algebraic"}


def test_json_round_trip(gamma6):
    lab = label_faces(gamma6)
    data = json.loads(gamma6.to_json(lab))
    g2 = SpeiserGraph.from_dict(data)
    assert g2.edges == gamma6.edges
    assert data["labels"][anchor_face(gamma6).key] == "e"
    assert gamma6.to_dot(lab).startswith("graph speiser")
