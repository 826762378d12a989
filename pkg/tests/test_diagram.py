import json

import numpy as np
import pytest

from intentsim.backends.types import ThoughtPair
from intentsim.clustering import Clustering
from intentsim.diagram import (
    EmergenceDiagram,
    EmergencePoint,
    WindowSpec,
    attribute_origin,
    build_diagram,
    emergent_diff,
    find_influenced,
    influence_from_points,
    render_diagram,
    window_partition,
)
from intentsim.embedding import HashingEmbedder
from intentsim.mining import IntentionRepository, ThoughtLog


def repo_from(entries):
    """entries: (agent_id, tick, text) triples, already ordered by record id."""
    log = ThoughtLog()
    emb = HashingEmbedder(dim=32, seed=0)
    repo = IntentionRepository()
    for agent, tick, text in entries:
        record = log.record_thoughts(agent, tick, "external", ThoughtPair(text, text))
        repo.append(record, emb.embed(text))
    return repo


def clustering_with(assignments, k=None):
    assignments = np.asarray(assignments)
    k = k if k is not None else int(assignments.max()) + 1
    return Clustering(
        k=k,
        centroids=np.zeros((k, 32)),
        assignments=assignments,
        objective=0.0,
        iterations_run=1,
    )


def assert_diagram_invariants(diagram, influence, points):
    for p in points:
        assert p.influenced_agent != p.origin_agent
        assert diagram.emergence_windows[p.cluster_id] <= p.window
    assert influence_from_points(points) == influence
    clusters_emerged = set()
    for _, cluster in diagram.cluster_nodes:
        assert cluster not in clusters_emerged, "cluster emerged twice"
        clusters_emerged.add(cluster)


# --- window_partition --------------------------------------------------------

def test_empty_repo_gives_empty_windows():
    spec = WindowSpec(window_ticks=100, n_windows=3)
    windows = window_partition(IntentionRepository(), clustering_with([], k=1), spec)
    assert windows == [{}, {}, {}]


def test_entry_lands_in_floor_window():
    repo = repo_from([(1, 1250, "a thought")])
    spec = WindowSpec(window_ticks=1200, n_windows=2)
    windows = window_partition(repo, clustering_with([0]), spec)
    assert windows[0] == {}
    assert windows[1] == {0: {1: 1250}}


def test_two_agents_group_into_one_cluster_entry():
    repo = repo_from([(1, 10, "alike"), (2, 30, "alike"), (1, 20, "alike")])
    spec = WindowSpec(window_ticks=100, n_windows=1)
    windows = window_partition(repo, clustering_with([0, 0, 0]), spec)
    assert windows[0] == {0: {1: 10, 2: 30}}


def test_zero_vector_entries_skipped_with_warning():
    repo = repo_from([(1, 10, "real"), (2, 20, "")])
    warnings = []
    spec = WindowSpec(window_ticks=100, n_windows=1)
    windows = window_partition(repo, clustering_with([0, -1], k=1), spec, warnings.append)
    assert windows[0] == {0: {1: 10}}
    assert len(warnings) == 1


# --- emergent_diff -----------------------------------------------------------

def test_first_window_everything_new():
    assert emergent_diff({"A", "B"}, set()) == {"A", "B"}


def test_set_difference_against_baseline():
    assert emergent_diff({"A", "C"}, {"A", "B"}) == {"C"}


def test_no_novelty_empty():
    assert emergent_diff({"A"}, {"A", "B", "C"}) == set()


# --- attribute_origin --------------------------------------------------------

def test_origin_singleton():
    windows = [{7: {3: 50}}]
    assert attribute_origin(7, windows) == (3, 50)


def test_origin_earliest_tick_wins():
    windows = [{0: {7: 100, 2: 90}}]
    assert attribute_origin(0, windows) == (2, 90)


def test_origin_tie_breaks_by_lowest_agent():
    windows = [{0: {7: 90, 2: 90}}]
    assert attribute_origin(0, windows) == (2, 90)


def test_origin_spans_windows():
    windows = [{}, {0: {5: 1500}}, {0: {1: 2500}}]
    assert attribute_origin(0, windows) == (5, 1500)


def test_origin_missing_cluster_is_error():
    with pytest.raises(ValueError):
        attribute_origin(9, [{}])


# --- find_influenced ---------------------------------------------------------

def test_only_origin_no_influence():
    windows = [{0: {1: 10}}, {}]
    assert find_influenced(0, 1, 10, 0, windows) == []


def test_same_window_later_tick_influenced():
    windows = [{0: {1: 90, 4: 300}}, {}]
    assert find_influenced(0, 1, 90, 0, windows) == [(4, 0)]


def test_window_after_horizon_included_two_after_excluded():
    windows = [{0: {1: 10}}, {0: {2: 1300}}, {0: {3: 2500}}]
    assert find_influenced(0, 1, 10, 0, windows) == [(2, 1)]


def test_same_tick_as_origin_not_influenced():
    windows = [{0: {1: 90, 2: 90}}, {}]
    assert find_influenced(0, 1, 90, 0, windows) == []


def test_last_window_uses_only_itself():
    windows = [{0: {1: 10, 2: 50}}]
    assert find_influenced(0, 1, 10, 0, windows) == [(2, 0)]


# --- build_diagram oracle fixture ---------------------------------------------

def algorithm_fixture():
    """Agent 1 originates a cluster at tick 10; agents 2 and 3 join at
    ticks 200 and 1300. Hand-walking the window loop with 1200-tick
    windows yields exactly two points: (X, 1, 2, w0) and (X, 1, 3, w1)."""
    repo = repo_from([(1, 10, "go to dense areas"),
                      (2, 200, "go to dense areas"),
                      (3, 1300, "go to dense areas")])
    clustering = clustering_with([0, 0, 0])
    spec = WindowSpec(window_ticks=1200, n_windows=2)
    return repo, clustering, spec


def test_algorithm_fixture_exact_points():
    repo, clustering, spec = algorithm_fixture()
    diagram, influence, points = build_diagram(repo, clustering, spec)
    assert points == [
        EmergencePoint(cluster_id=0, origin_agent=1, influenced_agent=2, window=0),
        EmergencePoint(cluster_id=0, origin_agent=1, influenced_agent=3, window=1),
    ]
    assert influence == {2: {0}, 3: {0}}
    assert diagram.origins[0] == (1, 10)
    assert diagram.emergence_windows[0] == 0
    assert_diagram_invariants(diagram, influence, points)


def test_single_agent_single_window():
    repo = repo_from([(1, 5, "lonely thought")])
    diagram, influence, points = build_diagram(
        repo, clustering_with([0]), WindowSpec(window_ticks=100, n_windows=1)
    )
    assert len(diagram.cluster_nodes) == 1
    assert points == []
    assert influence == {}
    assert_diagram_invariants(diagram, influence, points)


def test_empty_repo_empty_diagram():
    diagram, influence, points = build_diagram(
        IntentionRepository(), clustering_with([], k=1), WindowSpec(window_ticks=100, n_windows=2)
    )
    assert diagram.cluster_nodes == []
    assert points == []
    assert influence == {}


def test_cluster_emerges_once_even_if_it_reappears():
    repo = repo_from([
        (1, 10, "alike"),
        (2, 250, "alike"),   # window 2 after skipping window 1
    ])
    spec = WindowSpec(window_ticks=100, n_windows=3)
    diagram, influence, points = build_diagram(repo, clustering_with([0, 0]), spec)
    assert diagram.cluster_nodes == [(0, 0)]
    # Agent 2 joins outside the two-window horizon, so no influence point.
    assert points == []
    assert_diagram_invariants(diagram, influence, points)


# --- rendering ---------------------------------------------------------------

def test_empty_diagram_renders_valid_dot():
    diagram = EmergenceDiagram(window_ticks=100, n_windows=0)
    dot = render_diagram(diagram, "dot")
    assert dot.startswith("digraph")
    assert dot.rstrip().endswith("}")
    assert "->" not in dot


def test_fixture_dot_has_exactly_two_edges():
    repo, clustering, spec = algorithm_fixture()
    diagram, _, _ = build_diagram(repo, clustering, spec)
    dot = render_diagram(diagram, "dot")
    assert dot.count("->") == 2


def test_json_round_trip_equals_diagram():
    repo, clustering, spec = algorithm_fixture()
    diagram, _, _ = build_diagram(repo, clustering, spec, cluster_labels={0: "dense areas"})
    rendered = render_diagram(diagram, "json")
    parsed = EmergenceDiagram.from_json_dict(json.loads(rendered))
    assert parsed == diagram


def test_svg_renders_with_arrows():
    repo, clustering, spec = algorithm_fixture()
    diagram, _, _ = build_diagram(repo, clustering, spec)
    svg = render_diagram(diagram, "svg")
    assert svg.startswith("<svg")
    assert svg.count("<line") == 2
    assert "</svg>" in svg


def test_unknown_format_rejected():
    with pytest.raises(ValueError):
        render_diagram(EmergenceDiagram(window_ticks=1, n_windows=0), "pdf")


def test_diagram_schema_version_checked():
    with pytest.raises(ValueError):
        EmergenceDiagram.from_json_dict({"diagram_schema": 99})
