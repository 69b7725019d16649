import itertools

import networkx as nx
import numpy as np
import pytest

from aopsens.algebra import builtin, close, expm1_phi, identity_phi, log1p_phi, power_phi
from aopsens.errors import InstanceError, ValidationError
from aopsens.problem import (
    Problem, equivalent_problem, generate_paths, generate_spanning_trees, load_problem,
    measure, random_problem, random_tied_problem, restricted_optima, simple_paths, solve,
    spanning_trees, validate,
)
from conftest import make_table1, make_table2


def test_validate_fixture(table1):
    assert validate(table1).valid


def test_validate_common_element():
    p = Problem(["x1", "x2", "x3"], {"x1": 1, "x2": 1, "x3": 1},
                [["x1", "x2"], ["x1", "x3"]], builtin("plus"))
    rep = validate(p)
    assert not rep.valid
    assert any("intersection" in v for v in rep.violations)
    with pytest.raises(ValidationError):
        rep.raise_if_invalid()


def test_validate_collects_everything():
    p = Problem(["x1", "x2", "x3"], {"x1": 0.0, "x2": -1.0},
                [["x1", "x2"]], builtin("product"))
    rep = validate(p)
    text = " | ".join(rep.violations)
    assert "at least two trajectories" in text
    assert "no cost" in text
    assert "uncovered" in text
    assert "x2" in text and "positive" in text


def test_validate_size_limit():
    X = [f"x{i}" for i in range(65)]
    p = Problem(X, {x: 1.0 for x in X}, [X[:40], X[30:]], builtin("plus"))
    assert any("64" in v for v in validate(p).violations)


def test_zero_cost_only_rejected_when_positivity_required(table1):
    p = table1.with_cost("x3", 0.0)
    assert validate(p).valid
    assert not validate(p, require_positive=True).valid


def test_measure(table1):
    assert measure(table1, {"x3", "x4"}) == 4
    assert measure(table1, set()) == 0.0
    mx = table1.with_operation(builtin("max"))
    assert mx.measure({"x3", "x4"}) == 3
    assert make_table1(builtin("product")).measure(set()) == 1.0
    with pytest.raises(KeyError):
        table1.measure({"y"})


def test_additivity():
    rng = np.random.default_rng(0)
    for op in (builtin("plus"), builtin("p_sum", 2), builtin("product"), builtin("max")):
        p = random_problem(rng, op)
        X = list(p.ground_set)
        a, b = set(X[::2]), set(X[1::2])
        assert close(p.measure(a | b), op(p.measure(a), p.measure(b)), 1e-7)


def test_solve_fixtures(table1, table2):
    o1 = solve(table1)
    assert o1.optimal_trajectories == (0,) and o1.optimal_value == 2 and o1.unique
    o2 = solve(table2)
    assert o2.optimal_trajectories == (0, 1) and o2.optimal_value == 6
    assert table2.objective(2) == 8


def test_solve_matches_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(30):
        p = random_problem(rng, builtin("plus"))
        vals = [sum(p.costs[y] for y in t) for t in p.trajectories]
        best = min(vals)
        expected = tuple(i for i, v in enumerate(vals) if abs(v - best) < 1e-9)
        assert solve(p).optimal_trajectories == expected


def test_restricted_optima(table1):
    assert restricted_optima(table1, "x1").f_minus == 4
    r4 = restricted_optima(table1, "x4")
    assert r4.f_sx_minus_x == 1 and r4.s_x == 1 and r4.f_plus == 4
    assert restricted_optima(table1, "x3").f_sx_minus_x == 3
    with pytest.raises(KeyError):
        restricted_optima(table1, "nope")


def test_restricted_optima_sx_attains_f_plus():
    rng = np.random.default_rng(11)
    for op in (builtin("plus"), builtin("product"), builtin("max")):
        for _ in range(10):
            p = random_problem(rng, op)
            for x in p.ground_set:
                r = restricted_optima(p, x)
                assert close(p.objective(r.s_x), r.f_plus, 1e-7)


@pytest.mark.parametrize("phi", [power_phi(2.0), expm1_phi(1.0), log1p_phi(1.0)], ids=str)
def test_equivalent_problem_fixtures(phi):
    for p in (make_table1(), make_table2()):
        q = equivalent_problem(p, phi)
        assert solve(q).optimal_trajectories == solve(p).optimal_trajectories


def test_equivalent_problem_identity(table2):
    q = equivalent_problem(table2, identity_phi())
    assert q.objectives() == table2.objectives()


def test_json_round_trip(tmp_path, table2):
    path = tmp_path / "p.json"
    path.write_text(table2.to_json())
    q = load_problem(path)
    assert q.to_dict() == table2.to_dict()
    with pytest.raises(ValidationError):
        Problem.from_dict({"ground_set": []})


# -- generators ------------------------------------------------------------------

def edge(i, a, b, w=1.0):
    return {"id": i, "from": a, "to": b, "weight": w}


DIAMOND = {
    "nodes": ["a", "b", "c", "d"],
    "edges": [edge("e1", "a", "b", 1), edge("e2", "b", "d", 2),
              edge("e3", "a", "c", 2), edge("e4", "c", "d", 2)],
    "source": "a", "target": "d",
}


def test_paths_diamond_and_parallel():
    p = generate_paths(DIAMOND, builtin("plus"))
    assert len(p.trajectories) == 2 and validate(p).valid
    par = {"nodes": ["a", "b"], "edges": [edge("e1", "a", "b"), edge("e2", "a", "b", 2)],
           "source": "a", "target": "b"}
    assert len(generate_paths(par, builtin("plus")).trajectories) == 2


def test_paths_bridge_rejected():
    g = dict(DIAMOND)
    g["edges"] = DIAMOND["edges"] + [edge("e5", "d", "t")]
    g = {**g, "nodes": DIAMOND["nodes"] + ["t"], "target": "t"}
    with pytest.raises(InstanceError):
        generate_paths(g, builtin("plus"))


def test_paths_single_path_rejected():
    g = {"nodes": ["a", "b"], "edges": [edge("e1", "a", "b")], "source": "a", "target": "b"}
    with pytest.raises(InstanceError):
        generate_paths(g, builtin("plus"))


def test_paths_match_networkx():
    rng = np.random.default_rng(2)
    for _ in range(25):
        n = int(rng.integers(3, 8))
        nodes = [f"n{i}" for i in range(n)]
        edges = [edge(f"e{k}", a, b) for k, (a, b) in enumerate(
            (a, b) for a, b in itertools.permutations(nodes, 2) if rng.random() < 0.35)]
        g = {"nodes": nodes, "edges": edges, "source": "n0", "target": nodes[-1]}
        ours = sorted(tuple(sorted(p)) for p in simple_paths(g))
        G = nx.MultiDiGraph()
        G.add_nodes_from(nodes)
        for e in edges:
            G.add_edge(e["from"], e["to"], key=e["id"])
        ref = sorted(tuple(sorted(k for _, _, k in path))
                     for path in nx.all_simple_edge_paths(G, "n0", nodes[-1]))
        assert ours == ref


def kirchhoff(nodes, edges):
    idx = {v: i for i, v in enumerate(nodes)}
    L = np.zeros((len(nodes), len(nodes)))
    for e in edges:
        a, b = idx[e["from"]], idx[e["to"]]
        L[a, a] += 1
        L[b, b] += 1
        L[a, b] -= 1
        L[b, a] -= 1
    return round(np.linalg.det(L[1:, 1:]))


def test_spanning_tree_counts():
    tri = {"nodes": list("abc"), "edges": [edge("e1", "a", "b"), edge("e2", "b", "c"),
                                           edge("e3", "a", "c")]}
    assert len(generate_spanning_trees(tri, builtin("plus")).trajectories) == 3
    cyc = {"nodes": list("abcd"), "edges": [edge("e1", "a", "b"), edge("e2", "b", "c"),
                                            edge("e3", "c", "d"), edge("e4", "d", "a")]}
    assert len(spanning_trees(cyc)) == kirchhoff(cyc["nodes"], cyc["edges"]) == 4


def test_spanning_trees_match_kirchhoff():
    rng = np.random.default_rng(4)
    checked = 0
    for _ in range(40):
        n = int(rng.integers(3, 7))
        nodes = [f"n{i}" for i in range(n)]
        edges = [edge(f"e{k}", a, b) for k, (a, b) in enumerate(
            (a, b) for a, b in itertools.combinations(nodes, 2) if rng.random() < 0.6)]
        G = nx.Graph()
        G.add_nodes_from(nodes)
        G.add_edges_from((e["from"], e["to"]) for e in edges)
        if not nx.is_connected(G):
            with pytest.raises(InstanceError):
                spanning_trees({"nodes": nodes, "edges": edges})
            continue
        trees = spanning_trees({"nodes": nodes, "edges": edges})
        assert len(trees) == kirchhoff(nodes, edges)
        assert len({frozenset(t) for t in trees}) == len(trees)
        checked += 1
    assert checked > 10


def test_tree_input_rejected():
    path = {"nodes": list("abc"), "edges": [edge("e1", "a", "b"), edge("e2", "b", "c")]}
    with pytest.raises(InstanceError):
        generate_spanning_trees(path, builtin("plus"))


def test_random_instances_valid_and_tied():
    rng = np.random.default_rng(9)
    for _ in range(20):
        p = random_problem(rng, builtin("plus"))
        assert validate(p).valid and 4 <= len(p.ground_set) <= 10
        assert 2 <= len(p.trajectories) <= 8
        assert all(0.5 <= c <= 10 for c in p.costs.values())
        q = random_tied_problem(rng, builtin("product"), cost_range=(1.0, 10.0))
        assert validate(q).valid and len(solve(q).optimal_trajectories) >= 2
