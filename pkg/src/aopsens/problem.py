"""Discrete optimization problems over a ground set with an A-operation objective.

A problem is a ground set ``X``, a cost per element, a collection of
trajectories (nonempty subsets of ``X`` whose union is ``X`` and whose common
intersection is empty) and an A-operation.  The objective of a trajectory is
the fold of its element costs; the problem minimizes it by enumeration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .algebra import EPS_NUM, AOperation, Kind, PhiFunction, close, fold, from_spec, generate
from .errors import InstanceError, ValidationError

EPS_OPT = 1e-9
MAX_ELEMENTS = 64


@dataclass(frozen=True)
class Problem:
    ground_set: tuple
    costs: Mapping[str, float]
    trajectories: tuple
    operation: AOperation

    def __post_init__(self):
        object.__setattr__(self, "ground_set", tuple(self.ground_set))
        object.__setattr__(self, "costs", {k: float(v) for k, v in self.costs.items()})
        object.__setattr__(
            self, "trajectories", tuple(frozenset(t) for t in self.trajectories)
        )

    # -- evaluation ---------------------------------------------------------

    def measure(self, subset: Iterable[str]) -> float:
        """Operational measure: fold of costs over ``subset`` in ground-set order."""
        subset = set(subset)
        unknown = subset - set(self.costs)
        if unknown:
            raise KeyError(f"elements not in the ground set: {sorted(unknown)}")
        return fold(self.operation, (self.costs[y] for y in self.ground_set if y in subset))

    def objective(self, index: int) -> float:
        return self.measure(self.trajectories[index])

    def objectives(self) -> list:
        return [self.measure(t) for t in self.trajectories]

    def with_cost(self, x: str, gamma: float) -> "Problem":
        """The perturbed problem with ``C(x)`` replaced by ``gamma``."""
        if x not in self.costs:
            raise KeyError(x)
        costs = dict(self.costs)
        costs[x] = float(gamma)
        return Problem(self.ground_set, costs, self.trajectories, self.operation)

    def with_operation(self, op: AOperation) -> "Problem":
        return Problem(self.ground_set, self.costs, self.trajectories, op)

    def containing(self, x: str) -> list:
        return [i for i, t in enumerate(self.trajectories) if x in t]

    def excluding(self, x: str) -> list:
        return [i for i, t in enumerate(self.trajectories) if x not in t]

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        order = {y: k for k, y in enumerate(self.ground_set)}
        return {
            "operation": self.operation.spec(),
            "ground_set": list(self.ground_set),
            "costs": {y: self.costs[y] for y in self.ground_set},
            "trajectories": [sorted(t, key=order.__getitem__) for t in self.trajectories],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict, op: Optional[AOperation] = None) -> "Problem":
        try:
            operation = op if op is not None else from_spec(data["operation"])
            return cls(
                ground_set=[str(x) for x in data["ground_set"]],
                costs={str(k): float(v) for k, v in data["costs"].items()},
                trajectories=[[str(x) for x in t] for t in data["trajectories"]],
                operation=operation,
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValidationError([f"malformed problem data: {exc!r}"]) from exc


def measure(p: Problem, subset: Iterable[str]) -> float:
    """Module-level alias of :meth:`Problem.measure`."""
    return p.measure(subset)


def load_problem(path, op: Optional[AOperation] = None) -> Problem:
    with open(path) as fh:
        return Problem.from_dict(json.load(fh), op)


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def raise_if_invalid(self) -> None:
        if self.violations:
            raise ValidationError(self.violations)


def validate(p: Problem, require_positive: bool = False) -> ValidationReport:
    """Check the trajectory axioms and the cost domain; collect every violation.

    ``require_positive`` additionally demands ``C(x) > 0`` everywhere, as the
    tolerance-function analyses do.
    """
    out = []
    X = list(p.ground_set)
    Xs = set(X)
    if len(X) != len(Xs):
        out.append("ground set has duplicate elements")
    if len(X) < 2:
        out.append(f"ground set needs at least 2 elements, has {len(X)}")
    if len(X) > MAX_ELEMENTS:
        out.append(f"ground set exceeds the {MAX_ELEMENTS}-element limit")
    missing = Xs - set(p.costs)
    extra = set(p.costs) - Xs
    if missing:
        out.append(f"no cost for elements {sorted(missing)}")
    if extra:
        out.append(f"costs given for unknown elements {sorted(extra)}")
    S = p.trajectories
    if len(S) < 2:
        out.append(f"at least two trajectories are required, got {len(S)}")
    for i, t in enumerate(S):
        if not t:
            out.append(f"trajectory {i} is empty")
        if not t <= Xs:
            out.append(f"trajectory {i} has unknown elements {sorted(t - Xs)}")
    if len(set(S)) != len(S):
        out.append("duplicate trajectories")
    if S:
        union = frozenset().union(*S)
        inter = frozenset(S[0]).intersection(*S[1:])
        if union != Xs:
            out.append(f"union axiom violated: elements {sorted(Xs - union)} uncovered")
        if inter:
            out.append(f"intersection axiom violated: {sorted(inter)} lie on every trajectory")
    for y, c in p.costs.items():
        if not np.isfinite(c) or c < 0:
            out.append(f"cost of {y} must be a finite nonnegative number, got {c}")
        elif c == 0 and (p.operation.kind is Kind.MULTIPLICATION or require_positive):
            out.append(f"cost of {y} must be positive, got {c}")
    return ValidationReport(out)


@dataclass(frozen=True)
class OptimalSet:
    optimal_trajectories: tuple
    optimal_value: float

    @property
    def unique(self) -> bool:
        return len(self.optimal_trajectories) == 1


def solve(p: Problem) -> OptimalSet:
    """All trajectories attaining the minimum objective, by exhaustive evaluation."""
    values = p.objectives()
    best = min(values)
    opt = tuple(i for i, f in enumerate(values) if close(f, best, EPS_OPT))
    return OptimalSet(opt, best)


@dataclass(frozen=True)
class RestrictedOptima:
    f_minus: float
    f_plus: float
    s_x: int
    f_sx_minus_x: float


def restricted_optima(p: Problem, x: str, optimum: Optional[OptimalSet] = None) -> RestrictedOptima:
    """Minimum objective over trajectories avoiding / containing ``x``, plus the
    trajectory ``S_x`` minimizing the measure of ``S \\ {x}`` over those containing ``x``.

    Values tied with the optimal value (within ``EPS_OPT``) are snapped to it.
    """
    if x not in p.costs:
        raise KeyError(f"unknown element {x!r}")
    optimum = optimum or solve(p)
    values = p.objectives()
    without, with_ = p.excluding(x), p.containing(x)
    if not without or not with_:
        raise ValidationError([f"element {x!r} is on every or on no trajectory"])

    def snapped(v):
        return optimum.optimal_value if close(v, optimum.optimal_value, EPS_OPT) else v

    f_minus = snapped(min(values[i] for i in without))
    f_plus = snapped(min(values[i] for i in with_))
    rests = [(p.measure(p.trajectories[i] - {x}), i) for i in with_]
    f_rest, s_x = min(rests, key=lambda r: (r[0], r[1]))
    # keep ties with the lowest index
    s_x = min(i for f, i in rests if f == f_rest)
    return RestrictedOptima(f_minus, f_plus, s_x, snapped(f_rest))


def equivalent_problem(p: Problem, phi: PhiFunction) -> Problem:
    """The problem with operation ``E_phi(op)`` and costs ``phi^-1(C)``."""
    return Problem(
        p.ground_set,
        {y: phi.inverse(c) for y, c in p.costs.items()},
        p.trajectories,
        generate(p.operation, phi),
    )


# ---------------------------------------------------------------------------
# instance generators

def _edge_list(graph: dict):
    try:
        return [(str(e["id"]), str(e["from"]), str(e["to"]), float(e["weight"]))
                for e in graph["edges"]]
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"malformed graph: {exc!r}") from exc


def _finish(edges, trajectories, op: AOperation) -> Problem:
    used = set().union(*trajectories) if trajectories else set()
    ground = [e[0] for e in edges if e[0] in used]
    p = Problem(ground, {e[0]: e[3] for e in edges if e[0] in used}, trajectories, op)
    report = validate(p)
    if not report.valid:
        raise InstanceError("; ".join(report.violations))
    return p


def simple_paths(graph: dict) -> list:
    """Edge-id lists of all simple source->target paths of a directed graph (DFS)."""
    edges = _edge_list(graph)
    nodes = [str(n) for n in graph.get("nodes", [])]
    if len(nodes) > 12:
        raise InstanceError(f"path generation is limited to 12 nodes, got {len(nodes)}")
    out_edges = {}
    for eid, a, b, _ in edges:
        out_edges.setdefault(a, []).append((eid, b))
    source, target = str(graph["source"]), str(graph["target"])
    paths = []

    def dfs(node, visited, trail):
        if node == target:
            paths.append(list(trail))
            return
        for eid, nxt in out_edges.get(node, ()):
            if nxt not in visited:
                visited.add(nxt)
                trail.append(eid)
                dfs(nxt, visited, trail)
                trail.pop()
                visited.discard(nxt)

    dfs(source, {source}, [])
    return paths


def generate_paths(graph: dict, op: AOperation) -> Problem:
    """Problem whose trajectories are the edge sets of all simple source->target paths."""
    paths = simple_paths(graph)
    if len(paths) < 2:
        raise InstanceError(f"need at least two simple paths, found {len(paths)}")
    return _finish(_edge_list(graph), paths, op)


def spanning_trees(graph: dict) -> list:
    """Edge-id lists of all spanning trees, by include/exclude branching on edges."""
    edges = _edge_list(graph)
    nodes = sorted({str(n) for n in graph.get("nodes", [])}
                   | {e[1] for e in edges} | {e[2] for e in edges})
    if len(nodes) > 8:
        raise InstanceError(f"tree generation is limited to 8 nodes, got {len(nodes)}")
    index = {n: k for k, n in enumerate(nodes)}
    ends = [(index[a], index[b]) for _, a, b, _ in edges]
    n = len(nodes)
    trees = []

    def find(parent, a):
        while parent[a] != a:
            a = parent[a]
        return a

    def connectable(parent, k):
        # can the chosen forest plus edges k.. still span every node?
        par = list(parent)
        for a, b in ends[k:]:
            ra, rb = find(par, a), find(par, b)
            if ra != rb:
                par[ra] = rb
        return len({find(par, v) for v in range(n)}) == 1

    def branch(k, parent, chosen):
        if len(chosen) == n - 1:
            trees.append([edges[i][0] for i in chosen])
            return
        if k == len(ends) or not connectable(parent, k):
            return
        a, b = ends[k]
        ra, rb = find(parent, a), find(parent, b)
        if ra != rb:  # contract edge k
            par = list(parent)
            par[ra] = rb
            branch(k + 1, par, chosen + [k])
        branch(k + 1, parent, chosen)  # delete edge k

    if n == 0 or not connectable(list(range(n)), 0):
        raise InstanceError("graph is disconnected")
    branch(0, list(range(n)), [])
    return trees


def generate_spanning_trees(graph: dict, op: AOperation) -> Problem:
    """Problem whose trajectories are the edge sets of all spanning trees."""
    trees = spanning_trees(graph)
    if len(trees) < 2:
        raise InstanceError(f"need at least two spanning trees, found {len(trees)}")
    return _finish(_edge_list(graph), trees, op)


def random_problem(
    rng: np.random.Generator,
    op: AOperation,
    n_range: tuple = (4, 10),
    m_range: tuple = (2, 8),
    cost_range: tuple = (0.5, 10.0),
    decimals: int = 3,
) -> Problem:
    """Random valid instance: random subsets repaired to satisfy the trajectory axioms."""
    while True:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        m = int(rng.integers(m_range[0], m_range[1] + 1))
        X = [f"x{k + 1}" for k in range(n)]
        trajs = [set(y for y in X if rng.random() < 0.5) for _ in range(m)]
        for t in trajs:
            if not t:
                t.add(X[int(rng.integers(n))])
        for y in X:
            if not any(y in t for t in trajs):
                trajs[int(rng.integers(m))].add(y)
        universal = set(X).intersection(*trajs)
        for y in sorted(universal):
            candidates = [t for t in trajs if len(t) > 1]
            candidates[int(rng.integers(len(candidates)))].discard(y)
        lo, hi = cost_range
        costs = {y: round(float(rng.uniform(lo, hi)), decimals) for y in X}
        p = Problem(X, costs, [sorted(t, key=X.index) for t in trajs], op)
        if validate(p).valid:
            return p


def random_tied_problem(rng: np.random.Generator, op: AOperation, **kwargs) -> Problem:
    """Random instance with at least two optimal trajectories.

    Ties are forced by cost duplication: for a pair of trajectories with equally
    sized differences, the costs of one difference are copied onto the other.
    """
    while True:
        p = random_problem(rng, op, **kwargs)
        pairs = [
            (i, j) for i, j in combinations(range(len(p.trajectories)), 2)
            if len(p.trajectories[i] - p.trajectories[j])
            == len(p.trajectories[j] - p.trajectories[i]) > 0
        ]
        if not pairs:
            continue
        i, j = pairs[int(rng.integers(len(pairs)))]
        a = sorted(p.trajectories[i] - p.trajectories[j], key=p.ground_set.index)
        b = sorted(p.trajectories[j] - p.trajectories[i], key=p.ground_set.index)
        costs = dict(p.costs)
        for ya, yb in zip(a, b):
            costs[yb] = costs[ya]
        # make the pair cheap relative to everything else
        shared = p.trajectories[i] | p.trajectories[j]
        lo = kwargs.get("cost_range", (0.5, 10.0))[0]
        for y in shared:
            costs[y] = round(lo + 0.1 * (costs[y] - lo), 3)
        for ya, yb in zip(a, b):
            costs[yb] = costs[ya]
        q = Problem(p.ground_set, costs, p.trajectories, op)
        if len(solve(q).optimal_trajectories) >= 2:
            return q
