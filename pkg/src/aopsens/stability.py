"""Single-cost sensitivity: stability intervals and tolerances.

For an optimal trajectory ``S*`` and an element ``x``, the cost ``C(x)`` may
be raised up to ``C+`` (``x`` in ``S*``) or lowered down to ``C-`` (``x`` not
in ``S*``) without ``S*`` losing optimality.  Closed-form endpoints are
computed from the restricted optima; :func:`oracle_endpoint` recovers the same
endpoints by bisecting directly on the optimality predicate of the perturbed
problem, as an independent check.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algebra import AOperation, Kind, close, leq
from .errors import ConsistencyError, NotStrictError, PreconditionError
from .problem import OptimalSet, Problem, restricted_optima, solve
from .subtraction import EPS_SOLVE, EPS_TEST, losub, upsub

_ORACLE_CAP = 2.0 ** 53
_ORACLE_FLOOR = 1e-300


class Membership(enum.Enum):
    IN_OPTIMAL = "in_optimal"
    OUTSIDE_OPTIMAL = "outside_optimal"


class Side(enum.Enum):
    UPPER = "upper"
    LOWER = "lower"


class Method(enum.Enum):
    THEOREM = "theorem"
    ORACLE = "oracle"


@dataclass(frozen=True)
class Perturbation:
    element: str
    gamma: float

    def check(self, op: AOperation) -> None:
        if op.kind is Kind.MULTIPLICATION and not self.gamma > 0:
            raise PreconditionError(f"gamma must be > 0 for {op.name}, got {self.gamma}")
        if not self.gamma >= 0:
            raise PreconditionError(f"gamma must be >= 0, got {self.gamma}")


@dataclass
class StabilityResult:
    element: str
    cost: float
    membership: Membership
    s_star: int
    c_plus: Optional[float] = None
    c_minus: Optional[float] = None
    upper_tolerance: Optional[float] = None
    lower_tolerance: Optional[float] = None
    extended_lower_tolerance: Optional[float] = None
    method: Method = Method.THEOREM
    bounds: dict = field(default_factory=dict)

    @property
    def in_optimal(self) -> bool:
        return self.membership is Membership.IN_OPTIMAL

    def row(self) -> dict:
        return {
            "element": self.element,
            "cost": self.cost,
            "in_optimal": self.in_optimal,
            "c_minus": self.c_minus,
            "c_plus": self.c_plus,
            "lower_tol": self.lower_tolerance,
            "upper_tol": self.upper_tolerance,
            "ext_lower_tol": self.extended_lower_tolerance,
            "method": self.method.value,
        }


def _agree(a: float, b: float, what: str, eps: float = EPS_TEST) -> None:
    if not close(a, b, eps):
        raise ConsistencyError(f"{what}: {a!r} != {b!r}")


def _ordered(values, names, eps: float = EPS_TEST) -> None:
    for (a, na), (b, nb) in zip(zip(values, names), zip(values[1:], names[1:])):
        if not leq(a, b, eps):
            raise ConsistencyError(f"expected {na} <= {nb}, got {a!r} > {b!r}")


def _optimum(p: Problem, s_star: int, optimum: Optional[OptimalSet]) -> OptimalSet:
    optimum = optimum or solve(p)
    if s_star not in optimum.optimal_trajectories:
        raise PreconditionError(f"trajectory {s_star} is not optimal")
    return optimum


def _require(p: Problem, s_star: int, x: str, inside: bool) -> None:
    if x not in p.costs:
        raise PreconditionError(f"unknown element {x!r}")
    if (x in p.trajectories[s_star]) != inside:
        where = "in" if inside else "outside"
        raise PreconditionError(f"element {x!r} must lie {where} trajectory {s_star}")


def _require_strict(op: AOperation) -> None:
    if not op.strict:
        raise NotStrictError(f"tolerances need a strict operation; {op.name} is not strict")


# -- perturbed objective ------------------------------------------------------

def perturbed_objective(p: Problem, pert: Perturbation, s: int, check: bool = True) -> float:
    """Objective of trajectory ``s`` after setting ``C(x) = gamma``."""
    pert.check(p.operation)
    traj = p.trajectories[s]
    x, gamma = pert.element, pert.gamma
    if x not in traj:
        return p.measure(traj)
    op = p.operation
    value = op(gamma, p.measure(traj - {x}))
    if check and op.name == "max":
        f, cx = p.measure(traj), p.costs[x]
        if gamma >= cx:
            alt = max(gamma, f)
        else:
            alt = max(f + gamma - cx, p.measure(traj - {x}))
        _agree(value, alt, "max perturbed objective, two forms")
    return value


# -- upper side -----------------------------------------------------------------

def upper_endpoint(
    p: Problem, s_star: int, x: str, optimum: Optional[OptimalSet] = None, check: bool = True
) -> StabilityResult:
    """``C+``: the largest cost of ``x`` in ``S*`` keeping ``S*`` optimal."""
    _require(p, s_star, x, inside=True)
    optimum = _optimum(p, s_star, optimum)
    op, cx = p.operation, p.costs[x]
    ro = restricted_optima(p, x, optimum)
    f_star, f_minus = optimum.optimal_value, ro.f_minus
    rest = p.measure(p.trajectories[s_star] - {x})

    c_plus = upsub(op, f_minus, rest)
    c1 = upsub(op, f_minus, upsub(op, f_star, cx))
    c2 = upsub(op, f_minus, losub(op, f_star, cx))
    bounds = {"c1_plus": c1, "c2_plus": c2}
    if check:
        if op.strict:
            direct = upsub(op, op(cx, f_minus), f_star)
            bounds["direct"] = direct
            for name, v in (("C1+", c1), ("C2+", c2), ("[C(x)+f-]-f*", direct)):
                _agree(c_plus, v, f"C+ vs {name} at {x}")
        elif op.name == "max":
            _agree(c_plus, f_minus, f"max C+ vs f- at {x}")
        _ordered([cx, c1, c_plus, c2], ["C(x)", "C1+", "C+", "C2+"])
    return StabilityResult(x, cx, Membership.IN_OPTIMAL, s_star, c_plus=c_plus, bounds=bounds)


def upper_tolerance(
    p: Problem, s_star: int, x: str, optimum: Optional[OptimalSet] = None, check: bool = True
) -> StabilityResult:
    """Upper tolerance ``u = C+ (-)^ C(x)``; strict operations only."""
    _require_strict(p.operation)
    res = upper_endpoint(p, s_star, x, optimum, check)
    op = p.operation
    u = upsub(op, res.c_plus, res.cost)
    if check:
        optimum = optimum or solve(p)
        ro = restricted_optima(p, x, optimum)
        _agree(u, upsub(op, ro.f_minus, optimum.optimal_value), f"u vs f- (-) f* at {x}")
        if not leq(op.neutral, u):
            raise ConsistencyError(f"upper tolerance {u} below neutral at {x}")
    res.upper_tolerance = u
    return res


def unrestricted_upper(
    p: Problem, s_star: int, x: str, gammas=None, optimum: Optional[OptimalSet] = None
) -> bool:
    """For ``x`` outside ``S*``, check that raising ``C(x)`` never hurts ``S*``."""
    _require(p, s_star, x, inside=False)
    _optimum(p, s_star, optimum)
    cx = p.costs[x]
    if gammas is None:
        gammas = [cx * k for k in (1.0, 1.5, 2.0, 10.0, 1e3, 1e6)] + [cx + 1.0]
    return all(s_star in solve(p.with_cost(x, g)).optimal_trajectories for g in gammas)


# -- lower side -----------------------------------------------------------------

def lower_endpoint(
    p: Problem, s_star: int, x: str, optimum: Optional[OptimalSet] = None, check: bool = True
) -> StabilityResult:
    """``C-``: the smallest cost of ``x`` outside ``S*`` keeping ``S*`` optimal."""
    _require(p, s_star, x, inside=False)
    optimum = _optimum(p, s_star, optimum)
    op, cx = p.operation, p.costs[x]
    ro = restricted_optima(p, x, optimum)
    f_star, f_plus, rest = optimum.optimal_value, ro.f_plus, ro.f_sx_minus_x

    c_minus = losub(op, f_star, rest)
    c1 = losub(op, f_star, upsub(op, f_plus, cx))
    c2 = losub(op, f_star, losub(op, f_plus, cx))
    bounds = {"c1_minus": c1, "c2_minus": c2}
    if check:
        if op.strict:
            direct = losub(op, op(cx, f_star), f_plus)
            bounds["direct"] = direct
            for name, v in (("C1-", c1), ("C2-", c2), ("[C(x)+f*]-f+", direct)):
                _agree(c_minus, v, f"C- vs {name} at {x}")
        elif op.name == "max":
            _agree(c_minus, f_star if rest < f_star else 0.0, f"max C- branches at {x}")
            _agree(c1, 0.0, f"max C1- at {x}")
            if close(cx, f_plus):
                _agree(c2, f_star, f"max C2- at {x}")
            else:
                _agree(c2, 0.0, f"max C2- at {x}")
        _ordered([c1, c_minus, c2, cx], ["C1-", "C-", "C2-", "C(x)"])
    return StabilityResult(x, cx, Membership.OUTSIDE_OPTIMAL, s_star, c_minus=c_minus, bounds=bounds)


def lower_tolerance(
    p: Problem, s_star: int, x: str, optimum: Optional[OptimalSet] = None, check: bool = True
) -> StabilityResult:
    """Lower tolerance ``l = C(x) (-)^ C-`` and its extension ``f+ (-)^ f*``."""
    _require_strict(p.operation)
    optimum = optimum or solve(p)
    res = lower_endpoint(p, s_star, x, optimum, check)
    op, cx = p.operation, res.cost
    ro = restricted_optima(p, x, optimum)
    f_star = optimum.optimal_value
    ell = upsub(op, cx, res.c_minus)
    ext = upsub(op, ro.f_plus, f_star)
    if check:
        if op.kind is Kind.ADDITION:
            expected = ext if leq(ro.f_sx_minus_x, f_star) else cx
            _agree(ell, expected, f"l two-branch formula at {x}")
        else:
            _agree(ell, ext, f"l vs extended l at {x}")
        _ordered([op.neutral, ell, ext], ["e", "l", "extended l"])
    res.lower_tolerance = ell
    res.extended_lower_tolerance = ext
    return res


def extended_lower_tolerance(p: Problem, s_star: int, x: str, optimum: Optional[OptimalSet] = None) -> float:
    _require(p, s_star, x, inside=False)
    optimum = _optimum(p, s_star, optimum)
    return upsub(p.operation, restricted_optima(p, x, optimum).f_plus, optimum.optimal_value)


@dataclass(frozen=True)
class LowerGuarantee:
    guaranteed: bool
    condition: Optional[str]
    holds: bool


def max_lower_condition(p: Problem, s_star: int, x: str, optimum: Optional[OptimalSet] = None) -> Optional[str]:
    """Which sufficient condition for an unrestricted decrease of ``C(x)`` under
    max holds, if any (``"i"`` ... ``"iv"``)."""
    optimum = optimum or solve(p)
    f_star, cx = optimum.optimal_value, p.costs[x]
    rest = restricted_optima(p, x, optimum).f_sx_minus_x
    if cx < f_star and not close(cx, f_star):
        return "i"
    at_top = close(cx, f_star)
    if at_top and optimum.unique:
        return "ii"
    if at_top and leq(f_star, rest):
        return "iii"
    if leq(f_star, rest):
        return "iv"
    return None


def unrestricted_lower(
    p: Problem, s_star: int, x: str, gammas=None, optimum: Optional[OptimalSet] = None
) -> LowerGuarantee:
    """For ``x`` in ``S*``: is every decrease of ``C(x)`` harmless to ``S*``?

    ``guaranteed`` reports whether a sufficient condition applies (strictness,
    or one of the max conditions); ``holds`` is the outcome of re-solving the
    perturbed problem on a grid of smaller costs.
    """
    _require(p, s_star, x, inside=True)
    optimum = _optimum(p, s_star, optimum)
    op, cx = p.operation, p.costs[x]
    if op.strict:
        condition = "strict"
    elif op.name == "max":
        condition = max_lower_condition(p, s_star, x, optimum)
    else:
        condition = None
    if gammas is None:
        gammas = [cx * k for k in (1.0, 0.75, 0.5, 0.25, 0.1, 0.01, 1e-3)]
        if op.kind is Kind.ADDITION:
            gammas.append(0.0)
    holds = all(s_star in solve(p.with_cost(x, g)).optimal_trajectories for g in gammas)
    return LowerGuarantee(condition is not None, condition, holds)


# -- definition-level oracle ---------------------------------------------------

def _le(a: float, b: float) -> bool:
    return a <= b + 4.0 * math.ulp(max(abs(a), abs(b)))


def _bisect(pred, lo: float, hi: float, eps: float) -> tuple:
    # pred(lo) and not pred(hi)
    for _ in range(400):
        if hi - lo <= eps * max(1.0, abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def oracle_endpoint(
    p: Problem, s_star: int, x: str, side: Side, optimum: Optional[OptimalSet] = None,
    eps: float = EPS_SOLVE,
) -> float:
    """Stability endpoint recovered from the optimality predicate alone.

    Each candidate ``gamma`` is judged by re-folding the perturbed costs over
    the relevant trajectories.  Returns ``inf`` when the upper predicate never
    fails and ``0.0`` when the lower predicate holds down to the domain floor.
    """
    side = Side(side)
    _require(p, s_star, x, inside=side is Side.UPPER)
    _optimum(p, s_star, optimum)
    op, cx = p.operation, p.costs[x]
    star = p.trajectories[s_star]

    if side is Side.UPPER:
        rivals = [p.trajectories[i] for i in p.excluding(x)]

        def pred(g):
            q = p.with_cost(x, g)
            return _le(q.measure(star), min(q.measure(s) for s in rivals))

        lo = cx
        if not pred(lo):
            return cx
        hi = max(2.0 * cx, 1.0)
        while pred(hi):
            if hi >= _ORACLE_CAP:
                return math.inf
            lo, hi = hi, 2.0 * hi
        return _bisect(pred, lo, hi, eps)[0]

    rivals = [p.trajectories[i] for i in p.containing(x)]
    f_star = p.measure(star)

    def pred(g):
        q = p.with_cost(x, g)
        return _le(f_star, min(q.measure(s) for s in rivals))

    hi = cx
    if op.kind is Kind.ADDITION:
        if pred(0.0):
            return 0.0
        lo = 0.0
    else:
        lo = cx
        while pred(lo):
            if lo <= _ORACLE_FLOOR:
                return 0.0
            hi, lo = lo, 0.5 * lo
    # bisect on the complement so the feasible edge ends up in hi
    lo, hi = _bisect(lambda g: not pred(g), lo, hi, eps)
    return hi


# -- sampling checks -------------------------------------------------------------

@dataclass
class IntervalCheck:
    element: str
    side: Side
    interval: tuple
    gammas: list
    failures: list

    @property
    def passed(self) -> bool:
        return not self.failures


def interval_stability(
    p: Problem, s_star: int, x: str, n: int = 20, optimum: Optional[OptimalSet] = None
) -> IntervalCheck:
    """Re-solve the perturbed problem at ``n`` evenly spaced costs across the
    stability interval of ``x`` (both endpoints included)."""
    optimum = optimum or solve(p)
    cx = p.costs[x]
    if x in p.trajectories[s_star]:
        side = Side.UPPER
        lo, hi = cx, upper_endpoint(p, s_star, x, optimum).c_plus
    else:
        side = Side.LOWER
        lo, hi = lower_endpoint(p, s_star, x, optimum).c_minus, cx
    gammas = sorted(set(np.linspace(lo, hi, n).tolist()) | {lo, hi})
    if p.operation.kind is Kind.MULTIPLICATION:
        gammas = [g for g in gammas if g > 0]
    failures = [g for g in gammas
                if s_star not in solve(p.with_cost(x, g)).optimal_trajectories]
    return IntervalCheck(x, side, (lo, hi), gammas, failures)


def analyze(p: Problem, s_star: Optional[int] = None, tolerances: bool = True) -> list:
    """Per-element stability results for ``S*`` (default: lowest-index optimum).

    With ``tolerances`` the operation must be strict; otherwise only the
    interval endpoints are reported.
    """
    optimum = solve(p)
    if s_star is None:
        s_star = optimum.optimal_trajectories[0]
    if tolerances:
        _require_strict(p.operation)
    rows = []
    for x in p.ground_set:
        if x in p.trajectories[s_star]:
            fn = upper_tolerance if tolerances else upper_endpoint
        else:
            fn = lower_tolerance if tolerances else lower_endpoint
        rows.append(fn(p, s_star, x, optimum))
    return rows
