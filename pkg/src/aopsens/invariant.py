"""Tolerance function of a problem and what it reveals about the optimal set.

``T(x)`` is the upper tolerance of ``x`` when ``x`` lies on an optimal
trajectory and the inverse of its lower tolerance otherwise.  For strict
operations it does not depend on which optimal trajectory is used, and its
level sets around the neutral element recover the union and intersection of
all optimal trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .algebra import AOperation, Kind, close, leq
from .errors import ConsistencyError, NotStrictError
from .problem import OptimalSet, Problem, solve, validate
from .stability import lower_tolerance, upper_tolerance
from .subtraction import EPS_TEST, upsub


class InvarianceError(ConsistencyError):
    """Tolerance values differ between two optimal trajectories."""


class CharacterizationError(AssertionError):
    def __init__(self, message: str, element: Optional[str] = None):
        super().__init__(message)
        self.element = element


class MinInequalityError(AssertionError):
    pass


def inverse(op: AOperation, u: float) -> float:
    """``-u`` for addition kind, ``e (-)^ u`` for multiplication kind."""
    if op.kind is Kind.ADDITION:
        return 0.0 - u
    return upsub(op, op.neutral, u)


def is_neutral(op: AOperation, t: float, eps: float = EPS_TEST) -> bool:
    """Whether ``t`` lies in the band treated as equal to the neutral element."""
    if op.kind is Kind.ADDITION:
        return abs(t - op.neutral) <= eps
    return close(t, op.neutral, eps)


@dataclass
class ToleranceReport:
    values: dict
    extended_values: dict
    neutral: float
    union_opt: frozenset
    intersection_opt: frozenset
    unique: bool
    optimal_trajectories: tuple
    operation: AOperation = field(repr=False)
    per_optimum: dict = field(default_factory=dict, repr=False)

    def to_dict(self, order) -> dict:
        return {
            "tolerance_function": {x: self.values[x] for x in order},
            "extended": {x: self.extended_values[x] for x in order},
            "unique": self.unique,
            "union_opt": [x for x in order if x in self.union_opt],
            "intersection_opt": [x for x in order if x in self.intersection_opt],
        }


def _check_applicable(p: Problem) -> None:
    if not p.operation.strict:
        raise NotStrictError(
            f"{p.operation.name} is not strict; use stability-interval analysis instead"
        )
    validate(p, require_positive=True).raise_if_invalid()


def extract(p: Problem, s_star: int, optimum: Optional[OptimalSet] = None, check: bool = True) -> tuple:
    """``(T, T_bar)`` built from the single optimal trajectory ``s_star``."""
    optimum = optimum or solve(p)
    op = p.operation
    values, extended = {}, {}
    for x in p.ground_set:
        if x in p.trajectories[s_star]:
            u = upper_tolerance(p, s_star, x, optimum, check).upper_tolerance
            values[x] = extended[x] = u
        else:
            res = lower_tolerance(p, s_star, x, optimum, check)
            values[x] = inverse(op, res.lower_tolerance)
            extended[x] = inverse(op, res.extended_lower_tolerance)
    return values, extended


def tolerance_function(p: Problem, verify: bool = False, check: bool = True) -> ToleranceReport:
    """Tolerance function from the lowest-index optimal trajectory.

    With ``verify`` every other optimal trajectory is used as well and all
    results must agree elementwise (raises :class:`InvarianceError`).
    """
    _check_applicable(p)
    optimum = solve(p)
    opt = optimum.optimal_trajectories
    first = opt[0]
    values, extended = extract(p, first, optimum, check)
    per = {first: (values, extended)}
    if verify:
        for s in opt[1:]:
            v2, e2 = extract(p, s, optimum, check)
            per[s] = (v2, e2)
            for x in p.ground_set:
                if not close(values[x], v2[x], EPS_TEST):
                    raise InvarianceError(
                        f"T({x}) is {values[x]!r} from trajectory {first} but {v2[x]!r} from {s}"
                    )
                if not close(extended[x], e2[x], EPS_TEST):
                    raise InvarianceError(
                        f"extended T({x}) is {extended[x]!r} from trajectory {first} "
                        f"but {e2[x]!r} from {s}"
                    )
    union = frozenset().union(*(p.trajectories[i] for i in opt))
    inter = frozenset(p.trajectories[opt[0]]).intersection(*(p.trajectories[i] for i in opt[1:]))
    return ToleranceReport(
        values, extended, p.operation.neutral, union, inter, optimum.unique, opt, p.operation, per
    )


def lemma_cases(p: Problem, optimum: Optional[OptimalSet] = None) -> list:
    """Check how tolerances taken at two different optima relate.

    For each ordered pair of optimal trajectories ``(S1, S2)``: elements in both
    have equal upper tolerances, elements in neither have equal lower
    tolerances, and elements of ``S1 \\ S2`` have both tolerances neutral.
    Returns the list of violations (empty when all hold).
    """
    optimum = optimum or solve(p)
    op = p.operation
    opt = optimum.optimal_trajectories
    bad = []
    for s1 in opt:
        for s2 in opt:
            if s1 == s2:
                continue
            t1, t2 = p.trajectories[s1], p.trajectories[s2]
            for x in p.ground_set:
                if x in t1 and x in t2:
                    a = upper_tolerance(p, s1, x, optimum).upper_tolerance
                    b = upper_tolerance(p, s2, x, optimum).upper_tolerance
                    if not close(a, b, EPS_TEST):
                        bad.append(("a", s1, s2, x, a, b))
                elif x not in t1 and x not in t2:
                    a = lower_tolerance(p, s1, x, optimum).lower_tolerance
                    b = lower_tolerance(p, s2, x, optimum).lower_tolerance
                    if not close(a, b, EPS_TEST):
                        bad.append(("b", s1, s2, x, a, b))
                elif x in t1:
                    a = upper_tolerance(p, s1, x, optimum).upper_tolerance
                    b = lower_tolerance(p, s2, x, optimum).lower_tolerance
                    if not (is_neutral(op, a) and is_neutral(op, b)):
                        bad.append(("c", s1, s2, x, a, b))
    return bad


@dataclass(frozen=True)
class Characterization:
    level_sets: dict
    expected: dict

    @property
    def holds(self) -> bool:
        return self.level_sets == self.expected


def level_sets(op: AOperation, values: dict) -> dict:
    """The five level sets of ``values`` relative to the neutral band."""
    eq = frozenset(x for x, t in values.items() if is_neutral(op, t))
    gt = frozenset(x for x, t in values.items() if x not in eq and t > op.neutral)
    lt = frozenset(x for x, t in values.items() if x not in eq and t < op.neutral)
    return {"eq": eq, "gt": gt, "ge": eq | gt, "lt": lt, "le": eq | lt}


def characterize(p: Problem, report: ToleranceReport) -> Characterization:
    """Compare the level sets of ``T`` with sets built from the enumerated optima.

    Raises :class:`CharacterizationError` naming the first offending element.
    """
    optimum = solve(p)
    opt = [p.trajectories[i] for i in optimum.optimal_trajectories]
    X = frozenset(p.ground_set)
    union = frozenset().union(*opt)
    inter = frozenset(opt[0]).intersection(*opt[1:])
    expected = {
        "eq": union - inter,
        "gt": inter,
        "ge": union,
        "lt": X - union,
        "le": X - inter,
    }
    got = level_sets(p.operation, report.values)
    for key in expected:
        diff = got[key] ^ expected[key]
        if diff:
            x = sorted(diff, key=p.ground_set.index)[0]
            raise CharacterizationError(
                f"level set {key!r} mismatch at {x} (T = {report.values[x]!r})", x
            )
    return Characterization(got, expected)


def uniqueness(report: ToleranceReport) -> bool:
    """True iff no value of ``T`` is neutral; checked against the enumeration."""
    verdict = not any(is_neutral(report.operation, t) for t in report.values.values())
    if verdict != (len(report.optimal_trajectories) == 1):
        raise CharacterizationError(
            f"uniqueness verdict {verdict} but {len(report.optimal_trajectories)} optima"
        )
    return verdict


def covering(p: Problem, y) -> list:
    """Indices of trajectories strictly containing ``y``."""
    y = frozenset(y)
    return [i for i, s in enumerate(p.trajectories) if y < s]


def nonembedded(p: Problem) -> bool:
    return all(not covering(p, s) for s in p.trajectories)


@dataclass
class MinInequalityReport:
    applicable: bool
    reason: Optional[str] = None
    min_inv_t: float = math.nan
    min_inv_t_ext: float = math.nan
    min_t_opt: float = math.nan
    min_inv_t_ext_uncovered: float = math.nan
    uncovered: tuple = ()
    nonembedded: bool = False
    checks: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.applicable and all(self.checks.values())

    def to_dict(self) -> dict:
        def num(v):
            return None if v is None or (isinstance(v, float) and not math.isfinite(v)) else v

        return {
            "applicable": self.applicable,
            "reason": self.reason,
            "min_inverse_T_outside": num(self.min_inv_t),
            "min_inverse_extended_outside": num(self.min_inv_t_ext),
            "min_T_optimal": num(self.min_t_opt),
            "min_inverse_extended_uncovered": num(self.min_inv_t_ext_uncovered),
            "uncovered": list(self.uncovered),
            "nonembedded": self.nonembedded,
            "checks": dict(self.checks),
        }


def min_inequalities(p: Problem, report: ToleranceReport, strict: bool = True) -> MinInequalityReport:
    """Compare the smallest tolerances inside and outside a unique optimum.

    Precondition failures are reported with ``applicable=False``.  With
    ``strict`` a failed inequality raises :class:`MinInequalityError`.
    """
    op = p.operation
    ne = nonembedded(p)
    if len(report.optimal_trajectories) != 1:
        return MinInequalityReport(False, "optimum is not unique", nonembedded=ne)
    if op.kind is Kind.ADDITION and any(c <= 0 for c in p.costs.values()):
        return MinInequalityReport(False, "costs must be positive", nonembedded=ne)
    if op.kind is Kind.MULTIPLICATION and any(
        not leq(op.neutral, c) for c in p.costs.values()
    ):
        return MinInequalityReport(
            False, "costs must be at least the neutral element", nonembedded=ne
        )

    s = report.optimal_trajectories[0]
    star = p.trajectories[s]
    outside = [x for x in p.ground_set if x not in star]
    covered = frozenset().union(*(p.trajectories[i] for i in covering(p, star)))
    uncovered = tuple(x for x in outside if x not in covered)

    def mn(xs):
        return min(xs, default=math.inf)

    inv_t = mn(inverse(op, report.values[x]) for x in outside)
    inv_ext = mn(inverse(op, report.extended_values[x]) for x in outside)
    t_opt = mn(report.values[x] for x in star)
    inv_ext_unc = mn(inverse(op, report.extended_values[x]) for x in uncovered)

    def le(a, b):
        return a <= b or (math.isfinite(a) and math.isfinite(b) and close(a, b, EPS_TEST))

    checks = {
        "inverse_T_le_inverse_extended": le(inv_t, inv_ext),
        "inverse_extended_le_T_optimal": le(inv_ext, t_opt),
        "T_optimal_le_inverse_extended_uncovered": le(t_opt, inv_ext_unc),
    }
    if ne:
        checks["nonembedded_equality"] = close(inv_ext, t_opt, EPS_TEST)
        if op.kind is Kind.MULTIPLICATION:
            checks["full_equality"] = close(inv_t, inv_ext, EPS_TEST) and close(inv_t, t_opt, EPS_TEST)
    out = MinInequalityReport(True, None, inv_t, inv_ext, t_opt, inv_ext_unc, uncovered, ne, checks)
    if strict and not all(checks.values()):
        failed = [k for k, v in checks.items() if not v]
        raise MinInequalityError(f"min-inequality checks failed: {failed} ({out.to_dict()})")
    return out
