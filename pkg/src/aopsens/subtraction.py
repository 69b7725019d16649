"""Upper and lower subtractions of an A-operation.

``w (-)^ v = max{u : u (+) v <= w}`` is defined on a domain D; for addition
kind that is ``v <= w``, for multiplication kind every positive pair.
``w (-)v v = min{u : u (+) v >= w}`` is total.

Built-in operations use closed forms.  Operations without them (typically
the output of :func:`aopsens.algebra.generate`) are inverted by bisection
on the monotone predicates above.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

from .algebra import EPS_NUM, AOperation, Kind, close
from .errors import BracketError, DomainError

EPS_SOLVE = 1e-10
EPS_TEST = 1e-7

_BRACKET_CAP = 2.0 ** 64
_FLOOR_CAP = 1e-300
_MAX_ITER = 400


class Method(enum.Enum):
    CLOSED_FORM = "closed_form"
    BISECTION = "bisection"


@dataclass(frozen=True)
class SubtractionResult:
    value: float
    method: Method
    residual: float
    at_floor: bool = False


def _check_positive(op: AOperation, *xs: float) -> None:
    if op.kind is Kind.MULTIPLICATION and any(not x > 0.0 for x in xs):
        raise DomainError(f"{op.name}: multiplication-kind arguments must be > 0, got {xs}")
    if any(x < 0.0 or math.isnan(x) for x in xs):
        raise DomainError(f"{op.name}: arguments must be nonnegative, got {xs}")


def in_domain_upper(op: AOperation, w: float, v: float, eps: float = 0.0) -> bool:
    """Whether ``(w, v)`` lies in the domain of the upper subtraction.

    ``eps`` widens the addition-kind test ``v <= w`` by a combined tolerance.
    """
    _check_positive(op, w, v)
    if op.kind is Kind.MULTIPLICATION:
        return True
    if eps:
        return v <= w or close(v, w, eps)
    return v <= w


def _snap(op: AOperation, w: float, v: float) -> float:
    # Addition kind: treat v within EPS_NUM of w as equal so that w (-) v is
    # not polluted by rounding noise (p_sum would amplify it through the root).
    if op.kind is Kind.ADDITION and v != w and close(v, w, EPS_NUM):
        return w
    return v


def _upper_residual(op, u, w, v):
    return abs(op.apply(u, v) - w)


def _lower_residual(op, u, w, v):
    return max(0.0, w - op.apply(u, v))


def upper_sub(op: AOperation, w: float, v: float) -> SubtractionResult:
    """``max{u : u (+) v <= w}``; raises :class:`DomainError` off the domain."""
    if not in_domain_upper(op, w, v, EPS_NUM):
        raise DomainError(f"({w}, {v}) is outside the upper-subtraction domain of {op.name}")
    v = _snap(op, w, v)
    if op.upper is None:
        return bisect_upper(op, w, v)
    u = op.upper(w, v)
    return SubtractionResult(u, Method.CLOSED_FORM, _upper_residual(op, u, w, v))


def lower_sub(op: AOperation, w: float, v: float) -> SubtractionResult:
    """``min{u : u (+) v >= w}``."""
    _check_positive(op, w, v)
    v = _snap(op, w, v)
    if op.lower is None:
        return bisect_lower(op, w, v)
    u = op.lower(w, v)
    return SubtractionResult(u, Method.CLOSED_FORM, _lower_residual(op, u, w, v))


def upsub(op: AOperation, w: float, v: float) -> float:
    """Value of :func:`upper_sub`."""
    return upper_sub(op, w, v).value


def losub(op: AOperation, w: float, v: float) -> float:
    """Value of :func:`lower_sub`."""
    return lower_sub(op, w, v).value


def _bisect(pred, lo: float, hi: float, eps: float) -> tuple[float, float]:
    """Shrink ``[lo, hi]`` with ``pred(lo)`` true and ``pred(hi)`` false."""
    for _ in range(_MAX_ITER):
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


def _expand_up(pred, start: float) -> float:
    """Smallest doubling of ``start`` at which ``pred`` fails."""
    hi = start
    while pred(hi):
        if hi >= _BRACKET_CAP:
            raise BracketError(f"unbounded plateau: predicate still holds at {hi:g}")
        hi *= 2.0
    return hi


def _shrink_down(pred, start: float) -> tuple[float, bool]:
    """Halve ``start`` until ``pred`` holds; returns ``(value, hit_floor)``."""
    lo = start
    while not pred(lo):
        if lo <= _FLOOR_CAP:
            return lo, True
        lo *= 0.5
    return lo, False


def bisect_upper(op: AOperation, w: float, v: float, eps: float = EPS_SOLVE) -> SubtractionResult:
    """Largest ``u`` with ``u (+) v <= w`` by bracketing and bisection.

    Works for nonstrict operations too: the feasible set is an interval
    ``[floor, u_max]`` and bisection on the predicate converges to its right
    edge.
    """
    slack = 4.0 * math.ulp(w) if w > 0 else 0.0
    pred = lambda u: op.apply(u, v) <= w + slack

    if op.kind is Kind.ADDITION:
        lo = 0.0
        if not pred(lo):
            raise BracketError(f"no u >= 0 with u (+) {v} <= {w} in {op.name}")
    else:
        lo, hit = _shrink_down(pred, min(w, v, 1.0))
        if hit:
            raise BracketError(f"no u > 0 with u (+) {v} <= {w} in {op.name}")
    hi = _expand_up(pred, max(w, v, 1.0, 2.0 * lo))
    lo, hi = _bisect(pred, lo, hi, eps)
    return SubtractionResult(lo, Method.BISECTION, _upper_residual(op, lo, w, v))


def bisect_lower(op: AOperation, w: float, v: float, eps: float = EPS_SOLVE) -> SubtractionResult:
    """Smallest ``u`` with ``u (+) v >= w`` by bracketing and bisection."""
    slack = 4.0 * math.ulp(w) if w > 0 else 0.0
    pred = lambda u: op.apply(u, v) >= w - slack

    if op.kind is Kind.ADDITION:
        if pred(0.0):
            return SubtractionResult(0.0, Method.BISECTION, _lower_residual(op, 0.0, w, v))
        lo = 0.0
    else:
        lo, hit = _shrink_down(lambda u: not pred(u), min(w, v, 1.0))
        if hit:
            warnings.warn(
                f"{op.name}: lower subtraction floor reached at {lo:g}", RuntimeWarning
            )
            return SubtractionResult(lo, Method.BISECTION, _lower_residual(op, lo, w, v), True)
    hi = _expand_up(lambda u: not pred(u), max(w, v, 1.0, 2.0 * lo))
    # invert: bisect on "not pred" so lo stays infeasible and hi feasible
    lo, hi = _bisect(lambda u: not pred(u), lo, hi, eps)
    return SubtractionResult(hi, Method.BISECTION, _lower_residual(op, hi, w, v))
