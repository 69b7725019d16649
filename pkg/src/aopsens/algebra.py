"""A-operations: generalized addition and multiplication on the nonnegative reals.

An A-operation is a continuous, associative, commutative, nondecreasing
binary aggregation.  Two conventions are supported:

* ``Kind.ADDITION`` on ``[0, inf)`` with neutral element 0 (``0 (+) v = v``);
* ``Kind.MULTIPLICATION`` on ``(0, inf)`` with a neutral element ``e`` and
  ``0 (+) v = 0``.

The built-in catalog covers ten operations (``plus`` ... ``log1p_product``);
:func:`generate` produces equivalent operations from a phi-function.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Iterable, Optional, Sequence

from .errors import AopsensError

EPS_NUM = 1e-9

Cost = float
BinaryOp = Callable[[float, float], float]


def close(a: float, b: float, eps: float = EPS_NUM) -> bool:
    """Combined absolute/relative equality test used throughout the library."""
    if a == b:
        return True
    return abs(a - b) <= eps * max(1.0, abs(a), abs(b))


def leq(a: float, b: float, eps: float = EPS_NUM) -> bool:
    """``a <= b`` up to :func:`close`."""
    return a <= b or close(a, b, eps)


class Kind(enum.Enum):
    ADDITION = "addition"
    MULTIPLICATION = "multiplication"


@dataclass(frozen=True)
class AOperation:
    """An immutable A-operation.

    ``upper`` and ``lower`` are optional closed forms of the upper and lower
    subtractions, each called as ``f(w, v)`` on the respective domain.  When
    absent, :mod:`aopsens.subtraction` falls back to bisection.
    """

    name: str
    kind: Kind
    strict: bool
    neutral: float
    apply: BinaryOp = field(repr=False, compare=False)
    p: Optional[float] = None
    upper: Optional[BinaryOp] = field(default=None, repr=False, compare=False)
    lower: Optional[BinaryOp] = field(default=None, repr=False, compare=False)

    def __call__(self, u: float, v: float) -> float:
        return self.apply(u, v)

    @property
    def has_closed_forms(self) -> bool:
        return self.upper is not None and self.lower is not None

    def spec(self) -> dict:
        """JSON-ready operation spec, as used in problem files."""
        out = {"kind": self.name}
        if self.p is not None:
            out["p"] = self.p
        return out


@dataclass(frozen=True)
class PhiFunction:
    """A continuous strictly increasing bijection of [0, inf) fixing 0."""

    forward: Callable[[float], float] = field(compare=False)
    inverse: Callable[[float], float] = field(compare=False)
    name: str = "phi"

    def __call__(self, u: float) -> float:
        return self.forward(u)

    def then(self, outer: "PhiFunction") -> "PhiFunction":
        """The composite ``u -> outer(self(u))``."""
        f, g = self.forward, outer.forward
        fi, gi = self.inverse, outer.inverse
        return PhiFunction(
            forward=lambda u: g(f(u)),
            inverse=lambda u: fi(gi(u)),
            name=f"{outer.name}.{self.name}",
        )


# ---------------------------------------------------------------------------
# numerically careful helpers for the exp/log based operations

def _log_expm1(a: float) -> float:
    """log(e^a - 1) for a > 0 without overflow."""
    if a > 1.0:
        return a + math.log1p(-math.exp(-a))
    return math.log(math.expm1(a))


def _log1p_exp(a: float) -> float:
    """log(1 + e^a) for any real a."""
    if a > 0.0:
        return a + math.log1p(math.exp(-a))
    return math.log1p(math.exp(a))


def _safe_expm1(a: float) -> float:
    try:
        return math.expm1(a)
    except OverflowError:
        return math.inf


def _check_p(name: str, p: Optional[float]) -> float:
    if p is None:
        raise AopsensError(f"operation {name!r} requires a parameter p")
    p = float(p)
    if not p > 0 or not math.isfinite(p):
        raise AopsensError(f"operation {name!r} requires p > 0, got {p}")
    return p


# ---------------------------------------------------------------------------
# catalog

def _plus() -> AOperation:
    return AOperation(
        "plus", Kind.ADDITION, True, 0.0, lambda u, v: u + v,
        upper=lambda w, v: max(w - v, 0.0),
        lower=lambda w, v: max(w - v, 0.0),
    )


def _p_sum(p: float) -> AOperation:
    ip = 1.0 / p

    def apply(u, v):
        if u == 0.0:
            return v
        if v == 0.0:
            return u
        m = max(u, v)
        # scale by the larger argument so u**p cannot overflow
        return m * ((u / m) ** p + (v / m) ** p) ** ip

    def sub(w, v):
        if v >= w:
            return 0.0
        return w * max(1.0 - (v / w) ** p, 0.0) ** ip

    return AOperation("p_sum", Kind.ADDITION, True, 0.0, apply, p, sub, sub)


def _max() -> AOperation:
    return AOperation(
        "max", Kind.ADDITION, False, 0.0, lambda u, v: max(u, v),
        upper=lambda w, v: w,
        lower=lambda w, v: w if v < w else 0.0,
    )


def _log_exp_sum(p: float) -> AOperation:
    def apply(u, v):
        a, b = p * max(u, v), p * min(u, v)
        if a > 30.0:
            return (a + math.log1p(math.exp(b - a) - math.exp(-a))) / p
        return math.log1p(math.expm1(a) + math.expm1(b)) / p

    def sub(w, v):
        if v >= w:
            return 0.0
        a, b = p * w, p * v
        if a > 30.0:
            return (a + math.log1p(math.exp(-a) - math.exp(b - a))) / p
        return math.log1p(max(math.expm1(a) - math.expm1(b), 0.0)) / p

    return AOperation("log_exp_sum", Kind.ADDITION, True, 0.0, apply, p, sub, sub)


def _pq_sum(p: float) -> AOperation:
    def sub(w, v):
        if v >= w:
            return 0.0
        return (w - v) / (1.0 + p * v)

    return AOperation(
        "pq_sum", Kind.ADDITION, True, 0.0, lambda u, v: u + v + p * u * v, p, sub, sub
    )


def _clamp_g(a: float, b: float) -> float:
    # three-branch G(a, b) for 0 <= a <= b
    if b < 1.0:
        return b
    if a < 1.0:
        return 1.0
    return a


def _clamp_sum() -> AOperation:
    def upper(w, v):
        return w if w >= 1.0 else max(w - v, 0.0)

    def lower(w, v):
        if v >= w:
            return 0.0
        return w - v if w <= 1.0 else w

    return AOperation(
        "clamp_sum", Kind.ADDITION, False, 0.0,
        lambda u, v: _clamp_g(max(u, v), u + v),
        upper=upper, lower=lower,
    )


def _product() -> AOperation:
    div = lambda w, v: w / v
    return AOperation(
        "product", Kind.MULTIPLICATION, True, 1.0, lambda u, v: u * v,
        upper=div, lower=div,
    )


def _scaled_product(p: float) -> AOperation:
    def div(w, v):
        return w / (p * v)

    return AOperation(
        "scaled_product", Kind.MULTIPLICATION, True, 1.0 / p,
        lambda u, v: p * u * v, p, div, div,
    )


def _log_expm1_product(p: float) -> AOperation:
    def apply(u, v):
        if u <= 0.0 or v <= 0.0:
            return 0.0
        return _log1p_exp(_log_expm1(p * u) + _log_expm1(p * v)) / p

    def div(w, v):
        return _log1p_exp(_log_expm1(p * w) - _log_expm1(p * v)) / p

    return AOperation(
        "log_expm1_product", Kind.MULTIPLICATION, True, math.log(2.0) / p,
        apply, p, div, div,
    )


def _log1p_product(p: float) -> AOperation:
    def apply(u, v):
        return _safe_expm1(math.log1p(p * u) * math.log1p(p * v)) / p

    def div(w, v):
        return _safe_expm1(math.log1p(p * w) / math.log1p(p * v)) / p

    return AOperation(
        "log1p_product", Kind.MULTIPLICATION, True, (math.e - 1.0) / p,
        apply, p, div, div,
    )


_UNPARAMETERIZED = {
    "plus": _plus,
    "max": _max,
    "clamp_sum": _clamp_sum,
    "product": _product,
}
_PARAMETERIZED = {
    "p_sum": _p_sum,
    "log_exp_sum": _log_exp_sum,
    "pq_sum": _pq_sum,
    "scaled_product": _scaled_product,
    "log_expm1_product": _log_expm1_product,
    "log1p_product": _log1p_product,
}
OPERATION_NAMES = tuple(_UNPARAMETERIZED) + tuple(_PARAMETERIZED)


def builtin(name: str, p: Optional[float] = None) -> AOperation:
    """Return a catalog operation by name; ``p`` parameterizes the families."""
    if name in _UNPARAMETERIZED:
        return _UNPARAMETERIZED[name]()
    if name in _PARAMETERIZED:
        return _PARAMETERIZED[name](_check_p(name, p))
    raise AopsensError(
        f"unknown operation {name!r}; expected one of {', '.join(OPERATION_NAMES)}"
    )


def from_spec(spec: dict) -> AOperation:
    """Build an operation from ``{"kind": name, "p": number}``."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise AopsensError(f"bad operation spec: {spec!r}")
    return builtin(spec["kind"], spec.get("p"))


def fold(op: AOperation, values: Iterable[float]) -> float:
    """Left fold of ``op`` over ``values``; the empty fold is the neutral element."""
    it = iter(values)
    try:
        first = next(it)
    except StopIteration:
        return op.neutral
    return reduce(op.apply, it, first)


# ---------------------------------------------------------------------------
# phi-functions and generated operations

def identity_phi() -> PhiFunction:
    return PhiFunction(lambda u: u, lambda u: u, "id")


def power_phi(p: float) -> PhiFunction:
    return PhiFunction(lambda u: u ** p, lambda u: u ** (1.0 / p), f"u^{p:g}")


def expm1_phi(p: float = 1.0) -> PhiFunction:
    return PhiFunction(
        lambda u: _safe_expm1(p * u), lambda u: math.log1p(u) / p, f"expm1({p:g}u)"
    )


def log1p_phi(p: float = 1.0) -> PhiFunction:
    return PhiFunction(
        lambda u: math.log1p(p * u), lambda u: _safe_expm1(u) / p, f"log1p({p:g}u)"
    )


def linear_phi(p: float) -> PhiFunction:
    return PhiFunction(lambda u: p * u, lambda u: u / p, f"{p:g}u")


def generate(op: AOperation, phi: PhiFunction) -> AOperation:
    """The equivalent operation ``(u, v) -> phi^-1(op(phi(u), phi(v)))``.

    Closed-form subtractions are not carried over; subtraction on the result
    goes through bisection.
    """
    f, fi, a = phi.forward, phi.inverse, op.apply
    return AOperation(
        name=f"E[{phi.name}]({op.name})",
        kind=op.kind,
        strict=op.strict,
        neutral=fi(op.neutral),
        apply=lambda u, v: fi(a(f(u), f(v))),
        p=op.p,
    )


# ---------------------------------------------------------------------------
# axiom checks

@dataclass
class AxiomCheck:
    passed: bool
    worst: float = 0.0
    witness: Optional[tuple] = None


@dataclass
class AxiomReport:
    op_name: str
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def __getitem__(self, key: str) -> AxiomCheck:
        return self.checks[key]


def _rel_gap(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(1.0, abs(a), abs(b))


def check_axioms(op: AOperation, grid: Sequence[float], rtol: float = EPS_NUM) -> AxiomReport:
    """Sample-check the A-operation axioms of ``op`` on ``grid``.

    Never raises; each axiom gets a pass flag, the worst violation and a
    witness tuple.  ``strictness`` is checked for every operation, so a
    nonstrict operation reports it as failed.
    """
    grid = sorted(float(g) for g in grid)
    if op.kind is Kind.MULTIPLICATION:
        grid = [g for g in grid if g > 0.0]
    a = op.apply
    report = AxiomReport(op.name)

    def worst_of(name, items):
        worst, witness = 0.0, None
        for gap, wit in items:
            if gap > worst:
                worst, witness = gap, wit
        report.checks[name] = AxiomCheck(worst <= rtol, worst, witness)

    worst_of("commutativity", (
        (_rel_gap(a(u, v), a(v, u)), (u, v)) for u, v in itertools.combinations(grid, 2)
    ))
    worst_of("associativity", (
        (_rel_gap(a(u, a(v, w)), a(a(u, v), w)), (u, v, w))
        for u, v, w in itertools.product(grid, repeat=3)
    ))
    worst_of("monotonicity", (
        (max(a(u, w) - a(v, w), 0.0) / max(1.0, abs(a(v, w))), (u, v, w))
        for u, v in itertools.combinations(grid, 2) for w in grid if u < v
    ))
    worst_of("neutral", ((_rel_gap(a(op.neutral, v), v), (v,)) for v in grid))

    # strictness: report the smallest increase as "violation" when it is zero
    strict_ok, strict_wit = True, None
    for u, v in itertools.combinations(grid, 2):
        if u < v:
            for w in grid:
                if not a(u, w) < a(v, w):
                    strict_ok, strict_wit = False, (u, v, w)
                    break
        if not strict_ok:
            break
    report.checks["strictness"] = AxiomCheck(strict_ok, 0.0 if strict_ok else 1.0, strict_wit)

    if op.kind is Kind.ADDITION:
        worst_of("dominates_max", (
            (max(max(u, v) - a(u, v), 0.0) / max(1.0, u, v), (u, v))
            for u, v in itertools.product(grid, repeat=2)
        ))
    else:
        # growth far beyond the grid; A10-type operations grow only polynomially
        top = grid[-1] if grid else 1.0
        big = 1e12 * max(1.0, top)
        worst_of("unboundedness", (
            (0.0 if a(big, v) > 10.0 * max(a(top, v), v) else 1.0, (big, v))
            for v in grid
        ))
        tiny = 1e-12
        worst_of("zero_absorbing", (
            (0.0 if a(tiny, v) < 1e-4 * max(v, 1.0) else 1.0, (tiny, v)) for v in grid
        ))
    return report
