"""Randomized property suite behind ``aopsens verify``.

Every property is checked on seeded random data and reports how many samples
passed, plus the first failing witness (serializable, so that the CLI can
write a reproducer file).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .algebra import (
    OPERATION_NAMES, AOperation, Kind, builtin, check_axioms, close, expm1_phi, generate, leq,
    log1p_phi, power_phi,
)
from .errors import AopsensError
from .invariant import (
    characterize, lemma_cases, min_inequalities, tolerance_function, uniqueness,
)
from .problem import (
    Problem, equivalent_problem, random_problem, random_tied_problem,
    restricted_optima, solve,
)
from .stability import (
    Side, interval_stability, lower_endpoint, oracle_endpoint, unrestricted_upper,
    upper_endpoint,
)
from .subtraction import EPS_TEST, in_domain_upper, losub, upsub

DEFAULT_P = {
    "p_sum": 2.0,
    "log_exp_sum": 1.0,
    "pq_sum": 1.0,
    "scaled_product": 2.0,
    "log_expm1_product": 1.0,
    "log1p_product": 1.0,
}

# families for the instance-level suites
STABILITY_FAMILIES = (("plus", None), ("p_sum", 2.0), ("product", None), ("max", None))
STRICT_FAMILIES = (("plus", None), ("p_sum", 2.0), ("product", None), ("log_exp_sum", 1.0))
MODULES = ("algebra", "subtraction", "problem", "stability", "invariant")

ORACLE_TOL = 1e-6


def default_op(name: str) -> AOperation:
    return builtin(name, DEFAULT_P.get(name))


def all_builtins() -> list:
    return [default_op(n) for n in OPERATION_NAMES]


@dataclass
class PropertyResult:
    module: str
    name: str
    passed: int = 0
    failed: int = 0
    witness: Optional[dict] = None
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def record(self, ok: bool, witness: Optional[Callable[[], dict]] = None) -> None:
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if self.witness is None and witness is not None:
                self.witness = witness()

    def to_dict(self) -> dict:
        return {
            "module": self.module,
            "property": self.name,
            "passed": self.passed,
            "failed": self.failed,
            "witness": self.witness,
        }


# ---------------------------------------------------------------------------
# subtraction lemmas

def sample_triples(op: AOperation, rng: np.random.Generator, n: int) -> np.ndarray:
    """Random ``(u, v, w)`` rows; about one row in ten repeats a value to hit
    the boundary ``v = w`` and friends."""
    if op.kind is Kind.ADDITION:
        t = rng.uniform(0.0, 10.0, size=(n, 3))
        t[rng.random(n) < 0.02, 0] = 0.0
    else:
        t = np.exp(rng.uniform(math.log(0.05), math.log(10.0), size=(n, 3)))
    tie = rng.random(n) < 0.1
    t[tie, 1] = t[tie, 2]
    tie = rng.random(n) < 0.05
    t[tie, 0] = t[tie, 1]
    return t


def subtraction_violations(op: AOperation, u: float, v: float, w: float, eps: float = EPS_TEST) -> list:
    """Names of the subtraction identities and inequalities failing at ``(u, v, w)``."""
    bad = []
    le = lambda a, b: leq(a, b, eps)
    eq = lambda a, b: close(a, b, eps)
    a = op.apply
    dom = lambda x, y: in_domain_upper(op, x, y)

    # domain description and the basic comparison of the two subtractions
    if op.kind is Kind.ADDITION:
        if dom(w, v) != (v <= w):
            bad.append("domain")
        if v >= w and losub(op, w, v) != 0.0:
            bad.append("lower_zero_above")
    elif not dom(w, v):
        bad.append("domain")
    if dom(w, v):
        up, lo = upsub(op, w, v), losub(op, w, v)
        if not le(lo, up):
            bad.append("lower_le_upper")
        if not eq(a(up, v), w):
            bad.append("upper_roundtrip")
        if op.strict and not eq(up, lo):
            bad.append("strict_upper_eq_lower")
    if not le(w, a(losub(op, w, v), v)):
        bad.append("lower_cover")
    wv = a(w, v)
    if not (le(losub(op, wv, v), w) and le(w, upsub(op, wv, v))):
        bad.append("sandwich")

    # monotone in the first argument, antitone in the second
    w1, w2 = sorted((u, w))
    if dom(w1, v):
        if not dom(w2, v) or not le(upsub(op, w1, v), upsub(op, w2, v)):
            bad.append("upper_monotone_first")
    if not le(losub(op, w1, v), losub(op, w2, v)):
        bad.append("lower_monotone_first")
    v1, v2 = sorted((u, v))
    if dom(w, v2):
        if not dom(w, v1) or not le(upsub(op, w, v2), upsub(op, w, v1)):
            bad.append("upper_antitone_second")
    if not le(losub(op, w, v2), losub(op, w, v1)):
        bad.append("lower_antitone_second")

    # composite inequalities
    wu = a(w, u)
    if dom(v, u):
        vu = upsub(op, v, u)
        if dom(w, vu):
            mid = upsub(op, w, vu)
            if not le(losub(op, wu, v), mid) or not le(mid, upsub(op, wu, v)):
                bad.append("composite_upper_upper")
        if not le(losub(op, wu, v), losub(op, w, vu)):
            bad.append("composite_lower_upper")
    vl = losub(op, v, u)
    if dom(w, vl):
        if not le(upsub(op, w, vl), upsub(op, wu, v)):
            bad.append("composite_upper_lower")
    if not le(losub(op, wu, a(vl, u)), losub(op, w, vl)):
        bad.append("composite_lower_lower")

    # translation
    uw, uv = a(u, w), a(u, v)
    if dom(w, v):
        t_up = upsub(op, uw, uv)
        if not le(upsub(op, w, v), t_up) or (op.strict and not eq(upsub(op, w, v), t_up)):
            bad.append("upper_translation")
    t_lo = losub(op, uw, uv)
    if not le(t_lo, losub(op, w, v)) or (op.strict and not eq(t_lo, losub(op, w, v))):
        bad.append("lower_translation")
    return bad


def nonstrict_witness(op: AOperation, triples) -> Optional[tuple]:
    """A domain pair where the two subtractions differ (expected only when
    ``op`` is not strict)."""
    for u, v, w in triples:
        for x, y in ((w, v), (w, w), (v, v), (w, u)):
            if in_domain_upper(op, x, y) and not close(upsub(op, x, y), losub(op, x, y), EPS_TEST):
                return (x, y)
    return None


def max_witnesses(w: float = 2.0, v: float = 3.0, small: float = 1.0, big: float = 5.0) -> dict:
    """Literal max examples where the general inequalities are strict.

    Returns ``{label: (lhs, rhs, holds)}`` with ``holds`` true when ``lhs < rhs``.
    """
    op = builtin("max")
    out = {}

    def lt(label, lhs, rhs):
        out[label] = (lhs, rhs, lhs < rhs)

    # same argument twice: the lower subtraction drops to 0, the upper stays
    lt("lower_self_below_upper_self", losub(op, w, w), upsub(op, w, w))
    # sandwich is strict on both sides
    lt("sandwich_left_strict", losub(op, op(w, w), w), w)
    lt("sandwich_right_strict", w, upsub(op, op(w, v), v))
    # translation is strict: 0 <= small < w < big
    assert 0.0 <= small < w < big
    lt("upper_translation_strict", upsub(op, w, small), upsub(op, op(big, w), op(big, small)))
    lt("lower_translation_strict", losub(op, op(big, w), op(big, small)), losub(op, w, small))
    return out


def check_subtractions(op: AOperation, rng: np.random.Generator, n: int) -> PropertyResult:
    res = PropertyResult("subtraction", f"lemmas[{op.name}]")
    triples = sample_triples(op, rng, n)
    for u, v, w in triples:
        try:
            bad = subtraction_violations(op, float(u), float(v), float(w))
        except AopsensError as exc:
            bad = [f"error: {exc}"]
        res.record(not bad, lambda: {"op": op.spec(), "u": float(u), "v": float(v),
                                     "w": float(w), "violations": bad})
    if not op.strict:
        wit = nonstrict_witness(op, triples)
        res.record(wit is not None, lambda: {"op": op.spec(), "missing": "nonstrict witness"})
    return res


# ---------------------------------------------------------------------------
# instance-level suites

def _pwit(p: Problem, **extra) -> Callable[[], dict]:
    return lambda: {"problem": p.to_dict(), **extra}


def phi_functions(op: AOperation) -> list:
    """The phi-functions exercised for an operation kind.

    ``log(1 + u)`` is left out for multiplication kind: the transformed
    objective is ``expm1`` of the original product and overflows a float for
    products beyond about 700, which would manufacture ties.
    """
    phis = [power_phi(2.0), expm1_phi(1.0)]
    if op.kind is Kind.ADDITION:
        phis.append(log1p_phi(1.0))
    return phis


def check_problem(op: AOperation, rng: np.random.Generator, k: int) -> list:
    add = PropertyResult("problem", f"additivity[{op.name}]")
    sx = PropertyResult("problem", f"s_x_attains_f_plus[{op.name}]")
    phi = PropertyResult("problem", f"phi_equivalence[{op.name}]")
    for _ in range(k):
        p = random_problem(rng, op)
        X = list(p.ground_set)
        mask = rng.random(len(X)) < 0.5
        s1 = {x for x, m in zip(X, mask) if m}
        s2 = set(X) - s1
        add.record(close(p.measure(s1 | s2), op(p.measure(s1), p.measure(s2)), EPS_TEST), _pwit(p))
        opt = solve(p)
        for x in X:
            ro = restricted_optima(p, x, opt)
            sx.record(close(p.objective(ro.s_x), ro.f_plus, EPS_TEST), _pwit(p, element=x))
        for f in phi_functions(op):
            q = equivalent_problem(p, f)
            phi.record(
                solve(q).optimal_trajectories == opt.optimal_trajectories,
                _pwit(p, phi=f.name),
            )
    return [add, sx, phi]


def check_stability(op: AOperation, rng: np.random.Generator, k: int) -> list:
    orc = PropertyResult("stability", f"oracle_equivalence[{op.name}]")
    inter = PropertyResult("stability", f"interval_sampling[{op.name}]")
    beyond = PropertyResult("stability", f"beyond_upper_breaks[{op.name}]")
    unres = PropertyResult("stability", f"unrestricted_upper[{op.name}]")
    for _ in range(k):
        p = random_problem(rng, op)
        opt = solve(p)
        s = opt.optimal_trajectories[0]
        star = p.trajectories[s]
        for x in p.ground_set:
            try:
                if x in star:
                    a = upper_endpoint(p, s, x, opt).c_plus
                    b = oracle_endpoint(p, s, x, Side.UPPER, opt)
                else:
                    a = lower_endpoint(p, s, x, opt).c_minus
                    b = oracle_endpoint(p, s, x, Side.LOWER, opt)
                ok = close(a, b, ORACLE_TOL)
            except AopsensError as exc:
                a = b = str(exc)
                ok = False
            orc.record(ok, _pwit(p, element=x, closed_form=a, oracle=b))
            inter.record(interval_stability(p, s, x, 20, opt).passed, _pwit(p, element=x))
            if x not in star:
                unres.record(unrestricted_upper(p, s, x, optimum=opt), _pwit(p, element=x))
        if op.strict and opt.unique:
            f_minus_gap = [restricted_optima(p, x, opt).f_minus - opt.optimal_value for x in star]
            for x, gap in zip(sorted(star, key=p.ground_set.index), f_minus_gap):
                if gap <= 1e-3:
                    continue
                cp = upper_endpoint(p, s, x, opt).c_plus
                g = cp + 1e-3 * (1.0 + cp)
                broken = s not in solve(p.with_cost(x, g)).optimal_trajectories
                beyond.record(broken, _pwit(p, element=x, gamma=g))
    return [orc, inter, beyond, unres]


def check_invariant(op: AOperation, rng: np.random.Generator, k: int) -> list:
    inv = PropertyResult("invariant", f"invariance[{op.name}]")
    lem = PropertyResult("invariant", f"two_optima_cases[{op.name}]")
    char = PropertyResult("invariant", f"characterization[{op.name}]")
    uniq = PropertyResult("invariant", f"uniqueness[{op.name}]")
    mins = PropertyResult("invariant", f"min_inequalities[{op.name}]")
    lo = 1.0 if op.kind is Kind.MULTIPLICATION else 0.5
    for i in range(k):
        tied = random_tied_problem(rng, op, cost_range=(max(lo, op.neutral), 10.0))
        try:
            tolerance_function(tied, verify=True)
            ok = True
        except AssertionError:
            ok = False
        inv.record(ok, _pwit(tied))
        lem.record(not lemma_cases(tied), _pwit(tied))

        p = random_problem(rng, op, cost_range=(max(lo, op.neutral), 10.0))
        for q in (p, tied):
            r = tolerance_function(q)
            try:
                characterize(q, r)
                ok = True
            except AssertionError:
                ok = False
            char.record(ok, _pwit(q))
            try:
                uniqueness(r)
                ok = True
            except AssertionError:
                ok = False
            uniq.record(ok, _pwit(q))
        r = tolerance_function(p)
        m = min_inequalities(p, r, strict=False)
        if m.applicable:
            mins.record(m.holds, _pwit(p, report=m.to_dict()))
    return [inv, lem, char, uniq, mins]


def check_algebra(rng: np.random.Generator) -> list:
    res = PropertyResult("algebra", "axioms")
    grid = [0.0, 0.3, 0.5, 1.0, 1.7, 2.5, 4.0]
    for op in all_builtins():
        rep = check_axioms(op, grid)
        ok = all(c.passed for key, c in rep.checks.items() if key != "strictness")
        ok = ok and rep["strictness"].passed == op.strict
        res.record(ok, lambda: {"op": op.spec(), "failed": [k for k, c in rep.checks.items()
                                                             if not c.passed]})
    comp = PropertyResult("algebra", "generate_composition")
    base = builtin("plus")
    psi, phi = power_phi(2.0), log1p_phi(1.0)
    twice = generate(generate(base, psi), phi)
    once = generate(base, phi.then(psi))
    for u, v in rng.uniform(0.0, 5.0, size=(200, 2)):
        comp.record(close(twice(u, v), once(u, v), 1e-9), lambda: {"u": u, "v": v})
    return [res, comp]


# ---------------------------------------------------------------------------

def run_suite(seed: int = 0, instances: int = 10, only: Optional[str] = None) -> list:
    """Run the selected module suites; returns a list of :class:`PropertyResult`."""
    if only is not None and only not in MODULES:
        raise AopsensError(f"unknown module {only!r}; expected one of {', '.join(MODULES)}")
    rng = np.random.default_rng(seed)
    results = []

    def timed(fn, *args):
        t0 = time.perf_counter()
        out = fn(*args)
        out = out if isinstance(out, list) else [out]
        for r in out:
            r.seconds = (time.perf_counter() - t0) / len(out)
        results.extend(out)

    want = lambda m: only is None or only == m
    if want("algebra"):
        timed(check_algebra, rng)
    if want("subtraction"):
        for op in all_builtins():
            timed(check_subtractions, op, rng, 200 * instances)
    if want("problem"):
        for name, p in STABILITY_FAMILIES:
            timed(check_problem, builtin(name, p), rng, instances)
    if want("stability"):
        for name, p in STABILITY_FAMILIES:
            timed(check_stability, builtin(name, p), rng, instances)
    if want("invariant"):
        for name, p in STRICT_FAMILIES:
            timed(check_invariant, builtin(name, p), rng, instances)
    return results
