import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aopsens.algebra import OPERATION_NAMES, Kind, builtin, close, expm1_phi, generate, power_phi
from aopsens.errors import BracketError, DomainError
from aopsens.subtraction import (
    Method, bisect_lower, bisect_upper, in_domain_upper, losub, lower_sub, upper_sub, upsub,
)
from aopsens.verify import (
    default_op, max_witnesses, nonstrict_witness, sample_triples, subtraction_violations,
)

ALL = [default_op(n) for n in OPERATION_NAMES]


def test_closed_form_examples():
    ps = builtin("p_sum", 2)
    assert close(upsub(ps, 5, 3), 4.0)
    assert close(losub(ps, 5, 3), 4.0)
    assert losub(ps, 3, 5) == 0.0
    prod = builtin("product")
    assert close(upsub(prod, 6, 3), 2.0) and close(losub(prod, 6, 3), 2.0)
    mx = builtin("max")
    assert upsub(mx, 4, 1) == 4 and losub(mx, 4, 1) == 4
    assert upsub(mx, 4, 4) == 4 and losub(mx, 4, 4) == 0
    assert upsub(mx, 0, 0) == 0 == losub(mx, 0, 0)


def test_domain():
    plus = builtin("plus")
    assert in_domain_upper(plus, 3, 1) and not in_domain_upper(plus, 1, 3)
    with pytest.raises(DomainError):
        upper_sub(plus, 1, 3)
    # lower subtraction is total and floors at 0
    assert losub(plus, 1, 3) == 0.0
    assert in_domain_upper(builtin("product"), 0.1, 50)
    with pytest.raises(DomainError):
        upsub(builtin("product"), 0.0, 1.0)


def test_tie_snapping():
    ps = builtin("p_sum", 2)
    w = math.sqrt(2.0) ** 2  # 2.0000000000000004
    assert upsub(ps, w, 2.0) == 0.0


@pytest.mark.parametrize("op", ALL, ids=lambda o: o.name)
def test_closed_forms_match_bisection(op):
    rng = np.random.default_rng(7)
    for u, v, w in sample_triples(op, rng, 300):
        w, v = float(w), float(v)
        if in_domain_upper(op, w, v):
            a = upper_sub(op, w, v)
            assert a.method is Method.CLOSED_FORM
            b = bisect_upper(op, w, v)
            # at v == w the float predicate is flat over a sqrt(ulp)-wide
            # window for root-type operations, so bisection is only that good
            tol = 1e-6 if close(v, w) else 1e-8
            assert close(a.value, b.value, tol), (w, v, a, b)
        lo = lower_sub(op, w, v)
        lb = bisect_lower(op, w, v)
        assert close(lo.value, lb.value, 1e-8), (w, v, lo, lb)


def test_generated_operation_uses_bisection():
    gen = generate(builtin("plus"), power_phi(2.0))
    res = upper_sub(gen, 5.0, 3.0)
    assert res.method is Method.BISECTION
    assert abs(res.value - 4.0) < 1e-9
    gen = generate(builtin("product"), expm1_phi(1.0))
    target = builtin("log_expm1_product", 1.0)
    assert close(upsub(gen, 2.0, 0.7), upsub(target, 2.0, 0.7), 1e-9)
    assert close(losub(gen, 2.0, 0.7), losub(target, 2.0, 0.7), 1e-9)


def test_bisection_bracket_failure():
    with pytest.raises(BracketError):
        bisect_upper(builtin("plus"), 1.0, 2.0)


def test_bisection_nonstrict_right_edge():
    # max: every u in [0, w] is feasible, the maximum is w itself
    r = bisect_upper(builtin("max"), 3.0, 1.0)
    assert abs(r.value - 3.0) < 1e-9
    assert bisect_lower(builtin("max"), 3.0, 3.0).value == 0.0


triple = st.tuples(*(st.floats(0.05, 10.0) for _ in range(3)))


@settings(max_examples=150, deadline=None)
@given(t=triple, idx=st.integers(0, len(ALL) - 1), tie=st.booleans())
def test_lemmas_property(t, idx, tie):
    op = ALL[idx]
    u, v, w = t
    if tie:
        v = w
    assert subtraction_violations(op, u, v, w) == []


@pytest.mark.parametrize("op", ALL, ids=lambda o: o.name)
def test_strictness_criterion(op):
    rng = np.random.default_rng(3)
    triples = sample_triples(op, rng, 500)
    wit = nonstrict_witness(op, triples)
    assert (wit is None) == op.strict


def test_max_literal_witnesses():
    out = max_witnesses()
    assert out["lower_self_below_upper_self"] == (0.0, 2.0, True)
    assert out["sandwich_left_strict"] == (0.0, 2.0, True)
    assert out["sandwich_right_strict"] == (2.0, 3.0, True)
    assert out["upper_translation_strict"] == (2.0, 5.0, True)
    assert out["lower_translation_strict"] == (0.0, 2.0, True)


def test_residuals_reported():
    r = upper_sub(builtin("p_sum", 2), 5.0, 3.0)
    assert r.residual < 1e-12
