import numpy as np
import pytest

from aopsens.algebra import builtin, close
from aopsens.errors import NotStrictError, ValidationError
from aopsens.invariant import (
    CharacterizationError, InvarianceError, MinInequalityError, characterize, covering,
    extract, inverse, is_neutral, lemma_cases, level_sets, min_inequalities, nonembedded,
    tolerance_function, uniqueness,
)
from aopsens.problem import Problem, random_problem, random_tied_problem, solve
from aopsens.stability import lower_tolerance, upper_tolerance
from conftest import make_table1, make_table2


def test_table2_values(table2):
    rep = tolerance_function(table2, verify=True)
    assert [rep.values[x] for x in table2.ground_set] == [0, 2, 0, 0, 0, -2]
    assert rep.unique is False


def test_table2_extraction_at_second_optimum(table2):
    vals, _ = extract(table2, 1)
    assert upper_tolerance(table2, 1, "x2").upper_tolerance == 2
    assert upper_tolerance(table2, 1, "x4").upper_tolerance == 0
    assert upper_tolerance(table2, 1, "x5").upper_tolerance == 0
    assert lower_tolerance(table2, 1, "x1").lower_tolerance == 0
    assert lower_tolerance(table2, 1, "x3").lower_tolerance == 0
    assert lower_tolerance(table2, 1, "x6").lower_tolerance == 2
    assert [vals[x] for x in table2.ground_set] == [0, 2, 0, 0, 0, -2]


def test_table1_values(table1):
    # u = (2, 2) on S1; l = (1, 2) off it, stored as -l
    rep = tolerance_function(table1)
    assert [rep.values[x] for x in table1.ground_set] == [2, 2, -1, -2]
    assert [rep.extended_values[x] for x in table1.ground_set] == [2, 2, -2, -2]


def test_inverse_involution():
    for op in (builtin("plus"), builtin("product"), builtin("scaled_product", 2),
               builtin("log1p_product", 1)):
        e = op.neutral
        assert close(inverse(op, e), e, 1e-9)
        for u in (0.3, 1.0, 2.5, 7.0):
            assert close(inverse(op, inverse(op, u)), u, 1e-7)
    assert inverse(builtin("product"), 4.0) == 0.25
    assert inverse(builtin("plus"), 0.0) == 0.0  # no negative zero


def test_characterize_fixtures(table1, table2):
    ch = characterize(table2, tolerance_function(table2))
    assert ch.level_sets["eq"] == {"x1", "x3", "x4", "x5"}
    assert ch.level_sets["gt"] == {"x2"}
    assert ch.expected["ge"] == {"x1", "x2", "x3", "x4", "x5"}
    ch1 = characterize(table1, tolerance_function(table1))
    assert ch1.level_sets["lt"] == {"x3", "x4"} and ch1.holds


def test_characterize_detects_tampering(table1):
    rep = tolerance_function(table1)
    rep.values["x3"] = 0.0
    with pytest.raises(CharacterizationError) as err:
        characterize(table1, rep)
    assert err.value.element == "x3"


def test_level_sets_multiplication_band():
    op = builtin("product")
    ls = level_sets(op, {"a": 1.0 + 1e-9, "b": 1.5, "c": 0.5})
    assert ls["eq"] == {"a"} and ls["gt"] == {"b"} and ls["lt"] == {"c"}
    assert is_neutral(builtin("plus"), 5e-8) and not is_neutral(builtin("plus"), 1e-6)


def test_uniqueness(table1, table2):
    assert uniqueness(tolerance_function(table1)) is True
    assert uniqueness(tolerance_function(table2)) is False
    sym = Problem(["a", "b", "c", "d"], {"a": 1, "b": 2, "c": 1, "d": 2},
                  [["a", "b"], ["c", "d"]], builtin("plus"))
    assert uniqueness(tolerance_function(sym)) is False


def test_covering():
    p = Problem(["a", "b", "c", "d"], {k: 1.0 for k in "abcd"},
                [["a", "b"], ["a", "b", "c"], ["d"]], builtin("plus"))
    assert covering(p, {"a", "b"}) == [1]
    assert not nonembedded(p)
    assert nonembedded(make_table1()) and nonembedded(make_table2())


def test_min_inequalities_table1(table1):
    m = min_inequalities(table1, tolerance_function(table1))
    assert m.applicable and m.holds
    assert (m.min_inv_t, m.min_inv_t_ext, m.min_t_opt) == (1.0, 2.0, 2.0)


def test_min_inequalities_embedded():
    # S* = {a} is covered by {a, c}; c drops out of the restricted minimum
    p = Problem(["a", "b", "c"], {"a": 1.0, "b": 4.0, "c": 1.5},
                [["a"], ["a", "c"], ["b"]], builtin("plus"))
    rep = tolerance_function(p)
    m = min_inequalities(p, rep)
    assert not m.nonembedded and m.uncovered == ("b",)
    # brute force: T on S* is u(a) = f(S_-a) - f* = 4 - 1; extended T^-1(b) = 4 - 1
    assert close(m.min_t_opt, 3.0) and close(m.min_inv_t_ext_uncovered, 3.0)
    assert close(m.min_inv_t_ext, 1.5)  # c: f(S_c) - f* = 2.5 - 1
    assert m.holds


def test_min_inequalities_not_applicable(table2):
    m = min_inequalities(table2, tolerance_function(table2))
    assert not m.applicable and "unique" in m.reason


def test_min_inequality_violation_raises(table1):
    rep = tolerance_function(table1)
    rep.values["x1"] = 0.5
    with pytest.raises(MinInequalityError):
        min_inequalities(table1, rep)


def test_refusals(table1):
    with pytest.raises(NotStrictError):
        tolerance_function(table1.with_operation(builtin("max")))
    with pytest.raises(ValidationError):
        tolerance_function(table1.with_cost("x3", 0.0))


@pytest.mark.parametrize("name,p", [("plus", None), ("p_sum", 2.0), ("product", None),
                                    ("pq_sum", 1.0), ("log_expm1_product", 1.0)])
def test_invariance_and_cases_random(name, p):
    rng = np.random.default_rng(55)
    op = builtin(name, p)
    lo = max(1.0, op.neutral) if op.kind.value == "multiplication" else 0.5
    for _ in range(10):
        q = random_tied_problem(rng, op, cost_range=(lo, 10.0))
        rep = tolerance_function(q, verify=True)
        assert len(rep.per_optimum) >= 2
        assert lemma_cases(q) == []
        characterize(q, rep)
        assert uniqueness(rep) is False


def test_invariance_error_detected(table2, monkeypatch):
    import aopsens.invariant as inv

    real = inv.extract

    def skewed(p, s, optimum=None, check=True):
        v, e = real(p, s, optimum, check)
        if s == 1:
            v = dict(v, x6=-3.0)
        return v, e

    monkeypatch.setattr(inv, "extract", skewed)
    with pytest.raises(InvarianceError):
        inv.tolerance_function(table2, verify=True)


def test_product_nonembedded_full_chain():
    rng = np.random.default_rng(77)
    seen = 0
    for _ in range(60):
        p = random_problem(rng, builtin("product"), cost_range=(1.0, 10.0))
        if not solve(p).unique or not nonembedded(p):
            continue
        m = min_inequalities(p, tolerance_function(p))
        assert m.checks["full_equality"]
        seen += 1
    assert seen >= 5
