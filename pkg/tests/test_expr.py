import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from korovkin.expr import (
    MAX_DEPTH,
    BinOp,
    Call,
    ExpressionError,
    Name,
    Neg,
    Num,
    evaluate_on,
    parse_expression,
    to_text,
)


def test_parse_examples():
    assert parse_expression("cos(x)")(0.0) == 1.0
    assert parse_expression("2-2*cos(x)")(math.pi) == pytest.approx(4.0, abs=1e-15)
    assert parse_expression("exp(abs(x)/pi)")(-math.pi) == pytest.approx(math.e, abs=1e-15)


@pytest.mark.parametrize("text,value", [
    ("2^3^2", 512.0),
    ("-2^2", -4.0),
    ("2^-1", 0.5),
    ("1-2-3", -4.0),
    ("8/4/2", 1.0),
    ("1+2*3", 7.0),
    ("(1+2)*3", 9.0),
    ("--3", 3.0),
    ("1.5e2 + .5", 150.5),
    ("sqrt(16)", 4.0),
    ("sin(pi/2)", 1.0),
])
def test_precedence_and_literals(text, value):
    assert parse_expression(text)(0.0) == pytest.approx(value, abs=1e-15)


def test_vectorised_evaluation():
    x = np.linspace(0, 1, 5)
    np.testing.assert_allclose(parse_expression("x^2 + 1")(x), x**2 + 1)
    np.testing.assert_allclose(evaluate_on(parse_expression("3"), x), np.full(5, 3.0))


def test_extra_variables():
    e = parse_expression("x + 1/n", variables=("x", "n"))
    assert e(2.0, n=4.0) == 2.25
    with pytest.raises(ExpressionError):
        parse_expression("x + 1/n")


@pytest.mark.parametrize("text,position,reason", [
    ("", 0, "empty"),
    ("2*(x+1", 6, "expected ')'"),
    ("foo(x)", 0, "unknown identifier"),
    ("sin x", 4, "takes one argument"),
    ("1 +", 3, "unexpected end"),
    ("sin(x, x)", 5, "exactly one argument"),
    ("x(2)", 1, "not a function"),
    ("2 $ 3", 2, "unexpected character"),
    ("1 2", 2, "unexpected '2'"),
    ("1e999", 0, "out of range"),
])
def test_errors_carry_positions(text, position, reason):
    with pytest.raises(ExpressionError) as info:
        parse_expression(text)
    assert info.value.position == position
    assert reason in info.value.reason


def test_error_position_is_in_bytes():
    with pytest.raises(ExpressionError) as info:
        parse_expression("xé + 1")
    assert info.value.position == 0
    with pytest.raises(ExpressionError) as info:
        parse_expression("1 + µ")
    assert info.value.position == 4
    with pytest.raises(ExpressionError) as info:
        parse_expression("sin(éé) + y")
    assert info.value.position == 4


def test_nesting_limit():
    deep = "(" * (MAX_DEPTH + 5) + "x" + ")" * (MAX_DEPTH + 5)
    with pytest.raises(ExpressionError, match="nested"):
        parse_expression(deep)
    with pytest.raises(ExpressionError, match="nested"):
        parse_expression("+".join(["x"] * 5000))
    with pytest.raises(ExpressionError, match="nested"):
        parse_expression("-" * 5000 + "x")


def test_non_finite_values_rejected_on_evaluation():
    with pytest.raises(ExpressionError, match="not finite"):
        evaluate_on(parse_expression("sqrt(x - 0.5)"), np.linspace(0, 1, 11))
    with pytest.raises(ExpressionError):
        evaluate_on(parse_expression("1/x"), np.linspace(0, 1, 11))


# --- round trip ---------------------------------------------------------------

leaves = st.one_of(
    st.floats(min_value=0, max_value=1e6, allow_nan=False).map(Num),
    st.sampled_from(["x", "pi"]).map(Name),
)


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda t: BinOp(*t)),
        st.tuples(st.sampled_from(["sin", "cos", "exp", "abs", "sqrt"]), children).map(lambda t: Call(*t)),
    )


trees = st.recursive(leaves, _extend, max_leaves=25)


@settings(max_examples=200)
@given(trees)
def test_round_trip(ast):
    assert parse_expression(to_text(ast)).ast == ast


@settings(max_examples=100)
@given(trees)
def test_round_trip_preserves_value(ast):
    e1 = parse_expression(to_text(ast))
    e2 = parse_expression(to_text(e1.ast))
    with np.errstate(all="ignore"):
        v1, v2 = e1(0.7), e2(0.7)
    assert (np.isnan(v1) and np.isnan(v2)) or v1 == v2


# --- totality -----------------------------------------------------------------

alphabet = st.sampled_from(list("0123456789.eE+-*/^()x pisncoxqrtab,$_é"))


@settings(max_examples=400)
@given(st.one_of(st.text(max_size=40), st.lists(alphabet, max_size=40).map("".join)))
def test_parser_is_total(text):
    try:
        e = parse_expression(text)
    except ExpressionError as exc:
        assert 0 <= exc.position <= len(text.encode("utf-8"))
        return
    try:
        evaluate_on(e, np.linspace(-1, 1, 7))
    except ExpressionError:
        pass


def test_evaluation_errors_have_no_position():
    with pytest.raises(ExpressionError) as info:
        evaluate_on(parse_expression("sqrt(x)"), np.array([-1.0]))
    assert info.value.position is None and "byte" not in str(info.value)
