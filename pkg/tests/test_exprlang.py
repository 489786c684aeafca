import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bielecki.exprlang import (
    ArityError,
    BinOp,
    Call,
    ExprDomainError,
    Neg,
    Num,
    ParseError,
    UnboundVariableError,
    UnknownIdentifierError,
    Var,
    declared_variables,
    evaluate,
    parse,
    to_text,
)

# (expression, bindings, value); values computed with 40-digit mpmath
TABLE = [
    ("1+2*3", {}, 7),
    ("2^3^2", {}, 512.0),
    ("-2^2", {}, -4),
    ("(-2)^2", {}, 4),
    ("2^-1", {}, 0.5),
    ("10/4/5", {}, 0.5),
    ("7-3-2", {}, 2),
    ("t+s", {"t": 1.0, "s": 2.0}, 3),
    ("min(1, exp(1))", {}, 1),
    ("max(t, s)", {"t": 0.75, "s": -1.5}, 0.75),
    ("exp(-(t-s)^2)", {"t": 0.75, "s": -1.5}, 0.0063297154274857465769),
    ("t*s*x/2", {"t": 0.75, "s": -1.5, "x": 2.0}, -1.125),
    ("log(2)", {}, 0.69314718055994530942),
    ("sqrt(2)", {}, 1.4142135623730950488),
    ("sin(t)", {"t": 0.75}, 0.68163876002333416673),
    ("cos(s)", {"s": -1.5}, 0.070737201667702910088),
    ("tanh(x)", {"x": 2.0}, 0.96402758007581688395),
    ("abs(s)", {"s": -1.5}, 1.5),
    ("pow(x, 0.5)", {"x": 2.0}, 1.4142135623730950488),
    ("pow(s, 3)", {"s": -1.5}, -3.375),
    ("1e-3*x", {"x": 2.0}, 0.002),
    (".5+2.", {}, 2.5),
    ("exp(log(x))", {"x": 2.0}, 2),
    ("-x^2+ -t", {"x": 2.0, "t": 0.75}, -4.75),
    ("(t1+t2)*s1", {"t1": 1.0, "t2": 2.0, "s1": 0.75}, 2.25),
    ("x1 - x2/x3", {"x1": 1.0, "x2": 3.0, "x3": 4.0}, 0.25),
    ("3*exp(3*t)", {"t": 0.75}, 28.463207509075577162),
    ("sqrt(t)*sqrt(t)", {"t": 4.0}, 4),
    ("2.5*t*s", {"t": 0.75, "s": -1.5}, -2.8125),
    ("1/(1+t^2)", {"t": 0.75}, 0.64),
]


@pytest.mark.parametrize("text,ctx,value", TABLE)
def test_differential_table(text, ctx, value):
    got = evaluate(parse(text), ctx)
    assert got == pytest.approx(value, rel=1e-15, abs=0)


def test_table_size():
    assert len(TABLE) == 30


class TestParse:
    def test_precedence(self):
        e = parse("t*s*x/2", {"t", "s", "x"})
        assert e == BinOp("/", BinOp("*", BinOp("*", Var("t"), Var("s")), Var("x")), Num(2.0))

    def test_unary_minus_after_power(self):
        e = parse("exp(-(t-s)^2)", {"t", "s"})
        assert e == Call("exp", (Neg(BinOp("^", BinOp("-", Var("t"), Var("s")), Num(2.0))),))
        assert parse("-t^2") == Neg(BinOp("^", Var("t"), Num(2.0)))

    def test_right_associative_power(self):
        assert parse("a^b^c") == BinOp("^", Var("a"), BinOp("^", Var("b"), Var("c")))

    def test_left_associative(self):
        assert parse("a-b-c") == BinOp("-", BinOp("-", Var("a"), Var("b")), Var("c"))
        assert parse("a/b*c") == BinOp("*", BinOp("/", Var("a"), Var("b")), Var("c"))

    def test_whitespace_insignificant(self):
        assert parse(" t *\t( s+1 ) ") == parse("t*(s+1)")

    @pytest.mark.parametrize(
        "text,offset",
        [("2*", 2), ("(1", 2), ("1 +* 2", 3), ("t $ 2", 2), ("1 2", 2), (")", 0), ("sin(1,", 6)],
    )
    def test_syntax_error_offsets(self, text, offset):
        with pytest.raises(ParseError) as err:
            parse(text, {"t"})
        assert err.value.offset == offset
        assert f"offset {offset}" in str(err.value)

    def test_byte_offsets_count_utf8(self):
        with pytest.raises(ParseError) as err:
            parse("t + é", {"t"})
        assert err.value.offset == 4
        with pytest.raises(ParseError) as err:
            parse("é", {"t"})
        assert err.value.offset == 0

    def test_expected_tokens(self):
        with pytest.raises(ParseError) as err:
            parse("2*")
        assert "number" in err.value.expected

    def test_empty(self):
        with pytest.raises(ParseError):
            parse("   ")

    def test_unknown_identifier(self):
        with pytest.raises(UnknownIdentifierError) as err:
            parse("t + y", {"t"})
        assert err.value.offset == 4
        with pytest.raises(UnknownIdentifierError):
            parse("foo(t)", {"t"})

    @pytest.mark.parametrize("text", ["sin(1, 2)", "max(1)", "pow(1,2,3)"])
    def test_arity(self, text):
        with pytest.raises(ArityError):
            parse(text)

    def test_function_without_call(self):
        with pytest.raises(ParseError):
            parse("exp + 1")


class TestDeclaredVariables:
    def test_aliases(self):
        assert declared_variables(1) == {"t", "t1"}
        assert declared_variables(2, with_s=True) == {"t1", "t2", "s1", "s2"}
        assert declared_variables(1, m=2, with_x=True) == {"t", "t1", "x1", "x2"}
        assert declared_variables(1, with_x=True) == {"t", "t1", "x", "x1"}
        assert "x3" in declared_variables(1, with_x=True, x_count=3)


class TestEvaluate:
    @pytest.mark.parametrize(
        "text", ["sqrt(-1)", "log(0)", "log(-2)", "0^-1", "pow(0, -2)", "(-8)^(1/3)", "1/0", "exp(800)"]
    )
    def test_domain_errors(self, text):
        with pytest.raises(ExprDomainError) as err:
            evaluate(parse(text), {})
        assert err.value.subexpr is not None

    def test_domain_error_names_subexpression(self):
        with pytest.raises(ExprDomainError) as err:
            evaluate(parse("1 + sqrt(t - 2)"), {"t": 1.0})
        assert to_text(err.value.subexpr) == "sqrt((t - 2.0))"

    def test_unbound(self):
        with pytest.raises(UnboundVariableError):
            evaluate(parse("t + s"), {"t": 1.0})

    def test_vectorized(self):
        t = np.linspace(0, 1, 5)
        out = evaluate(parse("min(t, 0.5) + 1"), {"t": t})
        assert out.tolist() == [1.0, 1.25, 1.5, 1.5, 1.5]

    def test_vectorized_domain_error(self):
        with pytest.raises(ExprDomainError):
            evaluate(parse("log(t)"), {"t": np.linspace(0, 1, 5)})

    def test_integer_power_of_negative(self):
        assert evaluate(parse("(-2)^3"), {}) == -8.0

    def test_deterministic(self):
        e = parse("sin(t)*exp(-s)/(1+t^2)")
        ctx = {"t": np.linspace(-3, 3, 101), "s": np.linspace(0, 2, 101)}
        assert np.array_equal(evaluate(e, ctx), evaluate(e, ctx))


# random ASTs for the print/parse round trip
_names = st.sampled_from(["t", "s", "x", "t1", "x2"])
_leaves = st.one_of(
    st.floats(min_value=0, max_value=1e6, allow_nan=False).map(Num),
    st.sampled_from([0.5, 1e-300, 3.0, 1e22]).map(Num),
    _names.map(Var),
)


def _extend(children):
    unary = st.sampled_from(["exp", "log", "sin", "cos", "sqrt", "abs", "tanh"])
    binary = st.sampled_from(["min", "max", "pow"])
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda a: BinOp(*a)),
        st.tuples(unary, children).map(lambda a: Call(a[0], (a[1],))),
        st.tuples(binary, children, children).map(lambda a: Call(a[0], (a[1], a[2]))),
    )


@settings(max_examples=300, deadline=None)
@given(st.recursive(_leaves, _extend, max_leaves=25))
def test_print_parse_round_trip(expr):
    assert parse(to_text(expr)) == expr
