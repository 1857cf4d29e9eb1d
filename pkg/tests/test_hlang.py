"""Type grammar, signature extraction, and literal synthesis/parsing."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equigame import hlang
from equigame.errors import (
    DepthExhausted,
    LiteralParseError,
    NoSignature,
    UnsupportedType,
)
from equigame.hlang import (
    BOOL,
    INT,
    STRING,
    TypeExpr,
    extract_signature,
    hask_show,
    list_of,
    maybe_of,
    normalize_code,
    parse_input_literals,
    parse_literal,
    parse_type_expr,
    render_type,
    synthesize_literal,
    tuple_of,
)

DOUBLE_SRC = "double :: Int -> Int\ndouble x = x + x"
ADD_SRC = "addNumbers :: Int -> Int -> Int\naddNumbers a b = a + b"
SIGN_SRC = (
    "sign :: Int -> String\n"
    "sign n\n"
    '  | n < 0     = "negative"\n'
    '  | n == 0    = "zero"\n'
    '  | otherwise = "positive"'
)


class TestExtractSignature:
    def test_double(self):
        sig = extract_signature(DOUBLE_SRC)
        assert sig.function_name == "double"
        assert sig.arg_types == (INT,)
        assert sig.result_type == INT

    def test_two_arguments(self):
        sig = extract_signature(ADD_SRC)
        assert sig.function_name == "addNumbers"
        assert sig.arg_types == (INT, INT)
        assert sig.result_type == INT

    def test_guards(self):
        sig = extract_signature(SIGN_SRC)
        assert sig.function_name == "sign"
        assert sig.arg_types == (INT,)
        assert sig.result_type == STRING

    def test_no_signature(self):
        with pytest.raises(NoSignature):
            extract_signature("f x = x + 1")

    def test_signature_without_equation(self):
        with pytest.raises(NoSignature):
            extract_signature("g :: Int -> Int\nf x = x + 1")

    def test_first_matching_signature_wins(self):
        code = "helper :: Int -> Int\nhelper x = x\n" + DOUBLE_SRC
        assert extract_signature(code).function_name == "helper"

    def test_multiline_signature(self):
        code = "f :: Int ->\n     Int -> Bool\nf a b = a == b"
        sig = extract_signature(code)
        assert sig.arg_types == (INT, INT)
        assert sig.result_type == BOOL

    def test_comments_ignored(self):
        code = "-- silly :: Bool -> Bool\n{- g :: Int -> Int -}\n" + DOUBLE_SRC
        assert extract_signature(code).function_name == "double"

    def test_prime_in_name(self):
        code = "add' :: Int -> Int -> Int\nadd' a b = b + a"
        assert extract_signature(code).function_name == "add'"

    @pytest.mark.parametrize(
        "type_text",
        [
            "a -> a",
            "Num a => a -> a",
            "(Int -> Int) -> Int",
            "IO Int -> Int",
            "Int -> Int -> (Int, Int, Int, Int)",
        ],
    )
    def test_unsupported_types(self, type_text):
        with pytest.raises(UnsupportedType):
            extract_signature(f"f :: {type_text}\nf x = x")

    def test_composite_types(self):
        code = "g :: [Maybe Int] -> (Int, Bool) -> Maybe [Double]\ng xs p = Nothing"
        sig = extract_signature(code)
        assert sig.arg_types == (
            list_of(maybe_of(INT)),
            tuple_of(INT, hlang.BOOL),
        )
        assert sig.result_type == maybe_of(list_of(hlang.DOUBLE))


class TestTypeRendering:
    @pytest.mark.parametrize(
        "t,text",
        [
            (INT, "Int"),
            (list_of(INT), "[Int]"),
            (tuple_of(INT, BOOL), "(Int, Bool)"),
            (maybe_of(INT), "Maybe Int"),
            (maybe_of(maybe_of(INT)), "Maybe (Maybe Int)"),
            (list_of(maybe_of(STRING)), "[Maybe String]"),
        ],
    )
    def test_render(self, t, text):
        assert render_type(t) == text

    def test_roundtrip_over_grammar(self):
        for t in hlang.iter_type_exprs(max_depth=2):
            assert parse_type_expr(render_type(t)) == t


class TestSynthesizeLiteral:
    def test_list_zero_depth_is_empty(self):
        for seed in range(20):
            assert synthesize_literal(list_of(INT), seed, 0) == "[]"

    def test_maybe_zero_depth_is_nothing(self):
        assert synthesize_literal(maybe_of(INT), 3, 0) == "Nothing"

    def test_bool_pinned_seeds(self):
        # pinned by enumerating the generator under fixed seeds
        assert synthesize_literal(BOOL, 0) == "True"
        assert synthesize_literal(BOOL, 1) == "False"

    def test_tuple_shape(self):
        literal = synthesize_literal(tuple_of(INT, BOOL), 0, 2)
        value = parse_literal(literal, tuple_of(INT, BOOL))
        assert isinstance(value, tuple) and len(value) == 2
        assert isinstance(value[0], int) and isinstance(value[1], bool)

    def test_tuple_depth_exhausted(self):
        with pytest.raises(DepthExhausted):
            synthesize_literal(tuple_of(INT, BOOL), 0, 0)

    def test_deterministic(self):
        t = list_of(tuple_of(INT, STRING))
        assert synthesize_literal(t, 11, 3) == synthesize_literal(t, 11, 3)

    def test_int_range(self):
        for seed in range(200):
            assert -100 <= int(synthesize_literal(INT, seed)) <= 100

    def test_list_length_bounds(self):
        for seed in range(100):
            value = parse_literal(synthesize_literal(list_of(INT), seed, 5), list_of(INT))
            assert 0 <= len(value) <= 5

    def test_literal_soundness_1000_random_pairs(self):
        # independent oracle: the typed literal parser accepts every
        # synthesized literal at its own type
        rng = random.Random(20240817)
        grammar = list(hlang.iter_type_exprs(max_depth=2))
        for i in range(1000):
            t = rng.choice(grammar)
            literal = synthesize_literal(t, seed=i, depth_budget=3)
            parse_literal(literal, t)


class TestParseLiteral:
    @pytest.mark.parametrize(
        "text,t,value",
        [
            ("42", INT, 42),
            ("-7", INT, -7),
            ("(-7)", INT, -7),
            ("True", BOOL, True),
            ('"zero"', STRING, "zero"),
            ("'a'", hlang.CHAR, "a"),
            ("3.25", hlang.DOUBLE, 3.25),
            ("[1, 2, 3]", list_of(INT), [1, 2, 3]),
            ("[]", list_of(INT), []),
            ("(1, False)", tuple_of(INT, BOOL), (1, False)),
            ("Nothing", maybe_of(INT), None),
            ("Just 3", maybe_of(INT), ("Just", 3)),
            ("Just (-3)", maybe_of(INT), ("Just", -3)),
            ("[Just 1, Nothing]", list_of(maybe_of(INT)), [("Just", 1), None]),
        ],
    )
    def test_accepts(self, text, t, value):
        assert parse_literal(text, t) == value

    @pytest.mark.parametrize(
        "text,t",
        [
            ("True", INT),
            ("[1, True]", list_of(INT)),
            ("(1, 2, 3)", tuple_of(INT, INT)),
            ("Just", maybe_of(INT)),
            ("1 2", INT),
        ],
    )
    def test_rejects(self, text, t):
        with pytest.raises(LiteralParseError):
            parse_literal(text, t)

    def test_input_literals_single_arg_keeps_text(self):
        assert parse_input_literals("Just 3", (maybe_of(INT),)) == ["Just 3"]

    def test_input_literals_multi_arg(self):
        assert parse_input_literals("1 2", (INT, INT)) == ["1", "2"]

    def test_input_literals_type_directed(self):
        parts = parse_input_literals("Just 3 7", (maybe_of(INT), INT))
        assert parts == ["Just 3", "7"]

    def test_input_literals_arity_error(self):
        with pytest.raises(LiteralParseError):
            parse_input_literals("1", (INT, INT))


class TestHaskShow:
    @pytest.mark.parametrize(
        "value,t,text",
        [
            (5, INT, "5"),
            (-5, INT, "-5"),
            (True, BOOL, "True"),
            ("zero", STRING, '"zero"'),
            ([1, 2], list_of(INT), "[1,2]"),
            ((1, False), tuple_of(INT, BOOL), "(1,False)"),
            (None, maybe_of(INT), "Nothing"),
            (("Just", 3), maybe_of(INT), "Just 3"),
            (("Just", -3), maybe_of(INT), "Just (-3)"),
            (3.0, hlang.DOUBLE, "3.0"),
            (3.25, hlang.DOUBLE, "3.25"),
        ],
    )
    def test_show(self, value, t, text):
        assert hask_show(value, t) == text


@st.composite
def type_exprs(draw, depth=2):
    if depth == 0:
        return TypeExpr(draw(st.sampled_from(hlang.BASE_TYPES)))
    kind = draw(st.sampled_from(["base", "list", "maybe", "tuple"]))
    if kind == "base":
        return TypeExpr(draw(st.sampled_from(hlang.BASE_TYPES)))
    if kind == "list":
        return list_of(draw(type_exprs(depth=depth - 1)))
    if kind == "maybe":
        return maybe_of(draw(type_exprs(depth=depth - 1)))
    width = draw(st.integers(min_value=2, max_value=3))
    return tuple_of(*[draw(type_exprs(depth=depth - 1)) for _ in range(width)])


@settings(max_examples=200, deadline=None)
@given(t=type_exprs(), seed=st.integers(min_value=0, max_value=2**32))
def test_property_synthesized_literals_reparse(t, seed):
    literal = synthesize_literal(t, seed, depth_budget=3)
    parse_literal(literal, t)


@settings(max_examples=100, deadline=None)
@given(t=type_exprs(), seed=st.integers(min_value=0, max_value=2**32))
def test_property_show_of_parse_reparses(t, seed):
    literal = synthesize_literal(t, seed, depth_budget=3)
    value = parse_literal(literal, t)
    shown = hask_show(value, t)
    assert parse_literal(shown, t) == value


def test_normalize_code():
    assert normalize_code("f x =\n   x + 1\n") == "f x = x + 1"
    assert normalize_code("f  x = x") == normalize_code("f x =  x")
