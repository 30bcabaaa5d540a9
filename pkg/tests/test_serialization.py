"""
Tests for expression text rendering and parsing.
"""

import numpy as np
import pytest

from sharedsr.exceptions import ExpressionParseError
from sharedsr.models.expression import (
    BinaryOp,
    Literal,
    Param,
    ParamKind,
    UnaryOp,
    Variable,
)
from sharedsr.services.generation import random_expression
from sharedsr.services.serialization import parse, to_string, tokenize
from tests.conftest import EXAMPLE_EXPRESSION


class TestToString:
    """Test rendering."""

    def test_reference_expression(self, example_expr):
        """Test the reference expression renders to its canonical text."""
        assert to_string(example_expr) == EXAMPLE_EXPRESSION

    def test_negative_literal_bracketed(self):
        """Test negative literals are wrapped in parentheses."""
        expr = BinaryOp("*", Literal(-2.5), Variable(0))
        assert to_string(expr) == "(-2.5) * v1"

    def test_precedence_brackets(self):
        """Test lower-precedence children and same-level right operands."""
        sum_ = BinaryOp("+", Variable(0), Variable(1))
        assert to_string(BinaryOp("*", sum_, Variable(0))) == "(v1 + v2) * v1"
        assert to_string(BinaryOp("-", Variable(0), sum_)) == "v1 - (v1 + v2)"
        assert to_string(BinaryOp("+", sum_, Variable(0))) == "v1 + v2 + v1"

    def test_pow_always_bracketed_when_nested(self):
        """Test nested powers are explicit."""
        inner = BinaryOp("^", Variable(0), Literal(2.0))
        assert to_string(BinaryOp("^", inner, Literal(3.0))) == "(v1 ^ 2) ^ 3"

    def test_unary_call(self):
        """Test function syntax."""
        assert to_string(UnaryOp("sqrt", Variable(1))) == "sqrt(v2)"

    def test_tokens_follow_first_appearance(self):
        """Test terminal tokens are numbered per kind by first appearance."""
        expr = BinaryOp(
            "+",
            Param(ParamKind.partial(1), 0),
            BinaryOp("*", Param(ParamKind.partial(1), 1), Param(ParamKind.partial(0), 2)),
        )
        assert to_string(expr) == "C2_1 + C2_2 * C1_1"


class TestParse:
    """Test parsing."""

    def test_reparse_reference_expression(self, example_expr, schema):
        """Test rendering and reparsing give the same tree."""
        assert parse(to_string(example_expr), schema, n_features=1) == example_expr

    def test_reparse_random_expressions(self, schema):
        """Test rendering and reparsing is the identity on generated trees."""
        for seed in range(1000):
            expr = random_expression(schema, 2, 15, np.random.default_rng(seed))
            text = to_string(expr)
            assert parse(text, schema, n_features=2) == expr, text

    def test_aliasing(self, schema):
        """Test identical tokens name one terminal."""
        expr = parse("CS1 * v1 + CS1", schema)
        left, right = expr.left.left, expr.right
        assert isinstance(left, Param) and isinstance(right, Param)
        assert left.terminal_id == right.terminal_id == 0

    def test_distinct_tokens_are_distinct_terminals(self, schema):
        """Test different tokens of one kind get different ids."""
        expr = parse("CS1 + CS2", schema)
        assert expr.left.terminal_id == 0
        assert expr.right.terminal_id == 1

    def test_power_right_associative(self, schema):
        """Test ``a ^ b ^ c`` groups to the right."""
        expr = parse("v1 ^ 2 ^ 3", schema)
        assert expr == BinaryOp(
            "^", Variable(0), BinaryOp("^", Literal(2.0), Literal(3.0))
        )

    def test_double_star_is_power(self, schema):
        """Test ``**`` is accepted for powers."""
        assert parse("v1 ** 2", schema) == parse("v1 ^ 2", schema)

    def test_precedence(self, schema):
        """Test products bind tighter than sums."""
        expr = parse("v1 + v2 * v3", schema)
        assert expr == BinaryOp("+", Variable(0), BinaryOp("*", Variable(1), Variable(2)))

    def test_unary_minus(self, schema):
        """Test negative numbers and negated subexpressions."""
        assert parse("-3", schema) == Literal(-3.0)
        assert parse("-v1", schema) == BinaryOp("*", Literal(-1.0), Variable(0))

    def test_unary_minus_binds_looser_than_power(self, schema):
        """Test ``-a ^ b`` negates the power for numbers and names alike."""
        square_of_two = BinaryOp("^", Literal(2.0), Literal(2.0))
        assert parse("-2 ^ 2", schema) == BinaryOp("*", Literal(-1.0), square_of_two)
        assert parse("-v1 ^ 2", schema) == BinaryOp(
            "*", Literal(-1.0), BinaryOp("^", Variable(0), Literal(2.0))
        )
        assert parse("(-2) ^ 2", schema) == BinaryOp("^", Literal(-2.0), Literal(2.0))
        assert parse("v1 ^ -2", schema) == BinaryOp("^", Variable(0), Literal(-2.0))

    def test_scientific_literal(self, schema):
        """Test exponent notation."""
        assert parse("1.5e-3", schema) == Literal(0.0015)

    @pytest.mark.parametrize(
        "text, position",
        [
            ("v1 + ", 5),
            ("v1 $ 2", 3),
            ("sin(v1)", 0),
            ("(v1 + 2", 7),
            ("v1 v2", 3),
            ("-", 1),
        ],
    )
    def test_malformed_text_reports_position(self, schema, text, position):
        """Test errors name the offending position."""
        with pytest.raises(ExpressionParseError) as exc_info:
            parse(text, schema)
        assert exc_info.value.position == position
        assert f"(at position {position})" in str(exc_info.value)

    def test_wrong_arity(self, schema):
        """Test unary functions take exactly one argument."""
        with pytest.raises(ExpressionParseError):
            parse("exp(v1, v2)", schema)

    def test_category_out_of_range(self, schema):
        """Test partial parameters on a category the schema lacks."""
        with pytest.raises(ExpressionParseError) as exc_info:
            parse("C3_1 * v1", schema)
        assert "category 3" in str(exc_info.value)

    def test_variable_out_of_range(self, schema):
        """Test variables beyond the feature count."""
        with pytest.raises(ExpressionParseError):
            parse("v2", schema, n_features=1)
        with pytest.raises(ExpressionParseError):
            parse("v0", schema)

    def test_tokenize_positions(self):
        """Test token positions skip whitespace."""
        tokens = tokenize("CS1  * v1")
        assert [(t.kind, t.position) for t in tokens] == [
            ("name", 0),
            ("op", 5),
            ("name", 7),
            ("end", 9),
        ]
