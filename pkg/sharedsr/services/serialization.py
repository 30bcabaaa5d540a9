"""
Text form of expressions.

Tokens: variables ``v1..vN``, shared parameters ``CS<j>``, parameters
partially shared on category ``c`` as ``C<c>_<j>`` (1-based), non-shared
parameters ``CI<j>``. ``j`` numbers the distinct terminals of one kind in
first-appearance order. Infix operators bind as ``^`` > ``* /`` > ``+ -``;
functions are written ``name(arg)``.
"""

import logging
import re
from dataclasses import dataclass

from sharedsr.exceptions import ExpressionParseError
from sharedsr.models.dataset import CategorySchema
from sharedsr.models.expression import (
    UNARY_OPERATORS,
    BinaryOp,
    Expression,
    Literal,
    Param,
    ParamKind,
    UnaryOp,
    Variable,
    terminal_labels,
)

logger = logging.getLogger(__name__)

PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def format_literal(value: float) -> str:
    text = repr(float(value)).removesuffix(".0")
    return f"({text})" if value < 0 or text.startswith("-") else text


def to_string(expr: Expression) -> str:
    """Render an expression in the infix grammar accepted by ``parse``."""
    labels = terminal_labels(expr)

    def _render(node: Expression) -> str:
        if isinstance(node, Variable):
            return f"v{node.index + 1}"
        if isinstance(node, Literal):
            return format_literal(node.value)
        if isinstance(node, Param):
            return labels[node.terminal_id]
        if isinstance(node, UnaryOp):
            return f"{node.op}({_render(node.child)})"
        return f"{_operand(node, node.left, False)} {node.op} {_operand(node, node.right, True)}"

    def _operand(parent: BinaryOp, child: Expression, right: bool) -> str:
        text = _render(child)
        if not isinstance(child, BinaryOp):
            return text
        mine, theirs = PRECEDENCE[parent.op], PRECEDENCE[child.op]
        # pow is always bracketed when nested; same-level right operands too
        if parent.op == "^" or child.op == "^" or theirs < mine or (right and theirs == mine):
            return f"({text})"
        return text

    return _render(expr)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int


TOKEN_PATTERN = re.compile(
    r"""
    (?P<ws>\s+)
    |(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
    |(?P<pow>\*\*|\^)
    |(?P<op>[-+*/])
    |(?P<lparen>\()
    |(?P<rparen>\))
    |(?P<comma>,)
    |(?P<name>[A-Za-z_][A-Za-z_0-9]*)
    """,
    re.VERBOSE,
)

SHARED_TOKEN = re.compile(r"CS(\d+)")
PARTIAL_TOKEN = re.compile(r"C(\d+)_(\d+)")
NONSHARED_TOKEN = re.compile(r"CI(\d+)")
VARIABLE_TOKEN = re.compile(r"v(\d+)")


def tokenize(text: str) -> list[Token]:
    tokens = []
    position = 0
    while position < len(text):
        match = TOKEN_PATTERN.match(text, position)
        if match is None:
            raise ExpressionParseError(f"unexpected character {text[position]!r}", position)
        kind = match.lastgroup
        assert kind is not None
        if kind != "ws":
            if kind == "pow":
                tokens.append(Token("op", "^", position))
            else:
                tokens.append(Token(kind, match.group(), position))
        position = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    """Recursive-descent parser over the token list."""

    def __init__(self, text: str, schema: CategorySchema, n_features: int | None):
        self.tokens = tokenize(text)
        self.index = 0
        self.schema = schema
        self.n_features = n_features
        self.terminal_ids: dict[str, int] = {}

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.current
        self.index += 1
        return token

    def expect(self, kind: str) -> Token:
        if self.current.kind != kind:
            found = self.current.text or "end of input"
            raise ExpressionParseError(f"expected {kind}, found {found!r}", self.current.position)
        return self.advance()

    def parse(self) -> Expression:
        expr = self.sum()
        if self.current.kind != "end":
            raise ExpressionParseError(f"unexpected token {self.current.text!r}", self.current.position)
        return expr

    def sum(self) -> Expression:
        left = self.product()
        while self.current.kind == "op" and self.current.text in "+-":
            op = self.advance().text
            left = BinaryOp(op, left, self.product())
        return left

    def product(self) -> Expression:
        left = self.unary()
        while self.current.kind == "op" and self.current.text in "*/":
            op = self.advance().text
            left = BinaryOp(op, left, self.unary())
        return left

    def unary(self) -> Expression:
        if self.current.kind == "op" and self.current.text == "-":
            self.advance()
            # minus binds looser than ^ for numbers and names alike
            if self.current.kind == "number" and self.tokens[self.index + 1].text != "^":
                return Literal(-float(self.advance().text))
            return BinaryOp("*", Literal(-1.0), self.unary())
        return self.power(self.atom())

    def power(self, base: Expression) -> Expression:
        if self.current.kind == "op" and self.current.text == "^":
            self.advance()
            # right associative
            return BinaryOp("^", base, self.unary())
        return base

    def atom(self) -> Expression:
        token = self.current
        if token.kind == "number":
            self.advance()
            return Literal(float(token.text))
        if token.kind == "lparen":
            self.advance()
            inner = self.sum()
            self.expect("rparen")
            return inner
        if token.kind == "name":
            self.advance()
            if token.text in UNARY_OPERATORS:
                return self.call(token)
            return self.terminal(token)
        found = token.text or "end of input"
        raise ExpressionParseError(f"unexpected token {found!r}", token.position)

    def call(self, token: Token) -> Expression:
        self.expect("lparen")
        args = [self.sum()]
        while self.current.kind == "comma":
            self.advance()
            args.append(self.sum())
        self.expect("rparen")
        if len(args) != 1:
            raise ExpressionParseError(
                f"{token.text} takes 1 argument, got {len(args)}", token.position
            )
        return UnaryOp(token.text, args[0])

    def terminal(self, token: Token) -> Expression:
        text = token.text
        if match := VARIABLE_TOKEN.fullmatch(text):
            index = int(match.group(1)) - 1
            if index < 0 or (self.n_features is not None and index >= self.n_features):
                raise ExpressionParseError(f"variable {text} out of range", token.position)
            return Variable(index)
        if SHARED_TOKEN.fullmatch(text):
            kind = ParamKind.shared()
        elif NONSHARED_TOKEN.fullmatch(text):
            kind = ParamKind.nonshared()
        elif match := PARTIAL_TOKEN.fullmatch(text):
            category = int(match.group(1)) - 1
            if not 0 <= category < self.schema.n_categories:
                raise ExpressionParseError(
                    f"{text} refers to category {category + 1} but the schema "
                    f"has {self.schema.n_categories}",
                    token.position,
                )
            kind = ParamKind.partial(category)
        else:
            raise ExpressionParseError(f"unknown token {text!r}", token.position)
        # repeated tokens name one tied terminal
        terminal_id = self.terminal_ids.setdefault(text, len(self.terminal_ids))
        return Param(kind, terminal_id)


def parse(text: str, schema: CategorySchema, n_features: int | None = None) -> Expression:
    """
    Parse expression text.

    Args:
        text: Expression in the infix grammar.
        schema: Category schema the partial parameters refer to.
        n_features: If given, variables beyond it are rejected.

    Returns:
        Expression with dense terminal ids in first-appearance order.

    Raises:
        ExpressionParseError: On unknown tokens, wrong function arity, or a
            category index outside the schema.
    """
    expr = _Parser(text, schema, n_features).parse()
    logger.debug("Parsed expression", extra={"expression": text})
    return expr
