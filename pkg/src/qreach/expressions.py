"""Parser for operator expressions over a symmetry algebra.

Grammar (whitespace-insensitive)::

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor | '/' INT)*
    factor := ('+' | '-') factor | atom ('^' exponent)?
    atom   := INT | NAME | '(' expr ')'

NAME resolves, in order, to a generator label, the imaginary unit ``i``,
the symbol ``hbar``, or a named numeric parameter.  Generator powers must be
nonnegative integers; ``hbar`` additionally admits negative exponents so the
canonical strings of skew Hamiltonians (which carry 1/hbar factors) stay
inside the grammar.  The noncommutative product is left-associative and
order-preserving.
"""

from __future__ import annotations

from fractions import Fraction

from .opalg import OperatorPoly, SymmetryAlgebra
from .scalars import Scalar

__all__ = ["ExpressionError", "parse_expression", "parse_scalar"]


class ExpressionError(ValueError):
    """Parse failure with the offending position (0-based)."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


_SYMBOLS = set("+-*/^()")


def _tokenize(src: str):
    tokens = []
    i = 0
    n = len(src)
    while i < n:
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _SYMBOLS:
            tokens.append((ch, ch, i))
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            tokens.append(("INT", src[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(("NAME", src[i:j], i))
            i = j
            continue
        raise ExpressionError(f"unexpected character {ch!r}", i)
    tokens.append(("END", "", n))
    return tokens


class _Parser:
    def __init__(self, src: str, algebra: SymmetryAlgebra, params: dict | None):
        self.src = src
        self.algebra = algebra
        self.params = dict(params or {})
        self.tokens = _tokenize(src)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str):
        tok = self.peek()
        if tok[0] != kind:
            raise ExpressionError(f"expected {kind!r}, found {tok[1]!r}" if tok[1] else f"expected {kind!r}", tok[2])
        return self.advance()

    # -----------------------------------------------------------------

    def parse(self) -> OperatorPoly:
        value = self.expr()
        tok = self.peek()
        if tok[0] != "END":
            raise ExpressionError(f"unexpected token {tok[1]!r}", tok[2])
        return value

    def expr(self) -> OperatorPoly:
        value = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> OperatorPoly:
        value = self.factor()
        while self.peek()[0] in ("*", "/"):
            op, _, pos = self.advance()
            if op == "*":
                value = value * self.factor()
            else:
                tok = self.peek()
                if tok[0] != "INT":
                    raise ExpressionError("denominator must be an integer literal", tok[2])
                den = int(self.advance()[1])
                if den == 0:
                    raise ExpressionError("division by zero", pos)
                value = value.scale(Fraction(1, den))
        return value

    def factor(self) -> OperatorPoly:
        tok = self.peek()
        if tok[0] in ("+", "-"):
            self.advance()
            inner = self.factor()
            return inner if tok[0] == "+" else -inner
        value, is_hbar = self.atom()
        if self.peek()[0] == "^":
            _, _, pos = self.advance()
            negative = False
            if self.peek()[0] == "-":
                negative = True
                self.advance()
            tok = self.peek()
            if tok[0] != "INT":
                raise ExpressionError("exponent must be an integer", tok[2])
            exp = int(self.advance()[1])
            if negative:
                if not is_hbar:
                    raise ExpressionError("negative powers are only supported for hbar", pos)
                return self.algebra.unit(Scalar(1, 0, hbar_power=-exp))
            if is_hbar:
                return self.algebra.unit(Scalar(1, 0, hbar_power=exp))
            out = self.algebra.unit(1)
            for _ in range(exp):
                out = out * value
            return out
        return value

    def atom(self) -> tuple[OperatorPoly, bool]:
        """Returns (value, is_bare_hbar) so '^' can special-case hbar powers."""
        tok = self.advance()
        kind, text, pos = tok
        if kind == "INT":
            return self.algebra.unit(int(text)), False
        if kind == "(":
            value = self.expr()
            self.expect(")")
            return value, False
        if kind == "NAME":
            if text in self.algebra.generator_labels:
                return self.algebra.generator(text), False
            if text == "i":
                return self.algebra.unit(Scalar(0, 1)), False
            if text == "hbar":
                return self.algebra.unit(Scalar(1, 0, hbar_power=1)), True
            if text in self.params:
                return self.algebra.unit(Scalar.of(self.params[text])), False
            raise ExpressionError(f"unknown symbol {text!r}", pos)
        if kind == "END":
            raise ExpressionError("unexpected end of expression", pos)
        raise ExpressionError(f"unexpected token {text!r}", pos)


def parse_expression(src: str, algebra: SymmetryAlgebra, params: dict | None = None) -> OperatorPoly:
    """Parse ``src`` to a normal-ordered polynomial over ``algebra``."""
    return _Parser(src, algebra, params).parse()


def parse_scalar(src: str, params: dict | None = None) -> Scalar:
    """Parse a scalar-only expression (no generators); used by custom algebras."""
    scratch = SymmetryAlgebra(
        name="_scalar_scratch",
        generator_labels=("_unused",),
        structure_constants={},
        hermitian_flags=(True,),
    )
    poly = _Parser(src, scratch, params).parse()
    for mono, coeff in poly.items():
        if not mono.is_unit:
            raise ExpressionError("expected a pure scalar expression", 0)
        return coeff
    return Scalar(0)
