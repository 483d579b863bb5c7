"""Bracket words over control Hamiltonians and drift-bracket applications.

A word describes a target flow generator built from the controls H_1..H_m
by sums, scalings, nested brackets, and applications of ``ad0`` (bracket
with the drift H_0).  Words are what the schedule synthesizer compiles; the
helpers here also evaluate a word to its exact polynomial value and rewrite
drift-bracket targets as combinations of pure control words, which is the
algebraic core of recreating drift-generated directions from adjustable
flows alone.

Word syntax::

    word  := item ('+' item)*
    item  := [ '-' ] [ INT [ '/' INT ] '*' ] prim
    prim  := 'H' INT | 'ad0(' word ')' | '[' word ',' word ']' | '(' word ')'

Controls are 1-based: ``H1`` is the first control.  Depth counts nesting
levels: a bare control has depth 0, ``[H1,H2]`` depth 1, and each bracket
or ``ad0`` wrapper adds one; words deeper than 3 are rejected because the
product-formula error compounds multiplicatively through nesting.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .opalg import OperatorPoly, RealSpan, commutator

__all__ = [
    "Ctl",
    "Bracket",
    "Sum",
    "Scale",
    "Ad",
    "Word",
    "WordError",
    "word_depth",
    "word_str",
    "contains_ad",
    "evaluate_word",
    "parse_word",
    "decompose_over_control_words",
]

MAX_WORD_DEPTH = 3


class WordError(ValueError):
    pass


@dataclass(frozen=True)
class Ctl:
    index: int  # 0-based control index


@dataclass(frozen=True)
class Bracket:
    left: "Word"
    right: "Word"


@dataclass(frozen=True)
class Sum:
    left: "Word"
    right: "Word"


@dataclass(frozen=True)
class Scale:
    coefficient: Fraction
    inner: "Word"


@dataclass(frozen=True)
class Ad:
    inner: "Word"


Word = Union[Ctl, Bracket, Sum, Scale, Ad]


def word_depth(word: Word) -> int:
    if isinstance(word, Ctl):
        return 0
    if isinstance(word, Scale):
        return word_depth(word.inner)
    if isinstance(word, Sum):
        return max(word_depth(word.left), word_depth(word.right))
    if isinstance(word, Bracket):
        return 1 + max(word_depth(word.left), word_depth(word.right))
    if isinstance(word, Ad):
        return 1 + word_depth(word.inner)
    raise TypeError(f"not a word: {word!r}")


def contains_ad(word: Word) -> bool:
    if isinstance(word, Ctl):
        return False
    if isinstance(word, Scale):
        return contains_ad(word.inner)
    if isinstance(word, (Sum, Bracket)):
        return contains_ad(word.left) or contains_ad(word.right)
    if isinstance(word, Ad):
        return True
    raise TypeError(f"not a word: {word!r}")


def word_str(word: Word) -> str:
    if isinstance(word, Ctl):
        return f"H{word.index + 1}"
    if isinstance(word, Scale):
        return f"{word.coefficient}*({word_str(word.inner)})"
    if isinstance(word, Sum):
        return f"{word_str(word.left)} + {word_str(word.right)}"
    if isinstance(word, Bracket):
        return f"[{word_str(word.left)},{word_str(word.right)}]"
    if isinstance(word, Ad):
        return f"ad0({word_str(word.inner)})"
    raise TypeError(f"not a word: {word!r}")


def evaluate_word(word: Word, H0: OperatorPoly, controls: Sequence[OperatorPoly]) -> OperatorPoly:
    """Exact polynomial value of a word."""
    if isinstance(word, Ctl):
        if not 0 <= word.index < len(controls):
            raise WordError(f"control H{word.index + 1} out of range (m={len(controls)})")
        return controls[word.index]
    if isinstance(word, Scale):
        return evaluate_word(word.inner, H0, controls).scale(word.coefficient)
    if isinstance(word, Sum):
        return evaluate_word(word.left, H0, controls) + evaluate_word(word.right, H0, controls)
    if isinstance(word, Bracket):
        return commutator(
            evaluate_word(word.left, H0, controls),
            evaluate_word(word.right, H0, controls),
        )
    if isinstance(word, Ad):
        return commutator(H0, evaluate_word(word.inner, H0, controls))
    raise TypeError(f"not a word: {word!r}")


# -- parsing ------------------------------------------------------------------


class _WordParser:
    def __init__(self, src: str, n_controls: int):
        self.src = src
        self.n = n_controls
        self.pos = 0

    def error(self, message: str):
        raise WordError(f"{message} at position {self.pos}")

    def skip_ws(self):
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def take(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def integer(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.src) and self.src[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            self.error("expected an integer")
        return int(self.src[start : self.pos])

    def parse(self) -> Word:
        word = self.word()
        self.skip_ws()
        if self.pos != len(self.src):
            self.error("trailing input")
        return word

    def word(self) -> Word:
        out = self.item()
        while self.peek() == "+":
            self.take("+")
            out = Sum(out, self.item())
        return out

    def item(self) -> Word:
        negative = False
        if self.peek() == "-":
            self.take("-")
            negative = True
        coeff = None
        if self.peek().isdigit():
            num = self.integer()
            den = 1
            if self.peek() == "/":
                self.take("/")
                den = self.integer()
            coeff = Fraction(num, den)
            self.take("*")
        prim = self.prim()
        if negative:
            coeff = -(coeff if coeff is not None else Fraction(1))
        if coeff is not None and coeff != 1:
            return Scale(coeff, prim)
        return prim

    def prim(self) -> Word:
        ch = self.peek()
        if ch == "[":
            self.take("[")
            left = self.word()
            self.take(",")
            right = self.word()
            self.take("]")
            return Bracket(left, right)
        if ch == "(":
            self.take("(")
            inner = self.word()
            self.take(")")
            return inner
        if ch == "a":
            self.skip_ws()
            if not self.src.startswith("ad0(", self.pos):
                self.error("expected 'ad0('")
            self.pos += len("ad0(")
            inner = self.word()
            self.take(")")
            return Ad(inner)
        if ch == "H":
            self.take("H")
            k = self.integer()
            if not 1 <= k <= self.n:
                self.error(f"control H{k} out of range (m={self.n})")
            return Ctl(k - 1)
        self.error("expected a word")


def parse_word(src: str, n_controls: int) -> Word:
    """Parse the textual word syntax; enforces the depth budget."""
    word = _WordParser(src, n_controls).parse()
    depth = word_depth(word)
    if depth > MAX_WORD_DEPTH:
        raise WordError(f"word depth {depth} exceeds the supported maximum {MAX_WORD_DEPTH}")
    return word


# -- rewriting over control words ------------------------------------------------


def decompose_over_control_words(
    target: OperatorPoly,
    controls: Sequence[OperatorPoly],
    degree_cap: int,
    depth_cap: int = MAX_WORD_DEPTH,
    max_rounds: int = 6,
) -> list[tuple[Fraction, Word]] | None:
    """Express ``target`` as a real combination of pure control bracket words.

    Searches breadth-first over nested brackets of the controls (within the
    degree cap and depth budget), tracking the word that produced each new
    span direction.  Returns ``[(coefficient, word), ...]`` with
    ``sum(c * value(word)) == target`` exactly, or None when the target is
    outside the searched span.
    """
    algebra = target.algebra
    span = RealSpan(algebra)
    # maps the span's insertion index to the word that produced it
    attempt_words: dict[int, Word] = {}

    def consider(word: Word, value: OperatorPoly) -> bool:
        if value.is_zero or value.degree > degree_cap:
            return False
        attempt = span._attempts
        if span.add(value) is None:
            return False
        attempt_words[attempt] = word
        return True

    fresh: list[tuple[Word, OperatorPoly, int]] = []
    for k, h in enumerate(controls):
        if consider(Ctl(k), h):
            fresh.append((Ctl(k), h, 0))

    all_items = list(fresh)
    for _ in range(max_rounds):
        new_items: list[tuple[Word, OperatorPoly, int]] = []
        for word_a, val_a, depth_a in fresh:
            for word_b, val_b, depth_b in all_items:
                depth = 1 + max(depth_a, depth_b)
                if depth > depth_cap:
                    continue
                br = commutator(val_a, val_b)
                candidate = Bracket(word_a, word_b)
                if consider(candidate, br):
                    new_items.append((candidate, br, depth))
        if not new_items:
            break
        all_items.extend(new_items)
        fresh = new_items

    residual, combo = span.reduce(target)
    if not residual.is_zero:
        return None
    out: list[tuple[Fraction, Word]] = []
    for idx, coeff in sorted(combo.items()):
        if coeff:
            out.append((coeff, attempt_words[idx]))
    return out
