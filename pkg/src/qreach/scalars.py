"""Exact complex scalars with attached integer powers of hbar.

The symbolic layer of the package never touches floating point: every
coefficient is a Gaussian rational (pair of ``fractions.Fraction``) times an
integer power of hbar, and sums of such terms.  Floats only appear when a
scalar is evaluated against a concrete numeric hbar via :meth:`Scalar.to_complex`.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Integral, Rational

__all__ = ["Scalar", "ZERO", "ONE", "I", "HBAR"]

_FZERO = Fraction(0)
_FONE = Fraction(1)


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (Integral, Rational, float)):
        # floats are exact binary rationals, so this conversion is lossless
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


class Scalar:
    """An element of Q(i)[hbar, hbar^-1], kept in canonical form.

    Internally a sorted tuple of ``(hbar_power, real, imag)`` triples with
    nonzero Gaussian-rational coefficients.  Instances are immutable and
    hashable, so they can serve as dictionary values inside operator
    polynomials without defensive copying.
    """

    __slots__ = ("_terms",)

    def __init__(self, real=0, imag=0, hbar_power: int = 0):
        re = _as_fraction(real)
        im = _as_fraction(imag)
        if re == 0 and im == 0:
            self._terms = ()
        else:
            self._terms = ((int(hbar_power), re, im),)

    @classmethod
    def _raw(cls, terms) -> "Scalar":
        obj = object.__new__(cls)
        obj._terms = tuple(sorted((p, re, im) for p, re, im in terms if re or im))
        return obj

    @classmethod
    def of(cls, value) -> "Scalar":
        """Coerce an int, Fraction, float, complex or Scalar to a Scalar."""
        if isinstance(value, Scalar):
            return value
        if isinstance(value, complex):
            return cls(_as_fraction(value.real), _as_fraction(value.imag))
        return cls(_as_fraction(value))

    # -- queries ------------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def items(self):
        """Iterate ``(hbar_power, real, imag)`` triples in canonical order."""
        return iter(self._terms)

    def to_complex(self, hbar: float = 1.0) -> complex:
        """Evaluate at a numeric hbar (floats enter here and only here)."""
        if hbar <= 0:
            raise ValueError("hbar must be positive")
        total = 0j
        for p, re, im in self._terms:
            total += complex(re, im) * hbar**p
        return total

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other) -> "Scalar":
        other = Scalar.of(other)
        acc = {p: (re, im) for p, re, im in self._terms}
        for p, re, im in other._terms:
            ore, oim = acc.get(p, (_FZERO, _FZERO))
            acc[p] = (ore + re, oim + im)
        return Scalar._raw((p, re, im) for p, (re, im) in acc.items())

    __radd__ = __add__

    def __neg__(self) -> "Scalar":
        return Scalar._raw((p, -re, -im) for p, re, im in self._terms)

    def __sub__(self, other) -> "Scalar":
        return self + (-Scalar.of(other))

    def __rsub__(self, other) -> "Scalar":
        return Scalar.of(other) + (-self)

    def __mul__(self, other) -> "Scalar":
        other = Scalar.of(other)
        acc: dict[int, tuple[Fraction, Fraction]] = {}
        for p1, re1, im1 in self._terms:
            for p2, re2, im2 in other._terms:
                p = p1 + p2
                re = re1 * re2 - im1 * im2
                im = re1 * im2 + im1 * re2
                ore, oim = acc.get(p, (_FZERO, _FZERO))
                acc[p] = (ore + re, oim + im)
        return Scalar._raw((p, re, im) for p, (re, im) in acc.items())

    __rmul__ = __mul__

    def conjugate(self) -> "Scalar":
        # hbar is a positive real unit, so only i flips sign
        return Scalar._raw((p, re, -im) for p, re, im in self._terms)

    # -- protocol ------------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, (Scalar, int, Fraction, float, complex)):
            return NotImplemented
        return self._terms == Scalar.of(other)._terms

    def __hash__(self):
        return hash(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        pieces = []
        for p, re, im in self._terms:
            if re:
                pieces.append(_product_str(re, None, p))
            if im:
                pieces.append(_product_str(im, "i", p))
        out = pieces[0]
        for piece in pieces[1:]:
            if piece.startswith("-"):
                out += " - " + piece[1:]
            else:
                out += " + " + piece
        return out

    def __repr__(self) -> str:
        return f"Scalar({self})"


def _product_str(q: Fraction, symbol, power: int) -> str:
    parts = []
    if symbol is None and power == 0:
        return str(q)
    if q == -1:
        sign = "-"
    elif q == 1:
        sign = ""
    else:
        sign = None
    if sign is None:
        parts.append(str(q))
    if symbol is not None:
        parts.append(symbol)
    if power == 1:
        parts.append("hbar")
    elif power != 0:
        parts.append(f"hbar^{power}")
    body = "*".join(parts)
    if sign is not None:
        return sign + body
    return body


ZERO = Scalar(0)
ONE = Scalar(1)
I = Scalar(0, 1)
HBAR = Scalar(1, 0, hbar_power=1)
