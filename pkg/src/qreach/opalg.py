"""Exact arithmetic in the enveloping algebra of a finite bracket algebra.

Elements are kept in normal-ordered form: every monomial is an ordered power
product ``L_1^{s_1} * ... * L_d^{s_d}`` in the algebra's declared generator
order.  Products are rewritten into this canonical form with the bracket rule
``L_b L_a = L_a L_b + [L_b, L_a]`` (for ``b`` after ``a`` in generator order),
applied recursively until no factor is out of order.

All coefficients are :class:`~qreach.scalars.Scalar` values, so closure
dimensions, span memberships and skew-Hermiticity tests are exact; no result
in this module depends on floating-point rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .scalars import Scalar

__all__ = [
    "AlgebraError",
    "AlgebraMismatchError",
    "SymmetryAlgebra",
    "Monomial",
    "OperatorPoly",
    "RealSpan",
    "multiply",
    "commutator",
    "adjoint",
    "is_skew_hermitian",
    "reduce_against",
]


class AlgebraError(ValueError):
    """Raised for inconsistent algebra definitions."""


class AlgebraMismatchError(AlgebraError):
    """Raised when operands belong to different algebras."""


@dataclass(frozen=True)
class Monomial:
    """Ordered power product of generators, identified by its exponent vector."""

    exponents: tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    @property
    def is_unit(self) -> bool:
        return not any(self.exponents)

    def word(self) -> tuple[int, ...]:
        """Expand to the sequence of generator indices, e.g. (0,0,1) for x^2*p."""
        out = []
        for idx, exp in enumerate(self.exponents):
            out.extend([idx] * exp)
        return tuple(out)

    def sort_key(self):
        return (self.degree, self.exponents)

    def label_str(self, labels: Sequence[str]) -> str:
        parts = []
        for idx, exp in enumerate(self.exponents):
            if exp == 1:
                parts.append(labels[idx])
            elif exp > 1:
                parts.append(f"{labels[idx]}^{exp}")
        return "*".join(parts) if parts else "1"


class SymmetryAlgebra:
    """A finite-dimensional bracket algebra with declared generator data.

    Parameters
    ----------
    name : str
        Identifier used in reports and error messages.
    generator_labels : sequence of str
        The generators in the fixed order used for normal ordering.
    structure_constants : mapping
        ``{(k, l): {m: scalar}}`` with labels or indices, meaning
        ``[L_k, L_l] = sum_m c * L_m``.  Both orientations must be present
        and antisymmetric; use :meth:`from_brackets` to fill the mirror
        entries automatically.
    hermitian_flags : sequence of bool
        Whether each generator is modelled as Hermitian.
    central_flags : sequence of bool, optional
        Generators whose bracket rows and columns vanish identically.
    unit_flags : sequence of bool, optional
        Central generators that act as the multiplicative unit inside
        monomials (the image-of-identity convention): within any monomial
        carrying other factors the generator is absorbed, and pure powers
        collapse to the first power.
    hbar : float
        Default numeric value substituted for the symbolic hbar when this
        algebra is realized as matrices.
    """

    def __init__(
        self,
        name: str,
        generator_labels: Sequence[str],
        structure_constants: Mapping,
        hermitian_flags: Sequence[bool],
        central_flags: Sequence[bool] | None = None,
        unit_flags: Sequence[bool] | None = None,
        hbar: float = 1.0,
    ):
        self.name = str(name)
        self.generator_labels = tuple(str(s) for s in generator_labels)
        d = len(self.generator_labels)
        if d == 0:
            raise AlgebraError("need at least one generator")
        if len(set(self.generator_labels)) != d:
            raise AlgebraError("generator labels must be unique")
        if hbar <= 0:
            raise AlgebraError("hbar must be positive")
        self.dim = d
        self.hbar = float(hbar)
        # exact value substituted for hbar in span computations; floats are
        # dyadic rationals so the conversion is lossless
        self.hbar_exact = Fraction(hbar)
        self.hermitian_flags = tuple(bool(b) for b in hermitian_flags)
        self.central_flags = tuple(
            bool(b) for b in (central_flags if central_flags is not None else [False] * d)
        )
        self.unit_flags = tuple(
            bool(b) for b in (unit_flags if unit_flags is not None else [False] * d)
        )
        for flags, label in ((self.hermitian_flags, "hermitian"), (self.central_flags, "central"), (self.unit_flags, "unit")):
            if len(flags) != d:
                raise AlgebraError(f"{label}_flags must have length {d}")
        for g in range(d):
            if self.unit_flags[g] and not self.central_flags[g]:
                raise AlgebraError(
                    f"generator {self.generator_labels[g]!r} flagged unit-like must also be central"
                )

        self._index = {lab: i for i, lab in enumerate(self.generator_labels)}
        self._constants = self._normalize_constants(structure_constants)
        self._check_antisymmetry()
        self._check_central_rows()
        self._check_jacobi()
        # maps a generator word to its normal-ordered term dictionary
        self._order_cache: dict[tuple[int, ...], dict[Monomial, Scalar]] = {}

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_brackets(
        cls,
        name: str,
        generator_labels: Sequence[str],
        brackets: Mapping,
        hermitian_flags: Sequence[bool],
        central_flags: Sequence[bool] | None = None,
        unit_flags: Sequence[bool] | None = None,
        hbar: float = 1.0,
    ) -> "SymmetryAlgebra":
        """Build an algebra giving each bracket once; mirrors are filled in."""
        labels = [str(s) for s in generator_labels]
        index = {lab: i for i, lab in enumerate(labels)}
        full: dict[tuple[int, int], dict[int, Scalar]] = {}
        for (k, l), row in brackets.items():
            ki = index[k] if isinstance(k, str) else int(k)
            li = index[l] if isinstance(l, str) else int(l)
            targets = {}
            for m, c in row.items():
                mi = index[m] if isinstance(m, str) else int(m)
                targets[mi] = Scalar.of(c)
            if (ki, li) in full or (li, ki) in full:
                raise AlgebraError(f"bracket ({k},{l}) specified twice")
            full[(ki, li)] = targets
            full[(li, ki)] = {m: -c for m, c in targets.items()}
        return cls(name, labels, full, hermitian_flags, central_flags, unit_flags, hbar)

    def _normalize_constants(self, structure_constants: Mapping) -> dict:
        d = self.dim
        table: dict[tuple[int, int], dict[int, Scalar]] = {}
        for key, row in structure_constants.items():
            k, l = key
            ki = self._index[k] if isinstance(k, str) else int(k)
            li = self._index[l] if isinstance(l, str) else int(l)
            if not (0 <= ki < d and 0 <= li < d):
                raise AlgebraError(f"bracket index {key!r} out of range")
            entry = {}
            for m, c in row.items():
                mi = self._index[m] if isinstance(m, str) else int(m)
                if not 0 <= mi < d:
                    raise AlgebraError(f"bracket target {m!r} out of range")
                c = Scalar.of(c)
                if not c.is_zero:
                    entry[mi] = c
            table[(ki, li)] = entry
        return table

    def _c(self, k: int, l: int) -> dict[int, Scalar]:
        return self._constants.get((k, l), {})

    def _check_antisymmetry(self):
        d = self.dim
        for k in range(d):
            if self._c(k, k):
                raise AlgebraError(f"[{self.generator_labels[k]},{self.generator_labels[k]}] must vanish")
            for l in range(d):
                ckl, clk = self._c(k, l), self._c(l, k)
                targets = set(ckl) | set(clk)
                for m in targets:
                    a = ckl.get(m, Scalar(0))
                    b = clk.get(m, Scalar(0))
                    if not (a + b).is_zero:
                        raise AlgebraError(
                            "structure constants are not antisymmetric at "
                            f"[{self.generator_labels[k]},{self.generator_labels[l]}]"
                        )

    def _check_central_rows(self):
        for g in range(self.dim):
            if not self.central_flags[g]:
                continue
            for other in range(self.dim):
                if self._c(g, other) or self._c(other, g):
                    raise AlgebraError(
                        f"central generator {self.generator_labels[g]!r} has a nonzero bracket"
                    )

    def _check_jacobi(self):
        d = self.dim
        for k in range(d):
            for l in range(k + 1, d):
                for m in range(l + 1, d):
                    acc: dict[int, Scalar] = {}
                    for a, b, c in ((k, l, m), (l, m, k), (m, k, l)):
                        for r, cab in self._c(a, b).items():
                            for s, crc in self._c(r, c).items():
                                acc[s] = acc.get(s, Scalar(0)) + cab * crc
                    for s, total in acc.items():
                        if not total.is_zero:
                            raise AlgebraError(
                                "structure constants violate the Jacobi identity at "
                                f"({self.generator_labels[k]},{self.generator_labels[l]},{self.generator_labels[m]})"
                            )

    # -- element constructors ---------------------------------------------------

    def zero(self) -> "OperatorPoly":
        return OperatorPoly(self, {})

    def unit(self, coefficient=1) -> "OperatorPoly":
        c = Scalar.of(coefficient)
        return OperatorPoly(self, {Monomial((0,) * self.dim): c})

    def generator(self, label: str) -> "OperatorPoly":
        idx = self._index.get(label)
        if idx is None:
            raise AlgebraError(f"unknown generator {label!r} in algebra {self.name!r}")
        exps = [0] * self.dim
        exps[idx] = 1
        return OperatorPoly(self, {Monomial(tuple(exps)): Scalar(1)})

    def generators(self) -> list["OperatorPoly"]:
        return [self.generator(lab) for lab in self.generator_labels]

    def index_of(self, label: str) -> int:
        return self._index[label]

    # -- normal ordering --------------------------------------------------------

    def canon_exponents(self, exps: Sequence[int]) -> tuple[int, ...]:
        """Apply the unit-image collapse to an exponent vector."""
        exps = list(exps)
        has_other = any(
            e > 0 for g, e in enumerate(exps) if not self.unit_flags[g]
        )
        for g in range(self.dim):
            if self.unit_flags[g] and exps[g] > 0:
                exps[g] = 0 if has_other else 1
        return tuple(exps)

    def _normal_order_word(self, word: tuple[int, ...]) -> dict[Monomial, Scalar]:
        cached = self._order_cache.get(word)
        if cached is not None:
            return cached
        descent = -1
        for i in range(len(word) - 1):
            if word[i] > word[i + 1]:
                descent = i
                break
        if descent < 0:
            exps = [0] * self.dim
            for g in word:
                exps[g] += 1
            result = {Monomial(self.canon_exponents(exps)): Scalar(1)}
        else:
            a, b = word[descent], word[descent + 1]
            swapped = word[:descent] + (b, a) + word[descent + 2 :]
            result = dict(self._normal_order_word(swapped))
            for m, c in self._c(a, b).items():
                contracted = word[:descent] + (m,) + word[descent + 2 :]
                for mono, sub in self._normal_order_word(contracted).items():
                    prev = result.get(mono, Scalar(0)) + c * sub
                    if prev.is_zero:
                        result.pop(mono, None)
                    else:
                        result[mono] = prev
        self._order_cache[word] = result
        return result

    def __repr__(self) -> str:
        return f"SymmetryAlgebra({self.name!r}, d={self.dim})"


class OperatorPoly:
    """A normal-ordered polynomial in the generators of a symmetry algebra.

    Immutable; supports ``+``, ``-``, ``*`` (polynomial or scalar), and the
    bracket helpers below.  Equality is exact term-map equality.
    """

    __slots__ = ("algebra", "_terms", "_hash")

    def __init__(self, algebra: SymmetryAlgebra, terms: Mapping[Monomial, Scalar]):
        self.algebra = algebra
        self._terms = {m: c for m, c in terms.items() if not c.is_zero}
        self._hash = None

    # -- views -------------------------------------------------------------

    def terms(self) -> dict[Monomial, Scalar]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        """Maximal term degree; 0 for the zero polynomial."""
        if not self._terms:
            return 0
        return max(m.degree for m in self._terms)

    def coefficient(self, mono: Monomial) -> Scalar:
        return self._terms.get(mono, Scalar(0))

    # -- arithmetic ----------------------------------------------------------

    def _require_same_algebra(self, other: "OperatorPoly"):
        if self.algebra is not other.algebra:
            raise AlgebraMismatchError(
                f"operands from different algebras: {self.algebra.name!r} vs {other.algebra.name!r}"
            )

    def __add__(self, other: "OperatorPoly") -> "OperatorPoly":
        self._require_same_algebra(other)
        acc = dict(self._terms)
        for m, c in other._terms.items():
            s = acc.get(m, Scalar(0)) + c
            if s.is_zero:
                acc.pop(m, None)
            else:
                acc[m] = s
        return OperatorPoly(self.algebra, acc)

    def __sub__(self, other: "OperatorPoly") -> "OperatorPoly":
        return self + (-other)

    def __neg__(self) -> "OperatorPoly":
        return OperatorPoly(self.algebra, {m: -c for m, c in self._terms.items()})

    def scale(self, factor) -> "OperatorPoly":
        c = Scalar.of(factor)
        return OperatorPoly(self.algebra, {m: c * v for m, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, OperatorPoly):
            self._require_same_algebra(other)
            acc: dict[Monomial, Scalar] = {}
            for m1, c1 in self._terms.items():
                w1 = m1.word()
                for m2, c2 in other._terms.items():
                    coeff = c1 * c2
                    ordered = self.algebra._normal_order_word(w1 + m2.word())
                    for mono, c in ordered.items():
                        s = acc.get(mono, Scalar(0)) + coeff * c
                        if s.is_zero:
                            acc.pop(mono, None)
                        else:
                            acc[mono] = s
            return OperatorPoly(self.algebra, acc)
        return self.scale(other)

    def __rmul__(self, other):
        # scalars commute with everything, so the one-sided rule is enough
        return self.scale(other)

    def __truediv__(self, other):
        return self.scale(Fraction(1, 1) / Fraction(other))

    # -- involution ----------------------------------------------------------

    def adjoint(self) -> "OperatorPoly":
        """Hermitian adjoint: reverse factors, conjugate, apply generator flags."""
        alg = self.algebra
        acc: dict[Monomial, Scalar] = {}
        for m, c in self._terms.items():
            word = m.word()
            sign = 1
            for g in word:
                if not alg.hermitian_flags[g]:
                    sign = -sign
            coeff = c.conjugate() if sign == 1 else -c.conjugate()
            for mono, s in alg._normal_order_word(word[::-1]).items():
                tot = acc.get(mono, Scalar(0)) + coeff * s
                if tot.is_zero:
                    acc.pop(mono, None)
                else:
                    acc[mono] = tot
        return OperatorPoly(alg, acc)

    def is_skew_hermitian(self) -> bool:
        return (self.adjoint() + self).is_zero

    # -- protocol --------------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, OperatorPoly):
            return NotImplemented
        return self.algebra is other.algebra and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((id(self.algebra), frozenset(self._terms.items())))
        return self._hash

    def sorted_terms(self) -> list[tuple[Monomial, Scalar]]:
        return sorted(self._terms.items(), key=lambda kv: kv[0].sort_key())

    def canonical_str(self) -> str:
        """Deterministic string form, reparseable by the expression parser."""
        if not self._terms:
            return "0"
        labels = self.algebra.generator_labels
        pieces = []
        for mono, coeff in self.sorted_terms():
            if mono.is_unit:
                pieces.append(f"({coeff})")
            else:
                pieces.append(f"({coeff})*{mono.label_str(labels)}")
        return " + ".join(pieces)

    def __str__(self) -> str:
        return self.canonical_str()

    def __repr__(self) -> str:
        return f"OperatorPoly[{self.algebra.name}]({self.canonical_str()})"


# -- module-level operation surface ---------------------------------------------


def multiply(p: OperatorPoly, q: OperatorPoly) -> OperatorPoly:
    """Normal-ordered product of two polynomials over the same algebra."""
    return p * q


def commutator(p: OperatorPoly, q: OperatorPoly) -> OperatorPoly:
    """Exact bracket ``p*q - q*p`` in canonical form."""
    out = p * q - q * p
    if not out.is_zero and p.degree >= 1 and q.degree >= 1:
        # top symbols commute, so the bracket always loses at least one degree
        assert out.degree <= p.degree + q.degree - 1
    return out


def adjoint(p: OperatorPoly) -> OperatorPoly:
    return p.adjoint()


def is_skew_hermitian(p: OperatorPoly) -> bool:
    return p.is_skew_hermitian()


_FZERO_F = Fraction(0)


def _coordinates(p: OperatorPoly) -> dict[tuple, Fraction]:
    """Realified exact coordinates: one key per (monomial, re/im part).

    Powers of hbar are evaluated at the algebra's exact rational hbar, so
    span dimensions agree with the physical algebra where hbar is a fixed
    positive constant rather than an independent formal direction.
    """
    hb = p.algebra.hbar_exact
    coords: dict[tuple, Fraction] = {}
    for mono, coeff in p.items():
        base = mono.sort_key()
        re_total = _FZERO_F
        im_total = _FZERO_F
        for power, re, im in coeff.items():
            weight = hb**power
            re_total += re * weight
            im_total += im * weight
        if re_total:
            coords[(base, 0)] = re_total
        if im_total:
            coords[(base, 1)] = im_total
    return coords


class _Row:
    __slots__ = ("pivot", "vec", "combo", "poly")

    def __init__(self, pivot, vec, combo, poly):
        self.pivot = pivot
        self.vec = vec
        self.combo = combo
        self.poly = poly


class RealSpan:
    """Incremental real-linear span of polynomials with exact elimination.

    Maintains a reduced echelon form over Q so membership tests, residuals
    and combination coefficients are exact.  Real span semantics: the real
    and imaginary parts of each (monomial, hbar-power) coordinate are
    separate axes, matching real linear combinations of skew-Hermitian
    elements.
    """

    def __init__(self, algebra: SymmetryAlgebra):
        self.algebra = algebra
        self._rows: list[_Row] = []
        self._attempts = 0

    @property
    def dim(self) -> int:
        return len(self._rows)

    def _reduce_vec(self, vec: dict, poly: OperatorPoly):
        combo: dict[int, Fraction] = {}
        for row in self._rows:
            c = vec.get(row.pivot)
            if not c:
                continue
            for key, val in row.vec.items():
                nv = vec.get(key, _FZERO_F) - c * val
                if nv:
                    vec[key] = nv
                else:
                    vec.pop(key, None)
            for k, val in row.combo.items():
                nv = combo.get(k, _FZERO_F) + c * val
                if nv:
                    combo[k] = nv
                else:
                    combo.pop(k, None)
            poly = poly - row.poly.scale(c)
        return vec, combo, poly

    def reduce(self, p: OperatorPoly) -> tuple[OperatorPoly, dict[int, Fraction]]:
        """Return (residual, coefficients over previously inserted elements).

        Membership is decided on the exact coordinate vector; a residual
        whose coordinates all vanish is the zero element of the span even
        when its symbolic hbar bookkeeping has not collapsed.
        """
        if p.algebra is not self.algebra:
            raise AlgebraMismatchError("polynomial from a different algebra")
        vec = _coordinates(p)
        vec, combo, residual = self._reduce_vec(vec, p)
        if not vec:
            return self.algebra.zero(), combo
        return residual, combo

    def contains(self, p: OperatorPoly) -> bool:
        residual, _ = self.reduce(p)
        return residual.is_zero

    def add(self, p: OperatorPoly) -> OperatorPoly | None:
        """Insert a polynomial; return the normalized residual, or None if dependent."""
        if p.algebra is not self.algebra:
            raise AlgebraMismatchError("polynomial from a different algebra")
        index = self._attempts
        self._attempts += 1
        vec = _coordinates(p)
        vec, combo, residual = self._reduce_vec(vec, p)
        if not vec:
            return None
        pivot = max(vec)
        scale = vec[pivot]
        inv = Fraction(1, 1) / scale
        vec = {k: v * inv for k, v in vec.items()}
        combo = {k: -v * inv for k, v in combo.items()}
        combo[index] = inv
        residual = residual.scale(inv)
        new_row = _Row(pivot, vec, combo, residual)
        # keep reduced form: clear the new pivot from every existing row
        for row in self._rows:
            c = row.vec.get(pivot)
            if not c:
                continue
            for key, val in vec.items():
                nv = row.vec.get(key, _FZERO_F) - c * val
                if nv:
                    row.vec[key] = nv
                else:
                    row.vec.pop(key, None)
            for k, val in combo.items():
                nv = row.combo.get(k, _FZERO_F) - c * val
                if nv:
                    row.combo[k] = nv
                else:
                    row.combo.pop(k, None)
            row.poly = row.poly - residual.scale(c)
        self._rows.append(new_row)
        return residual


def reduce_against(
    v: OperatorPoly, basis: Iterable[OperatorPoly]
) -> tuple[OperatorPoly, list[Fraction]]:
    """Project ``v`` onto the real span of ``basis``.

    Returns the residual (zero iff ``v`` lies in the span) and the real
    coefficients expressing the projected part over the given basis list.
    """
    basis = list(basis)
    span = RealSpan(v.algebra)
    for b in basis:
        span.add(b)
    residual, combo = span.reduce(v)
    coeffs = [combo.get(k, _FZERO_F) for k in range(len(basis))]
    return residual, coeffs
