"""Bundled symmetry algebras.

Two algebras cover the shipped example systems: the three-generator
Heisenberg algebra (position, momentum, and a central generator that images
to the identity) and the noncompact rank-one algebra with one compact
generator, with relations

    [x, p] = i*hbar*e
    [L_x, L_y] = -i*L_z,  [L_y, L_z] = -i*L_x,  [L_z, L_x] = i*L_y.
"""

from __future__ import annotations

from .opalg import SymmetryAlgebra
from .scalars import HBAR, I

__all__ = ["heisenberg_algebra", "so21_algebra"]


def heisenberg_algebra(hbar: float = 1.0) -> SymmetryAlgebra:
    """Heisenberg algebra h(1) on generators (x, p, e) with [x,p] = i*hbar*e.

    The central generator ``e`` carries the image-of-identity convention:
    inside monomials it is absorbed by any other factor and its pure powers
    collapse to the first power, so matrix realizations map it to the
    identity consistently.
    """
    return SymmetryAlgebra.from_brackets(
        name="heisenberg",
        generator_labels=("x", "p", "e"),
        brackets={("x", "p"): {"e": I * HBAR}},
        hermitian_flags=(True, True, True),
        central_flags=(False, False, True),
        unit_flags=(False, False, True),
        hbar=hbar,
    )


def so21_algebra(hbar: float = 1.0) -> SymmetryAlgebra:
    """Noncompact so(2,1) on Hermitian generators (L_x, L_y, L_z).

    ``L_y`` is the compact generator (discrete spectrum in the bundled
    representation); ``L_x`` and ``L_z`` are noncompact.
    """
    return SymmetryAlgebra.from_brackets(
        name="so21",
        generator_labels=("L_x", "L_y", "L_z"),
        brackets={
            ("L_x", "L_y"): {"L_z": -I},
            ("L_y", "L_z"): {"L_x": -I},
            ("L_z", "L_x"): {"L_y": I},
        },
        hermitian_flags=(True, True, True),
        hbar=hbar,
    )
