"""Finite truncated matrix representations and smooth test states.

Noncompact generators have no finite-dimensional faithful representation;
truncating a ladder construction to N levels reproduces every bracket
relation exactly on an interior index range and concentrates the defect at
the truncation edge.  States used in convergence and rank studies are built
with rapidly decaying coefficient profiles so they live well inside the
interior and barely feel the edge.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .opalg import AlgebraMismatchError, Monomial, OperatorPoly, SymmetryAlgebra
from .presets import heisenberg_algebra, so21_algebra

__all__ = [
    "TruncatedRep",
    "StateVector",
    "TruncationLeakageWarning",
    "heisenberg_rep",
    "so21_discrete_rep",
    "realize",
    "skew_project",
    "smooth_state",
    "basis_state",
    "leakage_fraction",
    "check_leakage",
    "relation_residual",
    "export_matrix_csv",
]

RELATION_TOL = 1e-12
LEAKAGE_THRESHOLD = 1e-6


class TruncationLeakageWarning(UserWarning):
    """A state carries non-negligible population at the truncation edge."""


@dataclass
class TruncatedRep:
    """N-level matrix images of an algebra's generators.

    ``interior`` is the half-open index range on which every declared
    bracket relation holds entrywise to :data:`RELATION_TOL`; products of
    generator matrices are only trustworthy a degree-wide margin inside it.
    """

    algebra: SymmetryAlgebra
    N: int
    matrices: tuple[np.ndarray, ...]
    interior: tuple[int, int]
    hbar: float
    params: dict
    label: str
    _power_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def interior_slice(self) -> slice:
        return slice(self.interior[0], self.interior[1])

    def generator_matrix(self, label: str) -> np.ndarray:
        return self.matrices[self.algebra.index_of(label)]

    def _power(self, gen: int, exp: int) -> np.ndarray:
        key = (gen, exp)
        cached = self._power_cache.get(key)
        if cached is None:
            if exp == 1:
                cached = self.matrices[gen]
            else:
                cached = self._power(gen, exp - 1) @ self.matrices[gen]
            self._power_cache[key] = cached
        return cached

    def realize_monomial(self, mono: Monomial) -> np.ndarray:
        out = None
        for gen, exp in enumerate(mono.exponents):
            if exp == 0:
                continue
            m = self._power(gen, exp)
            out = m if out is None else out @ m
        if out is None:
            return np.eye(self.N, dtype=complex)
        return out


@dataclass
class StateVector:
    """Unit-norm complex amplitude vector with a profile tag."""

    amplitudes: np.ndarray
    profile: str = "custom"

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        norm = float(np.linalg.norm(amp))
        if norm < 1e-12:
            raise ValueError("degenerate state: norm below 1e-12")
        amp = amp / norm
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


# -- representation builders -------------------------------------------------------


def _assert_relations(rep: TruncatedRep):
    resid = relation_residual(rep)
    if resid > RELATION_TOL:
        raise AssertionError(
            f"representation {rep.label!r} violates relations on its interior: {resid:.3e}"
        )


def heisenberg_rep(N: int, hbar: float = 1.0) -> TruncatedRep:
    """Number-basis truncation of (x, p, e) on N levels.

    x and p come from truncated ladder operators, e maps to the identity.
    The single commutator defect sits at the last diagonal entry, so the
    interior is 0..N-2.
    """
    if N < 4:
        raise ValueError("need N >= 4")
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    algebra = heisenberg_algebra(hbar=hbar)
    lower = np.diag(np.sqrt(np.arange(1, N)), k=1)  # annihilation
    raise_ = lower.T.copy()
    x = np.sqrt(hbar / 2.0) * (lower + raise_)
    p = 1j * np.sqrt(hbar / 2.0) * (raise_ - lower)
    e = np.eye(N)
    rep = TruncatedRep(
        algebra=algebra,
        N=N,
        matrices=(x.astype(complex), p.astype(complex), e.astype(complex)),
        interior=(0, N - 1),
        hbar=float(hbar),
        params={"hbar": float(hbar)},
        label=f"heisenberg(N={N})",
    )
    _assert_relations(rep)
    return rep


def so21_discrete_rep(j: float, N: int, hbar: float = 1.0) -> TruncatedRep:
    """Lowest-weight discrete-basis truncation of (L_x, L_y, L_z).

    L_y is diagonal with eigenvalues m = j + k, k = 0..N-1.  The ladder
    coefficients c_k = sqrt((k+1)(2j+k)) are fixed by requiring all three
    bracket relations and a constant quadratic invariant
    L_y^2 - L_x^2 - L_z^2 = j(j-1) to hold exactly away from the top edge;
    the bottom terminates naturally, the top carries the truncation defect.
    Interior: 1..N-2 (one index margin at each end).
    """
    if j <= 0:
        raise ValueError("need j > 0")
    if N < 4:
        raise ValueError("need N >= 4")
    algebra = so21_algebra(hbar=hbar)
    k = np.arange(N - 1, dtype=float)
    c = np.sqrt((k + 1.0) * (2.0 * j + k))
    kplus = np.diag(c, k=-1)  # raises m by one
    kminus = kplus.T.copy()
    ly = np.diag(j + np.arange(N, dtype=float))
    lx = 0.5 * (kplus + kminus)
    lz = -0.5j * (kplus - kminus)
    rep = TruncatedRep(
        algebra=algebra,
        N=N,
        matrices=(lx.astype(complex), ly.astype(complex), lz.astype(complex)),
        interior=(1, N - 1),
        hbar=float(hbar),
        params={"j": float(j), "hbar": float(hbar)},
        label=f"so21_discrete(j={j}, N={N})",
    )
    _assert_relations(rep)
    return rep


def relation_residual(rep: TruncatedRep) -> float:
    """Largest interior entrywise defect over all declared bracket relations."""
    alg = rep.algebra
    sl = rep.interior_slice
    worst = 0.0
    for a in range(alg.dim):
        for b in range(a + 1, alg.dim):
            lhs = rep.matrices[a] @ rep.matrices[b] - rep.matrices[b] @ rep.matrices[a]
            rhs = np.zeros_like(lhs)
            for m, cval in alg._c(a, b).items():
                rhs += cval.to_complex(rep.hbar) * rep.matrices[m]
            worst = max(worst, float(np.abs((lhs - rhs)[sl, sl]).max()))
    return worst


# -- realization --------------------------------------------------------------------


def realize(p: OperatorPoly, rep: TruncatedRep) -> np.ndarray:
    """Substitute generator matrices into the normal-ordered terms of ``p``."""
    if p.algebra is not rep.algebra and p.algebra.name != rep.algebra.name:
        raise AlgebraMismatchError(
            f"polynomial over {p.algebra.name!r} cannot be realized in {rep.label!r}"
        )
    out = np.zeros((rep.N, rep.N), dtype=complex)
    for mono, coeff in p.items():
        out += coeff.to_complex(rep.hbar) * rep.realize_monomial(mono)
    return out


def skew_project(M: np.ndarray) -> np.ndarray:
    """Skew-Hermitian part (M - M†)/2; identity on skew matrices."""
    return 0.5 * (M - M.conj().T)


# -- smooth states -------------------------------------------------------------------


def smooth_state(profile: str, params: dict, N: int) -> StateVector:
    """Build a unit state whose coefficients decay faster than any power.

    Profiles:
      - ``gaussian``: exp(-(m - center)^2 / (2 width^2))
      - ``exponential``: exp(-rate * |m - center|)
      - ``poly_gaussian``: (1 + m)^power * gaussian
      - ``basis``: a single basis vector (explicit index, no limit games)
    """
    if N < 1:
        raise ValueError("need N >= 1")
    m = np.arange(N, dtype=float)
    if profile == "gaussian":
        center = float(params.get("center", 0.0))
        width = float(params.get("width", 1.0))
        if width <= 0:
            raise ValueError("gaussian profile needs width > 0; use the 'basis' profile for a single level")
        amp = np.exp(-((m - center) ** 2) / (2.0 * width**2))
    elif profile == "exponential":
        rate = float(params.get("rate", 1.0))
        center = float(params.get("center", 0.0))
        if rate <= 0:
            raise ValueError("exponential profile needs rate > 0")
        amp = np.exp(-rate * np.abs(m - center))
    elif profile == "poly_gaussian":
        center = float(params.get("center", 0.0))
        width = float(params.get("width", 1.0))
        power = int(params.get("power", 2))
        if width <= 0:
            raise ValueError("poly_gaussian profile needs width > 0")
        if power < 0:
            raise ValueError("poly_gaussian profile needs power >= 0")
        amp = (1.0 + m) ** power * np.exp(-((m - center) ** 2) / (2.0 * width**2))
    elif profile == "basis":
        index = int(params.get("index", 0))
        if not 0 <= index < N:
            raise ValueError(f"basis index {index} out of range for N={N}")
        amp = np.zeros(N)
        amp[index] = 1.0
    else:
        raise ValueError(f"unknown profile {profile!r}")
    tag_params = ",".join(f"{k}={params[k]}" for k in sorted(params))
    return StateVector(amp, profile=f"{profile}({tag_params})")


def basis_state(index: int, N: int) -> StateVector:
    return smooth_state("basis", {"index": index}, N)


def leakage_fraction(state: StateVector) -> float:
    """Population sitting on the last (edge) level."""
    return float(np.abs(state.amplitudes[-1]) ** 2)


def check_leakage(state: StateVector, context: str = "", threshold: float = LEAKAGE_THRESHOLD):
    """Warn when edge population would contaminate a convergence study."""
    frac = leakage_fraction(state)
    if frac > threshold:
        warnings.warn(
            TruncationLeakageWarning(
                f"truncation leakage {frac:.3e} exceeds {threshold:.1e}"
                + (f" ({context})" if context else "")
            ),
            stacklevel=2,
        )
    return frac


# -- export ---------------------------------------------------------------------------


def export_matrix_csv(M: np.ndarray, path):
    """Write a complex matrix as rows of (row, col, re, im)."""
    M = np.asarray(M)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "re", "im"])
        for r in range(M.shape[0]):
            for c in range(M.shape[1]):
                v = complex(M[r, c])
                writer.writerow([r, c, repr(v.real), repr(v.imag)])
