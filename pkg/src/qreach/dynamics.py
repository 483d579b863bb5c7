"""Piecewise-constant propagation, product-formula limits, and schedule synthesis.

Everything here works on states, not operators: truncated noncompact
operators have edge-dominated norms that would mask interior convergence,
so every error reported is a fidelity error on a fixed smooth state.

Conventions
-----------
Plans and schedules list their steps in application order (first entry acts
first on the state).  The four-factor bracket pattern therefore reads, per
repetition and in application order,

    exp(-aY), exp(-aX), exp(aY), exp(aX),   a = sqrt(s/n),

which is the operator product exp(aX) exp(aY) exp(-aX) exp(-aY) and
converges to exp(s[X,Y]).  Only control amplitudes may change sign: the
drift never receives a negative duration, and reverse drift flows are only
ever approximated through the bracket machinery itself.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .opalg import OperatorPoly, commutator
from .reps import StateVector, TruncatedRep, check_leakage, realize, skew_project
from .words import (
    Ad,
    Bracket,
    Ctl,
    Scale,
    Sum,
    Word,
    WordError,
    MAX_WORD_DEPTH,
    contains_ad,
    decompose_over_control_words,
    evaluate_word,
    word_depth,
    word_str,
)

__all__ = [
    "ControlSchedule",
    "PropagatorPlan",
    "ConvergenceSeries",
    "SynthesisResult",
    "fidelity",
    "infidelity",
    "propagate",
    "execute_plan",
    "trotter_sum",
    "trotter_bracket",
    "conjugate_flow",
    "attainability_limit_error",
    "dominant_control_error",
    "trotter_sum_series",
    "trotter_bracket_series",
    "attainability_series",
    "dominant_control_series",
    "synthesize",
    "plan_schedule_budget",
    "append_free_segment",
    "DEFAULT_N_LADDER",
    "DEFAULT_U_LADDER",
    "DEFAULT_T_LADDER",
    "NORM_TOL",
]

# reproducible refinement ladders used by the convergence drivers
DEFAULT_N_LADDER = (4, 8, 16, 32, 64)
DEFAULT_U_LADDER = (4.0, 8.0, 16.0, 32.0)
DEFAULT_T_LADDER = (4.0, 8.0, 16.0, 32.0)

NORM_TOL = 1e-9


@dataclass(frozen=True)
class ControlSchedule:
    """Ordered piecewise-constant control segments (duration, control values)."""

    segments: tuple[tuple[float, tuple[float, ...]], ...]

    def __post_init__(self):
        for k, (duration, controls) in enumerate(self.segments):
            if duration <= 0:
                raise ValueError(f"segment {k}: duration must be positive")
        norm = tuple(
            (float(d), tuple(float(u) for u in us)) for d, us in self.segments
        )
        object.__setattr__(self, "segments", norm)

    @property
    def total_time(self) -> float:
        return sum(d for d, _ in self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    def to_json_dict(self) -> dict:
        return {
            "segments": [
                {"duration": d, "controls": list(us)} for d, us in self.segments
            ]
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ControlSchedule":
        segments = tuple(
            (seg["duration"], tuple(seg["controls"])) for seg in data["segments"]
        )
        return cls(segments)


def append_free_segment(schedule: ControlSchedule, tau: float, m: int) -> ControlSchedule:
    """Append a drift-only segment of duration tau (all controls zero)."""
    if tau <= 0:
        raise ValueError("free segment duration must be positive")
    return ControlSchedule(schedule.segments + ((float(tau), (0.0,) * m),))


@dataclass(frozen=True)
class PropagatorPlan:
    """A product of elementary flows exp(time * G) in application order."""

    steps: tuple[tuple[OperatorPoly, float], ...]
    target: OperatorPoly
    refinement: int

    def __post_init__(self):
        for k, (gen, _) in enumerate(self.steps):
            if not gen.is_skew_hermitian():
                raise ValueError(f"plan step {k} is not skew-Hermitian: {gen.canonical_str()}")


@dataclass(frozen=True)
class ConvergenceSeries:
    """Parameter ladder with fidelity errors and a log-log order estimate."""

    parameter: str
    params: tuple[float, ...]
    errors: tuple[float, ...]

    def __post_init__(self):
        if len(self.params) != len(self.errors):
            raise ValueError("params and errors must have matching lengths")
        if any(e < 0 for e in self.errors):
            raise ValueError("errors must be nonnegative")

    @property
    def strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.errors, self.errors[1:]))

    def estimated_order(self) -> float:
        """Minus the slope of log(error) against log(param)."""
        if any(e <= 0 for e in self.errors):
            raise ValueError("order estimate needs strictly positive errors")
        slope = np.polyfit(np.log(self.params), np.log(self.errors), 1)[0]
        return float(-slope)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["param", "error"])
            for param, err in zip(self.params, self.errors):
                writer.writerow([repr(param), repr(err)])


# -- state helpers ---------------------------------------------------------------


def fidelity(psi: StateVector, phi: StateVector) -> float:
    """|<psi, phi>|, global-phase invariant, clipped to [0, 1]."""
    for s in (psi, phi):
        if abs(s.norm() - 1.0) > 1e-6:
            raise ValueError("fidelity needs normalized states")
    value = abs(np.vdot(psi.amplitudes, phi.amplitudes))
    return float(min(1.0, value))


def infidelity(psi: StateVector, phi: StateVector) -> float:
    return 1.0 - fidelity(psi, phi)


def _flow_matrix(p: OperatorPoly, rep: TruncatedRep) -> np.ndarray:
    return skew_project(realize(p, rep))


def _check_norm(vec: np.ndarray, context: str):
    drift = abs(float(np.linalg.norm(vec)) - 1.0)
    if drift > NORM_TOL:
        raise RuntimeError(f"norm drift {drift:.3e} beyond {NORM_TOL:.1e} in {context}")


# -- propagation -----------------------------------------------------------------


def propagate(
    rep: TruncatedRep,
    H0: OperatorPoly,
    controls: Sequence[OperatorPoly],
    schedule: ControlSchedule,
    psi0: StateVector,
    warn_leakage: bool = True,
) -> StateVector:
    """Apply the schedule's segment flows exp(d * (K0 + sum u_j K_j)) in order.

    Every generator is validated skew-Hermitian symbolically and its matrix
    image skew-projected, so segment flows are unitary; the final norm is
    checked against NORM_TOL rather than silently renormalized.
    """
    if not H0.is_zero and not H0.is_skew_hermitian():
        raise ValueError("drift Hamiltonian is not skew-Hermitian")
    for k, h in enumerate(controls):
        if not h.is_skew_hermitian():
            raise ValueError(f"control {k} is not skew-Hermitian")
    if psi0.dim != rep.N:
        raise ValueError(f"state dimension {psi0.dim} does not match N={rep.N}")
    k0 = _flow_matrix(H0, rep)
    kjs = [_flow_matrix(h, rep) for h in controls]
    if warn_leakage:
        check_leakage(psi0, context="initial state")
    vec = psi0.amplitudes.copy()
    cache: dict[tuple, np.ndarray] = {}
    for duration, us in schedule.segments:
        if len(us) != len(controls):
            raise ValueError(
                f"segment has {len(us)} control values, system has {len(controls)}"
            )
        key = (duration, us)
        U = cache.get(key)
        if U is None:
            gen = k0 + sum(u * kj for u, kj in zip(us, kjs)) if us else k0
            U = expm(duration * gen)
            cache[key] = U
        vec = U @ vec
    _check_norm(vec, "propagate")
    out = StateVector(vec, profile=psi0.profile)
    if warn_leakage:
        check_leakage(out, context="final state")
    return out


def execute_plan(plan: PropagatorPlan, rep: TruncatedRep, psi0: StateVector) -> StateVector:
    """Apply each plan step's exact flow exp(time * skew(realize(G))) in order."""
    if psi0.dim != rep.N:
        raise ValueError(f"state dimension {psi0.dim} does not match N={rep.N}")
    vec = psi0.amplitudes.copy()
    matrices: dict[OperatorPoly, np.ndarray] = {}
    cache: dict[tuple, np.ndarray] = {}
    for gen, time in plan.steps:
        key = (gen, time)
        U = cache.get(key)
        if U is None:
            M = matrices.get(gen)
            if M is None:
                M = _flow_matrix(gen, rep)
                matrices[gen] = M
            U = expm(time * M)
            cache[key] = U
        vec = U @ vec
    _check_norm(vec, "execute_plan")
    return StateVector(vec, profile=psi0.profile)


# -- product formulas ---------------------------------------------------------------


def _require_skew(*polys: OperatorPoly):
    for p in polys:
        if not p.is_skew_hermitian():
            raise ValueError(f"not skew-Hermitian: {p.canonical_str()}")


def trotter_sum(X: OperatorPoly, Y: OperatorPoly, s: float, n: int) -> PropagatorPlan:
    """First-order split of exp(s(X+Y)) into n alternating slices."""
    if n < 1:
        raise ValueError("need n >= 1")
    _require_skew(X, Y)
    dt = s / n
    steps = ((Y, dt), (X, dt)) * n
    return PropagatorPlan(steps=steps, target=X + Y, refinement=n)


def trotter_bracket(X: OperatorPoly, Y: OperatorPoly, s: float, n: int) -> PropagatorPlan:
    """Group-commutator approximation of exp(s[X,Y]) with n four-factor blocks.

    Requires s > 0; a negative bracket time is obtained by swapping X and Y.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if s <= 0:
        raise ValueError("need s > 0; swap X and Y for the reverse bracket flow")
    _require_skew(X, Y)
    a = math.sqrt(s / n)
    steps = ((Y, -a), (X, -a), (Y, a), (X, a)) * n
    return PropagatorPlan(steps=steps, target=commutator(X, Y), refinement=n)


def conjugate_flow(
    H: OperatorPoly,
    t: float,
    H0: OperatorPoly,
    s: float,
    rep: TruncatedRep,
    psi: StateVector,
) -> StateVector:
    """State after exp(tH) exp(sH0) exp(-tH), i.e. the drift flow conjugated by H.

    Equals the flow of s times the adjoint-series expansion
    H0 + t[H,H0] + (t^2/2!)[H,[H,H0]] + ... up to truncation effects.
    """
    _require_skew(H, H0)
    plan = PropagatorPlan(
        steps=((H, -t), (H0, s), (H, t)),
        target=H0,
        refinement=1,
    )
    return execute_plan(plan, rep, psi)


def attainability_limit_error(
    H: OperatorPoly,
    H0: OperatorPoly,
    s: float,
    t: float,
    rep: TruncatedRep,
    psi: StateVector,
) -> float:
    """Fidelity error between exp((s/|t|)(H0 + t[H,H0])) psi and exp(±s[H,H0]) psi.

    The first flow is attainable for every finite t; as |t| grows it pivots
    onto the bracket direction, with the drift contribution suppressed like
    1/|t|.  The sign of t selects which bracket direction is approached.
    """
    if t == 0:
        raise ValueError("need t != 0")
    if s <= 0:
        raise ValueError("need s > 0")
    _require_skew(H, H0)
    bracket = commutator(H, H0)
    k0 = _flow_matrix(H0, rep)
    kb = _flow_matrix(bracket, rep)
    inner = expm((s / abs(t)) * (k0 + t * kb)) @ psi.amplitudes
    target = expm(s * math.copysign(1.0, t) * kb) @ psi.amplitudes
    _check_norm(inner, "attainability inner flow")
    return infidelity(StateVector(inner), StateVector(target))


def dominant_control_error(
    H0: OperatorPoly,
    H1: OperatorPoly,
    s: float,
    u: float,
    rep: TruncatedRep,
    psi: StateVector,
) -> float:
    """Fidelity error between exp((s/u)(H0 + u H1)) psi and exp(s H1) psi.

    Demonstrates that a control flow dominates the drift at large amplitude.
    Note the error is not invariant under simultaneous rescaling
    (s, u) -> (cs, cu): the compared states both change.
    """
    if u <= 0:
        raise ValueError("need u > 0")
    if s <= 0:
        raise ValueError("need s > 0")
    _require_skew(H1)
    if not H0.is_zero:
        _require_skew(H0)
    k0 = _flow_matrix(H0, rep)
    k1 = _flow_matrix(H1, rep)
    emulated = expm((s / u) * (k0 + u * k1)) @ psi.amplitudes
    target = expm(s * k1) @ psi.amplitudes
    _check_norm(emulated, "dominant control flow")
    return infidelity(StateVector(emulated), StateVector(target))


# -- convergence drivers ------------------------------------------------------------


def _dense_target_state(G: OperatorPoly, s: float, rep: TruncatedRep, psi: StateVector) -> StateVector:
    return StateVector(expm(s * _flow_matrix(G, rep)) @ psi.amplitudes, profile=psi.profile)


def trotter_sum_series(
    X: OperatorPoly,
    Y: OperatorPoly,
    s: float,
    rep: TruncatedRep,
    psi: StateVector,
    ns: Sequence[int] = DEFAULT_N_LADDER,
) -> ConvergenceSeries:
    target = _dense_target_state(X + Y, s, rep, psi)
    errors = []
    for n in ns:
        final = execute_plan(trotter_sum(X, Y, s, n), rep, psi)
        errors.append(infidelity(final, target))
    return ConvergenceSeries("n", tuple(float(n) for n in ns), tuple(errors))


def trotter_bracket_series(
    X: OperatorPoly,
    Y: OperatorPoly,
    s: float,
    rep: TruncatedRep,
    psi: StateVector,
    ns: Sequence[int] = DEFAULT_N_LADDER,
) -> ConvergenceSeries:
    target = _dense_target_state(commutator(X, Y), s, rep, psi)
    errors = []
    for n in ns:
        final = execute_plan(trotter_bracket(X, Y, s, n), rep, psi)
        errors.append(infidelity(final, target))
    return ConvergenceSeries("n", tuple(float(n) for n in ns), tuple(errors))


def attainability_series(
    H: OperatorPoly,
    H0: OperatorPoly,
    s: float,
    rep: TruncatedRep,
    psi: StateVector,
    ts: Sequence[float] = DEFAULT_T_LADDER,
    sign: int = 1,
) -> ConvergenceSeries:
    errors = [
        attainability_limit_error(H, H0, s, sign * t, rep, psi) for t in ts
    ]
    return ConvergenceSeries("t", tuple(float(t) for t in ts), tuple(errors))


def dominant_control_series(
    H0: OperatorPoly,
    H1: OperatorPoly,
    s: float,
    rep: TruncatedRep,
    psi: StateVector,
    us: Sequence[float] = DEFAULT_U_LADDER,
) -> ConvergenceSeries:
    errors = [dominant_control_error(H0, H1, s, u, rep, psi) for u in us]
    return ConvergenceSeries("u", tuple(float(u) for u in us), tuple(errors))


# -- schedule synthesis ----------------------------------------------------------------


@dataclass(frozen=True)
class SynthesisResult:
    """Compiled schedule for a bracket word, with its exact target generator."""

    schedule: ControlSchedule
    word: Word
    target: OperatorPoly
    flow_time: float
    refinement: int
    amplitude: float
    route: str
    rewrite_terms: tuple[str, ...]

    @property
    def control_time(self) -> float:
        return sum(d for d, us in self.schedule.segments if any(us))

    @property
    def free_time(self) -> float:
        return sum(d for d, us in self.schedule.segments if not any(us))


class _Compiler:
    def __init__(self, m: int, n: int, u: float):
        self.m = m
        self.n = n
        self.u = u
        self.memo: dict[tuple[Word, float], tuple] = {}

    def control_segment(self, index: int, sigma: float) -> tuple:
        if sigma == 0.0:
            return ()
        us = [0.0] * self.m
        us[index] = math.copysign(self.u, sigma)
        return ((abs(sigma) / self.u, tuple(us)),)

    def free_segment(self, duration: float) -> tuple:
        return ((duration, (0.0,) * self.m),)

    def compile(self, word: Word, sigma: float) -> tuple:
        if sigma == 0.0:
            return ()
        key = (word, sigma)
        out = self.memo.get(key)
        if out is not None:
            return out
        if isinstance(word, Ctl):
            out = self.control_segment(word.index, sigma)
        elif isinstance(word, Scale):
            out = self.compile(word.inner, sigma * float(word.coefficient))
        elif isinstance(word, Sum):
            out = self.compile_sum([(Fraction(1), word.left), (Fraction(1), word.right)], sigma)
        elif isinstance(word, Bracket):
            if sigma < 0:
                out = self.compile(Bracket(word.right, word.left), -sigma)
            else:
                a = math.sqrt(sigma / self.n)
                block = (
                    self.compile(word.right, -a)
                    + self.compile(word.left, -a)
                    + self.compile(word.right, a)
                    + self.compile(word.left, a)
                )
                out = block * self.n
        elif isinstance(word, Ad):
            # conjugation route: exp(-tH) then the free slice then exp(tH)
            # realizes exp(eps * (H0 + t[H,H0] + ...)), and eps*t = sigma
            # picks out the requested drift-bracket flow
            t = -math.copysign(self.u, sigma)
            eps = abs(sigma) / self.u
            out = (
                self.compile(word.inner, -t)
                + self.free_segment(eps)
                + self.compile(word.inner, t)
            )
        else:
            raise TypeError(f"not a word: {word!r}")
        self.memo[key] = out
        return out

    def compile_sum(self, terms: list[tuple[Fraction, Word]], sigma: float) -> tuple:
        block = ()
        for coeff, node in terms:
            block += self.compile(node, sigma * float(coeff) / self.n)
        return block * self.n


def _flatten_sum(word: Word) -> list[tuple[Fraction, Word]]:
    if isinstance(word, Sum):
        return _flatten_sum(word.left) + _flatten_sum(word.right)
    if isinstance(word, Scale):
        return [(word.coefficient * c, w) for c, w in _flatten_sum(word.inner)]
    return [(Fraction(1), word)]


def synthesize(
    H0: OperatorPoly,
    controls: Sequence[OperatorPoly],
    word: Word,
    s: float,
    n: int,
    u: float,
    ad_route: str = "rewrite",
) -> SynthesisResult:
    """Compile a bracket word into a ControlSchedule approximating exp(s * G).

    Control flows become single large-amplitude segments (the drift is
    dominated, not switched off), sums become alternating slices, brackets
    become four-factor group-commutator blocks, and drift-bracket nodes are
    handled per ``ad_route``:

    - ``rewrite`` (default): the word's exact generator is re-expressed as
      a combination of pure control bracket words, which converges on every
      system whose control closure contains the target;
    - ``conjugate``: each ad0 node becomes a control conjugation around a
      short drift-only segment.  Faithful to the constructive limit but
      carries an adjoint-series tail that only vanishes when the iterated
      brackets of the inner word with the drift terminate.

    The returned schedule's error decreases as (n, u) grow, within the
    route's validity domain.
    """
    controls = list(controls)
    depth = word_depth(word)
    if depth > MAX_WORD_DEPTH:
        raise WordError(f"word depth {depth} exceeds the supported maximum {MAX_WORD_DEPTH}")
    if n < 1:
        raise ValueError("need n >= 1")
    if u <= 0:
        raise ValueError("need u > 0")
    if ad_route not in ("rewrite", "conjugate"):
        raise ValueError("ad_route must be 'rewrite' or 'conjugate'")
    target = evaluate_word(word, H0, controls)
    if target.is_zero:
        raise ValueError("word evaluates to zero; nothing to synthesize")
    if not target.is_skew_hermitian():
        raise ValueError("word target is not skew-Hermitian")

    compiler = _Compiler(m=len(controls), n=n, u=u)
    route = "structural"
    rewrite_terms: tuple[str, ...] = ()
    if contains_ad(word) and ad_route == "rewrite":
        terms = decompose_over_control_words(target, controls, degree_cap=max(1, target.degree))
        if terms is None:
            warnings.warn(
                "drift-bracket target is outside the searched control-word span; "
                "falling back to the conjugation route",
                RuntimeWarning,
                stacklevel=2,
            )
            route = "conjugate"
        else:
            route = "rewrite"
            rewrite_terms = tuple(f"{c}*{word_str(w)}" for c, w in terms)
            segments = compiler.compile_sum(terms, float(s))
            schedule = ControlSchedule(segments)
            return SynthesisResult(
                schedule=schedule,
                word=word,
                target=target,
                flow_time=float(s),
                refinement=n,
                amplitude=u,
                route=route,
                rewrite_terms=rewrite_terms,
            )
    elif contains_ad(word):
        route = "conjugate"

    segments = compiler.compile(word, float(s))
    schedule = ControlSchedule(segments)
    return SynthesisResult(
        schedule=schedule,
        word=word,
        target=target,
        flow_time=float(s),
        refinement=n,
        amplitude=u,
        route=route,
        rewrite_terms=rewrite_terms,
    )


def plan_schedule_budget(rep: TruncatedRep, H0: OperatorPoly, result: SynthesisResult) -> float:
    """Rigorous bound on the gap between plan execution and schedule propagation.

    Each dominant-control segment differs from its idealized control flow by
    the drift acting for the segment duration; unitarity turns that into the
    additive bound (total control-segment time) * ||K0||_2.
    """
    k0 = _flow_matrix(H0, rep)
    return result.control_time * float(np.linalg.norm(k0, 2))
