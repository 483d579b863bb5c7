"""Degree-capped Lie closures and the controllability criterion checks.

The Lie algebras of interest may be infinite dimensional; what is computed
here is the filtration of elements of degree <= cap reachable by repeated
brackets without passing through intermediate elements above the cap.  This
under-approximates the true algebra, so every result carries flags recording
whether anything was discarded at the cap, and "infinite dimensional" is
only ever reported as a growth heuristic, never as a fact.

Closure semantics:
  - generators participate in bracketing whatever their degree, but only
    elements of degree <= cap enter the reported basis;
  - bracket results above the cap are dropped and counted;
  - a closure is saturated-in-cap when a full round produced no new in-cap
    element within the round budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .opalg import OperatorPoly, RealSpan, SymmetryAlgebra, commutator
from .reps import StateVector, TruncatedRep, realize, smooth_state

__all__ = [
    "LieBasisSet",
    "ContainmentResult",
    "GrowthProfile",
    "CriterionReport",
    "generate_closure",
    "ad_chain_closure",
    "check_bracket_containment",
    "check_rank_equality",
    "growth_profile",
    "controllability_verdict",
    "VERDICT_SATISFIED",
    "VERDICT_COND1_FAILS",
    "VERDICT_COND2_FAILS",
    "VERDICT_FINITE_DIM",
    "VERDICT_INDETERMINATE",
]

VERDICT_SATISFIED = "criterion-satisfied-at-cap"
VERDICT_COND1_FAILS = "condition1-fails"
VERDICT_COND2_FAILS = "condition2-fails"
VERDICT_FINITE_DIM = "finite-dimensional"
VERDICT_INDETERMINATE = "indeterminate"

GROWTH_STABILIZED = "finite-dimensional (stabilized)"
GROWTH_INCREASING = "growth consistent with infinite dimension (heuristic)"
GROWTH_INCONCLUSIVE = "inconclusive"

DEFAULT_MAX_ROUNDS = 12
DEFAULT_MAX_AD_DEPTH = 8
DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class LieBasisSet:
    """A reduced, real-linearly independent basis of a capped Lie closure."""

    algebra: SymmetryAlgebra
    basis: tuple[OperatorPoly, ...]
    degree_cap: int
    saturated_in_cap: bool
    discarded_above_cap: bool

    @property
    def dim(self) -> int:
        return len(self.basis)

    def span(self) -> RealSpan:
        span = RealSpan(self.algebra)
        for b in self.basis:
            span.add(b)
        return span

    def contains(self, p: OperatorPoly) -> bool:
        return self.span().contains(p)


@dataclass(frozen=True)
class ContainmentResult:
    """Outcome of a bracket-containment test.

    status is one of "holds", "fails", "indeterminate".  A failing test
    carries the offending residual; an indeterminate one carries the number
    of basis brackets that fell above the cap and so could not be tested.
    """

    status: str
    witness: OperatorPoly | None = None
    out_of_cap: int = 0

    @property
    def holds(self) -> bool:
        return self.status == "holds"


@dataclass(frozen=True)
class GrowthProfile:
    """Closure dimension per degree cap, with the heuristic label."""

    rows: tuple[tuple[int, int], ...]
    strictly_increasing: bool
    assessment: str


def _validate_generators(generators: Sequence[OperatorPoly]):
    if not generators:
        raise ValueError("need at least one generator")
    algebra = generators[0].algebra
    for g in generators:
        if g.algebra is not algebra:
            raise ValueError("generators must share one algebra")
        if g.is_zero:
            raise ValueError("zero generator rejected")
        if not g.is_skew_hermitian():
            raise ValueError(f"generator is not skew-Hermitian: {g.canonical_str()}")
    return algebra


def generate_closure(
    generators: Sequence[OperatorPoly],
    degree_cap: int,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> LieBasisSet:
    """Breadth-first bracket saturation under a degree cap.

    Each round brackets the elements found in the previous round against the
    whole working set, reduces the results against the current basis in a
    fixed serial order, and keeps independent residuals of degree <= cap.
    """
    generators = list(generators)
    algebra = _validate_generators(generators)
    if degree_cap < 1:
        raise ValueError("degree cap must be >= 1")
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")

    span = RealSpan(algebra)
    basis: list[OperatorPoly] = []
    oversize_sources: list[OperatorPoly] = []
    discarded = False

    for g in generators:
        residual = span.add(g)
        if residual is None:
            continue
        if residual.degree <= degree_cap:
            basis.append(residual)
        else:
            # out-of-cap generators stay available as bracket sources but
            # never enter the reported basis
            oversize_sources.append(residual)
            discarded = True

    new = list(basis) + list(oversize_sources)
    saturated = False
    for _ in range(max_rounds):
        working = list(basis) + list(oversize_sources)
        candidates = []
        for i, low in enumerate(new):
            for other in working:
                if other is low:
                    continue
                candidates.append((low, other))
        fresh: list[OperatorPoly] = []
        for low, other in candidates:
            br = commutator(low, other)
            if br.is_zero:
                continue
            if br.degree > degree_cap:
                discarded = True
                continue
            residual = span.add(br)
            if residual is not None:
                basis.append(residual)
                fresh.append(residual)
        if not fresh:
            saturated = True
            break
        new = fresh

    return LieBasisSet(
        algebra=algebra,
        basis=tuple(basis),
        degree_cap=degree_cap,
        saturated_in_cap=saturated,
        discarded_above_cap=discarded,
    )


def ad_chain_closure(
    H0: OperatorPoly,
    controls: Sequence[OperatorPoly],
    degree_cap: int,
    max_ad_depth: int = DEFAULT_MAX_AD_DEPTH,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> LieBasisSet:
    """Closure of the iterated drift-bracket images of the control Hamiltonians.

    For each control H_i the chain H_i, [H0, H_i], [H0, [H0, H_i]], ... is
    followed until it dies, repeats in span, or leaves the cap; the collected
    elements are then Lie-closed under the same cap.
    """
    controls = list(controls)
    algebra = _validate_generators(controls)
    if H0.algebra is not algebra:
        raise ValueError("drift and controls must share one algebra")
    if not H0.is_zero and not H0.is_skew_hermitian():
        raise ValueError(f"drift is not skew-Hermitian: {H0.canonical_str()}")

    span = RealSpan(algebra)
    collected: list[OperatorPoly] = []
    discarded = False
    for h in controls:
        chain = h
        depth = 0
        while depth <= max_ad_depth:
            if chain.is_zero:
                break
            if depth > 0 and chain.degree > degree_cap:
                discarded = True
                break
            residual = span.add(chain)
            if residual is not None:
                collected.append(chain)
            elif depth > 0:
                break  # chain folded back into the collected span
            chain = commutator(H0, chain)
            depth += 1

    closure = generate_closure(collected, degree_cap, max_rounds=max_rounds)
    return LieBasisSet(
        algebra=closure.algebra,
        basis=closure.basis,
        degree_cap=degree_cap,
        saturated_in_cap=closure.saturated_in_cap,
        discarded_above_cap=closure.discarded_above_cap or discarded,
    )


def _spans_equal(a: LieBasisSet, b: LieBasisSet) -> bool:
    if a.dim != b.dim:
        return False
    span = a.span()
    return all(span.contains(p) for p in b.basis)


def check_bracket_containment(B: LieBasisSet, C: LieBasisSet) -> ContainmentResult:
    """Test whether every basis bracket [b, c] stays inside span(B).

    Brackets above the cap cannot be tested; they are counted, and a clean
    in-cap result is downgraded to indeterminate unless B is saturated and
    equals C as a span, in which case a Lie algebra brackets into itself and
    the containment holds outright.
    """
    if B.algebra is not C.algebra:
        raise ValueError("spans over different algebras")
    if B.degree_cap != C.degree_cap:
        raise ValueError(
            f"degree cap mismatch: {B.degree_cap} vs {C.degree_cap}"
        )
    span = B.span()
    out_of_cap = 0
    for b in B.basis:
        for c in C.basis:
            br = commutator(b, c)
            if br.is_zero:
                continue
            if br.degree > B.degree_cap:
                out_of_cap += 1
                continue
            residual, _ = span.reduce(br)
            if not residual.is_zero:
                return ContainmentResult("fails", witness=residual, out_of_cap=out_of_cap)
    if out_of_cap and not (B.saturated_in_cap and _spans_equal(B, C)):
        return ContainmentResult("indeterminate", out_of_cap=out_of_cap)
    return ContainmentResult("holds", out_of_cap=out_of_cap)


def check_rank_equality(
    A: LieBasisSet,
    C: LieBasisSet,
    rep: TruncatedRep,
    phi: StateVector,
    tol: float = DEFAULT_RANK_TOL,
) -> tuple[int, int]:
    """Numerical ranks of the tangent stacks {X phi} for C and A.

    Vectors are realified (real and imaginary parts stacked) before the
    singular value decomposition; a singular value counts while it exceeds
    tol times the largest one.  Returns (rank_C, rank_A).
    """
    if phi.dim != rep.N:
        raise ValueError(f"state dimension {phi.dim} does not match N={rep.N}")
    if float(np.linalg.norm(phi.amplitudes)) < 1e-12:
        raise ValueError("degenerate state")
    return (
        _tangent_rank(C, rep, phi, tol),
        _tangent_rank(A, rep, phi, tol),
    )


def _tangent_rank(basis_set: LieBasisSet, rep: TruncatedRep, phi: StateVector, tol: float) -> int:
    if basis_set.dim == 0:
        return 0
    cols = []
    for x in basis_set.basis:
        v = realize(x, rep) @ phi.amplitudes
        cols.append(np.concatenate([v.real, v.imag]))
    M = np.column_stack(cols)
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def growth_profile(
    generators: Sequence[OperatorPoly],
    caps: Sequence[int],
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> GrowthProfile:
    """Closure dimension at each cap, with the stabilization heuristic.

    Strict growth across three or more caps is labelled as consistent with
    an infinite-dimensional algebra; it proves nothing.  A constant profile
    whose top closure saturated without discarding anything is genuinely
    complete and labelled stabilized.
    """
    caps = list(caps)
    if any(b <= a for a, b in zip(caps, caps[1:])):
        raise ValueError("caps must be strictly increasing")
    closures = [generate_closure(generators, cap, max_rounds=max_rounds) for cap in caps]
    dims = [c.dim for c in closures]
    rows = tuple(zip(caps, dims))
    strict = len(caps) >= 2 and all(b > a for a, b in zip(dims, dims[1:]))
    top = closures[-1]
    if (
        len(set(dims)) == 1
        and top.saturated_in_cap
        and not top.discarded_above_cap
    ):
        assessment = GROWTH_STABILIZED
    elif strict and len(caps) >= 3:
        assessment = GROWTH_INCREASING
    else:
        assessment = GROWTH_INCONCLUSIVE
    return GrowthProfile(rows=rows, strictly_increasing=strict, assessment=assessment)


# -- aggregated report -------------------------------------------------------------


@dataclass(frozen=True)
class CriterionReport:
    """Aggregate of the criterion checks at the configured caps and truncations."""

    algebra_name: str
    caps: tuple[int, ...]
    condition1: ContainmentResult
    condition2_rows: tuple[tuple[int, str, int, int], ...]  # (N, profile, rank_chain, rank_full)
    profile_sensitive: bool
    rank_tol: float
    growth: GrowthProfile
    closure_summary: dict
    verdict: str
    witnesses: tuple[str, ...]

    def to_json_dict(self) -> dict:
        return {
            "algebra": self.algebra_name,
            "caps": list(self.caps),
            "condition1": {
                "status": self.condition1.status,
                "witness": (
                    self.condition1.witness.canonical_str()
                    if self.condition1.witness is not None
                    else None
                ),
                "out_of_cap_brackets": self.condition1.out_of_cap,
            },
            "condition2": {
                "rank_tol": self.rank_tol,
                "rows": [
                    {"N": n, "profile": prof, "rank_chain": rc, "rank_full": ra}
                    for n, prof, rc, ra in self.condition2_rows
                ],
                "profile_sensitive": self.profile_sensitive,
            },
            "growth": {
                "rows": [{"cap": c, "dim": d} for c, d in self.growth.rows],
                "strictly_increasing": self.growth.strictly_increasing,
                "assessment": self.growth.assessment,
            },
            "closures": self.closure_summary,
            "verdict": self.verdict,
            "witnesses": list(self.witnesses),
        }


def _closure_summary(name: str, s: LieBasisSet) -> dict:
    return {
        "dim": s.dim,
        "degree_cap": s.degree_cap,
        "saturated_in_cap": s.saturated_in_cap,
        "discarded_above_cap": s.discarded_above_cap,
        "basis": [b.canonical_str() for b in s.basis],
        "name": name,
    }


def controllability_verdict(
    H0: OperatorPoly,
    controls: Sequence[OperatorPoly],
    caps: Sequence[int],
    reps: Sequence[TruncatedRep],
    profiles: Sequence[dict],
    rank_tol: float = DEFAULT_RANK_TOL,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    max_ad_depth: int = DEFAULT_MAX_AD_DEPTH,
) -> CriterionReport:
    """Run both criterion conditions plus the growth heuristic and aggregate.

    The verdict never claims more than satisfaction at the tested cap and
    truncations.  Precedence: a refuted bracket containment wins, then a
    provably complete (finite-dimensional) closure, then a rank mismatch,
    then satisfaction, and anything unresolved is indeterminate.
    """
    caps = sorted(set(int(c) for c in caps))
    if not caps:
        raise ValueError("need at least one cap")
    top = caps[-1]
    controls = list(controls)
    algebra = controls[0].algebra

    system_gens = ([H0] if not H0.is_zero else []) + controls
    ctrl_top = generate_closure(controls, top, max_rounds=max_rounds)
    chain_top = ad_chain_closure(H0, controls, top, max_ad_depth=max_ad_depth, max_rounds=max_rounds)
    full_top = generate_closure(system_gens, top, max_rounds=max_rounds)

    cond1 = check_bracket_containment(ctrl_top, chain_top)
    growth = growth_profile(system_gens, caps, max_rounds=max_rounds)

    rows = []
    per_truncation_ranks: dict[int, set[tuple[int, int]]] = {}
    for rep in reps:
        for spec in profiles:
            spec = dict(spec)
            kind = spec.pop("type")
            phi = smooth_state(kind, spec, rep.N)
            rc, ra = check_rank_equality(full_top, chain_top, rep, phi, tol=rank_tol)
            rows.append((rep.N, phi.profile, rc, ra))
            per_truncation_ranks.setdefault(rep.N, set()).add((rc, ra))
    profile_sensitive = any(len(v) > 1 for v in per_truncation_ranks.values())
    ranks_equal = all(rc == ra for _, _, rc, ra in rows)

    witnesses = []
    if cond1.witness is not None:
        witnesses.append(cond1.witness.canonical_str())

    finite_dimensional = full_top.saturated_in_cap and not full_top.discarded_above_cap
    if cond1.status == "fails":
        verdict = VERDICT_COND1_FAILS
    elif finite_dimensional:
        verdict = VERDICT_FINITE_DIM
    elif rows and not ranks_equal:
        verdict = VERDICT_COND2_FAILS
    elif (
        cond1.status == "holds"
        and rows
        and ranks_equal
        and not profile_sensitive
        and growth.strictly_increasing
        and len(caps) >= 3
    ):
        verdict = VERDICT_SATISFIED
    else:
        verdict = VERDICT_INDETERMINATE

    summary = {
        "system": _closure_summary("system", full_top),
        "controls": _closure_summary("controls", ctrl_top),
        "ad_chain": _closure_summary("ad_chain", chain_top),
    }
    return CriterionReport(
        algebra_name=algebra.name,
        caps=tuple(caps),
        condition1=cond1,
        condition2_rows=tuple(rows),
        profile_sensitive=profile_sensitive,
        rank_tol=rank_tol,
        growth=growth,
        closure_summary=summary,
        verdict=verdict,
        witnesses=tuple(witnesses),
    )
