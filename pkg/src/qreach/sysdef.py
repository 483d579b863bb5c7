"""System definition files: schema validation and loading.

A system file states the physical (Hermitian) Hamiltonians the way they
appear in a Schrodinger equation; the loader divides by i*hbar so the
package works with skew-Hermitian generators throughout.  Validation is
exhaustive: every schema violation in the file is reported, not just the
first one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .expressions import ExpressionError, parse_expression, parse_scalar
from .opalg import AlgebraError, OperatorPoly, SymmetryAlgebra
from .presets import heisenberg_algebra, so21_algebra
from .reps import TruncatedRep, heisenberg_rep, so21_discrete_rep
from .scalars import Scalar

__all__ = [
    "SystemDefinition",
    "SystemLoadError",
    "load_system",
    "load_bundled",
    "bundled_system_path",
    "PROFILE_TYPES",
]

SCHEMA_VERSION = 1
PROFILE_TYPES = {"gaussian", "exponential", "poly_gaussian", "basis"}
_PROFILE_KEYS = {
    "gaussian": {"center", "width"},
    "exponential": {"center", "rate"},
    "poly_gaussian": {"center", "width", "power"},
    "basis": {"index"},
}


class SystemLoadError(ValueError):
    """Carries the full list of schema violations found in a system file."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid system definition:\n" + "\n".join(f"  - {e}" for e in errors))


@dataclass
class SystemDefinition:
    """A validated control system over one of the supported algebras."""

    name: str
    algebra: SymmetryAlgebra
    H0: OperatorPoly
    controls: tuple[OperatorPoly, ...]
    truncations: tuple[int, ...]
    caps: tuple[int, ...]
    profiles: tuple[dict, ...]
    params: dict
    rep_params: dict
    config: dict = field(repr=False)

    @property
    def m(self) -> int:
        return len(self.controls)

    def build_rep(self, N: int) -> TruncatedRep:
        preset = self.rep_params.get("preset")
        if preset == "heisenberg":
            return heisenberg_rep(N, hbar=self.algebra.hbar)
        if preset == "so21":
            return so21_discrete_rep(self.rep_params.get("j", 1.0), N, hbar=self.algebra.hbar)
        raise ValueError(f"no representation builder for algebra preset {preset!r}")

    def reps(self) -> list[TruncatedRep]:
        return [self.build_rep(n) for n in self.truncations]


def _build_custom_algebra(spec: dict, errors: list[str]) -> SymmetryAlgebra | None:
    labels = spec.get("labels")
    if not isinstance(labels, list) or not all(isinstance(s, str) for s in labels):
        errors.append("algebra.custom.labels must be a list of strings")
        return None
    d = len(labels)
    hermitian = spec.get("hermitian", [True] * d)
    central = spec.get("central", [False] * d)
    unit = spec.get("unit", [False] * d)
    hbar = spec.get("hbar", 1.0)
    brackets_raw = spec.get("brackets", {})
    brackets = {}
    for key, row in brackets_raw.items():
        parts = [s.strip() for s in key.split(",")]
        if len(parts) != 2:
            errors.append(f"bracket key {key!r} must look like 'a,b'")
            continue
        targets = {}
        for label, scalar_src in row.items():
            try:
                targets[label] = parse_scalar(str(scalar_src))
            except ExpressionError as exc:
                errors.append(f"bracket {key!r} target {label!r}: {exc}")
        brackets[(parts[0], parts[1])] = targets
    if errors:
        return None
    try:
        return SymmetryAlgebra.from_brackets(
            name=spec.get("name", "custom"),
            generator_labels=labels,
            brackets=brackets,
            hermitian_flags=hermitian,
            central_flags=central,
            unit_flags=unit,
            hbar=hbar,
        )
    except (AlgebraError, KeyError, TypeError) as exc:
        errors.append(f"algebra.custom: {exc}")
        return None


def _resolve_algebra(config: dict, errors: list[str]) -> tuple[SymmetryAlgebra | None, dict]:
    block = config.get("algebra")
    if not isinstance(block, dict):
        errors.append("missing or invalid 'algebra' block")
        return None, {}
    hbar = config.get("params", {}).get("hbar", 1.0) if isinstance(config.get("params", {}), dict) else 1.0
    preset = block.get("preset")
    if preset == "heisenberg":
        return heisenberg_algebra(hbar=hbar), {"preset": "heisenberg"}
    if preset == "so21":
        j = block.get("j", 1.0)
        if not isinstance(j, (int, float)) or j <= 0:
            errors.append("algebra.j must be a positive number")
            return None, {}
        return so21_algebra(hbar=hbar), {"preset": "so21", "j": float(j)}
    if preset is not None:
        errors.append(f"unknown algebra preset {preset!r}")
        return None, {}
    custom = block.get("custom")
    if isinstance(custom, dict):
        alg = _build_custom_algebra(dict(custom, hbar=hbar), errors)
        return alg, {"preset": "custom"}
    errors.append("algebra block needs either 'preset' or 'custom'")
    return None, {}


def _validate_profiles(config: dict, errors: list[str]) -> list[dict]:
    profiles = config.get("profiles")
    if profiles is None:
        errors.append("missing 'profiles' list")
        return []
    if not isinstance(profiles, list) or not profiles:
        errors.append("'profiles' must be a nonempty list")
        return []
    out = []
    for k, prof in enumerate(profiles):
        if not isinstance(prof, dict) or "type" not in prof:
            errors.append(f"profile #{k} must be an object with a 'type'")
            continue
        kind = prof["type"]
        if kind not in PROFILE_TYPES:
            errors.append(f"profile #{k}: unknown type {kind!r}")
            continue
        extra = set(prof) - _PROFILE_KEYS[kind] - {"type"}
        if extra:
            errors.append(f"profile #{k}: unexpected keys {sorted(extra)}")
            continue
        out.append(dict(prof))
    return out


def _validate_int_list(config: dict, key: str, minimum: int, errors: list[str], increasing: bool = False):
    values = config.get(key)
    if not isinstance(values, list) or not values or not all(isinstance(v, int) for v in values):
        errors.append(f"'{key}' must be a nonempty list of integers")
        return []
    if any(v < minimum for v in values):
        errors.append(f"'{key}' entries must be >= {minimum}")
    if increasing and any(b <= a for a, b in zip(values, values[1:])):
        errors.append(f"'{key}' must be strictly increasing")
    return list(values)


def load_system(path) -> SystemDefinition:
    """Load and validate a system JSON file; every violation is reported."""
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise SystemLoadError([f"cannot read {path}: {exc}"]) from exc
    try:
        config = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SystemLoadError([f"invalid JSON: {exc}"]) from exc
    if not isinstance(config, dict):
        raise SystemLoadError(["top-level JSON value must be an object"])

    errors: list[str] = []
    if config.get("spec") != SCHEMA_VERSION:
        errors.append(f"'spec' must be {SCHEMA_VERSION}")

    params = config.get("params", {})
    if not isinstance(params, dict) or not all(
        isinstance(v, (int, float)) for v in params.values()
    ):
        errors.append("'params' must map names to numbers")
        params = {}
    hbar = params.get("hbar", 1.0)
    if not isinstance(hbar, (int, float)) or hbar <= 0:
        errors.append("params.hbar must be positive")

    algebra, rep_params = _resolve_algebra(config, errors)

    truncations = _validate_int_list(config, "truncations", 4, errors)
    caps = _validate_int_list(config, "caps", 1, errors, increasing=True)
    profiles = _validate_profiles(config, errors)

    H0 = None
    controls: list[OperatorPoly] = []
    if algebra is not None:
        # the file states physical Hermitian Hamiltonians; store H = H'/(i*hbar)
        to_skew = Scalar(0, -1) * Scalar(1, 0, hbar_power=-1)
        h0_src = config.get("H0")
        if not isinstance(h0_src, str):
            errors.append("'H0' must be an expression string")
        else:
            try:
                h0_phys = parse_expression(h0_src, algebra, params)
                if h0_phys.adjoint() != h0_phys:
                    errors.append(f"H0: expression {h0_src!r} is not Hermitian")
                else:
                    H0 = h0_phys.scale(to_skew)
            except ExpressionError as exc:
                errors.append(f"H0: {exc}")
        ctrl_src = config.get("controls")
        if not isinstance(ctrl_src, list) or not ctrl_src:
            errors.append("'controls' must be a nonempty list of expression strings")
        else:
            for k, src in enumerate(ctrl_src):
                if not isinstance(src, str):
                    errors.append(f"controls[{k}] must be a string")
                    continue
                try:
                    phys = parse_expression(src, algebra, params)
                    if phys.adjoint() != phys:
                        errors.append(f"controls[{k}]: expression {src!r} is not Hermitian")
                        continue
                    skew = phys.scale(to_skew)
                    if skew.is_zero:
                        errors.append(f"controls[{k}]: expression {src!r} is zero")
                        continue
                    controls.append(skew)
                except ExpressionError as exc:
                    errors.append(f"controls[{k}]: {exc}")

    if errors:
        raise SystemLoadError(errors)

    return SystemDefinition(
        name=config.get("name", path.stem),
        algebra=algebra,
        H0=H0,
        controls=tuple(controls),
        truncations=tuple(truncations),
        caps=tuple(caps),
        profiles=tuple(profiles),
        params=dict(params),
        rep_params=rep_params,
        config=config,
    )


def bundled_system_path(name: str) -> Path:
    """Filesystem path of a bundled system file (eq3, eq4, eq7)."""
    resource = resources.files("qreach").joinpath("data").joinpath(f"{name}.json")
    return Path(str(resource))


def load_bundled(name: str) -> SystemDefinition:
    return load_system(bundled_system_path(name))
