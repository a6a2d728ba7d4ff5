"""Strict JSON schemas for systems, measures, and perturbation families.

Unknown keys are fatal everywhere: config files double as the archival
record of each experiment, so silent key drops are worse than errors.
Scalars may be JSON numbers (float backend) or strings (exact backend);
strings parse as decimals or "p/q" fractions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .arithmetic import (
    AngleSpec,
    decimal_angle,
    golden_angle,
    lacunary_theta,
    rational_angle,
)
from .dynamics import (
    BaseMap,
    PerturbationSpec,
    SineShift,
    SkewSystem,
    composite_family,
    deformation_family,
    linear_base,
    precomposed_base,
    translation_family,
)
from .measures import Disintegration, FiberMeasure, lebesgue_disintegration
from .stability import prop_bahh_system

__all__ = [
    "parse_angle",
    "load_system",
    "system_diagnostics",
    "load_measure",
    "save_measure",
    "SweepJob",
    "load_family",
    "read_json",
    "write_json",
]

SCHEMA_VERSION = 1


def _require(doc: dict, required: set, optional: set, where: str) -> None:
    if not isinstance(doc, dict):
        raise ValueError(f"{where}: expected a JSON object")
    keys = set(doc)
    unknown = keys - required - optional
    if unknown:
        raise ValueError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - keys
    if missing:
        raise ValueError(f"{where}: missing keys {sorted(missing)}")


def _parse_scalar(v):
    """JSON number -> float backend; string -> exact Fraction."""
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"expected number or numeric string, got {v!r}")
    return v


def _format_scalar(v) -> object:
    """Exact scalars as strings (decimal when the denominator is
    2^a 5^b, else "p/q"), floats as floats."""
    if isinstance(v, (Fraction, int)) and not isinstance(v, bool):
        f = Fraction(v)
        num, den = f.numerator, f.denominator
        if den == 1:
            return str(num)
        twos = fives = 0
        d = den
        while d % 2 == 0:
            d //= 2
            twos += 1
        while d % 5 == 0:
            d //= 5
            fives += 1
        if d != 1:
            return f"{num}/{den}"
        shift = max(twos, fives)
        scaled = num * 10 ** shift // den
        sign = "-" if scaled < 0 else ""
        digits = str(abs(scaled)).rjust(shift + 1, "0")
        return f"{sign}{digits[:-shift]}.{digits[-shift:]}"
    return float(v)


# ------------------------------------------------------------------ angles

def parse_angle(spec: str) -> AngleSpec:
    """Angle grammar: decimal string, "p/q", "golden", or
    "liouville_j:<j_max>"."""
    if not isinstance(spec, str):
        raise ValueError(f"theta must be a string, got {spec!r}")
    text = spec.strip()
    if text == "golden":
        return golden_angle()
    if text.startswith("liouville_j:"):
        return lacunary_theta(int(text.split(":", 1)[1]))
    if "/" in text:
        p, q = text.split("/", 1)
        return rational_angle(int(p), int(q))
    frac_digits = len(text.split(".", 1)[1]) if "." in text else 0
    return decimal_angle(text, digits=max(frac_digits, 6))


def _angle_to_text(theta) -> str:
    if isinstance(theta, AngleSpec):
        theta = theta.value
    return str(_format_scalar(theta))


# ------------------------------------------------------------------ system

def _load_sigma(doc: dict) -> SineShift:
    _require(doc, {"kind", "amplitude"}, set(), "base.sigma")
    if doc["kind"] != "sine":
        raise ValueError(f"unknown sigma kind {doc['kind']!r}")
    return SineShift(float(_parse_scalar(doc["amplitude"])))


def _load_base(doc: dict) -> BaseMap:
    kind = doc.get("kind")
    if kind == "linear":
        _require(doc, {"kind", "l"}, set(), "base")
        return linear_base(int(doc["l"]))
    if kind == "linear_precomposed":
        _require(doc, {"kind", "l", "sigma"}, set(), "base")
        return precomposed_base(int(doc["l"]), _load_sigma(doc["sigma"]))
    raise ValueError(f"unknown base kind {kind!r}")


def _load_indicator(doc) -> tuple:
    out = []
    for iv in doc:
        if not isinstance(iv, list) or len(iv) != 2:
            raise ValueError("indicator entries must be [a, b] pairs")
        a, b = (Fraction(_parse_scalar(e)) for e in iv)
        if not 0 <= a < b <= 1:
            raise ValueError(f"bad indicator interval [{a}, {b}]")
        out.append((a, b))
    return tuple(out)


def _load_fiber(doc: dict):
    kind = doc.get("kind")
    common = {"A"}
    if kind == "translation":
        _require(doc, {"kind", "theta"}, common | {"indicator"}, "fiber")
        kw = {}
        if "indicator" in doc:
            kw["indicator"] = _load_indicator(doc["indicator"])
        if "A" in doc:
            kw["A"] = float(_parse_scalar(doc["A"]))
        return translation_family(parse_angle(doc["theta"]), **kw)
    if kind == "deformation":
        _require(doc, {"kind", "delta", "orbit_k"}, common | {"scale"},
                 "fiber")
        return deformation_family(
            _parse_scalar(doc["delta"]), int(doc["orbit_k"]),
            scale=float(_parse_scalar(doc.get("scale", 1))),
            **({"A": float(_parse_scalar(doc["A"]))} if "A" in doc else {}))
    if kind == "composite":
        _require(doc, {"kind", "theta", "delta", "orbit_k"},
                 common | {"scale", "indicator"}, "fiber")
        kw = {}
        if "indicator" in doc:
            kw["indicator"] = _load_indicator(doc["indicator"])
        if "A" in doc:
            kw["A"] = float(_parse_scalar(doc["A"]))
        return composite_family(
            parse_angle(doc["theta"]), _parse_scalar(doc["delta"]),
            int(doc["orbit_k"]),
            scale=float(_parse_scalar(doc.get("scale", 1))), **kw)
    raise ValueError(f"unknown fiber kind {kind!r}")


_CONSTANT_KEYS = {"alpha", "H_hat", "A", "xi", "ly_base"}


def load_system(doc: dict) -> SkewSystem:
    _require(doc, {"base", "fiber"}, {"constants"}, "system")
    base = _load_base(doc["base"])
    fiber = _load_fiber(doc["fiber"])
    ly = (1.0, 1.0)
    if "constants" in doc:
        _require(doc["constants"], set(), _CONSTANT_KEYS, "constants")
        if "ly_base" in doc["constants"]:
            a_t, b_t = doc["constants"]["ly_base"]
            ly = (float(a_t), float(b_t))
    return SkewSystem(base, fiber, ly_base=ly)


def system_diagnostics(doc: dict, n_cells: int | None = None,
                       p: float = 1.0) -> list[str]:
    """Declared-constant and compatibility checks; collects messages
    instead of raising."""
    try:
        sys = load_system(doc)
    except ValueError as e:
        return [str(e)]
    out = sys.diagnostics(n_cells)
    declared = doc.get("constants", {})
    computed = {"alpha": sys.fiber.alpha, "A": sys.fiber.A,
                "xi": sys.base.xi, "H_hat": sys.fiber.h_hat(p)}
    for key, have in computed.items():
        if key in declared:
            want = float(declared[key])
            if abs(want - have) > 1e-9 * max(1.0, abs(have)):
                out.append(f"declared {key} = {want:g} does not match "
                           f"built-in value {have:g}")
    theta_doc = doc.get("fiber", {}).get("theta")
    if isinstance(theta_doc, str) and "/" not in theta_doc and \
            theta_doc not in ("golden",) and \
            not theta_doc.startswith("liouville_j:"):
        digits = len(theta_doc.split(".", 1)[1]) if "." in theta_doc else 0
        if digits < 12:
            out.append(f"theta precision ({digits} decimal digits) may be "
                       f"insufficient for fine grids")
    return out


def save_system(sys: SkewSystem) -> dict:
    base: dict = {"kind": sys.base.kind, "l": sys.base.branch_count}
    if sys.base.sigma is not None:
        base["sigma"] = {"kind": "sine",
                         "amplitude": sys.base.sigma.amplitude}
    fam = sys.fiber
    fiber: dict = {"kind": fam.kind}
    if fam.kind in ("translation", "composite"):
        fiber["theta"] = _angle_to_text(fam.theta)
        fiber["indicator"] = [[_format_scalar(a), _format_scalar(b)]
                              for a, b in fam.indicator]
    if fam.bump is not None:
        fiber["orbit_k"] = fam.bump.orbit_k
        fiber["delta"] = fam.bump.strength
        fiber["scale"] = 1
    if fam.A != 0.5:
        fiber["A"] = fam.A
    doc = {"base": base, "fiber": fiber}
    if sys.ly_base != (1.0, 1.0):
        doc["constants"] = {"ly_base": list(sys.ly_base)}
    return doc


# ---------------------------------------------------------------- measures

def load_measure(doc: dict) -> Disintegration:
    if "builtin" in doc:
        _require(doc, {"builtin", "n_cells", "fiber_atoms"}, {"exact"},
                 "measure")
        if doc["builtin"] != "lebesgue":
            raise ValueError(f"unknown builtin measure {doc['builtin']!r}")
        return lebesgue_disintegration(int(doc["n_cells"]),
                                       int(doc["fiber_atoms"]),
                                       exact=bool(doc.get("exact", False)))
    _require(doc, {"n_cells", "dimension", "fibers"}, set(), "measure")
    n, d = int(doc["n_cells"]), int(doc["dimension"])
    rows = doc["fibers"]
    if len(rows) != n:
        raise ValueError(f"measure: got {len(rows)} fibers for "
                         f"n_cells = {n}")
    fibers = []
    for atoms in rows:
        positions, weights = [], []
        for pair in atoms:
            if not isinstance(pair, list) or len(pair) != 2:
                raise ValueError("fiber atoms must be [[pos...], weight]")
            pos, w = pair
            if not isinstance(pos, list) or len(pos) != d:
                raise ValueError(f"atom position must list {d} coordinates")
            positions.append(tuple(_parse_scalar(c) for c in pos))
            weights.append(_parse_scalar(w))
        scalars = [c for p in positions for c in p] + weights
        exact = bool(scalars) and all(
            isinstance(s, (Fraction, int)) for s in scalars)
        fibers.append(FiberMeasure(positions, weights, dimension=d,
                                   exact=exact))
    return Disintegration(fibers, n_cells=n)


def save_measure(dis: Disintegration) -> dict:
    rows = []
    for fm in dis.fibers:
        rows.append([[[_format_scalar(c) for c in p], _format_scalar(w)]
                     for p, w in fm.atoms()])
    return {"n_cells": dis.n_cells, "dimension": dis.dimension,
            "fibers": rows}


# ---------------------------------------------------------------- families

@dataclass(frozen=True)
class SweepJob:
    family: list[PerturbationSpec]
    gamma: float
    gamma_prime: float | None
    pipeline: dict | None


_PIPELINE_KEYS = {"n_cells", "fiber_atoms", "n_max", "tol", "eps_f"}


def _load_pipeline(doc: dict) -> dict:
    _require(doc, set(), _PIPELINE_KEYS, "pipeline")
    out = dict(doc)
    for k in ("n_cells", "fiber_atoms", "n_max"):
        if k in out:
            out[k] = int(out[k])
    for k in ("tol", "eps_f"):
        if k in out:
            out[k] = float(_parse_scalar(out[k]))
    return out


def load_family(doc: dict) -> SweepJob:
    kind = doc.get("kind")
    if kind == "prop-bahh":
        _require(doc, {"kind", "theta", "js", "gamma"},
                 {"gamma_prime", "deformation_scale", "n_cells", "pipeline"},
                 "family")
        theta = parse_angle(doc["theta"])
        kw = {}
        if "deformation_scale" in doc:
            kw["deformation_scale"] = float(doc["deformation_scale"])
        if "n_cells" in doc:
            kw["n_cells"] = int(doc["n_cells"])
        fam = [prop_bahh_system(theta, int(j), **kw).pspec
               for j in doc["js"]]
        return SweepJob(fam, float(doc["gamma"]),
                        float(doc["gamma_prime"])
                        if "gamma_prime" in doc else None,
                        _load_pipeline(doc["pipeline"])
                        if "pipeline" in doc else None)
    if kind == "translation-ladder":
        _require(doc, {"kind", "system", "deltas", "gamma"},
                 {"gamma_prime", "pipeline"}, "family")
        ref = load_system(doc["system"])
        if ref.fiber.kind != "translation":
            raise ValueError("translation-ladder needs a translation fiber")
        family = []
        for raw in doc["deltas"]:
            delta = _parse_scalar(raw)
            shifted = Fraction(delta) + Fraction(ref.fiber.theta) \
                if isinstance(delta, (Fraction, int)) and \
                isinstance(ref.fiber.theta, (Fraction, int)) \
                else float(delta) + float(ref.fiber.theta)
            pert = SkewSystem(
                ref.base,
                translation_family(shifted % 1,
                                   indicator=ref.fiber.indicator,
                                   A=ref.fiber.A),
                ly_base=ref.ly_base)
            size = abs(float(delta))
            family.append(PerturbationSpec(ref, pert, size,
                                           fiber_displacement=size))
        return SweepJob(family, float(doc["gamma"]),
                        float(doc["gamma_prime"])
                        if "gamma_prime" in doc else None,
                        _load_pipeline(doc["pipeline"])
                        if "pipeline" in doc else None)
    raise ValueError(f"unknown family kind {kind!r}")


# --------------------------------------------------------------------- io

def read_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_json(path, doc: dict) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
