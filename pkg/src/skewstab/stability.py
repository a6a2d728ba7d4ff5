"""Quantitative stability bounds and the counterexample laboratory.

Three layers: the abstract bound calculator (rate-function inversion,
Holder exponents), decay-of-equilibrium experiments on skew systems, and
the explicit periodic-orbit counterexample constructions with their
exact lower bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .arithmetic import AngleSpec, approximant_perturbation, lacunary_theta
from .dynamics import (
    PerturbationSpec,
    SkewSystem,
    composite_family,
    invariant_measure,
    linear_base,
    transfer_step,
    translation_family,
)
from .measures import (
    Disintegration,
    l1_norm,
    lebesgue_disintegration,
    product_disintegration,
    rotation_orbit_fiber,
)

__all__ = [
    "PowerLaw",
    "TabulatedRate",
    "StabilityBudget",
    "psi_inverse",
    "stability_bound",
    "holder_exponent",
    "decay_rate_formula",
    "DecaySeries",
    "equilibrium_decay",
    "SweepRow",
    "SweepTable",
    "stability_sweep",
    "PropBahhSystem",
    "prop_bahh_system",
    "prop30_observable_average",
    "Prop30Report",
    "prop30_example",
]

_X_LO, _X_HI = 1.0, 2.0 ** 60


# ------------------------------------------------------- rate functions

@dataclass(frozen=True)
class PowerLaw:
    """phi(x) = C * x^(-alpha), strictly decreasing to 0."""

    C: float
    alpha: float

    def __post_init__(self):
        if self.C <= 0 or self.alpha <= 0:
            raise ValueError("power law needs C > 0 and alpha > 0")

    def __call__(self, x: float) -> float:
        return self.C * float(x) ** (-self.alpha)


@dataclass(frozen=True)
class TabulatedRate:
    """Strictly decreasing samples of phi; evaluated by log-log
    interpolation between nodes."""

    xs: tuple
    ys: tuple

    def __post_init__(self):
        xs, ys = np.asarray(self.xs, float), np.asarray(self.ys, float)
        if len(xs) < 2 or np.any(np.diff(xs) <= 0):
            raise ValueError("xs must be strictly increasing")
        if np.any(np.diff(ys) >= 0) or np.any(ys <= 0):
            raise ValueError("phi must be strictly decreasing and positive")

    def __call__(self, x: float) -> float:
        lx = np.log(np.clip(x, self.xs[0], self.xs[-1]))
        return float(np.exp(np.interp(lx, np.log(self.xs),
                                      np.log(self.ys))))


@dataclass(frozen=True)
class StabilityBudget:
    """Constants of the abstract two-system comparison: phi bounds the
    convergence to equilibrium of the reference, M_tilde the strong
    norms of both fixed points, C_tilde the weak-norm iterate bound,
    epsilon the strong-to-weak operator distance."""

    phi: object
    M_tilde: float
    C_tilde: float
    epsilon: float

    def __post_init__(self):
        if min(self.M_tilde, self.C_tilde, self.epsilon) < 0:
            raise ValueError("budget constants must be >= 0")


def _psi(phi, x: float) -> float:
    return phi(x) / x


def psi_inverse(phi, y: float, method: str = "auto") -> float:
    """Solve psi(x) = phi(x)/x = y on [1, 2^60]; psi is strictly
    decreasing so bisection applies; power laws invert in closed form."""
    if y <= 0:
        raise ValueError("y must be positive")
    if method not in ("auto", "closed", "bisect"):
        raise ValueError("unknown method")
    if isinstance(phi, PowerLaw) and method in ("auto", "closed"):
        x = (phi.C / y) ** (1.0 / (phi.alpha + 1.0))
        if not _X_LO <= x <= _X_HI:
            raise ValueError("y outside the range of psi")
        return x
    lo, hi = _X_LO, _X_HI
    if y > _psi(phi, lo) * (1 + 1e-12):
        raise ValueError("y outside the range of psi")
    if y < _psi(phi, hi):
        raise ValueError("y outside the range of psi")
    while hi - lo > 1e-9 * lo:
        mid = 0.5 * (lo + hi)
        if _psi(phi, mid) >= y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def stability_bound(budget: StabilityBudget) -> float:
    """2 * M~ * C~ * eps * (psi^{-1}(eps * C~ / 2) + 1)."""
    eps = budget.epsilon
    if eps == 0:
        return 0.0
    x = psi_inverse(budget.phi, eps * budget.C_tilde / 2.0)
    return 2.0 * budget.M_tilde * budget.C_tilde * eps * (x + 1.0)


def holder_exponent(alpha: float) -> float:
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return 1.0 - 1.0 / (alpha + 1.0)


def decay_rate_formula(gamma: float, observable_class) -> float:
    """Decay exponent for the mixing-rate upper bounds: 1/(2 gamma) for
    Lipschitz observables, max(p, q, p+q-d)/(2 gamma) for the mixed
    Holder class (p, q, d)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if observable_class == "lipschitz":
        return 1.0 / (2.0 * gamma)
    kind, *params = observable_class
    if kind != "holder" or len(params) != 3:
        raise ValueError("observable class must be 'lipschitz' or "
                         "('holder', p, q, d)")
    p, q, d = params
    return max(p, q, p + q - d) / (2.0 * gamma)


# ----------------------------------------------------------- decay series

@dataclass(frozen=True)
class DecaySeries:
    ns: tuple
    norms: tuple
    description: str
    slope: float | None
    intercept: float | None
    residuals: tuple

    def tail_start(self) -> int:
        return len(self.ns) // 2


def _tail_fit(ns, norms):
    start = len(ns) // 2
    xs, ys = [], []
    for n, v in zip(ns[start:], norms[start:]):
        if n > 0 and v > 0:
            xs.append(math.log(n))
            ys.append(math.log(v))
    if len(xs) < 2:
        return None, None, ()
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = tuple(float(y - (slope * x + intercept))
                  for x, y in zip(xs, ys))
    return float(slope), float(intercept), resid


def equilibrium_decay(sys: SkewSystem, g: Disintegration, n_max: int,
                      eps_f: float = 2.0 ** -16,
                      description: str = "") -> DecaySeries:
    """Record ||L^n g||_"1" for n = 0..n_max for a zero-mass g.

    eps_f keeps the signed atom clouds bounded; it perturbs each norm by
    at most eps_f * |g|, well below the decay scales probed here.
    """
    if abs(float(g.mass())) > 1e-12:
        raise ValueError("not in V_s: input must have zero total mass")
    norms = [max(0.0, float(l1_norm(g)))]
    cur = g
    for _ in range(n_max):
        cur = transfer_step(sys, cur, eps_f=eps_f)
        norms.append(max(0.0, float(l1_norm(cur))))
    ns = tuple(range(n_max + 1))
    slope, intercept, resid = _tail_fit(ns, norms)
    if not description:
        description = f"zero-mass disintegration on {g.n_cells} cells"
    return DecaySeries(ns, tuple(norms), description, slope, intercept,
                       resid)


# ---------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class SweepRow:
    delta: float
    distance: float
    lower_bound: float
    upper_bound_fit: float
    converged: bool


@dataclass(frozen=True)
class SweepTable:
    rows: tuple
    beta: float | None
    gamma: float
    gamma_prime: float | None
    K: float

    def upper_ok(self) -> list[bool]:
        return [r.distance <= r.upper_bound_fit * (1 + 1e-9) + 1e-15
                for r in self.rows if r.converged]

    def lower_ok(self) -> list[bool]:
        return [r.distance >= r.lower_bound - 1e-15
                for r in self.rows if r.converged]


def _row_delta(ps: PerturbationSpec) -> float:
    nd = getattr(ps, "nominal_delta", None)
    return float(nd) if nd is not None else float(ps.declared_delta)


def stability_sweep(family: list, gamma: float,
                    gamma_prime: float | None = None,
                    pipeline: dict | None = None) -> SweepTable:
    """Distances ||f_delta - f_0||_"1" against the Holder upper-bound
    shape K * delta^(1/(8 gamma + 1)) (K fitted on the smallest delta)
    and, when gamma_prime is given, the counterexample lower bound
    (1/9) * delta^(1/(gamma_prime - 1))."""
    if not family:
        raise ValueError("empty family")
    ref = family[0].reference
    if any(ps.reference != ref for ps in family):
        raise ValueError("family must share one reference system")
    deltas = [_row_delta(ps) for ps in family]
    if len(set(deltas)) != len(deltas):
        raise ValueError("delta values must be distinct")
    opts = pipeline or {}

    f0 = None
    entries = []
    for ps in family:
        if ps.invariant_distance is not None:
            entries.append((ps, float(ps.invariant_distance), True))
            continue
        if ps.perturbed_invariant is not None:
            f_d, ok = ps.perturbed_invariant, True
        else:
            res = invariant_measure(ps.perturbed, **opts)
            f_d, ok = res.measure, res.converged
        if f0 is None:
            if ps.reference_invariant is not None:
                f0 = ps.reference_invariant
            else:
                r0 = invariant_measure(ref, **opts)
                if not r0.converged:
                    raise ValueError("reference pipeline did not converge")
                f0 = r0.measure
        entries.append((ps, float(l1_norm(f_d - f0)), ok))

    exponent = 1.0 / (8.0 * gamma + 1.0)
    order = sorted(range(len(entries)),
                   key=lambda i: _row_delta(entries[i][0]), reverse=True)
    good = [(i, entries[i]) for i in order if entries[i][2]]
    if good:
        i_min, (ps_min, d_min, _) = good[-1]
        K = d_min / _row_delta(ps_min) ** exponent
    else:
        K = 0.0

    rows = []
    for i in order:
        ps, dist, ok = entries[i]
        delta = _row_delta(ps)
        lower = (dist * 0.0 if gamma_prime is None
                 else delta ** (1.0 / (gamma_prime - 1.0)) / 9.0)
        rows.append(SweepRow(delta, dist, lower, K * delta ** exponent, ok))

    pts = [(math.log(r.delta), math.log(r.distance))
           for r in rows if r.converged and r.distance > 0]
    beta = None
    if len(pts) >= 2:
        beta = float(np.polyfit([p[0] for p in pts],
                                [p[1] for p in pts], 1)[0])
    return SweepTable(tuple(rows), beta, gamma, gamma_prime, K)


# --------------------------------------------------- periodic-orbit example

@dataclass(frozen=True)
class PropBahhSystem:
    """The attracting-periodic-orbit perturbation of a translation skew
    product, with its exact invariant measures and closed-form
    distance."""

    pspec: PerturbationSpec
    mu_reference: Disintegration
    mu_orbit: Disintegration
    mu_repeller: Disintegration
    j: int
    k: int
    delta: Fraction
    closed_form_distance: Fraction
    deformation_scale: float


def prop_bahh_system(theta: AngleSpec, j: int,
                     deformation_scale: float = 4.0, n_cells: int = 64,
                     fiber_atom_budget: int = 2 ** 18) -> PropBahhSystem:
    """Perturb translation by theta to the rational p_j/k_j composed
    with a deformation attracting the period-k_j orbit of 0.

    The perturbed rotation amount is exactly p_j/k_j (theta + delta_j by
    construction), so the orbit product measures are exactly invariant.
    The deformation strength is |delta_j| * deformation_scale: the
    paper-scale size |delta_j| times a configurable gain that sets the
    attraction rate of the orbit.
    """
    pert = approximant_perturbation(theta, j)
    k = pert.k
    if 2 * k > fiber_atom_budget:
        raise ValueError(
            f"k_{j} = {k} needs {2 * k} fiber atoms, exceeding the budget "
            f"{fiber_atom_budget}; raise fiber_atom_budget to proceed")
    size = abs(pert.delta)
    fam0 = translation_family(theta.value)
    fam_d = composite_family(Fraction(pert.p, pert.k), size, k,
                             scale=deformation_scale)
    reference = SkewSystem(linear_base(2), fam0)
    perturbed = SkewSystem(linear_base(2), fam_d)

    mu_ref = lebesgue_disintegration(n_cells, 2 * k, exact=True)
    orbit = rotation_orbit_fiber(pert.p, pert.k, exact=True)
    mu_orb = product_disintegration(n_cells, orbit)
    mu_rep = product_disintegration(
        n_cells, rotation_orbit_fiber(pert.p, pert.k, exact=True,
                                      offset=Fraction(1, 2 * k)))
    declared = float(size) * (1.0 + deformation_scale)
    pspec = PerturbationSpec(
        reference, perturbed, declared,
        fiber_displacement=declared,
        reference_invariant=mu_ref,
        perturbed_invariant=mu_orb,
        invariant_distance=Fraction(1, 4 * k),
        nominal_delta=float(size))
    return PropBahhSystem(pspec, mu_ref, mu_orb, mu_rep, j, k, pert.delta,
                          Fraction(1, 4 * k), deformation_scale)


# ----------------------------------------------------------- observable

# frequencies 2^(2^(2i)) and squared amplitudes 2^(-2^(2i+1)), i = 1..4
_OBS_TERMS = tuple(
    (i, 2 ** (2 ** (2 * i)), Fraction(1, 2 ** (2 ** (2 * i + 1))))
    for i in (1, 2, 3, 4))

_EXACT_COS = {
    Fraction(0): Fraction(1),
    Fraction(1, 2): Fraction(-1),
    Fraction(1, 4): Fraction(0),
    Fraction(3, 4): Fraction(0),
    Fraction(1, 3): Fraction(-1, 2),
    Fraction(2, 3): Fraction(-1, 2),
    Fraction(1, 6): Fraction(1, 2),
    Fraction(5, 6): Fraction(1, 2),
}


def _cos_sum_exact(groups: dict):
    """Sum of w * cos(2 pi phase) over exact phase groups, or None when
    no exact route applies."""
    if not groups:
        return Fraction(0)
    L = len(groups)
    weights = list(groups.values())
    if L > 1 and all(w == weights[0] for w in weights):
        base = min(groups)
        if sorted(groups) == [base + Fraction(r, L) for r in range(L)]:
            # full coset of L-th roots of unity: cosines cancel exactly
            return Fraction(0)
    if all(p in _EXACT_COS for p in groups):
        return sum((w * _EXACT_COS[p] for p, w in groups.items()),
                   Fraction(0))
    return None


def _term_value(fm, freq: int, exact: bool):
    """integral of cos(2 pi freq y) against one fiber measure."""
    if exact:
        groups: dict[Fraction, Fraction] = {}
        dens = {p[0].denominator for p in fm.positions}
        if len(dens) == 1:
            # shared denominator: reduce phases with integer residues
            b = dens.pop()
            residues: dict[int, Fraction] = {}
            for pos, w in zip(fm.positions, fm.weights):
                r = (freq * pos[0].numerator) % b
                residues[r] = residues.get(r, Fraction(0)) + w
            groups = {Fraction(r, b): w for r, w in residues.items()}
        else:
            for pos, w in zip(fm.positions, fm.weights):
                phase = (freq * pos[0]) % 1
                groups[phase] = groups.get(phase, Fraction(0)) + w
        val = _cos_sum_exact(groups)
        if val is not None:
            return val
        return float(math.fsum(
            float(w) * math.cos(2 * math.pi * float(p))
            for p, w in groups.items()))
    a = fm.to_float()
    if len(a) == 0:
        return 0.0
    phase = np.mod(freq * a.positions[:, 0], 1.0)
    return float(np.dot(a.weights, np.cos(2 * np.pi * phase)))


def prop30_observable_average(j_max_terms: int, dis: Disintegration,
                              exact: bool | None = None):
    """integral of the lacunary cosine observable against dis, evaluated
    term by term; phases are reduced mod 1 in rational arithmetic before
    the cosine, so cancellations at magnitudes ~2^-32 are exact."""
    if not 1 <= j_max_terms <= len(_OBS_TERMS):
        raise ValueError(
            f"j_max_terms must lie in 1..{len(_OBS_TERMS)}")
    all_exact = all(f.exact for f in dis.fiber_ids()[1])
    if exact is None:
        exact = all_exact
    elif exact and not all_exact:
        raise ValueError("inexact atom positions with exactness requested")

    ids, distinct = dis.fiber_ids()
    counts = np.bincount(ids, minlength=len(distinct))
    total = Fraction(0)
    for i, freq, amp in _OBS_TERMS[:j_max_terms]:
        term = Fraction(0)
        for fm, c in zip(distinct, counts):
            v = _term_value(fm, freq, exact)
            if isinstance(v, Fraction) and isinstance(term, Fraction):
                term = term + int(c) * v
            else:
                term = float(term) + int(c) * float(v)
        if isinstance(term, Fraction) and isinstance(total, Fraction):
            total = total + amp * term
        else:
            total = float(total) + float(amp) * float(term)
    return total


def prop30_tail_bound(j_max_terms: int) -> Fraction:
    """Sup-norm of the dropped terms beyond j_max_terms (all four
    modeled terms minus the evaluated ones, plus the analytic remainder
    of the full series, which is below 2^-2046)."""
    tail = sum((amp for _, _, amp in _OBS_TERMS[j_max_terms:]),
               Fraction(0))
    return tail + Fraction(2, 2 ** 2048)


@dataclass(frozen=True)
class Prop30Report:
    j: int
    k: int
    delta: Fraction
    value: Fraction
    term_values: tuple
    lebesgue_value: Fraction
    tail_bound: Fraction
    bound_half_amplitude: Fraction
    bound_sqrt_delta: float
    half_amplitude_ok: bool
    sqrt_delta_ok: bool


@lru_cache(maxsize=4)
def _exact_dyadic_lebesgue(log2_atoms: int) -> Disintegration:
    return lebesgue_disintegration(1, 2 ** log2_atoms, exact=True)


def prop30_example(j: int, n_cells: int = 16,
                   lebesgue_log2_atoms: int = 17) -> Prop30Report:
    """The observable averaged against the orbit measure mu_j, with the
    lower bounds it certifies; j <= 2 (j = 3 needs period 2^64 orbits,
    out of desk scale, refused)."""
    if j not in (1, 2):
        raise ValueError(
            f"j = {j} needs period 2^(2^{2 * j}) orbits; refused as out of "
            f"desk scale (supported: j in {{1, 2}})")
    theta = lacunary_theta(3)
    pert = approximant_perturbation(theta, j)
    mu_j = product_disintegration(
        n_cells, rotation_orbit_fiber(pert.p, pert.k, exact=True))
    fm = mu_j.fiber_ids()[1][0]
    terms = []
    for idx, freq, amp in _OBS_TERMS:
        v = _term_value(fm, freq, True)
        # identical fibers across all cells
        terms.append(amp * v * n_cells if isinstance(v, Fraction)
                     else float(amp) * float(v) * n_cells)
    value = prop30_observable_average(4, mu_j)

    if lebesgue_log2_atoms < 17:
        raise ValueError("lebesgue grid needs at least 2^17 atoms")
    leb = _exact_dyadic_lebesgue(lebesgue_log2_atoms)
    leb_value = prop30_observable_average(2, leb)

    amp_j = _OBS_TERMS[j - 1][2]
    half_amp = amp_j / 2
    sqrt_delta = 0.9 * math.sqrt(abs(float(pert.delta)))
    return Prop30Report(
        j, pert.k, pert.delta, value, tuple(terms), leb_value,
        prop30_tail_bound(4), half_amp, sqrt_delta,
        value >= half_amp, float(value) >= sqrt_delta)
