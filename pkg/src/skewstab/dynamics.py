"""Skew-product systems and their transfer operators.

Systems are pairs of a piecewise-expanding base map of [0,1] and a fiber
map family on the circle, together with the declared uniformity
constants (lambda, alpha, xi, C_h, H_hat, A).  The transfer operator
acts on Disintegrations; for the built-in linear bases the base
direction is exact at grid level (cell preimages land inside single
cells and the branch weights are constant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .batteries import unit_pbv_battery
from .measures import (
    Disintegration,
    FiberMeasure,
    coarsen,
    coarsen_disintegration,
    l1_norm,
    lebesgue_disintegration,
    marginal_density,
    var_p,
)

__all__ = [
    "SineShift",
    "BaseMap",
    "linear_base",
    "precomposed_base",
    "OrbitBump",
    "FiberMap",
    "FiberMapFamily",
    "translation_family",
    "identity_family",
    "deformation_family",
    "composite_family",
    "SkewSystem",
    "PerturbationSpec",
    "transfer_step",
    "iterate",
    "InvariantResult",
    "invariant_measure",
    "LyReport",
    "ly_check",
    "BaseLyReport",
    "base_ly_check",
    "OperatorDistance",
    "operator_distance",
    "skorokhod_bound",
]

DEFAULT_INDICATOR = ((Fraction(1, 2), Fraction(1)),)


# ------------------------------------------------------------- base maps

@dataclass(frozen=True)
class SineShift:
    """sigma(x) = x + a sin(2 pi x) / (2 pi); a diffeomorphism of [0,1]
    fixing the endpoints whenever |a| < 1."""

    amplitude: float

    def __call__(self, x):
        return x + self.amplitude * np.sin(2 * np.pi * x) / (2 * np.pi)

    def deriv(self, x):
        return 1.0 + self.amplitude * np.cos(2 * np.pi * x)

    def inverse(self, t):
        t = np.asarray(t, dtype=float)
        x = t.copy()
        for _ in range(60):
            step = (self(x) - t) / self.deriv(x)
            x = x - step
            if np.max(np.abs(step)) < 1e-15:
                break
        return x

    def sup_identity_distance(self) -> float:
        return abs(self.amplitude) / (2 * np.pi)


@dataclass(frozen=True)
class BaseMap:
    """Full-branch expanding map of [0,1]: x -> l * sigma(x) mod 1."""

    branch_count: int
    sigma: SineShift | None = None

    def __post_init__(self):
        if self.branch_count < 2:
            raise ValueError("branch count must be >= 2")
        if self.sigma is not None and abs(self.sigma.amplitude) >= 1:
            raise ValueError("sigma is not a diffeomorphism")

    @property
    def kind(self) -> str:
        return "linear" if self.sigma is None else "linear_precomposed"

    @property
    def lam(self) -> float:
        if self.sigma is None:
            return 1.0 / self.branch_count
        return 1.0 / (self.branch_count * (1.0 - abs(self.sigma.amplitude)))

    @property
    def c_h(self) -> float:
        # Lipschitz constant of gamma -> 1/|T'(T_i^{-1} gamma)|; zero for
        # constant-derivative branches
        if self.sigma is None:
            return 0.0
        a = abs(self.sigma.amplitude)
        return 2 * np.pi * a / (self.branch_count ** 2 * (1 - a) ** 3)

    @property
    def xi(self) -> float:
        return 1.0

    def check_grid(self, n_cells: int) -> None:
        l, n = self.branch_count, n_cells
        while n % l == 0:
            n //= l
        if n != 1:
            raise ValueError(
                f"grid/branch mismatch: n_cells = {n_cells} is not a power "
                f"of the branch count {self.branch_count}")

    def source_cells(self, n_cells: int, k: int):
        """(source cell, mass fraction of that cell) pairs feeding
        output cell k; fractions are exact for linear branches."""
        if self.sigma is None:
            return _linear_sources(self.branch_count, n_cells)[k]
        return _sigma_pieces(self, n_cells)[k]

    def transfer_density(self, values: np.ndarray) -> np.ndarray:
        """One step of the induced 1D transfer on piecewise-constant
        densities."""
        n = len(values)
        self.check_grid(n)
        out = np.zeros(n)
        for k in range(n):
            for c, w in self.source_cells(n, k):
                out[k] += values[c] * float(w)
        return out


@lru_cache(maxsize=64)
def _linear_sources(l: int, n: int):
    w = Fraction(1, l)
    return tuple(tuple(((k + j * n) // l, w) for j in range(l))
                 for k in range(n))


@lru_cache(maxsize=32)
def _sigma_pieces(base: BaseMap, n_cells: int):
    """Per output cell: (source cell, cell-mass fraction) pieces under
    x -> l sigma(x) mod 1, split at source-grid boundaries; the fraction
    is n * (preimage length), which encodes 1/|T'| exactly."""
    l, n = base.branch_count, n_cells
    grid = np.arange(l * n + 1) / (l * n)
    xs = base.sigma.inverse(grid)
    xs[0], xs[-1] = 0.0, 1.0
    pieces: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for j in range(l):
        for k in range(n):
            x0, x1 = xs[j * n + k], xs[j * n + k + 1]
            c0, c1 = int(x0 * n), min(int(x1 * n), n - 1)
            cuts = [x0] + [c / n for c in range(c0 + 1, c1 + 1)] + [x1]
            for c, (a, b) in zip(range(c0, c1 + 1), zip(cuts, cuts[1:])):
                if b > a:
                    pieces[k].append((c, (b - a) * n))
    return tuple(tuple(p) for p in pieces)


def linear_base(l: int) -> BaseMap:
    return BaseMap(l)


def precomposed_base(l: int, sigma: SineShift) -> BaseMap:
    return BaseMap(l, sigma=sigma)


# ------------------------------------------------------------ fiber maps

_BUMP_KNOTS = (Fraction(0), Fraction(1, 3), Fraction(1, 2),
               Fraction(2, 3), Fraction(1))
_BUMP_VALUES = (0.0, -1.0, 0.0, 1.0, 0.0)
_BUMP_DERIVS = (-6.0, 0.0, 6.0, 0.0, -6.0)


def _hermite_coeffs():
    knots = np.array([float(t) for t in _BUMP_KNOTS])
    vals = np.array(_BUMP_VALUES)
    ders = np.array(_BUMP_DERIVS)
    return knots, vals, ders


def _hermite_eval(t: np.ndarray) -> np.ndarray:
    knots, vals, ders = _hermite_coeffs()
    seg = np.clip(np.searchsorted(knots, t, side="right") - 1, 0, 3)
    h = knots[seg + 1] - knots[seg]
    s = (t - knots[seg]) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s ** 2 * (3 - 2 * s)
    h11 = s ** 2 * (s - 1)
    return (h00 * vals[seg] + h10 * h * ders[seg]
            + h01 * vals[seg + 1] + h11 * h * ders[seg + 1])


def _hermite_max_abs_deriv() -> float:
    # derivative of each cubic segment is quadratic: check endpoints and
    # the interior critical point
    knots, vals, ders = _hermite_coeffs()
    best = 0.0
    for i in range(4):
        h = knots[i + 1] - knots[i]
        v0, v1, d0, d1 = vals[i], vals[i + 1], ders[i], ders[i + 1]
        # p'(s)/h in s-units: a s^2 + b s + c with
        a = 6 * (v0 - v1) / h + 3 * (d0 + d1)
        b = 6 * (v1 - v0) / h - 4 * d0 - 2 * d1
        c = d0
        cand = [abs(c), abs(a + b + c)]
        if a != 0 and 0 < -b / (2 * a) < 1:
            s = -b / (2 * a)
            cand.append(abs(a * s * s + b * s + c))
        best = max(best, max(cand))
    return best


@dataclass(frozen=True)
class OrbitBump:
    """Deformation y -> y + strength * g(y): g is the periodized cubic
    bump vanishing on the period-k orbit {i/k} (attracting, g' < 0
    there) and on the midpoints {i/k + 1/(2k)} (repelling, g' > 0)."""

    orbit_k: int
    strength: float

    def __post_init__(self):
        if self.strength < 0:
            raise ValueError("strength must be >= 0")
        if self.strength * self.max_g_prime() >= 1:
            raise ValueError("deformation too strong to stay injective")

    def g(self, y: np.ndarray) -> np.ndarray:
        t = np.mod(np.asarray(y, dtype=float) * self.orbit_k, 1.0)
        return _hermite_eval(t)

    def __call__(self, y: np.ndarray) -> np.ndarray:
        return np.mod(y + self.strength * self.g(y), 1.0)

    def max_g_prime(self) -> float:
        return self.orbit_k * _hermite_max_abs_deriv()

    @property
    def lipschitz(self) -> float:
        return 1.0 + self.strength * self.max_g_prime()

    def fixes(self, fm: FiberMeasure) -> bool:
        # exact atoms on the half-orbit grid are fixed points of the bump
        if not fm.exact:
            return False
        return all(
            (pos[0] * 2 * self.orbit_k).denominator == 1
            for pos, _ in fm.atoms())


@dataclass(frozen=True)
class FiberMap:
    """Concrete circle map: rotation by `shift` followed by an optional
    deformation."""

    shift: object = 0
    bump: OrbitBump | None = None

    def apply(self, fm: FiberMeasure) -> FiberMeasure:
        out = fm if self.shift == 0 else fm.translate(self.shift)
        if self.bump is not None and self.bump.strength != 0:
            if not self.bump.fixes(out):
                out = out.apply_map(self.bump)
        return out

    def point(self, y: float) -> float:
        y = (y + float(self.shift)) % 1.0
        if self.bump is not None:
            y = float(self.bump(np.array([y]))[0])
        return y


@dataclass(frozen=True)
class FiberMapFamily:
    """x-dependent fiber maps G(x, .): a rotation applied on the
    indicator set, followed by an x-independent deformation."""

    kind: str
    theta: object = 0
    indicator: tuple = ()
    bump: OrbitBump | None = None
    A: float = 0.5

    @property
    def alpha(self) -> float:
        return 1.0 if self.bump is None else self.bump.lipschitz

    def rotation_distance(self) -> float:
        t = float(self.theta) % 1.0
        return min(t, 1.0 - t)

    def h_hat(self, p: float) -> float:
        # Sk3: sup_{r<=A} r^-p Int sup_{y, x1,x2 in B(x,r)} |G(x1,y)-G(x2,y)| dx;
        # each interior indicator endpoint contributes a jump of size
        # alpha_D * d(theta, 0) over a 2r window
        jumps = sum(1 for iv in self.indicator for e in iv if 0 < e < 1)
        if jumps == 0:
            return 0.0
        return 2 * jumps * self.alpha * self.rotation_distance() \
            * self.A ** (1.0 - p)

    def map_for(self, member: bool) -> FiberMap:
        shift = self.theta if member else 0
        return FiberMap(shift=shift, bump=self.bump)

    def indicator_member(self, cell: int, n_cells: int) -> bool:
        lo, hi = Fraction(cell, n_cells), Fraction(cell + 1, n_cells)
        for a, b in self.indicator:
            if a <= lo and hi <= b:
                return True
            if lo < b and a < hi:
                raise ValueError(
                    f"indicator endpoint falls inside cell {cell}/{n_cells}; "
                    f"use a grid aligned with the indicator")
        return False


@lru_cache(maxsize=128)
def _membership(fam: FiberMapFamily, n_cells: int) -> tuple[bool, ...]:
    return tuple(fam.indicator_member(c, n_cells) for c in range(n_cells))


def _angle_value(theta):
    return theta.value if hasattr(theta, "value") else theta


def translation_family(theta, indicator=DEFAULT_INDICATOR,
                       A: float = 0.5) -> FiberMapFamily:
    iv = tuple((Fraction(a), Fraction(b)) for a, b in indicator)
    return FiberMapFamily("translation", theta=_angle_value(theta),
                          indicator=iv, A=A)


def identity_family(A: float = 0.5) -> FiberMapFamily:
    return FiberMapFamily("translation", theta=0, indicator=(), A=A)


def deformation_family(delta, orbit_k: int, scale: float = 1.0,
                       A: float = 0.5) -> FiberMapFamily:
    bump = OrbitBump(orbit_k, abs(float(delta)) * scale)
    return FiberMapFamily("deformation", theta=0, indicator=(),
                          bump=bump, A=A)


def composite_family(theta, delta, orbit_k: int, scale: float = 1.0,
                     indicator=DEFAULT_INDICATOR, A: float = 0.5
                     ) -> FiberMapFamily:
    iv = tuple((Fraction(a), Fraction(b)) for a, b in indicator)
    bump = OrbitBump(orbit_k, abs(float(delta)) * scale)
    return FiberMapFamily("composite", theta=_angle_value(theta),
                          indicator=iv, bump=bump, A=A)


# ---------------------------------------------------------------- system

@dataclass(frozen=True)
class SkewSystem:
    base: BaseMap
    fiber: FiberMapFamily
    ly_base: tuple[float, float] | None = (1.0, 1.0)

    @property
    def domination(self) -> float:
        return self.base.lam ** self.base.xi * self.fiber.alpha

    def require_domination(self) -> None:
        if self.domination >= 1:
            raise ValueError(
                f"Sk2 domination violated: lambda^xi * alpha = "
                f"{self.domination:.6f} >= 1")

    def diagnostics(self, n_cells: int | None = None) -> list[str]:
        out = []
        if self.domination >= 1:
            out.append("Sk2 domination violated")
        if n_cells is not None:
            try:
                self.base.check_grid(n_cells)
            except ValueError:
                out.append("N must be multiple of branch count power")
        return out


@dataclass(frozen=True)
class PerturbationSpec:
    """A reference system, its perturbation, and the declared distance
    data (reparametrization sigma, exceptional sets, displacement)."""

    reference: SkewSystem
    perturbed: SkewSystem
    declared_delta: float
    base_good_set: tuple = ((0.0, 1.0),)
    fiber_good_set: tuple = ((0.0, 1.0),)
    fiber_displacement: float = 0.0
    reference_invariant: Disintegration | None = None
    perturbed_invariant: Disintegration | None = None
    # known closed-form distance ||f_delta - f_0||_"1" (skips pipelines)
    invariant_distance: object = None
    # perturbation size reported in tables (declared_delta may also carry
    # deformation gain); defaults to declared_delta
    nominal_delta: float | None = None

    def __post_init__(self):
        for name, good in (("A1", self.base_good_set),
                           ("A2", self.fiber_good_set)):
            bad = 1.0 - sum(b - a for a, b in good)
            if bad > self.declared_delta + 1e-12:
                raise ValueError(
                    f"exceptional set {name} has measure {bad:.3g} "
                    f"> declared delta {self.declared_delta:.3g}")
        if self.fiber_displacement > self.declared_delta + 1e-12:
            raise ValueError("fiber displacement exceeds declared delta")


# ------------------------------------------------------------- transfer

def _default_eps(n_cells: int) -> float:
    return 1.0 / (4 * n_cells)


def transfer_step(sys: SkewSystem, dis: Disintegration,
                  eps_f: float | None = None) -> Disintegration:
    """One application of the transfer operator on the grid."""
    n = dis.n_cells
    sys.base.check_grid(n)
    if eps_f is None:
        eps_f = _default_eps(n)
    ids, distinct = dis.fiber_ids()
    member = _membership(sys.fiber, n)

    mapped: dict[tuple[int, bool], FiberMeasure] = {}

    def push(fid: int, flag: bool) -> FiberMeasure:
        key = (fid, flag)
        if key not in mapped:
            mapped[key] = sys.fiber.map_for(flag).apply(distinct[fid])
        return mapped[key]

    combos: dict[tuple, FiberMeasure] = {}
    out = []
    for k in range(n):
        sources = sys.base.source_cells(n, k)
        key = tuple((int(ids[c]), member[c], w) for c, w in sources)
        fib = combos.get(key)
        if fib is None:
            parts = [push(int(ids[c]), member[c]).scale(w)
                     for c, w in sources]
            fib = parts[0]
            for extra in parts[1:]:
                fib = fib + extra
            if eps_f:
                fib = coarsen(fib, eps_f)
            combos[key] = fib
        out.append(fib)
    return Disintegration(out, n_cells=n)


def iterate(sys: SkewSystem, dis: Disintegration, n: int,
            eps_f: float | None = None) -> Disintegration:
    if n < 0:
        raise ValueError("n must be >= 0")
    for _ in range(n):
        dis = transfer_step(sys, dis, eps_f=eps_f)
    return dis


@dataclass(frozen=True)
class InvariantResult:
    measure: Disintegration
    converged: bool
    n_steps: int
    last_increment: float
    mass_drift: float
    renormalized: bool


def invariant_measure(sys: SkewSystem, tol: float = 1e-6, n_max: int = 200,
                      eps_f: float | None = None, n_cells: int = 1024,
                      fiber_atoms: int = 256,
                      start: Disintegration | None = None,
                      eps_acc: float | None = None) -> InvariantResult:
    """Cesaro averages of transfer iterates from discretized Lebesgue.

    The running average is accumulated on a 1/(4N) grid (eps_acc) so its
    atom count stays bounded over long runs; this moves the reported
    average by at most eps_acc in the fiberwise-W1 norm.
    """
    sys.require_domination()
    if start is None:
        start = lebesgue_disintegration(n_cells, fiber_atoms)
    n_cells = start.n_cells
    if eps_acc is None:
        eps_acc = _default_eps(n_cells)

    current = start
    avg = start
    increment = math.inf
    steps = 0
    for n in range(1, n_max + 1):
        current = transfer_step(sys, current, eps_f=eps_f)
        new_avg = avg.scale(n / (n + 1)) + current.scale(1 / (n + 1))
        new_avg = coarsen_disintegration(new_avg, eps_acc)
        increment = max(0.0, float(l1_norm(new_avg - avg)))
        avg = new_avg
        steps = n
        if increment < tol:
            break
    drift = float(avg.mass()) - 1.0
    renorm = abs(drift) > 1e-9
    if renorm:
        avg = avg.scale(1.0 / (1.0 + drift))
    return InvariantResult(avg, increment < tol, steps, increment,
                           drift, renorm)


# -------------------------------------------------------------- LY checks

@dataclass(frozen=True)
class LyReport:
    lhs: float
    rhs: float
    margin: float
    p: float
    constants: dict


def ly_check(sys: SkewSystem, dis: Disintegration, p: float,
             A: float | None = None) -> LyReport:
    """Evaluates both sides of the fiberwise variation inequality
    var_p(L mu) <= lambda^p alpha var_p(mu) + (H_hat + 3 q alpha C_h
    A^(xi-p)) sup|mu_x| for a positive measure."""
    if any(w < 0 for f in dis.fibers for _, w in f.atoms()):
        raise ValueError("ly_check requires a positive measure")
    sys.require_domination()
    if A is None:
        A = sys.fiber.A
    base = sys.base
    lam, alpha = base.lam, sys.fiber.alpha
    lhs = var_p(transfer_step(sys, dis, eps_f=0), p, A)
    sup = marginal_density(dis).sup_norm
    h_hat = sys.fiber.h_hat(p)
    extra = 3 * base.branch_count * alpha * base.c_h * A ** (base.xi - p)
    rhs = lam ** p * alpha * var_p(dis, p, A) + (h_hat + extra) * sup
    return LyReport(lhs, rhs, rhs - lhs, p, {
        "lambda": lam, "alpha": alpha, "H_hat": h_hat, "C_h": base.c_h,
        "q": base.branch_count, "A": A})


@dataclass(frozen=True)
class BaseLyReport:
    lhs: float
    rhs: float
    ok: bool


def base_ly_check(sys: SkewSystem, density: np.ndarray, n: int
                  ) -> BaseLyReport:
    if sys.ly_base is None:
        raise ValueError("base map has no declared (A_T, B_T)")
    a_t, b_t = sys.ly_base
    density = np.asarray(density, dtype=float)
    var_in = float(np.sum(np.abs(np.diff(density))))
    l1_in = float(np.mean(np.abs(density)))
    out = density
    for _ in range(n):
        out = sys.base.transfer_density(out)
    lhs = float(np.sum(np.abs(np.diff(out))))
    rhs = a_t * sys.base.lam ** n * var_in + b_t * l1_in
    return BaseLyReport(lhs, rhs, lhs <= rhs + 1e-9)


# ------------------------------------------------------ operator distance

@dataclass(frozen=True)
class OperatorDistance:
    value: float
    battery_size: int
    seed: int


def operator_distance(pspec: PerturbationSpec, battery_size: int = 32,
                      seed: int = 0, n_cells: int = 64,
                      eps_f: float = 2.0 ** -40) -> OperatorDistance:
    """Empirical sup of ||(L0 - L_delta) f||_"1" over a seeded battery of
    unit p-BV measures; a lower estimate of the strong-to-weak operator
    distance."""
    if pspec.reference.base.xi != 1 or pspec.perturbed.base.xi != 1:
        raise ValueError("operator distance requires xi = 1 families")
    battery = unit_pbv_battery(seed, battery_size, n_cells)
    best = 0.0
    for f in battery:
        d = l1_norm(transfer_step(pspec.reference, f, eps_f=eps_f)
                    - transfer_step(pspec.perturbed, f, eps_f=eps_f))
        best = max(best, float(d))
    return OperatorDistance(best, battery_size, seed)


def skorokhod_bound(pspec: PerturbationSpec, grid: int = 100_000) -> float:
    """max(||sigma - Id||_inf, ||1/sigma' - 1||_inf, m(A1^c)) on a dense
    grid; an upper bound for the reparametrization distance."""
    sigma = pspec.perturbed.base.sigma
    bad = 1.0 - sum(b - a for a, b in pspec.base_good_set)
    if sigma is None:
        return max(0.0, bad)
    xs = np.arange(grid + 1) / grid
    derivs = sigma.deriv(xs)
    if np.min(derivs) <= 0:
        raise ValueError("sigma is not a diffeomorphism")
    d_id = float(np.max(np.abs(sigma(xs) - xs)))
    d_deriv = float(np.max(np.abs(1.0 / derivs - 1.0)))
    return max(d_id, d_deriv, bad)
