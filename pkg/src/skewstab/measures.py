"""Signed measures on [0,1] x T^d disintegrated along a uniform base grid.

A FiberMeasure is a finite signed atomic measure on the d-torus; a
Disintegration stores one fiber restriction per base cell [i/N,(i+1)/N).
The W1 norm here is the dual Lipschitz norm with the extra sup bound
(|g| <= 1, Lip(g) <= 1), evaluated by linear programming with exact
rational arithmetic on small programs, plus two closed-form fast paths:
single-signed measures (norm = |total mass|) and balanced measures on the
circle (cdf median formula; the cap constraint never binds there because
transporting over distance <= 1/2 always beats creating mass at cost 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .simplex import solve_simplex

__all__ = [
    "FiberMeasure",
    "Disintegration",
    "NormReport",
    "MarginalDensity",
    "w1_norm",
    "l1_norm",
    "oscillation",
    "var_p",
    "pbv_norm",
    "marginal_density",
    "pushforward_fiber",
    "coarsen",
    "coarsen_disintegration",
    "piecewise_constant_approx",
    "uniform_fiber",
    "rotation_orbit_fiber",
    "lebesgue_disintegration",
    "product_disintegration",
]

_DROP_TOL = 1e-15
# exact rational LP is used up to this atom count (oracle-grade path)
_EXACT_LP_MAX_ATOMS = 8
# own dense float simplex up to here, scipy linprog beyond
_DENSE_LP_MAX_ATOMS = 96
_BALANCE_RTOL = 1e-12


def _is_exact_scalar(v) -> bool:
    return isinstance(v, (Fraction, int)) and not isinstance(v, bool)


def _mod1(v):
    if isinstance(v, Fraction):
        return v % 1
    return v - math.floor(v)


class FiberMeasure:
    """Finite signed atomic measure on T^d with a float or exact backend.

    Atoms are canonicalized at construction: positions reduced mod 1,
    coincident atoms merged, and (float backend) weights below 1e-15
    dropped; the exact backend only drops exact zeros so that total mass
    stays an identity.  Atoms are kept sorted by position, which makes the
    byte-level content key deterministic.
    """

    __slots__ = ("dimension", "exact", "positions", "weights", "_key")

    def __init__(self, positions, weights, dimension: int | None = None,
                 exact: bool | None = None):
        if (exact is False and isinstance(positions, np.ndarray)
                and isinstance(weights, np.ndarray)):
            arr = np.asarray(positions, dtype=float)
            if arr.ndim == 1:
                arr = arr.reshape(-1, 1)
            self.dimension = int(dimension) if dimension else \
                (arr.shape[1] if arr.size else 1)
            self.exact = False
            self._init_float(arr, np.asarray(weights, dtype=float))
            self._key = None
            return
        pos_list = []
        w_list = []
        for p, w in zip(positions, weights):
            if isinstance(p, (tuple, list, np.ndarray)):
                pos_list.append(tuple(p))
            else:
                pos_list.append((p,))
            w_list.append(w)
        if dimension is None:
            dimension = len(pos_list[0]) if pos_list else 1
        if exact is None:
            exact = any(
                any(_is_exact_scalar(c) for c in p) for p in pos_list
            ) or any(_is_exact_scalar(w) for w in w_list)
            if pos_list and not all(
                all(_is_exact_scalar(c) for c in p) for p in pos_list
            ):
                exact = exact and False
        self.dimension = int(dimension)
        self.exact = bool(exact)
        if self.exact:
            merged: dict[tuple, Fraction] = {}
            for p, w in zip(pos_list, w_list):
                key = tuple(_mod1(Fraction(c)) for c in p)
                merged[key] = merged.get(key, Fraction(0)) + Fraction(w)
            items = sorted((k, v) for k, v in merged.items() if v != 0)
            self.positions = tuple(k for k, _ in items)
            self.weights = tuple(v for _, v in items)
        else:
            arr = np.asarray(pos_list, dtype=float).reshape(
                len(pos_list), self.dimension)
            self._init_float(arr, np.asarray(w_list, dtype=float))
        self._key = None

    def _init_float(self, arr: np.ndarray, w: np.ndarray) -> None:
        if len(w) == 0:
            self.positions = np.empty((0, self.dimension), dtype=float)
            self.weights = np.empty(0, dtype=float)
            return
        arr = arr - np.floor(arr)
        arr[arr >= 1.0] = 0.0
        order = np.lexsort(arr.T[::-1])
        arr = arr[order]
        w = w[order]
        if len(w) > 1:
            fresh = np.any(arr[1:] != arr[:-1], axis=1)
            starts = np.flatnonzero(np.concatenate(([True], fresh)))
            w = np.add.reduceat(w, starts)
            arr = arr[starts]
        keep = np.abs(w) >= _DROP_TOL
        if not keep.all():
            arr, w = arr[keep], w[keep]
        self.positions = arr
        self.weights = w

    # -- basic queries ---------------------------------------------------

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def n_atoms(self) -> int:
        return len(self.weights)

    def mass(self):
        if self.exact:
            return sum(self.weights, Fraction(0))
        return float(math.fsum(self.weights))

    def abs_mass(self):
        if self.exact:
            return sum((abs(w) for w in self.weights), Fraction(0))
        return float(math.fsum(abs(w) for w in self.weights))

    def content_key(self):
        if self._key is None:
            if self.exact:
                self._key = (self.dimension, True, self.positions, self.weights)
            else:
                self._key = (self.dimension, False, self.positions.tobytes(),
                             self.weights.tobytes())
        return self._key

    def atoms(self) -> list[tuple[tuple, object]]:
        return [(tuple(p), w) for p, w in zip(self.positions, self.weights)]

    # -- conversions -----------------------------------------------------

    def to_float(self) -> "FiberMeasure":
        if not self.exact:
            return self
        return FiberMeasure([tuple(float(c) for c in p) for p in self.positions],
                            [float(w) for w in self.weights],
                            dimension=self.dimension, exact=False)

    # -- algebra ----------------------------------------------------------

    def scale(self, s) -> "FiberMeasure":
        if self.exact and _is_exact_scalar(s):
            return FiberMeasure(self.positions, [Fraction(s) * w for w in self.weights],
                                dimension=self.dimension, exact=True)
        a = self.to_float()
        return FiberMeasure(a.positions, a.weights * float(s),
                            dimension=self.dimension, exact=False)

    def __add__(self, other: "FiberMeasure") -> "FiberMeasure":
        if self.dimension != other.dimension:
            raise ValueError("dimension mismatch")
        if self.exact and other.exact:
            return FiberMeasure(self.positions + other.positions,
                                self.weights + other.weights,
                                dimension=self.dimension, exact=True)
        a, b = self.to_float(), other.to_float()
        return FiberMeasure(np.concatenate([a.positions, b.positions]),
                            np.concatenate([a.weights, b.weights]),
                            dimension=self.dimension, exact=False)

    def __sub__(self, other: "FiberMeasure") -> "FiberMeasure":
        return self + other.scale(-1)

    def __neg__(self) -> "FiberMeasure":
        return self.scale(-1)

    def translate(self, shift) -> "FiberMeasure":
        """Pushforward by y -> y + shift on T^d."""
        if isinstance(shift, (tuple, list)):
            vec = tuple(shift)
        else:
            vec = (shift,) * self.dimension
        if self.exact and all(_is_exact_scalar(c) for c in vec):
            new_pos = [tuple(_mod1(c + Fraction(s)) for c, s in zip(p, vec))
                       for p in self.positions]
            return FiberMeasure(new_pos, self.weights, dimension=self.dimension,
                                exact=True)
        a = self.to_float()
        arr = a.positions + np.asarray([float(s) for s in vec])
        return FiberMeasure(arr, a.weights, dimension=self.dimension, exact=False)

    def apply_map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "FiberMeasure":
        """Pushforward by a vectorized float map on positions (d = 1)."""
        a = self.to_float()
        if len(a) == 0:
            return a
        new = fn(a.positions[:, 0]) if self.dimension == 1 else fn(a.positions)
        new = np.asarray(new, dtype=float).reshape(len(a), -1)
        return FiberMeasure(new, a.weights, dimension=self.dimension, exact=False)


def _empty_like(dimension: int, exact: bool) -> FiberMeasure:
    return FiberMeasure([], [], dimension=dimension, exact=exact)


# --------------------------------------------------------------------------
# W1 norm
# --------------------------------------------------------------------------


def _circle_dist(a, b):
    d = abs(a - b)
    if isinstance(d, Fraction):
        return min(d, 1 - d)
    return min(d, 1.0 - d)


def _torus_dist(p, q, exact: bool):
    if len(p) == 1:
        return _circle_dist(p[0], q[0])
    acc = 0.0
    for a, b in zip(p, q):
        c = float(_circle_dist(a, b))
        acc += c * c
    return math.sqrt(acc)


def _w1_balanced_circle(fm: FiberMeasure):
    """min_c integral |F(t) - c| dt on the circle: exact transport value
    of a balanced measure, equal to the capped dual norm (cap never binds)."""
    if fm.exact:
        pos = [p[0] for p in fm.positions]
        w = list(fm.weights)
        n = len(w)
        prefix = []
        acc = Fraction(0)
        for wi in w:
            acc += wi
            prefix.append(acc)
        gaps = [pos[i + 1] - pos[i] for i in range(n - 1)]
        gaps.append(pos[0] + 1 - pos[n - 1])
        pairs = sorted(zip(prefix, gaps))
        total = sum(gaps, Fraction(0))
        half = total / 2
        acc = Fraction(0)
        c = pairs[-1][0]
        for f, g in pairs:
            acc += g
            if acc >= half:
                c = f
                break
        return sum((g * abs(f - c) for f, g in zip(prefix, gaps)), Fraction(0))
    pos = fm.positions[:, 0]
    w = fm.weights
    n = len(w)
    prefix = np.cumsum(w)
    gaps = np.empty(n)
    gaps[:-1] = np.diff(pos)
    gaps[-1] = pos[0] + 1.0 - pos[-1]
    order = np.argsort(prefix, kind="stable")
    cum = np.cumsum(gaps[order])
    half = cum[-1] / 2.0
    idx = int(np.searchsorted(cum, half, side="left"))
    c = prefix[order[min(idx, n - 1)]]
    return float(np.dot(gaps, np.abs(prefix - c)))


def _w1_lp(fm: FiberMeasure, adjacent: bool, force_solver: str | None = None):
    """Capped-Lipschitz dual LP.  adjacent=True uses only cyclically
    consecutive constraints (valid on the circle: chaining along either arc
    reproduces every pairwise constraint)."""
    n = len(fm)
    exact_ok = fm.exact and fm.dimension == 1 and n <= _EXACT_LP_MAX_ATOMS
    solver = force_solver
    if solver is None:
        if exact_ok:
            solver = "exact"
        elif n <= _DENSE_LP_MAX_ATOMS:
            solver = "dense"
        else:
            solver = "scipy"

    if fm.dimension == 1 and adjacent:
        pos = [p[0] for p in fm.positions]
        pairs = []
        for i in range(n - 1):
            pairs.append((i, i + 1, _circle_dist(pos[i], pos[i + 1])))
        if n > 2:
            pairs.append((n - 1, 0, _circle_dist(pos[n - 1], pos[0])))
    else:
        pairs = []
        for i in range(n):
            for j in range(i + 1, n):
                pairs.append((i, j, _torus_dist(fm.positions[i], fm.positions[j],
                                                fm.exact)))

    if solver == "scipy":
        from scipy import sparse
        from scipy.optimize import linprog

        w = np.asarray([float(x) for x in fm.weights])
        rows, cols, data, rhs = [], [], [], []
        r = 0
        for i, j, d in pairs:
            rows += [r, r, r + 1, r + 1]
            cols += [i, j, i, j]
            data += [1.0, -1.0, -1.0, 1.0]
            rhs += [float(d), float(d)]
            r += 2
        A = sparse.coo_matrix((data, (rows, cols)), shape=(r, n))
        res = linprog(-w, A_ub=A.tocsc(), b_ub=np.asarray(rhs), bounds=(-1.0, 1.0),
                      method="highs")
        if not res.success:
            raise RuntimeError(f"linprog failed: {res.message}")
        return float(-res.fun)

    exact = solver == "exact"
    if exact:
        w = [Fraction(x) for x in fm.weights]
        two = Fraction(2)
    else:
        w = [float(x) for x in fm.weights]
        two = 2.0
    # substitute h = g + 1 in [0, 2] so the slack basis is feasible
    A = []
    b = []
    for i in range(n):
        row = [0] * n
        row[i] = 1
        A.append(row)
        b.append(two)
    for i, j, d in pairs:
        dd = d if exact else float(d)
        row = [0] * n
        row[i] = 1
        row[j] = -1
        A.append(row)
        b.append(dd)
        A.append([-v for v in row])
        b.append(dd)
    val, x = solve_simplex(w, A, b, exact=exact)
    total = sum(w) if exact else math.fsum(w)
    out = val - total
    return out if exact else float(out)


def w1_norm(fm: FiberMeasure, *, method: str = "auto"):
    """Dual norm sup { integral g d(fm) : |g| <= 1, Lip(g) <= 1 } on T^d.

    method: "auto" picks closed forms where valid, "lp" forces the linear
    program (adjacent constraints for d = 1), "lp_full" forces the full
    pairwise program.  Returns a Fraction on fully exact fast paths.
    Near-balanced float measures (|mass| <= 1e-12 * |weights|_1) reuse the
    balanced closed form; the error of that shortcut is <= 2|mass|.
    """
    n = len(fm)
    if n == 0:
        return Fraction(0) if fm.exact else 0.0
    if method == "lp":
        return _w1_lp(fm, adjacent=True)
    if method == "lp_full":
        return _w1_lp(fm, adjacent=False)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    if fm.exact:
        signs_pos = all(w >= 0 for w in fm.weights)
        signs_neg = all(w <= 0 for w in fm.weights)
    else:
        signs_pos = bool(np.all(fm.weights >= 0))
        signs_neg = bool(np.all(fm.weights <= 0))
    if signs_pos or signs_neg:
        return abs(fm.mass())
    if fm.dimension == 1:
        m = fm.mass()
        if m == 0:
            return _w1_balanced_circle(fm)
        if not fm.exact and abs(m) <= _BALANCE_RTOL * fm.abs_mass():
            return _w1_balanced_circle(fm)
        return _w1_lp(fm, adjacent=True)
    return _w1_lp(fm, adjacent=False)


# --------------------------------------------------------------------------
# Disintegration
# --------------------------------------------------------------------------


class Disintegration:
    """Grid disintegration: fibers[i] is the restriction to cell i x T^d,
    so fibers[i].mass() is the measure of that slab and the marginal
    density reads N * mass on each cell."""

    __slots__ = ("n_cells", "dimension", "fibers", "_uniform")

    def __init__(self, fibers: Sequence[FiberMeasure], n_cells: int | None = None,
                 uniform: bool | None = None):
        fibers = list(fibers)
        if n_cells is None:
            n_cells = len(fibers)
        if len(fibers) != n_cells:
            raise ValueError("fiber count must equal n_cells")
        if not fibers:
            raise ValueError("empty disintegration")
        self.n_cells = int(n_cells)
        self.dimension = fibers[0].dimension
        for f in fibers:
            if f.dimension != self.dimension:
                raise ValueError("fiber dimension mismatch")
        self.fibers = fibers
        self._uniform = uniform

    @property
    def exact(self) -> bool:
        return all(f.exact for f in self.fibers)

    def is_uniform(self) -> bool:
        """True when every fiber has identical content (x-constant measure)."""
        if self._uniform is None:
            k0 = self.fibers[0].content_key()
            self._uniform = all(f.content_key() == k0 for f in self.fibers[1:])
        return self._uniform

    def mass(self):
        if self.exact:
            return sum((f.mass() for f in self.fibers), Fraction(0))
        return float(math.fsum(float(f.mass()) for f in self.fibers))

    def total_weight_abs(self):
        if self.exact:
            return sum((f.abs_mass() for f in self.fibers), Fraction(0))
        return float(math.fsum(float(f.abs_mass()) for f in self.fibers))

    def fiber_ids(self) -> tuple[np.ndarray, list[FiberMeasure]]:
        """Deduplicate fibers by content; returns (id per cell, distinct)."""
        table: dict = {}
        distinct: list[FiberMeasure] = []
        ids = np.empty(self.n_cells, dtype=np.int64)
        for i, f in enumerate(self.fibers):
            k = f.content_key()
            j = table.get(k)
            if j is None:
                j = len(distinct)
                table[k] = j
                distinct.append(f)
            ids[i] = j
        return ids, distinct

    def scale(self, s) -> "Disintegration":
        # repeated fiber objects map to one shared result
        cache: dict[int, FiberMeasure] = {}
        out = []
        for f in self.fibers:
            g = cache.get(id(f))
            if g is None:
                g = f.scale(s)
                cache[id(f)] = g
            out.append(g)
        return Disintegration(out, self.n_cells, uniform=self._uniform)

    def _zip_op(self, other: "Disintegration", op) -> "Disintegration":
        self._check_compatible(other)
        cache: dict[tuple[int, int], FiberMeasure] = {}
        out = []
        for a, b in zip(self.fibers, other.fibers):
            key = (id(a), id(b))
            g = cache.get(key)
            if g is None:
                g = op(a, b)
                cache[key] = g
            out.append(g)
        return Disintegration(out, self.n_cells)

    def __add__(self, other: "Disintegration") -> "Disintegration":
        return self._zip_op(other, lambda a, b: a + b)

    def __sub__(self, other: "Disintegration") -> "Disintegration":
        return self._zip_op(other, lambda a, b: a - b)

    def _check_compatible(self, other: "Disintegration") -> None:
        if self.n_cells != other.n_cells or self.dimension != other.dimension:
            raise ValueError("incompatible disintegrations")

    def to_float(self) -> "Disintegration":
        return Disintegration([f.to_float() for f in self.fibers], self.n_cells,
                              uniform=self._uniform)


# -- constructors -----------------------------------------------------------


def uniform_fiber(n_atoms: int, exact: bool = False, weight_total=1) -> FiberMeasure:
    """Uniform probability-like measure: n atoms at j/n, total weight as given."""
    if exact:
        w = Fraction(weight_total) / n_atoms
        return FiberMeasure([Fraction(j, n_atoms) for j in range(n_atoms)],
                            [w] * n_atoms, dimension=1, exact=True)
    w = float(weight_total) / n_atoms
    return FiberMeasure(np.arange(n_atoms) / n_atoms, np.full(n_atoms, w),
                        dimension=1, exact=False)


def rotation_orbit_fiber(p: int, q: int, exact: bool = True,
                         offset=0) -> FiberMeasure:
    """Orbit measure of the rotation by p/q started at `offset`: q atoms of
    weight 1/q at offset + j p/q mod 1."""
    if math.gcd(p, q) != 1:
        raise ValueError("p/q must be reduced")
    if exact:
        off = Fraction(offset)
        pos = [_mod1(off + Fraction(j * p, q)) for j in range(q)]
        return FiberMeasure(pos, [Fraction(1, q)] * q, dimension=1, exact=True)
    pos = (float(offset) + np.arange(q) * (p / q)) % 1.0
    return FiberMeasure(pos, np.full(q, 1.0 / q), dimension=1, exact=False)


def lebesgue_disintegration(n_cells: int, fiber_atoms: int,
                            exact: bool = False) -> Disintegration:
    """Discretized Lebesgue probability on [0,1] x T^1: every cell carries a
    uniform fiber grid with total weight 1/N."""
    if exact:
        f = uniform_fiber(fiber_atoms, exact=True, weight_total=Fraction(1, n_cells))
    else:
        f = uniform_fiber(fiber_atoms, exact=False, weight_total=1.0 / n_cells)
    return Disintegration([f] * n_cells, n_cells, uniform=True)


def product_disintegration(n_cells: int, fiber: FiberMeasure) -> Disintegration:
    """m (x) fiber: each cell carries fiber scaled by 1/N."""
    if fiber.exact:
        f = fiber.scale(Fraction(1, n_cells))
    else:
        f = fiber.scale(1.0 / n_cells)
    return Disintegration([f] * n_cells, n_cells, uniform=True)


# --------------------------------------------------------------------------
# norms on disintegrations
# --------------------------------------------------------------------------


def l1_norm(dis: Disintegration):
    """Sum of fiberwise W1 norms: the grid reading of the disintegrated
    L1 norm (the per-length fiber is N * fibers[i] on a cell of length 1/N,
    so the factors cancel)."""
    ids, distinct = dis.fiber_ids()
    vals = [w1_norm(f) for f in distinct]
    counts = np.bincount(ids, minlength=len(distinct))
    if all(isinstance(v, Fraction) for v in vals):
        return sum((v * int(c) for v, c in zip(vals, counts)), Fraction(0))
    return float(math.fsum(float(v) * int(c) for v, c in zip(vals, counts)))


class _PairDistances:
    """Lazy matrix of W1 distances between distinct per-length fibers."""

    def __init__(self, dis: Disintegration):
        self.n = dis.n_cells
        self.distinct = [f for f in dis.fiber_ids()[1]]
        self._cache: dict[tuple[int, int], float] = {}

    def get(self, a: int, b: int) -> float:
        if a == b:
            return 0.0
        key = (a, b) if a < b else (b, a)
        v = self._cache.get(key)
        if v is None:
            diff = self.distinct[key[0]] - self.distinct[key[1]]
            v = float(w1_norm(diff)) * self.n
            self._cache[key] = v
        return v

    def set_max(self, idset: frozenset) -> float:
        ids = sorted(idset)
        best = 0.0
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                d = self.get(ids[i], ids[j])
                if d > best:
                    best = d
        return best


def _runs(ids: np.ndarray) -> list[tuple[int, int, int]]:
    runs = []
    start = 0
    for i in range(1, len(ids) + 1):
        if i == len(ids) or ids[i] != ids[start]:
            runs.append((start, i - 1, int(ids[start])))
            start = i
    return runs


def _radius_cells(dis: Disintegration, r) -> int:
    scaled = float(r) * dis.n_cells
    if scaled < 1 - 1e-9:
        raise ValueError("radius unresolvable")
    j = int(round(scaled))
    if abs(scaled - j) > 1e-9:
        raise ValueError("radius must be a multiple of 1/n_cells")
    return j


def oscillation(dis: Disintegration, i: int, r) -> float:
    """Max W1 distance between per-length fibers over pairs of cells whose
    centers lie within r of cell i's center (the grid essential sup)."""
    if not 0 <= i < dis.n_cells:
        raise ValueError("cell index out of range")
    j = _radius_cells(dis, r)
    ids, _ = dis.fiber_ids()
    pd = _PairDistances(dis)
    lo = max(0, i - j)
    hi = min(dis.n_cells - 1, i + j)
    present = frozenset(int(v) for v in np.unique(ids[lo:hi + 1]))
    return pd.set_max(present)


def var_p(dis: Disintegration, p: float = 1.0, A: float = 0.5) -> float:
    """sup over grid radii r = j/N <= ~A of (1/N) sum_i r^-p osc(i, r).

    Cost scales with the number of distinct fibers (windows are resolved
    run-by-run with memoized pairwise distances), so measures with few
    distinct fibers evaluate quickly at any N.
    """
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    if not 0 < A <= 0.5:
        raise ValueError("A must lie in (0, 1/2]")
    n = dis.n_cells
    ids, distinct = dis.fiber_ids()
    if len(distinct) == 1:
        return 0.0
    pd = _PairDistances(dis)
    runs = _runs(ids)
    starts = np.array([r[0] for r in runs])
    ends = np.array([r[1] for r in runs])
    rfid = np.array([r[2] for r in runs])
    jmax = max(1, math.ceil(A * n - 1e-12))
    osc_memo: dict[frozenset, float] = {}
    best = 0.0
    for j in range(1, jmax + 1):
        enter = starts - j
        exit_ = ends + j
        bounds = np.unique(np.clip(np.concatenate([enter, exit_ + 1, [0, n]]), 0, n))
        total = 0.0
        for a, b in zip(bounds[:-1], bounds[1:]):
            if b <= a:
                continue
            present = frozenset(rfid[(enter <= a) & (a <= exit_)].tolist())
            osc = osc_memo.get(present)
            if osc is None:
                osc = pd.set_max(present)
                osc_memo[present] = osc
            total += osc * (b - a)
        r = j / n
        val = (total / n) * r ** (-p)
        if val > best:
            best = val
    return best


@dataclass(frozen=True)
class NormReport:
    """l1 + var_p decomposition of the p-bounded-variation norm."""
    l1: float
    var_p: float
    pbv: float
    p: float
    A: float


def pbv_norm(dis: Disintegration, p: float = 1.0, A: float = 0.5) -> NormReport:
    l1 = float(l1_norm(dis))
    vp = var_p(dis, p=p, A=A)
    return NormReport(l1=l1, var_p=vp, pbv=l1 + vp, p=p, A=A)


@dataclass(frozen=True)
class MarginalDensity:
    """Piecewise-constant base marginal: values[i] = N * fibers[i].mass()."""
    values: np.ndarray
    sup_norm: float
    bv_jump_sum: float

    @property
    def integral(self) -> float:
        return float(np.mean(self.values))


def marginal_density(dis: Disintegration) -> MarginalDensity:
    vals = np.array([float(f.mass()) for f in dis.fibers]) * dis.n_cells
    sup = float(np.max(np.abs(vals))) if len(vals) else 0.0
    bv = float(np.sum(np.abs(np.diff(vals))))
    return MarginalDensity(values=vals, sup_norm=sup, bv_jump_sum=bv)


# --------------------------------------------------------------------------
# coarsening and block averaging
# --------------------------------------------------------------------------


def pushforward_fiber(fm: FiberMeasure, f) -> FiberMeasure:
    """Pushforward of an atom measure by a circle map.

    f may expose .apply(FiberMeasure) (structured maps keep exactness
    where they can) or be a plain vectorized callable on positions."""
    if hasattr(f, "apply"):
        return f.apply(fm)
    return fm.apply_map(f)


def coarsen(fm: FiberMeasure, eps) -> FiberMeasure:
    """Snap atoms to the left edges of a uniform eps-grid and merge.

    Mass is preserved exactly; each atom moves by < eps, so any W1-type
    norm changes by at most eps * sum |w_i|.  eps = 0 disables snapping."""
    if eps == 0:
        return fm
    if fm.exact:
        e = Fraction(eps)
        if not 0 < e < 1:
            raise ValueError("eps must lie in (0, 1)")
        new_pos = [tuple((c / e).__floor__() * e for c in p) for p in fm.positions]
        return FiberMeasure(new_pos, fm.weights, dimension=fm.dimension, exact=True)
    e = float(eps)
    if not 0.0 < e < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if len(fm) == 0:
        return fm
    snapped = np.floor(fm.positions / e) * e
    return FiberMeasure(snapped, fm.weights, dimension=fm.dimension, exact=False)


def coarsen_disintegration(dis: Disintegration, eps) -> Disintegration:
    if eps == 0:
        return dis
    ids, distinct = dis.fiber_ids()
    snapped = [coarsen(f, eps) for f in distinct]
    return Disintegration([snapped[i] for i in ids], dis.n_cells,
                          uniform=dis._uniform)


def piecewise_constant_approx(dis: Disintegration, eps) -> Disintegration:
    """Average fibers over each eps-block of base cells (eps = 1/m, m | N);
    the result is x-constant on blocks and unchanged on x-constant input."""
    m = int(round(1.0 / float(eps)))
    if abs(m * float(eps) - 1.0) > 1e-9:
        raise ValueError("eps must equal 1/m for an integer m")
    if dis.n_cells % m != 0:
        raise ValueError("block count must divide n_cells")
    s = dis.n_cells // m
    out: list[FiberMeasure] = []
    for blk in range(m):
        chunk = dis.fibers[blk * s:(blk + 1) * s]
        k0 = chunk[0].content_key()
        if all(f.content_key() == k0 for f in chunk[1:]):
            avg = chunk[0]
        else:
            acc = chunk[0]
            for f in chunk[1:]:
                acc = acc + f
            avg = acc.scale(Fraction(1, s) if acc.exact else 1.0 / s)
        out.extend([avg] * s)
    return Disintegration(out, dis.n_cells)
