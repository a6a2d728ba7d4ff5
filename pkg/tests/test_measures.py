"""Tests for fiber measures, disintegrations and the anisotropic norms."""

from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import dense_grid_w1, oscillation_direct, var_p_direct
from skewstab.batteries import (
    positive_disintegrations,
    signed_disintegrations,
    signed_fiber_measures,
)
from skewstab.measures import (
    Disintegration,
    FiberMeasure,
    coarsen,
    l1_norm,
    lebesgue_disintegration,
    marginal_density,
    oscillation,
    pbv_norm,
    piecewise_constant_approx,
    product_disintegration,
    rotation_orbit_fiber,
    uniform_fiber,
    var_p,
    w1_norm,
)


def dipole(a: float, b: float) -> FiberMeasure:
    return FiberMeasure([[a], [b]], [1.0, -1.0])


# ---------------------------------------------------------------- w1_norm

def test_w1_single_atom_attains_cap():
    assert w1_norm(FiberMeasure([[0.3]], [1.0])) == 1.0


def test_w1_dipole_values():
    assert w1_norm(dipole(0.0, 0.1)) == pytest.approx(0.1, abs=1e-12)
    assert w1_norm(dipole(0.0, 0.5)) == pytest.approx(0.5, abs=1e-12)


def test_w1_empty():
    assert w1_norm(FiberMeasure([], [], dimension=1)) == 0.0


def test_w1_dipoles_match_dense_grid_oracle():
    assert dense_grid_w1(dipole(0.0, 0.1)) == pytest.approx(0.1, abs=1e-3)
    assert dense_grid_w1(dipole(0.0, 0.5)) == pytest.approx(0.5, abs=1e-3)


def test_oracle_formulations_agree():
    # validates the difference-variable oracle against the literal one
    for i, fm in enumerate(signed_fiber_measures(101, 8, grid=10_000)):
        lit = dense_grid_w1(fm, formulation="literal")
        diff = dense_grid_w1(fm, formulation="difference")
        assert diff == pytest.approx(lit, abs=1e-9), f"case {i}"


def test_w1_fast_path_matches_oracle_sample():
    for i, fm in enumerate(signed_fiber_measures(5, 30, grid=10_000)):
        assert w1_norm(fm) == pytest.approx(dense_grid_w1(fm), abs=1e-3), \
            f"case {i}"


def test_w1_norm_axioms_500_trials():
    measures = signed_fiber_measures(23, 1000)
    for a, b in zip(measures[:500], measures[500:]):
        na, nb, nab = w1_norm(a), w1_norm(b), w1_norm(a + b)
        assert nab <= na + nb + 1e-9
        assert w1_norm(a.scale(-2.5)) == pytest.approx(2.5 * na, abs=1e-9)


def test_w1_positive_equals_mass():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(1, 7))
        fm = FiberMeasure(rng.random((n, 1)), rng.uniform(0.1, 1.0, n))
        assert w1_norm(fm) == fm.mass()


def test_w1_bounded_by_total_variation():
    for fm in signed_fiber_measures(29, 100):
        assert w1_norm(fm) <= fm.abs_mass() + 1e-12


def test_w1_adjacent_equals_full_pairwise_200_trials():
    for i, fm in enumerate(signed_fiber_measures(31, 200)):
        assert w1_norm(fm, method="lp") == pytest.approx(
            w1_norm(fm, method="lp_full"), abs=1e-9), f"case {i}"


def test_w1_balanced_median_equals_lp():
    fm = FiberMeasure([[0.0], [0.25], [0.5], [0.75]], [1, -1, 1, -1])
    assert w1_norm(fm) == pytest.approx(0.5, abs=1e-12)
    assert w1_norm(fm, method="lp") == pytest.approx(0.5, abs=1e-12)
    rng = np.random.default_rng(41)
    for _ in range(50):
        n = int(rng.integers(2, 7))
        w = rng.uniform(-1, 1, n)
        w[-1] = -np.sum(w[:-1])
        fm = FiberMeasure(rng.random((n, 1)), w)
        assert w1_norm(fm) == pytest.approx(w1_norm(fm, method="lp"), abs=1e-9)


def test_w1_exact_backend_returns_fractions():
    fm = FiberMeasure([[F(0)], [F(1, 10)]], [F(1), F(-1)])
    assert w1_norm(fm) == F(1, 10)
    fm = FiberMeasure([[F(0)], [F(1, 4)], [F(1, 2)]], [F(1), F(-1, 2), F(1, 4)])
    exact = w1_norm(fm)
    assert isinstance(exact, F)
    assert w1_norm(fm.to_float()) == pytest.approx(float(exact), abs=1e-12)


def test_w1_uniform_minus_orbit_closed_form():
    # 1/(4k) holds exactly when the finer count is an even multiple of k
    assert w1_norm(uniform_fiber(64, exact=True)
                   - uniform_fiber(4, exact=True)) == F(1, 16)
    assert w1_norm(uniform_fiber(2048, exact=True)
                   - rotation_orbit_fiber(1, 16)) == F(1, 64)


def test_w1_two_dimensional_dipole():
    fm = FiberMeasure([[0.0, 0.0], [0.3, 0.4]], [1.0, -1.0])
    assert w1_norm(fm) == pytest.approx(0.5, abs=1e-9)
    fm = FiberMeasure([[0.1, 0.1], [0.1, 0.1]], [1.0, 2.0])
    assert w1_norm(fm) == pytest.approx(3.0, abs=1e-12)


def test_duplicate_atoms_merge_and_tiny_weights_drop():
    fm = FiberMeasure([[0.2], [0.2], [0.7]], [0.5, 0.5, 1e-16])
    assert fm.n_atoms == 1
    assert fm.mass() == pytest.approx(1.0)


# ---------------------------------------------------------------- coarsen

def test_coarsen_merges_within_bin():
    fm = coarsen(FiberMeasure([[0.101], [0.102]], [1.0, 1.0]), 0.01)
    assert fm.n_atoms == 1
    assert fm.mass() == pytest.approx(2.0)


def test_coarsen_preserves_mass():
    rng = np.random.default_rng(5)
    for _ in range(20):
        fm = FiberMeasure(rng.random((50, 1)), rng.uniform(-1, 1, 50))
        out = coarsen(fm, 1 / 128)
        assert abs(out.mass() - fm.mass()) <= 1e-12


def test_coarsen_w1_perturbation_bound():
    rng = np.random.default_rng(6)
    fm = FiberMeasure(rng.random((1000, 1)), rng.uniform(-1, 1, 1000))
    eps = 1 / 256
    out = coarsen(fm, eps)
    assert abs(w1_norm(out) - w1_norm(fm)) <= eps * fm.abs_mass() + 1e-9


# ---------------------------------------------------------------- l1_norm

def test_l1_lebesgue_probability():
    assert l1_norm(lebesgue_disintegration(64, 16)) == pytest.approx(1.0, abs=1e-12)


def test_l1_zero_measure():
    zero = FiberMeasure([], [], dimension=1)
    assert l1_norm(Disintegration([zero] * 8, n_cells=8)) == 0.0


def test_l1_lebesgue_minus_uniform_orbit():
    diff = lebesgue_disintegration(32, 64, exact=True).scale(-1) + \
        product_disintegration(32, uniform_fiber(4, exact=True))
    assert l1_norm(diff) == F(1, 16)


# ------------------------------------------------------------- oscillation

def test_oscillation_x_constant_is_zero():
    dis = product_disintegration(16, FiberMeasure([[0.2]], [1.0]))
    for i in range(16):
        assert oscillation(dis, i, 2 / 16) == 0.0


def test_oscillation_spike_example():
    n = 16
    f0 = FiberMeasure([[0.0]], [1.0])
    fh = FiberMeasure([[0.5]], [1.0])
    dis = Disintegration([f0] + [fh] * (n - 1), n_cells=n)
    assert oscillation(dis, 0, 2 / n) == pytest.approx(n * 0.5, abs=1e-9)


def test_oscillation_monotone_in_radius():
    for dis in signed_disintegrations(47, 5, 16):
        prev = 0.0
        for j in range(1, 8):
            cur = oscillation(dis, 8, j / 16)
            assert cur >= prev - 1e-12
            prev = cur


def test_oscillation_matches_direct_definition():
    for dis in signed_disintegrations(53, 4, 12):
        for i in (0, 5, 11):
            for j in (1, 3, 6):
                assert oscillation(dis, i, j / 12) == pytest.approx(
                    oscillation_direct(dis, i, j / 12), abs=1e-9)


def test_oscillation_radius_errors():
    dis = lebesgue_disintegration(16, 4)
    with pytest.raises(ValueError, match="radius unresolvable"):
        oscillation(dis, 0, 1 / 64)
    with pytest.raises(ValueError, match="multiple of 1/n_cells"):
        oscillation(dis, 0, 0.11)


# ------------------------------------------------------------------ var_p

def single_jump(n: int) -> Disintegration:
    left = FiberMeasure([[0.0]], [1.0 / n])
    right = FiberMeasure([[0.5]], [1.0 / n])
    return Disintegration([left] * (n // 2) + [right] * (n // 2), n_cells=n)


def test_var_p_x_constant_zero():
    dis = product_disintegration(32, FiberMeasure([[0.1], [0.6]], [0.5, 0.5]))
    assert var_p(dis, 1.0, 0.5) == 0.0


def test_var_p_single_jump_frozen():
    # radius-independent value 1.0 at p = 1; halving n changes nothing
    assert var_p(single_jump(64), 1.0, 0.5) == pytest.approx(1.0, abs=1e-12)
    assert var_p(single_jump(32), 1.0, 0.5) == pytest.approx(1.0, abs=1e-12)
    assert var_p(single_jump(64), 0.5, 0.5) == pytest.approx(
        2 ** -0.5, abs=1e-12)


def test_var_p_homogeneous():
    for dis in signed_disintegrations(59, 5, 16):
        v = var_p(dis, 1.0, 0.5)
        assert var_p(dis.scale(-3.0), 1.0, 0.5) == pytest.approx(3 * v, rel=1e-9)


def test_var_p_matches_direct_definition():
    for dis in signed_disintegrations(61, 4, 12):
        for p, A in ((1.0, 0.5), (0.5, 0.5), (1.0, 0.25)):
            assert var_p(dis, p, A) == pytest.approx(
                var_p_direct(dis, p, A), abs=1e-9)
    for dis in positive_disintegrations(67, 2, 16):
        assert var_p(dis, 1.0, 0.5) == pytest.approx(
            var_p_direct(dis, 1.0, 0.5), abs=1e-9)


def test_var_p_parameter_validation():
    dis = lebesgue_disintegration(8, 2)
    with pytest.raises(ValueError, match="p must lie"):
        var_p(dis, 1.5, 0.5)
    with pytest.raises(ValueError, match="A must lie"):
        var_p(dis, 1.0, 0.6)


# --------------------------------------------------------------- pbv_norm

def test_pbv_lebesgue():
    rep = pbv_norm(lebesgue_disintegration(64, 8), 1.0, 0.5)
    assert rep.l1 == pytest.approx(1.0, abs=1e-12)
    assert rep.var_p == 0.0
    assert rep.pbv == rep.l1 + rep.var_p


def test_pbv_zero():
    zero = FiberMeasure([], [], dimension=1)
    rep = pbv_norm(Disintegration([zero] * 4, n_cells=4), 1.0, 0.5)
    assert (rep.l1, rep.var_p, rep.pbv) == (0.0, 0.0, 0.0)


def test_pbv_product_dipole():
    dip = product_disintegration(64, FiberMeasure([[0.0], [0.5]], [1.0, -1.0]))
    rep = pbv_norm(dip, 1.0, 0.5)
    assert rep.l1 == pytest.approx(0.5, abs=1e-12)
    assert rep.var_p == 0.0
    assert rep.pbv == pytest.approx(0.5, abs=1e-12)


def test_pbv_dominates_l1_and_fiber_sup():
    # per-fiber bound: max_i w1(N * fibers[i]) <= A^(p-1) * pbv
    for p in (1.0, 0.5):
        for dis in signed_disintegrations(71, 6, 16):
            rep = pbv_norm(dis, p, 0.5)
            assert rep.l1 <= rep.pbv + 1e-12
            n = dis.n_cells
            sup = max(w1_norm(f.scale(n)) for f in dis.fibers)
            assert sup <= 0.5 ** (p - 1) * rep.pbv + 1e-9


def test_pbv_fiber_sup_bound_on_spike():
    n = 64
    spike = [FiberMeasure([[0.25]], [1.0])] + \
        [FiberMeasure([], [], dimension=1)] * (n - 1)
    dis = Disintegration(spike, n_cells=n)
    for p in (1.0, 0.5):
        rep = pbv_norm(dis, p, 0.5)
        assert n <= 0.5 ** (p - 1) * rep.pbv + 1e-9


# ------------------------------------------------------- marginal_density

def test_marginal_lebesgue():
    md = marginal_density(lebesgue_disintegration(32, 4))
    assert md.values == pytest.approx(np.ones(32), abs=1e-12)
    assert md.bv_jump_sum == pytest.approx(0.0, abs=1e-12)
    assert md.sup_norm == pytest.approx(1.0, abs=1e-12)


def test_marginal_half_support():
    n = 16
    atom = FiberMeasure([[0.3]], [2.0 / n])
    empty = FiberMeasure([], [], dimension=1)
    dis = Disintegration([atom] * (n // 2) + [empty] * (n // 2), n_cells=n)
    md = marginal_density(dis)
    assert md.values[: n // 2] == pytest.approx(np.full(n // 2, 2.0))
    assert md.values[n // 2:] == pytest.approx(np.zeros(n // 2))
    assert md.sup_norm == pytest.approx(2.0)


def test_marginal_integral_equals_mass():
    for dis in positive_disintegrations(73, 10, 32):
        md = marginal_density(dis)
        assert md.integral == pytest.approx(dis.mass(), abs=1e-12)


# ------------------------------------------- piecewise_constant_approx

def test_pc_approx_x_constant_unchanged():
    dis = product_disintegration(16, FiberMeasure([[0.2]], [1.0]))
    out = piecewise_constant_approx(dis, 1 / 4)
    assert l1_norm(out - dis) == pytest.approx(0.0, abs=1e-12)


def test_pc_approx_identity_blocks():
    dis = signed_disintegrations(79, 1, 16)[0]
    out = piecewise_constant_approx(dis, 1 / 16)
    assert l1_norm(out - dis) == pytest.approx(0.0, abs=1e-12)


def test_pc_approx_smoothing_inequalities():
    # jump placed off the block grid so averaging actually acts
    n = 64
    left = FiberMeasure([[0.0]], [1.0 / n])
    right = FiberMeasure([[0.5]], [1.0 / n])
    dis = Disintegration([left] * 24 + [right] * (n - 24), n_cells=n)
    eps = 1 / 4
    out = piecewise_constant_approx(dis, eps)
    v_in = var_p(dis, 1.0, 0.5)
    assert var_p(out, 1.0, 0.5) <= 2 * v_in + 1e-9
    assert l1_norm(out) <= l1_norm(dis) + 1e-12
    assert l1_norm(dis - out) <= 2 * eps * v_in + 1e-9


def test_pc_approx_mass_and_errors():
    dis = signed_disintegrations(83, 1, 16)[0]
    out = piecewise_constant_approx(dis, 1 / 4)
    assert abs(out.mass() - dis.mass()) <= 1e-12
    with pytest.raises(ValueError, match="divide n_cells"):
        piecewise_constant_approx(dis, 1 / 3)
    with pytest.raises(ValueError, match="1/m"):
        piecewise_constant_approx(dis, 0.3)


# ------------------------------------------------------------- structure

def test_disintegration_validation():
    fm1 = FiberMeasure([[0.1]], [1.0])
    fm2 = FiberMeasure([[0.1, 0.2]], [1.0], dimension=2)
    with pytest.raises(ValueError, match="dimension mismatch"):
        Disintegration([fm1, fm2], n_cells=2)
    with pytest.raises(ValueError, match="fiber count"):
        Disintegration([fm1], n_cells=2)


def test_rotation_orbit_fiber_checks_gcd():
    with pytest.raises(ValueError, match="reduced"):
        rotation_orbit_fiber(2, 16)


# ------------------------------------------------------------ hypothesis

atom_lists = st.integers(1, 5).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(0, 1, exclude_max=True, allow_nan=False),
                 min_size=n, max_size=n),
        st.lists(st.floats(-2, 2, allow_nan=False, allow_infinity=False),
                 min_size=n, max_size=n)))


def _build(t) -> FiberMeasure:
    pos, w = t
    return FiberMeasure([[x] for x in pos], w, dimension=1)


@given(atom_lists, atom_lists)
def test_hyp_triangle_inequality(ta, tb):
    a, b = _build(ta), _build(tb)
    assert w1_norm(a + b) <= w1_norm(a) + w1_norm(b) + 1e-9


@given(atom_lists, st.floats(-4, 4, allow_nan=False))
def test_hyp_homogeneity(ta, c):
    a = _build(ta)
    assert w1_norm(a.scale(c)) == pytest.approx(abs(c) * w1_norm(a), abs=1e-9)


@given(atom_lists, st.sampled_from([1 / 16, 1 / 64, 1 / 256]))
def test_hyp_coarsen_contract(ta, eps):
    a = _build(ta)
    out = coarsen(a, eps)
    assert abs(out.mass() - a.mass()) <= 1e-12
    assert abs(w1_norm(out) - w1_norm(a)) <= eps * a.abs_mass() + 1e-9
