"""Hypomonotonicity defect, certificate checks and touching construction."""

import json

import numpy as np
import pytest

import banachlab as bl
from banachlab.hypo import NoFeasiblePairs
from conftest import LOW


E2 = bl.lp_norm(2)


@pytest.fixture(scope="module")
def zoo():
    return bl.norm_zoo()


@pytest.fixture(scope="module")
def registry(zoo):
    return bl.set_registry(zoo)


def unit_complement(n=None):
    return bl.make_ball_complement([0.0, 0.0], 1.0, gauge=n)


# ---------------------------------------------------------------------------
# the defect functional Gamma


def test_gamma_euclid_is_quadratic():
    A = unit_complement()
    for eps in (0.1, 0.3, 0.5):
        g = bl.gamma_estimate(A, E2, eps, budget=1024, seed=0)
        assert g == pytest.approx(eps * eps, abs=1e-3)


def test_gamma_vanishes_at_small_separation():
    A = unit_complement()
    g = bl.gamma_estimate(A, E2, 0.02, budget=1024, seed=0)
    assert 0.0 <= g < 1e-3


def test_gamma_sandwich_l3(curve_bank, zoo):
    n = zoo["l3"]
    A = unit_complement(n)
    rho = curve_bank["l3"]["rho"]
    lam = curve_bank["l3"]["lam_hi"]
    for eps in (0.05, 0.1, 0.2, 0.4):
        g = bl.gamma_estimate(A, n, eps, budget=1024, seed=0)
        assert g >= rho.eval(eps / 4.0) - 5e-3, eps
        assert g <= 2.0 * lam.eval(2.0 * eps) + 5e-3, eps


def test_gamma_zero_for_convex_sets():
    half = bl.make_halfspace([0.0, 1.0], 0.0)
    g = bl.gamma_estimate(half, E2, 0.3, budget=512, seed=1)
    assert g == pytest.approx(0.0, abs=1e-9)


def test_gamma_rejects_bad_eps():
    A = unit_complement()
    with pytest.raises(ValueError):
        bl.gamma_estimate(A, E2, 0.0)


# ---------------------------------------------------------------------------
# pairing lower-bound check


def _zero_psi():
    t = np.linspace(0.0, 4.0, 9)
    return bl.validate_psi(t, np.zeros_like(t), name="zero")


def test_halfspace_is_monotone():
    """Convex set: normals never open outward, the zero certificate passes."""
    half = bl.make_halfspace([0.0, 1.0], 0.0)
    rep = bl.hypo_check(half, E2, _zero_psi(), 2.0, eps_max=1.0,
                        pair_budget=256, seed=0)
    assert rep.verdict == "pass"
    assert rep.worst_margin >= -1e-9


def test_disc_complement_square_certificate_is_tight():
    """Unit-circle normals pair to -|x1-x2|^2 exactly, so psi = t^2 at
    R = 1 sits on the boundary of feasibility."""
    A = unit_complement()
    psi = bl.builtin_psi("square", np.linspace(0.0, 1.0, 41))
    rep = bl.hypo_check(A, E2, psi, 1.0, eps_max=0.9, pair_budget=512, seed=0)
    assert rep.verdict == "pass"
    # knot interpolation sits slightly above t^2 between grid points
    assert -1e-6 <= rep.worst_margin <= 2e-4


def test_two_points_fail_square_certificate():
    A = bl.make_finite_points([[-0.5, 0.0], [0.5, 0.0]])
    psi = bl.builtin_psi("square", np.linspace(0.0, 1.5, 31))
    rep = bl.hypo_check(A, E2, psi, 1.0, eps_max=1.2, pair_budget=512, seed=0)
    assert rep.verdict == "fail"
    assert rep.worst_margin == pytest.approx(-1.0, abs=1e-6)
    x1, p1, x2, p2 = (np.asarray(v) for v in rep.worst_pair)
    assert np.linalg.norm(x1 - x2) == pytest.approx(1.0, abs=1e-9)
    # worst normals open against each other along the displacement
    assert (p2 - p1) @ (x2 - x1) == pytest.approx(-2.0, abs=1e-9)


def test_no_feasible_pairs():
    A = bl.make_finite_points([[-0.5, 0.0], [0.5, 0.0]])
    psi = bl.builtin_psi("square", np.linspace(0.0, 1.5, 31))
    with pytest.raises(NoFeasiblePairs):
        bl.hypo_check(A, E2, psi, 1.0, eps_max=0.5, pair_budget=512, seed=0)


def test_hypo_report_flags_extended_psi():
    """Certificate grid shorter than the pair separations in play: the
    report must record that the last slope was extrapolated."""
    A = unit_complement()
    psi = bl.builtin_psi("square", np.linspace(0.0, 0.2, 11))
    rep = bl.hypo_check(A, E2, psi, 1.0, eps_max=0.9, pair_budget=256, seed=0)
    assert rep.psi_extended


def test_smooth_sets_carry_smoothness_certificate(curve_bank, registry, zoo):
    """Sets passing the outward-ball check also pass the pairing bound
    with four times the ambient smoothness curve."""
    for sid, R in (("disc_complement", 1.0), ("l3_ball_complement", 1.0),
                   ("disc", 1.5)):
        A, amb = registry[sid]
        n = bl.ambient_norm(zoo, amb)
        omn = bl.rolling_ball_check_normal(A, n, R, sample_count=16, seed=2)
        assert omn.verdict == "pass", sid
        psi = bl.psi_from_curve(curve_bank[amb]["rho"], scale=4.0)
        rep = bl.hypo_check(A, n, psi, R, eps_max=2.0, pair_budget=512, seed=2)
        assert rep.verdict == "pass", (sid, rep.worst_margin)


def test_nonsmooth_set_fails_convexity_certificate(curve_bank):
    """The split two-point set refuses even the doubled convexity-modulus
    certificate, keeping the converse implication vacuous there."""
    A = bl.make_finite_points([[-1.0, 0.0], [1.0, 0.0]])
    psi = bl.psi_from_curve(curve_bank["euclid"]["delta"], scale=2.0)
    rep = bl.hypo_check(A, E2, psi, 1.5, eps_max=2.0, pair_budget=512, seed=2)
    assert rep.verdict == "fail"


def test_hypo_report_round_trip():
    A = unit_complement()
    psi = bl.builtin_psi("square", np.linspace(0.0, 1.0, 21))
    rep = bl.hypo_check(A, E2, psi, 1.0, eps_max=0.5, pair_budget=128, seed=3)
    d = json.loads(rep.to_json())
    assert set(d) >= {"verdict", "worst_margin", "epsilon_band", "pairs_used"}


# ---------------------------------------------------------------------------
# transfer of certificates between equivalent norms


def test_renorm_transfer_box_complement(zoo):
    """A linear certificate for the box complement under the max norm
    moves to the euclid norm with scaled argument, value and radius."""
    box = bl.linf_box_complement(zoo)
    t = np.linspace(0.0, 1.2, 13)
    psi = bl.PsiSpec(knots=t, values=2.0 * t, lipschitz=2.0, name="two-linear")
    rep_inf = bl.hypo_check(box, zoo["linf"], psi, 1.0, eps_max=0.5,
                            pair_budget=512, seed=0)
    assert rep_inf.verdict == "pass", rep_inf.worst_margin
    moved = bl.rescale_psi(psi, arg_scale=np.sqrt(2.0), value_scale=2.0)
    rep_e = bl.hypo_check(box, zoo["euclid"], moved, 1.0 / np.sqrt(2.0),
                          eps_max=0.35, pair_budget=512, seed=0)
    assert rep_e.verdict == "pass", rep_e.worst_margin


# ---------------------------------------------------------------------------
# boundary section bound


def test_section_bound_disc_complement(curve_bank):
    A = unit_complement()
    rho = curve_bank["euclid"]["rho"]
    rep = bl.section_bound_check(A, E2, 1.0, rho, [1.0, 0.0], delta=0.5,
                                 sample_count=300, seed=0)
    assert rep.verdict == "pass"
    assert rep.samples_used > 0


def test_section_bound_needs_safe_side_curve(curve_bank):
    A = unit_complement()
    d = curve_bank["euclid"]["delta"]  # direction "over": wrong side
    with pytest.raises(ValueError):
        bl.section_bound_check(A, E2, 1.0, d, [1.0, 0.0], delta=0.5)


def test_section_bound_convex_members(curve_bank, registry, zoo):
    for sid, R in (("halfplane", 2.0), ("disc", 1.5)):
        A, amb = registry[sid]
        n = bl.ambient_norm(zoo, amb)
        a0 = bl.boundary_sample(A, n, 1, seed=12)[0]
        rep = bl.section_bound_check(A, n, R, curve_bank[amb]["rho"], a0,
                                     delta=R / 2.0, sample_count=300, seed=1)
        assert rep.verdict == "pass", (sid, rep.reason)


# ---------------------------------------------------------------------------
# constructive touching points


def test_touching_disc_complement_axis():
    A = unit_complement()
    lam, y, p = bl.touching_point_search(A, E2, [0.2, 0.0], [1.5, 0.0], 0.3,
                                         seed=1)
    assert np.allclose(y, [1.0, 0.0], atol=1e-6)
    assert np.allclose(p, [-1.0, 0.0], atol=1e-6)
    assert 0.0 < lam < 1.0


def test_touching_halfplane():
    half = bl.make_halfspace([0.0, 1.0], 0.0)
    lam, y, p = bl.touching_point_search(half, E2, [0.0, 1.0], [0.0, -2.0],
                                         0.2, seed=1)
    assert abs(y[1]) < 1e-9
    assert np.allclose(p, [0.0, 1.0], atol=1e-9)


def _touching_inequalities_hold(A, n, z0, z1, eps, lam, y, p):
    z0, z1 = np.asarray(z0, float), np.asarray(z1, float)
    zl = (1 - lam) * z0 + lam * z1
    gap = eps * bl.norm_eval(n, z1 - z0)
    assert bl.norm_eval(n, zl - y) < gap
    assert bl.pairing(p, z1 - z0) < gap
    assert bl.contains(A, n, y, tol=1e-6)
    assert bl.dual_norm_eval(n, p) == pytest.approx(1.0, abs=1e-6)


def test_touching_outputs_satisfy_definition(registry, zoo):
    rng = np.random.default_rng(31)
    done = 0
    for sid, R in (("disc_complement", 1.0), ("halfplane", 2.0),
                   ("square_complement", 0.5), ("two_points", 0.5)):
        A, amb = registry[sid]
        n = bl.ambient_norm(zoo, amb)
        z0 = bl.shell_sample(A, n, R, 1, seed=int(rng.integers(1 << 30)))[0]
        z1 = bl.sample_inside(A, rng)
        eps = float(rng.uniform(0.1, 0.5))
        lam, y, p = bl.touching_point_search(A, n, z0, z1, eps, seed=5)
        _touching_inequalities_hold(A, n, z0, z1, eps, lam, y, p)
        done += 1
    assert done == 4


def test_touching_requires_outside_start():
    A = unit_complement()
    with pytest.raises(ValueError):
        bl.touching_point_search(A, E2, [1.5, 0.0], [2.0, 0.0], 0.3)


def test_touching_deterministic():
    A = unit_complement()
    a = bl.touching_point_search(A, E2, [0.3, 0.1], [1.4, -0.2], 0.25, seed=9)
    b = bl.touching_point_search(A, E2, [0.3, 0.1], [1.4, -0.2], 0.25, seed=9)
    assert a[0] == b[0]
    assert np.array_equal(a[1], b[1]) and np.array_equal(a[2], b[2])
