"""Separation regimes, cloud geometry, xi functions and critical objects."""

import random

import pytest
from mpmath import mp, mpf, mpc, findroot

from hbl import model as md
from hbl.errors import (
    BranchCutEvaluation,
    InvalidConfig,
    OutOfSupport,
    UnsupportedFractions,
    WrongRegime,
)
from hbl.model import BrownianConfig, Regime


def _random_critical_config(rng):
    p1 = mpf(repr(rng.uniform(0.2, 0.8)))
    p2 = 1 - p1
    a1 = mpf(repr(rng.uniform(0.5, 1.5)))
    a2 = a1 - mpf(repr(rng.uniform(1.0, 2.5)))
    b1 = mpf(repr(rng.uniform(0.0, 1.0)))
    b2 = b1 - (mp.sqrt(p1) + mp.sqrt(p2)) ** 2 / (a1 - a2)
    return BrownianConfig(a1, a2, b1, b2, p1, p2)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def test_classify_figure_configs(large_sep_config, small_sep_config, critical_config):
    assert md.classify_separation(large_sep_config).regime is Regime.LARGE
    assert md.classify_separation(small_sep_config).regime is Regime.SMALL
    rep = md.classify_separation(critical_config)
    assert rep.regime is Regime.CRITICAL
    assert abs(rep.t_crit - mpf(2) / 3) < mpf("1e-70")
    assert abs(rep.T_crit - 1) < mpf("1e-70")


def test_classify_validates_config():
    with pytest.raises(InvalidConfig):
        BrownianConfig("1", "2", "0.5", "-0.5")  # a1 < a2
    with pytest.raises(InvalidConfig):
        BrownianConfig("1", "-1", "0.5", "-0.5", "0.3", "0.6")  # p1+p2 != 1
    with pytest.raises(InvalidConfig):
        BrownianConfig("1", "-1", "0.5", "-0.5", T="-2")


def test_classify_tolerance_band_flips(critical_config):
    T_crit = md.classify_separation(critical_config).T_crit
    for eps, expected in (
        (mpf("1e-3"), Regime.SMALL),
        (-mpf("1e-3"), Regime.LARGE),
        (mpf("1e-14"), Regime.CRITICAL),
    ):
        probe = BrownianConfig(
            critical_config.a1, critical_config.a2, critical_config.b1, critical_config.b2, critical_config.p1, critical_config.p2,
            T=T_crit * (1 + eps),
        )
        assert md.classify_separation(probe).regime is expected


# ---------------------------------------------------------------------------
# ellipse endpoints and semicircle laws
# ---------------------------------------------------------------------------

def test_endpoints_symmetric_example():
    # a = b = (1, -1), p = 1/2, T = 1, t = 1/3 gives [0.33, 1.66], [-1.66, -0.33]
    cfg = BrownianConfig("1", "-1", "1", "-1")
    t = mpf(1) / 3
    a1, b1 = md.ellipse_endpoints(cfg, t, 1)
    a2, b2 = md.ellipse_endpoints(cfg, t, 2)
    assert abs(a1 - mpf(1) / 3) < mpf("1e-70")
    assert abs(b1 - mpf(5) / 3) < mpf("1e-70")
    assert abs(a2 + mpf(5) / 3) < mpf("1e-70")
    assert abs(b2 + mpf(1) / 3) < mpf("1e-70")


@pytest.mark.parametrize("t", ["1e-12", "0.999999999999"])
def test_endpoints_time_limits(large_sep_config, t):
    # t -> 0 collapses to a_j, t -> 1 collapses to b_j
    for j in (1, 2):
        alpha, beta = md.ellipse_endpoints(large_sep_config, mpf(t), j)
        target = large_sep_config.position("a", j) if mpf(t) < mpf("0.5") else large_sep_config.position("b", j)
        assert abs(alpha - target) < mpf("1e-5")
        assert abs(beta - target) < mpf("1e-5")


def test_semicircle_endpoint_and_midpoint(large_sep_config):
    t = mpf("0.4")
    alpha, beta = md.ellipse_endpoints(large_sep_config, t, 1)
    assert md.semicircle_density(large_sep_config, t, 1, alpha) == 0
    mid = (alpha + beta) / 2
    expect = (beta - alpha) / (4 * mp.pi * large_sep_config.T * t * (1 - t))
    assert abs(md.semicircle_density(large_sep_config, t, 1, mid) - expect) < mpf("1e-70")
    with pytest.raises(OutOfSupport):
        md.semicircle_density(large_sep_config, t, 1, beta + 1)


def test_semicircle_mass_quadrature_oracle():
    rng = random.Random(11)
    for _ in range(10):
        p1 = mpf(repr(rng.uniform(0.25, 0.75)))
        cfg = BrownianConfig(
            mpf(repr(rng.uniform(0.5, 1.5))),
            mpf(repr(rng.uniform(-1.5, -0.5))),
            mpf(repr(rng.uniform(0.2, 1.0))),
            mpf(repr(rng.uniform(-1.0, -0.2))),
            p1,
            1 - p1,
            T=mpf(repr(rng.uniform(0.5, 2.0))),
        )
        t = mpf(repr(rng.uniform(0.2, 0.8)))
        j = rng.choice((1, 2))
        alpha, beta = md.ellipse_endpoints(cfg, t, j)

        def clamped(x, j=j, t=t, alpha=alpha, beta=beta, cfg=cfg):
            # tanh-sinh abscissae can overshoot the endpoint by roundoff
            return md.semicircle_density(cfg, t, j, min(max(x, alpha), beta))

        mass = mp.quad(clamped, [alpha, beta])
        assert abs(mass - cfg.fractions[j - 1]) < mpf("1e-10")


def test_overlap_in_small_regime(small_sep_config):
    # converse of the disjointness equivalence: below the critical
    # temperature product the clouds overlap for some time window
    overlaps = False
    for i in range(1, 100):
        t = mpf(i) / 100
        a1, _ = md.ellipse_endpoints(small_sep_config, t, 1)
        _, b2 = md.ellipse_endpoints(small_sep_config, t, 2)
        if a1 < b2:
            overlaps = True
            break
    assert overlaps


def test_xi_identity_at_reference_point(asym_critical):
    t = mpf("0.3")
    x0 = md.reference_point(asym_critical, t).x0_star
    T_crit = md.classify_separation(asym_critical).T_crit
    v = md.xi_at(asym_critical, t, x0, real_part_on_cut=True, T=T_crit)
    assert abs(v.xi1 + v.xi3 - 2 * v.Xi1) < mpf("1e-70")
    assert abs(v.xi2 + v.xi4 - 2 * v.Xi2) < mpf("1e-70")


def test_disjointness_in_large_regime(large_sep_config):
    # alpha_1(t) > beta_2(t) across (0,1) in the large regime
    for i in range(1, 200):
        t = mpf(i) / 200
        a1, _ = md.ellipse_endpoints(large_sep_config, t, 1)
        _, b2 = md.ellipse_endpoints(large_sep_config, t, 2)
        assert a1 > b2


# ---------------------------------------------------------------------------
# phase boundary
# ---------------------------------------------------------------------------

def test_phase_boundary_values():
    inv_sqrt2 = 1 / mp.sqrt(2)
    cfg = BrownianConfig(inv_sqrt2, -inv_sqrt2, inv_sqrt2, -inv_sqrt2)
    assert abs(md.phase_boundary(cfg, "0.5") - 1) < mpf("1e-70")
    assert abs(md.phase_boundary(cfg, "0.25") - mpf(5) / 3) < mpf("1e-70")


def test_phase_boundary_symmetry(critical_config):
    cfg = BrownianConfig("1", "-1", "1", "-1")  # a1-a2 = b1-b2
    for t in ("0.15", "0.3", "0.45"):
        assert abs(
            md.phase_boundary(cfg, t) - md.phase_boundary(cfg, str(1 - mpf(t)))
        ) < mpf("1e-70")


def test_phase_boundary_requires_half_fractions():
    cfg = BrownianConfig("1", "-1", "1", "-1", "0.4", "0.6")
    with pytest.raises(UnsupportedFractions):
        md.phase_boundary(cfg, "0.5")


# ---------------------------------------------------------------------------
# xi functions
# ---------------------------------------------------------------------------

def test_xi_sum_identities_random_points(large_sep_config):
    rng = random.Random(5)
    t = mpf("0.37")
    for _ in range(50):
        z = mpc(rng.uniform(-3, 3), rng.choice([-1, 1]) * rng.uniform(0.05, 3))
        v = md.xi_at(large_sep_config, t, z)
        assert abs(v.xi1 + v.xi3 - 2 * v.Xi1) < mpf("1e-28")
        assert abs(v.xi2 + v.xi4 - 2 * v.Xi2) < mpf("1e-28")


def test_xi_intersection_value_figure3():
    # graphs of xi_2 and xi_3 cross at -sqrt(2)/6 for the symmetric config
    cfg = BrownianConfig("1", "-1", "1", "-1")
    t = mpf(1) / 3

    def gap(x):
        v = md.xi_at(cfg, t, x, real_part_on_cut=True)
        return (v.xi2 - v.xi3).real

    x_cross = findroot(gap, mpf("-0.2"))
    assert abs(x_cross + mp.sqrt(2) / 6) < mpf("1e-40")


def test_xi_constant_ordering(critical_config):
    rep = md.classify_separation(critical_config)
    for t in ("0.1", "0.3", "0.5", str(rep.t_crit)):
        v = md.xi_at(critical_config, mpf(t), mpc(0, 1))
        # equality holds exactly at t = t_crit, up to roundoff dust
        assert v.Xi2 - v.Xi1 >= -mpf("1e-70") * max(abs(v.Xi1), mpf(1))


def test_xi_branch_cut_rejection(large_sep_config):
    t = mpf("0.4")
    alpha, beta = md.ellipse_endpoints(large_sep_config, t, 1)
    x_in = (alpha + beta) / 2
    with pytest.raises(BranchCutEvaluation):
        md.xi_at(large_sep_config, t, x_in)
    v = md.xi_at(large_sep_config, t, x_in, real_part_on_cut=True)
    assert abs(v.xi1.real - v.Xi1) < mpf("1e-70")


def test_xi_behaves_like_z_at_infinity(large_sep_config):
    t = mpf("0.3")
    z = mpc("1e8", "3e7")
    v = md.xi_at(large_sep_config, t, z)
    T = large_sep_config.T
    # xi_1 ~ z / (2 T t (1-t)); relative error O(1/z)
    expect = z / (2 * T * t * (1 - t))
    assert abs(v.xi1 / expect - 1) < mpf("1e-7")


# ---------------------------------------------------------------------------
# critical-separation objects
# ---------------------------------------------------------------------------

def test_reference_point_symmetric_is_zero(critical_config):
    rep = md.reference_point(critical_config, mpf(1) / 3)
    assert rep.x0_star == 0
    assert rep.max_residual < mpf("1e-25")


def test_reference_point_identities_random_critical():
    rng = random.Random(31)
    for _ in range(10):
        cfg = _random_critical_config(rng)
        t_crit = md.classify_separation(cfg).t_crit
        t = t_crit * mpf(repr(rng.uniform(0.2, 0.9)))
        rep = md.reference_point(cfg, t)
        assert rep.max_residual < mpf("1e-25")


def test_reference_point_between_clouds(asym_critical):
    t = mpf("0.3")
    rep = md.reference_point(asym_critical, t)
    T_crit = md.classify_separation(asym_critical).T_crit
    _, be2 = md.ellipse_endpoints(asym_critical, t, 2, T=T_crit)
    al1, _ = md.ellipse_endpoints(asym_critical, t, 1, T=T_crit)
    assert be2 < rep.x0_star < al1


def test_reference_point_wrong_regime(large_sep_config):
    with pytest.raises(WrongRegime):
        md.reference_point(large_sep_config, mpf("0.3"))


def test_scaling_constants_exact_values(critical_config):
    sc = md.scaling_constants(critical_config, L=1, t=mpf(1) / 3)
    assert abs(sc.K - mpf(1) / 2) < mpf("1e-70")
    assert abs(sc.s + 1) < mpf("1e-70")
    sc0 = md.scaling_constants(critical_config, L=0, t=mpf(1) / 3)
    assert sc0.s == 0
    assert abs(sc0.t_crit - mpf(2) / 3) < mpf("1e-70")


def test_conformal_map_linearization(asym_critical):
    t = mpf("0.3")
    rep = md.reference_point(asym_critical, t)
    x0 = rep.x0_star
    f0, c = md.conformal_map_f(asym_critical, t, x0)
    assert f0 == 0
    # numeric f'(x0*) against 1/(2K((1-t)(a1-a2) - t(b1-b2)))
    sc = md.scaling_constants(asym_critical, 0, t)
    d = (1 - t) * (asym_critical.a1 - asym_critical.a2) - t * (
        asym_critical.b1 - asym_critical.b2
    )
    expect = 1 / (2 * sc.K * d)
    h = mpf("1e-12")
    fp = (md.conformal_map_f(asym_critical, t, x0 + h)[0]
          - md.conformal_map_f(asym_critical, t, x0 - h)[0]) / (2 * h)
    assert abs(fp - expect) < mpf("1e-10") * abs(expect)


def test_third_derivative_constant_vs_finite_differences(asym_critical):
    # c from the closed formula against a 5-point second derivative of
    # (xi4* - xi3*), i.e. the third derivative of the lambda difference
    t = mpf("0.3")
    rep = md.reference_point(asym_critical, t)
    x0 = rep.x0_star
    T_crit = md.classify_separation(asym_critical).T_crit
    h = mpf("1e-7")

    def xid(y):
        v = md.xi_at(asym_critical, t, y, T=T_crit)
        return (v.xi4 - v.xi3).real

    with mp.extraprec(80):
        second = (
            -xid(x0 + 2 * h) + 16 * xid(x0 + h) - 30 * xid(x0)
            + 16 * xid(x0 - h) - xid(x0 - 2 * h)
        ) / (12 * h**2)
    c_formula = md.third_derivative_constant(asym_critical, t)
    assert abs(second - c_formula) < mpf("1e-8") * abs(c_formula)
    assert c_formula > 0


def test_conformal_map_domain_guard(asym_critical):
    t = mpf("0.3")
    x0 = md.reference_point(asym_critical, t).x0_star
    with pytest.raises(WrongRegime):
        md.conformal_map_f(asym_critical, t, x0 + 10)


def test_conformal_map_cube_consistency(asym_critical):
    # f(z)^3 = (3/8)(lambda4* - lambda3*)(z) on a small circle around x0*
    t = mpf("0.3")
    x0 = md.reference_point(asym_critical, t).x0_star
    for angle in (0, 1, 2, 3):
        z = x0 + mpf("0.04") * mp.expjpi(mpf(angle) / 2)
        fz, _ = md.conformal_map_f(asym_critical, t, z)
        target = mpf(3) / 8 * md.lambda43_difference(asym_critical, t, z)
        assert abs(fz**3 - target) < mpf("1e-40") * max(abs(target), mpf("1e-30"))


# ---------------------------------------------------------------------------
# inequality chain reports
# ---------------------------------------------------------------------------

def test_inequality_chain_large_separation(large_sep_config):
    rep = md.xi_inequality_report(large_sep_config, mpf(1) / 3, grid_points=2000)
    assert rep.regime is Regime.LARGE
    assert rep.margin_23 >= 0 and rep.margin_41 >= 0
    assert rep.margin_34 > 0
    xi = rep.xi
    assert xi[1] >= xi[2] > xi[3] >= xi[0]


def test_inequality_critical_residual(asym_critical):
    rep = md.xi_inequality_report(asym_critical, mpf("0.3"))
    assert rep.critical_residual < mpf("1e-25")
    assert rep.margin_23 > 0 and rep.margin_41 > 0


def test_inequality_large_at_critical_time_degenerates(large_sep_config):
    # at t = t_crit (large separation) only xi2 = xi3 > xi4 = xi1 survives
    t_crit = md.classify_separation(large_sep_config).t_crit
    rep = md.xi_inequality_report(large_sep_config, t_crit, grid_points=4000)
    assert abs(rep.margin_23) < mpf("1e-12")
    assert abs(rep.margin_41) < mpf("1e-12")
    assert rep.margin_34 > mpf("1e-6")


def test_inequality_chain_general_temperature():
    # the chain scan also works off the T = 1 normalization
    cfg = BrownianConfig("1", "-1", "0.7", "-0.7", T="0.9")
    rep = md.xi_inequality_report(cfg, mpf("0.35"), grid_points=2000)
    xi = rep.xi
    assert xi[1] >= xi[2] > xi[3] >= xi[0]


def test_inequality_wrong_regime(small_sep_config):
    with pytest.raises(WrongRegime):
        md.xi_inequality_report(small_sep_config, mpf("0.4"))
