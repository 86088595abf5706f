import numpy as np
import pytest

from bandctl import build_scale, estimate_occupation
from bandctl.errors import OutOfBand
from bandctl.model import ModelConfig
from bandctl.passage import (
    ExitContext,
    Omega2,
    exit_down,
    integrate,
    omega2,
    potential_density,
    reflected_local_time,
    reflected_up_factor,
    up_crossing_factor,
)
from ._oracles import mc_reflected, mc_two_sided
from .conftest import make_ex1, make_ex3


@pytest.fixture(scope="module")
def ex3_ctx():
    m = make_ex3()
    return m, ExitContext(build_scale(m, 2), a=2.468, d=10.0)


def test_up_crossing_endpoints(ex3_ctx):
    m, ctx = ex3_ctx
    assert up_crossing_factor(ctx, ctx.d) == pytest.approx(1.0)
    s = ctx.scale
    assert up_crossing_factor(ctx, ctx.a) == pytest.approx(s.W(0.0) / s.W(ctx.d - ctx.a))
    with pytest.raises(OutOfBand):
        up_crossing_factor(ctx, ctx.a - 0.5)


def test_exit_down_endpoints(ex3_ctx):
    m, ctx = ex3_ctx
    assert exit_down(ctx, ctx.d, 0.0) == pytest.approx(0.0, abs=1e-12)
    s = ctx.scale
    span = ctx.d - ctx.a
    assert exit_down(ctx, ctx.a, 0.0) == pytest.approx(
        1.0 - s.W(0.0) * s.Z(span) / s.W(span)
    )


def test_two_sided_factors_against_mc(ex3_ctx):
    m, ctx = ex3_ctx
    mc = mc_two_sided(m, 2, ctx.a, ctx.d, 5.0, 100_000, seed=101)
    up_mean, up_se = mc["up"]
    dn_mean, dn_se = mc["down"]
    assert abs(up_crossing_factor(ctx, 5.0) - up_mean) < 3 * up_se
    assert abs(exit_down(ctx, 5.0, 0.0) - dn_mean) < 3 * dn_se


def test_potential_density_endpoints(ex3_ctx):
    m, ctx = ex3_ctx
    s = ctx.scale
    y = 4.0
    assert potential_density(ctx, ctx.a, y) == pytest.approx(
        s.W(0.0) * s.W(ctx.d - y) / s.W(ctx.d - ctx.a)
    )
    # y just below d: second term vanishes once y > x
    x = 5.0
    val = potential_density(ctx, x, ctx.d - 1e-9)
    assert val == pytest.approx(s.W(x - ctx.a) * s.W(0.0) / s.W(ctx.d - ctx.a), rel=1e-5)
    with pytest.raises(OutOfBand):
        potential_density(ctx, x, ctx.d + 0.1)


def test_potential_density_nonnegative_and_occupation_identity(ex3_ctx):
    m, ctx = ex3_ctx
    x = 5.0
    ys = np.linspace(ctx.a + 1e-6, ctx.d - 1e-6, 300)
    dens = potential_density(ctx, x, ys)
    assert np.all(dens >= -1e-12)
    mass = integrate(lambda y: potential_density(ctx, x, y), ctx.a + 1e-12,
                     ctx.d - 1e-12, breakpoints=(x,))
    expected = (1.0 - up_crossing_factor(ctx, x) - exit_down(ctx, x, 0.0)) / m.q
    assert mass == pytest.approx(expected, abs=1e-8)


def test_up_plus_down_below_one(ex3_ctx):
    m, ctx = ex3_ctx
    xs = np.linspace(ctx.a, ctx.d, 50)
    tot = up_crossing_factor(ctx, xs) + exit_down(ctx, xs, 0.0)
    assert np.all(tot <= 1.0 + 1e-12)


def test_occupation_histogram_matches_density(ex3_ctx):
    m, ctx = ex3_ctx
    occ = estimate_occupation(m, 2, ctx.a, ctx.d, 5.0, 100_000, bins=25, base_seed=33)
    for i in range(len(occ.mean)):
        lo, hi = occ.edges[i], occ.edges[i + 1]
        exact = integrate(
            lambda y: potential_density(ctx, 5.0, y),
            max(lo, ctx.a + 1e-12), min(hi, ctx.d - 1e-12), breakpoints=(5.0,)
        )
        assert abs(exact - occ.mean[i]) < 3 * occ.std_error[i] + 1e-4, \
            f"bin {i} [{lo:.2f},{hi:.2f})"
    # total mass identity within Monte Carlo error
    expected = (1.0 - up_crossing_factor(ctx, 5.0) - exit_down(ctx, 5.0, 0.0)) / m.q
    assert abs(occ.total - expected) < 3 * occ.total_std_error


def test_reflected_factors_basic():
    m = make_ex1()
    s1 = build_scale(m, 1)
    y1 = 5.077
    assert reflected_up_factor(s1, y1, y1) == pytest.approx(1.0)
    assert reflected_up_factor(s1, 0.0, y1) == pytest.approx(1.0 / s1.Z(y1))
    assert reflected_local_time(s1, y1, y1) == pytest.approx(0.0, abs=1e-12)


def test_reflected_local_time_decreases_in_q():
    m = make_ex1()
    prev = np.inf
    for q in (0.1, 0.5, 2.0, 8.0):
        mq = ModelConfig(**{**m.__dict__, "q": q})
        s1 = build_scale(mq, 1)
        val = reflected_local_time(s1, 1.0, 5.0)
        assert 0 <= val < prev
        prev = val


def test_reflected_factors_against_mc():
    m = make_ex1()
    s1 = build_scale(m, 1)
    y1 = 5.077
    mc = mc_reflected(m, 1, y1, 2.0, 100_000, seed=55)
    k_mean, k_se = mc["kappa"]
    assert abs(reflected_up_factor(s1, 2.0, y1) - k_mean) < 3 * k_se
    mc0 = mc_reflected(m, 1, y1, 0.0, 100_000, seed=56)
    l_mean, l_se = mc0["local_time"]
    assert abs(reflected_local_time(s1, 0.0, y1) - l_mean) < 3 * l_se


def test_omega2_equal_rates_drops_correction():
    # production rates equal only to exercise the generator-difference term
    m = make_ex1()
    hypo = ModelConfig(**{**m.__dict__, "sigma1": 2.0, "sigma2": 2.0})
    s1 = build_scale(hypo, 1)
    s2 = build_scale(hypo, 2)
    op = Omega2(s1, s2, y2=1.0, b=hypo.b)
    xs = np.linspace(1.0, hypo.b, 9)
    reduced = s1.Z(xs) - op.up(xs) * s1.Z(hypo.b)
    assert op.apply_Z1(xs) == pytest.approx(reduced, abs=1e-12)


def test_omega2_vanishes_at_capacity():
    m = make_ex3()
    ctx = ExitContext(build_scale(m, 2), a=2.468, d=m.b)
    s1 = build_scale(m, 1)
    assert omega2(ctx, s1, "Z1", m.b) == pytest.approx(0.0, abs=1e-9)
    assert omega2(ctx, s1, "Wbarbar1", m.b) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ValueError):
        omega2(ctx, s1, "nope", 5.0)


def test_omega2_range_invariant():
    m = make_ex3()
    ctx = ExitContext(build_scale(m, 2), a=2.468, d=m.b)
    s1 = build_scale(m, 1)
    xs = np.linspace(ctx.a, ctx.d, 40)
    vals = omega2(ctx, s1, "Z1", xs)
    assert np.all(vals >= -1e-10)
    assert np.all(vals <= s1.Z(m.b) + 1e-10)


def test_omega2_against_mc(ex3_ctx):
    m, ctx = ex3_ctx
    s1 = build_scale(m, 1)
    mc = mc_two_sided(m, 2, ctx.a, ctx.d, 5.0, 100_000, seed=77,
                      payoff=lambda v: s1.Z(v))
    mean, se = mc["payoff"]
    assert abs(omega2(ctx, s1, "Z1", 5.0) - mean) < 3 * se


def test_omega2_matches_jump_decomposition(ex3_ctx):
    # Omega(g)(x) must agree with the resolvent-density x demand-density
    # double integral, an independent route through the same payoff.
    m, ctx = ex3_ctx
    s1 = build_scale(m, 1)
    y2, b = ctx.a, ctx.d
    lam = m.lam

    def rhs(x, g):
        def outer(z):
            vals = []
            for zz in np.atleast_1d(z):
                tail = integrate(
                    lambda v: g(zz - v) * m.demand.pdf(v),
                    zz - y2, zz + 60.0, breakpoints=(zz,)
                )
                vals.append(float(tail))
            zz = np.atleast_1d(z)
            return lam * np.asarray(vals) * potential_density(ctx, x, zz)

        return float(integrate(outer, y2 + 1e-12, b - 1e-12, breakpoints=(x,)))

    x = 5.0
    assert omega2(ctx, s1, "Z1", x) == pytest.approx(rhs(x, s1.Z), abs=1e-7)
    assert omega2(ctx, s1, "Wbarbar1", x) == pytest.approx(rhs(x, s1.Wbarbar), abs=1e-7)
