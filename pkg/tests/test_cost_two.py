import numpy as np
import pytest

from bandctl import (
    BandTwo,
    SimStrategy,
    estimate_cost,
    total_cost,
    total_cost_two,
    upper_cost_bound,
    upper_phase1_costs,
)
from bandctl.cost_two import holding_exit_phase1
from bandctl.errors import OutOfBand, ValidationError
from bandctl.model import HoldingCost, ModelConfig
from ._oracles import mc_two_sided
from .conftest import assert_within_se, make_ex3

EX3_BAND = BandTwo(2.468, 3.114, 4.610, 7.660)


def test_band_two_ordering():
    with pytest.raises(ValidationError):
        BandTwo(2.0, 3.0, 5.0, 4.5).check(10.0)
    with pytest.raises(ValidationError):
        BandTwo(2.0, 3.0, 5.0, 10.0).check(10.0)


def test_holding_exit_phase1_edges():
    m = make_ex3()
    assert holding_exit_phase1(m, EX3_BAND, m.b) == pytest.approx(0.0, abs=1e-12)
    free = ModelConfig(**{**m.__dict__, "h1": HoldingCost(0.0, 0.0)})
    xs = np.linspace(EX3_BAND.y4, m.b, 7)
    assert holding_exit_phase1(free, EX3_BAND, xs) == pytest.approx(np.zeros(7), abs=1e-12)
    with pytest.raises(OutOfBand):
        holding_exit_phase1(m, EX3_BAND, EX3_BAND.y4 - 0.5)


def test_holding_exit_phase1_against_mc():
    m = make_ex3()
    mc = mc_two_sided(m, 1, EX3_BAND.y4, m.b, 8.5, 100_000, seed=23)
    mean, se = mc["hold"]
    assert abs(holding_exit_phase1(m, EX3_BAND, 8.5) - mean) < 3 * se


def test_upper_costs_capacity_limits():
    # up-crossing factor tends to one; landing integrals vanish; the
    # switching component keeps the switch-off charge
    m = make_ex3()
    surf1 = total_cost(m, EX3_BAND.lower())
    h, s, k = upper_phase1_costs(m, EX3_BAND, surf1, m.b)
    assert float(h) == pytest.approx(surf1.H0, abs=1e-9)
    assert float(s) == pytest.approx(surf1.S0, abs=1e-9)
    assert float(k) == pytest.approx(surf1.K0 + m.switching.k10, abs=1e-9)


def test_upper_costs_require_matching_band():
    m = make_ex3()
    other = total_cost(m, BandTwo(2.0, 3.0, 4.6, 7.0).lower())
    with pytest.raises(ValueError):
        upper_phase1_costs(m, EX3_BAND, other, 9.0)


def test_switch_cost_free_model_zero_kbar():
    m = make_ex3()
    from bandctl.model import SwitchMatrix

    free = ModelConfig(**{**m.__dict__, "switching": SwitchMatrix(0, 0, 0, 0, 0, 0)})
    surf1 = total_cost(free, EX3_BAND.lower())
    _, _, k = upper_phase1_costs(free, EX3_BAND, surf1, 9.0)
    assert float(k) == pytest.approx(0.0, abs=1e-12)


def test_total_cost_two_zones():
    m = make_ex3()
    surf = total_cost_two(m, EX3_BAND)
    one = total_cost(m, EX3_BAND.lower())
    # shared regions agree exactly with the type-one assembly
    lo = np.linspace(0.0, EX3_BAND.y1 - 0.01, 9)
    assert surf.V(1, lo) == pytest.approx(one.V(1, lo), abs=0)
    mid = np.linspace(EX3_BAND.y1, EX3_BAND.y4, 9)
    assert surf.V(1, mid) == pytest.approx(
        surf.V(2, mid) + m.switching.k12, abs=1e-12
    )
    ph2 = np.linspace(EX3_BAND.y2 + 0.01, m.b, 9)
    assert surf.V(2, ph2) == pytest.approx(one.V(2, ph2), abs=0)


def test_v0_invariant_in_y4():
    m = make_ex3()
    vals = [
        total_cost_two(m, BandTwo(2.468, 3.114, 4.610, y4)).V0
        for y4 in (EX3_BAND.y1 + 0.5, 7.66, m.b - 0.5)
    ]
    one = total_cost(m, EX3_BAND.lower()).V0
    assert max(vals) - min(vals) < 1e-9
    assert abs(vals[0] - one) < 1e-12


def test_capacity_switch_gap_is_k10():
    m = make_ex3()
    surf = total_cost_two(m, EX3_BAND)
    assert surf.component("K", 1, m.b, side=-1) - surf.K0 == pytest.approx(
        m.switching.k10, abs=1e-9
    )
    # in return, V1 at b- ends K10 above the idle value
    assert surf.V(1, m.b, side=-1) - surf.V0 == pytest.approx(
        m.switching.k10, abs=1e-9
    )


def test_downward_jump_at_y4():
    # leaving the switching zone upward drops the switching component; at
    # the verified y4 the total is nearly continuous (indifference point)
    m = make_ex3()
    surf = total_cost_two(m, EX3_BAND)
    y4 = EX3_BAND.y4
    k_jump = surf.component("K", 1, y4, side=+1) - surf.component("K", 1, y4, side=-1)
    v_jump = surf.V(1, y4, side=+1) - surf.V(1, y4, side=-1)
    assert k_jump < -1e-4
    assert abs(v_jump) < 0.05 * abs(k_jump)


def test_type_two_converges_to_type_one():
    m = make_ex3()
    near = BandTwo(2.468, 3.114, 4.610, m.b - 1e-3)
    surf2 = total_cost_two(m, near)
    surf1 = total_cost(m, near.lower())
    xs = np.linspace(0.05, near.y4 - 0.05, 10)
    for phase in (1, 2):
        assert surf2.V(phase, xs) == pytest.approx(surf1.V(phase, xs), abs=1e-4)


def test_upper_values_match_simulator():
    m = make_ex3()
    surf = total_cost_two(m, EX3_BAND)
    strat = SimStrategy.from_band(EX3_BAND, m)
    est = estimate_cost(m, strat, 9.0, 1, 100_000, base_seed=29, jobs=2)
    slack = 1e-4 * upper_cost_bound(m)
    assert_within_se(float(surf.V(1, 9.0)), est.mean, est.std_error, slack, label="V1(9)")
    for name, comp in (("H", est.holding), ("S", est.shortage), ("K", est.switching)):
        assert_within_se(float(surf.component(name, 1, 9.0)), comp.mean, comp.std_error,
                         slack, label=f"{name}bar(9)")
