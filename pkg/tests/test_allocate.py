import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mitigation_sil.allocate import (
    AllocationStatus,
    DesignKind,
    Feasibility,
    SilBand,
    allocate,
    allocate_bisection,
    derive_design_targets,
    feasibility,
    required_success_target,
    rrf,
    sil_from_rrf,
)
from mitigation_sil.errors import (
    InfeasibleTargetError,
    NonPositiveRrfError,
    RatioDegenerateError,
    ZeroToleranceRiskError,
)
from mitigation_sil.expectation import Binary, ModularBinomial, Proportional, Series
from mitigation_sil.model import SubsystemSpec
from mitigation_sil.risk import Verdict, assess, tolerable_expected_consequence, tolerable_risk, weighted_success

from conftest import TUNNEL_TARGETS
from helpers import make_scenario, single_function

TOL = 1e-9


def tunnel_success_target(tunnel):
    return required_success_target(
        tunnel, tolerable_expected_consequence(tunnel, tolerable_risk(tunnel.consequence))
    )


class TestSuccessTarget:
    def test_gas(self, gas):
        assert required_success_target(gas, 10.0) == pytest.approx(0.96, abs=1e-15)

    def test_tunnel(self, tunnel):
        assert tunnel_success_target(tunnel) == pytest.approx(0.97905, abs=1e-5)

    def test_everything_tolerable(self, tunnel):
        assert required_success_target(tunnel, 2.0) == 0.0

    @pytest.mark.parametrize("value, state", [
        (0.96, Feasibility.FEASIBLE),
        (1.0, Feasibility.FEASIBLE),
        (1.2, Feasibility.INFEASIBLE),
        (0.0, Feasibility.ALWAYS_SATISFIED),
        (-0.1, Feasibility.ALWAYS_SATISFIED),
    ])
    def test_feasibility(self, value, state):
        assert feasibility(value) is state


class TestBisection:
    def test_gas_equal_ratios(self, gas):
        res = allocate_bisection(gas, [1, 1, 1], 0.96)
        closed = 1 - 0.96 ** (1 / 3)
        assert closed == pytest.approx(0.013515, abs=1e-6)
        assert res.status is AllocationStatus.BOUND
        assert res.targets == pytest.approx([closed] * 3, abs=1e-8)
        assert 0 <= res.achieved_success - 0.96 <= TOL
        assert res.verdict is Verdict.PASS

    def test_tunnel_published_ratios(self, tunnel):
        target = tunnel_success_target(tunnel)
        res = allocate_bisection(tunnel, TUNNEL_TARGETS, target)
        assert res.scale > 1.0
        assert res.scale < 1.01
        assert abs(weighted_success(res.targets, tunnel) - target) <= TOL
        assert res.targets == pytest.approx(np.array(TUNNEL_TARGETS) * res.scale, rel=1e-15)

    def test_full_workflow_on_the_tunnel(self, tunnel):
        res = allocate(tunnel, TUNNEL_TARGETS)
        assert res.status is AllocationStatus.BOUND
        assert res.tolerable_risk == pytest.approx(0.02933, abs=1e-12)
        assert res.rrf == pytest.approx(47.73, abs=0.01)
        assert res.sil is SilBand.SIL1

    def test_zero_target_short_circuits(self, gas):
        res = allocate_bisection(gas, [1, 1, 1], 0.0)
        assert res.status is AllocationStatus.ALWAYS_SATISFIED
        assert res.verdict is Verdict.PASS
        assert max(res.targets) == pytest.approx(1.0, abs=1e-11)

    def test_no_bracket(self):
        # one function over S0, plus S1 that feeds only a zero-contribution function
        s = make_scenario([Binary(0)] * 2, [[1, 0], [0, 1]], [1.0, 0.0])
        res = allocate_bisection(s, [1e-6, 1.0], 0.5)
        assert res.status is AllocationStatus.NO_BRACKET
        assert res.verdict is Verdict.PASS
        assert res.achieved_success >= 0.5

    def test_infeasible(self, gas):
        with pytest.raises(InfeasibleTargetError):
            allocate_bisection(gas, [1, 1, 1], 1.2)

    def test_degenerate_ratios(self, gas):
        with pytest.raises(RatioDegenerateError):
            allocate_bisection(gas, [0, 0, 0], 0.96)

    def test_zero_contribution_function_only(self):
        s = make_scenario([Binary(0)] * 2, [[1, 0], [0, 1]], [1.0, 0.0])
        with pytest.raises(RatioDegenerateError):
            allocate_bisection(s, [0.0, 1.0], 0.5)

    def test_zero_ratio_holds_subsystem_at_zero(self, gas):
        res = allocate_bisection(gas, [1, 0, 1], 0.96)
        assert res.targets[1] == 0.0
        assert res.targets[0] == pytest.approx(1 - 0.96 ** 0.5, abs=1e-8)

    def test_bad_ratio_shapes(self, gas):
        with pytest.raises(ValueError):
            allocate_bisection(gas, [1, 1], 0.96)
        with pytest.raises(ValueError):
            allocate_bisection(gas, [1, -1, 1], 0.96)

    @pytest.mark.parametrize("b", [1, 2, 3, 5])
    @pytest.mark.parametrize("target", [0.5, 0.9, 0.999])
    def test_single_function_closed_form(self, b, target):
        res = allocate_bisection(single_function(b), None, target)
        closed = 1 - target ** (1 / b)
        assert res.targets == pytest.approx([closed] * b, abs=10 * TOL)

    @settings(deadline=None, max_examples=60)
    @given(
        st.lists(st.floats(0.01, 10.0), min_size=2, max_size=5),
        st.floats(0.5, 0.999),
        st.floats(0.01, 100.0),
    )
    def test_ratio_scale_invariance(self, ratios, target, k):
        s = make_scenario(
            [Binary(0)] * len(ratios),
            [[1, int(j % 2 == 0)] for j in range(len(ratios))],
            [0.6, 0.4],
        )
        a = allocate_bisection(s, ratios, target)
        b = allocate_bisection(s, [k * r for r in ratios], target)
        assert np.allclose(a.targets, b.targets, atol=10 * TOL, rtol=0)

    @settings(deadline=None, max_examples=60)
    @given(st.lists(st.floats(0.1, 10.0), min_size=1, max_size=6), st.floats(0.6, 0.999))
    def test_solution_is_valid_and_tight(self, ratios, target):
        s = single_function(len(ratios))
        res = allocate_bisection(s, ratios, target)
        g = weighted_success(res.targets, s)
        assert 0 <= g - target <= TOL
        assert res.verdict is Verdict.PASS
        for j in range(len(ratios)):
            bumped = list(res.targets)
            bumped[j] += 1e-6
            assert weighted_success(bumped, s) < target

    def test_result_passes_assess(self, tunnel):
        res = allocate(tunnel)
        a = assess(tunnel, res.targets)
        assert a.verdict is Verdict.PASS
        assert a.slack == pytest.approx(res.slack, abs=1e-15)


class TestDesignTargets:
    def test_gas_chosen_values(self):
        subs = [
            SubsystemSpec("sensor", Proportional(0.05, "response_time")),
            SubsystemSpec("damper", ModularBinomial(0.01, 10)),
            SubsystemSpec("logic_solver", Binary(0.001)),
        ]
        sensor, damper, ls = derive_design_targets([0.034, 0.004, 1e-4], subs)
        assert sensor.kind is DesignKind.EXPECTED_RESPONSE_FRACTION
        assert sensor.value == 0.034
        assert "3.4% of T_max" in sensor.narrative
        assert damper.kind is DesignKind.MODULE_PFD
        assert damper.value == 4.0e-3
        assert "4.0E-03" in damper.narrative
        assert ls.kind is DesignKind.PFD
        assert ls.narrative == "PFD = 1.0E-04"

    def test_composite_passes_through(self):
        sub = SubsystemSpec("fe", Series((("fan", Binary(0.1)), ("damper", Binary(0.1)))))
        (t,) = derive_design_targets([0.006], [sub])
        assert t.kind is DesignKind.EXPECTED_FAILURE_DEGREE
        assert t.value == 0.006

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            derive_design_targets([0.1, 0.2], [SubsystemSpec("a", Binary(0.1))])


class TestRrf:
    def test_gas(self, gas):
        assert rrf(gas, 0.1) == pytest.approx(25.0, rel=1e-12)

    def test_no_reduction_needed(self, gas):
        assert rrf(gas, 2.5) == pytest.approx(1.0, rel=1e-12)

    def test_tunnel(self, tunnel):
        assert rrf(tunnel, 0.02933) == pytest.approx(47.7, abs=0.05)

    def test_zero_tolerance(self, gas):
        with pytest.raises(ZeroToleranceRiskError):
            rrf(gas, 0.0)

    @pytest.mark.parametrize("value, band", [
        (1.0, SilBand.BELOW_SIL1),
        (10.0, SilBand.BELOW_SIL1),
        (10.0001, SilBand.SIL1),
        (25.0, SilBand.SIL1),
        (100.0, SilBand.SIL1),
        (5000.0, SilBand.SIL3),
        (1e5, SilBand.SIL4),
        (2e5, SilBand.ABOVE_SIL4),
    ])
    def test_bands(self, value, band):
        assert sil_from_rrf(value) is band

    def test_gas_band(self, gas):
        assert sil_from_rrf(rrf(gas, 0.1)) is SilBand.SIL1

    @pytest.mark.parametrize("value", [0.0, -3.0, float("nan")])
    def test_non_positive(self, value):
        with pytest.raises(NonPositiveRrfError):
            sil_from_rrf(value)

    @given(st.floats(1e-3, 1e7), st.floats(1e-3, 1e7))
    def test_monotone(self, a, b):
        lo, hi = sorted((a, b))
        assert sil_from_rrf(lo) <= sil_from_rrf(hi)

    def test_labels(self):
        assert SilBand.SIL1.label == "1"
        assert SilBand.BELOW_SIL1.label == "below 1"
