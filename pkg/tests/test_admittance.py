import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from robocrane.admittance import (
    AdmittanceParams,
    SecondOrderSpec,
    critical_damping,
    design_crane,
    design_robot,
    from_second_order,
    to_second_order,
)
from robocrane.errors import DomainError

positive = st.floats(1e-3, 1e5)


@pytest.mark.parametrize(
    "params,omega_n,zeta",
    [
        ((1, 0, 1), 1.0, 0.0),
        ((10, 283, 2000), 14.142, 1.0006),
        ((1, 64, 1000), 31.62, 1.012),
    ],
)
def test_to_second_order(params, omega_n, zeta):
    spec = to_second_order(AdmittanceParams(*params))
    assert spec.omega_n == pytest.approx(omega_n, rel=1e-3)
    assert spec.zeta == pytest.approx(zeta, rel=1e-3, abs=1e-12)


@pytest.mark.parametrize("M,K,B", [(1, 1000, 63.2456), (10, 85.49, 58.477), (1, 1, 2.0)])
def test_critical_damping(M, K, B):
    assert critical_damping(M, K) == pytest.approx(B, abs=1e-3)


def test_published_crane_damping_is_rounded_up():
    # 64 in the published example is 2*sqrt(1000) rounded up
    assert math.ceil(critical_damping(1, 1000)) == 64


@pytest.mark.parametrize("M,K", [(0, 1), (1, 0), (-1, 5), (1, -2)])
def test_critical_damping_rejects_nonpositive(M, K):
    with pytest.raises(DomainError):
        critical_damping(M, K)


@pytest.mark.parametrize("M,B,K", [(0, 1, 1), (1, -1, 1), (1, 1, 0), (math.nan, 1, 1), (1, math.inf, 1)])
def test_params_invariants(M, B, K):
    with pytest.raises(DomainError):
        AdmittanceParams(M, B, K)


def test_design_robot_reference():
    d = design_robot(10, 500, 2000)
    assert d.params.M == 10 and d.params.K == 2000
    assert d.params.B == pytest.approx(283, abs=0.5)
    assert d.ok and not d.warnings


def test_design_robot_soft_warning():
    d = design_robot(10, 500, 400)
    assert not d.ok
    assert any("environment" in w for w in d.warnings)


def test_design_robot_stiff():
    assert design_robot(10, 500, 60000).params.B == pytest.approx(1549.2, abs=0.1)


@pytest.mark.parametrize("args", [(0, 500, 2000), (10, 0, 2000), (10, 500, -1)])
def test_design_robot_domain(args):
    with pytest.raises(DomainError):
        design_robot(*args)


def test_design_crane():
    robot = AdmittanceParams(10, 283, 2000)
    d = design_crane(robot, 1, 1000)
    assert d.params.B == pytest.approx(63.25, abs=0.01)
    assert d.ok
    heavy = design_crane(robot, 20, 1000)
    assert len(heavy.warnings) == 1 and "mass" in heavy.warnings[0]
    stiff = design_crane(robot, 1, 3000)
    assert len(stiff.warnings) == 1 and "stiffness" in stiff.warnings[0]
    with pytest.raises(DomainError):
        design_crane(robot, 0, 1000)


@given(positive, st.floats(0, 1e5), positive)
def test_round_trip(M, B, K):
    p = AdmittanceParams(M, B, K)
    q = from_second_order(to_second_order(p), M)
    assert q.K == pytest.approx(K, rel=1e-12)
    assert q.B == pytest.approx(B, rel=1e-12, abs=1e-300)


@given(positive, positive)
def test_critical_damping_gives_unit_zeta(M, K):
    assert to_second_order(AdmittanceParams(M, critical_damping(M, K), K)).zeta == pytest.approx(1, rel=1e-12)


@given(positive, positive, positive, positive, positive)
def test_designs_are_valid(Mr, Ke, Kr, Mc, Kc):
    robot = design_robot(Mr, Ke, Kr).params
    crane = design_crane(robot, Mc, Kc).params
    for p in (robot, crane):
        assert p.M > 0 and p.B >= 0 and p.K > 0


def test_second_order_spec_invariants():
    with pytest.raises(DomainError):
        SecondOrderSpec(0, 1)
    with pytest.raises(DomainError):
        SecondOrderSpec(1, -0.1)
