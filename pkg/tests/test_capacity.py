import itertools
import warnings

import numpy as np
import pytest

from bfctl import capacity_closed_form_q1, check_stability, hcm_shared_lane_capacity, reward_recursion
from bfctl.capacity import ServiceCounts, effective_service
from bfctl.errors import DivisionDomain, PreconditionUnmet

from conftest import build


def test_anchor_p1_q1():
    rep = reward_recursion(build(2, 4, 4, p=1.0, q=1.0, arrivals=0.39))
    assert rep.r0 == 4.0
    assert rep.r0 / 10 == pytest.approx(0.4)
    assert rep.stable
    assert rep.rho == pytest.approx(3.9 / 4)


@pytest.mark.parametrize("g1,g2,r,m", [(0, 1, 0, 1), (3, 2, 5, 2), (5, 5, 1, 3)])
def test_extremes(g1, g2, r, m):
    rng = np.random.default_rng(g1 + g2)
    q = rng.uniform(0, 1, g1)
    assert reward_recursion(build(g1, g2, r, m=m, p=0.0, q=q)).r0 == m * (g1 + g2)
    assert reward_recursion(build(g1, g2, r, m=m, p=1.0, q=1.0)).r0 == m * g2


def test_closed_form_q1_random():
    rng = np.random.default_rng(3)
    for _ in range(40):
        g1, g2 = int(rng.integers(0, 8)), int(rng.integers(1, 8))
        p = rng.uniform(0, 1, g1)
        model = build(g1, g2, 2, p=p, q=1.0)
        assert reward_recursion(model).r0 == pytest.approx(capacity_closed_form_q1(model), abs=1e-12)


def test_closed_form_p1_random():
    rng = np.random.default_rng(4)
    for _ in range(40):
        g1, g2 = int(rng.integers(1, 8)), int(rng.integers(1, 8))
        q = rng.uniform(0, 1, g1)
        model = build(g1, g2, 1, m=2, p=1.0, q=q)
        assert reward_recursion(model).r0 == pytest.approx(capacity_closed_form_q1(model), abs=1e-12)
        assert capacity_closed_form_q1(model) == pytest.approx(2 * (g1 + g2 - q.sum()))


def test_closed_form_precondition():
    with pytest.raises(PreconditionUnmet):
        capacity_closed_form_q1(build(2, 2, 2, p=0.5, q=0.5))


def test_capacity_decreases_with_p_and_q():
    ps = np.linspace(0, 1, 6)
    caps = [reward_recursion(build(4, 3, 2, p=p, q=0.7)).r0 for p in ps]
    assert np.all(np.diff(caps) <= 1e-12)
    qs = np.linspace(0, 1, 6)
    caps = [reward_recursion(build(4, 3, 2, p=0.4, q=q)).r0 for q in qs]
    assert np.all(np.diff(caps) <= 1e-12)


def test_p1_capacity_ignores_crossing_order():
    q = np.array([0.9, 0.1, 0.5, 0.3])
    ref = reward_recursion(build(4, 2, 2, p=1.0, q=q)).r0
    for perm in itertools.permutations(range(4)):
        assert reward_recursion(build(4, 2, 2, p=1.0, q=q[list(perm)])).r0 == pytest.approx(ref, abs=1e-12)


def test_stability_strict_inequality():
    model = build(2, 4, 4, p=1.0, q=1.0, arrivals=0.4)
    assert not check_stability(model).stable


def test_near_critical_warns():
    with pytest.warns(RuntimeWarning):
        check_stability(build(2, 4, 4, p=1.0, q=1.0, arrivals=0.39998))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        check_stability(build(2, 4, 4, p=1.0, q=1.0, arrivals=0.3))


def test_hcm_formula():
    assert hcm_shared_lane_capacity(30, 0.0, 2, 0.5) == 30
    assert hcm_shared_lane_capacity(30, 1.0, 2, 0.5) == pytest.approx(7.5)
    with pytest.raises(DivisionDomain):
        hcm_shared_lane_capacity(30, 0.5, 2, 0.0)


def test_turning_corrected_service():
    assert effective_service(0.2, 1, 2) == pytest.approx(1.8)
    model = build(3, 2, 1, p=[0.0, 0.5, 1.0], q=0.0)
    svc = ServiceCounts.turning_corrected(model, 1.0, 2.0)
    np.testing.assert_allclose(svc.blockable, [2.0, 1.5, 1.0])
    np.testing.assert_allclose(svc.free, [1.5, 1.5])
    # no crossings: every slot serves its corrected amount
    assert reward_recursion(model, svc).r0 == pytest.approx(4.5 + 3.0)


def test_hcm_and_recursion_coincide_at_p1():
    # with every vehicle turning both count one departure per unblocked slot
    from bfctl.sweep import hcm_rows

    rows = hcm_rows(10, 5, 30.0, 1.0, 2.0, [0.4, 0.6, 0.8, 1.0])
    for row in rows:
        assert row["hcm"] == pytest.approx(15 * row["f_Rpb"])
        assert row["bfctl_uniform"] == pytest.approx(row["hcm"], abs=1e-12)
        assert row["bfctl_step"] == pytest.approx(row["hcm"], abs=1e-12)
