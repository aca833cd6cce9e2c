import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from bfctl import reward_recursion, solve, stationary, throughput
from bfctl.model import ArrivalSpec, blocked_arrival_pmf

from conftest import build

prob = st.floats(0.0, 1.0)


@given(mean=st.floats(0.01, 4.0), p=st.floats(0.01, 0.99))
def test_blocked_law_mass_and_mean(mean, p):
    pmf = blocked_arrival_pmf(ArrivalSpec.poisson(mean), p)
    assert pmf.total == pytest.approx(1.0, abs=1e-11)
    y_w = np.exp(-mean * p)
    expect = mean + (1 - y_w) * (1 - 1 / p)
    assert pmf.mean == pytest.approx(expect, abs=1e-9)


@given(g1=st.integers(0, 6), g2=st.integers(1, 6), m=st.integers(1, 3),
       p=st.lists(prob, min_size=6, max_size=6), q=st.lists(prob, min_size=6, max_size=6))
def test_capacity_bounds(g1, g2, m, p, q):
    if m > 1:
        # several lanes need explicit blocked laws unless p is 0 or 1
        p = [round(x) for x in p]
    model = build(g1, g2, 2, m=m, p=p[:g1], q=q[:g1])
    r0 = reward_recursion(model).r0
    assert m * g2 - 1e-12 <= r0 <= m * (g1 + g2) + 1e-12


@given(g1=st.integers(1, 5), p=st.lists(prob, min_size=5, max_size=5),
       q=st.lists(prob, min_size=5, max_size=5), k=st.integers(0, 4))
def test_raising_one_crossing_probability_never_helps(g1, p, q, k):
    k = k % g1
    lo = build(g1, 3, 1, p=p[:g1], q=q[:g1])
    q_hi = list(q[:g1])
    q_hi[k] = min(1.0, q_hi[k] + 0.25)
    hi = build(g1, 3, 1, p=p[:g1], q=q_hi)
    assert reward_recursion(hi).r0 <= reward_recursion(lo).r0 + 1e-12


@settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(g1=st.integers(0, 3), g2=st.integers(1, 4), r=st.integers(0, 4),
       p=st.lists(prob, min_size=3, max_size=3), q=st.lists(prob, min_size=3, max_size=3),
       rho=st.floats(0.1, 0.85))
def test_solver_matches_oracle(g1, g2, r, p, q, rho):
    probe = build(g1, g2, r, p=p[:g1], q=q[:g1], arrivals=1.0)
    mean = rho * reward_recursion(probe).r0 / probe.c
    model = build(g1, g2, r, p=p[:g1], q=q[:g1], arrivals=mean)
    solved = solve(model)
    orc = stationary(model, 250)
    np.testing.assert_allclose(solved.means, orc.means, atol=1e-8)
    assert throughput(solved) == pytest.approx(model.load, abs=1e-8)
