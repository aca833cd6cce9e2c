import numpy as np
import pytest

from bfctl import aggregate_metrics, queue_pmf, slot_pmfs, solve, stationary, throughput
from bfctl.errors import EvalDomain, NearCritical, Unstable
from bfctl.model import ArrivalSpec
from bfctl.pgf import (denominator, find_roots, fixed_point_roots, lattice_coefficients,
                       propagate_cycle, slot_forms_at, winding_number)

from conftest import build


def disk_points(n, seed):
    rng = np.random.default_rng(seed)
    return 0.98 * np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))


def test_denominator_plain_lane():
    model = build(0, 3, 2, arrivals=0.3)
    z = disk_points(32, 1)
    y = np.exp(0.3 * (z - 1))
    np.testing.assert_allclose(denominator(model, z), z ** 3 - y ** 5, atol=1e-12)


def test_denominator_certain_crossings():
    g1, g2, r, p = 3, 2, 2, 0.35
    model = build(g1, g2, r, p=p, q=1.0, arrivals=0.2)
    z = disk_points(32, 2)
    y = np.exp(0.2 * (z - 1))
    inner = sum(((1 - p) / z) ** i for i in range(g1))
    expect = z ** (g1 + g2) - ((1 - p) ** g1 + p * z ** g1 * inner) * y ** model.c
    np.testing.assert_allclose(denominator(model, z), expect, atol=1e-12)


def test_propagate_cycle_rejects_origin():
    with pytest.raises(EvalDomain):
        propagate_cycle(build(1, 1, 1, arrivals=0.1), np.array([0.0]))


def test_fixed_point_and_companion_roots_agree():
    poisson = build(0, 4, 3, m=2, arrivals=0.6)
    rs = find_roots(poisson)
    assert rs.method == "fixed-point"
    from bfctl.model import arrival_pmf

    w = arrival_pmf(ArrivalSpec.poisson(0.6), 1e-16).weights
    explicit = build(0, 4, 3, m=2, arrivals=[ArrivalSpec.explicit(w / w.sum())] * 7)
    rt = find_roots(explicit)
    assert rt.method == "taylor-companion"
    a, b = np.sort_complex(rs.expanded()), np.sort_complex(rt.expanded())
    np.testing.assert_allclose(a, b, atol=1e-8)
    raw = fixed_point_roots(poisson)
    np.testing.assert_allclose(np.abs(denominator(poisson, raw)), 0, atol=1e-12)


def test_root_count_and_winding(small_p06):
    rs = find_roots(small_p06)
    assert rs.count == 6 and rs.winding == 6
    assert np.all(np.abs(rs.roots) <= 1 + 1e-7)
    assert np.any(rs.roots == 1.0)


def test_winding_number_polynomial():
    assert winding_number(lambda z: (z - 0.5) * (z + 0.2j) * (z - 3)) == 2


def test_unstable_and_near_critical():
    with pytest.raises(Unstable):
        find_roots(build(2, 4, 4, p=1.0, q=1.0, arrivals=0.41))
    with pytest.raises(NearCritical):
        find_roots(build(2, 4, 4, p=1.0, q=1.0, arrivals=0.39999))


def test_solution_matches_slot_forms(small_p06):
    solved = solve(small_p06)
    z = 0.3 + 0.4j
    forms = slot_forms_at(small_p06, z)
    xg = solved.pgf(6, z)
    for i in range(1, 11):
        lf = forms[i]
        assert abs(lf.evaluate(xg, solved.unknowns) - solved.pgf(i, z)) < 1e-12


def test_solution_properties(small_p06):
    solved = solve(small_p06)
    mom = solved.moments()
    np.testing.assert_allclose(mom["mass"], 1.0, atol=1e-12)
    assert np.all(mom["variance"] > 0)
    assert np.all((solved.unknowns >= 0) & (solved.unknowns <= 1))
    assert solved.residual < 1e-10
    assert throughput(solved) == pytest.approx(small_p06.load, abs=1e-10)


def test_zero_arrivals_trivial():
    solved = solve(build(2, 3, 1, p=0.5, q=0.5, arrivals=0.0))
    assert solved.trivial
    np.testing.assert_array_equal(solved.means, 0.0)
    met = aggregate_metrics(solved)
    assert not met.delay_defined and "ZeroArrivalDelay" in met.flags
    pmfs, _ = slot_pmfs(solved, 5)
    np.testing.assert_array_equal(pmfs[:, 0], 1.0)


def test_pmf_inversion_against_oracle(small_p06):
    solved = solve(small_p06)
    orc = stationary(small_p06, 200)
    pmfs, info = slot_pmfs(solved, 60)
    assert info.aliasing_bound <= 1e-8
    np.testing.assert_allclose(pmfs, orc.pmfs[:, :61], atol=1e-9)
    single = queue_pmf(solved, 3, 60)
    np.testing.assert_allclose(single.weights, pmfs[2], atol=1e-13)


def test_joint_blocked_parts_sum(small_p06):
    solved = solve(small_p06)
    u = queue_pmf(solved, 1, 40, part="u")
    b = queue_pmf(solved, 1, 40, part="b")
    t = queue_pmf(solved, 1, 40)
    np.testing.assert_allclose(u.weights + b.weights, t.weights, atol=1e-12)
    orc = stationary(small_p06, 200)
    np.testing.assert_allclose(b.weights, orc.blocked[0, :41], atol=1e-9)


def test_lattice_inversion_of_known_pgf():
    coeffs, info = lattice_coefficients(lambda z: np.exp(2.0 * (z - 1)), 30)
    from scipy import stats

    np.testing.assert_allclose(coeffs, stats.poisson.pmf(np.arange(31), 2.0), atol=1e-12)


def test_lane_count_and_delay():
    model = build(0, 2, 3, m=2, arrivals=0.5)
    met = aggregate_metrics(solve(model))
    assert met.mean_delay == pytest.approx(met.mean_queue / 0.5)
    orc = stationary(model, 200)
    np.testing.assert_allclose(met.slot_means, orc.means, atol=1e-9)


def test_degenerate_lattice_reports_singular_system():
    from bfctl.errors import SingularSystem

    with pytest.raises(SingularSystem):
        solve(build(0, 2, 1, m=2, arrivals=ArrivalSpec.deterministic(1)))


def test_unknown_labels_of_reference_lane(small_p0):
    solved = solve(small_p0)
    assert solved.index.label_strings() == [
        "P(X1=0,u)", "P(X2=0,u)", "P(X3=0)", "P(X4=0)", "P(X5=0)", "P(X10=0)"]


def test_mean_delay_by_littles_law(small_p0):
    met = aggregate_metrics(solve(small_p0))
    table_mean = np.mean([1.297, 0.926, 0.657, 0.465, 0.329, 0.233, 0.623, 1.013, 1.404, 1.793])
    assert met.mean_queue == pytest.approx(table_mean, abs=5e-4)
    assert met.mean_delay == pytest.approx(table_mean / 0.39, abs=5e-4 / 0.39)
    assert met.mean_delay == pytest.approx(met.mean_queue / 0.39, rel=1e-14)
