from __future__ import annotations

import math

import numpy as np
import pytest

from algapprox import (
    SamplerConfig,
    SEquivReport,
    check_equiv,
    check_leq_s,
    delta,
    estimate_lojasiewicz,
    fit_contact_order,
    hausdorff,
    horn_member,
    make_presentation,
    parse,
    profile_csv,
)
from algapprox.errors import EmptyCloud, HypothesisViolated, InsufficientData
from algapprox.metric import ratios_decreasing, verdict
from algapprox.presentation import Presentation, SetDescription
from algapprox.sampling import clear_caches

FAST = SamplerConfig(samples_per_radius=500)


# ---------------------------------------------------------------------------
# delta on clouds

def test_delta_identity():
    C = np.random.default_rng(0).normal(size=(30, 3))
    assert delta(C, C) == 0


def test_delta_asymmetry():
    assert delta([[0, 0], [1, 0]], [[0, 0]]) == 1
    assert delta([[0, 0]], [[0, 0], [1, 0]]) == 0


def test_delta_two_points():
    assert delta([[0, 1]], [[1, 0]]) == pytest.approx(math.sqrt(2), abs=1e-15)


def test_delta_empty_cloud():
    with pytest.raises(EmptyCloud):
        delta(np.zeros((0, 2)), [[0, 0]])


def test_metric_axioms_random_triples():
    rng = np.random.default_rng(12)
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        A, B, C = (rng.uniform(-1, 1, (int(rng.integers(1, 12)), n)) for _ in range(3))
        assert hausdorff(A, A) == 0
        assert abs(hausdorff(A, B) - hausdorff(B, A)) <= 1e-12
        assert hausdorff(A, C) <= hausdorff(A, B) + hausdorff(B, C) + 1e-12


def test_delta_monotone_under_target_enlargement():
    rng = np.random.default_rng(5)
    for _ in range(200):
        P = rng.normal(size=(10, 2))
        Q = rng.normal(size=(5, 2))
        bigger = np.vstack([Q, rng.normal(size=(int(rng.integers(1, 6)), 2))])
        assert delta(P, bigger) <= delta(P, Q)


# ---------------------------------------------------------------------------
# contact order and verdicts

RADII = (0.2, 0.1, 0.05, 0.025)


def test_fit_exact_power():
    assert fit_contact_order([(r, 3 * r**2) for r in RADII]) == pytest.approx(2.0, abs=1e-12)


def test_fit_all_zero_is_infinite():
    assert fit_contact_order([(r, 0.0) for r in RADII]) == math.inf


def test_fit_needs_two_pairs():
    with pytest.raises(InsufficientData):
        fit_contact_order([(0.1, 0.01)])


def test_fit_skips_floor_values():
    pairs = [(0.2, 0.2**3), (0.1, 0.1**3), (0.05, 0.0), (0.025, 0.0)]
    assert fit_contact_order(pairs) == pytest.approx(3.0, abs=1e-12)


def test_verdict_requires_order_and_decreasing_ratios():
    cfg = SamplerConfig()
    good = [(r, r**3, r**3 / r**2) for r in RADII]
    order, ok, _ = verdict(good, 2.0, cfg)
    assert order == pytest.approx(3.0) and ok
    # steep overall slope but one ratio goes up: rejected
    bumpy = [(0.2, 1e-2, 0.25), (0.1, 2e-3, 0.2), (0.05, 1e-3, 0.4), (0.025, 1e-6, 1.6e-3)]
    bumpy = [(r, d, d / r**2) for r, d, _ in bumpy]
    assert not ratios_decreasing(bumpy, cfg.delta_floor)
    assert not verdict(bumpy, 2.0, cfg)[1]
    # order below s + margin: rejected even with decreasing ratios
    shallow = [(r, r**2.1, r**0.1) for r in RADII]
    assert not verdict(shallow, 2.0, cfg)[1]
    # all at the floor: passes with unbounded order
    assert verdict([(r, 0.0, 0.0) for r in RADII], 4.0, cfg) == (math.inf, True, ["all deltas at or below the floor"])


def test_report_round_trip():
    rep = SEquivReport("A<=B", 2.0, [(0.2, 0.01, 0.25), (0.1, 0.0, 0.0)], math.inf, True, ["x"])
    again = SEquivReport.from_dict(rep.to_dict())
    assert again == rep


def test_profile_csv_format():
    ab = SEquivReport("A<=B", 2.0, [(0.2, 0.1, 2.5), (0.1, 1 / 3, 100 / 3)], 1.0, False)
    ba = SEquivReport("B<=A", 2.0, [(0.2, 0.0, 0.0), (0.1, 0.0, 0.0)], math.inf, True)
    lines = profile_csv(ab, ba).splitlines()
    assert lines[0] == "radius,delta_ab,delta_ba,ratio_ab,ratio_ba"
    assert lines[2].split(",")[1] == "0.33333333333333331"
    assert len(lines) == 3


# ---------------------------------------------------------------------------
# directed tests on sets

def test_subset_passes_for_any_s(line):
    half = make_presentation(["x", "y"], ["y"], ["x"])
    for s in (1, 2, 4):
        rep = check_leq_s(half, line, s, FAST)
        assert rep.passed and rep.fitted_order == math.inf


def test_subset_of_clouds_gives_zero_delta():
    rng = np.random.default_rng(1)
    for _ in range(50):
        B = rng.normal(size=(20, 3))
        A = B[rng.choice(20, 7, replace=False)]
        assert delta(A, B) == 0


def test_parabola_vs_line_order(parabola, line):
    rep = check_leq_s(parabola, line, 1.5, FAST)
    assert rep.fitted_order == pytest.approx(2.0, abs=0.15)
    assert rep.passed
    assert not check_leq_s(parabola, line, 2.0, FAST).passed


def test_isolated_origin_passes(line):
    point = make_presentation(["x", "y"], ["x^2 + y^2"])
    rep = check_leq_s(point, line, 3, FAST)
    assert rep.passed and rep.fitted_order == math.inf


def test_equiv_quadrant_with_itself(quadrant):
    assert all(r.passed for r in check_equiv(quadrant, quadrant, 3, FAST))


def test_equiv_parabola_line(parabola, line):
    assert all(r.passed for r in check_equiv(parabola, line, 1.5, FAST))
    assert not all(r.passed for r in check_equiv(parabola, line, 2.5, FAST))


def test_equiv_half_line_and_w5(half_line):
    w5 = make_presentation(["x1", "x2", "x3"], ["x1^2 - x3^5", "x2"])
    ab, ba = check_equiv(half_line, w5, 2, FAST)
    assert ab.passed and ba.passed
    # the approximant's far side contacts at order 5/2
    assert ba.fitted_order == pytest.approx(2.5, abs=0.15)


def test_union_compatibility(parabola, line):
    half = make_presentation(["x", "y"], ["y"], ["x"])
    upper = make_presentation(["x", "y"], ["y - x^2"], ["x"])
    assert check_leq_s(half, line, 1.5, FAST).passed
    assert check_leq_s(upper, line, 1.5, FAST).passed
    union = SetDescription((half, upper))
    assert check_leq_s(union, SetDescription((line, line)), 1.5, FAST).passed


def test_check_leq_s_is_deterministic(parabola, line):
    a = check_leq_s(parabola, line, 1.5, FAST.replace(seed=3))
    clear_caches()
    b = check_leq_s(parabola, line, 1.5, FAST.replace(seed=3))
    assert a == b


def test_s_below_one_rejected(line):
    with pytest.raises(ValueError):
        check_leq_s(line, line, 0.5, FAST)


# ---------------------------------------------------------------------------
# horns

def test_horn_member_on_set(line):
    assert horn_member([0.1, 0.0], line, 2, FAST)


def test_horn_member_examples(line):
    assert horn_member([0.1, 0.001], line, 2, FAST)
    assert not horn_member([0.1, 0.05], line, 2, FAST)


def test_horn_member_empty_near_x():
    point = make_presentation(["x", "y"], ["x^2 + y^2"])
    assert not horn_member([0.1, 0.0], point, 2, FAST)


def test_horn_monotone_in_sigma():
    rng = np.random.default_rng(8)
    for _ in range(1000):
        A = rng.uniform(-1, 1, (int(rng.integers(1, 20)), 3))
        x = rng.uniform(-1, 1, 3)
        x *= rng.uniform(0.01, 0.99) / np.linalg.norm(x)
        s1 = rng.uniform(1.01, 4)
        s2 = s1 + rng.uniform(0.01, 3)
        if horn_member(x, A, s2):
            assert horn_member(x, A, s1)


def test_horn_preconditions(line):
    with pytest.raises(ValueError):
        horn_member([0, 0], line, 2, FAST)
    with pytest.raises(ValueError):
        horn_member([0.1, 0], line, 1, FAST)


# ---------------------------------------------------------------------------
# Lojasiewicz

INTERVAL = Presentation(("x",), (), ())


def test_loja_x_vs_x_squared():
    est = estimate_lojasiewicz(parse("x", ["x"]), parse("x^2", ["x"]), INTERVAL, FAST)
    assert est.alpha_hat == pytest.approx(0.55, abs=1e-9)
    assert est.alpha_hat > 0 and est.samples_used > 0


def test_loja_x_squared_vs_x():
    est = estimate_lojasiewicz(parse("x^2", ["x"]), parse("x", ["x"]), INTERVAL, FAST)
    assert est.alpha_hat == pytest.approx(2.2, abs=1e-9)


def test_loja_equal_fields():
    p = parse("x^3", ["x"])
    assert estimate_lojasiewicz(p, p, INTERVAL, FAST).alpha_hat == pytest.approx(1.1, abs=1e-9)


def test_loja_hypothesis_violation():
    with pytest.raises(HypothesisViolated):
        estimate_lojasiewicz(parse("x", ["x"]), parse("1/2", ["x"]), INTERVAL, FAST)


def test_loja_rescales_large_g():
    est = estimate_lojasiewicz(parse("x", ["x"]), parse("4*x", ["x"]), INTERVAL, FAST, domain_radius=0.5)
    assert est.g_scale < 1
    assert est.alpha_hat > 0
