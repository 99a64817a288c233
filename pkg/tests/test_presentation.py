from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pytest

from algapprox import SamplerConfig, check_regularity, estimate_local_dimension, load, make_presentation
from algapprox.errors import OriginNotMember, SchemaError, WrongCodimension
from algapprox.presentation import Presentation, SetDescription, box_count_slope, estimate_local_dimension_details
from algapprox.sampling import sample_points

QUADRANT_DOC = {"variables": ["x", "y", "z"], "pieces": [{"equations": ["z"], "inequalities": ["x", "y"]}]}


def test_load_quadrant(data_dir):
    desc = load(json.loads((data_dir / "quadrant.json").read_text()))
    assert isinstance(desc, SetDescription)
    assert desc.n == 3 and len(desc.pieces) == 1
    assert len(desc.pieces[0].inequalities) == 2


def test_load_rejects_set_missing_origin():
    with pytest.raises(OriginNotMember):
        load({"variables": ["x", "y", "z"], "pieces": [{"equations": ["z - 1"]}]})


def test_load_two_piece_union():
    doc = {"variables": ["x", "y"], "pieces": [{"equations": ["y"], "inequalities": ["x"]},
                                               {"equations": ["y"], "inequalities": ["-x"]}]}
    assert len(load(doc).pieces) == 2


@pytest.mark.parametrize("doc", [
    {"pieces": [{"equations": ["x"]}]},
    {"variables": [], "pieces": [{"equations": ["x"]}]},
    {"variables": ["x", "x"], "pieces": [{"equations": ["x"]}]},
    {"variables": ["x"], "pieces": []},
    {"variables": ["x"], "pieces": [{"equations": "x"}]},
    {"variables": ["x"], "pieces": [{"equations": ["x y"]}]},
    {"variables": ["x"], "pieces": [{"equations": ["y"]}]},
])
def test_load_schema_errors(doc):
    with pytest.raises(SchemaError):
        load(doc)


def test_declared_dimension_range():
    with pytest.raises(SchemaError):
        make_presentation(["x", "y"], ["y"], (), 2)


# ---------------------------------------------------------------------------
# dimension

def test_dimension_x_axis(cfg):
    assert estimate_local_dimension(make_presentation(["x", "y"], ["y"]), cfg) == 1


def test_dimension_quadrant(cfg, quadrant):
    assert estimate_local_dimension(quadrant, cfg) == 2


def test_dimension_bad_approximant_is_two(cfg):
    Y = make_presentation(["x1", "x2", "x3"], ["(x1^2 + x2^2)^2 - x3^5"])
    assert estimate_local_dimension(Y, cfg) == 2


def test_dimension_of_origin_only_set(cfg):
    est = estimate_local_dimension_details(make_presentation(["x", "y"], ["x^2 + y^2"]), cfg)
    assert est.empty_near_origin and est.dimension == 0


def test_box_count_slope_synthetic():
    # half-open [0, 1) so a regular grid tiles the boxes exactly: slopes are exactly 1 and 2
    t = np.arange(0, 4000) / 4000
    curve = np.column_stack([t, np.zeros_like(t)])
    assert box_count_slope(curve, 0.01) == pytest.approx(1.0, abs=1e-12)
    g = np.stack(np.meshgrid(t[::20], t[::20]), axis=-1).reshape(-1, 2)
    assert box_count_slope(g, 0.05) == pytest.approx(2.0, abs=1e-12)


def _substitute(text: str, variables, rows) -> str:
    """Replace each variable by the linear form sum_k rows[i][k] * variable_k."""
    names = list(variables)
    forms = {}
    for i, v in enumerate(names):
        parts = [f"{c}*{w}" for c, w in zip(rows[i], names) if c != 0]
        forms[v] = "(" + " + ".join(parts) + ")"
    # two passes through placeholders so names inside forms are not re-substituted
    out = text
    for i, v in enumerate(names):
        out = out.replace(v, f"@{i}@")
    for i, v in enumerate(names):
        out = out.replace(f"@{i}@", forms[v])
    return out


ROT3 = [[Fraction(3, 5), Fraction(-4, 5), 0], [Fraction(4, 5), Fraction(3, 5), 0], [0, 0, 1]]
ROT3B = [[1, 0, 0], [0, Fraction(5, 13), Fraction(-12, 13)], [0, Fraction(12, 13), Fraction(5, 13)]]


def _rotated(variables, equations, inequalities, rows):
    return make_presentation(variables, [_substitute(e, variables, rows) for e in equations],
                             [_substitute(h, variables, rows) for h in inequalities])


@pytest.mark.parametrize("variables,equations,inequalities,expected", [
    (["x", "y", "z"], ["y", "z"], [], 1),
    (["x", "y", "z"], ["z"], ["x", "y"], 2),
    (["x", "y", "z"], ["(x^2 + y^2)^2 - z^5"], [], 2),
])
def test_dimension_invariant_under_rotation_and_permutation(cfg, variables, equations, inequalities, expected):
    base = make_presentation(variables, equations, inequalities)
    assert estimate_local_dimension(base, cfg) == expected
    for rows in (ROT3, ROT3B):
        rows = [[str(c) for c in r] for r in rows]
        assert estimate_local_dimension(_rotated(variables, equations, inequalities, rows), cfg) == expected
    perm = list(reversed(variables))
    permuted = make_presentation(perm, equations, inequalities)
    assert estimate_local_dimension(permuted, cfg) == expected


def test_slice_dimension_bounded_by_ambient(cfg):
    # a full-dimensional set: the slice estimate saturates at n - 1
    full = Presentation(("x", "y"), (), ())
    assert estimate_local_dimension(full, cfg) == 2


# ---------------------------------------------------------------------------
# regularity

def test_regularity_quadrant(cfg, quadrant):
    rep = check_regularity(quadrant, cfg)
    assert rep.verdict and rep.rank_ok
    assert rep.inequality_dims == [1, 1]


def test_regularity_wrong_codimension(cfg):
    p = make_presentation(["x1", "x2", "x3"], ["x1^2 + x2^2"], ["x3"], 1)
    with pytest.raises(WrongCodimension):
        check_regularity(p, cfg)


def test_regularity_half_line(cfg, half_line):
    rep = check_regularity(half_line, cfg)
    assert rep.verdict and rep.rank_ok
    assert rep.inequality_dims == [0]


def test_regularity_flags_vanishing_inequality(cfg):
    # y >= 0 holds with equality on the whole x-axis: condition (c) fails
    p = make_presentation(["x", "y"], ["y"], ["y"], 1)
    rep = check_regularity(p, cfg)
    assert not rep.verdict
    assert rep.vanishing_inequalities == [0]
    assert "y" in rep.messages[0]
    cleaned = load({"variables": ["x", "y"], "pieces": [{"equations": ["y"], "inequalities": ["y", "x"]}]},
                   drop_vanishing=True, cfg=cfg)
    assert [str(h) for h in cleaned.pieces[0].inequalities] == ["x"]


def test_regularity_critical_locus_too_big(cfg):
    # z^2 = 0 is the plane with a degenerate equation: every point is critical
    p = make_presentation(["x", "y", "z"], ["z^2"], (), 2)
    rep = check_regularity(p, cfg)
    assert not rep.rank_ok and not rep.verdict


# ---------------------------------------------------------------------------
# sampled points lie on the set

@pytest.mark.parametrize("variables,equations,inequalities", [
    (["x", "y", "z"], ["z"], ["x", "y"]),
    (["x1", "x2", "x3"], ["x1^2 - x3^5", "x2"], []),
    (["x", "y", "z"], ["(z^2 - x^5)^2 - y^7"], []),
])
def test_samples_satisfy_presentation(variables, equations, inequalities):
    cfg = SamplerConfig(samples_per_radius=400)
    p = make_presentation(variables, equations, inequalities)
    for r in cfg.radii:
        pts = sample_points(p.as_set(), r, cfg)
        assert len(pts) > 0
        np.testing.assert_allclose(np.linalg.norm(pts, axis=1), r, atol=cfg.newton_tol * 10)
        for f in p.equations:
            assert np.all(np.abs(f.evaluate(pts)) <= cfg.on_set_tol)
        for h in p.inequalities:
            assert np.all(h.evaluate(pts) >= -cfg.on_set_tol)
