"""Acceptance criteria 1-9; each prints one PASS/FAIL line."""

from __future__ import annotations

import json
import math
import re
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from algapprox import (
    Polynomial,
    SamplerConfig,
    assess_candidate,
    check_equiv,
    combine_equations,
    estimate_local_dimension,
    estimate_lojasiewicz,
    eval_f64,
    gradient,
    hausdorff,
    horn_member,
    make_presentation,
    parse,
    run,
    to_string,
)
from algapprox.cli import main
from algapprox.errors import HypothesisViolated
from algapprox.polycore import PolyMap
from algapprox.presentation import Presentation, SetDescription
from algapprox.sampling import clear_caches, sample_points

RESULTS: list[str] = []
X123 = ["x1", "x2", "x3"]


def record(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
    RESULTS.append(line)
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# 1 and 9: quadrant pipeline, run twice through the command line

@pytest.fixture(scope="module")
def quadrant_runs(data_dir, tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("quadrant")
    runs = []
    for k in range(2):
        out = out_dir / f"report{k}.json"
        started = time.perf_counter()
        proc = subprocess.run([sys.executable, "-m", "algapprox", "approximate", str(data_dir / "quadrant_job.json"),
                               "-o", str(out), "--quiet"], capture_output=True, text=True)
        elapsed = time.perf_counter() - started
        runs.append((proc.returncode, out.read_bytes() if out.exists() else b"", elapsed, proc.stderr))
    return runs


def _order(value) -> float:
    return math.inf if value == "inf" else float(value)


def test_criterion_1_quadrant_pipeline(quadrant_runs):
    code, raw, elapsed, stderr = quadrant_runs[0]
    assert code == 0, stderr
    report = json.loads(raw)
    piece = report["result"]["pieces"][0]
    eqs = piece["structured_equations"]
    match = re.fullmatch(r"\(-x\^(\d+) \+ z\^2\)\^2 - y\^(\d+)", eqs[0]) if len(eqs) == 1 else None
    m, p = (int(match.group(1)), int(match.group(2))) if match else (0, 0)
    V = ["x", "y", "z"]
    exact = match is not None and parse(piece["equations"][0], V) == parse(f"(z^2 - x^{m})^2 - y^{p}", V)
    odd = m % 2 == 1 and p % 2 == 1 and m <= 99 and p <= 99
    orders = [_order(r["fitted_order"]) for r in piece["final_report"]]
    ok = (exact and odd and all(o >= 3.25 for o in orders) and piece["final_dimension"] == 2
          and report["pass"] and elapsed <= 60)
    record(1, ok, f"{eqs[0] if eqs else None}, m={m}, p={p}, orders={[round(o, 3) for o in orders]}, "
                  f"dim={piece['final_dimension']}, {elapsed:.1f} s")


def test_criterion_9_determinism(quadrant_runs):
    (c0, r0, _, _), (c1, r1, _, _) = quadrant_runs
    ok = c0 == c1 == 0 and len(r0) > 0 and r0 == r1
    record(9, ok, f"two seeded runs, {len(r0)} bytes, identical={r0 == r1}")


# ---------------------------------------------------------------------------
# 2: half-line

def test_criterion_2_half_line(half_line, cfg):
    res = run(half_line, 2, cfg).results[0]
    m = [st.chosen_m for st in res.steps]
    shape = len(res.equations) == 2 and res.equations[1] == parse("x2", X123) and len(m) == 1 \
        and res.equations[0] == parse(f"x1^2 - x3^{m[0]}", X123) and m[0] % 2 == 1
    w5 = make_presentation(X123, ["x1^2 - x3^5", "x2"])
    verify = all(r.passed for r in check_equiv(half_line, w5, 2, cfg))
    ok = shape and m == [5] and res.final_dimension == 1 and res.passed and verify
    record(2, ok, f"m={m}, dim={res.final_dimension}, verify W(m=5) at s=2: {verify}")


# ---------------------------------------------------------------------------
# 3: the bad approximant Y

def test_criterion_3_negative_control(half_line, cfg):
    Y = make_presentation(X123, ["(x1^2 + x2^2)^2 - x3^5"])
    dim = estimate_local_dimension(Y, cfg)
    verdict = assess_candidate(Y, half_line, 2, cfg)
    emitted = run(half_line, 2, cfg).combined_equations
    ok = dim == 2 and not verdict["accepted"] and Y.equations[0] not in emitted
    record(3, ok, f"dim(Y)={dim}, rejected={not verdict['accepted']}, pipeline emits {[str(e) for e in emitted]}")


# ---------------------------------------------------------------------------
# 4: contact-order calibration

def test_criterion_4_parabola_line(parabola, line, data_dir, capsys):
    clear_caches()
    started = time.perf_counter()
    cfg = SamplerConfig()
    ab, ba = check_equiv(parabola, line, 1.5, cfg)
    pass_15 = main(["verify", str(data_dir / "parabola.json"), str(data_dir / "line.json"), "--s", "1.5", "--quiet"])
    fail_25 = main(["verify", str(data_dir / "parabola.json"), str(data_dir / "line.json"), "--s", "2.5", "--quiet"])
    elapsed = time.perf_counter() - started
    capsys.readouterr()
    orders = [ab.fitted_order, ba.fitted_order]
    ok = all(abs(o - 2.0) <= 0.15 for o in orders) and pass_15 == 0 and fail_25 == 2 and elapsed <= 10
    record(4, ok, f"orders={[round(o, 4) for o in orders]}, exit s=1.5: {pass_15}, exit s=2.5: {fail_25}, "
                  f"{elapsed:.1f} s")


# ---------------------------------------------------------------------------
# 5: metric properties

def test_criterion_5_metric_properties():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        A, B, C = (rng.uniform(-1, 1, (int(rng.integers(1, 15)), n)) for _ in range(3))
        worst = max(worst, hausdorff(A, A), abs(hausdorff(A, B) - hausdorff(B, A)),
                    hausdorff(A, C) - hausdorff(A, B) - hausdorff(B, C))
    violations = 0
    for _ in range(1000):
        A = rng.uniform(-1, 1, (int(rng.integers(1, 20)), 3))
        x = rng.uniform(-1, 1, 3)
        x *= rng.uniform(1e-3, 0.999) / np.linalg.norm(x)
        s1 = rng.uniform(1.01, 4.0)
        s2 = s1 + rng.uniform(1e-3, 3.0)
        if horn_member(x, A, s2) and not horn_member(x, A, s1):
            violations += 1
    ok = worst <= 1e-12 and violations == 0
    record(5, ok, f"max axiom defect {worst:.2e} over 1000 triples, horn violations {violations}/1000")


# ---------------------------------------------------------------------------
# 6: unions

def test_criterion_6_unions(half_line, cfg, tmp_path, capsys):
    axis = make_presentation(X123, ["x2", "x3"], (), 1)
    w5 = make_presentation(X123, ["x1^2 - x3^5", "x2"])
    pairs_ok = all(r.passed for r in check_equiv(half_line, w5, 2, cfg)) and \
        all(r.passed for r in check_equiv(axis, axis, 2, cfg))
    a_doc = {"variables": X123, "pieces": [{"equations": ["x1", "x2"], "inequalities": ["x3"]},
                                          {"equations": ["x2", "x3"]}]}
    b_doc = {"variables": X123, "pieces": [{"equations": ["x1^2 - x3^5", "x2"]}, {"equations": ["x2", "x3"]}]}
    (tmp_path / "a.json").write_text(json.dumps(a_doc))
    (tmp_path / "b.json").write_text(json.dumps(b_doc))
    code = main(["verify", str(tmp_path / "a.json"), str(tmp_path / "b.json"), "--s", "2", "--quiet"])
    capsys.readouterr()
    combined = combine_equations([list(w5.equations), list(axis.equations)])
    union = SetDescription((w5, axis))
    worst = 0.0
    for r in cfg.radii:
        pts = sample_points(union, r, cfg)
        worst = max(worst, float(np.abs(PolyMap(combined, 3).values(pts)).max()))
    ok = pairs_ok and code == 0 and worst <= cfg.on_set_tol
    record(6, ok, f"pairs verified={pairs_ok}, union verify exit {code}, "
                  f"{len(combined)} product equations, max |value| {worst:.1e}")


# ---------------------------------------------------------------------------
# 7: Lojasiewicz calibration

def test_criterion_7_lojasiewicz(cfg):
    interval = Presentation(("x",), (), ())
    x = lambda t: parse(t, ["x"])  # noqa: E731
    a1 = estimate_lojasiewicz(x("x"), x("x^2"), interval, cfg).alpha_hat
    a2 = estimate_lojasiewicz(x("x^2"), x("x"), interval, cfg).alpha_hat
    try:
        estimate_lojasiewicz(x("x"), x("1/2"), interval, cfg)
        raised = False
    except HypothesisViolated:
        raised = True
    ok = 0.5 <= a1 <= 0.6 and 2.0 <= a2 <= 2.3 and raised
    record(7, ok, f"alpha(x, x^2)={a1:.4f}, alpha(x^2, x)={a2:.4f}, HypothesisViolated raised={raised}")


# ---------------------------------------------------------------------------
# 8: numerics hygiene

def _random_poly(rng, n: int, max_degree: int = 8, max_terms: int = 8) -> Polynomial:
    variables = [f"x{k + 1}" for k in range(n)]
    terms = {}
    for _ in range(int(rng.integers(1, max_terms + 1))):
        degree = int(rng.integers(0, max_degree + 1))
        cuts = np.sort(rng.integers(0, degree + 1, n - 1))
        exps = tuple(int(e) for e in np.diff(np.concatenate([[0], cuts, [degree]])))
        terms[exps] = Fraction(int(rng.integers(-1000, 1001)), int(rng.integers(1, 50)))
    return Polynomial(variables, terms)


def test_criterion_8_numerics(cfg):
    rng = np.random.default_rng(8)
    h = 1e-5
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        p = _random_poly(rng, n)
        while p.is_zero() or p.degree == 0:
            p = _random_poly(rng, n)
        x = rng.uniform(-1, 1, n)
        v = rng.normal(size=n)
        v /= np.linalg.norm(v)
        grad = np.array([eval_f64(g, x) for g in gradient(p)])
        exact = float(grad @ v)
        fd = (eval_f64(p, x + h * v) - eval_f64(p, x - h * v)) / (2 * h)
        worst = max(worst, abs(fd - exact) / abs(exact))
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        p = _random_poly(rng, n)
        if parse(to_string(p), p.variables) != p:
            mismatches += 1
    ok = worst < 1e-5 and mismatches == 0
    record(8, ok, f"max relative gradient error {worst:.2e} over 100 polynomials, "
                  f"round-trip mismatches {mismatches}/1000")
