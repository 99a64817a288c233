"""Replace a presented semialgebraic germ by an algebraic one of the same dimension.

For a regular presentation ``A = {F = 0, h_1 >= 0, ..., h_q >= 0}`` with
``F = (g_0, f_2, ..., f_k)`` the inequalities are absorbed one at a time:

    g_{i+1} = g_i^2 - h_{i+1}^m,    m odd,

so ``A_{i+1} = {g_{i+1} = 0, f_2 = ... = 0, h_{i+2}, ..., h_q >= 0}``.  Each
exponent is found by search: starting from a Łojasiewicz-informed guess,
odd ``m`` is raised by 2 until the candidate passes every numerical check
(s-equivalence with the previous set on the region K, no later inequality
vanishing there, full Jacobian rank there, same local dimension).

K is the complement of a thin horn ``{d(x, X) < |x|^(s+1)}`` around the
boundary and critical loci ``X`` of the input; every comparison is made on
samples inside K.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .config import SamplerConfig
from .errors import (
    CodimensionZero,
    DegreeOverflow,
    EvenExponent,
    ExponentSearchExhausted,
    InconsistentVotes,
    InsufficientData,
    ProjectionSearchExhausted,
    RegularityRejected,
    WrongCodimension,
)
from .metric import (
    SEquivReport,
    check_equiv,
    estimate_lojasiewicz,
    nearest_distances,
)
from .polycore import Polynomial, PolyMap, compose_linear, rational_rank
from .presentation import (
    Presentation,
    SetDescription,
    as_set,
    check_regularity,
    estimate_local_dimension,
    jacobian_rank,
)
from .sampling import (
    locus_points,
    newton_project,
    projected_distances,
    random_sphere,
    sample_points,
)

log = logging.getLogger(__name__)

PROJECTION_DENOMINATOR = 100
LOJA_TRAJECTORY = (1, 2, 3, 5, 8)


# ---------------------------------------------------------------------------
# elementary constructions

def step_combine(g: Polynomial, h: Polynomial, m: int) -> Polynomial:
    """``g^2 - h^m`` for odd ``m``."""
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValueError("m must be a positive integer")
    if m % 2 == 0:
        raise EvenExponent(f"exponent {m} is even; the construction needs an odd exponent")
    return g ** 2 - h ** int(m)


def augment_ball_inequality(p: Presentation, f_orig: Sequence[Polynomial], m: int) -> Presentation:
    """Append ``|x|^(2m) - |f(x)|^2 >= 0`` to the inequalities of ``p``."""
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValueError("the ball exponent must be at least 1")
    variables = p.variables
    square = Polynomial.zero(variables)
    for v in variables:
        square = square + Polynomial.variable(variables, v) ** 2
    fsq = Polynomial.zero(variables)
    for f in f_orig:
        fsq = fsq + f ** 2
    return p.with_(inequalities=p.inequalities + (square ** int(m) - fsq,))


def _identity(k: int) -> list[list[Fraction]]:
    return [[Fraction(int(i == j)) for j in range(k)] for i in range(k)]


def generic_projection(f: Sequence[Polynomial], n_minus_d: int, rng: np.random.Generator,
                       cfg: SamplerConfig | None = None, *, inequalities: Sequence[Polynomial] = ()
                       ) -> tuple[list[list[Fraction]], list[Polynomial]]:
    """Pick ``pi`` with entries in ``{-N..N}/N`` so that ``pi ∘ f`` has full rank on ``V(f)``.

    The rank is checked on samples of ``V(f)`` (restricted by
    ``inequalities``); at most 1% of them may be rank deficient.
    """
    cfg = cfg or SamplerConfig()
    f = list(f)
    p = len(f)
    if p < n_minus_d:
        raise WrongCodimension(f"{p} equations cannot give {n_minus_d} independent ones")
    if n_minus_d < 1:
        raise CodimensionZero("the set has codimension 0")
    if p == n_minus_d:
        return _identity(p), f
    variables = f[0].variables
    base = Presentation(variables, tuple(f), tuple(inequalities), require_origin=False).as_set()
    pts = [sample_points(base, r, cfg, label="projection", include_loci=False) for r in cfg.dimension_radii]
    pts = np.vstack([x for x in pts if len(x)]) if any(len(x) for x in pts) else np.zeros((0, len(variables)))
    N = PROJECTION_DENOMINATOR
    for _ in range(cfg.max_projection_tries):
        ints = rng.integers(-N, N + 1, size=(n_minus_d, p))
        matrix = [[Fraction(int(v), N) for v in row] for row in ints]
        if rational_rank(matrix) < n_minus_d:
            continue
        F0 = compose_linear(f, matrix)
        if len(pts) == 0:
            return matrix, F0
        rank = jacobian_rank(F0, pts, cfg.rank_tol)
        if np.mean(rank < n_minus_d) <= 0.01:
            return matrix, F0
    raise ProjectionSearchExhausted(f"no projection passed the rank test in {cfg.max_projection_tries} tries")


# ---------------------------------------------------------------------------
# the region K

@dataclass
class KFilter:
    """Membership in ``K = R^n minus {x : d(x, X) < |x|^sigma_k}``.

    Distances to ``X`` are the smaller of the nearest sample in ``x_cloud``
    and a Newton projection onto ``x_set``.
    """

    x_cloud: np.ndarray
    sigma_k: Fraction
    x_set: SetDescription | None = None
    cfg: SamplerConfig = field(default_factory=SamplerConfig, repr=False)

    def distances(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        d = nearest_distances(points, self.x_cloud)
        if self.x_set is not None and len(points):
            d = np.minimum(d, projected_distances(points, self.x_set, None, self.cfg))
        return d

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        if len(points) == 0:
            return np.zeros(0, dtype=bool)
        if len(self.x_cloud) == 0 and self.x_set is None:
            return np.ones(len(points), dtype=bool)
        norms = np.linalg.norm(points, axis=1)
        return self.distances(points) >= norms ** float(self.sigma_k)

    @property
    def trivial(self) -> bool:
        return len(self.x_cloud) == 0 and self.x_set is None


def build_k_filter(pres: Presentation, s: float, cfg: SamplerConfig | None = None) -> KFilter:
    """Horn filter around ``X``: the boundary loci ``{h_j = 0}`` and the critical locus of ``A``."""
    cfg = cfg or SamplerConfig()
    sigma = Fraction(s).limit_denominator(1000) + 1
    loci = list(pres.special_loci())
    if not loci:
        return KFilter(np.zeros((0, pres.n)), sigma, None, cfg)
    x_set = SetDescription(tuple(loci))
    radii = sorted(set(cfg.radii) | set(cfg.dimension_radii), reverse=True)
    clouds = [locus_points(pres.as_set(), r, cfg) for r in radii]
    clouds = [c for c in clouds if len(c)]
    cloud = np.vstack(clouds) if clouds else np.zeros((0, pres.n))
    return KFilter(cloud, sigma, x_set, cfg)


# ---------------------------------------------------------------------------
# Łojasiewicz hints

def valley_points(equations: Sequence[Polynomial], inequalities: Sequence[Polynomial], n: int,
                  cfg: SamplerConfig, label: str) -> np.ndarray:
    """Domain samples plus early Newton iterates towards ``V(equations)``.

    The iterates run down the valleys where ``|g|`` is smallest for its
    distance to the zero set, which is where Łojasiewicz ratios peak.
    """
    eq = PolyMap(list(equations), n)
    ineq = PolyMap(list(inequalities), n)
    chunks = []
    for r in cfg.radii:
        rng = cfg.rng("valley", label, r)
        starts = random_sphere(rng, max(100, cfg.samples_per_radius // 8), n, r)
        chunks.append(starts)
        for iters in LOJA_TRAJECTORY:
            X, _, _ = newton_project(starts, eq, r, 0.0, iters)
            chunks.append(X)
    X = np.vstack(chunks)
    if len(ineq):
        X = X[np.all(ineq.values(X) >= -cfg.on_set_tol, axis=1)]
    return X


def loja_hint(small: Sequence[Polynomial], target: Presentation, domain_eqs: Sequence[Polynomial],
              domain_ineqs: Sequence[Polynomial], cfg: SamplerConfig, label: str):
    """Estimate ``alpha`` with ``d(x, target)^alpha <= |small(x)|`` on the domain."""
    n = target.n
    X = valley_points(list(small) + list(domain_eqs), domain_ineqs, n, cfg, label)
    if len(domain_eqs):
        on = np.all(np.abs(PolyMap(list(domain_eqs), n).values(X)) <= cfg.on_set_tol, axis=1)
        X = X[on]
    tset = target.as_set()

    def dist(points):
        return projected_distances(points, tset, None, cfg)

    try:
        return estimate_lojasiewicz(list(small), dist, tset, cfg, points=X)
    except InsufficientData:
        return None


def odd_at_least(x: float, floor: int = 3) -> int:
    m = max(floor, math.ceil(x - 1e-9))
    return m if m % 2 else m + 1


# ---------------------------------------------------------------------------
# records

@dataclass
class StepRecord:
    index: int
    chosen_m: int
    tried_ms: list[int]
    verification: tuple[SEquivReport, SEquivReport]
    dim_check: int
    p2_ok: bool
    p3_ok: bool
    m_start: int = 3
    loja_alpha: float | None = None
    failures: list[tuple[int, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "chosen_m": self.chosen_m,
            "tried_ms": list(self.tried_ms),
            "m_start": self.m_start,
            "loja_alpha": self.loja_alpha,
            "verification": [r.to_dict() for r in self.verification],
            "dim_check": self.dim_check,
            "p2_ok": self.p2_ok,
            "p3_ok": self.p3_ok,
            "failures": [{"m": m, "reason": why} for m, why in self.failures],
        }


@dataclass
class ApproximationResult:
    equations: list[Polynomial]
    steps: list[StepRecord]
    projection_matrix: list[list[Fraction]] | None
    ball_exponent: int | None
    final_report: tuple[SEquivReport, SEquivReport]
    final_dimension: int
    dimension: int
    warnings: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.final_report) and self.final_dimension == self.dimension

    def output(self) -> Presentation:
        return Presentation(self.equations[0].variables, tuple(self.equations))

    def to_dict(self) -> dict:
        matrix = None
        if self.projection_matrix is not None:
            matrix = [[str(c) for c in row] for row in self.projection_matrix]
        return {
            "equations": [str(p) for p in self.equations],
            "structured_equations": [p.expression_string() for p in self.equations],
            "steps": [st.to_dict() for st in self.steps],
            "projection_matrix": matrix,
            "ball_exponent": self.ball_exponent,
            "final_report": [r.to_dict() for r in self.final_report],
            "final_dimension": self.final_dimension,
            "dimension": self.dimension,
            "pass": self.passed,
            "warnings": list(self.warnings),
        }


@dataclass
class RunResult:
    results: list[ApproximationResult]
    combined_equations: list[Polynomial] | None
    warnings: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {
            "pieces": [r.to_dict() for r in self.results],
            "combined_equations": None if self.combined_equations is None
            else [str(p) for p in self.combined_equations],
            "structured_combined_equations": None if self.combined_equations is None
            else [p.expression_string() for p in self.combined_equations],
            "pass": self.passed,
            "warnings": list(self.warnings),
        }


# ---------------------------------------------------------------------------
# one step of the recursion

def _k_samples(pres: Presentation, kfilter: KFilter, cfg: SamplerConfig, label: str,
               anchors_from: Presentation) -> list[np.ndarray]:
    """K-filtered samples of ``pres`` at every radius, seeded like the equivalence check."""
    out = []
    for r in cfg.radii:
        pts = sample_points(pres.as_set(), r, cfg, label=label, anchors=locus_points(anchors_from.as_set(), r, cfg))
        if len(pts) and not kfilter.trivial:
            pts = pts[kfilter(pts)]
        out.append(pts)
    return out


def verify_candidate(candidate: Presentation, current: Presentation, later: Sequence[Polynomial],
                     s: float, d: int, kfilter: KFilter, cfg: SamplerConfig, label: str):
    """Run the step checks; returns ``(reason or None, reports, p2, p3, dim)``."""
    samples = _k_samples(candidate, kfilter, cfg, label, current)
    pts = np.vstack([p for p in samples if len(p)]) if any(len(p) for p in samples) else np.zeros((0, candidate.n))
    # P2: later inequalities do not vanish on the candidate inside K
    p2 = True
    for h in later:
        if len(pts) and np.any(h.evaluate(pts) <= cfg.on_set_tol):
            p2 = False
            return f"P2: {h} vanishes on the candidate inside K", None, p2, None, None
    # P3: full Jacobian rank inside K
    p3 = True
    if len(pts):
        rank = jacobian_rank(candidate.equations, pts, cfg.rank_tol)
        if np.any(rank < len(candidate.equations)):
            p3 = False
            return "P3: Jacobian rank drops inside K", None, p2, p3, None
    # P1: s-equivalence with the previous set inside K
    reports = check_equiv(candidate, current, s, cfg, a_filter=None if kfilter.trivial else kfilter,
                          b_filter=None if kfilter.trivial else kfilter, label=label)
    if not all(r.passed for r in reports):
        orders = ", ".join(f"{r.direction} order {r.fitted_order:.3f}" for r in reports)
        return f"P1: not s-equivalent ({orders})", reports, p2, p3, None
    try:
        dim = estimate_local_dimension(candidate, cfg)
    except InconsistentVotes as exc:
        return f"dimension: {exc}", reports, p2, p3, None
    if dim != d:
        return f"dimension: estimated {dim}, expected {d}", reports, p2, p3, dim
    return None, reports, p2, p3, dim


def choose_exponent(g: Polynomial, h: Polynomial, carried: Sequence[Polynomial], later: Sequence[Polynomial],
                    s: float, cfg: SamplerConfig, *, current: Presentation, kfilter: KFilter, dimension: int,
                    index: int = 0, loja_alpha: float | None = None) -> tuple[StepRecord, Polynomial]:
    """Search odd ``m`` for ``g^2 - h^m`` and return the accepted step."""
    m_start = odd_at_least(2 * s * loja_alpha) if loja_alpha is not None else 3
    # the hint is only a heuristic: with a tight cap, still try the largest allowed exponent
    cap = cfg.max_exponent if cfg.max_exponent % 2 else cfg.max_exponent - 1
    m_start = max(1, min(m_start, cap))
    tried, failures = [], []
    m = m_start
    while m <= cfg.max_exponent:
        tried.append(m)
        g_new = step_combine(g, h, m)
        candidate = Presentation(current.variables, (g_new,) + tuple(carried), tuple(later))
        why, reports, p2, p3, dim = verify_candidate(candidate, current, later, s, dimension, kfilter, cfg,
                                                    label=f"step{index}")
        if why is None:
            rec = StepRecord(index, m, tried, reports, dim, True, True, m_start, loja_alpha, failures)
            return rec, g_new
        log.info("step %d, m = %d rejected: %s", index, m, why)
        failures.append((m, why))
        m += 2
    raise ExponentSearchExhausted(
        f"step {index}: no odd exponent in [{m_start}, {cfg.max_exponent}] passed", failures)


# ---------------------------------------------------------------------------
# whole pipeline

def _piece_dimension(piece: Presentation, cfg: SamplerConfig) -> int:
    if piece.declared_dimension is not None:
        return piece.declared_dimension
    return estimate_local_dimension(piece, cfg)


def approximate_piece(piece: Presentation, s: float, cfg: SamplerConfig | None = None,
                      index: int = 0) -> ApproximationResult:
    cfg = cfg or SamplerConfig()
    n = piece.n
    d = _piece_dimension(piece, cfg)
    if d >= n:
        raise CodimensionZero(f"piece {index} has dimension {d} in R^{n}; codimension must be at least 1")
    k = n - d
    warnings = []
    f = list(piece.equations)
    if len(f) < k:
        raise RegularityRejected(f"piece {index}: {len(f)} equations, but a {d}-dimensional set in R^{n} needs {k}")
    matrix, ball = None, None
    pres = piece.with_(declared_dimension=d)
    if len(f) > k:
        rng = cfg.rng("projection", piece.ref)
        matrix, F0 = generic_projection(f, k, rng, cfg, inequalities=piece.inequalities)
        hint = loja_hint(f, piece, (), piece.inequalities, cfg, label=f"ball{index}")
        tau = hint.alpha_hat if hint is not None else 1.0
        ball = int(math.floor(s * tau)) + 1
        pres = augment_ball_inequality(Presentation(piece.variables, tuple(F0), piece.inequalities, d),
                                       f, ball)
    report = check_regularity(pres, cfg, dimension=d)
    if not report.verdict:
        raise RegularityRejected(f"piece {index} is not a regular presentation: " + "; ".join(report.messages),
                                 report)
    kfilter = build_k_filter(pres, s, cfg)
    if kfilter.trivial:
        warnings.append("no boundary or critical locus: K is the whole space")
    else:
        warnings.append("output is V(F_q); components inside the horn around the boundary loci are not certified")

    g, carried = pres.equations[0], tuple(pres.equations[1:])
    ineqs = pres.inequalities
    current = pres.with_(declared_dimension=None)
    steps = []
    for i, h in enumerate(ineqs):
        later = ineqs[i + 1:]
        domain_ineqs = ineqs[i:]
        # on the domain the carried equations vanish, so |(g, carried)| = |g|
        hint = loja_hint([g, *carried], current, carried, domain_ineqs, cfg, label=f"piece{index}-step{i}")
        alpha = hint.alpha_hat if hint is not None else None
        rec, g = choose_exponent(g, h, carried, later, s, cfg, current=current, kfilter=kfilter,
                                 dimension=d, index=i + 1, loja_alpha=alpha)
        steps.append(rec)
        current = Presentation(pres.variables, (g,) + carried, later)
    equations = [g] + list(carried)
    output = Presentation(pres.variables, tuple(equations))
    kf = None if kfilter.trivial else kfilter
    final = check_equiv(output, piece.with_(declared_dimension=None), s, cfg, a_filter=kf, b_filter=kf,
                        label="final")
    final_dim = estimate_local_dimension(output, cfg)
    return ApproximationResult(equations, steps, matrix, ball, final, final_dim, d, warnings)


def combine_equations(equation_lists: Sequence[Sequence[Polynomial]]) -> list[Polynomial]:
    """Equations of the union: all products taking one equation from each list."""
    combined = [Polynomial.constant(equation_lists[0][0].variables, 1)]
    for eqs in equation_lists:
        combined = [a * b for a in combined for b in eqs]
    return list(dict.fromkeys(combined))


def run(set_, s: float, cfg: SamplerConfig | None = None) -> RunResult:
    """Approximate every piece and recombine the outputs into one algebraic set."""
    cfg = cfg or SamplerConfig()
    desc = as_set(set_)
    if s < 1:
        raise ValueError("s must be at least 1")
    results = [approximate_piece(p, s, cfg, index=k) for k, p in enumerate(desc.pieces)]
    warnings = []
    combined = None
    if len(results) == 1:
        combined = list(results[0].equations)
    else:
        try:
            combined = combine_equations([r.equations for r in results])
        except DegreeOverflow as exc:
            warnings.append(f"union equations not combined: {exc}")
    return RunResult(results, combined, warnings)


def assess_candidate(candidate, target, s: float, cfg: SamplerConfig | None = None) -> dict:
    """Check a proposed algebraic approximant against a target set.

    It must have the target's local dimension and be s-equivalent to it.
    """
    cfg = cfg or SamplerConfig()
    cand, tgt = as_set(candidate), as_set(target)
    d_target = None
    pieces = tgt.pieces
    if len(pieces) == 1 and pieces[0].declared_dimension is not None:
        d_target = pieces[0].declared_dimension
    if d_target is None:
        d_target = estimate_local_dimension(tgt, cfg)
    d_cand = estimate_local_dimension(cand, cfg)
    out = {"candidate_dimension": d_cand, "target_dimension": d_target, "reports": None, "accepted": False,
           "reason": None}
    if d_cand != d_target:
        out["reason"] = f"dimension {d_cand} differs from the target's {d_target}"
        return out
    reports = check_equiv(cand, tgt, s, cfg)
    out["reports"] = reports
    out["accepted"] = all(r.passed for r in reports)
    if not out["accepted"]:
        out["reason"] = "not s-equivalent"
    return out
