"""Numerical s-equivalence: directed deltas, contact orders, horns, Łojasiewicz.

Direction convention: ``delta(P, Q)`` is the largest distance from a point
of ``P`` to the cloud ``Q``, and ``check_leq_s(A, B, s)`` measures how far
points of ``A ∩ S_r`` are from ``B ∩ S_r``.  ``A <=_s B`` holds when that
distance vanishes faster than ``r^s``.

All certification here is heuristic: distances are upper bounds obtained
from samples and Newton projection, not interval bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .config import SamplerConfig
from .errors import EmptyAtRadius, EmptyCloud, HypothesisViolated, InsufficientData
from .polycore import Polynomial, PolyMap
from .presentation import Presentation, SetDescription, as_set
from .sampling import (
    PointCloud,
    locus_points,
    project_piece,
    projected_distances,
    random_sphere,
    sample_on_sphere,
    sample_points,
)

INF = math.inf

PointFilter = Callable[[np.ndarray], np.ndarray]


def _points(cloud) -> np.ndarray:
    pts = cloud.points if isinstance(cloud, PointCloud) else cloud
    return np.atleast_2d(np.asarray(pts, dtype=float))


def nearest_distances(points: np.ndarray, cloud: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest point of ``cloud`` (inf if empty)."""
    points = np.atleast_2d(points)
    if len(cloud) == 0:
        return np.full(len(points), INF)
    if len(points) == 0:
        return np.zeros(0)
    return cKDTree(cloud).query(points, k=1)[0]


def delta(from_cloud, to_cloud) -> float:
    """``sup`` over points of ``from_cloud`` of the distance to ``to_cloud``."""
    P, Q = _points(from_cloud), _points(to_cloud)
    if P.size == 0 or Q.size == 0:
        raise EmptyCloud("delta needs two nonempty clouds")
    if P.shape[1] != Q.shape[1]:
        raise ValueError(f"clouds live in R^{P.shape[1]} and R^{Q.shape[1]}")
    return float(nearest_distances(P, Q).max())


def hausdorff(a, b) -> float:
    return max(delta(a, b), delta(b, a))


# ---------------------------------------------------------------------------
# contact order

def fit_contact_order(pairs: Sequence[tuple[float, float]], delta_floor: float = 1e-9) -> float:
    """Least-squares slope of ``log delta`` against ``log r``.

    Pairs with ``delta <= delta_floor`` are left out; ``inf`` when none is left.
    """
    pairs = [(float(r), float(d)) for r, d in pairs]
    if len(pairs) < 2:
        raise InsufficientData("at least two (radius, delta) pairs are needed")
    if any(r <= 0 for r, _ in pairs):
        raise InsufficientData("radii must be positive")
    used = [(r, d) for r, d in pairs if d > delta_floor]
    if not used:
        return INF
    if len(used) < 2:
        raise InsufficientData("fewer than two deltas above the floor")
    x = np.log([r for r, _ in used])
    y = np.log([d for _, d in used])
    if np.ptp(x) == 0:
        raise InsufficientData("radii must differ")
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)


@dataclass
class SEquivReport:
    """Outcome of one directed test ``A <=_s B``."""

    direction: str
    s: float
    per_radius: list[tuple[float, float, float]]  # (r, delta, delta / r^s)
    fitted_order: float
    passed: bool
    notes: list[str] = field(default_factory=list)

    @property
    def deltas(self) -> list[float]:
        return [d for _, d, _ in self.per_radius]

    @property
    def ratios(self) -> list[float]:
        return [q for _, _, q in self.per_radius]

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "s": self.s,
            "per_radius": [{"radius": r, "delta": d, "ratio": q} for r, d, q in self.per_radius],
            "fitted_order": "inf" if math.isinf(self.fitted_order) else self.fitted_order,
            "pass": self.passed,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SEquivReport":
        order = data["fitted_order"]
        return cls(data["direction"], float(data["s"]),
                   [(e["radius"], e["delta"], e["ratio"]) for e in data["per_radius"]],
                   INF if order == "inf" else float(order), bool(data["pass"]), list(data.get("notes", [])))


def ratios_decreasing(per_radius, delta_floor: float) -> bool:
    """Ratios strictly decrease along decreasing radii.

    A delta at or below the floor counts as a decrease from any predecessor,
    but nothing may climb back above the floor after it.
    """
    seen_floor = False
    prev = None
    for _, d, q in per_radius:
        if d <= delta_floor:
            seen_floor = True
            continue
        if seen_floor:
            return False
        if prev is not None and not q < prev:
            return False
        prev = q
    return True


def verdict(per_radius, s: float, cfg: SamplerConfig) -> tuple[float, bool, list[str]]:
    notes = []
    deltas = [d for _, d, _ in per_radius]
    if all(d <= cfg.delta_floor for d in deltas):
        return INF, True, ["all deltas at or below the floor"]
    above = [(r, d) for r, d, _ in per_radius if d > cfg.delta_floor]
    if len(above) < 2:
        # a single radius above the floor: the slope is undefined, so only
        # the ratio test can speak
        order = INF
        notes.append("one radius above the delta floor; order taken as unbounded")
    else:
        order = fit_contact_order([(r, d) for r, d, _ in per_radius], cfg.delta_floor)
    ok = order >= s + cfg.order_margin and ratios_decreasing(per_radius, cfg.delta_floor)
    return order, ok, notes


# ---------------------------------------------------------------------------
# distances from samples of A to B ∩ S_r

def _distance_to_set(points: np.ndarray, B: SetDescription, radius: float, b_cloud: np.ndarray,
                     cfg: SamplerConfig, b_filter: PointFilter | None) -> np.ndarray:
    d = nearest_distances(points, b_cloud)
    if len(points):
        d = np.minimum(d, projected_distances(points, B, radius, cfg, point_filter=b_filter))
    return d


def _bounded_sup(points: np.ndarray, B: SetDescription, radius: float, b_cloud: np.ndarray,
                 cfg: SamplerConfig, b_filter: PointFilter | None, batch: int = 64
                 ) -> tuple[float, np.ndarray]:
    """Maximum over ``points`` of the refined distance to ``B``.

    Cloud distances are cheap upper bounds; Newton refinement is applied in
    decreasing order of those bounds until no unrefined point can win.
    Returns the maximum and the refined distances (``nan`` where skipped).
    """
    upper = nearest_distances(points, b_cloud)
    order = np.argsort(-upper, kind="stable")
    refined = np.full(len(points), np.nan)
    best = 0.0
    for start in range(0, len(order), batch):
        idx = order[start:start + batch]
        if upper[idx[0]] <= best:
            break
        refined[idx] = np.minimum(upper[idx], projected_distances(points[idx], B, radius, cfg,
                                                                   point_filter=b_filter))
        best = max(best, float(np.max(refined[idx])))
    return best, refined


def _hill_climb(A: SetDescription, B: SetDescription, radius: float, seeds: np.ndarray, seed_d: np.ndarray,
                b_cloud: np.ndarray, cfg: SamplerConfig, a_filter, b_filter, rng,
                rounds: int = 10, trials: int = 6) -> float:
    """Push the worst points along ``A ∩ S_r`` to increase their distance to ``B``.

    All seeds move together: each round tries ``trials`` random steps per
    seed, keeps improvements and shrinks the step of seeds that did not move.
    """
    best = float(seed_d.max()) if len(seed_d) else 0.0
    if len(seeds) == 0:
        return best
    n = A.n
    x = np.array(seeds, dtype=float)
    dx = np.array(seed_d, dtype=float)
    step = np.maximum(dx, radius * 1e-3)
    for _ in range(rounds):
        live = np.flatnonzero(step >= radius * 1e-9)
        if len(live) == 0:
            break
        dirs = rng.standard_normal((len(live), trials, n))
        dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
        cand = (x[live, None, :] + step[live, None, None] * dirs).reshape(-1, n)
        owner = np.repeat(live, trials)
        landed, ok = _project_onto(A, cand, radius, cfg)
        if a_filter is not None and ok.any():
            idx = np.flatnonzero(ok)
            ok[idx] = a_filter(landed[idx])
        d = np.full(len(cand), -np.inf)
        if ok.any():
            d[ok] = _distance_to_set(landed[ok], B, radius, b_cloud, cfg, b_filter)
        d = d.reshape(len(live), trials)
        k = np.argmax(d, axis=1)
        top = d[np.arange(len(live)), k]
        moved = top > dx[live]
        for j in np.flatnonzero(moved):
            i = live[j]
            x[i] = landed[j * trials + k[j]]
            dx[i] = top[j]
        step[live[~moved]] /= 4
        best = max(best, float(dx.max()))
    return best


def _project_onto(A: SetDescription, starts: np.ndarray, radius: float, cfg: SamplerConfig):
    best_X = np.array(starts, copy=True)
    best_d = np.full(len(starts), INF)
    for piece in A.pieces:
        X, ok = project_piece(piece, starts, radius, cfg)
        d = np.where(ok, np.linalg.norm(X - starts, axis=1), INF)
        better = d < best_d
        best_X[better] = X[better]
        best_d[better] = d[better]
    return best_X, np.isfinite(best_d)


def _filtered(points: np.ndarray, point_filter: PointFilter | None) -> np.ndarray:
    if point_filter is None or len(points) == 0:
        return points
    return points[point_filter(points)]


def directed_delta(A, B, radius: float, cfg: SamplerConfig, *, a_filter: PointFilter | None = None,
                   b_filter: PointFilter | None = None, refine: bool = True, label: str = "") -> float | None:
    """Refined ``sup`` distance from ``A ∩ S_r`` to ``B ∩ S_r``; None if A is empty there.

    Raises EmptyAtRadius when A has points at this radius but B has none.
    """
    A, B = as_set(A), as_set(B)
    anchors_a = locus_points(A, radius, cfg)
    anchors_b = locus_points(B, radius, cfg)
    a_pts = _filtered(sample_points(A, radius, cfg, label=label, anchors=anchors_b), a_filter)
    if len(a_pts) == 0:
        return None
    b_pts = _filtered(sample_points(B, radius, cfg, label=label, anchors=anchors_a), b_filter)
    if len(b_pts) == 0:
        raise EmptyAtRadius(radius, f"second set has no samples on the sphere of radius {radius:g}")
    if not refine:
        return float(nearest_distances(a_pts, b_pts).max())
    best, refined = _bounded_sup(a_pts, B, radius, b_pts, cfg, b_filter)
    if best <= cfg.delta_floor:
        return best
    done = np.flatnonzero(~np.isnan(refined))
    top = done[np.argsort(-refined[done], kind="stable")[:4]]
    rng = cfg.rng("climb", label, A.ref, B.ref, radius)
    return max(best, _hill_climb(A, B, radius, a_pts[top], refined[top], b_pts, cfg,
                                 a_filter, b_filter, rng))


def check_leq_s(A, B, s: float, cfg: SamplerConfig | None = None, *, a_filter: PointFilter | None = None,
                b_filter: PointFilter | None = None, label: str = "", direction: str = "A<=B"
                ) -> SEquivReport:
    """Test ``A <=_s B``: points of ``A ∩ S_r`` lie ``o(r^s)`` from ``B ∩ S_r``.

    ``a_filter``/``b_filter`` restrict the samples of each side (used for
    the K region of the approximation step).  If A has no samples at any
    radius the origin is isolated in A and the test passes.
    """
    cfg = cfg or SamplerConfig()
    if s < 1:
        raise ValueError("s must be at least 1")
    rows, empty = [], []
    for r in cfg.radii:
        d = directed_delta(A, B, r, cfg, a_filter=a_filter, b_filter=b_filter, label=label)
        if d is None:
            empty.append(r)
            d = 0.0
        rows.append((r, d, d / r ** s))
    if len(empty) == len(cfg.radii):
        return SEquivReport(direction, s, rows, INF, True,
                            ["first set has no samples near the origin (isolated point)"])
    order, ok, notes = verdict(rows, s, cfg)
    if empty:
        notes.append("first set empty at radii " + ", ".join(f"{r:g}" for r in empty))
    return SEquivReport(direction, s, rows, order, ok, notes)


def check_equiv(A, B, s: float, cfg: SamplerConfig | None = None, *, a_filter: PointFilter | None = None,
                b_filter: PointFilter | None = None, label: str = "") -> tuple[SEquivReport, SEquivReport]:
    """Both directions; the sets are s-equivalent when both reports pass.

    A filter restricts the points of its own set whose distance is measured;
    distances are always taken to the whole other set.
    """
    cfg = cfg or SamplerConfig()
    ab = check_leq_s(A, B, s, cfg, a_filter=a_filter, label=label, direction="A<=B")
    ba = check_leq_s(B, A, s, cfg, a_filter=b_filter, label=label, direction="B<=A")
    return ab, ba


def profile_rows(ab: SEquivReport, ba: SEquivReport) -> list[tuple[float, float, float, float, float]]:
    rows = []
    for (r, d1, q1), (r2, d2, q2) in zip(ab.per_radius, ba.per_radius):
        if r != r2:
            raise ValueError("reports use different radii")
        rows.append((r, d1, d2, q1, q2))
    return rows


def profile_csv(ab: SEquivReport, ba: SEquivReport) -> str:
    lines = ["radius,delta_ab,delta_ba,ratio_ab,ratio_ba"]
    for row in profile_rows(ab, ba):
        lines.append(",".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# horn neighbourhoods

def horn_member(x, A, sigma: float, cfg: SamplerConfig | None = None) -> bool:
    """Whether ``d(x, A) < |x|^sigma``.

    ``A`` is a set description (distance from projection onto A plus samples
    of ``A ∩ S_|x|``) or a point cloud (exact nearest-point distance).
    """
    x = np.asarray(x, dtype=float)
    norm = float(np.linalg.norm(x))
    if norm == 0:
        raise ValueError("the horn test is undefined at the origin")
    if sigma <= 1:
        raise ValueError("sigma must exceed 1")
    bound = norm ** sigma
    if isinstance(A, (PointCloud, np.ndarray, list)):
        pts = _points(A)
        if pts.size == 0:
            return False
        return bool(nearest_distances(x[None], pts)[0] < bound)
    return bool(distance_to_set(x, A, cfg) < bound)


def distance_to_set(x, A, cfg: SamplerConfig | None = None) -> float:
    """Upper estimate of ``d(x, A)``; inf when nothing of A is found near ``|x|``."""
    cfg = cfg or SamplerConfig()
    A = as_set(A)
    x = np.asarray(x, dtype=float)[None]
    norm = float(np.linalg.norm(x))
    best = float(projected_distances(x, A, None, cfg)[0])
    if 0 < norm < 1:
        pts = sample_points(A, norm, cfg, label="horn", count=min(cfg.samples_per_radius, 400))
        if len(pts):
            best = min(best, float(nearest_distances(x, pts)[0]))
    return best


# ---------------------------------------------------------------------------
# Łojasiewicz exponents

@dataclass
class LojaEstimate:
    alpha_hat: float
    samples_used: int
    max_attained_at: tuple[float, ...]
    raw_max: float = 0.0
    g_scale: float = 1.0

    def to_dict(self) -> dict:
        return {"alpha_hat": self.alpha_hat, "samples_used": self.samples_used,
                "max_attained_at": list(self.max_attained_at), "raw_max": self.raw_max,
                "g_scale": self.g_scale}


def _norm_field(f, n: int) -> tuple[Callable[[np.ndarray], np.ndarray], list[Polynomial] | None]:
    """Turn a polynomial, a list of polynomials or a callable into ``x -> |f(x)|``."""
    if isinstance(f, Polynomial):
        f = [f]
    if isinstance(f, (list, tuple)) and f and all(isinstance(p, Polynomial) for p in f):
        fmap = PolyMap(list(f), n)
        return (lambda X: np.linalg.norm(fmap.values(X), axis=1)), list(f)
    if callable(f):
        def field_norm(X):
            v = np.asarray(f(X), dtype=float)
            return np.linalg.norm(v, axis=1) if v.ndim == 2 else np.abs(v)
        return field_norm, None
    raise TypeError("expected a polynomial, a list of polynomials or a callable")


def loja_radii(domain_radius: float, count: int = 40) -> np.ndarray:
    """Geometric radii from ``domain_radius`` down by factors of sqrt(2)."""
    return domain_radius * 2.0 ** (-0.5 * np.arange(count))


def estimate_lojasiewicz(f, g, domain, cfg: SamplerConfig | None = None, *, domain_radius: float = 0.5,
                         safety: float | None = None, points: np.ndarray | None = None,
                         hypothesis_tol: float | None = None) -> LojaEstimate:
    """Estimate the smallest ``alpha`` with ``|g|^alpha <= |f|`` near the origin on ``domain``.

    ``f`` and ``g`` are polynomials, lists of polynomials (their Euclidean
    norm is used) or callables on ``(N, n)`` arrays.  The estimate is
    ``(1 + safety)`` times the largest ``log|f| / log|g|`` over samples with
    ``0 < |g| < 1`` and ``|f| < 1``; ``g`` is rescaled first when it reaches 1.
    Samples come from ``domain ∩ S_r`` for radii up to ``domain_radius``, or
    from ``points`` when given.
    """
    cfg = cfg or SamplerConfig()
    desc = as_set(domain)
    n = desc.n
    safety = cfg.loja_safety if safety is None else safety
    tol = cfg.on_set_tol if hypothesis_tol is None else hypothesis_tol
    fval, fpolys = _norm_field(f, n)
    gval, _ = _norm_field(g, n)

    if points is None:
        chunks = [np.zeros((1, n))]
        per = max(50, cfg.samples_per_radius // 10)
        for r in loja_radii(domain_radius):
            if r >= 1:
                chunks.append(_sample_any_radius(desc, float(r), cfg, per))
            else:
                chunks.append(sample_points(desc, float(r), cfg, label="loja", count=per, include_loci=False))
        X = np.vstack([c for c in chunks if len(c)])
    else:
        X = np.atleast_2d(np.asarray(points, dtype=float))
    F = fval(X)
    G = gval(X)

    # hypothesis V(f) ⊆ V(g): look at samples where f vanishes, including
    # samples of the zero set of f itself when f is polynomial
    # a point where f is exactly zero (the origin at least) and g is not
    bad = (F == 0) & (G > tol)
    if fpolys is not None and points is None:
        zpts = _zero_set_samples(desc, fpolys, cfg, domain_radius)
        if len(zpts):
            Gz = gval(zpts)
            if np.any(Gz > max(tol, 1e-6)):
                k = int(np.argmax(Gz))
                raise HypothesisViolated(f"f vanishes at {zpts[k].tolist()} where |g| = {Gz[k]:.3g}")
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise HypothesisViolated(f"f vanishes at {X[k].tolist()} where |g| = {G[k]:.3g}")

    scale = 1.0
    finite = G[np.isfinite(G)]
    top = float(finite.max()) if len(finite) else 0.0
    if top >= 1:
        scale = 1.0 / (2 * top)
        G = G * scale
    use = (G > 0) & (G < 1) & (F < 1) & (F > 0)
    if not use.any():
        raise InsufficientData("no sample with 0 < |g| < 1 and 0 < |f| < 1")
    with np.errstate(divide="ignore"):
        ratio = np.log(F[use]) / np.log(G[use])
    k = int(np.argmax(ratio))
    raw = float(ratio[k])
    if raw <= 0:
        raise InsufficientData("log ratio is not positive on the samples")
    return LojaEstimate((1 + safety) * raw, int(use.sum()), tuple(float(v) for v in X[use][k]), raw, scale)


def _sample_any_radius(desc: SetDescription, r: float, cfg: SamplerConfig, count: int) -> np.ndarray:
    """Samples at radii >= 1 (outside the sampler's germ range) by rescaling."""
    rng = cfg.rng("loja-wide", desc.ref, r)
    out = []
    for piece in desc.pieces:
        X, ok = project_piece(piece, random_sphere(rng, count, desc.n, r), r, cfg)
        out.append(X[ok])
    return np.vstack(out) if out else np.zeros((0, desc.n))


def _zero_set_samples(desc: SetDescription, fpolys: list[Polynomial], cfg: SamplerConfig,
                      domain_radius: float) -> np.ndarray:
    pieces = []
    for piece in desc.pieces:
        try:
            pieces.append(Presentation(piece.variables, piece.equations + tuple(fpolys),
                                       piece.inequalities, require_origin=False))
        except Exception:  # pragma: no cover - inputs already validated
            continue
    if not pieces:
        return np.zeros((0, desc.n))
    zdesc = SetDescription(tuple(pieces))
    chunks = []
    for r in loja_radii(min(domain_radius, 0.9), 12):
        chunks.append(sample_points(zdesc, float(r), cfg, label="loja-zero",
                                    count=max(20, cfg.samples_per_radius // 40), include_loci=False))
    chunks = [c for c in chunks if len(c)]
    return np.vstack(chunks) if chunks else np.zeros((0, desc.n))


__all__ = [
    "INF", "LojaEstimate", "PointCloud", "SEquivReport", "check_equiv", "check_leq_s", "delta",
    "directed_delta", "distance_to_set", "estimate_lojasiewicz", "fit_contact_order", "hausdorff",
    "horn_member", "nearest_distances", "profile_csv", "profile_rows", "ratios_decreasing",
    "sample_on_sphere", "verdict",
]
