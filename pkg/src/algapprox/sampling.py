"""Sampling of ``A ∩ S_r`` by sphere-constrained Gauss-Newton projection.

Random directions on ``S_r`` are pulled onto ``V(F) ∩ S_r`` with minimum-norm
Newton steps taken in the tangent space of the sphere, renormalising after
every step.  Each iteration tries the step scaled by 1..4 and by
backtracking fractions, keeping the smallest residual.

An equation of the shape ``A^2 - h^m`` is very flat next to its zero set,
and floats cannot tell the valley ``A = 0`` apart from the set itself.  Such
equations are replaced by the two branches ``A = +-h^(m/2)`` (with
``h >= 0`` when ``m`` is odd), which cut out the same set with simple zeros.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import SamplerConfig
from .errors import EmptyAtRadius
from .polycore import PolyMap, Polynomial

_STEP_MULTIPLIERS = (1.0, 2.0, 3.0, 4.0, 0.5, 0.25, 0.125, 1 / 16, 1 / 64, 1 / 256, 1 / 1024)
MAX_LOCUS_POINTS = 48
ACCEPT_REL_STEP = 1e-9


@dataclass(frozen=True)
class PointCloud:
    radius: float
    points: np.ndarray
    set_ref: str = ""

    def __len__(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


class _HalfPower:
    """The field ``sign * h^(m/2)``; ``h`` is clamped at 0 when ``m`` is odd."""

    def __init__(self, h, m: int, sign: int):
        self.h, self.m, self.sign = h, m, sign

    def evaluate(self, X: np.ndarray, grad: bool):
        if grad:
            hv, hg = self.h.evaluate_with_gradient(X)
        else:
            hv, hg = self.h.evaluate(X), None
        with np.errstate(under="ignore", divide="ignore", invalid="ignore", over="ignore"):
            if self.m % 2:
                half = self.m / 2
                base = np.maximum(hv, 0.0)
                root = base ** half
                slope = np.where(base > 0, half * base ** (half - 1), 0.0) if grad else None
            else:
                b = self.m // 2
                root = hv ** b
                slope = b * hv ** (b - 1) if grad else None
        if not grad:
            return self.sign * root, None
        return self.sign * root, self.sign * slope[:, None] * hg


class _Radicand:
    """The field ``k^q + inner``, which must stay non-negative."""

    def __init__(self, k, q: int, inner, lead=None, before=()):
        self.k, self.q, self.inner = k, q, inner
        self.lead, self.before = lead, list(before)

    def evaluate(self, X: np.ndarray, grad: bool):
        iv, ig = self.inner.evaluate(X, grad)
        if grad:
            kv, kg = self.k.evaluate_with_gradient(X)
        else:
            kv, kg = self.k.evaluate(X), None
        with np.errstate(under="ignore", over="ignore", invalid="ignore"):
            val = kv ** self.q + iv
            if not grad:
                return val, None
            return val, (self.q * kv ** (self.q - 1))[:, None] * kg + ig

    def values(self, X: np.ndarray) -> np.ndarray:
        """The radicand relative to the size of its two parts."""
        iv, _ = self.inner.evaluate(X, False)
        with np.errstate(under="ignore", over="ignore", invalid="ignore"):
            kq = self.k.evaluate(X) ** self.q
            scale = np.abs(kq) + np.abs(iv)
            return np.where(scale > 0, (kq + iv) / np.where(scale > 0, scale, 1.0), 0.0)


class _Root:
    """The field ``sign * sqrt(max(R, 0))``."""

    def __init__(self, radicand: _Radicand, sign: int):
        self.radicand, self.sign = radicand, sign

    def evaluate(self, X: np.ndarray, grad: bool):
        rv, rg = self.radicand.evaluate(X, grad)
        base = np.maximum(rv, 0.0)
        root = np.sqrt(base)
        if not grad:
            return self.sign * root, None
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            slope = np.where(base > 0, 0.5 / np.where(base > 0, root, 1.0), 0.0)
            g = slope[:, None] * rg
        return self.sign * root, self.sign * np.nan_to_num(g, nan=0.0, posinf=0.0, neginf=0.0)


class _Zero:
    def evaluate(self, X: np.ndarray, grad: bool):
        return np.zeros(X.shape[0]), (np.zeros(X.shape) if grad else None)


class _QthRoot:
    """The field ``sign * (-inner)^(1/q)`` (real root; ``-inner >= 0`` for even q)."""

    def __init__(self, inner, q: int, sign: int):
        self.inner, self.q, self.sign = inner, q, sign

    def evaluate(self, X: np.ndarray, grad: bool):
        iv, ig = self.inner.evaluate(X, grad)
        u = -iv if self.q % 2 else np.maximum(-iv, 0.0)
        mag = np.abs(u)
        root = np.sign(u) * mag ** (1.0 / self.q)
        if not grad:
            return self.sign * root, None
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            slope = np.where(mag > 0, mag ** (1.0 / self.q - 1) / self.q, 0.0)
            g = -slope[:, None] * ig
        return self.sign * root, self.sign * np.nan_to_num(g, nan=0.0, posinf=0.0, neginf=0.0)


class _NonPositive:
    """Sign check ``inner <= 0`` in relative form."""

    def __init__(self, inner):
        self.inner = inner

    def values(self, X: np.ndarray) -> np.ndarray:
        iv, _ = self.inner.evaluate(X, False)
        return np.where(iv > 0, -1.0, 0.0)


class _Branch:
    """The function ``a - field`` with its gradient."""

    def __init__(self, a, field):
        self.a, self.field = a, field

    def evaluate(self, X: np.ndarray, grad: bool):
        fv, fg = self.field.evaluate(X, grad)
        if grad:
            av, ag = self.a.evaluate_with_gradient(X)
            return av - fv, ag - fg
        return self.a.evaluate(X) - fv, None


def _branches(a, h, m: int) -> list:
    """``(branch, extra inequalities)`` pairs whose union cuts out ``a^2 = h^m``."""
    extras = [h] if m % 2 else []
    return [br for sign in (1, -1) for br in _solve(a, _HalfPower(h, m, sign), extras)]


def _solve(a, field, extras: list) -> list:
    """Branches for ``a = field``.

    When ``a`` reads ``+-(b^2 - k^q)`` this becomes ``b = +-sqrt(k^q + field)``,
    recursively, so no component is flat.  Fields always come in sign pairs,
    so the overall sign of ``a`` does not matter for the union.
    """
    inner = a.square_split()
    if inner is None:
        return [(_Branch(a, field), list(extras))]
    b, k, q = inner
    rad = _Radicand(k, q, field, lead=b, before=extras)
    return [br for sign in (1, -1) for br in _solve(b, _Root(rad, sign), [*extras, rad])]


class IneqMap:
    """Inequality values from polynomials plus (relative) radicand values."""

    def __init__(self, polys, fields, nvars: int):
        self.poly_map = PolyMap(list(polys), nvars)
        self.fields = list(fields)

    def __len__(self) -> int:
        return len(self.poly_map) + len(self.fields)

    def values(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        cols = []
        if len(self.poly_map):
            cols.append(self.poly_map.values(X))
        for f in self.fields:
            cols.append(f.values(X)[:, None])
        if not cols:
            return np.zeros((X.shape[0], 0))
        return np.hstack(cols)


class EquationMap:
    """Vector function whose components are polynomials or branches."""

    def __init__(self, components, nvars: int):
        self.nvars = nvars
        self.components = list(components)
        self._poly_rows = [k for k, c in enumerate(self.components) if not isinstance(c, _Branch)]
        self._poly_map = PolyMap([self.components[k] for k in self._poly_rows], nvars)

    def __len__(self) -> int:
        return len(self.components)

    def _evaluate(self, X: np.ndarray, grad: bool):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        F = np.zeros((X.shape[0], len(self.components)))
        J = np.zeros((X.shape[0], len(self.components), self.nvars)) if grad else None
        if self._poly_rows:
            Fp, Jp = self._poly_map._evaluate(X, grad)
            F[:, self._poly_rows] = Fp
            if grad:
                J[:, self._poly_rows, :] = Jp
        for row, c in enumerate(self.components):
            if isinstance(c, _Branch):
                v, g = c.evaluate(X, grad)
                F[:, row] = v
                if grad:
                    J[:, row, :] = g
        return F, J

    def values(self, X: np.ndarray) -> np.ndarray:
        return self._evaluate(X, False)[0]

    def values_and_jacobian(self, X: np.ndarray):
        return self._evaluate(X, True)


def _boundary_options(rad: _Radicand) -> list:
    """Component groups for the part of the set where ``rad`` vanishes.

    There ``lead = 0`` and ``k = (-inner)^(1/q)``, both well conditioned; the
    sliver tips of nested branches live here.
    """
    signs = (1,) if rad.q % 2 else (1, -1)
    extra = [] if rad.q % 2 else [_NonPositive(rad.inner)]
    out = []
    for br, ex in _solve(rad.lead, _Zero(), rad.before):
        for sign in signs:
            out.append(([br, _Branch(rad.k, _QthRoot(rad.inner, rad.q, sign))], [*ex, *extra]))
    return out


def numeric_forms(piece) -> list:
    """Well-conditioned ``(equations, inequalities)`` systems whose union is the piece."""
    key = id(piece)
    cached = _MAP_CACHE.get(key)
    if cached is not None and cached[0] is piece:
        return cached[1]
    options = []
    for f in piece.equations:
        split = f.square_split()
        if split is None:
            options.append([([f], [])])
            continue
        branches = _branches(*split)
        opts = [([br], ex) for br, ex in branches]
        a, h, m = split
        if m % 2:
            # the edge h = 0, where both branches meet
            opts.extend(([br, h], ex) for br, ex in _solve(a, _Zero(), []))
        seen = set()
        for _, ex in branches:
            for rad in ex:
                if isinstance(rad, _Radicand) and id(rad) not in seen:
                    seen.add(id(rad))
                    opts.extend(_boundary_options(rad))
        options.append(opts)
    forms = []
    for combo in itertools.product(*options):
        polys = list(piece.inequalities)
        fields = []
        for _, extras in combo:
            for extra in extras:
                if not isinstance(extra, Polynomial):
                    fields.append(extra)
                elif extra not in polys:
                    polys.append(extra)
        comps = [c for group, _ in combo for c in group]
        forms.append((EquationMap(comps, piece.n), IneqMap(polys, fields, piece.n)))
    _MAP_CACHE[key] = (piece, forms)
    return forms


_MAP_CACHE: dict[int, tuple] = {}


def _min_norm_step(F: np.ndarray, J: np.ndarray) -> np.ndarray:
    """Minimum-norm solution of J dx = -F per point, rows normalised first."""
    norms = np.linalg.norm(J, axis=2)
    live = norms > 1e-300
    safe = np.where(live, norms, 1.0)
    Jn = np.where(live[:, :, None], J / safe[:, :, None], 0.0)
    Fn = np.where(live, F / safe, 0.0)
    if J.shape[1] == 1:
        return -Fn[:, 0:1] * Jn[:, 0, :]
    pinv = np.linalg.pinv(Jn, rcond=1e-12)
    return -np.einsum("nij,nj->ni", pinv, Fn)


def _tangent_probes(X: np.ndarray, radius: float | None, rho: float) -> np.ndarray:
    """Points at distance ~rho from each x along +/- each (tangential) axis."""
    n = X.shape[1]
    eye = np.eye(n)
    dirs = np.broadcast_to(eye, (X.shape[0], n, n)).copy()
    if radius is not None:
        xhat = X / np.maximum(np.linalg.norm(X, axis=1, keepdims=True), 1e-300)
        dirs -= np.einsum("nj,nk->njk", np.einsum("nkj,nj->nk", dirs, xhat), xhat)
        dirs /= np.maximum(np.linalg.norm(dirs, axis=2, keepdims=True), 1e-300)
    probes = np.concatenate([X[:, None, :] + rho * dirs, X[:, None, :] - rho * dirs], axis=1)
    if radius is not None:
        probes *= radius / np.maximum(np.linalg.norm(probes, axis=2, keepdims=True), 1e-300)
    return probes


def sign_certified(X: np.ndarray, eq, radius: float | None, rho: float) -> np.ndarray:
    """True where a single equation changes sign within ~rho of the point.

    By continuity such a point lies within about rho of the zero set, even
    when the equation is so flat that a Newton step cannot resolve it.
    """
    if len(eq) != 1 or len(X) == 0:
        return np.zeros(len(X), dtype=bool)
    f0 = eq.values(X)[:, 0]
    probes = _tangent_probes(X, radius, rho)
    fp = eq.values(probes.reshape(-1, X.shape[1]))[:, 0].reshape(len(X), -1)
    return (f0 == 0) | np.any(np.sign(fp) * np.sign(f0)[:, None] < 0, axis=1)


def _tangential(J: np.ndarray, X: np.ndarray, radius: float | None) -> np.ndarray:
    if radius is None:
        return J
    Jx = np.einsum("nkj,nj->nk", J, X) / (radius * radius)
    return J - Jx[:, :, None] * X[:, None, :]


def newton_project(X0: np.ndarray, eq, radius: float | None, tol: float,
                   max_iter: int, certify_radius: float | None = None
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Project points onto ``V(F)`` (intersected with ``S_radius`` if given).

    Returns ``(points, residual_norm, distance_estimate)``.  The estimate is
    the length of one more Newton step, or ``certify_radius`` for
    single-equation maps whose sign changes within that distance.
    """
    X = np.array(X0, dtype=float, copy=True)
    n_pts = X.shape[0]
    if radius is not None:
        X *= radius / np.maximum(np.linalg.norm(X, axis=1, keepdims=True), 1e-300)
    if len(eq) == 0 or n_pts == 0:
        return X, np.zeros(n_pts), np.zeros(n_pts)
    certify = certify_radius is not None and len(eq) == 1
    certified = np.zeros(n_pts, dtype=bool)
    active = np.arange(n_pts)
    for _ in range(max_iter):
        if certify and active.size:
            hit = sign_certified(X[active], eq, radius, certify_radius)
            certified[active[hit]] = True
            active = active[~hit]
        if active.size == 0:
            break
        Xa = X[active]
        F, J = eq.values_and_jacobian(Xa)
        step = _min_norm_step(F, _tangential(J, Xa, radius))
        cap = 0.5 * (radius if radius is not None else np.maximum(np.linalg.norm(Xa, axis=1), 1e-3))
        size = np.linalg.norm(step, axis=1)
        step *= np.where(size > cap, cap / np.maximum(size, 1e-300), 1.0)[:, None]
        best_X, best_res = Xa, np.linalg.norm(F, axis=1)
        best_step = np.zeros(len(active))
        for c in _STEP_MULTIPLIERS:
            Xc = Xa + c * step
            if radius is not None:
                norm = np.linalg.norm(Xc, axis=1, keepdims=True)
                Xc *= radius / np.maximum(norm, 1e-300)
            res = np.linalg.norm(eq.values(Xc), axis=1)
            if radius is not None:
                # renormalising a step through the origin is meaningless
                res = np.where(norm[:, 0] < 1e-3 * radius, np.inf, res)
            better = res < best_res
            best_X = np.where(better[:, None], Xc, best_X)
            best_res = np.where(better, res, best_res)
            best_step = np.where(better, np.linalg.norm(Xc - Xa, axis=1), best_step)
        X[active] = best_X
        active = active[best_step > tol]
    F, J = eq.values_and_jacobian(X)
    Fn = np.linalg.norm(F, axis=1)
    newton = np.linalg.norm(_min_norm_step(F, _tangential(J, X, radius)), axis=1)
    # a zero Jacobian row with a nonzero value gives no distance information
    dead = np.any((np.linalg.norm(J, axis=2) <= 1e-300) & (F != 0), axis=1)
    newton = np.where(dead, np.inf, newton)
    if certify:
        certified |= sign_certified(X, eq, radius, certify_radius)
        newton = np.where(certified, np.minimum(newton, certify_radius), newton)
    return X, Fn, newton


def _accept_distance(radius: float | None, cfg: SamplerConfig) -> float:
    scale = radius if radius is not None else 1.0
    return max(cfg.newton_tol, ACCEPT_REL_STEP * scale)


def _accept(ineq, X, res, dist, radius, cfg: SamplerConfig) -> np.ndarray:
    ok = res <= cfg.on_set_tol
    # flat equations have tiny residuals far from their zeros, so the
    # distance estimate has to be small as well
    ok &= dist <= _accept_distance(radius, cfg) * (1 + 1e-9)
    if len(ineq):
        ok &= np.all(ineq.values(X) >= -cfg.on_set_tol, axis=1)
    return ok


def dedup(points: np.ndarray, resolution: float) -> np.ndarray:
    if len(points) == 0:
        return points
    keys = np.round(points / resolution).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    return points[np.sort(first)]


def random_sphere(rng: np.random.Generator, count: int, n: int, radius: float) -> np.ndarray:
    X = rng.standard_normal((count, n))
    X /= np.maximum(np.linalg.norm(X, axis=1, keepdims=True), 1e-300)
    return X * radius


def project_piece(piece, starts: np.ndarray, radius: float | None, cfg: SamplerConfig,
                  max_iter: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Project each start onto the piece; returns ``(points, ok)``.

    With several numeric forms the accepted landing closest to the start wins.
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    best_X = np.array(starts, copy=True)
    best_d = np.full(len(starts), np.inf)
    for eq, ineq in numeric_forms(piece):
        X, res, dist = newton_project(starts, eq, radius, cfg.newton_tol, max_iter or cfg.newton_max_iter,
                                      certify_radius=_accept_distance(radius, cfg))
        ok = _accept(ineq, X, res, dist, radius, cfg)
        d = np.where(ok, np.linalg.norm(X - starts, axis=1), np.inf)
        better = d < best_d
        best_X[better] = X[better]
        best_d[better] = d[better]
    return best_X, np.isfinite(best_d)


def locus_seeds(anchors: np.ndarray, radius: float, cfg: SamplerConfig, rng) -> np.ndarray:
    """Perturb anchor points at dyadic scales r/2 ... r/2^k."""
    if len(anchors) == 0 or cfg.seed_scales <= 0:
        return np.zeros((0, anchors.shape[1] if anchors.ndim == 2 else 0))
    if len(anchors) > MAX_LOCUS_POINTS:
        anchors = anchors[rng.choice(len(anchors), MAX_LOCUS_POINTS, replace=False)]
    n = anchors.shape[1]
    scales = radius * 2.0 ** -np.arange(1, cfg.seed_scales + 1)
    reps = 2
    dirs = rng.standard_normal((len(anchors), len(scales), reps, n))
    dirs /= np.linalg.norm(dirs, axis=3, keepdims=True)
    seeds = anchors[:, None, None, :] + scales[None, :, None, None] * dirs
    return seeds.reshape(-1, n)


@lru_cache(maxsize=4096)
def _locus_points_cached(locus, radius: float, cfg: SamplerConfig) -> np.ndarray:
    rng = cfg.rng("locus", locus.ref, radius)
    count = max(64, cfg.samples_per_radius // 8)
    starts = random_sphere(rng, count, locus.n, radius)
    X, ok = project_piece(locus, starts, radius, cfg, max_iter=4 * cfg.newton_max_iter)
    pts = dedup(X[ok], radius * 1e-4)
    pts.setflags(write=False)
    return pts


def locus_points(set_, radius: float, cfg: SamplerConfig) -> np.ndarray:
    """Samples of the inequality boundaries and critical loci of every piece."""
    out = [_locus_points_cached(loc, float(radius), cfg) for loc in set_.special_loci()]
    out = [o for o in out if len(o)]
    if not out:
        return np.zeros((0, set_.n))
    return np.vstack(out)


@lru_cache(maxsize=2048)
def _sample_cached(set_, radius: float, cfg: SamplerConfig, label: str, include_loci: bool,
                   anchors_key: bytes, count: int | None) -> np.ndarray:
    n = set_.n
    anchors = np.frombuffer(anchors_key, dtype=float).reshape(-1, n) if anchors_key else np.zeros((0, n))
    own = locus_points(set_, radius, cfg) if include_loci else np.zeros((0, n))
    all_anchors = np.vstack([own, anchors]) if len(anchors) else own
    pieces = []
    for k, piece in enumerate(set_.pieces):
        rng = cfg.rng("sample", label, piece.ref, radius, k)
        starts = random_sphere(rng, count or cfg.samples_per_radius, n, radius)
        if len(all_anchors):
            starts = np.vstack([starts, locus_seeds(all_anchors, radius, cfg, rng)])
        X, ok = project_piece(piece, starts, radius, cfg)
        pieces.append(X[ok])
    pts = np.vstack(pieces + ([own] if len(own) else []))
    pts = dedup(pts, radius * 1e-4)
    pts.setflags(write=False)
    return pts


def sample_points(set_, radius: float, cfg: SamplerConfig, *, label: str = "",
                  include_loci: bool = True, anchors: np.ndarray | None = None,
                  count: int | None = None) -> np.ndarray:
    """Possibly empty array of samples of ``set_ ∩ S_radius``.

    ``include_loci`` adds samples of the set's own special loci and seeds
    the projection near them; ``anchors`` are extra seed centres.
    """
    key = b""
    if anchors is not None and len(anchors):
        key = np.ascontiguousarray(anchors, dtype=float).tobytes()
    return _sample_cached(set_, float(radius), cfg, label, include_loci, key, count)


def sample_on_sphere(set_, r: float, cfg: SamplerConfig | None = None, *, point_filter=None,
                     anchors: np.ndarray | None = None, label: str = "") -> PointCloud:
    """Sample ``set_ ∩ S_r``; raises EmptyAtRadius when nothing converges."""
    from .presentation import as_set

    cfg = cfg or SamplerConfig()
    if not (0 < r < 1):
        raise ValueError("radius must lie in (0, 1)")
    desc = as_set(set_)
    pts = sample_points(desc, r, cfg, label=label, anchors=anchors)
    if point_filter is not None and len(pts):
        pts = pts[point_filter(pts)]
    if len(pts) == 0:
        raise EmptyAtRadius(r)
    return PointCloud(float(r), np.array(pts), desc.ref)


def projected_distances(points: np.ndarray, set_, radius: float | None, cfg: SamplerConfig,
                        point_filter=None) -> np.ndarray:
    """Upper bounds on the distance from each point to ``set_`` (∩ S_radius).

    Every point is pushed onto each piece and onto each piece's inequality
    boundaries by Newton projection; valid landing points give candidate
    distances.  ``inf`` where no projection is valid.
    """
    points = np.atleast_2d(points)
    best = np.full(len(points), np.inf)
    if len(points) == 0:
        return best
    for piece in set_.pieces:
        for target in [piece] + piece.boundary_loci():
            X, ok = project_piece(target, points, radius, cfg)
            if not ok.any():
                continue
            ok &= set_.contains(X, cfg.on_set_tol)
            if point_filter is not None and ok.any():
                idx = np.flatnonzero(ok)
                ok[idx] = point_filter(X[idx])
            dist = np.linalg.norm(X - points, axis=1)
            best = np.where(ok & (dist < best), dist, best)
    return best


def clear_caches() -> None:
    _sample_cached.cache_clear()
    _locus_points_cached.cache_clear()
    _MAP_CACHE.clear()
