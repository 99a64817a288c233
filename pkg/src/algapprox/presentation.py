"""Presented semialgebraic sets ``{F = 0, h_j >= 0}`` and their validators."""

from __future__ import annotations

import hashlib
import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .config import SamplerConfig
from .errors import (
    DegreeOverflow,
    InconsistentVotes,
    OriginNotMember,
    SchemaError,
    WrongCodimension,
)
from .polycore import Polynomial, parse

log = logging.getLogger(__name__)


def _determinant(rows: list[list[Polynomial]]) -> Polynomial:
    k = len(rows)
    if k == 1:
        return rows[0][0]
    if k == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = None
    for j in range(k):
        if rows[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in rows[1:]]
        term = rows[0][j] * _determinant(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total if total is not None else Polynomial.zero(rows[0][0].variables)


@dataclass(frozen=True)
class Presentation:
    """One basic set ``{x : F(x) = 0, h_j(x) >= 0}``.

    All polynomials must vanish at the origin unless ``require_origin`` is
    switched off (used internally for auxiliary loci).
    """

    variables: tuple[str, ...]
    equations: tuple[Polynomial, ...] = ()
    inequalities: tuple[Polynomial, ...] = ()
    declared_dimension: int | None = None
    require_origin: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "equations", tuple(self.equations))
        object.__setattr__(self, "inequalities", tuple(self.inequalities))
        for p in self.equations + self.inequalities:
            if p.variables != self.variables:
                raise SchemaError(f"polynomial {p} uses variables {p.variables}, expected {self.variables}")
        n = len(self.variables)
        if self.declared_dimension is not None and not (0 <= self.declared_dimension < n):
            raise SchemaError(f"declared dimension {self.declared_dimension} outside [0, {n})")
        if self.require_origin:
            origin = (0,) * n
            for kind, polys in (("equation", self.equations), ("inequality", self.inequalities)):
                for p in polys:
                    if p.eval_exact(origin) != 0:
                        raise OriginNotMember(f"{kind} {p} does not vanish at the origin")

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def q(self) -> int:
        return len(self.inequalities)

    def with_(self, **changes) -> "Presentation":
        data = dict(variables=self.variables, equations=self.equations,
                    inequalities=self.inequalities, declared_dimension=self.declared_dimension,
                    require_origin=self.require_origin)
        data.update(changes)
        return Presentation(**data)

    def tail(self, i: int) -> "Presentation":
        """Sub-presentation keeping only inequalities with (1-based) index > i."""
        return self.with_(inequalities=self.inequalities[i:])

    def as_set(self) -> "SetDescription":
        return SetDescription((self,))

    @cached_property
    def ref(self) -> str:
        text = "|".join([",".join(self.variables),
                         ";".join(p.expression_string() for p in self.equations),
                         ";".join(p.expression_string() for p in self.inequalities)])
        return hashlib.sha1(text.encode()).hexdigest()[:12]

    def boundary_loci(self) -> list["Presentation"]:
        """``{F = 0, h_j = 0, h_k >= 0 (k != j)}`` for each inequality."""
        out = []
        for j, h in enumerate(self.inequalities):
            rest = self.inequalities[:j] + self.inequalities[j + 1:]
            out.append(Presentation(self.variables, self.equations + (h,), rest,
                                    require_origin=False))
        return out

    @cached_property
    def _critical(self):
        k = len(self.equations)
        if k == 0:
            return None
        splits = [p.square_split() for p in self.equations]
        if any(sp is not None for sp in splits):
            # such equations are sampled branch-wise (A = +-h^(m/2)); the
            # branches meet where A = h = 0
            eqs = []
            for p, sp in zip(self.equations, splits):
                eqs.extend([p] if sp is None else [sp[0], sp[1]])
            return Presentation(self.variables, tuple(dict.fromkeys(eqs)), self.inequalities,
                                require_origin=False)
        try:
            grads = [p.gradient() for p in self.equations]
            minors = []
            for cols in itertools.combinations(range(self.n), k):
                det = _determinant([[g[c] for c in cols] for g in grads])
                if det.is_zero():
                    continue
                if det.is_constant():
                    return None  # full rank everywhere
                minors.append(det)
        except DegreeOverflow:
            log.warning("critical locus of %s skipped: minors exceed the degree cap", self.ref)
            return None
        return Presentation(self.variables, self.equations + tuple(dict.fromkeys(minors)),
                            self.inequalities, require_origin=False)

    def critical_locus(self) -> "Presentation | None":
        """Points of the set where the Jacobian of F drops rank, or None if that never happens.

        For an equation of the shape ``A^2 - h^m`` this is replaced by the
        locus ``A = h = 0`` where its two branches meet, which is where its
        gradient vanishes on the set at generic points.
        """
        return self._critical

    def special_loci(self) -> list["Presentation"]:
        loci = self.boundary_loci()
        crit = self.critical_locus()
        if crit is not None:
            loci.append(crit)
        return loci

    def to_document(self) -> dict:
        doc = {"equations": [str(p) for p in self.equations],
               "inequalities": [str(p) for p in self.inequalities]}
        if self.declared_dimension is not None:
            doc["declared_dimension"] = self.declared_dimension
        return doc


@dataclass(frozen=True)
class SetDescription:
    """Finite union of presentations sharing one variable list."""

    pieces: tuple[Presentation, ...]

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise SchemaError("a set description needs at least one piece")
        for p in pieces[1:]:
            if p.variables != pieces[0].variables:
                raise SchemaError("all pieces must share the variable list")
        object.__setattr__(self, "pieces", pieces)

    @property
    def variables(self) -> tuple[str, ...]:
        return self.pieces[0].variables

    @property
    def n(self) -> int:
        return len(self.variables)

    @cached_property
    def ref(self) -> str:
        return "+".join(p.ref for p in self.pieces)

    def special_loci(self) -> list[Presentation]:
        return [loc for p in self.pieces for loc in p.special_loci()]

    def contains(self, points: np.ndarray, tol: float) -> np.ndarray:
        points = np.atleast_2d(points)
        ok = np.zeros(points.shape[0], dtype=bool)
        for piece in self.pieces:
            mask = np.ones(points.shape[0], dtype=bool)
            for f in piece.equations:
                mask &= np.abs(f.evaluate(points)) <= tol
            for h in piece.inequalities:
                mask &= h.evaluate(points) >= -tol
            ok |= mask
        return ok

    def union(self, other: "SetDescription") -> "SetDescription":
        return SetDescription(self.pieces + other.pieces)

    def to_document(self) -> dict:
        return {"variables": list(self.variables),
                "pieces": [p.to_document() for p in self.pieces]}


def as_set(obj) -> SetDescription:
    if isinstance(obj, SetDescription):
        return obj
    if isinstance(obj, Presentation):
        return obj.as_set()
    raise TypeError(f"expected Presentation or SetDescription, got {type(obj).__name__}")


def make_presentation(variables: Sequence[str], equations: Iterable[str] = (),
                      inequalities: Iterable[str] = (), declared_dimension: int | None = None) -> Presentation:
    """Build a presentation from expression strings."""
    variables = tuple(variables)
    return Presentation(variables,
                        tuple(parse(e, variables) for e in equations),
                        tuple(parse(h, variables) for h in inequalities),
                        declared_dimension)


# ---------------------------------------------------------------------------
# documents

def _require(cond: bool, message: str) -> None:
    if not cond:
        raise SchemaError(message)


def load(document: dict, *, drop_vanishing: bool = False, cfg: SamplerConfig | None = None) -> SetDescription:
    """Parse a set document (``variables`` + ``pieces``) into a SetDescription.

    With ``drop_vanishing`` set, inequalities that vanish identically on
    their piece (numerically) are removed before returning.
    """
    from .polycore import PolynomialSyntaxError, UnknownVariable

    _require(isinstance(document, dict), "document must be an object")
    variables = document.get("variables")
    _require(isinstance(variables, list) and variables and all(isinstance(v, str) for v in variables),
             "'variables' must be a nonempty list of names")
    _require(len(set(variables)) == len(variables), "duplicate variable names")
    pieces = document.get("pieces")
    _require(isinstance(pieces, list) and pieces, "'pieces' must be a nonempty list")
    default_dim = document.get("declared_dimension")
    out = []
    for k, piece in enumerate(pieces):
        _require(isinstance(piece, dict), f"piece {k} must be an object")
        eqs = piece.get("equations", [])
        ineqs = piece.get("inequalities", [])
        _require(isinstance(eqs, list) and all(isinstance(e, str) for e in eqs),
                 f"piece {k}: 'equations' must be a list of strings")
        _require(isinstance(ineqs, list) and all(isinstance(e, str) for e in ineqs),
                 f"piece {k}: 'inequalities' must be a list of strings")
        dim = piece.get("declared_dimension", default_dim)
        _require(dim is None or (isinstance(dim, int) and not isinstance(dim, bool)),
                 f"piece {k}: 'declared_dimension' must be an integer")
        try:
            out.append(make_presentation(variables, eqs, ineqs, dim))
        except (PolynomialSyntaxError, UnknownVariable) as exc:
            raise SchemaError(f"piece {k}: {exc}") from exc
    desc = SetDescription(tuple(out))
    if drop_vanishing:
        desc = SetDescription(tuple(drop_vanishing_inequalities(p, cfg or SamplerConfig())[0]
                                    for p in desc.pieces))
    return desc


def drop_vanishing_inequalities(p: Presentation, cfg: SamplerConfig) -> tuple[Presentation, list[Polynomial]]:
    """Remove inequalities that are numerically zero on every sample of ``p``."""
    from .sampling import sample_points

    samples = []
    for r in cfg.dimension_radii:
        pts = sample_points(p.as_set(), r, cfg, label="drop")
        if len(pts):
            samples.append(pts)
    if not samples:
        return p, []
    pts = np.vstack(samples)
    keep, dropped = [], []
    for h in p.inequalities:
        if np.all(np.abs(h.evaluate(pts)) < cfg.on_set_tol):
            dropped.append(h)
        else:
            keep.append(h)
    return p.with_(inequalities=tuple(keep)), dropped


# ---------------------------------------------------------------------------
# local dimension

@dataclass
class DimensionEstimate:
    dimension: int
    slopes: list[float]
    votes: list[int]
    empty_near_origin: bool = False


def box_count_slope(points: np.ndarray, eps: float) -> float:
    """log2 of the ratio of occupied boxes at side eps/2 versus eps."""
    if len(points) == 0:
        return 0.0
    coarse = len(np.unique(np.floor(points / eps).astype(np.int64), axis=0))
    fine = len(np.unique(np.floor(points / (eps / 2)).astype(np.int64), axis=0))
    return math.log2(fine / coarse)


def estimate_local_dimension_details(set_, cfg: SamplerConfig | None = None, *,
                                     point_filter=None, box_fraction: float = 1 / 10) -> DimensionEstimate:
    from .sampling import sample_points

    cfg = cfg or SamplerConfig()
    desc = as_set(set_)
    slopes = []
    for r in cfg.dimension_radii:
        pts = sample_points(desc, r, cfg, label="dimension", include_loci=False)
        if point_filter is not None and len(pts):
            pts = pts[point_filter(pts)]
        if len(pts) == 0:
            continue
        slopes.append(box_count_slope(pts, box_fraction * r))
    if not slopes:
        return DimensionEstimate(0, [], [], empty_near_origin=True)
    if max(slopes) - min(slopes) > 0.5:
        raise InconsistentVotes(f"box-counting slopes disagree across radii: {slopes}", slopes)
    votes = [int(min(max(round(s), 0), desc.n - 1)) + 1 for s in slopes]
    counts: dict[int, int] = {}
    for v in votes:
        counts[v] = counts.get(v, 0) + 1
    # ties broken towards the smallest radius, which sits closest to the germ
    best = max(counts.values())
    dim = next(v for v in reversed(votes) if counts[v] == best)
    return DimensionEstimate(dim, slopes, votes)


def estimate_local_dimension(set_, cfg: SamplerConfig | None = None, *, point_filter=None) -> int:
    """Box-counting estimate of the local dimension at the origin."""
    return estimate_local_dimension_details(set_, cfg, point_filter=point_filter).dimension


# ---------------------------------------------------------------------------
# regularity

@dataclass
class RegularityReport:
    rank_ok: bool
    rank_violations: np.ndarray
    inequality_dims: list[int]
    verdict: bool
    dimension: int
    critical_dimension: int = 0
    vanishing_inequalities: list[int] = field(default_factory=list)
    messages: list[str] = field(default_factory=list)


def numeric_rank(J: np.ndarray, tol: float) -> np.ndarray:
    """Rank of each Jacobian in an ``(N, k, n)`` stack after row normalisation.

    Rows are scaled to unit length first, so a row counts as nonzero however
    small its entries are; this matches the exact notion of rank for the very
    flat polynomials produced by repeated squaring.  Extended precision
    input is normalised before it is rounded to doubles.
    """
    if J.shape[1] == 0:
        return np.zeros(J.shape[0], dtype=int)
    norms = np.linalg.norm(J, axis=2, keepdims=True) if J.dtype == float else \
        np.sqrt(np.sum(J * J, axis=2, keepdims=True))
    nonzero = norms > 0
    Jn = np.where(nonzero, J / np.where(nonzero, norms, 1), 0).astype(float)
    sv = np.linalg.svd(Jn, compute_uv=False)
    return (sv > tol).sum(axis=1)


def jacobian_rank(polys, points: np.ndarray, tol: float) -> np.ndarray:
    """Rank of the Jacobian of ``polys`` at each point, evaluated in extended
    precision so that the gradients of very flat polynomials do not underflow."""
    from .polycore import PolyMap

    X = np.asarray(points, dtype=np.longdouble)
    return numeric_rank(PolyMap(list(polys)).jacobian(X), tol)


def check_regularity(p: Presentation, cfg: SamplerConfig | None = None,
                     dimension: int | None = None) -> RegularityReport:
    """Numerically test the regular-presentation conditions on ``p``."""
    from .polycore import PolyMap
    from .sampling import sample_points

    cfg = cfg or SamplerConfig()
    d = dimension if dimension is not None else p.declared_dimension
    if d is None:
        d = estimate_local_dimension(p, cfg)
    if len(p.equations) != p.n - d:
        raise WrongCodimension(f"{len(p.equations)} equations given, a {d}-dimensional set in R^{p.n} needs {p.n - d}")
    messages = []

    violations = np.zeros((0, p.n))
    if p.equations:
        fmap = PolyMap(p.equations)
        for r in cfg.dimension_radii:
            pts = sample_points(p.as_set(), r, cfg, label="regularity", include_loci=False)
            if len(pts):
                rank = jacobian_rank(fmap.polys, pts, cfg.rank_tol)
                violations = np.vstack([violations, pts[rank < len(p.equations)]])
    crit = p.critical_locus()
    crit_dim = 0
    if crit is not None:
        crit_dim = estimate_local_dimension(crit, cfg)
        for r in cfg.dimension_radii:
            violations = np.vstack([violations, sample_points(crit.as_set(), r, cfg, label="crit",
                                                              include_loci=False)])
    rank_ok = crit_dim < d or d == 0
    if not rank_ok:
        messages.append(f"critical locus meets the set in dimension {crit_dim} >= {d}")

    ineq_dims, vanishing = [], []
    for j, locus in enumerate(p.boundary_loci()):
        try:
            dim_j = estimate_local_dimension(locus, cfg)
        except InconsistentVotes:
            dim_j = d
        ineq_dims.append(dim_j)
        if dim_j >= d:
            vanishing.append(j)
            messages.append(f"inequality {p.inequalities[j]} >= 0 has zero locus of dimension {dim_j} >= {d} on the set")
    verdict = rank_ok and all(k < d for k in ineq_dims)
    return RegularityReport(rank_ok, violations, ineq_dims, verdict, d, crit_dim, vanishing, messages)
