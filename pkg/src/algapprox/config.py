from __future__ import annotations

import dataclasses
import zlib
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SamplerConfig:
    """Numerical knobs shared by sampling, metric and approximation code.

    Every randomized routine derives its generator from ``seed`` plus a
    string label, so results depend only on the configuration.
    """

    radii: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025)
    samples_per_radius: int = 2000
    seed: int = 0
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    on_set_tol: float = 1e-8
    order_margin: float = 0.25
    delta_floor: float = 1e-9
    dimension_radii: tuple[float, ...] = (0.2, 0.1, 0.05)
    max_projection_tries: int = 25
    max_exponent: int = 99
    loja_safety: float = 0.1
    rank_tol: float = 1e-9
    # boundary-seeded samples per locus point and radius
    seed_scales: int = 24
    extra: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "dimension_radii", tuple(float(r) for r in self.dimension_radii))
        if not radii:
            raise ValueError("at least one radius is required")
        for rs in (radii, self.dimension_radii):
            if any(not (0 < r < 1) for r in rs):
                raise ValueError("radii must lie in (0, 1)")
            if any(b >= a for a, b in zip(rs, rs[1:])):
                raise ValueError("radii must be strictly decreasing")
        for name in ("newton_tol", "on_set_tol", "order_margin", "delta_floor", "rank_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.samples_per_radius < 1 or self.newton_max_iter < 1:
            raise ValueError("sample and iteration counts must be positive")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")

    def replace(self, **changes) -> "SamplerConfig":
        return dataclasses.replace(self, **changes)

    def rng(self, *labels) -> np.random.Generator:
        """Deterministic generator for a labelled sub-task."""
        keys = [int(self.seed)] + [zlib.crc32(str(lab).encode()) for lab in labels]
        return np.random.default_rng(np.random.SeedSequence(keys))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("extra")
        d["radii"] = list(self.radii)
        d["dimension_radii"] = list(self.dimension_radii)
        return d

    @classmethod
    def from_dict(cls, data: dict | None) -> "SamplerConfig":
        data = dict(data or {})
        known = {f.name for f in dataclasses.fields(cls)} - {"extra"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown sampler options: {sorted(unknown)}")
        for key in ("radii", "dimension_radii"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)
