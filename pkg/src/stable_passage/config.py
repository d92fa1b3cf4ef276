"""Reproducible experiment configuration.

An ExperimentConfig fully determines a run: process parameters, passage
level, grid resolution, horizon, checkpoint times, overshoot thresholds,
output grids and the master seed.  Configs round-trip through JSON and are
hashable by content, which the ensemble disk cache relies on.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from stable_passage.model import StableParams, validate_params

DEFAULT_MASTER_SEED = 123456789


@dataclass(frozen=True)
class ExperimentConfig:
    params: StableParams
    x: float = 1.0
    n_samples: int = 100_000
    dt: float = 1e-3
    horizon: float = 50.0
    checkpoints: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0)
    eps_list: tuple[float, ...] = (0.02,)
    time_grid: tuple[float, ...] = ()
    level_grid: tuple[float, ...] = ()
    master_seed: int = DEFAULT_MASTER_SEED
    output_dir: str = "out"

    def __post_init__(self):
        validate_params(self.params)
        if self.x <= 0:
            raise ValueError(f"x must be > 0, got {self.x}")
        if self.n_samples <= 0:
            raise ValueError(f"n_samples must be > 0, got {self.n_samples}")
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.horizon <= 0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")
        if any(t <= 0 or t >= self.horizon for t in self.checkpoints):
            raise ValueError("checkpoints must lie strictly inside (0, horizon)")
        if any(e <= 0 for e in self.eps_list):
            raise ValueError("eps_list entries must be > 0")
        for name, grid in (("time_grid", self.time_grid), ("level_grid", self.level_grid)):
            if any(g <= 0 for g in grid):
                raise ValueError(f"{name} entries must be > 0")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError(f"{name} must be strictly increasing")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")
        # normalize sequence fields so equality/hashing is content-based
        object.__setattr__(self, "checkpoints", tuple(float(t) for t in self.checkpoints))
        object.__setattr__(self, "eps_list", tuple(float(e) for e in self.eps_list))
        object.__setattr__(self, "time_grid", tuple(float(g) for g in self.time_grid))
        object.__setattr__(self, "level_grid", tuple(float(g) for g in self.level_grid))

    def with_seed(self, master_seed: int) -> "ExperimentConfig":
        return replace(self, master_seed=master_seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = {"alpha": self.params.alpha, "rho": self.params.rho, "c": self.params.c}
        for k in ("checkpoints", "eps_list", "time_grid", "level_grid"):
            d[k] = list(d[k])
        return d

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        pd = d.pop("params")
        params = StableParams(alpha=pd["alpha"], rho=pd["rho"], c=pd.get("c", 1.0))
        known = {f for f in cls.__dataclass_fields__ if f != "params"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        for k in ("checkpoints", "eps_list", "time_grid", "level_grid"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(params=params, **d)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_json(Path(path).read_text())

    def content_hash(self) -> str:
        """Stable hex digest of the config content (cache key)."""
        return hashlib.sha256(self.to_json(indent=0).encode()).hexdigest()[:16]
