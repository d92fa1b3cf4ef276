"""Reproducible simulation of stable increments and first-passage ensembles.

Increments are exact stable marginals drawn with the Chambers-Mallows-Stuck
transform (no small-jump truncation), composed into uniform-grid skeletons.
First passage is read off the skeleton, so passage times carry the known
discretization bias controlled by dt: refining the grid can only increase
the observed supremum and decrease the observed passage time.

Ensembles are generated in fixed-size record chunks, each owning a private
counter-based Philox stream keyed by (master_seed, chunk_index).  The output
is therefore byte-identical for a given master seed regardless of how many
threads process the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from stable_passage.config import ExperimentConfig
from stable_passage.model import StableParams, derived_constants, validate_params

__all__ = [
    "RngStream",
    "PassageRecord",
    "PassageEnsemble",
    "SimulationError",
    "derive_seed",
    "sample_increment",
    "sample_increments",
    "simulate_skeleton",
    "detect_first_passage",
    "generate_passage_ensemble",
    "generate_supremum_ensemble",
    "sample_inverse_beta",
    "merge_ensembles",
]

# Records per work chunk.  A module constant, never derived from the thread
# count: chunk boundaries define the RNG substreams, so they must not move.
CHUNK_RECORDS = 4096

# Target number of array elements per simulation block.
_BLOCK_BUDGET = 1 << 21

DEFAULT_STEP_CAP = 20_000_000



def _grid_steps(span: float, dt: float) -> int:
    # floor(span/dt) with a guard against binary round-off just below an integer
    return int(math.floor(span / dt + 1e-9))

class SimulationError(RuntimeError):
    """Raised when a simulation request exceeds configured resource caps."""


@dataclass(frozen=True)
class RngStream:
    """A named, reproducible random stream.

    (master_seed, stream_index) keys a counter-based Philox generator, so
    distinct stream indices give statistically independent streams and the
    full output sequence is determined by the pair.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")
        if self.stream_index < 0:
            raise ValueError("stream_index must be nonnegative")

    def generator(self) -> np.random.Generator:
        key = np.array([self.master_seed, self.stream_index], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def derive_seed(master_seed: int, salt: int) -> int:
    """Derive an independent 64-bit seed from (master_seed, salt)."""
    ss = np.random.SeedSequence([int(master_seed), int(salt)])
    return int(ss.generate_state(1, np.uint64)[0])


def _standard_stable(
    gen: np.random.Generator, alpha: float, skew: float, size
) -> np.ndarray:
    """Standard stable draws via the Chambers-Mallows-Stuck transform.

    Returns variates with characteristic function
    exp(-|u|^alpha * (1 - i*skew*sgn(u)*tan(pi*alpha/2))), valid for
    alpha != 1 (here always alpha in (1,2)).
    """
    half_pi = 0.5 * np.pi
    tpa = math.tan(half_pi * alpha)
    b = math.atan(skew * tpa) / alpha
    s = (1.0 + (skew * tpa) ** 2) ** (1.0 / (2.0 * alpha))
    v = (gen.random(size) - 0.5) * np.pi
    w = gen.standard_exponential(size)
    av_b = alpha * (v + b)
    out = np.sin(av_b)
    out *= s
    out /= np.cos(v) ** (1.0 / alpha)
    out *= (np.cos(v - av_b) / w) ** ((1.0 - alpha) / alpha)
    return out


def increment_sampler(p: StableParams, dt: float) -> Callable:
    """Build the sampler (gen, size) -> increments of X over a step of dt.

    X_dt equals (c*dt)^(1/alpha) times a standard stable variate with the
    skew given by the classical-parametrization map in derived_constants.
    """
    validate_params(p)
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    d = derived_constants(p)
    factor = (p.c * dt) ** (1.0 / p.alpha)
    alpha, skew = p.alpha, d.skew

    def draw(gen: np.random.Generator, size) -> np.ndarray:
        out = _standard_stable(gen, alpha, skew, size)
        out *= factor
        return out

    return draw


def sample_increments(
    stream: RngStream, p: StableParams, dt: float, n: int
) -> np.ndarray:
    """n independent draws of the increment X_dt from the given stream."""
    return increment_sampler(p, dt)(stream.generator(), n)


def sample_increment(stream: RngStream, p: StableParams, dt: float) -> float:
    """One draw of X_dt (fully determined by the stream)."""
    return float(sample_increments(stream, p, dt, 1)[0])


def sample_inverse_beta(
    stream: RngStream, a: float, b: float, n: int
) -> np.ndarray:
    """n draws of 1/Beta(a, b); every value exceeds 1."""
    if a <= 0 or b <= 0:
        raise ValueError(f"beta shapes must be > 0, got ({a}, {b})")
    draws = stream.generator().beta(a, b, size=n)
    # keep draws inside the open interval at float resolution: shapes < 1
    # let the sampler round to exactly 0 or 1
    np.clip(draws, np.finfo(float).tiny, 1.0 - np.finfo(float).epsneg, out=draws)
    return 1.0 / draws


def simulate_skeleton(
    stream: RngStream,
    p: StableParams,
    dt: float,
    horizon: float,
    step_cap: int = DEFAULT_STEP_CAP,
    increments: Callable | None = None,
) -> np.ndarray:
    """Uniform-grid path skeleton on [0, horizon]: floor(horizon/dt)+1 values.

    The skeleton starts at 0 and each successive difference is an exact
    stable increment over dt.  ``increments`` may override the increment
    source (used by tests to inject stubs).
    """
    n_steps = _grid_steps(horizon, dt)
    if n_steps > step_cap:
        raise SimulationError(
            f"horizon/dt = {n_steps} exceeds the step cap {step_cap}"
        )
    draw = increments if increments is not None else increment_sampler(p, dt)
    incr = draw(stream.generator(), n_steps)
    out = np.empty(n_steps + 1)
    out[0] = 0.0
    np.cumsum(incr, out=out[1:])
    return out


@dataclass(frozen=True)
class PassageRecord:
    """One first-passage observation.

    passage_time and overshoot are None for records censored at the horizon.
    position_at maps each checkpoint time strictly before passage to the
    skeleton value there; sup_horizon is the running supremum of the
    simulated skeleton.
    """

    passage_time: float | None
    overshoot: float | None
    position_at: dict
    sup_horizon: float

    @property
    def censored(self) -> bool:
        return self.passage_time is None


class PassageEnsemble:
    """Columnar collection of first-passage records plus its config echo.

    Censored records are kept, marked by NaN passage times; they are never
    silently dropped.  All arrays are immutable after construction.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        passage_time: np.ndarray,
        overshoot: np.ndarray,
        sup_horizon: np.ndarray,
        positions: np.ndarray,
    ):
        n = len(passage_time)
        if n != config.n_samples:
            raise ValueError(
                f"record count {n} does not match config n_samples {config.n_samples}"
            )
        positions = positions.reshape(n, len(config.checkpoints))
        censored = np.isnan(passage_time)
        if np.any(~np.isnan(overshoot[censored])):
            raise ValueError("censored records must not carry an overshoot")
        if np.any(np.isnan(overshoot[~censored])):
            raise ValueError("uncensored records must carry an overshoot")
        if np.any(overshoot[~censored] < 0):
            raise ValueError("overshoot must be nonnegative")
        with np.errstate(invalid="ignore"):
            if np.any(positions >= config.x):
                raise ValueError("pre-passage positions must lie below the level")
        for arr in (passage_time, overshoot, sup_horizon, positions):
            arr.setflags(write=False)
        self.config = config
        self.passage_time = passage_time
        self.overshoot = overshoot
        self.sup_horizon = sup_horizon
        self.positions = positions

    def __len__(self) -> int:
        return len(self.passage_time)

    @property
    def censored_mask(self) -> np.ndarray:
        return np.isnan(self.passage_time)

    @property
    def censored_count(self) -> int:
        return int(self.censored_mask.sum())

    @property
    def uncensored_times(self) -> np.ndarray:
        return self.passage_time[~self.censored_mask]

    @property
    def uncensored_overshoots(self) -> np.ndarray:
        return self.overshoot[~self.censored_mask]

    def checkpoint_index(self, t: float) -> int:
        cps = self.config.checkpoints
        for j, cp in enumerate(cps):
            if abs(cp - t) <= 1e-12 * max(1.0, abs(t)):
                return j
        raise KeyError(f"t={t} is not one of the recorded checkpoints {cps}")

    def record(self, i: int) -> PassageRecord:
        t = self.passage_time[i]
        censored = np.isnan(t)
        pos = {
            cp: float(v)
            for cp, v in zip(self.config.checkpoints, self.positions[i])
            if not np.isnan(v)
        }
        return PassageRecord(
            passage_time=None if censored else float(t),
            overshoot=None if censored else float(self.overshoot[i]),
            position_at=pos,
            sup_horizon=float(self.sup_horizon[i]),
        )

    @property
    def records(self) -> list:
        return [self.record(i) for i in range(len(self))]


def detect_first_passage(
    skeleton: np.ndarray,
    x: float,
    dt: float,
    checkpoints: Sequence[float] = (),
) -> PassageRecord:
    """Scan a skeleton for the first index at or above x.

    passage_time is dt times that index and the overshoot the excess there;
    a skeleton that never reaches x yields a censored record.  position_at
    is filled for checkpoints strictly before passage; sup_horizon is the
    maximum of the whole skeleton.
    """
    if x <= 0:
        raise ValueError(f"level x must be > 0, got {x}")
    skeleton = np.asarray(skeleton, dtype=float)
    hits = np.nonzero(skeleton >= x)[0]
    if hits.size:
        idx = int(hits[0])
        passage_time = idx * dt
        overshoot = float(skeleton[idx] - x)
    else:
        idx = None
        passage_time = None
        overshoot = None
    position_at = {}
    for t in checkpoints:
        k = int(round(t / dt))
        if k >= len(skeleton):
            raise ValueError(f"checkpoint {t} lies beyond the skeleton horizon")
        if idx is None or k < idx:
            position_at[float(t)] = float(skeleton[k])
    return PassageRecord(
        passage_time=passage_time,
        overshoot=overshoot,
        position_at=position_at,
        sup_horizon=float(skeleton.max()),
    )


def _chunk_sizes(n: int) -> list[int]:
    full, rem = divmod(n, CHUNK_RECORDS)
    return [CHUNK_RECORDS] * full + ([rem] if rem else [])


def _passage_chunk(gen, m, n_steps, x, cp_steps, draw, dt):
    """Simulate m records to first passage or the horizon, blockwise.

    Surviving rows advance in blocks sized to a fixed element budget; rows
    that cross are retired immediately, so work scales with E[min(T, horizon)].
    """
    pos = np.zeros(m)
    sup = np.zeros(m)
    passage_step = np.zeros(m, dtype=np.int64)
    overshoot = np.full(m, np.nan)
    positions = np.full((m, len(cp_steps)), np.nan)
    alive = np.arange(m)
    step = 0
    while alive.size and step < n_steps:
        span = min(max(64, _BLOCK_BUDGET // alive.size), n_steps - step)
        paths = draw(gen, (alive.size, span))
        np.cumsum(paths, axis=1, out=paths)
        paths += pos[alive, None]
        hit = paths >= x
        hit_any = hit.any(axis=1)
        first_col = np.where(hit_any, hit.argmax(axis=1), span)
        for j, k in enumerate(cp_steps):
            if step < k <= step + span:
                col = k - step - 1
                seen = first_col > col
                positions[alive[seen], j] = paths[seen, col]
        if hit_any.any():
            rows = alive[hit_any]
            cols = first_col[hit_any]
            passage_step[rows] = step + 1 + cols
            overshoot[rows] = paths[hit_any, cols] - x
            # values before passage are below x, so the supremum over
            # [0, T] is the value at passage itself
            sup[rows] = x + overshoot[rows]
        survive = ~hit_any
        if survive.any():
            rows = alive[survive]
            pos[rows] = paths[survive, -1]
            sup[rows] = np.maximum(sup[rows], paths[survive].max(axis=1))
        alive = alive[survive]
        step += span
    passage_time = np.where(passage_step > 0, passage_step * dt, np.nan)
    return passage_time, overshoot, sup, positions


def generate_passage_ensemble(
    cfg: ExperimentConfig,
    threads: int = 1,
    increments: Callable | None = None,
    step_cap: int = DEFAULT_STEP_CAP,
) -> PassageEnsemble:
    """Simulate cfg.n_samples independent first-passage records.

    Chunks of CHUNK_RECORDS records are simulated on private Philox streams
    keyed (master_seed, chunk_index) and merged in chunk order, so the
    result is independent of ``threads``.
    """
    n_steps = _grid_steps(cfg.horizon, cfg.dt)
    if n_steps > step_cap:
        raise SimulationError(
            f"horizon/dt = {n_steps} exceeds the step cap {step_cap}"
        )
    cp_steps = [int(round(t / cfg.dt)) for t in cfg.checkpoints]
    draw = increments if increments is not None else increment_sampler(cfg.params, cfg.dt)
    sizes = _chunk_sizes(cfg.n_samples)

    def run(i_m):
        i, m = i_m
        gen = RngStream(cfg.master_seed, i).generator()
        return _passage_chunk(gen, m, n_steps, cfg.x, cp_steps, draw, cfg.dt)

    tasks = list(enumerate(sizes))
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run, tasks))
    else:
        parts = [run(t) for t in tasks]
    passage_time = np.concatenate([p[0] for p in parts])
    overshoot = np.concatenate([p[1] for p in parts])
    sup = np.concatenate([p[2] for p in parts])
    positions = np.concatenate([p[3] for p in parts]) if parts else np.empty((0, len(cp_steps)))
    return PassageEnsemble(cfg, passage_time, overshoot, sup, positions)


def _sup_chunk(gen, m, n_steps, draw):
    pos = np.zeros(m)
    sup = np.zeros(m)
    step = 0
    while step < n_steps:
        span = min(max(64, _BLOCK_BUDGET // m), n_steps - step)
        paths = draw(gen, (m, span))
        np.cumsum(paths, axis=1, out=paths)
        paths += pos[:, None]
        sup = np.maximum(sup, paths.max(axis=1))
        pos = paths[:, -1]
        step += span
    return sup


def generate_supremum_ensemble(
    cfg: ExperimentConfig,
    t: float,
    threads: int = 1,
    increments: Callable | None = None,
    step_cap: int = DEFAULT_STEP_CAP,
) -> np.ndarray:
    """cfg.n_samples running suprema of skeletons on [0, t]."""
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    n_steps = _grid_steps(t, cfg.dt)
    if n_steps > step_cap:
        raise SimulationError(f"t/dt = {n_steps} exceeds the step cap {step_cap}")
    draw = increments if increments is not None else increment_sampler(cfg.params, cfg.dt)
    sizes = _chunk_sizes(cfg.n_samples)

    def run(i_m):
        i, m = i_m
        gen = RngStream(cfg.master_seed, i).generator()
        return _sup_chunk(gen, m, n_steps, draw)

    tasks = list(enumerate(sizes))
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run, tasks))
    else:
        parts = [run(t_) for t_ in tasks]
    return np.concatenate(parts)


def merge_ensembles(a: PassageEnsemble, b: PassageEnsemble) -> PassageEnsemble:
    """Concatenate two ensembles whose configs differ only in seed and size.

    The merged config keeps the first ensemble's master seed; censored
    counts are additive by construction.
    """
    ca = replace(a.config, n_samples=1, master_seed=0)
    cb = replace(b.config, n_samples=1, master_seed=0)
    if ca != cb:
        raise ValueError("ensembles differ in more than seed and sample count")
    merged_cfg = replace(a.config, n_samples=len(a) + len(b))
    return PassageEnsemble(
        merged_cfg,
        np.concatenate([a.passage_time, b.passage_time]),
        np.concatenate([a.overshoot, b.overshoot]),
        np.concatenate([a.sup_horizon, b.sup_horizon]),
        np.concatenate([a.positions, b.positions]),
    )
