"""Synthetic ground truth: planted double Pareto distances and mention streams.

Randomness comes from numpy's PCG64 generator seeded through ``SeedSequence``
with ``[seed, stream, block]``. Pairs are generated in fixed-size blocks, so
the output does not depend on how many workers process the blocks.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from geofriends.geodesy import EARTH, destination_arrays
from geofriends.ingest import MentionRecord, RegionFilter

BLOCK_SIZE = 4096
LA_BOX = RegionFilter("los_angeles", 33.7, 34.35, -118.67, -118.15)
DEFAULT_START_TS = 1409529600  # 2014-09-01T00:00:00Z
MAX_REPLY_S = 3600

# stream ids mixed into the seed
_DISTANCES, _STREAM, _SHUFFLE = 0, 1, 2


@dataclass(frozen=True)
class SynthConfig:
    gamma1: float = 0.60
    gamma2: float = 6.23
    d_s: float = 22.0
    d_min: float = 0.1
    d_max: float = 1000.0
    n_pairs: int = 1000
    exchanges_per_pair: int = 1
    static_fraction_target: float = 1.0
    seed: int = 0
    region: RegionFilter = field(default=LA_BOX)
    late_reply_fraction: float = 0.0  # adversarial: replies at >= 1 h
    start_ts: int = DEFAULT_START_TS
    span_s: int = 30 * 86400

    def __post_init__(self):
        if not (0 < self.d_min < self.d_s < self.d_max):
            raise ValueError("need 0 < d_min < d_s < d_max")
        if not (math.isfinite(self.gamma1) and math.isfinite(self.gamma2)):
            raise ValueError("exponents must be finite")
        if self.n_pairs < 0 or self.exchanges_per_pair < 1:
            raise ValueError("n_pairs must be >= 0 and exchanges_per_pair >= 1")
        if not (0.0 <= self.static_fraction_target <= 1.0) or not (0.0 <= self.late_reply_fraction <= 1.0):
            raise ValueError("fractions must lie in [0, 1]")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a non-negative 64-bit integer")
        if self.start_ts <= 0 or self.span_s <= 0:
            raise ValueError("start_ts and span_s must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def _segment_mass(gamma, lo, hi):
    # integral of d**-gamma over [lo, hi] divided by lo**(1 - gamma); the
    # expm1 form stays accurate as gamma -> 1
    e = 1.0 - gamma
    span = math.log(hi / lo)
    return span if e == 0 else math.expm1(e * span) / e


def _segment_inverse(gamma, lo, hi, q):
    e = 1.0 - gamma
    span = math.log(hi / lo)
    if e == 0:
        return lo * np.exp(q * span)
    return lo * np.exp(np.log1p(q * math.expm1(e * span)) / e)


class DoublePareto:
    """Density proportional to d**-g1 below d_s and d_s**(g2-g1) * d**-g2 above, on [d_min, d_max]."""

    def __init__(self, gamma1, gamma2, d_s, d_min, d_max):
        self.gamma1, self.gamma2 = gamma1, gamma2
        self.d_s, self.d_min, self.d_max = d_s, d_min, d_max
        # both masses in units of d_s**(1 - gamma1)
        m1 = (d_min / d_s) ** (1.0 - gamma1) * _segment_mass(gamma1, d_min, d_s)
        m2 = _segment_mass(gamma2, d_s, d_max)
        self.p_intra = m1 / (m1 + m2)
        self._norm = (m1 + m2) * d_s ** (1.0 - gamma1)

    @classmethod
    def from_config(cls, config: SynthConfig) -> "DoublePareto":
        return cls(config.gamma1, config.gamma2, config.d_s, config.d_min, config.d_max)

    def pdf(self, d):
        d = np.asarray(d, dtype=float)
        inside = (d >= self.d_min) & (d <= self.d_max)
        with np.errstate(divide="ignore", over="ignore"):
            lower = d ** -self.gamma1
            upper = self.d_s ** (self.gamma2 - self.gamma1) * d ** -self.gamma2
        return np.where(inside, np.where(d < self.d_s, lower, upper) / self._norm, 0.0)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        p = self.p_intra
        with np.errstate(divide="ignore", invalid="ignore"):
            q1 = np.clip(u / p, 0.0, 1.0) if p > 0 else np.zeros_like(u)
            q2 = np.clip((u - p) / (1.0 - p), 0.0, 1.0) if p < 1 else np.zeros_like(u)
        x = np.where(
            u < p,
            _segment_inverse(self.gamma1, self.d_min, self.d_s, q1),
            _segment_inverse(self.gamma2, self.d_s, self.d_max, q2),
        )
        return np.clip(x, self.d_min, self.d_max)


def sample_distances(config: SynthConfig, rng: np.random.Generator, size: int) -> np.ndarray:
    return DoublePareto.from_config(config).ppf(rng.random(size))


def sample_distance(config: SynthConfig, rng: np.random.Generator) -> float:
    return float(sample_distances(config, rng, 1)[0])


def _rng(config: SynthConfig, stream: int, block: int = 0) -> np.random.Generator:
    return np.random.default_rng([config.seed, stream, block])


def _blocks(n: int):
    return [(b, b * BLOCK_SIZE, min(n, (b + 1) * BLOCK_SIZE)) for b in range(math.ceil(n / BLOCK_SIZE))]


def _block_distances(config: SynthConfig, block: int, size: int) -> np.ndarray:
    return sample_distances(config, _rng(config, _DISTANCES, block), size)


def user_ids(config: SynthConfig, i: int) -> tuple[str, str]:
    width = len(str(max(config.n_pairs - 1, 0)))
    return f"u{i:0{width}d}a", f"u{i:0{width}d}b"


def generate_pairs(config: SynthConfig) -> list[tuple[int, float]]:
    """``(pair index, planted distance km)`` for every pair."""
    out = []
    for b, lo, hi in _blocks(config.n_pairs):
        out.extend(zip(range(lo, hi), _block_distances(config, b, hi - lo).tolist()))
    return out


def _walk(rng, lat0, lon0, times, moving, radius_km):
    # positions at each send time; moving users take steps at 2-30 km/h
    n, k = times.shape
    lat = np.empty((n, k))
    lon = np.empty((n, k))
    lat[:, 0], lon[:, 0] = lat0, lon0
    for j in range(1, k):
        speed = 30.0 - 28.0 * rng.random(n)  # (2, 30] km/h
        bearing = 360.0 * rng.random(n)
        step = speed * (times[:, j] - times[:, j - 1]) / 3600.0
        nlat, nlon = destination_arrays(lat[:, j - 1], lon[:, j - 1], bearing, step, radius_km)
        lat[:, j] = np.where(moving, nlat, lat[:, j - 1])
        lon[:, j] = np.where(moving, nlon, lon[:, j - 1])
    return lat, lon


def _stream_block(config: SynthConfig, block: int, lo: int, hi: int, radius_km: float) -> list[MentionRecord]:
    n = hi - lo
    n_ex = config.exchanges_per_pair
    dist = _block_distances(config, block, n)
    rng = _rng(config, _STREAM, block)
    box = config.region

    lat_a = rng.uniform(box.lat_min, box.lat_max, n)
    lon_a = rng.uniform(box.lon_min, box.lon_max, n)
    bearing = 360.0 * rng.random(n)
    lat_b, lon_b = destination_arrays(lat_a, lon_a, bearing, dist, radius_km)

    reply = rng.integers(1, MAX_REPLY_S, size=(n, n_ex))  # 1..3599 s
    late = rng.random((n, n_ex)) < config.late_reply_fraction
    reply = np.where(late, rng.integers(MAX_REPLY_S, 2 * MAX_REPLY_S + 1, size=(n, n_ex)), reply)
    # gap before the next exchange, chosen so both users' successive posts stay
    # within an hour of each other whenever the replies are on time
    room = MAX_REPLY_S - np.maximum(reply[:, :-1], reply[:, 1:])
    gap = rng.integers(1, np.maximum(room, 1) + 1) if n_ex > 1 else np.zeros((n, 0), dtype=np.int64)
    start = config.start_ts + rng.integers(0, config.span_s, size=n)
    steps = np.concatenate([np.zeros((n, 1), dtype=np.int64), np.cumsum(reply[:, :-1] + gap, axis=1)], axis=1)
    t_a = start[:, None] + steps
    t_b = t_a + reply

    n_users = 2 * n
    n_moving = round((1.0 - config.static_fraction_target) * n_users)
    moving = np.zeros(n_users, dtype=bool)
    moving[rng.permutation(n_users)[:n_moving]] = True
    pos_a = _walk(rng, lat_a, lon_a, t_a, moving[:n], radius_km)
    pos_b = _walk(rng, lat_b, lon_b, t_b, moving[n:], radius_km)

    la, oa, lb, ob = (a.tolist() for a in (*pos_a, *pos_b))
    ta, tb = t_a.tolist(), t_b.tolist()
    records = []
    for row, i in enumerate(range(lo, hi)):
        a, b = user_ids(config, i)
        for k in range(n_ex):
            records.append(MentionRecord(a, b, la[row][k], oa[row][k], ta[row][k]))
            records.append(MentionRecord(b, a, lb[row][k], ob[row][k], tb[row][k]))
    return records


def generate_mention_stream(config: SynthConfig, workers: int = 1, radius_km: float = EARTH.radius_km) -> list[MentionRecord]:
    """Mention/reply exchanges for every planted pair, deterministically shuffled."""
    if config.d_max > math.pi * radius_km:
        raise ValueError(f"d_max {config.d_max} km exceeds half the Earth's circumference")
    blocks = _blocks(config.n_pairs)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        parts = list(pool.map(lambda blk: _stream_block(config, *blk, radius_km), blocks))
    records = [r for part in parts for r in part]
    order = _rng(config, _SHUFFLE).permutation(len(records))
    return [records[i] for i in order]


def write_truth(config: SynthConfig, path: str | Path) -> None:
    pairs = [[*user_ids(config, i), d] for i, d in generate_pairs(config)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"config": config.to_dict(), "pairs": pairs}, fh, sort_keys=True)
        fh.write("\n")
