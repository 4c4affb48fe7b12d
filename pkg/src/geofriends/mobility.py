"""Static/moving classification from per-user location histories."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from geofriends.geodesy import great_circle_distance
from geofriends.ingest import LocationSample

STATIC_MAX_KMH = 2.0  # static band is [0, 2) km/h


@dataclass(frozen=True)
class MobilityProfile:
    user_id: str
    mean_velocity_kmh: float
    n_segments: int
    mode: str  # "static" | "moving" | "undetermined"


def classify(mean_velocity_kmh: float, n_segments: int) -> str:
    if n_segments == 0:
        return "undetermined"
    return "static" if mean_velocity_kmh < STATIC_MAX_KMH else "moving"


def velocity_profile(history: Sequence[LocationSample], max_gap_s: float = 3600.0) -> MobilityProfile:
    """Mean of per-segment speeds over consecutive samples ``0 < dt <= max_gap_s`` apart."""
    user = history[0].user_id if history else ""
    speeds = []
    for prev, cur in zip(history, history[1:]):
        dt = cur.timestamp - prev.timestamp
        if 0 < dt <= max_gap_s:
            km = great_circle_distance((prev.lat, prev.lon), (cur.lat, cur.lon))
            speeds.append(km / (dt / 3600.0))
    mean = math.fsum(speeds) / len(speeds) if speeds else 0.0
    return MobilityProfile(user, mean, len(speeds), classify(mean, len(speeds)))


def profile_users(histories: Mapping[str, Sequence[LocationSample]], max_gap_s: float = 3600.0) -> list[MobilityProfile]:
    return [velocity_profile(histories[u], max_gap_s) for u in sorted(histories)]


def static_fraction(profiles: Iterable[MobilityProfile]) -> float:
    determined = [p for p in profiles if p.mode != "undetermined"]
    if not determined:
        return 0.0
    return sum(p.mode == "static" for p in determined) / len(determined)


def write_profiles(profiles: Iterable[MobilityProfile], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("user_id\tmean_velocity_kmh\tn_segments\tmode\n")
        for p in profiles:
            fh.write(f"{p.user_id}\t{p.mean_velocity_kmh!r}\t{p.n_segments}\t{p.mode}\n")
