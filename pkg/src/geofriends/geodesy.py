"""Great-circle geometry on a spherical Earth.

Angles are degrees at the public boundary and radians internally. The scalar
functions take :class:`GeoPoint` values; the ``*_arrays`` variants broadcast
over numpy arrays and are what the synthetic generator uses in bulk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

# Relative error of the law of cosines grows like eps / angle**2. Above this
# cosine (central angles below ~4.5e-4 rad, about 2.8 km) haversine takes over,
# which keeps both branches accurate to ~1e-9 relative.
COSINE_SWITCH = 1.0 - 1e-7


class GeoPoint(NamedTuple):
    lat: float
    lon: float

    def validate(self) -> "GeoPoint":
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not (-180.0 < self.lon <= 180.0):
            raise ValueError(f"longitude {self.lon} outside (-180, 180]")
        return self


@dataclass(frozen=True)
class EarthModel:
    radius_km: float = 6371.0

    def __post_init__(self):
        if not self.radius_km > 0:
            raise ValueError("radius_km must be positive")

    @property
    def half_circumference_km(self) -> float:
        return math.pi * self.radius_km


EARTH = EarthModel()


def _central_angle(lat1, lon1, lat2, lon2):
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dlam = math.radians(lon2 - lon1)
    c = math.sin(phi1) * math.sin(phi2) + math.cos(phi1) * math.cos(phi2) * math.cos(dlam)
    if c > COSINE_SWITCH:
        h = math.sin((phi2 - phi1) / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
        return 2.0 * math.asin(min(1.0, math.sqrt(h)))
    return math.acos(max(-1.0, c))


def great_circle_distance(a: GeoPoint, b: GeoPoint, earth: EarthModel = EARTH) -> float:
    """Surface distance in km by the spherical law of cosines.

    Falls back to the haversine form for very small separations. The
    arguments are put in canonical order first so the result is exactly
    symmetric.
    """
    if (b[0], b[1]) < (a[0], a[1]):
        a, b = b, a
    return earth.radius_km * _central_angle(a[0], a[1], b[0], b[1])


def great_circle_distance_arrays(lat1, lon1, lat2, lon2, radius_km: float = EARTH.radius_km):
    lat1, lon1, lat2, lon2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (lat1, lon1, lat2, lon2)))
    swap = (lat2 < lat1) | ((lat2 == lat1) & (lon2 < lon1))
    lat1, lat2 = np.where(swap, lat2, lat1), np.where(swap, lat1, lat2)
    lon1, lon2 = np.where(swap, lon2, lon1), np.where(swap, lon1, lon2)
    phi1, phi2 = np.radians(lat1), np.radians(lat2)
    dlam = np.radians(lon2 - lon1)
    c = np.sin(phi1) * np.sin(phi2) + np.cos(phi1) * np.cos(phi2) * np.cos(dlam)
    h = np.sin((phi2 - phi1) / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2.0) ** 2
    angle = np.where(
        c > COSINE_SWITCH,
        2.0 * np.arcsin(np.minimum(1.0, np.sqrt(h))),
        np.arccos(np.clip(c, -1.0, 1.0)),
    )
    return radius_km * angle


def normalize_lon(lon):
    """Wrap longitudes into (-180, 180]."""
    lon = np.mod(np.asarray(lon, dtype=float) + 180.0, 360.0) - 180.0
    lon = np.where(lon <= -180.0, lon + 360.0, lon)
    return lon if lon.ndim else float(lon)


def destination_arrays(lat, lon, bearing, distance_km, radius_km: float = EARTH.radius_km):
    # Rotate the origin's unit vector along the great circle in the tangent
    # direction given by the bearing; stable at all latitudes.
    phi = np.radians(np.asarray(lat, dtype=float))
    lam = np.radians(np.asarray(lon, dtype=float))
    theta = np.radians(np.asarray(bearing, dtype=float))
    delta = np.asarray(distance_km, dtype=float) / radius_km

    sphi, cphi, slam, clam = np.sin(phi), np.cos(phi), np.sin(lam), np.cos(lam)
    p = np.stack([cphi * clam, cphi * slam, sphi])
    north = np.stack([-sphi * clam, -sphi * slam, cphi])
    east = np.stack([-slam, clam, np.zeros_like(lam)])
    direction = np.cos(theta) * north + np.sin(theta) * east
    q = np.cos(delta) * p + np.sin(delta) * direction

    lat2 = np.degrees(np.arctan2(q[2], np.hypot(q[0], q[1])))
    lon2 = normalize_lon(np.degrees(np.arctan2(q[1], q[0])))
    return lat2, lon2


def destination_point(origin: GeoPoint, bearing: float, distance: float, earth: EarthModel = EARTH) -> GeoPoint:
    """Point reached by travelling ``distance`` km from ``origin`` along ``bearing`` degrees."""
    if not (0.0 <= distance <= earth.half_circumference_km):
        raise ValueError(f"distance {distance} km outside [0, {earth.half_circumference_km}]")
    lat2, lon2 = destination_arrays(origin[0], origin[1], bearing, distance, earth.radius_km)
    return GeoPoint(float(lat2), float(lon2))
