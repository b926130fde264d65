"""Geodesy and optical-link feasibility on a spherical Earth.

Distances combine a great-circle surface leg (haversine) with the altitude
difference; line of sight is an Earth-curvature horizon test. Terrain and
refraction are out of scope.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_KM = 6371.0

# Endpoints at or below sea level get this effective height in the horizon
# test, so two ground stations never degenerate to zero visual range.
MIN_EYE_HEIGHT_M = 2.0


@dataclass(frozen=True)
class GeoPosition:
    """A node location: latitude/longitude in degrees, altitude in meters.

    Longitude is normalized to [-180, 180) on construction.
    """

    latitude_deg: float
    longitude_deg: float
    altitude_m: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.latitude_deg) or not (-90.0 <= self.latitude_deg <= 90.0):
            raise ValueError(f"latitude_deg out of [-90, 90]: {self.latitude_deg}")
        if not math.isfinite(self.longitude_deg):
            raise ValueError(f"longitude_deg not finite: {self.longitude_deg}")
        lon = ((self.longitude_deg + 180.0) % 360.0) - 180.0
        object.__setattr__(self, "longitude_deg", lon)
        if not math.isfinite(self.altitude_m) or self.altitude_m < -500.0:
            raise ValueError(f"altitude_m must be finite and >= -500: {self.altitude_m}")


@dataclass(frozen=True)
class LinkFeasibilityParams:
    """Envelope for deciding whether an optical link can be acquired."""

    max_range_km: float = 144.0
    earth_radius_km: float = EARTH_RADIUS_KM
    require_los: bool = True

    def __post_init__(self):
        if not math.isfinite(self.max_range_km) or self.max_range_km <= 0.0:
            raise ValueError(f"max_range_km must be positive and finite: {self.max_range_km}")
        if not math.isfinite(self.earth_radius_km) or self.earth_radius_km <= 0.0:
            raise ValueError(f"earth_radius_km must be positive and finite: {self.earth_radius_km}")


def _central_angle_rad(a: GeoPosition, b: GeoPosition) -> float:
    lat1 = math.radians(a.latitude_deg)
    lat2 = math.radians(b.latitude_deg)
    dlat = math.radians(b.latitude_deg - a.latitude_deg)
    dlon = math.radians(b.longitude_deg - a.longitude_deg)
    s = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * math.asin(min(1.0, math.sqrt(s)))


def geodesic_distance(a: GeoPosition, b: GeoPosition, earth_radius_km: float = EARTH_RADIUS_KM) -> float:
    """Distance in km between two node positions.

    Great-circle distance on a sphere of radius ``earth_radius_km`` plus the
    mean altitude, composed with the altitude difference as
    sqrt(surface**2 + dalt**2). Symmetric; exactly zero for identical inputs.
    """
    mean_alt_km = (a.altitude_m + b.altitude_m) / 2000.0
    surface = (earth_radius_km + mean_alt_km) * _central_angle_rad(a, b)
    dalt_km = abs(b.altitude_m - a.altitude_m) / 1000.0
    return math.hypot(surface, dalt_km)


def _horizon_km(altitude_m: float, earth_radius_km: float) -> float:
    h_km = max(altitude_m, MIN_EYE_HEIGHT_M) / 1000.0
    return math.sqrt(2.0 * earth_radius_km * h_km)


def line_of_sight(a: GeoPosition, b: GeoPosition, params: LinkFeasibilityParams) -> bool:
    """True iff the segment between the two elevated points clears the Earth.

    Uses the standard horizon approximation: each endpoint sees out to
    sqrt(2*R*h); the pair has line of sight when the surface separation does
    not exceed the sum of the two horizon distances.
    """
    r = params.earth_radius_km
    surface = r * _central_angle_rad(a, b)
    return surface <= _horizon_km(a.altitude_m, r) + _horizon_km(b.altitude_m, r)


def link_feasible(a: GeoPosition, b: GeoPosition, params: LinkFeasibilityParams) -> bool:
    """True iff an optical link between a and b can be acquired.

    Requires the 3D distance to be within ``max_range_km`` and, when
    ``require_los`` is set, an unobstructed horizon path.
    """
    if geodesic_distance(a, b, params.earth_radius_km) > params.max_range_km:
        return False
    if params.require_los and not line_of_sight(a, b, params):
        return False
    return True
