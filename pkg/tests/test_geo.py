import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soqn.geo import (EARTH_RADIUS_KM, GeoPosition, LinkFeasibilityParams,
                      geodesic_distance, line_of_sight, link_feasible)

# Independent hand computations, frozen before the build:
#   1 degree along the equator = 6371 * pi / 180
#   horizon(h) = sqrt(2 * 6371 * h_km), h floored at the 2 m eye height
ONE_DEG_EQUATOR_KM = 111.19492664455873


def horizon_oracle_km(alt_m: float) -> float:
    return math.sqrt(2.0 * EARTH_RADIUS_KM * max(alt_m, 2.0) / 1000.0)


def lon_for_surface_km(km: float) -> float:
    """Longitude offset along the equator giving the surface distance."""
    return math.degrees(km / EARTH_RADIUS_KM)


positions = st.builds(
    GeoPosition,
    st.floats(-89.0, 89.0),
    st.floats(-179.0, 179.0),
    st.floats(-400.0, 8000.0),
)


class TestGeoPosition:
    def test_longitude_normalized(self):
        assert GeoPosition(0.0, 180.0, 0.0).longitude_deg == -180.0
        assert GeoPosition(0.0, 270.0, 0.0).longitude_deg == -90.0
        assert GeoPosition(0.0, -180.0, 0.0).longitude_deg == -180.0

    @pytest.mark.parametrize("lat,lon,alt", [
        (91.0, 0.0, 0.0), (-90.5, 0.0, 0.0),
        (0.0, float("nan"), 0.0), (0.0, 0.0, -600.0), (0.0, 0.0, float("inf")),
    ])
    def test_rejects_bad_fields(self, lat, lon, alt):
        with pytest.raises(ValueError):
            GeoPosition(lat, lon, alt)


class TestGeodesicDistance:
    def test_identity_is_exactly_zero(self):
        p = GeoPosition(10.0, 20.0, 100.0)
        assert geodesic_distance(p, p) == 0.0

    def test_one_degree_at_equator(self):
        d = geodesic_distance(GeoPosition(0, 0, 0), GeoPosition(0, 1, 0))
        assert d == pytest.approx(ONE_DEG_EQUATOR_KM, rel=1e-12)

    def test_pure_altitude_leg(self):
        d = geodesic_distance(GeoPosition(0, 0, 0), GeoPosition(0, 0, 1000.0))
        assert d == pytest.approx(1.0, rel=1e-12)

    @given(positions, positions)
    @settings(max_examples=200)
    def test_symmetric_and_nonnegative(self, a, b):
        dab = geodesic_distance(a, b)
        assert dab == geodesic_distance(b, a)
        assert dab >= 0.0

    @given(positions)
    def test_self_distance_zero(self, p):
        assert geodesic_distance(p, p) == 0.0

    def test_distinct_positions_nonzero(self):
        a = GeoPosition(10.0, 20.0, 0.0)
        assert geodesic_distance(a, GeoPosition(10.001, 20.0, 0.0)) > 0.0


class TestLineOfSight:
    def test_close_pair_at_sea_level(self):
        params = LinkFeasibilityParams()
        a = GeoPosition(0, 0, 0)
        b = GeoPosition(0, lon_for_surface_km(1.0), 0)
        assert line_of_sight(a, b, params)

    def test_sea_level_pair_beyond_horizon(self):
        # horizon oracle: 2 x sqrt(2 * 6371 * 0.002) ~ 10.1 km << 200 km
        params = LinkFeasibilityParams(max_range_km=1000.0)
        a = GeoPosition(0, 0, 0)
        b = GeoPosition(0, lon_for_surface_km(200.0), 0)
        assert horizon_oracle_km(0.0) * 2 < 200.0
        assert not line_of_sight(a, b, params)

    def test_mountain_to_sea_level_matches_oracle(self):
        params = LinkFeasibilityParams(max_range_km=1000.0)
        a = GeoPosition(0, 0, 0)
        b = GeoPosition(0, lon_for_surface_km(150.0), 3000.0)
        expected = horizon_oracle_km(0.0) + horizon_oracle_km(3000.0) >= 150.0
        assert line_of_sight(a, b, params) == expected
        assert expected  # 200.56 km of combined horizon

    @pytest.mark.parametrize("km", [5.0, 50.0, 120.0, 200.0, 300.0])
    def test_matches_horizon_oracle_on_grid(self, km):
        params = LinkFeasibilityParams()
        for alt_a, alt_b in [(0, 0), (0, 500), (1000, 0), (2500, 2500)]:
            a = GeoPosition(0, 0, alt_a)
            b = GeoPosition(0, lon_for_surface_km(km), alt_b)
            expected = horizon_oracle_km(alt_a) + horizon_oracle_km(alt_b) >= km
            assert line_of_sight(a, b, params) == expected

    @given(positions, positions, st.floats(0.0, 5000.0))
    @settings(max_examples=100)
    def test_monotone_in_altitude(self, a, b, extra):
        params = LinkFeasibilityParams()
        if line_of_sight(a, b, params):
            raised = GeoPosition(a.latitude_deg, a.longitude_deg, a.altitude_m + extra)
            assert line_of_sight(raised, b, params)


class TestLinkFeasible:
    def test_in_range_clear_los(self):
        a = GeoPosition(0, 0, 0)
        b = GeoPosition(0, lon_for_surface_km(10.0), 0)
        assert link_feasible(a, b, LinkFeasibilityParams())

    def test_beyond_range(self):
        a = GeoPosition(0, 0, 0)
        b = GeoPosition(0, lon_for_surface_km(150.0), 0)
        assert not link_feasible(a, b, LinkFeasibilityParams(max_range_km=144.0))

    def test_los_blocked_conjunction(self):
        a = GeoPosition(0, 0, 0)
        b = GeoPosition(0, lon_for_surface_km(100.0), 0)
        blocked = LinkFeasibilityParams(max_range_km=144.0, require_los=True)
        assert not line_of_sight(a, b, blocked)
        assert not link_feasible(a, b, blocked)
        assert link_feasible(a, b, LinkFeasibilityParams(max_range_km=144.0, require_los=False))

    @given(positions, positions, st.floats(1.0, 300.0), st.floats(0.0, 100.0))
    @settings(max_examples=100)
    def test_monotone_in_max_range(self, a, b, base, shrink):
        wide = LinkFeasibilityParams(max_range_km=base, require_los=False)
        narrow = LinkFeasibilityParams(max_range_km=max(base - shrink, 0.5), require_los=False)
        if link_feasible(a, b, narrow):
            assert link_feasible(a, b, wide)

    @given(positions, positions)
    @settings(max_examples=100)
    def test_symmetric(self, a, b):
        params = LinkFeasibilityParams()
        assert link_feasible(a, b, params) == link_feasible(b, a, params)

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            LinkFeasibilityParams(max_range_km=0.0)
        with pytest.raises(ValueError):
            LinkFeasibilityParams(max_range_km=float("inf"))
