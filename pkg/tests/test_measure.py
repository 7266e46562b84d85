import math

import numpy as np
import pytest

from vfield.errors import (
    CollinearMarkers,
    DegenerateBox,
    NoHit,
    TooFewMarkers,
    UnknownMarker,
)
from vfield.geodesy import (
    EcefVec,
    GeodeticCoord,
    ecef_to_engine,
    ecef_to_geodetic,
    engine_origin_at,
    enu_frame_at,
    geodetic_to_ecef,
)
from vfield.measure import (
    Marker,
    MeasurementSession,
    clip_box_from_markers,
    point_in_clipbox,
    polyline_distance,
    strike_dip,
)
from vfield.synthetic import KOLUMBO_LIKE_ANCHOR

from .conftest import FLAT_ANCHOR, ray_down


def ang_diff(a, b):
    """Smallest absolute difference between two azimuths in degrees."""
    return abs((a - b + 180.0) % 360.0 - 180.0)


def marker_at_local(frame, east_m, north_m, up_m, mid="m-x"):
    ecef = (
        frame.origin.as_array()
        + east_m * frame.east
        + north_m * frame.north
        + up_m * frame.up
    )
    return Marker(id=mid, position=ecef_to_geodetic(EcefVec.from_array(ecef)))


def plane_markers(site, strike_deg, dip_deg, r=40.0, s=30.0):
    """Three markers spanning a plane with known strike and dip.

    Offsets are centered on the anchor so the measured centroid frame
    coincides with the construction frame.
    """
    frame = enu_frame_at(site)
    theta = math.radians((strike_deg + 90.0) % 360.0)  # dip direction
    delta = math.radians(dip_deg)
    normal = np.array(
        [
            math.sin(delta) * math.sin(theta),
            math.sin(delta) * math.cos(theta),
            math.cos(delta),
        ]
    )
    along = np.array(
        [math.sin(math.radians(strike_deg)), math.cos(math.radians(strike_deg)), 0.0]
    )
    down_dip = np.cross(normal, along)
    offsets = [r * along, -0.5 * r * along + s * down_dip, -0.5 * r * along - s * down_dip]
    basis = frame.rotation().T
    anchor = frame.origin.as_array()
    return [
        Marker(
            id=f"m-{i + 1}",
            position=ecef_to_geodetic(EcefVec.from_array(anchor + basis @ o)),
        )
        for i, o in enumerate(offsets)
    ]


class TestMarkerPlacement:
    def test_ray_hit_becomes_marker(self, flat_scene):
        frame = enu_frame_at(FLAT_ANCHOR)
        session = MeasurementSession(scene=flat_scene)
        marker = session.place_marker(ray_down(frame, 37.0, -82.0, height_m=500.0))
        assert marker.id == "m-1"
        assert marker.label_visible
        # the surface sits on the ellipsoid, so height must come back ~0
        assert marker.position.height_m == pytest.approx(0.0, abs=1e-3)
        local = frame.to_enu(geodetic_to_ecef(marker.position))
        assert local[0] == pytest.approx(37.0, abs=1e-6)
        assert local[1] == pytest.approx(-82.0, abs=1e-6)

    def test_miss_raises(self, flat_scene):
        frame = enu_frame_at(FLAT_ANCHOR)
        session = MeasurementSession(scene=flat_scene)
        with pytest.raises(NoHit):
            session.place_marker(ray_down(frame, 5000.0, 0.0))

    def test_two_rays_same_surface_point(self, flat_scene):
        from vfield.spatial import Ray

        frame = enu_frame_at(FLAT_ANCHOR)
        target = frame.origin.as_array() + 10.0 * frame.east + 20.0 * frame.north
        session = MeasurementSession(scene=flat_scene)
        hits = []
        for shift in ([0.0, 0, 0], [300.0, -200.0, 0]):
            origin = (
                target
                + 1000.0 * frame.up
                + shift[0] * frame.east
                + shift[1] * frame.north
            )
            d = target - origin
            d /= np.linalg.norm(d)
            hits.append(session.place_marker(Ray(EcefVec.from_array(origin), d)))
        a = geodetic_to_ecef(hits[0].position).as_array()
        b = geodetic_to_ecef(hits[1].position).as_array()
        # the mesh carries float32 vertices, so the oblique ray lands a few
        # tens of microns from the vertical one; both mark the same spot
        assert np.linalg.norm(a - b) < 1e-3

    def test_unknown_marker(self, flat_scene):
        session = MeasurementSession(scene=flat_scene)
        with pytest.raises(UnknownMarker):
            session.get_markers(["m-404"])


class TestPolylineDistance:
    def test_coincident_markers_zero(self):
        m = Marker(id="a", position=GeodeticCoord(10, 20, 5))
        result = polyline_distance([m, m])
        assert result.total_m == 0.0
        assert result.segments[0].elevation_diff_m == 0.0

    def test_one_meter_vertical(self):
        lo = Marker(id="a", position=GeodeticCoord(10, 20, 0.0))
        hi = Marker(id="b", position=GeodeticCoord(10, 20, 1.0))
        result = polyline_distance([lo, hi])
        assert result.total_m == pytest.approx(1.0, abs=1e-9)
        assert result.segments[0].elevation_diff_m == pytest.approx(1.0, abs=1e-12)

    def test_one_meter_is_100_engine_units(self):
        frame = enu_frame_at(FLAT_ANCHOR)
        a = marker_at_local(frame, 0.0, 0.0, 0.0, "a")
        b = marker_at_local(frame, 1.0, 0.0, 0.0, "b")
        result = polyline_distance([a, b])
        assert result.total_m == pytest.approx(1.0, abs=1e-9)

        origin = engine_origin_at(FLAT_ANCHOR)
        va = ecef_to_engine(geodetic_to_ecef(a.position), origin)
        vb = ecef_to_engine(geodetic_to_ecef(b.position), origin)
        units = math.dist(
            (va.x_u, va.y_u, va.z_u), (vb.x_u, vb.y_u, vb.z_u)
        )
        assert units == pytest.approx(100.0 * result.total_m, rel=1e-9)

    def test_engine_unit_coherence_random(self):
        rng = np.random.default_rng(21)
        frame = enu_frame_at(FLAT_ANCHOR)
        origin = engine_origin_at(FLAT_ANCHOR)
        for _ in range(200):
            e, n, u = rng.uniform(-500, 500, 3)
            e2, n2, u2 = rng.uniform(-500, 500, 3)
            a = marker_at_local(frame, e, n, u, "a")
            b = marker_at_local(frame, e2, n2, u2, "b")
            meters = polyline_distance([a, b]).total_m
            va = ecef_to_engine(geodetic_to_ecef(a.position), origin)
            vb = ecef_to_engine(geodetic_to_ecef(b.position), origin)
            units = math.dist((va.x_u, va.y_u, va.z_u), (vb.x_u, vb.y_u, vb.z_u))
            assert units == pytest.approx(100.0 * meters, rel=1e-9)

    def test_crater_rim_to_rim(self, crater_scene, crater_frame):
        session = MeasurementSession(scene=crater_scene)
        west = session.place_marker(ray_down(crater_frame, -1250.0, 0.0))
        east = session.place_marker(ray_down(crater_frame, 1250.0, 0.0))
        m = session.measure_distance([west.id, east.id])
        cell = 2 * 2000.0 / 80
        assert m.result.total_m == pytest.approx(2500.0, abs=cell)
        assert m.type == "distance"
        assert m.id == "meas-1"

    def test_too_few(self):
        with pytest.raises(TooFewMarkers):
            polyline_distance([Marker(id="a", position=GeodeticCoord(0, 0, 0))])

    def test_triangle_inequality_and_additivity(self):
        rng = np.random.default_rng(22)
        frame = enu_frame_at(FLAT_ANCHOR)
        for _ in range(50):
            ms = [
                marker_at_local(frame, *rng.uniform(-1000, 1000, 3), mid=str(i))
                for i in range(3)
            ]
            via = polyline_distance(ms)
            direct = polyline_distance([ms[0], ms[2]])
            assert via.total_m >= direct.total_m - 1e-9
            assert via.total_m == pytest.approx(
                sum(s.distance_m for s in via.segments), rel=1e-12
            )


# (strike, dip, site) triples covering all quadrants and steepness ranges
PLANE_CASES = [
    (0.0, 30.0),
    (45.0, 10.0),
    (90.0, 45.0),
    (135.0, 60.0),
    (180.0, 75.0),
    (225.0, 5.0),
    (270.0, 85.0),
    (315.0, 50.0),
    (10.0, 89.0),
    (200.0, 0.5),
    (359.0, 20.0),
    (123.456, 33.21),
]


class TestStrikeDip:
    @pytest.mark.parametrize("strike,dip", PLANE_CASES)
    def test_analytic_planes(self, strike, dip):
        ms = plane_markers(GeodeticCoord(36.5, 25.5, 120.0), strike, dip)
        r = strike_dip(*ms)
        assert r.dip_deg == pytest.approx(dip, abs=1e-6)
        assert ang_diff(r.strike_azimuth_deg, strike) < 1e-6
        assert ang_diff(r.dip_direction_deg, strike + 90.0) < 1e-6
        assert not r.horizontal

    def test_right_hand_rule_invariant(self):
        ms = plane_markers(GeodeticCoord(-33.0, 151.0, 40.0), 77.0, 33.0)
        r = strike_dip(*ms)
        assert r.dip_direction_deg == pytest.approx(
            (r.strike_azimuth_deg + 90.0) % 360.0, abs=1e-9
        )

    def test_all_permutations_identical(self):
        import itertools

        ms = plane_markers(GeodeticCoord(10.0, 20.0, 0.0), 200.0, 40.0)
        results = [strike_dip(*p) for p in itertools.permutations(ms)]
        for r in results[1:]:
            assert r.strike_azimuth_deg == pytest.approx(
                results[0].strike_azimuth_deg, abs=1e-9
            )
            assert r.dip_deg == pytest.approx(results[0].dip_deg, abs=1e-9)
            assert r.dip_direction_deg == pytest.approx(
                results[0].dip_direction_deg, abs=1e-9
            )
            assert r.extent_m == results[0].extent_m

    def test_east_quarter_plane_fixture(self):
        # plane z = y through (0,0,0), (1,0,0), (0,1,1): dips 45 degrees
        # toward south with strike east; extent is the longest chord
        frame = enu_frame_at(GeodeticCoord(36.5, 25.5, 0.0))
        ms = [
            marker_at_local(frame, 0.0, 0.0, 0.0, "a"),
            marker_at_local(frame, 1.0, 0.0, 0.0, "b"),
            marker_at_local(frame, 0.0, 1.0, 1.0, "c"),
        ]
        r = strike_dip(*ms)
        assert r.dip_deg == pytest.approx(45.0, abs=1e-4)
        assert r.dip_direction_deg == pytest.approx(180.0, abs=1e-4)
        assert r.strike_azimuth_deg == pytest.approx(90.0, abs=1e-4)
        assert r.extent_m == pytest.approx(math.sqrt(3.0), abs=1e-6)

    def test_horizontal_flagged(self):
        frame = enu_frame_at(GeodeticCoord(0.0, 0.0, 0.0))
        ms = [
            marker_at_local(frame, 10.0, 0.0, 0.0, "a"),
            marker_at_local(frame, -5.0, 8.66, 0.0, "b"),
            marker_at_local(frame, -5.0, -8.66, 0.0, "c"),
        ]
        r = strike_dip(*ms)
        assert r.horizontal
        assert r.dip_deg < 0.01
        assert r.strike_azimuth_deg == 0.0
        assert r.dip_direction_deg == 0.0

    def test_collinear_rejected(self):
        frame = enu_frame_at(GeodeticCoord(0.0, 0.0, 0.0))
        ms = [
            marker_at_local(frame, float(i), float(2 * i), float(i), str(i))
            for i in range(3)
        ]
        with pytest.raises(CollinearMarkers):
            strike_dip(*ms)

    def test_translation_1000m_changes_dip_below_hundredth(self):
        site = GeodeticCoord(36.5, 25.5, 0.0)
        ms = plane_markers(site, 120.0, 35.0)
        base = strike_dip(*ms)

        frame = enu_frame_at(site)
        shift = 1000.0 * frame.east
        moved = [
            Marker(
                id=m.id,
                position=ecef_to_geodetic(EcefVec.from_array(m.ecef() + shift)),
            )
            for m in ms
        ]
        r = strike_dip(*moved)
        assert abs(r.dip_deg - base.dip_deg) < 0.01

    def test_label_hiding_keeps_first(self, flat_scene):
        frame = enu_frame_at(FLAT_ANCHOR)
        session = MeasurementSession(scene=flat_scene)
        m1 = session.place_marker(ray_down(frame, 0.0, 0.0))
        m2 = session.place_marker(ray_down(frame, 50.0, 0.0))
        m3 = session.place_marker(ray_down(frame, 0.0, 50.0))
        session.measure_strike_dip([m1.id, m2.id, m3.id])
        assert session.markers[m1.id].label_visible
        assert not session.markers[m2.id].label_visible
        assert not session.markers[m3.id].label_visible


class TestClipBox:
    def test_analytic_100_by_50(self, flat_scene):
        frame = enu_frame_at(FLAT_ANCHOR)
        m1 = marker_at_local(frame, 0.0, 0.0, 0.0, "m-1")
        m2 = marker_at_local(frame, 100.0, 0.0, 0.0, "m-2")
        m3 = marker_at_local(frame, 40.0, 50.0, 0.0, "m-3")
        box = clip_box_from_markers(m1, m2, m3, flat_scene)
        assert box.width_m == pytest.approx(100.0, abs=1e-6)
        assert box.length_m == pytest.approx(50.0, abs=1e-6)
        np.testing.assert_allclose(box.axis_u, frame.east, atol=1e-9)
        np.testing.assert_allclose(box.axis_v, frame.north, atol=1e-9)
        assert box.h_min_m == pytest.approx(0.0, abs=1e-3)
        assert box.h_max_m == pytest.approx(0.0, abs=1e-3)

    def test_v_axis_flips_toward_third_marker(self, flat_scene):
        frame = enu_frame_at(FLAT_ANCHOR)
        m1 = marker_at_local(frame, 0.0, 0.0, 0.0, "m-1")
        m2 = marker_at_local(frame, 100.0, 0.0, 0.0, "m-2")
        m3 = marker_at_local(frame, 40.0, -50.0, 0.0, "m-3")
        box = clip_box_from_markers(m1, m2, m3, flat_scene)
        assert box.length_m == pytest.approx(50.0, abs=1e-6)
        np.testing.assert_allclose(box.axis_v, -frame.north, atol=1e-9)

    def test_height_axis_ignored_for_width(self, flat_scene):
        # width uses only the horizontal projection of m1 -> m2
        frame = enu_frame_at(FLAT_ANCHOR)
        m1 = marker_at_local(frame, 0.0, 0.0, 0.0, "m-1")
        m2 = marker_at_local(frame, 60.0, 0.0, 80.0, "m-2")
        m3 = marker_at_local(frame, 0.0, 30.0, 0.0, "m-3")
        box = clip_box_from_markers(m1, m2, m3, flat_scene)
        assert box.width_m == pytest.approx(60.0, abs=1e-6)

    def test_degenerate_cases(self, flat_scene):
        frame = enu_frame_at(FLAT_ANCHOR)
        m1 = marker_at_local(frame, 0.0, 0.0, 0.0, "m-1")
        vertical = marker_at_local(frame, 0.0, 0.0, 10.0, "m-2")
        m3 = marker_at_local(frame, 0.0, 30.0, 0.0, "m-3")
        with pytest.raises(DegenerateBox):
            clip_box_from_markers(m1, vertical, m3, flat_scene)
        on_axis = marker_at_local(frame, 50.0, 0.0, 0.0, "m-4")
        m2 = marker_at_local(frame, 100.0, 0.0, 0.0, "m-5")
        with pytest.raises(DegenerateBox):
            clip_box_from_markers(m1, m2, on_axis, flat_scene)

    def test_crater_height_band(self, crater_scene, crater_frame):
        m1 = marker_at_local(crater_frame, -1300.0, -1300.0, 0.0, "m-1")
        m2 = marker_at_local(crater_frame, 1300.0, -1300.0, 0.0, "m-2")
        m3 = marker_at_local(crater_frame, 0.0, 1300.0, 0.0, "m-3")
        box = clip_box_from_markers(m1, m2, m3, crater_scene)
        cell = 2 * 2000.0 / 80
        assert box.h_min_m == pytest.approx(-500.0, abs=cell)
        assert box.h_max_m == pytest.approx(0.0, abs=cell)

    def test_point_membership_against_oracle(self, crater_scene, crater_frame):
        frame = crater_frame
        m1 = marker_at_local(frame, -900.0, -800.0, 0.0, "m-1")
        m2 = marker_at_local(frame, 700.0, -500.0, 0.0, "m-2")
        m3 = marker_at_local(frame, -200.0, 900.0, 0.0, "m-3")
        box = clip_box_from_markers(m1, m2, m3, crater_scene)

        # oracle: recompute membership from scratch in the anchor's own
        # tangent frame, without touching the ClipBox fields
        anchor_frame = enu_frame_at(m1.position)
        p1 = geodetic_to_ecef(m1.position).as_array()
        d2 = anchor_frame.rotation() @ (geodetic_to_ecef(m2.position).as_array() - p1)
        u_loc = np.array([d2[0], d2[1], 0.0])
        w = np.linalg.norm(u_loc)
        u_loc /= w
        v_loc = np.cross([0.0, 0, 1], u_loc)
        d3 = anchor_frame.rotation() @ (geodetic_to_ecef(m3.position).as_array() - p1)
        if np.dot(d3, v_loc) < 0:
            v_loc = -v_loc
        length = abs(np.dot(d3, v_loc))

        rng = np.random.default_rng(33)
        n_inside = 0
        for _ in range(10_000):
            e, n = rng.uniform(-1200, 1200, 2)
            h = rng.uniform(-700.0, 200.0)
            p_ecef = (
                frame.origin.as_array()
                + e * frame.east
                + n * frame.north
                + h * frame.up
            )
            p = EcefVec.from_array(p_ecef)
            loc = anchor_frame.rotation() @ (p.as_array() - p1)
            height = ecef_to_geodetic(p).height_m
            expected = (
                0.0 <= np.dot(loc, u_loc) <= w
                and 0.0 <= np.dot(loc, v_loc) <= length
                and box.h_min_m <= height <= box.h_max_m
            )
            got = point_in_clipbox(box, p)
            assert got == expected
            n_inside += got
        # sanity: the sample straddles the boundary in both directions
        assert 0 < n_inside < 10_000

    def test_session_clip_box_measurement(self, crater_scene, crater_frame):
        session = MeasurementSession(scene=crater_scene)
        m1 = session.place_marker(ray_down(crater_frame, -1300.0, -1300.0))
        m2 = session.place_marker(ray_down(crater_frame, 1300.0, -1300.0))
        m3 = session.place_marker(ray_down(crater_frame, 0.0, 1300.0))
        m = session.measure_clip_box([m1.id, m2.id, m3.id])
        assert m.type == "clip_box"
        assert m.result.h_min_m < -400.0
