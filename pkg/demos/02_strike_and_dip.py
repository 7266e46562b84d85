"""Strike & dip from three surface points: build planes with known geologic
orientation and read the measurement back in compass notation."""

import math

import numpy as np

from vfield import Marker, strike_dip
from vfield.geodesy import EcefVec, GeodeticCoord, ecef_to_geodetic, enu_frame_at

SITE = GeodeticCoord(36.5, 25.5, 120.0)
frame = enu_frame_at(SITE)
basis = frame.rotation().T  # columns: east, north, up in ECEF


def plane_markers(strike_deg, dip_deg, r=40.0):
    """Three points spanning a plane with the requested orientation."""
    theta = math.radians((strike_deg + 90.0) % 360.0)  # dip direction
    delta = math.radians(dip_deg)
    normal = np.array([math.sin(delta) * math.sin(theta),
                       math.sin(delta) * math.cos(theta),
                       math.cos(delta)])
    along = np.array([math.sin(math.radians(strike_deg)),
                      math.cos(math.radians(strike_deg)), 0.0])
    down_dip = np.cross(normal, along)
    offsets = [r * along, -0.5 * r * along + 30 * down_dip,
               -0.5 * r * along - 30 * down_dip]
    anchor = frame.origin.as_array()
    return [Marker(id=f"m-{i}", position=ecef_to_geodetic(
        EcefVec.from_array(anchor + basis @ o))) for i, o in enumerate(offsets)]


print(f"{'constructed':>24}  {'measured strike/dip/dipdir':>32}")
for strike, dip in [(0, 30), (90, 45), (200, 12.5), (315, 80)]:
    r = strike_dip(*plane_markers(strike, dip))
    print(f"  strike {strike:6.1f} dip {dip:5.1f}  ->  "
          f"{r.strike_azimuth_deg:7.3f} / {r.dip_deg:6.3f} / "
          f"{r.dip_direction_deg:7.3f}   extent {r.extent_m:.1f} m")

# a flat triangle is flagged horizontal instead of returning noise azimuths
flat = [Marker(id=f"f-{i}", position=ecef_to_geodetic(EcefVec.from_array(
    frame.origin.as_array() + basis @ o)))
    for i, o in enumerate([np.array([10.0, 0, 0]),
                           np.array([-5.0, 8.66, 0]),
                           np.array([-5.0, -8.66, 0])])]
r = strike_dip(*flat)
print(f"\nflat triangle: dip {r.dip_deg:.2e} deg, horizontal={r.horizontal}")
