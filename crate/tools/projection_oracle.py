"""World Mercator (EPSG:3395) reference values at 50-digit precision.

The forward formula is first checked against the published EPSG worked
example for Mercator variant A (Bessel 1841, k0 = 0.997), then evaluated on
WGS84 for a fixed set of points. Output: JSON on stdout.
"""

import json
import sys

from mpmath import mp, mpf, pi, sin, tan, log, radians

mp.dps = 50


def forward(lon, lat, a, inv_f, k0=mpf(1), lon0=mpf(0), fe=mpf(0), fn=mpf(0)):
    f = 1 / mpf(inv_f)
    e2 = f * (2 - f)
    e = mp.sqrt(e2)
    phi = radians(mpf(lat))
    lam = radians(mpf(lon))
    x = fe + a * k0 * (lam - radians(lon0))
    es = e * sin(phi)
    y = fn + a * k0 * log(tan(pi / 4 + phi / 2) * ((1 - es) / (1 + es)) ** (e / 2))
    return x, y


def check_epsg_example():
    x, y = forward(120, -3, mpf(6377397.155), mpf("299.1528128"), k0=mpf("0.997"), lon0=mpf(110),
                   fe=mpf(3900000), fn=mpf(900000))
    assert abs(x - mpf("5009726.58")) < mpf("0.01"), x
    assert abs(y - mpf("569150.82")) < mpf("0.01"), y


def main():
    check_epsg_example()
    a, inv_f = mpf(6378137), mpf("298.257223563")
    points = [(0, 0), (180, 0), (-180, 0), (0, 45), (-73.9857, 40.7484), (139.6917, 35.6895), (-43.1729, -22.9068),
              (12.5, 85.0), (-0.1276, 51.5072)]
    out = []
    for lon, lat in points:
        x, y = forward(lon, lat, a, inv_f)
        out.append({"lon": lon, "lat": lat, "x": mp.nstr(x, 25), "y": mp.nstr(y, 25)})
    json.dump(out, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
