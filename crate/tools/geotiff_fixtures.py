"""Writes GeoTIFF test fixtures with tifffile plus expected decoded values.

Files land in crates/core/tests/fixtures/geotiff/. expected.json maps each
file name to its width, height, georeferencing, nodata and band values
(row-major, one list per band), or to the error the decoder must raise.
"""

import itertools
import json
import pathlib
import struct

import numpy as np
import tifffile

OUT = pathlib.Path(__file__).resolve().parent.parent / "crates/core/tests/fixtures/geotiff"

SCALE_TAG, TIEPOINT_TAG, GEOKEYS_TAG, NODATA_TAG = 33550, 33922, 34735, 42113


def geotags(scale, tie, mercator=False, nodata=None):
    tags = [
        (SCALE_TAG, "d", 3, (scale[0], scale[1], 0.0), True),
        (TIEPOINT_TAG, "d", 6, (0.0, 0.0, 0.0, tie[0], tie[1], 0.0), True),
    ]
    if mercator:
        keys = (1, 1, 0, 2, 1024, 0, 1, 1, 3072, 0, 1, 3395)
    else:
        keys = (1, 1, 0, 2, 1024, 0, 1, 2, 2048, 0, 1, 4326)
    tags.append((GEOKEYS_TAG, "H", len(keys), keys, True))
    if nodata is not None:
        tags.append((NODATA_TAG, "s", 0, repr(float(nodata)) if nodata % 1 else str(int(nodata)), True))
    return tags


def values(dtype, shape, rng):
    if dtype == np.float32:
        return (rng.standard_normal(shape) * 40.0 + 20.0).astype(np.float32)
    info = np.iinfo(dtype)
    return rng.integers(info.min, int(info.max) + 1, size=shape, dtype=np.int64).astype(dtype)


def write(name, planes, planar, byteorder, tile, compression, tags, predictor=None):
    """planes: (bands, height, width) array."""
    bands = planes.shape[0]
    if bands == 1:
        data = planes[0]
        planarconfig = None
    elif planar == "separate":
        data = planes
        planarconfig = "separate"
    else:
        data = np.moveaxis(planes, 0, -1)
        planarconfig = "contig"
    kwargs = dict(byteorder=byteorder, photometric="minisblack", compression=compression, extratags=tags,
                  metadata=None)
    if planarconfig:
        kwargs["planarconfig"] = planarconfig
    if tile:
        kwargs["tile"] = tile
    else:
        kwargs["rowsperstrip"] = 5
    if predictor:
        kwargs["predictor"] = predictor
    tifffile.imwrite(OUT / name, data, **kwargs)


def entry(planes, scale, tie, crs, nodata):
    return {
        "width": int(planes.shape[2]),
        "height": int(planes.shape[1]),
        "pixel_scale": list(scale),
        "tiepoint": list(tie),
        "crs": crs,
        "nodata": nodata,
        "bands": [[float(v) for v in band.ravel()] for band in planes],
    }


def patch_compression(path, code):
    """Rewrites the Compression tag value in place."""
    with tifffile.TiffFile(path) as tif:
        tag = tif.pages[0].tags["Compression"]
        offset = tag.valueoffset
        order = tif.byteorder
    raw = bytearray(path.read_bytes())
    raw[offset:offset + 2] = struct.pack(order + "H", code)
    path.write_bytes(bytes(raw))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240611)
    expected = {}
    dtypes = {"u8": np.uint8, "u16": np.uint16, "i16": np.int16, "f32": np.float32}
    width, height, bands = 19, 13, 3
    matrix = itertools.product(["<", ">"], ["strip", "tile"], [None, "zlib"], dtypes.items(), ["contig", "separate"])
    for byteorder, layout, compression, (tname, dtype), planar in matrix:
        name = "m_{}_{}_{}_{}_{}.tif".format("le" if byteorder == "<" else "be", layout,
                                             compression or "none", tname, planar)
        planes = values(dtype, (bands, height, width), rng)
        scale, tie = (30.0, 30.0), (-8240000.0, 4960000.0)
        write(name, planes, planar, byteorder, (16, 16) if layout == "tile" else None, compression,
              geotags(scale, tie, mercator=True))
        expected[name] = entry(planes, scale, tie, "mercator-3395", None)

    for tname in ["u8", "u16", "i16"]:
        name = f"predictor_{tname}.tif"
        planes = values(dtypes[tname], (2, height, width), rng)
        scale, tie = (0.001, 0.001), (-74.02, 40.80)
        write(name, planes, "contig", "<", None, "zlib", geotags(scale, tie), predictor=2)
        expected[name] = entry(planes, scale, tie, "geographic-wgs84", None)

    planes = np.arange(1, 5, dtype=np.uint8).reshape(1, 2, 2)
    write("u8_2x2.tif", planes, "contig", "<", None, None, geotags((10.0, 10.0), (0.0, 20.0), mercator=True))
    expected["u8_2x2.tif"] = entry(planes, (10.0, 10.0), (0.0, 20.0), "mercator-3395", None)

    planes = (rng.standard_normal((24, 40, 32)) * 3.0 + 28.0).astype(np.float32)
    planes[:, 0, 0] = -9999.0
    scale, tie = (90.0, 90.0), (-8242000.0, 4962000.0)
    write("heat_24band_f32.tif", planes, "separate", "<", (16, 16), "zlib",
          geotags(scale, tie, mercator=True, nodata=-9999.0))
    expected["heat_24band_f32.tif"] = entry(planes, scale, tie, "mercator-3395", -9999.0)

    planes = values(np.uint16, (1, 8, 8), rng)
    write("lzw_u16.tif", planes, "contig", "<", None, None, geotags((1.0, 1.0), (0.0, 8.0)))
    patch_compression(OUT / "lzw_u16.tif", 5)
    expected["lzw_u16.tif"] = {"error": "UnsupportedCompression", "code": 5}

    planes = values(np.uint8, (1, 4, 4), rng)
    tifffile.imwrite(OUT / "no_geotags.tif", planes[0], photometric="minisblack", metadata=None)
    expected["no_geotags.tif"] = {"error": "MissingGeoTags"}

    with open(OUT / "expected.json", "w") as fh:
        json.dump(expected, fh, separators=(",", ":"))
        fh.write("\n")
    print(f"wrote {len(expected)} fixtures to {OUT}")


if __name__ == "__main__":
    main()
