#!/usr/bin/env python3
"""Independent radiomics reference used to freeze the oracle fixture.

Reads the tile/mask dump produced by the ignored test
`dump_radiomics_oracle_inputs`, recomputes the 29 features with
numpy/scikit-image, and writes the expected-value fixture consumed by the
acceptance suite.

Usage: radiomics_reference.py <dump.json> <fixture.json>
"""

import json
import sys

import numpy as np
from scipy.spatial.distance import pdist
from skimage import measure

BIN_WIDTH = 25.0
VARIANCE_FLOOR = 1e-12

FIRST_ORDER_NAMES = [
    "firstorder_Energy",
    "firstorder_TotalEnergy",
    "firstorder_Entropy",
    "firstorder_Minimum",
    "firstorder_10Percentile",
    "firstorder_90Percentile",
    "firstorder_Maximum",
    "firstorder_Mean",
    "firstorder_Median",
    "firstorder_InterquartileRange",
    "firstorder_Range",
    "firstorder_MeanAbsoluteDeviation",
    "firstorder_RobustMeanAbsoluteDeviation",
    "firstorder_RootMeanSquared",
    "firstorder_StandardDeviation",
    "firstorder_Skewness",
    "firstorder_Kurtosis",
    "firstorder_Variance",
    "firstorder_Uniformity",
]

SHAPE_NAMES = [
    "shape2D_MeshSurface",
    "shape2D_PixelSurface",
    "shape2D_Perimeter",
    "shape2D_PerimeterSurfaceRatio",
    "shape2D_Sphericity",
    "shape2D_SphericalDisproportion",
    "shape2D_MaximumDiameter",
    "shape2D_MajorAxisLength",
    "shape2D_MinorAxisLength",
    "shape2D_Elongation",
]


def first_order(vals):
    vals = np.asarray(vals, dtype=np.float64)
    n = vals.size
    energy = float(np.sum(vals ** 2))
    total_energy = energy  # spacing fixed at 1.0
    bins = np.floor(vals / BIN_WIDTH).astype(np.int64)
    _, counts = np.unique(bins, return_counts=True)
    p = counts / n
    entropy = float(-np.sum(p * np.log2(p)))
    uniformity = float(np.sum(p * p))
    mn, mx = float(vals.min()), float(vals.max())
    p10, p25, p50, p75, p90 = (float(v) for v in np.percentile(vals, [10, 25, 50, 75, 90]))
    mean = float(vals.mean())
    mad = float(np.abs(vals - mean).mean())
    sub = vals[(vals >= p10) & (vals <= p90)]
    rmad = float(np.abs(sub - sub.mean()).mean()) if sub.size else 0.0
    rms = float(np.sqrt((vals ** 2).mean()))
    var = float(((vals - mean) ** 2).mean())
    std = float(np.sqrt(var))
    if var < VARIANCE_FLOOR:
        skew = kurt = 0.0
    else:
        m3 = float(((vals - mean) ** 3).mean())
        m4 = float(((vals - mean) ** 4).mean())
        skew = m3 / var ** 1.5
        kurt = m4 / var ** 2
    return [
        energy, total_energy, entropy, mn, p10, p90, mx, mean, p50,
        p75 - p25, mx - mn, mad, rmad, rms, std, skew, kurt, var, uniformity,
    ]


def shape2d(mask):
    mask = np.asarray(mask, dtype=bool)
    padded = np.pad(mask.astype(float), 1)
    contours = measure.find_contours(padded, 0.5, fully_connected="low")
    perimeter = 0.0
    signed_area = 0.0
    verts = []
    for c in contours:
        d = np.diff(c, axis=0)
        perimeter += float(np.sum(np.sqrt((d ** 2).sum(axis=1))))
        x, y = c[:, 1], c[:, 0]
        signed_area += 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))
        verts.append(c)
    area = abs(signed_area)  # holes wind oppositely and cancel
    verts = np.vstack(verts)
    verts = np.unique(verts, axis=0)
    maxdiam = float(pdist(verts).max()) if len(verts) > 1 else 0.0
    pix = float(mask.sum())
    ratio = perimeter / area
    sph = 2.0 * np.sqrt(np.pi * area) / perimeter
    coords = np.argwhere(mask).astype(np.float64)
    if len(coords) == 1:
        major = minor = 0.0
        elong = 1.0
    else:
        cov = np.cov(coords.T, ddof=1)
        ev = np.linalg.eigvalsh(cov)
        lmin, lmaj = max(float(ev[0]), 0.0), max(float(ev[1]), 0.0)
        major = 4.0 * np.sqrt(lmaj)
        minor = 4.0 * np.sqrt(lmin)
        elong = float(np.sqrt(lmin / lmaj)) if lmaj > 0 else 1.0
    return [area, pix, perimeter, ratio, sph, 1.0 / sph, maxdiam, major, minor, elong]


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    with open(sys.argv[1]) as f:
        dump = json.load(f)
    fixture = {"feature_names": FIRST_ORDER_NAMES + SHAPE_NAMES, "tiles": []}
    for tile in dump["tiles"]:
        h, w = tile["height"], tile["width"]
        gray = np.array(tile["gray"], dtype=np.float64).reshape(h, w)
        mask = np.array(tile["mask"], dtype=np.int64).reshape(h, w).astype(bool)
        vals = gray[mask]
        features = first_order(vals) + shape2d(mask)
        fixture["tiles"].append({"id": tile["id"], "expected": features})
    with open(sys.argv[2], "w") as f:
        json.dump(fixture, f, indent=1)
    print(f"wrote {len(fixture['tiles'])} tiles -> {sys.argv[2]}")


if __name__ == "__main__":
    main()
