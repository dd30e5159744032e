#!/usr/bin/env python3
"""Convert MATLAB hyperspectral scenes (cube + ground truth) to HSC1.

The standard research releases ship as .mat pairs, e.g.
Indian_pines_corrected.mat / Indian_pines_gt.mat. This helper packs them
into the toolkit's HSC1 container:

    python3 tools/convert_mat.py indian_pines_corrected.mat indian_pines_gt.mat \
        -o data/indian_pines.hsc --name indian_pines --classes indian_pines

Requires scipy and numpy.
"""

import argparse
import json
import struct
import sys

import numpy as np
import scipy.io

CLASS_NAMES = {
    "indian_pines": [
        "Alfalfa", "Corn-notill", "Corn-mintill", "Corn", "Grass-pasture",
        "Grass-trees", "Grass-pasture-mowed", "Hay-windrowed", "Oats",
        "Soybean-notill", "Soybean-mintill", "Soybean-clean", "Wheat",
        "Woods", "Buildings-Grass-Trees-Drives", "Stone-Steel-Towers",
    ],
    "pavia_university": [
        "Asphalt", "Meadows", "Gravel", "Trees", "Painted metal sheets",
        "Bare Soil", "Bitumen", "Self-Blocking Bricks", "Shadows",
    ],
}


def largest_array(mat, min_ndim):
    arrays = [v for k, v in mat.items()
              if not k.startswith("__") and isinstance(v, np.ndarray) and v.ndim >= min_ndim]
    if not arrays:
        raise SystemExit("no suitable array found in .mat file")
    return max(arrays, key=lambda a: a.size)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("cube_mat", help=".mat with the rows x cols x bands cube")
    parser.add_argument("gt_mat", help=".mat with the rows x cols ground-truth labels")
    parser.add_argument("-o", "--out", required=True, help="output .hsc path")
    parser.add_argument("--name", default="scene")
    parser.add_argument("--classes", choices=sorted(CLASS_NAMES), default=None,
                        help="use a known class-name table")
    args = parser.parse_args()

    cube = largest_array(scipy.io.loadmat(args.cube_mat), 3).astype(np.float32)
    labels = largest_array(scipy.io.loadmat(args.gt_mat), 2).astype(np.uint16)
    if cube.shape[:2] != labels.shape:
        raise SystemExit(f"cube {cube.shape} and labels {labels.shape} disagree spatially")

    n_classes = int(labels.max())
    if args.classes:
        class_names = CLASS_NAMES[args.classes]
        if n_classes > len(class_names):
            raise SystemExit(f"labels go up to {n_classes}, table has {len(class_names)}")
    else:
        class_names = [f"class_{k}" for k in range(1, n_classes + 1)]

    rows, cols, bands = cube.shape
    header = json.dumps(
        {"name": args.name, "rows": rows, "cols": cols, "bands": bands,
         "class_names": class_names},
        ensure_ascii=False, separators=(",", ":"), sort_keys=True,
    ).encode("utf-8")

    with open(args.out, "wb") as out:
        out.write(b"HSC1")
        out.write(struct.pack("<I", len(header)))
        out.write(header)
        out.write(np.ascontiguousarray(cube, dtype="<f4").tobytes())
        out.write(np.ascontiguousarray(labels, dtype="<u2").tobytes())

    counts = np.bincount(labels.ravel(), minlength=n_classes + 1)
    print(f"wrote {args.out}: {rows}x{cols}x{bands}, "
          f"{int(counts[1:].sum())} labeled pixels, {n_classes} classes")
    for k in range(1, n_classes + 1):
        print(f"  {class_names[k - 1]}: {counts[k]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
