#!/usr/bin/env python3
"""Writes the 8x8 handwritten-digit set bundled with scikit-learn as IDX files.

Pixel intensities (0..16) are rescaled to 0..255. A fixed permutation splits
the 1797 samples into 1297 training and 500 test images.
"""
import argparse
import pathlib
import struct

import numpy as np
from sklearn.datasets import load_digits


def write_idx(path, array, magic):
    with open(path, "wb") as f:
        f.write(struct.pack(">I", magic))
        for d in array.shape:
            f.write(struct.pack(">I", d))
        f.write(array.astype(np.uint8).tobytes())


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="data/digits")
    parser.add_argument("--test-size", type=int, default=500)
    args = parser.parse_args()

    digits = load_digits()
    images = np.rint(digits.images * (255.0 / 16.0)).clip(0, 255).astype(np.uint8)
    labels = digits.target.astype(np.uint8)
    order = np.random.RandomState(20240601).permutation(len(labels))
    test, train = order[: args.test_size], order[args.test_size :]

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, idx in (("train", train), ("test", test)):
        write_idx(out / f"{name}-images.idx3-ubyte", images[idx], 0x00000803)
        write_idx(out / f"{name}-labels.idx1-ubyte", labels[idx], 0x00000801)
        print(f"{name}: {len(idx)} samples")


if __name__ == "__main__":
    main()
