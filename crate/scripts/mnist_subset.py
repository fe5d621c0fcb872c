#!/usr/bin/env python3
"""Build the bundled MNIST subset as IDX files.

Source: the `mnist` npm package (MIT), which ships 10,000 MNIST digits as
per-class JSON arrays of pixel intensities divided by 255 and rounded to
three decimals. Rounding `v * 255` recovers the original byte exactly.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/mnist_subset.py package/src/digits data/mnist-subset
"""

import json
import struct
import sys
from pathlib import Path

import numpy as np

TRAIN = 8000
SEED = 20240101


def load(src: Path):
    images, labels = [], []
    for digit in range(10):
        flat = np.asarray(json.loads((src / f"{digit}.json").read_text())["data"], dtype=np.float64)
        pixels = np.rint(flat * 255.0).astype(np.uint8).reshape(-1, 28 * 28)
        images.append(pixels)
        labels.append(np.full(len(pixels), digit, dtype=np.uint8))
    return np.concatenate(images), np.concatenate(labels)


def write_idx(path: Path, array: np.ndarray):
    dims = array.shape
    magic = 0x0800 | len(dims)
    with path.open("wb") as f:
        f.write(struct.pack(">I", magic))
        for d in dims:
            f.write(struct.pack(">I", d))
        f.write(array.astype(np.uint8).tobytes())


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    images, labels = load(src)
    order = np.random.default_rng(SEED).permutation(len(labels))
    images, labels = images[order], labels[order]
    for name, sl in (("train", slice(0, TRAIN)), ("test", slice(TRAIN, None))):
        write_idx(out / f"{name}-images-idx3-ubyte", images[sl].reshape(-1, 28, 28))
        write_idx(out / f"{name}-labels-idx1-ubyte", labels[sl])
        print(name, len(labels[sl]), np.bincount(labels[sl], minlength=10).tolist())


if __name__ == "__main__":
    main()
