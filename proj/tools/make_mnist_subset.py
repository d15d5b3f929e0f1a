#!/usr/bin/env python3
"""Write a small MNIST subset as standard IDX files.

The source is the 5000-image MNIST sample (500 per digit) that ships inside
the mlxtend wheel as ``mlxtend/data/data/mnist_5k.csv.gz``. Each digit is
split 400/100 into train/test, and both sets are shuffled with a fixed seed,
so the output is byte-for-byte reproducible.

    pip download --no-deps mlxtend -d /tmp/mlx
    python3 tools/make_mnist_subset.py /tmp/mlx/mlxtend-*.whl data/mnist-5k
"""

import argparse
import gzip
import io
import pathlib
import struct
import zipfile

import numpy as np

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def read_source(path: pathlib.Path) -> tuple[np.ndarray, np.ndarray]:
    if path.suffix == ".whl":
        with zipfile.ZipFile(path) as wheel:
            raw = wheel.read(MEMBER)
    else:
        raw = path.read_bytes()
    table = np.loadtxt(io.BytesIO(gzip.decompress(raw)), delimiter=",")
    images = table[:, :-1].astype(np.uint8)
    labels = table[:, -1].astype(np.uint8)
    return images, labels


def write_idx(path: pathlib.Path, array: np.ndarray, magic: int) -> None:
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", d) for d in array.shape)
    # mtime=0 keeps the gzip bytes stable across runs.
    with open(path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as out:
        out.write(header + array.tobytes())


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("source", type=pathlib.Path, help="mlxtend wheel or mnist_5k.csv.gz")
    parser.add_argument("out_dir", type=pathlib.Path)
    parser.add_argument("--test-per-class", type=int, default=100)
    parser.add_argument("--seed", type=int, default=20151231)
    args = parser.parse_args()

    images, labels = read_source(args.source)
    rng = np.random.default_rng(args.seed)
    train_idx, test_idx = [], []
    for digit in range(10):
        idx = rng.permutation(np.flatnonzero(labels == digit))
        test_idx.extend(idx[: args.test_per_class])
        train_idx.extend(idx[args.test_per_class :])
    train_idx = rng.permutation(np.array(train_idx))
    test_idx = rng.permutation(np.array(test_idx))

    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, idx in (("train", train_idx), ("t10k", test_idx)):
        write_idx(args.out_dir / f"{name}-images-idx3-ubyte.gz",
                  images[idx].reshape(-1, 28, 28), 0x00000803)
        write_idx(args.out_dir / f"{name}-labels-idx1-ubyte.gz", labels[idx], 0x00000801)
        print(f"{name}: {len(idx)} samples")


if __name__ == "__main__":
    main()
