#!/usr/bin/env python3
"""Write the 5000-sample MNIST subset bundled with mlxtend as IDX ubyte files.

The subset is shuffled with a fixed seed and split into 4000 training and
1000 test samples:

    data/mnist5k/train-images-idx3-ubyte   train-labels-idx1-ubyte
    data/mnist5k/test-images-idx3-ubyte    test-labels-idx1-ubyte

Usage: python3 tools/make_mnist_subset.py [--out data/mnist5k] [--seed 0]
"""
import argparse
import os
import struct

import numpy as np


def write_images(path, images):
    n, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        f.write(images.astype(np.uint8).tobytes())


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="data/mnist5k")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--test", type=int, default=1000)
    args = parser.parse_args()

    from mlxtend.data import mnist_data

    X, y = mnist_data()
    order = np.random.default_rng(args.seed).permutation(len(y))
    X = X[order].reshape(-1, 28, 28)
    y = y[order]

    os.makedirs(args.out, exist_ok=True)
    n_train = len(y) - args.test
    write_images(os.path.join(args.out, "train-images-idx3-ubyte"), X[:n_train])
    write_labels(os.path.join(args.out, "train-labels-idx1-ubyte"), y[:n_train])
    write_images(os.path.join(args.out, "test-images-idx3-ubyte"), X[n_train:])
    write_labels(os.path.join(args.out, "test-labels-idx1-ubyte"), y[n_train:])
    print(f"wrote {n_train} train / {args.test} test samples to {args.out}")


if __name__ == "__main__":
    main()
