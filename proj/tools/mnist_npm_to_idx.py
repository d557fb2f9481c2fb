#!/usr/bin/env python3
"""Convert the digit JSON files shipped in the npm `mnist` package to IDX files.

The package stores 10,000 MNIST digits as 784-float rows normalized by 255 and
rounded to three decimals, which is enough to recover the original bytes.

Usage: mnist_npm_to_idx.py PACKAGE_DIR OUT_DIR [--test-fraction 0.2] [--seed 7]

Writes train-images-idx3-ubyte, train-labels-idx1-ubyte, t10k-images-idx3-ubyte
and t10k-labels-idx1-ubyte. The per-digit split is stratified and the final
ordering is shuffled with a fixed seed so the output is reproducible.
"""
import argparse
import json
import pathlib
import random
import struct


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("package_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--test-fraction", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    digits_dir = pathlib.Path(args.package_dir) / "src" / "digits"
    train, test = [], []
    for digit in range(10):
        raw = json.loads((digits_dir / f"{digit}.json").read_text())["data"]
        count = len(raw) // 784
        samples = []
        for i in range(count):
            row = raw[i * 784:(i + 1) * 784]
            samples.append(([min(255, max(0, round(v * 255))) for v in row], digit))
        n_test = round(count * args.test_fraction)
        test.extend(samples[:n_test])
        train.extend(samples[n_test:])

    rng = random.Random(args.seed)
    rng.shuffle(train)
    rng.shuffle(test)

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_images(out / "train-images-idx3-ubyte", [s[0] for s in train])
    write_labels(out / "train-labels-idx1-ubyte", [s[1] for s in train])
    write_images(out / "t10k-images-idx3-ubyte", [s[0] for s in test])
    write_labels(out / "t10k-labels-idx1-ubyte", [s[1] for s in test])
    print(f"train={len(train)} test={len(test)} -> {out}")


if __name__ == "__main__":
    main()
