#!/usr/bin/env python3
# Copyright 2026 The finfl Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Builds the bundled 2000-image MNIST subset in IDX format.

Source: the `mnist` npm package (MIT), which ships MNIST digits as JSON
arrays of 784 intensities in [0, 1] under src/digits/<label>.json.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/make_mnist_subset.py package/src/digits data/mnist-2k

Takes the first `per_class` digits of each class, shuffles them with a fixed
seed and writes train-images-idx3-ubyte / train-labels-idx1-ubyte.
"""

import argparse
import json
import pathlib
import random
import struct


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir", type=pathlib.Path)
    ap.add_argument("out_dir", type=pathlib.Path)
    ap.add_argument("--per-class", type=int, default=200)
    ap.add_argument("--seed", type=int, default=20260101)
    args = ap.parse_args()

    items = []
    for label in range(10):
        flat = json.loads((args.digits_dir / f"{label}.json").read_text())["data"]
        count = len(flat) // 784
        if count < args.per_class:
            raise SystemExit(f"class {label} has only {count} digits")
        for k in range(args.per_class):
            pixels = bytes(round(v * 255) for v in flat[784 * k : 784 * (k + 1)])
            items.append((pixels, label))
    random.Random(args.seed).shuffle(items)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    with open(args.out_dir / "train-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(items), 28, 28))
        for pixels, _ in items:
            f.write(pixels)
    with open(args.out_dir / "train-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(items)))
        f.write(bytes(label for _, label in items))


if __name__ == "__main__":
    main()
