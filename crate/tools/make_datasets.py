#!/usr/bin/env python3
"""Build the bundled benchmark datasets.

Writes an MNIST-shaped image set derived from scikit-learn's digits under
data/digits/ (gzipped IDX files with the usual names) and three tabular
CSV + schema pairs under data/tabular/. Every step is deterministic: the
split takes the last fifth of each class, the upscale is nearest-neighbor,
and the train-side augmentation is a fixed list of pixel shifts.
"""

import gzip
import json
import math
import struct
from pathlib import Path

import numpy as np
from sklearn.datasets import load_breast_cancer, load_diabetes, load_digits, load_wine

ROOT = Path(__file__).resolve().parents[1]
SHIFTS = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (2, 0), (0, 2)]


def upscale_28(flat):
    """8x8 grayscale (0..16) to 28x28 uint8: x3 nearest-neighbor, 2px pad."""
    img = np.round(flat.reshape(8, 8) * 255.0 / 16.0).astype(np.uint8)
    big = np.kron(img, np.ones((3, 3), dtype=np.uint8))
    return np.pad(big, 2)


def write_gz(path, payload):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as raw:
        with gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as f:
            f.write(payload)


def write_idx(dirpath, stem, images, labels):
    n = len(images)
    header = struct.pack(">IIII", 0x803, n, 28, 28)
    write_gz(dirpath / f"{stem}-images-idx3-ubyte.gz", header + images.tobytes())
    header = struct.pack(">II", 0x801, n)
    write_gz(dirpath / f"{stem}-labels-idx1-ubyte.gz", header + labels.tobytes())


def make_digits():
    data = load_digits()
    images = np.stack([upscale_28(x) for x in data.data])
    labels = data.target.astype(np.uint8)

    test_mask = np.zeros(len(labels), dtype=bool)
    for c in range(10):
        idx = np.flatnonzero(labels == c)
        test_mask[idx[-math.ceil(0.2 * len(idx)):]] = True

    train_imgs, train_labels = images[~test_mask], labels[~test_mask]
    aug_imgs = np.concatenate(
        [np.roll(train_imgs, s, axis=(1, 2)) for s in SHIFTS]
    )
    aug_labels = np.tile(train_labels, len(SHIFTS))

    out = ROOT / "data" / "digits"
    write_idx(out, "train", aug_imgs, aug_labels)
    write_idx(out, "t10k", images[test_mask], labels[test_mask])
    print(f"digits: {len(aug_imgs)} train / {int(test_mask.sum())} test -> {out}")


def write_tabular(name, bunch, task):
    out = ROOT / "data" / "tabular"
    out.mkdir(parents=True, exist_ok=True)
    names = [str(f) for f in bunch.feature_names]
    lines = [",".join(names + ["target"])]
    for row, y in zip(bunch.data, bunch.target):
        cells = [repr(float(v)) for v in row]
        cells.append(str(int(y)) if task == "classification" else repr(float(y)))
        lines.append(",".join(cells))
    (out / f"{name}.csv").write_text("\n".join(lines) + "\n")

    schema = {
        "name": name,
        "task": task,
        "target": "target",
        "columns": [{"name": f} for f in names],
        "missing_marker": None,
    }
    (out / f"{name}.schema.json").write_text(json.dumps(schema, indent=2) + "\n")
    print(f"{name}: {bunch.data.shape[0]} rows x {bunch.data.shape[1]} features")


def main():
    make_digits()
    write_tabular("wine", load_wine(), "classification")
    write_tabular("cancer", load_breast_cancer(), "classification")
    write_tabular("diabetes", load_diabetes(), "regression")


if __name__ == "__main__":
    main()
