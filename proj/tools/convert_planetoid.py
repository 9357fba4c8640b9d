#!/usr/bin/env python3
# Copyright 2026 The EdgeVeil Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Converts Planetoid citation data (ind.<name>.{x,y,tx,ty,allx,ally,graph,
test.index}) into an edgeveil dataset directory with the standard split:
20 labelled nodes per class for training, the next 500 for validation and
the 1000 listed test nodes.

    python3 tools/convert_planetoid.py --raw planetoid/data --name cora --out data/cora
"""

import argparse
import json
import os
import pickle
import sys

import numpy as np
import scipy.sparse as sp


def load(raw, name, part):
    path = os.path.join(raw, f"ind.{name}.{part}")
    if part == "test.index":
        with open(path) as f:
            return [int(line) for line in f if line.strip()]
    with open(path, "rb") as f:
        return pickle.load(f, encoding="latin1")


def convert(raw, name, out):
    x, y, tx, ty, allx, ally, graph = (
        load(raw, name, p) for p in ("x", "y", "tx", "ty", "allx", "ally", "graph"))
    test_index = load(raw, name, "test.index")
    test_sorted = sorted(test_index)

    # Citeseer has test ids without features; pad them with zero rows.
    span = range(test_sorted[0], test_sorted[-1] + 1)
    tx_full = sp.lil_matrix((len(span), tx.shape[1]))
    ty_full = np.zeros((len(span), ty.shape[1]))
    tx_full[np.array(test_sorted) - test_sorted[0], :] = tx
    ty_full[np.array(test_sorted) - test_sorted[0], :] = ty

    features = sp.vstack((allx, tx_full)).tolil()
    features[test_index, :] = features[test_sorted, :]
    labels = np.vstack((ally, ty_full))
    labels[test_index, :] = labels[test_sorted, :]
    n = features.shape[0]

    edges = set()
    for u, neighbours in graph.items():
        for v in neighbours:
            if u != v and u < n and v < n:
                edges.add((min(u, v), max(u, v)))

    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "edges.tsv"), "w") as f:
        for u, v in sorted(edges):
            f.write(f"{u}\t{v}\n")
    dense = features.toarray()
    with open(os.path.join(out, "features.csv"), "w") as f:
        for row in dense:
            f.write(",".join(repr(float(v)) if v % 1 else str(int(v)) for v in row) + "\n")
    with open(os.path.join(out, "labels.txt"), "w") as f:
        for row in labels:
            f.write(f"{int(np.argmax(row))}\n")
    splits = {
        "train": list(range(len(y))),
        "val": list(range(len(y), len(y) + 500)),
        "test": test_sorted,
    }
    with open(os.path.join(out, "splits.json"), "w") as f:
        json.dump(splits, f)
    print(f"{name}: {n} nodes, {len(edges)} edges, {features.shape[1]} features -> {out}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--raw", required=True, help="directory with the ind.* files")
    parser.add_argument("--name", default="cora")
    parser.add_argument("--out", required=True)
    args = parser.parse_args()
    try:
        convert(args.raw, args.name, args.out)
    except FileNotFoundError as e:
        sys.exit(f"convert_planetoid: {e}")


if __name__ == "__main__":
    main()
