#!/usr/bin/env python3
"""Unpack a CSR-style .npz graph (adj_*, attr_*, labels) into the raw inputs
of `pprgo convert`: an edge list and a features directory.

    python3 tools/npz_to_container.py pubmed.npz raw/pubmed
    pprgo convert --edges raw/pubmed/edges.txt --features raw/pubmed/features \
        --dims $(cat raw/pubmed/dims) --out data/pubmed
"""

import argparse
from pathlib import Path

import numpy as np


def csr(npz, prefix):
    return (np.asarray(npz[f"{prefix}_indptr"]), np.asarray(npz[f"{prefix}_indices"]),
            np.asarray(npz[f"{prefix}_data"]), tuple(npz[f"{prefix}_shape"]))


def attributes(npz, n):
    if "attr_indptr" in npz:
        indptr, indices, data, shape = csr(npz, "attr")
        return indptr, indices, data, int(shape[1])
    if "attr_matrix" in npz:
        dense = np.asarray(npz["attr_matrix"])
        rows, cols = np.nonzero(dense)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        return np.cumsum(indptr), cols, dense[rows, cols], dense.shape[1]
    raise SystemExit("no attributes (attr_* or attr_matrix) in input")


def labels_of(npz, n):
    if "labels" in npz:
        labels = np.asarray(npz["labels"])
        if labels.ndim == 2:
            labels = labels.argmax(axis=1)
        return labels
    if "labels_indptr" in npz:
        indptr, indices, _, _ = csr(npz, "labels")
        if np.any(np.diff(indptr) != 1):
            raise SystemExit("multi-label or unlabeled nodes are not supported")
        return indices
    raise SystemExit("no labels in input")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("npz")
    ap.add_argument("out")
    args = ap.parse_args()

    npz = np.load(args.npz, allow_pickle=False)
    indptr, indices, _, shape = csr(npz, "adj")
    n = int(shape[0])
    out = Path(args.out)
    (out / "features").mkdir(parents=True, exist_ok=True)

    rows = np.repeat(np.arange(n), np.diff(indptr))
    np.savetxt(out / "edges.txt", np.stack([rows, indices], axis=1), fmt="%d")

    f_indptr, f_indices, f_values, dims = attributes(npz, n)
    (out / "features" / "feat_indptr.u64").write_bytes(np.asarray(f_indptr, dtype="<u8").tobytes())
    (out / "features" / "feat_indices.u32").write_bytes(np.asarray(f_indices, dtype="<u4").tobytes())
    (out / "features" / "feat_values.f32").write_bytes(np.asarray(f_values, dtype="<f4").tobytes())
    (out / "features" / "labels.u32").write_bytes(np.asarray(labels_of(npz, n), dtype="<u4").tobytes())
    (out / "dims").write_text(f"{dims}\n")
    print(f"{n} nodes, {len(indices)} directed edges, {dims} feature dims -> {out}")


if __name__ == "__main__":
    main()
