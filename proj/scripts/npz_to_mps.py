#!/usr/bin/env python3
"""Convert scipy's linprog benchmark .npz files (c, A_ub, b_ub, A_eq, b_eq)
into free-format MPS.

Usage: npz_to_mps.py NAME.npz out.mps
"""
import sys

import numpy as np


def fmt(v):
    return repr(float(v))


def main(src, dst):
    d = np.load(src, allow_pickle=True)
    name = src.rsplit("/", 1)[-1].split(".")[0]
    c = np.asarray(d["c"], dtype=float)
    a_ub, b_ub = np.asarray(d["A_ub"]), np.asarray(d["b_ub"])
    a_eq, b_eq = np.asarray(d["A_eq"]), np.asarray(d["b_eq"])
    if d["bounds"].size:
        raise SystemExit("bounded problems are not supported")
    n = c.size
    rows = [("L", f"U{i}", a_ub[i], b_ub[i]) for i in range(a_ub.shape[0])]
    rows += [("E", f"Q{i}", a_eq[i], b_eq[i]) for i in range(a_eq.shape[0])]
    out = [f"NAME {name}", "ROWS", " N COST"]
    out += [f" {t} {r}" for t, r, _, _ in rows]
    out.append("COLUMNS")
    for j in range(n):
        if c[j] != 0.0:
            out.append(f" X{j} COST {fmt(c[j])}")
        for _, r, a, _ in rows:
            if a[j] != 0.0:
                out.append(f" X{j} {r} {fmt(a[j])}")
    out.append("RHS")
    out += [f" RHS {r} {fmt(b)}" for _, r, _, b in rows if b != 0.0]
    out.append("ENDATA")
    with open(dst, "w") as fh:
        fh.write("\n".join(out) + "\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
