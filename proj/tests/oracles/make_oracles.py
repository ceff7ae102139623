"""Recomputes the pinned test vectors with hashlib, numpy and scipy only.

Run from the repository root:  python3 tests/oracles/make_oracles.py
The output, tests/oracles/oracles.json, is checked in and read by the
C++ unit tests.
"""

import hashlib
import json
import math
import struct
from pathlib import Path

import numpy as np
from scipy.spatial.distance import jensenshannon

ROOT = Path(__file__).resolve().parents[2]


def sha(b):
    return hashlib.sha256(b).digest()


def le64(i):
    return struct.pack("<Q", i)


def f32(x):
    return struct.pack("<f", x)


def round32(x):
    return struct.unpack("<f", struct.pack("<f", x))[0]


def merkle_root(values):
    n = len(values)
    size = 1
    while size < n:
        size *= 2
    level = [sha(b"\x00" + le64(i) + v) for i, v in enumerate(values)]
    level += [sha(b"\x00" + le64(i)) for i in range(n, size)]
    while len(level) > 1:
        level = [sha(b"\x01" + level[i] + level[i + 1]) for i in range(0, len(level), 2)]
    return level[0].hex()


def load_model(name):
    return json.loads((ROOT / "fixtures" / name).read_text())


def fan_in_rows(model):
    rows = []
    for layer in model["layers"]:
        w = layer["weights"]
        for j in range(len(w[0])):
            row = [w[i][j] for i in range(len(w))]
            if model["has_bias"]:
                row.append(layer["bias"][j])
            rows.append(row)
    return rows


def act(name, x):
    if name == "relu":
        return x if x > 0.0 else 0.0
    if name == "sigmoid":
        return 1.0 / (1.0 + math.exp(-x))
    return x


def evaluate(model, q):
    values = [round32(x) for x in q]
    prev = list(values)
    for li, layer in enumerate(model["layers"]):
        w = layer["weights"]
        cur = []
        for j in range(len(w[0])):
            acc = 0.0
            for i in range(len(w)):
                acc += round32(w[i][j]) * prev[i]
            if model["has_bias"]:
                acc += round32(layer["bias"][j])
            cur.append(round32(act(model["activation"][li], acc)))
        values += cur
        prev = cur
    return values


def hashed_entries(values):
    n_real = len(values)
    n = 1
    while n < max(n_real - 1, 1):
        n *= 2
    prefix = sha(b"")
    out = []
    for k in range(n + 1):
        a = values[k] if k < n_real else 0.0
        out.append(f32(a) + prefix)
        prefix = sha(prefix + f32(a))
    return out


class Stream:
    def __init__(self, rho, sid):
        self.rho, self.sid, self.block, self.buf = rho, sid, 0, b""

    def u32(self):
        if len(self.buf) < 4:
            self.buf = sha(self.rho + le64(self.sid) + le64(self.block))
            self.block += 1
        v = struct.unpack("<I", self.buf[:4])[0]
        self.buf = self.buf[4:]
        return v

    def uniform(self, bound):
        if bound == 1:
            return 0
        limit = (1 << 32) - (1 << 32) % bound
        while True:
            x = self.u32()
            if x < limit:
                return x % bound


def paths(widths, rho, count):
    out = []
    for p in range(count):
        s = Stream(rho, p)
        nodes = [s.uniform(widths[-1])]
        for l in range(len(widths) - 2, -1, -1):
            nodes.append(s.uniform(widths[l]))
        out.append(nodes)
    return out


def js(p, q, bins=50, eps=1e-12):
    lo, hi = min(p.min(), q.min()), max(p.max(), q.max())
    hp = np.histogram(p, bins=bins, range=(lo, hi))[0] + eps
    hq = np.histogram(q, bins=bins, range=(lo, hi))[0] + eps
    return float(jensenshannon(hp, hq, base=2) ** 2)


def main():
    out = {}
    out["single_leaf"] = {"values": ["010203"], "root": merkle_root([bytes([1, 2, 3])])}
    two = [f32(1.0), f32(-2.5)]
    out["two_leaf"] = {"values": [v.hex() for v in two], "root": merkle_root(two)}
    five = [("v%d" % i).encode() for i in range(5)]
    out["five_leaf"] = {"values": [v.hex() for v in five], "root": merkle_root(five)}

    f1 = load_model("f1.json")
    rows = fan_in_rows(f1)
    out["f1_model"] = {"root": merkle_root([b"".join(f32(x) for x in r) for r in rows]), "length": len(rows)}
    q = [0.25, -0.5]
    trace = evaluate(f1, q)
    out["f1_trace"] = {
        "query": q,
        "bits": [struct.unpack("<I", f32(v))[0] for v in trace],
        "root": merkle_root([f32(v) for v in trace]),
    }
    entries = hashed_entries(trace)
    out["f1_hashed"] = {"entries": len(entries), "root": merkle_root(entries), "last_prefix": entries[-1][4:].hex()}

    iris = load_model("iris_model.json")
    scaled = np.loadtxt(ROOT / "fixtures" / "iris_scaled.csv", delimiter=",", skiprows=1)
    queries = [[float(x) for x in row[:-1]] for row in scaled[:5]]
    out["iris_traces"] = {
        "queries": queries,
        "bits": [[struct.unpack("<I", f32(v))[0] for v in evaluate(iris, qq)] for qq in queries],
    }
    out["iris_model"] = {"root": merkle_root([b"".join(f32(x) for x in r) for r in fan_in_rows(iris)])}

    rho = sha(b"vinf-challenge" + le64(42))
    out["paths"] = {"seed": 42, "rho": rho.hex(), "widths": [4, 64, 32, 3], "paths": paths([4, 64, 32, 3], rho, 5)}

    rng = np.random.default_rng(2024)
    p = rng.normal(0.0, 1.0, 400)
    qq = rng.normal(0.7, 1.3, 300)
    out["js"] = {"p": p.tolist(), "q": qq.tolist(), "bins": 50, "value": js(p, qq)}
    sample = rng.exponential(1.0, 37)
    probs = [0.0, 0.05, 0.25, 0.5, 0.9, 0.99, 1.0]
    out["quantile"] = {"sample": sample.tolist(), "p": probs, "value": [float(np.quantile(sample, x)) for x in probs]}

    (ROOT / "tests" / "oracles" / "oracles.json").write_text(json.dumps(out, indent=1) + "\n")


if __name__ == "__main__":
    main()
