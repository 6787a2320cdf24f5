"""Compare the compiled and pure-numpy kernel backends.

Usage: python benchmarks/bench_backends.py [--reps 5] [--json out.json]
"""

import argparse
import json
import time

import numpy as np

from sipolar import _backend, codec, construct, dist


def _best(fn, reps):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def run(reps=5, seed=0):
    rng = np.random.default_rng(seed)
    s = dist.bsc_source(0.11)
    table = codec.LlrTable(s)
    cases = []
    for n in (10, 12, 14):
        code = construct.select_indices(construct.bound_construct(s, n), rate=0.6)
        x = rng.integers(0, 2, (64, code.N), dtype=np.uint8)
        y = x ^ (rng.random(x.shape) < 0.11)
        llr = table.lookup(y)
        payload = codec.compress_batch(x, code)
        cases.append((f"sc_decode N=2^{n} single", lambda k, c=code, l=llr, p=payload: codec.sc_decode(l[0], c, p[0], kernels=k), 1))
        cases.append((f"sc_decode N=2^{n} batch64", lambda k, c=code, l=llr, p=payload: codec.sc_decode(l, c, p, kernels=k), 64))
        cases.append((f"transform N=2^{n} batch64", lambda k, xx=x: codec.polar_transform(xx, kernels=k), 64))
    for n, k in ((8, 32), (10, 64)):
        cases.append((f"construct n={n} k={k}", lambda kern, n=n, k=k: construct.construct_degraded(s, n, k, kernels=kern), 1))

    backends = _backend.available()
    rows = []
    for name, fn, blocks in cases:
        row = {"case": name}
        for b in backends:
            row[b] = _best(lambda: fn(_backend.get_kernels(b)), reps)
        if "compiled" in row:
            row["speedup"] = row["python"] / row["compiled"]
        rows.append(row)
    return backends, rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--json", help="also write the rows here")
    args = ap.parse_args()
    backends, rows = run(args.reps)
    print(f"{'case':32s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if "compiled" in backends else ""))
    for r in rows:
        line = f"{r['case']:32s}" + "".join(f"{r[b] * 1e3:10.2f}ms" for b in backends)
        if "speedup" in r:
            line += f"{r['speedup']:11.2f}x"
        print(line)
    if args.json:
        with open(args.json, "w") as f:
            json.dump(rows, f, indent=1)


if __name__ == "__main__":
    main()
