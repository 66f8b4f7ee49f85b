"""Compiled vs pure-Python kernels on a model Hamiltonian.

Run with ``python3 benchmarks/bench_kernels.py [L] [N]`` (defaults 14, 10).  The pure-Python
backend is timed in a subprocess with ``GAUGELAB_KERNELS=python``.
"""
import json
import os
import subprocess
import sys
import timeit

import numpy as np


def measure(L, N, repeat=5):
    from gaugelab import kernels
    from gaugelab.hilbert import LatticeSpec, enumerate_gauge_sector
    from gaugelab.models import ModelParams, build_hobm
    from gaugelab.operators import TermSum

    b = enumerate_gauge_sector(LatticeSpec.hobm(L, N), charge=0)
    H = build_hobm(b, ModelParams(1.0, 0.2, 0.2, N=N))
    x = np.random.default_rng(0).standard_normal(H.dim) + 0j
    out = np.empty_like(x)
    ts = TermSum([H.csr.tocoo(), H.csr.tocoo()], H.dim)
    c = np.array([0.5, 0.5j])
    n = 20
    t_mv = min(timeit.repeat(lambda: H.matvec(x, out), number=n, repeat=repeat)) / n
    t_ts = min(timeit.repeat(lambda: ts.matvec(c, x, out), number=n, repeat=repeat)) / n
    t_ex = min(timeit.repeat(lambda: H.expectation(x), number=n, repeat=repeat)) / n
    return {"backend": kernels.BACKEND, "dim": H.dim, "nnz": H.nnz,
            "matvec_s": t_mv, "termsum_s": t_ts, "expectation_s": t_ex}


def main():
    L = int(sys.argv[1]) if len(sys.argv) > 1 else 14
    N = int(sys.argv[2]) if len(sys.argv) > 2 else 10
    if os.environ.get("_BENCH_CHILD"):
        print(json.dumps(measure(L, N)))
        return
    rows = []
    for backend in ("", "python"):
        env = dict(os.environ, _BENCH_CHILD="1", GAUGELAB_KERNELS=backend)
        res = subprocess.run([sys.executable, __file__, str(L), str(N)], env=env,
                             capture_output=True, text=True, check=True)
        rows.append(json.loads(res.stdout.strip().splitlines()[-1]))
    print(f"L={L} N={N} dim={rows[0]['dim']} nnz={rows[0]['nnz']}")
    print(f"{'kernel':<14}" + "".join(f"{r['backend']:>14}" for r in rows) + f"{'speedup':>10}")
    for k in ("matvec_s", "termsum_s", "expectation_s"):
        a, b = rows[0][k], rows[1][k]
        print(f"{k:<14}{a * 1e3:>12.3f}ms{b * 1e3:>12.3f}ms{b / a:>10.2f}")


if __name__ == "__main__":
    main()
