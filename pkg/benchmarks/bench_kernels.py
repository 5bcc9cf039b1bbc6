"""Compare the numba and numpy backends of the VQ kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each backend runs in its own interpreter because the backend is fixed at
import time by VQSPK_DISABLE_NUMBA.
"""

import argparse
import json
import os
import subprocess
import sys

_WORKER = r"""
import json, sys, timeit
import numpy as np
from vqspk import _kernels
from vqspk.vq import train_codebook

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
x = rng.normal(size=(20000, 12))
cw = rng.normal(size=(8, 12))
feats = rng.normal(size=(2000, 12))
_kernels.nearest_codeword(x[:4], cw)          # warm up / compile
train_codebook(feats[:64])
out = {
    "backend": _kernels.BACKEND,
    "nearest_codeword 20000x12 vs 8": min(timeit.repeat(
        lambda: _kernels.nearest_codeword(x, cw), number=20, repeat=repeat)) / 20,
    "train_codebook 2000x12 -> 8": min(timeit.repeat(
        lambda: train_codebook(feats), number=3, repeat=repeat)) / 3,
}
print(json.dumps(out))
"""


def run_backend(disable, repeat):
    env = dict(os.environ, VQSPK_DISABLE_NUMBA="1" if disable else "0")
    proc = subprocess.run([sys.executable, "-c", _WORKER, str(repeat)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    fast = run_backend(False, args.repeat)
    slow = run_backend(True, args.repeat)
    print(f"{'case':34s} {fast['backend']:>12s} {slow['backend']:>12s} {'speedup':>8s}")
    for key in fast:
        if key == "backend":
            continue
        print(f"{key:34s} {fast[key] * 1e3:10.3f}ms {slow[key] * 1e3:10.3f}ms "
              f"{slow[key] / fast[key]:7.2f}x")


if __name__ == "__main__":
    main()
