"""Compare the compiled and pure-Python metric kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Each case times the public metric function with ``backend=`` forced, so
the numbers include the numpy sort/windowing shared by both backends.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from eepeval import kernels
from eepeval.metrics import RiskTrajectory, auprc, auroc, flip_count, stability_Lc


def cases(rng: np.random.Generator):
    pos = rng.uniform(0, 1, 2_000)
    neg = rng.uniform(0, 1, 20_000)
    times = np.cumsum(rng.exponential(1 / 60, 5_000))  # ~1 probe per minute
    traj = RiskTrajectory("bench", tuple(times), tuple(rng.uniform(0, 1, times.size)), float(times[times.size // 2]))
    b = float(times[-1])
    return {
        "auroc  n=22000": lambda be: auroc(pos, neg, backend=be),
        "auprc  n=22000": lambda be: auprc(pos, neg, backend=be),
        "L_c    5000 probes": lambda be: stability_Lc(traj, b, 1 / 6, backend=be),
        "L_c    5000 probes, c=2h": lambda be: stability_Lc(traj, b, 2.0, backend=be),
        "flips  5000 probes": lambda be: flip_count(traj, b, 0.5, backend=be),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = sorted(kernels.BACKENDS)
    print(f"active backend: {kernels.BACKEND}")
    if "cython" not in backends:
        print("compiled extension not built; only the Python backend is timed")
    header = f"{'case':28s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) > 1 else "")
    print(header)
    for name, fn in cases(np.random.default_rng(0)).items():
        best = {}
        for be in backends:
            number = 1 if be == "python" else 10
            best[be] = min(timeit.repeat(lambda: fn(be), number=number, repeat=args.repeat)) / number
        line = f"{name:28s}" + "".join(f"{best[b] * 1e3:10.3f}ms" for b in backends)
        if len(backends) > 1:
            line += f"{best['python'] / best['cython']:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
