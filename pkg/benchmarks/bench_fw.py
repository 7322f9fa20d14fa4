"""Time the compiled Frank-Wolfe kernel against the numpy fallback.

Both kernels run the same fixed number of steps from the same start on
lifted clouds of several sizes; the script checks that they agree and
prints per-step times and the speedup.

    python benchmarks/bench_fw.py [--steps N] [--repeat R]
"""
import argparse
import time

import numpy as np

from dvoretzky_frames import _kernels
from dvoretzky_frames.barvinok import dual_sphere_samples, lift_cloud
from dvoretzky_frames.lowner import _leverages
from dvoretzky_frames.norms import SmoothRandom


def start_state(P):
    u = np.full(len(P), 1.0 / len(P))
    X, _, g = _leverages(P, u)
    Xinv = np.linalg.inv(X)
    return u, 0.5 * (Xinv + Xinv.T), np.ascontiguousarray(g)


def time_kernel(fw, P, steps, repeat):
    best, result = np.inf, None
    for _ in range(repeat):
        u, Xinv, g = start_state(P)
        t0 = time.perf_counter()
        it, ep, em = fw(P, u, Xinv, g, 0.0, steps)
        best = min(best, time.perf_counter() - t0)
        result = (u, it, ep, em)
    return best, result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernels.BACKEND != "cython":
        raise SystemExit("compiled kernel not available; build with "
                         "`pip install --no-build-isolation -e .`")
    kernels = {"python": _kernels.get_fw_iterate("python"),
               "cython": _kernels.get_fw_iterate("cython")}
    print(f"{'d':>3} {'points':>7} {'dim':>4} {'python ms':>10} {'cython ms':>10} "
          f"{'speedup':>8} {'max |du|':>9}")
    for d, m in [(3, 256), (5, 512), (7, 1024), (9, 2048)]:
        P = lift_cloud(dual_sphere_samples(SmoothRandom(2, 0), m, 0), d).representatives
        times, results = {}, {}
        for name, fw in kernels.items():
            times[name], results[name] = time_kernel(fw, P, args.steps, args.repeat)
        diff = np.abs(results["python"][0] - results["cython"][0]).max()
        print(f"{d:>3} {len(P):>7} {P.shape[1]:>4} {1e3 * times['python']:>10.1f} "
              f"{1e3 * times['cython']:>10.1f} {times['python'] / times['cython']:>8.1f} "
              f"{diff:>9.1e}")


if __name__ == "__main__":
    main()
