"""Wall-clock comparison of the compiled and pure-Python slot loops.

Usage: ``python benchmarks/bench_kernels.py [--slots N] [--repeat R]``.
Both backends run the same simulated trajectories; the script checks that
their summaries agree before reporting slots per second.
"""
import argparse
import time

from rispf import kernels
from rispf.config import preset
from rispf.simulate import run_trajectory

CASES = {
    "theory-pf": lambda n: preset("theory", n_slots=n, tc_slots=(1000.0,)),
    "theory-genie": lambda n: preset("theory", n_slots=n, scheduler="genie", tc_slots=(1000.0,)),
    "nr-pf": lambda n: preset("heatmap", n_slots=n),
}


def bench(cfg, backend, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        _, s = run_trajectory(cfg, (1, 0), backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, s


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--slots", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}; slots per run: {args.slots}")
    print(f"{'case':<14}" + "".join(f"{b + ' (s)':>14}" for b in backends) + f"{'speedup':>10}")
    for name, make in CASES.items():
        cfg = make(args.slots)
        times, sums = zip(*(bench(cfg, b, args.repeat) for b in backends))
        if len(sums) == 2 and sums[0].mean_throughput != sums[1].mean_throughput:
            raise SystemExit(f"{name}: backends disagree")
        speed = f"{times[-1] / times[0]:>9.1f}x" if len(times) == 2 else ""
        print(f"{name:<14}" + "".join(f"{t:>14.4f}" for t in times) + speed)


if __name__ == "__main__":
    main()
