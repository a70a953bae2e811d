#!/usr/bin/env python3
"""Benchmark the compiled pixel kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--frames N]

Times the per-frame hot path (luma, foreground mask, ROI count, 32x32
features) at camera-like resolutions and reports per-frame latency plus the
sustainable frame rate for the full mask+features pipeline.
"""

import argparse
import time

import numpy as np

from handrub.kernels import pure

try:
    from handrub.kernels import _native as native
except ImportError:
    native = None


def bench(fn, args, n):
    fn(*args)  # warm up
    start = time.perf_counter()
    for _ in range(n):
        fn(*args)
    return (time.perf_counter() - start) / n


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--frames", type=int, default=50)
    args = parser.parse_args()

    if native is None:
        print("native kernels not built; showing pure backend only")

    rng = np.random.default_rng(0)
    for h, w in [(240, 320), (480, 640)]:
        rgb = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        mask = pure.foreground_mask(rgb, 240.0, 60.0)
        cases = [
            ("luma", lambda k: (k.luma_u8, (rgb,))),
            ("mask", lambda k: (k.foreground_mask, (rgb, 240.0, 60.0))),
            ("roi_count", lambda k: (k.roi_foreground_count, (mask, 0, 0, w, h))),
            ("gray32", lambda k: (k.gray32_features, (rgb,))),
        ]
        print(f"\n{w}x{h}, {args.frames} iterations")
        print(f"{'kernel':<10} {'pure ms':>9} {'native ms':>10} {'speedup':>8}")
        total = {"pure": 0.0, "native": 0.0}
        for name, case in cases:
            fn, fargs = case(pure)
            t_pure = bench(fn, fargs, args.frames) * 1000
            total["pure"] += t_pure
            if native is not None:
                fn, fargs = case(native)
                t_native = bench(fn, fargs, args.frames) * 1000
                total["native"] += t_native
                print(f"{name:<10} {t_pure:>9.3f} {t_native:>10.3f} {t_pure / t_native:>7.1f}x")
            else:
                print(f"{name:<10} {t_pure:>9.3f} {'-':>10} {'-':>8}")
        pipeline_pure = total["pure"]
        line = f"{'pipeline':<10} {pipeline_pure:>9.3f}"
        if native is not None:
            line += f" {total['native']:>10.3f} {pipeline_pure / total['native']:>7.1f}x"
            fps = 1000 / total["native"]
        else:
            fps = 1000 / pipeline_pure
        print(line)
        print(f"sustainable full-pipeline rate: {fps:,.0f} fps")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
