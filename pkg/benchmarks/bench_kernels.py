"""Compare the compiled and numpy triad kernels.

Usage: python3 benchmarks/bench_kernels.py [--cutoff K] [--eta ETA] [--repeat R]

Times the restricted accumulation over the near-resonant triad index and
the direct cube convolution, checks that both backends agree, and prints
one line per (kernel, backend).
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from nrbous import kernels
from nrbous.operators import OperatorContext
from nrbous.resonance import BandwidthSpec
from nrbous.spectral import DomainParams


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--cutoff", type=int, default=6)
    p.add_argument("--cube-cutoff", type=int, default=4, help="cutoff for the direct cube convolution")
    p.add_argument("--eta", type=float, default=2.5)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    avail = kernels.backends()
    dom = DomainParams(args.eta)
    ctx = OperatorContext(args.cutoff, dom, BandwidthSpec(1.0, 1.0, 1.2))
    lat = ctx.lattice
    offsets, kk, mm, flags = ctx._triads()
    rng = np.random.default_rng(0)
    u = rng.normal(size=(lat.size, 3, 3)) + 1j * rng.normal(size=(lat.size, 3, 3))
    v = rng.normal(size=(lat.size, 4, 4)) + 1j * rng.normal(size=(lat.size, 4, 4))
    print(f"restricted kernel: K={args.cutoff} eta={args.eta} triads={len(kk)}")
    ref = None
    for name, (acc, _) in sorted(avail.items()):
        out = np.zeros((lat.size, 4, 4), complex)

        def job():
            out[...] = 0
            acc(offsets, kk, mm, flags, ctx._kc, u, v, out)

        t = _best(job, args.repeat)
        if ref is None:
            ref = out.copy()
        diff = float(np.abs(out - ref).max())
        print(f"  {name:8s} {t * 1e3:9.2f} ms  {t / max(len(kk), 1) * 1e9:7.1f} ns/triad  max diff {diff:.2e}")

    cctx = OperatorContext(args.cube_cutoff, dom)
    clat = cctx.lattice
    uu = rng.normal(size=(clat.size, 3)) + 0j
    vv = rng.normal(size=(clat.size, 4)) + 0j
    print(f"direct cube convolution: K={args.cube_cutoff} modes={clat.size}")
    ref = None
    for name, (_, cube) in sorted(avail.items()):
        out = np.zeros((clat.size, 4), complex)

        def job():
            out[...] = 0
            cube(cctx.K, cctx._kc, uu, vv, out)

        t = _best(job, args.repeat)
        if ref is None:
            ref = out.copy()
        print(f"  {name:8s} {t * 1e3:9.2f} ms  max diff {float(np.abs(out - ref).max()):.2e}")
    t = _best(lambda: cctx.advect(uu, vv), args.repeat)
    print(f"  {'fft':8s} {t * 1e3:9.2f} ms  (dealiased transform path)")


if __name__ == "__main__":
    main()
