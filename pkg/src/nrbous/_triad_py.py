"""Pure numpy versions of the triad kernels in ``_triad.pyx``.

Same signatures and slot layouts; outputs are accumulated in place.
"""
from __future__ import annotations

import numpy as np

_CHUNK = 1 << 18


def _scatter(out2d, p, contrib):
    """``out2d[p] += contrib`` row-wise, with repeated indices summed."""
    n = out2d.shape[0]
    for c in range(out2d.shape[1]):
        col = contrib[:, c]
        out2d[:, c] += np.bincount(p, weights=col.real, minlength=n) + 1j * np.bincount(
            p, weights=col.imag, minlength=n
        )


def accumulate_restricted(offsets, kk, mm, flags, kc, u, v, out):
    pp = np.repeat(np.arange(len(offsets) - 1, dtype=np.int64), np.diff(offsets))
    for lo in range(0, len(kk), _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        k, m, p, f = kk[sl], mm[sl], pp[sl], flags[sl]
        mv = kc[m]
        sel = (f & 1) != 0
        if sel.any():
            s0 = 1j * np.einsum("ti,ti->t", u[k[sel], 0], mv[sel])
            _scatter(out[:, 0], p[sel], s0[:, None] * v[m[sel], 0])
        sel6 = (f & 6) != 0
        if sel6.any():
            ks, ms, ps, fs, mvs = k[sel6], m[sel6], p[sel6], f[sel6], mv[sel6]
            sp = 1j * np.einsum("ti,ti->t", u[ks, 1], mvs)
            sm = 1j * np.einsum("ti,ti->t", u[ks, 2], mvs)
            a = (fs & 2) != 0
            if a.any():
                _scatter(out[:, 1], ps[a], sp[a, None] * v[ms[a], 2] + sm[a, None] * v[ms[a], 1])
            b = (fs & 4) != 0
            if b.any():
                _scatter(out[:, 2], ps[b], sp[b, None] * v[ms[b], 3])
                _scatter(out[:, 3], ps[b], sm[b, None] * v[ms[b], 3])


def convolve_cube(K, kc, u, v, out):
    side = 2 * K + 1
    r = np.arange(-K, K + 1)
    grid = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
    zero = grid.shape[0] // 2
    for ik in range(grid.shape[0]):
        if ik == zero:
            continue
        q = grid[ik] + grid
        ok = np.all(np.abs(q) <= K, axis=1)
        ok[zero] = False
        im = np.flatnonzero(ok)
        ip = ((q[ok, 0] + K) * side + (q[ok, 1] + K)) * side + (q[ok, 2] + K)
        keep = ip != zero
        im, ip = im[keep], ip[keep]
        s = 1j * (kc[im] @ u[ik])
        out[ip] += s[:, None] * v[im]
