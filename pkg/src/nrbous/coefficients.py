"""Triad interaction coefficients.

For a triad ``(k, m, n)`` with ``k + m + n = 0`` and signs ``(s1, s2, s3)``
the bilinearity ``P(U . grad V)`` contributes

    i (r_k^{s1} . mc') (r_m^{s2} . conj(r_{-n}^{-s3})) u_k^{s1} v_m^{s2}

to the ``-s3`` component at ``-n``.  :func:`coupling` returns this scalar.

The fast-fast-slow channel is governed by

    S_kmn = (r+_k . mc') (r-_m . r0_n) + (r-_m . kc') (r+_k . r0_n)

(plain bilinear dot products), for which closed forms exist that make the
factor ``omega_k - omega_m`` explicit; see :func:`ffs_closed_form`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .resonance import _triplet, convolution_batches
from .spectral import _sigma, frames_for, get_lattice

__all__ = [
    "Coupling",
    "coupling",
    "slow_coefficient",
    "slow_coefficient_from_couplings",
    "ffs_closed_form",
    "ffs_coefficient_bound_check",
    "closed_form_arrays",
    "direct_slow_arrays",
    "closed_form_scan",
    "write_coefficient_scan",
]


@dataclass(frozen=True)
class Coupling:
    """A complex interaction coefficient and the two factors or summands it is built from."""

    value: complex
    parts: tuple

    def __complex__(self):
        return complex(self.value)

    def __abs__(self):
        return abs(self.value)


def _frame_dict(k, dom):
    om, r00, r0, rp, rm = frames_for([k], dom)
    return float(om[0]), {"00": r00[0], 0: r0[0], 1: rp[0], -1: rm[0]}


def _prime(k, dom):
    kc = np.array(k, float) / dom.scale
    return np.array([kc[0], kc[1], kc[2], 0.0])


def coupling(k, m, n, sigma, dom=None):
    """Scalar multiplying ``u_k^{s1} v_m^{s2}`` in the ``-s3`` output at ``-n``."""
    k, m, n, dom = _triplet(k, m, n, dom)
    s1, s2, s3 = (_sigma(s) for s in sigma)
    if "00" in (s1, s2, s3):
        raise DomainError("couplings are defined for the signs 0, +, - only")
    _, fk = _frame_dict(k, dom)
    _, fm = _frame_dict(m, dom)
    _, fp = _frame_dict(tuple(-x for x in n), dom)
    adv = complex(np.dot(fk[s1], _prime(m, dom)))
    proj = complex(np.sum(fm[s2] * np.conj(fp[-s3])))
    return Coupling(1j * adv * proj, (adv, proj))


def slow_coefficient(k, m, n, dom=None):
    """``S_kmn`` assembled directly from the eigenframes."""
    k, m, n, dom = _triplet(k, m, n, dom)
    _, fk = _frame_dict(k, dom)
    _, fm = _frame_dict(m, dom)
    _, fn = _frame_dict(n, dom)
    a = complex(np.dot(fk[1], _prime(m, dom)) * np.dot(fm[-1], fn[0]))
    b = complex(np.dot(fm[-1], _prime(k, dom)) * np.dot(fk[1], fn[0]))
    return Coupling(a + b, (a, b))


def slow_coefficient_from_couplings(k, m, n, dom=None):
    """Recover ``S_kmn`` from the two bilinearity channels ``(+,-,0)`` and ``(-,+,0)``.

    The channels combine as ``i s S`` where ``r0_{-n} = s r0_n``.
    """
    k, m, n, dom = _triplet(k, m, n, dom)
    c1 = coupling(k, m, n, (1, -1, 0), dom).value
    c2 = coupling(m, k, n, (-1, 1, 0), dom).value
    _, fn = _frame_dict(n, dom)
    _, fmn = _frame_dict(tuple(-x for x in n), dom)
    s = float(np.real(np.dot(fmn[0], fn[0])))
    return (c1 + c2) / (1j * s)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def closed_form_arrays(k, m, n, dom):
    """Vectorised closed forms of ``S_kmn``.

    Returns ``(S, t1, t2)`` where ``S = t1 + t2`` and, for two non-vertical
    inputs, ``t1`` carries the ``omega_m^2 - omega_k^2`` factor and ``t2``
    the ``omega_m - omega_k`` factor.  Two vertical inputs give exactly 0.
    """
    k = np.atleast_2d(np.asarray(k, np.int64))
    m = np.atleast_2d(np.asarray(m, np.int64))
    n = np.atleast_2d(np.asarray(n, np.int64))
    eta = dom.eta
    kc, mc, nc = k / dom.scale, m / dom.scale, n / dom.scale

    def mods(c):
        h2 = c[:, 0] ** 2 + c[:, 1] ** 2
        full2 = h2 + c[:, 2] ** 2
        e2 = h2 + eta**2 * c[:, 2] ** 2
        return np.sqrt(h2), full2, np.sqrt(e2), np.sqrt(e2 / full2)

    kH, k2, ke, wk = mods(kc)
    mH, m2, me, wm = mods(mc)
    _, _, ne, _ = mods(nc)
    khz = (k[:, 0] == 0) & (k[:, 1] == 0)
    mhz = (m[:, 0] == 0) & (m[:, 1] == 0)
    nhz = (n[:, 0] == 0) & (n[:, 1] == 0)

    size = len(k)
    t1 = np.zeros(size, complex)
    t2 = np.zeros(size, complex)

    c1 = ~khz & ~mhz
    if c1.any():
        cross = kc[c1, 0] * mc[c1, 1] - kc[c1, 1] * mc[c1, 0]
        dot = kc[c1, 0] * mc[c1, 0] + kc[c1, 1] * mc[c1, 1]
        z1, z2 = k[c1, 2].astype(float), m[c1, 2].astype(float)
        den = 2 * ke[c1] * me[c1] * ne[c1] * kH[c1] * mH[c1]
        a = (wm[c1] ** 2 - wk[c1] ** 2) * (k2[c1] * m2[c1] / (1 - eta**2)) * cross * (
            eta**2 - wk[c1] * wm[c1]
        ) / den
        b = (wm[c1] - wk[c1]) * eta * (
            (z1**2 * mH[c1] ** 2 + z2**2 * kH[c1] ** 2) * dot - 2 * z1 * z2 * kH[c1] ** 2 * mH[c1] ** 2
        ) / den
        # dividing i*a + b by i; a vertical n uses the fixed frame r0 = e4
        flip = np.where(nhz[c1], -np.sign(n[c1, 2]), 1.0)
        t1[c1] = a * flip
        t2[c1] = -1j * b * flip

    c2 = khz & ~mhz
    if c2.any():
        z1 = k[c2, 2].astype(float)
        t1[c2] = (eta - wm[c2]) * z1 * mH[c2] * (1j * mc[c2, 0] + mc[c2, 1]) / (2 * me[c2] * ne[c2])

    c3 = ~khz & mhz
    if c3.any():
        z2 = m[c3, 2].astype(float)
        t1[c3] = 1j * (wk[c3] - eta) * z2 * kH[c3] * (kc[c3, 0] + 1j * kc[c3, 1]) / (2 * ke[c3] * ne[c3])

    return t1 + t2, t1, t2


def ffs_closed_form(k, m, n, dom=None):
    """Closed form of ``S_kmn`` for the ``(+,-,0)`` channel.

    Cases: both inputs non-vertical; ``k`` vertical; ``m`` vertical; both
    vertical (exactly zero).  ``parts`` holds the two grouped terms.
    """
    k, m, n, dom = _triplet(k, m, n, dom)
    S, t1, t2 = closed_form_arrays([k], [m], [n], dom)
    return Coupling(complex(S[0]), (complex(t1[0]), complex(t2[0])))


def ffs_coefficient_bound_check(k, m, n, dom=None, zero_tol=1e-12):
    """Ratio ``|S| |nc| / (|omega_k - omega_m| |kc| |mc|)``.

    When ``omega_k = omega_m`` the ratio is 0 if ``S`` vanishes too and
    ``inf`` (a flagged violation) otherwise.
    """
    k, m, n, dom = _triplet(k, m, n, dom)
    S = abs(slow_coefficient(k, m, n, dom).value)
    wk, wm = (frames_for([v], dom)[0][0] for v in (k, m))
    nk, nm, nn = (float(np.linalg.norm(np.array(v) / dom.scale)) for v in (k, m, n))
    gap = abs(wk - wm)
    if gap <= 1e-14:
        return 0.0 if S <= zero_tol * (nk + nm) else math.inf
    return S * nn / (gap * nk * nm)


def direct_slow_arrays(lattice, ik, im, in_):
    """Vectorised direct assembly of ``S_kmn`` from cached lattice frames."""
    kp = np.zeros((len(ik), 4))
    mp = np.zeros((len(ik), 4))
    kp[:, :3] = lattice.kc[ik]
    mp[:, :3] = lattice.kc[im]
    rpk, rmm, r0n = lattice.rp[ik], lattice.rm[im], lattice.r0[in_]
    a = np.sum(rpk * mp, axis=1) * np.sum(rmm * r0n, axis=1)
    b = np.sum(rmm * kp, axis=1) * np.sum(rpk * r0n, axis=1)
    return a + b


@dataclass
class ScanSummary:
    triads: int
    max_rel_error: float
    degenerate_triads: int
    degenerate_max_abs: float
    max_bound_ratio: float
    bound_violations: int


def closed_form_scan(K, dom, batch=64, rel_floor=1e-3):
    """Compare closed forms with direct assembly over every cube triad.

    The relative error is ``|closed - direct| / max(|direct|, rel_floor (|kc| + |mc|))``:
    near-cancelling coefficients are measured against the size of the
    summands, since that sets the rounding error of the direct assembly.
    """
    lat = get_lattice(int(K), dom)
    kint = lat.kint
    summ = ScanSummary(0, 0.0, 0, 0.0, 0.0, 0)
    for ik, im, in_ in convolution_batches(lat, batch):
        direct = direct_slow_arrays(lat, ik, im, in_)
        closed, _, _ = closed_form_arrays(kint[ik], kint[im], kint[in_], dom)
        scale = lat.norm[ik] + lat.norm[im]
        err = np.abs(closed - direct) / np.maximum(np.abs(direct), rel_floor * scale)
        summ.triads += len(ik)
        summ.max_rel_error = max(summ.max_rel_error, float(err.max(initial=0.0)))
        deg = ~lat.vertical[ik] | ~lat.vertical[im]
        deg = ~deg
        summ.degenerate_triads += int(deg.sum())
        if deg.any():
            summ.degenerate_max_abs = max(summ.degenerate_max_abs, float(np.abs(closed[deg]).max()))
        gap = np.abs(lat.omega[ik] - lat.omega[im])
        ok = gap > 1e-14
        ratio = np.abs(direct[ok]) * lat.norm[in_][ok] / (gap[ok] * lat.norm[ik][ok] * lat.norm[im][ok])
        summ.max_bound_ratio = max(summ.max_bound_ratio, float(ratio.max(initial=0.0)))
        summ.bound_violations += int(np.count_nonzero(np.abs(direct[~ok]) > 1e-12 * scale[~ok]))
    return summ


def write_coefficient_scan(path, K, dom, batch=64):
    """Write one CSV row per cube triad with the ``(+,-,0)`` coefficient data."""
    lat = get_lattice(int(K), dom)
    kint = lat.kint
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k1", "k2", "k3", "m1", "m2", "m3", "n1", "n2", "n3", "sigma",
                    "re_S", "im_S", "closed_form_error", "bound_ratio"])
        for ik, im, in_ in convolution_batches(lat, batch):
            direct = direct_slow_arrays(lat, ik, im, in_)
            closed, _, _ = closed_form_arrays(kint[ik], kint[im], kint[in_], dom)
            gap = np.abs(lat.omega[ik] - lat.omega[im])
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(
                    gap > 1e-14,
                    np.abs(direct) * lat.norm[in_] / (gap * lat.norm[ik] * lat.norm[im]),
                    0.0,
                )
            err = np.abs(closed - direct)
            for j in range(len(ik)):
                w.writerow([*kint[ik[j]], *kint[im[j]], *kint[in_[j]], "+-0",
                            repr(float(direct[j].real)), repr(float(direct[j].imag)),
                            repr(float(err[j])), repr(float(ratio[j]))])
