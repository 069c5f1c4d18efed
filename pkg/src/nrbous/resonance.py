"""Near-resonance phases, bandwidths, triad enumeration and lattice counts.

A triad is an ordered triple ``(k, m, n)`` of nonzero lattice points with
``k + m + n = 0``; ``k`` and ``m`` are the inputs and ``n`` labels the
output (the coefficient lands on ``-n``).  For a sign vector
``sigma in {0, +1, -1}^3`` the phase is

    omega^sigma_kmn = s1*omega_k + s2*omega_m + s3*omega_n.

Three sets restrict the bilinearity:

* FFF: ``min over fast sign vectors |phase| <= delta(k, m, n)``,
* FFS: ``|omega_k - omega_m| <= delta*(k, m, n)``,
* FSF: ``|omega_k - omega_n| <= delta*(k, m, n)``,

while slow-slow-slow and slow-fast-fast channels are kept in full.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from .errors import DomainError, ResourceError
from .spectral import DomainParams, _as_int3, _wavevector, get_lattice

__all__ = [
    "BandwidthSpec",
    "TripletRecord",
    "TriadIndex",
    "FLAG_FFF",
    "FLAG_FFS",
    "FLAG_FSF",
    "FLAG_SFF",
    "FLAG_SSS",
    "FAST_PATTERNS",
    "phase",
    "classify",
    "admissible_fff_signs",
    "fff_min_phase",
    "convolution_batches",
    "enumerate_triads",
    "sign_lemma_scan",
    "count_fff",
    "count_mixed",
    "mixed_annulus_counts",
    "lower_bound_family",
    "lower_bound_estimate",
    "counting_hypothesis_check",
    "fit_power_law",
]

FLAG_FFF = 1
FLAG_FFS = 2
FLAG_FSF = 4
FLAG_SFF = 8
FLAG_SSS = 16
_FLAG_NAMES = {FLAG_FFF: "FFF", FLAG_FFS: "FFS", FLAG_FSF: "FSF", FLAG_SFF: "SFF", FLAG_SSS: "SSS"}

FAST_PATTERNS = tuple(itertools.product((1, -1), repeat=3))
_LEMMA_PATTERNS = ((1, -1, -1), (-1, 1, 1))

CAP_SHRINK = 1.0 - 1e-9


@dataclass(frozen=True)
class BandwidthSpec:
    """Bandwidth laws ``delta = C_delta / max|.|`` and ``delta* = C_delta_star / max|.|^zeta``.

    Both are capped strictly below ``min(eta/2, 1/2)``.
    """

    C_delta: float = 1.0
    C_delta_star: float = 1.0
    zeta: float = 1.2

    def __post_init__(self):
        if self.C_delta < 0 or self.C_delta_star < 0:
            raise DomainError("bandwidth constants must be nonnegative")
        if not (6 / 5 - 1e-12 <= self.zeta <= 2 + 1e-12):
            raise DomainError(f"zeta must lie in [6/5, 2], got {self.zeta}")
        for name in ("C_delta", "C_delta_star", "zeta"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @staticmethod
    def cap(eta):
        return min(eta / 2.0, 0.5) * CAP_SHRINK

    def delta(self, kn, mn, nn, eta):
        """FFF bandwidth from the three moduli ``|kc|, |mc|, |nc|`` (vectorised)."""
        mx = np.maximum(np.maximum(kn, mn), nn)
        return np.minimum(self.cap(eta), self.C_delta / mx)

    def delta_star(self, kn, mn, nn, eta):
        """Mixed bandwidth from the three moduli (vectorised)."""
        mx = np.maximum(np.maximum(kn, mn), nn)
        return np.minimum(self.cap(eta), self.C_delta_star / mx**self.zeta)


def _omega_arr(kint, dom):
    kc = np.asarray(kint, float) / dom.scale
    kh2 = kc[..., 0] ** 2 + kc[..., 1] ** 2
    k2 = kh2 + kc[..., 2] ** 2
    return np.sqrt((kh2 + dom.eta**2 * kc[..., 2] ** 2) / k2), np.sqrt(k2)


def fff_min_phase(wk, wm, wn):
    """``min over fast sign vectors |s . omega|`` (vectorised).

    With ``a >= b >= c > 0`` the minimum is ``|a - b - c|``.
    """
    lo, hi = np.minimum(wk, wm), np.maximum(wk, wm)
    a = np.maximum(hi, wn)
    c = np.minimum(lo, wn)
    b = np.maximum(lo, np.minimum(hi, wn))
    return np.abs(a - b - c)


def _sign(s):
    if s in ("+", 1):
        return 1
    if s in ("-", "−", -1):
        return -1
    if s in ("0", 0):
        return 0
    raise DomainError(f"unknown sign {s!r}")


def _triplet(k, m, n, dom):
    k, dom = _wavevector(k, dom)
    m, _ = _wavevector(m, dom)
    n, _ = _wavevector(n, dom)
    if any(v == (0, 0, 0) for v in (k, m, n)):
        raise DomainError("triad members must be nonzero")
    if any(a + b + c != 0 for a, b, c in zip(k, m, n)):
        raise DomainError(f"not a convolution triad: {k} + {m} + {n} != 0")
    return k, m, n, dom


def phase(k, m, n, sigma, dom=None):
    """``s1 omega_k + s2 omega_m + s3 omega_n`` for a sign 3-tuple."""
    k, dom = _wavevector(k, dom)
    m, _ = _wavevector(m, dom)
    n, _ = _wavevector(n, dom)
    if any(v == (0, 0, 0) for v in (k, m, n)):
        raise DomainError("phase is undefined for zero wavevectors")
    w, _ = _omega_arr(np.array([k, m, n]), dom)
    s = np.array([_sign(x) for x in sigma], float)
    return float(np.dot(s, w))


@dataclass(frozen=True)
class TripletRecord:
    """One classified triad together with a sign vector and its phase."""

    k: tuple
    m: tuple
    n: tuple
    sigma: tuple
    phase: float
    membership: frozenset
    delta: float = float("nan")
    delta_star: float = float("nan")

    def member(self, name):
        return name in self.membership


def classify(k, m, n, bw, dom=None, sigma=None):
    """Classify a triad into the near-resonant sets.

    Without ``sigma`` the record carries the fast sign vector minimising
    ``|phase|``.
    """
    k, m, n, dom = _triplet(k, m, n, dom)
    w, nrm = _omega_arr(np.array([k, m, n]), dom)
    d = float(bw.delta(nrm[0], nrm[1], nrm[2], dom.eta))
    ds = float(bw.delta_star(nrm[0], nrm[1], nrm[2], dom.eta))
    flags = {"SFF", "SSS"}
    if fff_min_phase(*w) <= d:
        flags.add("FFF")
    if abs(w[0] - w[1]) <= ds:
        flags.add("FFS")
    if abs(w[0] - w[2]) <= ds:
        flags.add("FSF")
    if sigma is None:
        sigma = min(FAST_PATTERNS, key=lambda s: abs(np.dot(s, w)))
    sigma = tuple(_sign(s) for s in sigma)
    return TripletRecord(k, m, n, sigma, float(np.dot(sigma, w)), frozenset(flags), d, ds)


def admissible_fff_signs(omega_sorted, delta):
    """Sign patterns that can be near-resonant for descending frequencies.

    For ``w1 >= w2 >= w3 > delta >= 0`` only ``(+,-,-)`` and ``(-,+,+)`` can
    satisfy ``|s . w| <= delta``; both are returned regardless of whether the
    triad actually is near-resonant.
    """
    w = [float(x) for x in omega_sorted]
    if len(w) != 3 or not (w[0] >= w[1] >= w[2] > delta >= 0):
        raise DomainError("expected w1 >= w2 >= w3 > delta >= 0")
    return list(_LEMMA_PATTERNS)


# ---------------------------------------------------------------------------
# exhaustive triad enumeration on the cube
# ---------------------------------------------------------------------------


def convolution_batches(lattice, batch=64):
    """Yield ``(ik, im, in_)`` flat-index arrays of all cube triads.

    Iterates outputs ``n`` in lattice order, in groups of ``batch``; within
    one ``n`` the inputs ``k`` are in lexicographic order.  Triads with a
    zero member are skipped.
    """
    K, side = lattice.K, lattice.side
    kint = lattice.kint
    nz_n = np.flatnonzero(lattice.nonzero)
    base_k = np.arange(lattice.size)
    for start in range(0, len(nz_n), batch):
        nidx = nz_n[start:start + batch]
        nv = kint[nidx]
        m = -nv[:, None, :] - kint[None, :, :]
        ok = np.all(np.abs(m) <= K, axis=2)
        ok[:, lattice.zero] = False
        im_full = ((m[..., 0] + K) * side + (m[..., 1] + K)) * side + (m[..., 2] + K)
        ok &= im_full != lattice.zero
        rows, cols = np.nonzero(ok)
        yield base_k[cols], im_full[rows, cols], nidx[rows]


def _flags_for(lattice, bw, ik, im, in_):
    om, nrm, eta = lattice.omega, lattice.norm, lattice.dom.eta
    wk, wm, wn = om[ik], om[im], om[in_]
    kn, mn, nn = nrm[ik], nrm[im], nrm[in_]
    d = bw.delta(kn, mn, nn, eta)
    ds = bw.delta_star(kn, mn, nn, eta)
    flags = np.full(len(ik), FLAG_SFF | FLAG_SSS, np.uint8)
    flags |= np.where(fff_min_phase(wk, wm, wn) <= d, FLAG_FFF, 0).astype(np.uint8)
    flags |= np.where(np.abs(wk - wm) <= ds, FLAG_FFS, 0).astype(np.uint8)
    flags |= np.where(np.abs(wk - wn) <= ds, FLAG_FSF, 0).astype(np.uint8)
    return flags


@dataclass
class TriadIndex:
    """Per-output triad lists in compressed form.

    Arrays are flat lattice indices; ``p = -n`` is where each triad's
    output coefficient lands.  Entries are sorted by ``p`` and then
    lexicographically by ``k``; ``offsets[j]:offsets[j+1]`` delimits the
    triads writing to lattice index ``j``.
    """

    lattice: object
    bw: BandwidthSpec
    k: np.ndarray
    m: np.ndarray
    n: np.ndarray
    p: np.ndarray
    flags: np.ndarray
    offsets: np.ndarray
    complete: bool = False

    def __len__(self):
        return len(self.k)

    def count(self, flag):
        return int(np.count_nonzero(self.flags & flag))

    def select(self, flag):
        """Index arrays ``(k, m, p)`` of the triads carrying ``flag``."""
        sel = (self.flags & flag) != 0
        return self.k[sel], self.m[sel], self.p[sel]

    def records(self, n):
        """Materialise the :class:`TripletRecord` list for output ``n``."""
        lat = self.lattice
        n = _as_int3(n)
        p = lat.index(np.array([-x for x in n]))
        lo, hi = self.offsets[p], self.offsets[p + 1]
        out = []
        for j in range(lo, hi):
            names = frozenset(name for bit, name in _FLAG_NAMES.items() if self.flags[j] & bit)
            k = tuple(int(x) for x in lat.kint[self.k[j]])
            m = tuple(int(x) for x in lat.kint[self.m[j]])
            w = lat.omega[[self.k[j], self.m[j], self.n[j]]]
            sigma = min(FAST_PATTERNS, key=lambda s: abs(np.dot(s, w)))
            nrm = lat.norm[[self.k[j], self.m[j], self.n[j]]]
            out.append(
                TripletRecord(k, m, n, sigma, float(np.dot(sigma, w)), names,
                              float(self.bw.delta(*nrm, lat.dom.eta)),
                              float(self.bw.delta_star(*nrm, lat.dom.eta)))
            )
        return out


def enumerate_triads(K, bw, dom, include="restricted", max_triads=40_000_000, batch=64):
    """Enumerate all cube triads and annotate set membership.

    ``include="restricted"`` keeps only triads in at least one of the
    FFF/FFS/FSF sets (the ones the restricted operators need);
    ``include="all"`` keeps every convolution triad.  If more than
    ``max_triads`` would be stored a :class:`ResourceError` carrying the
    full count is raised.
    """
    if int(K) != K or K < 1:
        raise DomainError("cutoff must be a positive integer")
    if include not in ("restricted", "all"):
        raise DomainError(f"include must be 'restricted' or 'all', got {include!r}")
    lat = get_lattice(int(K), dom)
    parts = []
    total = 0
    overflow = False
    for ik, im, in_ in convolution_batches(lat, batch):
        flags = _flags_for(lat, bw, ik, im, in_)
        if include == "restricted":
            keep = (flags & (FLAG_FFF | FLAG_FFS | FLAG_FSF)) != 0
            ik, im, in_, flags = ik[keep], im[keep], in_[keep], flags[keep]
        total += len(ik)
        if total > max_triads:
            overflow = True
        if not overflow:
            parts.append((ik.astype(np.int32), im.astype(np.int32), in_.astype(np.int32), flags))
    if overflow:
        raise ResourceError(f"triad index would hold {total} triads (budget {max_triads})", total)
    if parts:
        ik, im, in_, flags = (np.concatenate(x) for x in zip(*parts))
    else:
        ik = im = in_ = np.zeros(0, np.int32)
        flags = np.zeros(0, np.uint8)
    p = lat.partner[in_].astype(np.int32)
    order = np.lexsort((ik, p))
    ik, im, in_, p, flags = ik[order], im[order], in_[order], p[order], flags[order]
    offsets = np.zeros(lat.size + 1, np.int64)
    np.cumsum(np.bincount(p, minlength=lat.size), out=offsets[1:])
    return TriadIndex(lat, bw, ik, im, in_, p, flags, offsets, complete=(include == "all"))


def sign_lemma_scan(K, bw, dom, batch=64):
    """Exhaustive check of the FFF sign structure over the cube.

    Returns a dict with the number of FFF members, the number of
    near-resonant (triad, pattern) pairs whose pattern, after sorting the
    frequencies in descending order, is not one of ``(+,-,-)``/``(-,+,+)``,
    the largest excess of ``min(omega)`` over ``(max(eta,1)+delta)/2``, and
    counts of mixed members for the excluded SSF/FSS/SFS and same-sign
    FFS/FSF patterns.
    """
    lat = get_lattice(int(K), dom)
    eta = dom.eta
    om, nrm = lat.omega, lat.norm
    patterns = np.array(FAST_PATTERNS, float)
    allowed = np.array([p in _LEMMA_PATTERNS for p in FAST_PATTERNS])
    members = violations = excluded = 0
    worst_w3 = -np.inf
    wmax = max(eta, 1.0)
    for ik, im, in_ in convolution_batches(lat, batch):
        w = np.stack([om[ik], om[im], om[in_]], axis=1)
        kn, mn, nn = nrm[ik], nrm[im], nrm[in_]
        d = bw.delta(kn, mn, nn, eta)
        ds = bw.delta_star(kn, mn, nn, eta)
        ws = -np.sort(-w, axis=1)
        ph = np.abs(ws @ patterns.T)
        near = ph <= d[:, None]
        is_member = near.any(axis=1)
        members += int(is_member.sum())
        violations += int((near & ~allowed[None, :]).sum())
        if is_member.any():
            excess = ws[is_member, 2] - (wmax + d[is_member]) / 2.0
            worst_w3 = max(worst_w3, float(excess.max()))
        # single fast member (SSF/FSS/SFS): |phase| = omega >= min(eta,1)
        excluded += int((w.min(axis=1) <= ds).sum())
        # same-sign opposite pairs: omega_k + omega_m and omega_k + omega_n
        excluded += int((w[:, 0] + w[:, 1] <= ds).sum() + (w[:, 0] + w[:, 2] <= ds).sum())
    return {
        "fff_members": members,
        "pattern_violations": violations,
        "omega3_excess": worst_w3,
        "excluded_mixed_members": excluded,
    }


# ---------------------------------------------------------------------------
# lattice counts
# ---------------------------------------------------------------------------


def count_fff(n, delta, dom=None):
    """Number of ``k`` with ``|nc|/2 <= |kc| <= |nc|``, ``m = -n-k != 0`` and FFF phase ``<= delta``."""
    n, dom = _wavevector(n, dom)
    if n == (0, 0, 0):
        raise DomainError("n must be nonzero")
    cap = min(dom.eta / 2, 0.5)
    if not (0 <= delta < cap):
        raise DomainError(f"delta must lie in [0, {cap})")
    nv = np.array(n)
    wn, nn = _omega_arr(nv, dom)
    total = 0
    span = [int(math.floor(nn * s)) for s in (dom.L1, dom.L2, 1.0)]
    r1 = np.arange(-span[0], span[0] + 1)
    r2 = np.arange(-span[1], span[1] + 1)
    for k3 in range(-span[2], span[2] + 1):
        k = np.stack(np.meshgrid(r1, r2, [k3], indexing="ij"), -1).reshape(-1, 3)
        kc = k / dom.scale
        kn2 = np.sum(kc**2, axis=1)
        keep = (kn2 >= nn**2 / 4) & (kn2 <= nn**2)
        k = k[keep]
        m = -nv[None, :] - k
        keep = np.any(m != 0, axis=1)
        k, m = k[keep], m[keep]
        if len(k) == 0:
            continue
        wk, _ = _omega_arr(k, dom)
        wm, _ = _omega_arr(m, dom)
        total += int(np.count_nonzero(fff_min_phase(wk, wm, wn) <= delta))
    return total


def _horizontal_table(R, dom):
    """All ``(k1, k2)`` with ``|kc_H| <= R``: returns sorted ``|kc_H|^2``."""
    a = int(math.floor(R * dom.L1))
    b = int(math.floor(R * dom.L2))
    k1, k2 = np.meshgrid(np.arange(-a, a + 1), np.arange(-b, b + 1), indexing="ij")
    c1, c2 = k1.ravel() / dom.L1, k2.ravel() / dom.L2
    h = c1**2 + c2**2
    return np.sort(h[h <= R * R])


def _count_band(w_target, lo_r2, hi_r2, delta_star, dom, hi_strict=False):
    """Count ``k != 0`` with ``lo_r2 <= |kc|^2 <= hi_r2`` and ``|omega_k - w_target| <= delta_star``."""
    R = math.sqrt(hi_r2)
    h = _horizontal_table(R, dom)
    eta2 = dom.eta**2
    total = 0
    for k3 in range(-int(math.floor(R)), int(math.floor(R)) + 1):
        z = float(k3) ** 2
        r2 = h + z
        sel = (r2 >= lo_r2) & ((r2 < hi_r2) if hi_strict else (r2 <= hi_r2))
        if k3 == 0:
            sel &= h > 0
        hh = h[sel]
        if len(hh) == 0:
            continue
        w = np.sqrt((hh + eta2 * z) / (hh + z))
        total += int(np.count_nonzero(np.abs(w - w_target) <= delta_star))
    return total


def count_mixed(n, M, delta_star, dom=None):
    """Number of ``k != 0`` with ``|omega_k - omega_n| <= delta_star`` and ``|kc| <= M``."""
    n, dom = _wavevector(n, dom)
    if n == (0, 0, 0):
        raise DomainError("n must be nonzero")
    if M <= 0:
        return 0
    wn, _ = _omega_arr(np.array(n), dom)
    return _count_band(float(wn), 0.0, float(M) ** 2, delta_star, dom)


def mixed_annulus_counts(n, i_max, bw, dom=None, i_min=0):
    """Counts over dyadic annuli ``2^i <= |kc| < 2^(i+1)`` for ``i_min <= i <= i_max``.

    The bandwidth in annulus ``i`` is ``min(cap, C_delta_star 2^(-zeta i))``.
    Returns a list of ``(i, delta_star_i, count)``.
    """
    n, dom = _wavevector(n, dom)
    wn, _ = _omega_arr(np.array(n), dom)
    rows = []
    for i in range(i_min, i_max + 1):
        ds = min(bw.cap(dom.eta), bw.C_delta_star * 2.0 ** (-bw.zeta * i))
        c = _count_band(float(wn), 4.0**i, 4.0 ** (i + 1), ds, dom, hi_strict=True)
        rows.append((i, ds, c))
    return rows


def _lower_bound_c(delta_star, eta):
    if eta > 1:
        return math.sqrt((delta_star**2 + 2 * delta_star) / (eta**2 - 1))
    return math.sqrt((2 * delta_star - delta_star**2) / (1 - eta**2))


def lower_bound_family(M, delta_star, dom=None):
    """Explicit near-horizontal family with ``|omega_k - 1| <= delta_star``.

    Members satisfy ``3M/5 <= kc1 <= M``, ``4M/5 <= kc2 <= M`` and
    ``0 <= k3 <= c |kc_H|``, with ``c`` chosen so that the slope bound
    forces ``|omega_k - 1| <= delta_star``.  Returned as an ``(n, 3)``
    integer array; a degenerate ``M`` yields an empty array.
    """
    if not isinstance(dom, DomainParams):
        dom = DomainParams(float(dom))
    cap = min(dom.eta / 2, 0.5)
    if not (0 < delta_star < cap):
        raise DomainError(f"delta_star must lie in (0, {cap})")
    if M <= 0:
        return np.zeros((0, 3), np.int64)
    c = _lower_bound_c(delta_star, dom.eta)
    k1 = np.arange(math.ceil(3 * M * dom.L1 / 5 - 1e-12), math.floor(M * dom.L1 + 1e-12) + 1)
    k2 = np.arange(math.ceil(4 * M * dom.L2 / 5 - 1e-12), math.floor(M * dom.L2 + 1e-12) + 1)
    if len(k1) == 0 or len(k2) == 0:
        return np.zeros((0, 3), np.int64)
    g1, g2 = np.meshgrid(k1, k2, indexing="ij")
    g1, g2 = g1.ravel(), g2.ravel()
    kh = np.hypot(g1 / dom.L1, g2 / dom.L2)
    top = np.floor(c * kh + 1e-12).astype(np.int64)
    reps = top + 1
    out = np.empty((int(reps.sum()), 3), np.int64)
    out[:, 0] = np.repeat(g1, reps)
    out[:, 1] = np.repeat(g2, reps)
    starts = np.repeat(np.cumsum(reps) - reps, reps)
    out[:, 2] = np.arange(len(out)) - starts
    # the construction already implies both filters; keep them as a guard
    w, nrm = _omega_arr(out, dom)
    keep = (np.abs(w - 1.0) <= delta_star) & (nrm >= M) & (nrm < 2 * M)
    return out[keep]


def lower_bound_estimate(M, delta_star, dom):
    """Box integral ``L1 L2 * int int (1 + c |kc_H|)`` matching :func:`lower_bound_family`."""
    if not isinstance(dom, DomainParams):
        dom = DomainParams(float(dom))
    c = _lower_bound_c(delta_star, dom.eta)
    val, _ = integrate.dblquad(
        lambda y, x: 1.0 + c * math.hypot(x, y), 3 * M / 5, M, 4 * M / 5, M
    )
    return dom.L1 * dom.L2 * val


# ---------------------------------------------------------------------------
# fits and hypothesis checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerFit:
    slope: float
    stderr: float
    intercept: float
    n_points: int

    @property
    def constant(self):
        return math.exp(self.intercept)


def fit_power_law(x, y):
    """Ordinary least squares of ``log y`` on ``log x``; zero counts are dropped."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    keep = (x > 0) & (y > 0)
    x, y = np.log(x[keep]), np.log(y[keep])
    if len(x) < 2:
        raise DomainError("need at least two positive points for a power-law fit")
    if len(x) == 2:
        slope = (y[1] - y[0]) / (x[1] - x[0])
        return PowerFit(float(slope), float("nan"), float(y[0] - slope * x[0]), 2)
    res = stats.linregress(x, y)
    return PowerFit(float(res.slope), float(res.stderr), float(res.intercept), len(x))


@dataclass
class CountingReport:
    """Outcome of :func:`counting_hypothesis_check`."""

    eta: float
    fff_rows: list = field(default_factory=list)
    mixed_rows: list = field(default_factory=list)
    fff_fit: PowerFit | None = None
    mixed_fit: PowerFit | None = None
    fff_inconclusive: bool = False
    mixed_inconclusive: bool = False
    fff_expected_max: float = 2.0
    mixed_expected_max: float = 3.0

    @property
    def fff_empty(self):
        return all(c == 0 for *_, c in self.fff_rows)


_RAYS = ((1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, 0, 1), (1, 1, 1), (2, 1, 0), (2, 1, 1),
         (3, 2, 1), (1, 2, 3))


def _ordered_fff_count(n, bw, dom):
    """Count ``k`` with ``|mc| <= |kc| <= |nc|`` and the triad in FFF with ``delta = delta(k,m,n)``."""
    nv = np.array(n)
    wn, nn = _omega_arr(nv, dom)
    span = [int(math.floor(nn * s)) for s in (dom.L1, dom.L2, 1.0)]
    r1 = np.arange(-span[0], span[0] + 1)
    r2 = np.arange(-span[1], span[1] + 1)
    total = 0
    for k3 in range(-span[2], span[2] + 1):
        k = np.stack(np.meshgrid(r1, r2, [k3], indexing="ij"), -1).reshape(-1, 3)
        k = k[np.any(k != 0, axis=1)]
        m = -nv[None, :] - k
        k, m = k[np.any(m != 0, axis=1)], m[np.any(m != 0, axis=1)]
        wk, kn = _omega_arr(k, dom)
        wm, mn = _omega_arr(m, dom)
        keep = (mn <= kn) & (kn <= nn)
        d = bw.delta(kn, mn, nn, dom.eta)
        total += int(np.count_nonzero(keep & (fff_min_phase(wk, wm, wn) <= d)))
    return total


def counting_hypothesis_check(K, bw, dom, mixed_n=(1, 0, 0)):
    """Fit the counting exponents assumed by the restricted convolution estimates.

    The FFF branch counts, along a fixed set of rays, the ordered FFF
    triads per output and fits ``count ~ |nc|^beta`` on the per-radius
    maxima.  The mixed branch fits ``count_i ~ 2^(mu i)`` over dyadic
    annuli up to radius ``K``.
    """
    if K < 8:
        raise DomainError("counting_hypothesis_check needs K >= 8")
    rep = CountingReport(eta=dom.eta, mixed_expected_max=3.0 - bw.zeta / 2.0)
    best = {}
    for ray in _RAYS:
        j = 1
        while max(abs(j * x) for x in ray) <= K:
            n = tuple(j * x for x in ray)
            _, nn = _omega_arr(np.array(n), dom)
            c = _ordered_fff_count(n, bw, dom)
            rep.fff_rows.append((n, float(nn), c))
            key = round(float(nn), 9)
            best[key] = max(best.get(key, 0), c)
            j += 1
    radii = sorted(best)
    counts = [best[r] for r in radii]
    if sum(1 for c in counts if c > 0) >= 3:
        rep.fff_fit = fit_power_law(radii, counts)
    else:
        rep.fff_inconclusive = True
    i_max = int(math.floor(math.log2(K))) - 1
    rows = mixed_annulus_counts(mixed_n, i_max, bw, dom, i_min=1)
    rep.mixed_rows = rows
    pts = [(2.0**i, c) for i, _, c in rows if c > 0]
    if len(pts) >= 3:
        rep.mixed_fit = fit_power_law([p[0] for p in pts], [p[1] for p in pts])
    else:
        rep.mixed_inconclusive = True
    return rep
