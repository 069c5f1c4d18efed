"""Full and near-resonant bilinear operators, dissipation and PV transport.

The advection bilinearity is ``B(U, V) = P(U' . grad V)`` with ``U'`` the
velocity of ``U`` and ``P`` the Leray projector, Galerkin-truncated to the
cube.  In modulated variables each sign component carries the factor
``exp(i sigma omega tau)``, so that

    B(tau, U, V) = exp(-tau L) B(exp(tau L) U, exp(tau L) V).

The restricted operator keeps the slow-slow-slow and slow-fast-fast
channels in full, and keeps the fast-fast-fast, fast-fast-slow and
fast-slow-fast channels only on the near-resonant triads listed in a
:class:`~nrbous.resonance.TriadIndex`.

Unrestricted channels are evaluated with a dealiased FFT product (grid of
at least ``3K+1`` points per axis, which makes it an exact Galerkin
convolution); restricted channels run through the triad kernel.  A direct
cube convolution is available as an independent cross-check.
"""
from __future__ import annotations

import numpy as np
from scipy import fft as sfft

from . import kernels
from .errors import DomainError
from .resonance import BandwidthSpec, enumerate_triads
from .spectral import SpectralField, SpectralScalarField, get_lattice

__all__ = [
    "OperatorContext",
    "full_bilinear",
    "modulated_bilinear",
    "restricted_bilinear",
    "restricted_bilinear_slow",
    "restricted_bilinear_fast",
    "dissipation_symbols",
    "dissipation_matrix",
    "printed_s22",
    "printed_s22_residual",
    "modified_dissipation",
    "modulated_dissipation",
    "lpv_slow_transport",
    "pv_frame_sign",
    "ellipticity_terms",
]


class _FFTGrid:
    """Maps lattice coefficients to a dealiased physical grid and back.

    The ``real`` variants assume conjugate-paired coefficients (real
    physical fields) and use half-spectrum transforms.
    """

    def __init__(self, lattice, npts=None):
        K = lattice.K
        self.n = n = int(npts or sfft.next_fast_len(3 * K + 1))
        if n < 3 * K + 1:
            raise DomainError(f"FFT grid of {n} points aliases a cutoff of {K}")
        pos = np.mod(lattice.kint, n)
        self.flat = np.ravel_multi_index(pos.T, (n, n, n))
        self.zero = lattice.zero
        self.scale = float(n) ** 3
        nh = n // 2 + 1
        self.half_shape = (n, n, nh)
        upper = lattice.kint[:, 2] >= 0
        self.upper = np.flatnonzero(upper)
        self.flat_upper = np.ravel_multi_index(pos[self.upper].T, self.half_shape)
        src = np.where(upper, np.arange(lattice.size), lattice.partner)
        self.flat_src = np.ravel_multi_index(pos[src].T, self.half_shape)
        self.conj_src = ~upper

    def to_phys(self, coef):
        c = coef.shape[1]
        A = np.zeros((c, self.n**3), complex)
        A[:, self.flat] = coef.T
        A = A.reshape(c, self.n, self.n, self.n)
        return sfft.ifftn(A, axes=(1, 2, 3)) * self.scale

    def to_spec(self, phys):
        c = phys.shape[0]
        F = sfft.fftn(phys, axes=(1, 2, 3)).reshape(c, -1) / self.scale
        out = F[:, self.flat].T.copy()
        out[self.zero] = 0.0
        return out

    def to_phys_real(self, coef):
        c = coef.shape[1]
        A = np.zeros((c, int(np.prod(self.half_shape))), complex)
        A[:, self.flat_upper] = coef[self.upper].T
        A = A.reshape((c,) + self.half_shape)
        return sfft.irfftn(A, s=(self.n,) * 3, axes=(1, 2, 3)) * self.scale

    def to_spec_real(self, phys):
        c = phys.shape[0]
        F = sfft.rfftn(phys, axes=(1, 2, 3)).reshape(c, -1) / self.scale
        out = F[:, self.flat_src].T
        out[self.conj_src] = out[self.conj_src].conj()
        out[self.zero] = 0.0
        return out


class OperatorContext:
    """Shared data for operator evaluation at fixed ``(K, dom, bw)``.

    The triad index is built on first use of a restricted operator unless
    supplied.  ``backend`` selects ``"cython"`` or ``"python"`` kernels;
    the default follows :mod:`nrbous.kernels`.
    """

    def __init__(self, K, dom, bw=None, index=None, backend=None, fft_points=None):
        self.lattice = get_lattice(int(K), dom)
        self.K = self.lattice.K
        self.dom = dom
        self.bw = bw if bw is not None else BandwidthSpec()
        if index is not None and (index.lattice.K != self.K or index.lattice.dom != dom or index.bw != self.bw):
            raise DomainError("triad index was built for a different (K, dom, bw)")
        self._index = index
        avail = kernels.backends()
        name = backend or kernels.BACKEND
        if name not in avail:
            raise DomainError(f"kernel backend {name!r} is not available (have {sorted(avail)})")
        self.backend = name
        self._acc, self._cube = avail[name]
        self.grid = _FFTGrid(self.lattice, fft_points)
        self._kc = np.ascontiguousarray(self.lattice.kc)
        self._tri = None
        self._half = np.flatnonzero(self.lattice.half_mask())

    @property
    def index(self):
        if self._index is None:
            self._index = enumerate_triads(self.K, self.bw, self.dom)
        return self._index

    def _triads(self, half=False):
        """Kernel-ready ``(offsets, k, m, flags)`` arrays, built once.

        Within each output row triads are grouped by flag value, which keeps
        the kernel's channel branches predictable.  With ``half=True`` only
        rows on the half lattice are kept.
        """
        if self._tri is None:
            ix = self.index
            fl = (ix.flags & 7).astype(np.uint8)
            order = np.lexsort((fl, ix.p))
            p = ix.p[order]
            tri = {}
            for name, keep in (("all", None), ("half", self.lattice.half_mask()[p])):
                sel = order if keep is None else order[keep]
                ps = ix.p[sel]
                offsets = np.zeros(self.lattice.size + 1, np.int64)
                np.cumsum(np.bincount(ps, minlength=self.lattice.size), out=offsets[1:])
                tri[name] = (
                    offsets,
                    np.ascontiguousarray(ix.k[sel], np.int32),
                    np.ascontiguousarray(ix.m[sel], np.int32),
                    np.ascontiguousarray(fl[sel]),
                )
            self._tri = tri
            self._tri_masked = {}
        return self._tri["half" if half else "all"]

    def _kernel_args(self, mask, half):
        offsets, kk, mm, fl = self._triads(half)
        if mask != 7:
            key = (mask, half)
            if key not in self._tri_masked:
                self._tri_masked[key] = np.ascontiguousarray(fl & mask)
            fl = self._tri_masked[key]
        return offsets, kk, mm, fl

    def check(self, *fields):
        for f in fields:
            lat = f.lattice
            if lat is not self.lattice and (lat.K != self.K or lat.dom != self.dom):
                raise DomainError("field and operator context use different (K, dom)")

    # low-level pieces in coefficient arrays ----------------------------------
    def advect(self, uvel, V, method="fft", real=False):
        """Galerkin truncation of ``u . grad V`` (no projection); arrays in, array out.

        ``real=True`` declares both inputs conjugate-paired and uses
        half-spectrum transforms.
        """
        lat = self.lattice
        if method == "fft":
            g = self.grid
            nc = V.shape[1]
            fwd, back = (g.to_phys_real, g.to_spec_real) if real else (g.to_phys, g.to_spec)
            u = fwd(uvel)
            dV = (1j * self._kc[:, :, None] * V[:, None, :]).reshape(lat.size, 3 * nc)
            dV = fwd(dV).reshape((3, nc) + u.shape[1:])
            return back(np.einsum("iabc,ijabc->jabc", u, dV))
        if method == "direct":
            if V.shape[1] != 4:
                Vp = np.zeros((lat.size, 4), complex)
                Vp[:, : V.shape[1]] = V
            else:
                Vp = np.ascontiguousarray(V, complex)
            out = np.zeros((lat.size, 4), complex)
            self._cube(self.K, self._kc, np.ascontiguousarray(uvel, complex), Vp, out)
            out[lat.zero] = 0.0
            return out[:, : V.shape[1]]
        raise DomainError(f"unknown method {method!r}")

    def leray(self, W):
        lat = self.lattice
        W = W.copy()
        nz = lat.nonzero
        dot = np.sum(W[nz, :3] * lat.kc[nz], axis=1) / lat.norm2[nz]
        W[nz, :3] -= dot[:, None] * lat.kc[nz]
        W[lat.zero] = 0.0
        return W

    def to_eigen(self, U):
        lat = self.lattice
        return np.stack([np.sum(U * r.conj(), axis=1) for r in (lat.r0, lat.rp, lat.rm)])

    def from_eigen(self, a):
        lat = self.lattice
        return a[0][:, None] * lat.r0 + a[1][:, None] * lat.rp + a[2][:, None] * lat.rm

    def full_eigen(self, a, b, tau, method="fft", real=False):
        """Modulated full bilinearity in eigen-coefficients (3, size)."""
        ph = np.exp(1j * self.lattice.omega * tau)
        rot = np.array([np.ones_like(ph), ph, ph.conj()])
        U = self.from_eigen(a * rot)
        V = self.from_eigen(b * rot)
        W = self.advect(U[:, :3], V, method, real=real)
        return self.to_eigen(W) * rot.conj()

    def restricted_eigen(self, a, b, tau, slow=True, fast=True, real=False):
        """Restricted modulated bilinearity in eigen-coefficients (3, size).

        ``real=True`` asserts that both inputs satisfy the reality pairing;
        the triad sums then run over half the outputs and the rest follow
        by conjugation.
        """
        lat = self.lattice
        ph = np.exp(1j * lat.omega * tau)
        bp = (b[1] * ph)[:, None] * lat.rp
        bm = (b[2] * ph.conj())[:, None] * lat.rm
        offsets, kk, mm, flags = self._kernel_args((5 if fast else 0) | (2 if slow else 0), real)
        u = np.empty((lat.size, 3, 3), complex)
        u[:, 1] = (a[1] * ph)[:, None] * lat.rp[:, :3]
        u[:, 2] = (a[2] * ph.conj())[:, None] * lat.rm[:, :3]
        u[:, 0] = u[:, 1] + u[:, 2]
        v = np.empty((lat.size, 4, 4), complex)
        v[:, 0] = bp + bm
        v[:, 1] = bp
        v[:, 2] = bm
        v[:, 3] = b[0][:, None] * lat.r0
        acc = np.zeros((lat.size, 4, 4), complex)
        self._acc(offsets, kk, mm, flags, self._kc, u, v, acc)
        us = a[0][:, None] * lat.r0[:, :3]
        out = np.zeros((3, lat.size), complex)
        if slow and fast:
            W = self.advect(us, np.concatenate([v[:, 3], v[:, 0]], axis=1), real=real)
            Wss, Wsf = W[:, :4], W[:, 4:]
        elif slow:
            Wss = self.advect(us, v[:, 3], real=real)
        elif fast:
            Wsf = self.advect(us, v[:, 0], real=real)
        if slow:
            out[0] = np.sum((acc[:, 1] + Wss) * lat.r0.conj(), axis=1)
        if fast:
            base = acc[:, 0] + Wsf
            out[1] = ph.conj() * np.sum((base + acc[:, 2]) * lat.rp.conj(), axis=1)
            out[2] = ph * np.sum((base + acc[:, 3]) * lat.rm.conj(), axis=1)
        if real:
            h = self._half
            q = lat.partner[h]
            out[0, q] = lat.s0[h] * out[0, h].conj()
            out[1, q] = out[2, h].conj()
            out[2, q] = out[1, h].conj()
        out[:, lat.zero] = 0.0
        return out


def _ctx_for(ctx, *fields):
    if not isinstance(ctx, OperatorContext):
        raise DomainError("an OperatorContext is required")
    ctx.check(*fields)
    return ctx


# ---------------------------------------------------------------------------
# bilinear operators on fields
# ---------------------------------------------------------------------------


def full_bilinear(U, V, ctx, method="fft"):
    """``P(U' . grad V)`` truncated to the cube.

    ``method="direct"`` evaluates the convolution triad by triad.
    """
    ctx = _ctx_for(ctx, U, V)
    W = ctx.advect(U.values[:, :3], V.values, method)
    return SpectralField(ctx.lattice, ctx.leray(W))


def modulated_bilinear(U, V, tau, ctx, method="fft"):
    """``exp(-tau L) B(exp(tau L) U, exp(tau L) V)`` on divergence-free inputs."""
    ctx = _ctx_for(ctx, U, V)
    b = ctx.full_eigen(ctx.to_eigen(U.values), ctx.to_eigen(V.values), tau, method)
    return SpectralField(ctx.lattice, ctx.from_eigen(b))


def restricted_bilinear_slow(U, V, tau, ctx):
    """Slow output: all slow-slow-slow triads plus opposite-sign near-resonant fast pairs."""
    ctx = _ctx_for(ctx, U, V)
    b = ctx.restricted_eigen(ctx.to_eigen(U.values), ctx.to_eigen(V.values), tau, slow=True, fast=False)
    return SpectralField(ctx.lattice, ctx.from_eigen(b))


def restricted_bilinear_fast(U, V, tau, ctx):
    """Fast output: near-resonant FFF and sign-restricted FSF triads plus all SFF triads."""
    ctx = _ctx_for(ctx, U, V)
    b = ctx.restricted_eigen(ctx.to_eigen(U.values), ctx.to_eigen(V.values), tau, slow=False, fast=True)
    return SpectralField(ctx.lattice, ctx.from_eigen(b))


def restricted_bilinear(U, V, tau, ctx):
    """Slow plus fast restricted outputs."""
    ctx = _ctx_for(ctx, U, V)
    b = ctx.restricted_eigen(ctx.to_eigen(U.values), ctx.to_eigen(V.values), tau)
    return SpectralField(ctx.lattice, ctx.from_eigen(b))


# ---------------------------------------------------------------------------
# dissipation
# ---------------------------------------------------------------------------


def _check_nu(nu1, nu2):
    if nu1 < 0 or nu2 < 0:
        raise DomainError("viscosities must be nonnegative")


def _nu_diag(nu1, nu2):
    return np.array([nu1, nu1, nu1, nu2], float)


def dissipation_symbols(lattice, nu1, nu2):
    """Per-mode ``s11 = <nu r0, r0>`` and ``s22 = <nu r+, r+>`` from the frames."""
    _check_nu(nu1, nu2)
    nu = _nu_diag(nu1, nu2)
    s11 = np.sum(nu * np.abs(lattice.r0) ** 2, axis=1)
    s22 = np.sum(nu * np.abs(lattice.rp) ** 2, axis=1)
    return s11, s22


def dissipation_matrix(lattice, nu1, nu2):
    """``M[i, a, b] = sum_c nu_c r^b_c conj(r^a_c)`` in the ``(0, +, -)`` basis.

    ``-nu Delta`` acts on eigen-coefficients as ``|kc|^2 M``.
    """
    _check_nu(nu1, nu2)
    nu = _nu_diag(nu1, nu2)
    R = np.stack([lattice.r0, lattice.rp, lattice.rm], axis=1)
    return np.einsum("iac,c,ibc->iab", R.conj(), nu, R)


def printed_s22(lattice, nu1, nu2):
    """The alternative closed-form fast symbol ``(nu1 eta^2 k3^2 + 2(nu1+nu2)|kc_H|^2) / (2|kc_eta|^2)``."""
    eta = lattice.dom.eta
    kh2 = lattice.kh**2
    z2 = lattice.kc[:, 2] ** 2
    ke2 = np.where(lattice.nonzero, lattice.keta**2, 1.0)
    return (nu1 * eta**2 * z2 + 2 * (nu1 + nu2) * kh2) / (2 * ke2)


def printed_s22_residual(lattice, nu1, nu2):
    """Largest ``|printed - frame-derived|`` of the fast symbol over the lattice."""
    _, s22 = dissipation_symbols(lattice, nu1, nu2)
    nz = lattice.nonzero
    return float(np.max(np.abs(printed_s22(lattice, nu1, nu2)[nz] - s22[nz])))


def modified_dissipation(U, nu1, nu2, ctx):
    """Diagonal dissipation ``|kc|^2 (s11 U_s + s22 U_f)``."""
    lat = ctx.lattice if isinstance(ctx, OperatorContext) else ctx
    if isinstance(ctx, OperatorContext):
        ctx.check(U)
    s11, s22 = dissipation_symbols(lat, nu1, nu2)
    a0 = np.sum(U.values * lat.r0.conj(), axis=1)
    ap = np.sum(U.values * lat.rp.conj(), axis=1)
    am = np.sum(U.values * lat.rm.conj(), axis=1)
    k2 = lat.norm2
    W = (k2 * s11 * a0)[:, None] * lat.r0 + (k2 * s22)[:, None] * (ap[:, None] * lat.rp + am[:, None] * lat.rm)
    return SpectralField(lat, W)


def modulated_dissipation(U, nu1, nu2, tau, ctx):
    """``exp(-tau L)(-nu Delta) exp(tau L) U`` including the oscillatory cross terms."""
    lat = ctx.lattice if isinstance(ctx, OperatorContext) else ctx
    M = dissipation_matrix(lat, nu1, nu2)
    a = np.stack([np.sum(U.values * r.conj(), axis=1) for r in (lat.r0, lat.rp, lat.rm)])
    ph = np.exp(1j * lat.omega * tau)
    rot = np.array([np.ones_like(ph), ph, ph.conj()])
    b = np.einsum("iab,bi->ai", M, a * rot) * rot.conj() * lat.norm2
    W = b[0][:, None] * lat.r0 + b[1][:, None] * lat.rp + b[2][:, None] * lat.rm
    return SpectralField(lat, W)


def ellipticity_terms(U, nu1, nu2, ell, lattice=None):
    """Dissipation pairings and their lower bounds for the slow, fast and PV parts.

    Returns a dict of ``(pairing, nu_min * norm^2)`` tuples, where the
    pairings are ``<A~ U_s, D^(2 ell) U_s>``, the fast analogue, and
    ``<nu11 (-Delta) Q, D^(2 ell) Q>``; ``norm`` is the ``H^(ell+1)``
    norm of the corresponding part.
    """
    lat = lattice or U.lattice
    s11, s22 = dissipation_symbols(lat, nu1, nu2)
    nu_min = min(nu1, nu2)
    a0 = np.sum(U.values * lat.r0.conj(), axis=1)
    ap = np.sum(U.values * lat.rp.conj(), axis=1)
    am = np.sum(U.values * lat.rm.conj(), axis=1)
    k2 = np.where(lat.nonzero, lat.norm2, 0.0)
    w = k2 ** (ell + 1)
    q2 = (lat.keta * np.abs(a0)) ** 2
    return {
        "slow": (float(np.sum(w * s11 * np.abs(a0) ** 2)), nu_min * float(np.sum(w * np.abs(a0) ** 2))),
        "fast": (
            float(np.sum(w * s22 * (np.abs(ap) ** 2 + np.abs(am) ** 2))),
            nu_min * float(np.sum(w * (np.abs(ap) ** 2 + np.abs(am) ** 2))),
        ),
        "pv": (float(np.sum(w * s11 * q2)), nu_min * float(np.sum(w * q2))),
    }


# ---------------------------------------------------------------------------
# potential-vorticity transport
# ---------------------------------------------------------------------------


def pv_frame_sign(lattice):
    """``+1`` off the vertical axis and ``-sign(k3)`` on it.

    Multiplying the frame-based PV by this sign gives the PV of the physical
    field (``i <U_k, e0_k>``), which is what real-space transport acts on.
    """
    s = np.ones(lattice.size)
    v = lattice.vertical
    s[v] = -np.sign(lattice.kint[v, 2])
    s[lattice.zero] = 0.0
    return s


def lpv_slow_transport(Q, ctx):
    """PV form of the slow-slow-slow transport term.

    With ``psi = -Delta_eta^(-1) Q`` and ``u = grad_H^perp psi`` this is
    ``u . grad_H Q``; it agrees with the frame-based PV of ``B(U_s, U_s)``
    when ``Q`` is the frame-based PV of ``U_s``.
    """
    if not isinstance(Q, SpectralScalarField):
        raise DomainError("expected a SpectralScalarField")
    ctx = _ctx_for(ctx, Q)
    lat = ctx.lattice
    sgn = pv_frame_sign(lat)
    q = Q.values * sgn
    ke2 = np.where(lat.nonzero, lat.keta**2, 1.0)
    psi = -q / ke2
    psi[lat.zero] = 0.0
    u = np.zeros((lat.size, 3), complex)
    u[:, 0] = -1j * lat.kc[:, 1] * psi
    u[:, 1] = 1j * lat.kc[:, 0] * psi
    T = ctx.advect(u, q[:, None])[:, 0]
    return SpectralScalarField(lat, T * sgn)
