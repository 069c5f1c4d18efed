"""Lattice geometry, eigenframes and truncated spectral fields.

Everything here lives on the anisotropic torus with horizontal periods
``2*pi*L1`` and ``2*pi*L2`` and vertical period ``2*pi``.  A wavevector
``k`` in Z^3 is rescaled to ``kc = (k1/L1, k2/L2, k3)`` and the dispersion
relation of the rotating stratified linear operator is

    omega_k = |(kc1, kc2, eta*k3)| / |kc|.

Fields are stored densely on the cube ``max|k_i| <= K`` as complex
4-vectors (three velocity slots, one density slot).  The ``k = 0`` slot is
kept for indexing convenience and is always zero.

Inner products follow the coefficient convention (no torus-volume factor):
``<U, V> = sum_k U_k . conj(V_k)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

__all__ = [
    "DomainParams",
    "WaveVector",
    "EigenFrame",
    "Lattice",
    "get_lattice",
    "SpectralField",
    "SpectralScalarField",
    "dispersion",
    "eigenframe",
    "frames_for",
    "eigenframe_symmetry_check",
    "wave_operator",
    "e0_vector",
    "project_sigma",
    "eigen_coefficients",
    "from_eigen_coefficients",
    "slow_fast_split",
    "apply_lpv",
    "sobolev_norm",
    "evolution_rotate",
]

_SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# parameters and single wavevectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DomainParams:
    """Physical geometry: stratification ratio ``eta`` and horizontal periods.

    ``eta = 1`` is excluded because the dispersion relation degenerates to a
    constant there and the slow and fast branches stop being separated.
    """

    eta: float
    L1: float = 1.0
    L2: float = 1.0

    def __post_init__(self):
        for name in ("eta", "L1", "L2"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value)):
                raise DomainError(f"{name} must be a finite real, got {value!r}")
            if value <= 0:
                raise DomainError(f"{name} must be positive, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.eta == 1.0:
            raise DomainError("eta = 1 is not allowed")

    @property
    def omega_range(self):
        return (min(self.eta, 1.0), max(self.eta, 1.0))

    @property
    def scale(self):
        """Per-axis divisors turning integer wavevectors into ``kc``."""
        return np.array([self.L1, self.L2, 1.0])


def _as_int3(k):
    arr = np.asarray(k)
    if arr.shape != (3,):
        raise DomainError(f"wavevector must have three components, got shape {arr.shape}")
    if not np.all(np.equal(np.mod(arr, 1), 0)):
        raise DomainError(f"wavevector must be integer, got {k!r}")
    return tuple(int(x) for x in arr)


@dataclass(frozen=True)
class WaveVector:
    """An integer lattice point together with its domain-adjusted forms."""

    k: tuple
    dom: DomainParams

    def __post_init__(self):
        object.__setattr__(self, "k", _as_int3(self.k))

    @property
    def check(self):
        return np.array([self.k[0] / self.dom.L1, self.k[1] / self.dom.L2, float(self.k[2])])

    @property
    def check_eta(self):
        c = self.check
        return np.array([c[0], c[1], self.dom.eta * c[2]])

    @property
    def check_H(self):
        return self.check[:2]

    @property
    def check_prime(self):
        c = self.check
        return np.array([c[0], c[1], c[2], 0.0])

    @property
    def norm(self):
        return float(np.linalg.norm(self.check))

    def is_zero(self):
        return self.k == (0, 0, 0)

    def __neg__(self):
        return WaveVector(tuple(-x for x in self.k), self.dom)


def _wavevector(k, dom):
    if isinstance(k, WaveVector):
        return k.k, (k.dom if dom is None else dom)
    if dom is None:
        raise DomainError("a DomainParams is required for plain integer wavevectors")
    return _as_int3(k), dom


# ---------------------------------------------------------------------------
# vectorised frame construction
# ---------------------------------------------------------------------------


def frames_for(kint, dom):
    """Dispersion and eigenframes for an array of integer wavevectors.

    Parameters
    ----------
    kint : array_like, shape (n, 3)
        Integer wavevectors.  Zero rows are allowed and produce zero output.

    Returns
    -------
    omega : (n,) float
    r00, r0, rplus, rminus : (n, 4) complex
    """
    kint = np.atleast_2d(np.asarray(kint, dtype=np.int64))
    kc = kint / dom.scale
    eta = dom.eta
    kh2 = kc[:, 0] ** 2 + kc[:, 1] ** 2
    k2 = kh2 + kc[:, 2] ** 2
    ke2 = kh2 + eta**2 * kc[:, 2] ** 2
    zero = k2 == 0
    vertical = (kint[:, 0] == 0) & (kint[:, 1] == 0) & ~zero
    horiz = ~(vertical | zero)

    n = len(kint)
    omega = np.zeros(n)
    omega[~zero] = np.sqrt(ke2[~zero] / k2[~zero])

    r00 = np.zeros((n, 4), complex)
    r0 = np.zeros((n, 4), complex)
    rp = np.zeros((n, 4), complex)

    c1, c2, c3 = kc[horiz, 0], kc[horiz, 1], kc[horiz, 2]
    h2 = kh2[horiz]
    om = omega[horiz]
    r00[horiz, 0], r00[horiz, 1], r00[horiz, 2] = c1, c2, c3
    r0[horiz, 0], r0[horiz, 1], r0[horiz, 3] = -c2, c1, -eta * c3
    rp[horiz, 0] = -eta * c2 * c3 + 1j * om * c1 * c3
    rp[horiz, 1] = eta * c1 * c3 + 1j * om * c2 * c3
    rp[horiz, 2] = -1j * om * h2
    rp[horiz, 3] = h2

    r00[vertical, 2] = 1.0
    r0[vertical, 3] = 1.0
    rp[vertical, 0] = 1j
    rp[vertical, 1] = 1.0

    # normalise explicitly instead of trusting the closed-form normalisers
    for r in (r00, r0, rp):
        nrm = np.sqrt(np.sum(np.abs(r) ** 2, axis=1))
        nz = nrm > 0
        r[nz] /= nrm[nz, None]
    return omega, r00, r0, rp, rp.conj()


@dataclass(frozen=True, eq=False)
class EigenFrame:
    """Orthonormal eigenbasis of the wave operator at one wavevector."""

    omega: float
    r00: np.ndarray
    r0: np.ndarray
    rplus: np.ndarray
    rminus: np.ndarray

    def basis(self):
        """Rows ``r00, r0, r+, r-`` as a 4x4 array."""
        return np.array([self.r00, self.r0, self.rplus, self.rminus])

    def gram(self):
        b = self.basis()
        return b @ b.conj().T

    def vector(self, sigma):
        s = _sigma(sigma)
        return {"00": self.r00, 0: self.r0, 1: self.rplus, -1: self.rminus}[s]


def dispersion(k, dom=None):
    """Frequency ``omega_k`` of the wave operator at a nonzero wavevector."""
    kk, dom = _wavevector(k, dom)
    if kk == (0, 0, 0):
        raise DomainError("dispersion is undefined at k = 0")
    kc = np.array(kk) / dom.scale
    kh2 = kc[0] ** 2 + kc[1] ** 2
    return math.sqrt((kh2 + dom.eta**2 * kc[2] ** 2) / (kh2 + kc[2] ** 2))


def eigenframe(k, dom=None):
    """Normalised eigenframe ``{r00, r0, r+, r-}`` and ``omega`` at ``k``."""
    kk, dom = _wavevector(k, dom)
    if kk == (0, 0, 0):
        raise DomainError("eigenframe is undefined at k = 0")
    om, r00, r0, rp, rm = frames_for([kk], dom)
    return EigenFrame(float(om[0]), r00[0], r0[0], rp[0], rm[0])


def eigenframe_symmetry_check(k, dom=None, tol=1e-13):
    """True iff ``r+(-k) = r+(k)`` and ``r-(-k) = r-(k)`` within ``tol``."""
    kk, dom = _wavevector(k, dom)
    if kk == (0, 0, 0):
        raise DomainError("eigenframe is undefined at k = 0")
    a = eigenframe(kk, dom)
    b = eigenframe(tuple(-x for x in kk), dom)
    return bool(
        np.max(np.abs(a.rplus - b.rplus)) <= tol and np.max(np.abs(a.rminus - b.rminus)) <= tol
    )


def wave_operator(k, dom=None):
    """The 4x4 symbol of the Leray-projected rotation/stratification operator.

    Built as ``P_k diag(-eta*J, J) P_k`` with ``J = [[0, 1], [-1, 0]]`` and
    ``P_k`` the Leray projector acting on the velocity slots.  With this
    orientation the frame vectors satisfy ``L r+- = +-i omega r+-`` and
    ``L r0 = 0``.
    """
    kk, dom = _wavevector(k, dom)
    kc = np.array(kk) / dom.scale
    P = np.eye(4)
    P[:3, :3] -= np.outer(kc, kc) / kc.dot(kc)
    J = np.array([[0.0, 1.0], [-1.0, 0.0]])
    M = np.zeros((4, 4))
    M[:2, :2] = -dom.eta * J
    M[2:, 2:] = J
    return P @ M @ P


def e0_vector(k, dom=None):
    """Unnormalised slow direction ``(-kc2, kc1, 0, -eta*k3)``."""
    kk, dom = _wavevector(k, dom)
    kc = np.array(kk) / dom.scale
    return np.array([-kc[1], kc[0], 0.0, -dom.eta * kc[2]])


_SIGMA_ALIASES = {
    "00": "00",
    "0": 0,
    "+": 1,
    "-": -1,
    "−": -1,
    0: 0,
    1: 1,
    -1: -1,
}


def _sigma(s):
    try:
        return _SIGMA_ALIASES[s]
    except (KeyError, TypeError):
        raise DomainError(f"unknown sign label {s!r}") from None


# ---------------------------------------------------------------------------
# the truncated lattice
# ---------------------------------------------------------------------------


class Lattice:
    """Dense cube ``max|k_i| <= K`` with cached geometry and eigenframes.

    Modes are stored in C order of ``(k1, k2, k3)`` so that the mode at
    ``-k`` sits at flat index ``size - 1 - index(k)``.
    """

    def __init__(self, K, dom):
        if int(K) != K or K < 1:
            raise DomainError(f"cutoff must be a positive integer, got {K!r}")
        self.K = K = int(K)
        self.dom = dom
        self.side = side = 2 * K + 1
        self.size = side**3
        r = np.arange(-K, K + 1)
        grid = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
        self.kint = grid
        self.zero = self.size // 2
        self.nonzero = np.ones(self.size, bool)
        self.nonzero[self.zero] = False
        self.partner = np.arange(self.size)[::-1].copy()

        kc = grid / dom.scale
        self.kc = kc
        self.norm2 = np.sum(kc**2, axis=1)
        self.norm = np.sqrt(self.norm2)
        self.kh = np.hypot(kc[:, 0], kc[:, 1])
        self.keta = np.sqrt(self.kh**2 + dom.eta**2 * kc[:, 2] ** 2)
        self.vertical = (grid[:, 0] == 0) & (grid[:, 1] == 0) & self.nonzero
        omega, r00, r0, rp, rm = frames_for(grid, dom)
        self.omega = omega
        self.r00, self.r0, self.rp, self.rm = r00, r0, rp, rm
        # r0(-k) = s0 * r0(k): -1 off the vertical axis, +1 on it
        self.s0 = np.where(self.vertical, 1.0, -1.0)
        self.s0[self.zero] = 0.0
        for arr in (grid, kc, self.norm2, self.norm, self.kh, self.keta, omega, r00, r0, rp, rm,
                    self.partner, self.s0, self.nonzero, self.vertical):
            arr.setflags(write=False)

    def index(self, k):
        k = np.asarray(k)
        K, side = self.K, self.side
        return ((k[..., 0] + K) * side + (k[..., 1] + K)) * side + (k[..., 2] + K)

    def contains(self, k):
        return all(abs(int(x)) <= self.K for x in k)

    def half_mask(self):
        """Half lattice ``k3>0 or (k3=0, k2>0) or (k3=k2=0, k1>0)``."""
        k = self.kint
        return (k[:, 2] > 0) | ((k[:, 2] == 0) & (k[:, 1] > 0)) | (
            (k[:, 2] == 0) & (k[:, 1] == 0) & (k[:, 0] > 0)
        )

    def __repr__(self):
        return f"Lattice(K={self.K}, dom={self.dom})"


@lru_cache(maxsize=16)
def get_lattice(K, dom):
    """Shared, cached :class:`Lattice` for ``(K, dom)``."""
    return Lattice(K, dom)


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------


class _FieldBase:
    __slots__ = ("lattice", "values")

    @property
    def K(self):
        return self.lattice.K

    @property
    def dom(self):
        return self.lattice.dom

    def _check_same(self, other):
        if not isinstance(other, type(self)):
            return NotImplemented
        if other.lattice is not self.lattice and (
            other.lattice.K != self.lattice.K or other.lattice.dom != self.lattice.dom
        ):
            raise DomainError("fields live on different lattices")
        return None


class SpectralField(_FieldBase):
    """Truncated Fourier series of a 4-component field.

    ``coef[i]`` holds ``U_k`` for ``k = lattice.kint[i]``.  The array is
    read-only: arithmetic and operators always return new fields.
    """

    __slots__ = ("divfree",)

    def __init__(self, lattice, coef, divfree=True):
        coef = np.array(coef, dtype=complex)
        if coef.shape != (lattice.size, 4):
            raise DomainError(f"expected shape {(lattice.size, 4)}, got {coef.shape}")
        coef[lattice.zero] = 0.0
        coef.setflags(write=False)
        self.lattice = lattice
        self.values = coef
        self.divfree = bool(divfree)

    @property
    def coef(self):
        return self.values

    @classmethod
    def zeros(cls, lattice):
        return cls(lattice, np.zeros((lattice.size, 4), complex))

    @classmethod
    def from_modes(cls, lattice, modes, divfree=True):
        """Build from a ``{k: 4-vector}`` mapping; missing modes are zero."""
        coef = np.zeros((lattice.size, 4), complex)
        for k, v in modes.items():
            k = _as_int3(k)
            if k == (0, 0, 0):
                raise DomainError("fields carry no k = 0 coefficient")
            if not lattice.contains(k):
                raise DomainError(f"mode {k} lies outside the cutoff K={lattice.K}")
            coef[lattice.index(k)] = v
        return cls(lattice, coef, divfree=divfree)

    def coefficient(self, k):
        k = _as_int3(k)
        if k == (0, 0, 0) or not self.lattice.contains(k):
            return np.zeros(4, complex)
        return self.values[self.lattice.index(k)].copy()

    def items(self):
        """Iterate over ``(k, U_k)`` for the nonzero coefficients."""
        nz = np.flatnonzero(np.any(self.values != 0, axis=1))
        for i in nz:
            yield tuple(int(x) for x in self.lattice.kint[i]), self.values[i].copy()

    def with_values(self, coef, divfree=None):
        return SpectralField(self.lattice, coef, self.divfree if divfree is None else divfree)

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        bad = self._check_same(other)
        if bad is not None:
            return bad
        return SpectralField(self.lattice, self.values + other.values, self.divfree and other.divfree)

    def __sub__(self, other):
        bad = self._check_same(other)
        if bad is not None:
            return bad
        return SpectralField(self.lattice, self.values - other.values, self.divfree and other.divfree)

    def __neg__(self):
        return SpectralField(self.lattice, -self.values, self.divfree)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return SpectralField(self.lattice, self.values * c, self.divfree)

    __rmul__ = __mul__

    def inner(self, other):
        """``<self, other> = sum_k U_k . conj(V_k)``."""
        self._check_same(other)
        return complex(np.vdot(other.values, self.values))

    # invariants -------------------------------------------------------------
    def reality_defect(self):
        lat = self.lattice
        return float(np.max(np.abs(self.values[lat.partner] - self.values.conj()), initial=0.0))

    def divergence_defect(self):
        vel = self.values[:, :3]
        return float(np.max(np.abs(np.sum(vel * self.lattice.kc, axis=1))
                            / np.where(self.lattice.nonzero, self.lattice.norm, 1.0), initial=0.0))

    def check_invariants(self, real_tol=1e-13, div_tol=1e-12):
        """Return a dict of named invariant checks (True means satisfied)."""
        out = {
            "reality": self.reality_defect() <= real_tol * max(1.0, np.max(np.abs(self.values), initial=0)),
            "zero_mean": bool(np.all(self.values[self.lattice.zero] == 0)),
        }
        if self.divfree:
            scale = max(1.0, float(np.max(np.abs(self.values), initial=0)))
            out["incompressible"] = self.divergence_defect() <= div_tol * scale
        return out

    def __repr__(self):
        return f"SpectralField(K={self.K}, dom={self.dom}, divfree={self.divfree})"


class SpectralScalarField(_FieldBase):
    """Truncated Fourier series of a scalar, same layout as :class:`SpectralField`."""

    __slots__ = ()

    def __init__(self, lattice, values):
        values = np.array(values, dtype=complex)
        if values.shape != (lattice.size,):
            raise DomainError(f"expected shape {(lattice.size,)}, got {values.shape}")
        values[lattice.zero] = 0.0
        values.setflags(write=False)
        self.lattice = lattice
        self.values = values

    @classmethod
    def zeros(cls, lattice):
        return cls(lattice, np.zeros(lattice.size, complex))

    def coefficient(self, k):
        k = _as_int3(k)
        if k == (0, 0, 0) or not self.lattice.contains(k):
            return 0j
        return complex(self.values[self.lattice.index(k)])

    def __add__(self, other):
        bad = self._check_same(other)
        if bad is not None:
            return bad
        return SpectralScalarField(self.lattice, self.values + other.values)

    def __sub__(self, other):
        bad = self._check_same(other)
        if bad is not None:
            return bad
        return SpectralScalarField(self.lattice, self.values - other.values)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return SpectralScalarField(self.lattice, self.values * c)

    __rmul__ = __mul__

    def inner(self, other):
        self._check_same(other)
        return complex(np.vdot(other.values, self.values))

    def reality_defect(self):
        return float(np.max(np.abs(self.values[self.lattice.partner] - self.values.conj()), initial=0.0))

    def __repr__(self):
        return f"SpectralScalarField(K={self.K}, dom={self.dom})"


# ---------------------------------------------------------------------------
# projections and linear operations
# ---------------------------------------------------------------------------


def eigen_coefficients(field):
    """All projections at once: arrays ``(u00, u0, u+, u-)`` of shape (size,)."""
    lat = field.lattice
    U = field.values
    return tuple(np.sum(U * r.conj(), axis=1) for r in (lat.r00, lat.r0, lat.rp, lat.rm))


def from_eigen_coefficients(lattice, a0=None, ap=None, am=None, a00=None):
    """Assemble ``U_k = a00 r00 + a0 r0 + a+ r+ + a- r-`` on the lattice."""
    U = np.zeros((lattice.size, 4), complex)
    for a, r in ((a0, lattice.r0), (ap, lattice.rp), (am, lattice.rm)):
        if a is not None:
            U += np.asarray(a)[:, None] * r
    divfree = a00 is None
    if a00 is not None:
        U += np.asarray(a00)[:, None] * lattice.r00
    return SpectralField(lattice, U, divfree=divfree)


def project_sigma(field, k, sigma):
    """Scalar ``u_k^sigma = <U_k, conj(r_k^sigma)>`` (Hermitian pairing)."""
    s = _sigma(sigma)
    k = _as_int3(k)
    if k == (0, 0, 0) or not field.lattice.contains(k):
        return 0j
    i = field.lattice.index(k)
    lat = field.lattice
    r = {"00": lat.r00, 0: lat.r0, 1: lat.rp, -1: lat.rm}[s][i]
    return complex(np.sum(field.values[i] * r.conj()))


def slow_fast_split(field, with_r00=False):
    """Split into the slow (``r0``) and fast (``r+``, ``r-``) parts.

    Any ``r00`` content is dropped from both parts; pass ``with_r00=True``
    to also receive it as a third field.
    """
    lat = field.lattice
    a00, a0, ap, am = eigen_coefficients(field)
    slow = from_eigen_coefficients(lat, a0=a0)
    fast = from_eigen_coefficients(lat, ap=ap, am=am)
    if with_r00:
        return slow, fast, from_eigen_coefficients(lat, a00=a00)
    return slow, fast


def apply_lpv(field):
    """Linear potential vorticity ``Q_k = i |kc_eta| <U_k, r0_k>``.

    Fast content is annihilated since ``r+-`` are orthogonal to ``r0``.
    """
    lat = field.lattice
    a0 = np.sum(field.values * lat.r0.conj(), axis=1)
    return SpectralScalarField(lat, 1j * lat.keta * a0)


def sobolev_norm(field, ell):
    """``(sum_k |kc|^(2 ell) |U_k|^2)^(1/2)`` over the stored nonzero modes."""
    lat = field.lattice
    vals = field.values
    mag2 = np.abs(vals) ** 2
    if mag2.ndim == 2:
        mag2 = mag2.sum(axis=1)
    nz = lat.nonzero
    return float(np.sqrt(np.sum(lat.norm2[nz] ** ell * mag2[nz])))


def evolution_rotate(field, tau):
    """Apply ``exp(tau L)``: multiply each ``sigma`` component by ``exp(i sigma omega tau)``.

    The ``r00`` component (if any) is left untouched.
    """
    lat = field.lattice
    a00, a0, ap, am = eigen_coefficients(field)
    ph = np.exp(1j * lat.omega * tau)
    U = (
        a00[:, None] * lat.r00
        + a0[:, None] * lat.r0
        + (ap * ph)[:, None] * lat.rp
        + (am * ph.conj())[:, None] * lat.rm
    )
    return SpectralField(lat, U, field.divfree)
