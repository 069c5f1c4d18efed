"""Time integration of the full and near-resonant systems in modulated variables.

The state is kept as eigen-coefficients ``a[s, i]`` for ``s`` in
``(0, +, -)`` of the modulated variable ``u = exp(-N t L) U``.  Both systems
have the form

    d/dt a + D a = F(t, a),

with ``D = |kc|^2 diag(s11, s22, s22)`` the diagonal dissipation, which is
integrated exactly by a Lawson (integrating-factor) fourth-order
Runge-Kutta scheme.  For the restricted system ``F`` is minus the
restricted bilinearity at fast time ``N t``; for the full system it is
minus the full bilinearity plus the oscillatory off-diagonal dissipation
terms that appear in modulated variables when ``nu1 != nu2``.
"""
from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import DomainError, StepRejected
from .operators import OperatorContext, dissipation_matrix
from .resonance import BandwidthSpec
from .spectral import DomainParams, SpectralField, from_eigen_coefficients, get_lattice

__all__ = [
    "SimConfig",
    "SimState",
    "RunResult",
    "random_divfree_field",
    "random_eigen_coefficients",
    "initial_state",
    "step_full",
    "step_restricted",
    "run",
    "phase_number",
    "symmetrize",
    "DIAGNOSTIC_COLUMNS",
]

SYSTEMS = ("restricted", "full", "compare")


@dataclass(frozen=True)
class SimConfig:
    """Physical parameters, truncation and time-step controls.

    ``dt`` is the requested step; the run uses the largest fixed step not
    exceeding it that divides ``T`` evenly.  ``amplitude`` (if set) is the
    L2 norm of the random initial field.  ``on_violation`` chooses between
    a warning and step rejection when ``N dt max|phase|`` exceeds
    ``phase_cfl``.
    """

    dom: DomainParams
    nu1: float = 0.0
    nu2: float = 0.0
    N: float = 10.0
    K: int = 6
    dt: float = 1e-3
    T: float = 0.1
    bw: BandwidthSpec = field(default_factory=BandwidthSpec)
    seed: int = 0
    spectrum_slope: float = 2.0
    amplitude: float | None = 1.0
    weights: tuple = (1.0, 1.0, 1.0)
    phase_cfl: float = 0.5
    on_violation: str = "warn"
    sample_every: int = 1
    ell_prime: float = 1.0
    ring: int = 4096

    def __post_init__(self):
        if not isinstance(self.dom, DomainParams):
            raise DomainError("dom must be a DomainParams")
        if self.nu1 < 0 or self.nu2 < 0:
            raise DomainError("viscosities must be nonnegative")
        for name in ("N", "dt"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite")
        if not (math.isfinite(self.T) and self.T >= 0):
            raise DomainError("T must be nonnegative")
        if int(self.K) != self.K or self.K < 1:
            raise DomainError("cutoff K must be a positive integer")
        if self.on_violation not in ("warn", "reject"):
            raise DomainError("on_violation must be 'warn' or 'reject'")
        if self.phase_cfl <= 0:
            raise DomainError("phase_cfl must be positive")
        if len(self.weights) != 3 or min(self.weights) < 0:
            raise DomainError("weights must be three nonnegative numbers")
        if int(self.sample_every) != self.sample_every or self.sample_every < 1:
            raise DomainError("sample_every must be a positive integer")

    @property
    def nu_min(self):
        return min(self.nu1, self.nu2)

    @property
    def n_steps(self):
        if self.T == 0:
            return 0
        return max(1, math.ceil(self.T / self.dt - 1e-9))

    @property
    def step(self):
        """The fixed step actually taken."""
        return self.T / self.n_steps if self.n_steps else self.dt

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class SimState:
    """Modulated state at time ``t`` with a bounded diagnostics history."""

    t: float
    coeffs: np.ndarray
    lattice: object
    diagnostics: deque = field(default_factory=lambda: deque(maxlen=4096))

    @property
    def u_mod(self):
        return from_eigen_coefficients(self.lattice, *self.coeffs)

    def copy(self):
        return SimState(self.t, self.coeffs.copy(), self.lattice, deque(self.diagnostics, self.diagnostics.maxlen))


@dataclass
class RunResult:
    rows: list
    columns: tuple
    state: object
    aborted: bool = False
    reason: str = ""


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------


def symmetrize(a, lattice):
    """Project eigen-coefficients onto the reality pairing (in place).

    Enforces ``a0(-k) = s0 conj a0(k)`` and ``a+(-k) = conj a-(k)`` by
    averaging each pair, and clears the zero mode.
    """
    h = np.flatnonzero(lattice.half_mask())
    q = lattice.partner[h]
    s0 = lattice.s0[h]
    a0 = 0.5 * (a[0, h] + s0 * a[0, q].conj())
    ap = 0.5 * (a[1, h] + a[2, q].conj())
    am = 0.5 * (a[2, h] + a[1, q].conj())
    a[0, h], a[1, h], a[2, h] = a0, ap, am
    a[0, q] = s0 * a0.conj()
    a[1, q] = am.conj()
    a[2, q] = ap.conj()
    a[:, lattice.zero] = 0.0
    return a


def random_eigen_coefficients(K, seed, slope=2.0, dom=None, weights=(1.0, 1.0, 1.0), amplitude=None):
    """Random real-closed eigen-coefficients ``(3, size)`` on the (r0, r+, r-) frame.

    Each half-lattice coefficient has magnitude ``w |kc|^(-slope)`` and a
    uniform random phase; the other half follows by conjugate pairing.
    """
    dom = dom or DomainParams(2.0)
    lat = get_lattice(int(K), dom)
    rng = np.random.default_rng(seed)
    h = np.flatnonzero(lat.half_mask())
    mag = lat.norm[h] ** (-float(slope))
    a = np.zeros((3, lat.size), complex)
    for j, w in enumerate(weights):
        theta = rng.uniform(0.0, 2 * np.pi, size=h.size)
        a[j, h] = w * mag * np.exp(1j * theta)
    symmetrize(a, lat)
    if amplitude is not None:
        nrm = math.sqrt(float(np.sum(np.abs(a) ** 2)))
        if nrm > 0:
            a *= amplitude / nrm
    return a


def random_divfree_field(K, seed, slope=2.0, dom=None, weights=(1.0, 1.0, 1.0), amplitude=None):
    """Spectrally coloured divergence-free real field with no ``r00`` content."""
    dom = dom or DomainParams(2.0)
    a = random_eigen_coefficients(K, seed, slope, dom, weights, amplitude)
    return from_eigen_coefficients(get_lattice(int(K), dom), *a)


def initial_state(cfg, field_=None):
    lat = get_lattice(int(cfg.K), cfg.dom)
    if field_ is None:
        a = random_eigen_coefficients(cfg.K, cfg.seed, cfg.spectrum_slope, cfg.dom, cfg.weights, cfg.amplitude)
    else:
        if field_.lattice.K != lat.K or field_.lattice.dom != cfg.dom:
            raise DomainError("initial field does not match the configured (K, dom)")
        vals = field_.values
        a = np.stack([np.sum(vals * r.conj(), axis=1) for r in (lat.r0, lat.rp, lat.rm)])
        symmetrize(a, lat)
    return SimState(0.0, a, lat, deque(maxlen=cfg.ring))


# ---------------------------------------------------------------------------
# integrators
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _context(K, dom, bw):
    return OperatorContext(K, dom, bw)


def phase_number(cfg):
    """``N dt max|sigma . omega|`` with the maximum over the lattice's three-wave phases."""
    lat = get_lattice(int(cfg.K), cfg.dom)
    return cfg.N * cfg.step * 3.0 * float(lat.omega[lat.nonzero].max())


class _Integrator:
    """Lawson RK4 stepper for one system at fixed configuration."""

    def __init__(self, cfg, system, nonlinear=True):
        if system not in ("restricted", "full"):
            raise DomainError(f"unknown system {system!r}")
        self.cfg = cfg
        self.system = system
        self.nonlinear = nonlinear
        self.lat = lat = get_lattice(int(cfg.K), cfg.dom)
        self.ctx = _context(int(cfg.K), cfg.dom, cfg.bw) if nonlinear else None
        M = dissipation_matrix(lat, cfg.nu1, cfg.nu2)
        k2 = np.where(lat.nonzero, lat.norm2, 0.0)
        self.D = np.stack([k2 * M[:, 0, 0].real, k2 * M[:, 1, 1].real, k2 * M[:, 2, 2].real])
        off = M.copy()
        for j in range(3):
            off[:, j, j] = 0.0
        self.off = off * k2[:, None, None]
        self.has_off = system == "full" and bool(np.abs(self.off).max() > 0)
        h = cfg.step
        self.E1 = np.exp(-self.D * h)
        self.E2 = np.exp(-self.D * h / 2)
        self.h = h
        self.phase = phase_number(cfg)
        self.violation = self.phase > cfg.phase_cfl
        if self.violation and cfg.on_violation == "warn":
            warnings.warn(
                f"phase resolution N*dt*max|phase| = {self.phase:.3g} exceeds {cfg.phase_cfl}", RuntimeWarning
            )

    def rhs(self, t, a):
        tau = self.cfg.N * t
        out = np.zeros_like(a)
        if self.nonlinear:
            if self.system == "restricted":
                out -= self.ctx.restricted_eigen(a, a, tau, real=True)
            else:
                out -= self.ctx.full_eigen(a, a, tau, real=True)
        if self.has_off:
            ph = np.exp(1j * self.lat.omega * tau)
            rot = np.array([np.ones_like(ph), ph, ph.conj()])
            out -= np.einsum("iab,bi->ai", self.off, a * rot) * rot.conj()
        return out

    def step(self, t, a):
        if self.violation and self.cfg.on_violation == "reject":
            raise StepRejected(f"phase resolution {self.phase:.3g} exceeds {self.cfg.phase_cfl}")
        h, E1, E2 = self.h, self.E1, self.E2
        k1 = self.rhs(t, a)
        k2 = self.rhs(t + h / 2, E2 * (a + 0.5 * h * k1))
        Ea = E2 * a
        k3 = self.rhs(t + h / 2, Ea + 0.5 * h * k2)
        k4 = self.rhs(t + h, E1 * a + h * E2 * k3)
        new = E1 * a + (h / 6.0) * (E1 * k1 + 2.0 * E2 * (k2 + k3) + k4)
        if not np.all(np.isfinite(new)):
            raise StepRejected(f"non-finite state after step at t={t + h:.6g}")
        return symmetrize(new, self.lat)


@lru_cache(maxsize=16)
def _integrator(cfg, system, nonlinear=True):
    return _Integrator(cfg, system, nonlinear)


def _advance(state, cfg, system, nonlinear):
    integ = _integrator(cfg, system, nonlinear)
    a = integ.step(state.t, state.coeffs)
    return SimState(state.t + integ.h, a, state.lattice, state.diagnostics)


def step_full(state, cfg, nonlinear=True):
    """One step of the modulated full system."""
    return _advance(state, cfg, "full", nonlinear)


def step_restricted(state, cfg, nonlinear=True):
    """One step of the modulated near-resonant system."""
    return _advance(state, cfg, "restricted", nonlinear)


# ---------------------------------------------------------------------------
# diagnostics and driver
# ---------------------------------------------------------------------------

DIAGNOSTIC_COLUMNS = (
    "t",
    "l2",
    "l2_slow",
    "l2_fast",
    "h1_slow",
    "h1_fast",
    "h2_slow",
    "h2_fast",
    "q_l2",
    "q_h1",
    "energy_residual",
    "mains_lhs",
    "mains_bracket",
    "mainf2_lhs",
    "mainf2_ref",
)


def _norms(a, lat):
    k2 = np.where(lat.nonzero, lat.norm2, 0.0)
    s = np.abs(a[0]) ** 2
    f = np.abs(a[1]) ** 2 + np.abs(a[2]) ** 2
    ke2 = np.where(lat.nonzero, lat.keta**2, 0.0)
    return {
        "l2": math.sqrt(float(np.sum(s + f))),
        "l2_slow": math.sqrt(float(np.sum(s))),
        "l2_fast": math.sqrt(float(np.sum(f))),
        "h1_slow": math.sqrt(float(np.sum(k2 * s))),
        "h1_fast": math.sqrt(float(np.sum(k2 * f))),
        "h2_slow": math.sqrt(float(np.sum(k2**2 * s))),
        "h2_fast": math.sqrt(float(np.sum(k2**2 * f))),
        "q_l2": math.sqrt(float(np.sum(ke2 * s))),
        "q_h1": math.sqrt(float(np.sum(k2 * ke2 * s))),
        "h1": math.sqrt(float(np.sum(k2 * (s + f)))),
    }


class _Monitor:
    """Running energy-inequality and global-bound quantities for one trajectory."""

    def __init__(self, cfg, a0, lat):
        self.cfg = cfg
        self.lat = lat
        n = _norms(a0, lat)
        self.E0 = n["l2"] ** 2
        self.prev = n
        self.int_h1 = 0.0
        self.int_h2s = 0.0
        self.int_h2f = 0.0
        num = cfg.nu_min
        self.bracket = (n["l2"] ** 2 / num + n["h1_slow"]) ** 2 if num > 0 else float("nan")
        self.f_ref = n["h1_fast"] ** 2

    def update(self, a, h):
        n = _norms(a, self.lat)
        p = self.prev
        self.int_h1 += 0.5 * h * (p["h1"] ** 2 + n["h1"] ** 2)
        self.int_h2s += 0.5 * h * (p["h2_slow"] ** 2 + n["h2_slow"] ** 2)
        self.int_h2f += 0.5 * h * (p["h2_fast"] ** 2 + n["h2_fast"] ** 2)
        self.prev = n
        return n

    def row(self, t, n=None):
        n = n or self.prev
        num = self.cfg.nu_min
        r = {"t": t}
        for c in DIAGNOSTIC_COLUMNS[1:10]:
            r[c] = n[c]
        r["energy_residual"] = n["l2"] ** 2 + 2 * num * self.int_h1 - self.E0
        r["mains_lhs"] = n["h1_slow"] ** 2 + 2 * num * self.int_h2s
        r["mains_bracket"] = self.bracket
        r["mainf2_lhs"] = n["h1_fast"] ** 2 + num * self.int_h2f
        r["mainf2_ref"] = self.f_ref
        return r


def _hnorm(d, lat, ell):
    k2 = np.where(lat.nonzero, lat.norm2, 0.0)
    return math.sqrt(float(np.sum(k2**ell * np.sum(np.abs(d) ** 2, axis=0))))


def run(cfg, system="restricted", initial=None, nonlinear=True, callback=None):
    """Integrate to ``cfg.T`` and return sampled diagnostics.

    ``system`` is ``"restricted"``, ``"full"`` or ``"compare"``; the last
    integrates both from the same initial data and adds the column
    ``err`` = ``|| u_full - u_restricted ||`` in ``H^ell_prime`` (in
    modulated variables) plus the full system's L2 norm ``l2_full``.
    Diagnostics describe the restricted trajectory unless
    ``system="full"``.  A non-finite state or rejected step stops the run
    and returns the last valid state with ``aborted=True``.
    """
    if system not in SYSTEMS:
        raise DomainError(f"system must be one of {SYSTEMS}")
    st = initial_state(cfg, initial)
    lat = st.lattice
    primary = "full" if system == "full" else "restricted"
    cols = DIAGNOSTIC_COLUMNS + (("err", "l2_full") if system == "compare" else ())
    mon = _Monitor(cfg, st.coeffs, lat)
    other = st.coeffs.copy() if system == "compare" else None

    def sample(t, a, b):
        r = mon.row(t)
        if b is not None:
            r["err"] = _hnorm(b - a, lat, cfg.ell_prime)
            r["l2_full"] = math.sqrt(float(np.sum(np.abs(b) ** 2)))
        st.diagnostics.append(r)
        rows.append(r)
        if callback is not None:
            callback(r)

    rows = []
    sample(0.0, st.coeffs, other)
    a, t = st.coeffs, 0.0
    aborted, reason = False, ""
    try:
        ip = _integrator(cfg, primary, nonlinear)
        io = _integrator(cfg, "full", nonlinear) if system == "compare" else None
        for i in range(1, cfg.n_steps + 1):
            a_new = ip.step(t, a)
            b_new = io.step(t, other) if io is not None else None
            t = i * cfg.step
            a = a_new
            other = b_new
            mon.update(a, ip.h)
            if i % cfg.sample_every == 0 or i == cfg.n_steps:
                sample(t, a, other)
    except StepRejected as exc:
        aborted, reason = True, str(exc)
    final = SimState(t, a, lat, st.diagnostics)
    if system == "compare":
        final = (final, SimState(t, other, lat))
    return RunResult(rows, cols, final, aborted, reason)
