import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nrbous import DomainError, DomainParams
from nrbous.coefficients import (
    closed_form_scan,
    coupling,
    ffs_closed_form,
    ffs_coefficient_bound_check,
    slow_coefficient,
    slow_coefficient_from_couplings,
    write_coefficient_scan,
)
from nrbous.spectral import dispersion, eigenframe

DOMAINS = [DomainParams(e, *L) for e in (0.4, 1.5, 2.5) for L in ((1.0, 1.0), (1.3, 0.7))]

vec = st.tuples(*[st.integers(-6, 6)] * 3)


def _triad(k, m):
    n = tuple(-a - b for a, b in zip(k, m))
    return None if (0, 0, 0) in (k, m, n) else (k, m, n)


def _prime(k, dom):
    return np.append(np.array(k, float) / dom.scale, 0.0)


def test_coupling_from_frames():
    dom = DomainParams(2.5, 1.3, 0.7)
    k, m, n = (1, 0, 2), (0, 1, -1), (-1, -1, -1)
    fk, fm, fp = eigenframe(k, dom), eigenframe(m, dom), eigenframe((1, 1, 1), dom)
    want = 1j * np.dot(fk.rplus, _prime(m, dom)) * np.vdot(fp.r0, fm.rminus)
    c = coupling(k, m, n, "+-0", dom)
    assert complex(c) == pytest.approx(want, abs=1e-14)
    assert abs(c) == pytest.approx(abs(want))


def test_coupling_rejects_r00_and_bad_triads():
    dom = DomainParams(2.0)
    with pytest.raises(DomainError):
        coupling((1, 0, 0), (0, 1, 0), (-1, -1, 0), ("00", 0, 0), dom)
    with pytest.raises(DomainError):
        coupling((1, 0, 0), (0, 1, 0), (0, 0, 1), "+-0", dom)


@pytest.mark.parametrize("dom", DOMAINS, ids=lambda d: f"eta{d.eta}-L{d.L1}")
@settings(max_examples=25, deadline=None)
@given(k=vec, m=vec)
def test_closed_form_matches_direct(dom, k, m):
    t = _triad(k, m)
    if t is None:
        return
    S = slow_coefficient(*t, dom).value
    C = ffs_closed_form(*t, dom)
    scale = np.linalg.norm(np.array(k) / dom.scale) + np.linalg.norm(np.array(m) / dom.scale)
    assert abs(C.value - S) <= 1e-11 * max(abs(S), 1e-3 * scale)
    assert C.value == pytest.approx(sum(C.parts), abs=1e-14)


@pytest.mark.parametrize("dom", DOMAINS[::2], ids=lambda d: f"eta{d.eta}")
@settings(max_examples=25, deadline=None)
@given(k=vec, m=vec)
def test_channels_recombine(dom, k, m):
    t = _triad(k, m)
    if t is None:
        return
    S = slow_coefficient(*t, dom).value
    assert slow_coefficient_from_couplings(*t, dom) == pytest.approx(S, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(k=vec, m=vec, dom=st.sampled_from(DOMAINS))
def test_bound_ratio_finite(k, m, dom):
    t = _triad(k, m)
    if t is None:
        return
    r = ffs_coefficient_bound_check(*t, dom)
    assert np.isfinite(r) and r < 10.0


def test_equal_frequency_gives_zero():
    # equal frequencies force S = 0, the factor omega_k - omega_m in action
    dom = DomainParams(2.5)
    k, m = (1, 2, 1), (2, -1, -1)
    assert dispersion(k, dom) == pytest.approx(dispersion(m, dom))
    n = tuple(-a - b for a, b in zip(k, m))
    assert abs(slow_coefficient(k, m, n, dom).value) < 1e-13
    assert ffs_coefficient_bound_check(k, m, n, dom) == 0.0


def test_vertical_inputs_vanish():
    dom = DomainParams(1.5)
    assert ffs_closed_form((0, 0, 1), (0, 0, 2), (0, 0, -3), dom).value == 0
    assert abs(slow_coefficient((0, 0, 1), (0, 0, 2), (0, 0, -3), dom).value) < 1e-15


@pytest.mark.parametrize("dom", DOMAINS, ids=lambda d: f"eta{d.eta}-L{d.L1}")
def test_closed_form_scan_small(dom):
    s = closed_form_scan(4, dom)
    assert s.triads > 0
    assert s.max_rel_error < 1e-11
    assert s.degenerate_max_abs == 0
    assert s.bound_violations == 0


def test_scan_csv(tmp_path):
    dom = DomainParams(2.5, 1.3, 0.7)
    p = tmp_path / "scan.csv"
    write_coefficient_scan(p, 2, dom)
    with open(p) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == closed_form_scan(2, dom).triads
    r = rows[17]
    k = tuple(int(r[f"k{i}"]) for i in (1, 2, 3))
    m = tuple(int(r[f"m{i}"]) for i in (1, 2, 3))
    n = tuple(int(r[f"n{i}"]) for i in (1, 2, 3))
    S = slow_coefficient(k, m, n, dom).value
    assert complex(float(r["re_S"]), float(r["im_S"])) == pytest.approx(S, abs=1e-13)
    assert float(r["closed_form_error"]) < 1e-11


def test_slow_slow_slow_coupling_vanishes_on_vertical_modes():
    dom = DomainParams(2.5, 1.3, 0.7)
    assert coupling((0, 0, 1), (0, 0, 2), (0, 0, -3), (0, 0, 0), dom).value == 0
    assert abs(coupling((1, 0, 1), (0, 0, 2), (-1, 0, -3), (0, 0, 0), dom).value) < 1e-15


@pytest.mark.parametrize("dom", DOMAINS[::2])
def test_slow_coefficient_homogeneous_degree_one(dom):
    k, m = np.array((1, 2, 1)), np.array((2, -1, 2))
    n = -(k + m)
    a = slow_coefficient(tuple(k), tuple(m), tuple(n), dom).value
    b = slow_coefficient(tuple(2 * k), tuple(2 * m), tuple(2 * n), dom).value
    assert b == pytest.approx(2 * a, rel=1e-12, abs=1e-14)
    r1 = ffs_coefficient_bound_check(tuple(k), tuple(m), tuple(n), dom)
    r2 = ffs_coefficient_bound_check(tuple(2 * k), tuple(2 * m), tuple(2 * n), dom)
    assert r2 == pytest.approx(r1, rel=1e-10)
