import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nrbous import BandwidthSpec, DomainError, DomainParams, ResourceError
from nrbous.resonance import (
    FLAG_FFF,
    FLAG_FFS,
    FLAG_FSF,
    admissible_fff_signs,
    classify,
    count_fff,
    count_mixed,
    enumerate_triads,
    fff_min_phase,
    fit_power_law,
    lower_bound_estimate,
    lower_bound_family,
    mixed_annulus_counts,
    phase,
    sign_lemma_scan,
)
from nrbous.spectral import dispersion


def _omega(k, dom):
    c = np.asarray(k, float) / dom.scale
    return math.sqrt((c[0] ** 2 + c[1] ** 2 + dom.eta**2 * c[2] ** 2) / (c @ c))


@pytest.mark.parametrize("C", [-1.0, -0.1])
def test_bandwidth_rejects_negative(C):
    with pytest.raises(DomainError):
        BandwidthSpec(C_delta=C)
    with pytest.raises(DomainError):
        BandwidthSpec(C_delta_star=C)


@pytest.mark.parametrize("zeta", [1.0, 2.5])
def test_bandwidth_rejects_zeta(zeta):
    with pytest.raises(DomainError):
        BandwidthSpec(zeta=zeta)


def test_bandwidth_cap():
    bw = BandwidthSpec(100.0, 100.0)
    assert bw.delta(1.0, 1.0, 1.0, 2.5) < 0.5
    assert bw.delta_star(1.0, 1.0, 1.0, 0.4) < 0.2
    assert BandwidthSpec(1.0).delta(10.0, 3.0, 2.0, 2.5) == pytest.approx(0.1)
    assert BandwidthSpec().delta_star(4.0, 1.0, 1.0, 2.5) == pytest.approx(4.0**-1.2)


def test_phase_examples():
    dom = DomainParams(2.0)
    assert phase((1, 0, 0), (0, 1, 0), (-1, -1, 0), "+-+", dom) == pytest.approx(1.0)
    assert phase((1, 0, 0), (0, 0, 1), (-1, 0, -1), (1, -1, 0), dom) == pytest.approx(-1.0)
    with pytest.raises(DomainError):
        phase((0, 0, 0), (1, 0, 0), (-1, 0, 0), "++-", dom)


@settings(max_examples=80, deadline=None)
@given(
    w=st.lists(st.floats(0.05, 3.0), min_size=3, max_size=3),
)
def test_fff_min_phase_matches_brute_force(w):
    brute = min(abs(np.dot(s, w)) for s in itertools.product((1, -1), repeat=3))
    assert fff_min_phase(*w) == pytest.approx(brute, abs=1e-12)


def test_classify_membership():
    dom = DomainParams(2.5)
    bw = BandwidthSpec(1.0, 1.0, 1.2)
    rec = classify((1, 0, 0), (0, 1, 0), (-1, -1, 0), bw, dom)
    assert rec.member("FFS") and rec.member("SSS") and rec.member("SFF")
    assert not rec.member("FFF")
    assert abs(rec.phase) == pytest.approx(1.0)
    assert rec.delta == pytest.approx(min(1 / math.sqrt(2), BandwidthSpec.cap(2.5)))
    with pytest.raises(DomainError):
        classify((1, 0, 0), (1, 0, 0), (1, 0, 0), bw, dom)


@settings(max_examples=50, deadline=None)
@given(
    k=st.tuples(*[st.integers(-5, 5)] * 3),
    m=st.tuples(*[st.integers(-5, 5)] * 3),
    eta=st.sampled_from([0.4, 2.5]),
)
def test_classify_against_definitions(k, m, eta):
    n = tuple(-a - b for a, b in zip(k, m))
    if (0, 0, 0) in (k, m, n):
        return
    dom = DomainParams(eta, 1.3, 0.7)
    bw = BandwidthSpec(2.0, 1.5, 1.5)
    rec = classify(k, m, n, bw, dom)
    w = [_omega(v, dom) for v in (k, m, n)]
    nr = [float(np.linalg.norm(np.array(v) / dom.scale)) for v in (k, m, n)]
    d = min(bw.cap(eta), 2.0 / max(nr))
    ds = min(bw.cap(eta), 1.5 / max(nr) ** 1.5)
    best = min(abs(np.dot(s, w)) for s in itertools.product((1, -1), repeat=3))
    assert rec.member("FFF") == (best <= d)
    assert rec.member("FFS") == (abs(w[0] - w[1]) <= ds)
    assert rec.member("FSF") == (abs(w[0] - w[2]) <= ds)
    assert abs(rec.phase) == pytest.approx(best, abs=1e-12)


def test_admissible_signs():
    assert admissible_fff_signs([1.2, 0.8, 0.5], 0.1) == [(1, -1, -1), (-1, 1, 1)]
    with pytest.raises(DomainError):
        admissible_fff_signs([0.5, 0.8, 1.2], 0.1)


@pytest.mark.parametrize("eta", [0.4, 0.7, 1.5, 2.5])
def test_sign_lemma_small_cube(eta):
    dom = DomainParams(eta)
    out = sign_lemma_scan(5, BandwidthSpec(100.0, 100.0), dom)
    assert out["pattern_violations"] == 0
    assert out["excluded_mixed_members"] == 0
    if out["fff_members"]:
        assert out["omega3_excess"] <= 1e-12


@pytest.mark.parametrize("eta", [0.7, 1.5])
def test_fff_empty_when_window_closed(eta):
    # min(eta, 1) >= max(eta, 1) / 2 plus the bandwidth: no triad resonates
    out = sign_lemma_scan(6, BandwidthSpec(100.0, 100.0), DomainParams(eta))
    assert out["fff_members"] == 0


def test_enumerate_matches_classify():
    dom = DomainParams(2.5, 1.3, 0.7)
    bw = BandwidthSpec(1.0, 1.0, 1.2)
    idx = enumerate_triads(3, bw, dom, include="all")
    lat = idx.lattice
    rng = np.random.default_rng(0)
    for j in rng.choice(len(idx), 200, replace=False):
        k, m, n = (tuple(int(x) for x in lat.kint[a[j]]) for a in (idx.k, idx.m, idx.n))
        rec = classify(k, m, n, bw, dom)
        for bit, name in ((FLAG_FFF, "FFF"), (FLAG_FFS, "FFS"), (FLAG_FSF, "FSF")):
            assert bool(idx.flags[j] & bit) == rec.member(name)
    sizes = np.diff(idx.offsets)
    assert sizes.sum() == len(idx)
    np.testing.assert_array_equal(lat.kint[idx.k] + lat.kint[idx.m], lat.kint[idx.p])


def test_enumerate_restricted_subset_and_records():
    dom = DomainParams(2.5)
    bw = BandwidthSpec()
    full = enumerate_triads(3, bw, dom, include="all")
    res = enumerate_triads(3, bw, dom)
    assert len(res) == int(np.count_nonzero(full.flags & 7))
    recs = res.records((1, 0, 1))
    assert all(r.membership & {"FFF", "FFS", "FSF"} for r in recs)
    assert all(tuple(a + b for a, b in zip(r.k, r.m)) == (-1, 0, -1) for r in recs)


def test_enumerate_budget():
    with pytest.raises(ResourceError) as err:
        enumerate_triads(3, BandwidthSpec(), DomainParams(2.5), include="all", max_triads=10)
    assert err.value.count > 10
    with pytest.raises(DomainError):
        enumerate_triads(0, BandwidthSpec(), DomainParams(2.5))


def _brute_fff(n, delta, dom):
    nn = np.linalg.norm(np.array(n) / dom.scale)
    R = int(math.ceil(nn * max(dom.L1, dom.L2, 1))) + 1
    total = 0
    for k in itertools.product(range(-R, R + 1), repeat=3):
        m = tuple(-a - b for a, b in zip(n, k))
        if k == (0, 0, 0) or m == (0, 0, 0):
            continue
        kn = np.linalg.norm(np.array(k) / dom.scale)
        if not (nn / 2 <= kn <= nn):
            continue
        w = [_omega(v, dom) for v in (k, m, n)]
        if min(abs(np.dot(s, w)) for s in itertools.product((1, -1), repeat=3)) <= delta:
            total += 1
    return total


@pytest.mark.parametrize("n,delta", [((2, 1, 1), 0.3), ((3, 0, 1), 0.1), ((1, 2, 2), 0.45)])
def test_count_fff_brute_force(n, delta):
    dom = DomainParams(2.5, 1.3, 0.7)
    assert count_fff(n, delta, dom) == _brute_fff(n, delta, dom)


def test_count_fff_validation():
    dom = DomainParams(2.5)
    with pytest.raises(DomainError):
        count_fff((0, 0, 0), 0.1, dom)
    with pytest.raises(DomainError):
        count_fff((1, 0, 0), 0.6, dom)
    assert count_fff((3, 1, 1), 0.2, DomainParams(1.5)) == 0


@pytest.mark.parametrize("eta,L", [(2.5, (1.0, 1.0)), (0.4, (1.3, 0.7))])
def test_count_mixed_brute_force(eta, L):
    dom = DomainParams(eta, *L)
    n, M, ds = (1, 1, 1), 5.0, 0.08
    wn = dispersion(n, dom)
    R = int(M * max(L)) + 1
    brute = 0
    for k in itertools.product(range(-R, R + 1), repeat=3):
        if k == (0, 0, 0) or np.linalg.norm(np.array(k) / dom.scale) > M:
            continue
        brute += abs(_omega(k, dom) - wn) <= ds
    assert count_mixed(n, M, ds, dom) == brute
    assert count_mixed(n, 0, ds, dom) == 0


def test_mixed_annuli_sum():
    dom = DomainParams(2.5)
    bw = BandwidthSpec(C_delta_star=0.05, zeta=1.2)
    rows = mixed_annulus_counts((1, 0, 0), 3, bw, dom)
    assert [r[0] for r in rows] == [0, 1, 2, 3]
    assert all(r[1] <= BandwidthSpec.cap(2.5) for r in rows)


@pytest.mark.parametrize("eta", [0.4, 2.5])
def test_lower_bound_family(eta):
    dom = DomainParams(eta)
    fam = lower_bound_family(40, 0.1, dom)
    assert len(fam) > 0
    w = np.array([_omega(k, dom) for k in fam])
    assert np.all(np.abs(w - 1) <= 0.1)
    nr = np.linalg.norm(fam, axis=1)
    assert np.all((nr >= 40) & (nr < 80))
    assert len(fam) / lower_bound_estimate(40, 0.1, dom) >= 0.9
    assert len(lower_bound_family(0, 0.1, dom)) == 0
    with pytest.raises(DomainError):
        lower_bound_family(10, 0.3, DomainParams(0.4))


def test_fit_power_law_exact():
    x = np.array([2.0, 4.0, 8.0, 16.0])
    fit = fit_power_law(x, 3 * x**1.5)
    assert fit.slope == pytest.approx(1.5)
    assert fit.constant == pytest.approx(3.0)
    with pytest.raises(DomainError):
        fit_power_law([1.0, 2.0], [0.0, 1.0])


@pytest.mark.parametrize(
    "k,m,n,sigma,eta,want",
    [
        ((1, 0, 0), (-2, 0, 0), (1, 0, 0), "+-0", 2.0, 0.0),
        ((1, 2, 3), (0, 1, -1), (-1, -3, -2), "000", 2.5, 0.0),
        ((0, 0, 1), (0, 0, 1), (0, 0, -2), "++-", 2.0, 2.0),
    ],
)
def test_phase_worked_values(k, m, n, sigma, eta, want):
    assert phase(k, m, n, sigma, DomainParams(eta)) == pytest.approx(want, abs=1e-13)


def test_classify_worked_cases():
    zero = BandwidthSpec(0.0, 0.0)
    assert classify((1, 0, 0), (1, 0, 0), (-2, 0, 0), zero, DomainParams(2.5)).member("FFS")
    assert classify((0, 0, 1), (0, 0, 1), (0, 0, -2), zero, DomainParams(2.0)).member("FFS")
    wide = BandwidthSpec(100.0, 100.0)
    rng = np.random.default_rng(3)
    for _ in range(200):
        k, m = rng.integers(-6, 7, size=(2, 3))
        n = -k - m
        if not (k.any() and m.any() and n.any()):
            continue
        assert not classify(tuple(k), tuple(m), tuple(n), wide, DomainParams(1.5)).member("FFF")


def test_admissible_worked_cases():
    assert admissible_fff_signs([2.0, 2.0, 2.0], 0.3) == [(1, -1, -1), (-1, 1, 1)]
    assert fff_min_phase(2.0, 2.0, 2.0) == pytest.approx(2.0)
    assert fff_min_phase(1.9, 1.0, 1.0) == pytest.approx(0.1)


def test_enumerate_small_cube_all_sss():
    idx = enumerate_triads(1, BandwidthSpec(), DomainParams(2.5), include="all")
    from nrbous.resonance import FLAG_SFF, FLAG_SSS

    assert np.all(idx.flags & FLAG_SSS) and np.all(idx.flags & FLAG_SFF)
    lat = idx.lattice
    # every convolution triad of nonzero modes inside the cube
    brute = sum(
        1
        for i in range(lat.size)
        for j in range(lat.size)
        if lat.nonzero[i] and lat.nonzero[j] and np.all(np.abs(lat.kint[i] + lat.kint[j]) <= 1)
        and np.any(lat.kint[i] + lat.kint[j])
    )
    assert len(idx) == brute


def test_enumerate_window_closed_has_no_fff():
    idx = enumerate_triads(8, BandwidthSpec(1.0, 1.0), DomainParams(1.5))
    assert idx.count(FLAG_FFF) == 0 and len(idx) > 0


def test_enumerate_even_and_monotone():
    dom = DomainParams(2.5, 1.3, 0.7)
    small = enumerate_triads(4, BandwidthSpec(0.5, 0.5, 1.2), dom, include="all")
    big = enumerate_triads(4, BandwidthSpec(2.0, 2.0, 1.2), dom, include="all")
    lat = small.lattice
    key = lambda ix, j: (ix.k[j], ix.m[j])
    flags = {key(small, j): small.flags[j] for j in range(len(small))}
    neg = lat.partner
    for j in range(0, len(small), 37):
        mirrored = flags[(neg[small.k[j]], neg[small.m[j]])]
        assert mirrored == small.flags[j]
    assert np.all((small.flags & ~big.flags) == 0)


def test_count_fff_irrational_eta_exact():
    dom = DomainParams(math.sqrt(5))
    counts = [count_fff((j, 1, 2), 0.0, dom) for j in (4, 8, 16)]
    assert max(counts) <= 4


def test_count_fff_window_closed():
    dom = DomainParams(1.5)
    assert all(count_fff(n, 0.3, dom) == 0 for n in [(5, 0, 0), (3, 4, 5), (0, 0, 9), (7, -2, 3)])


def test_count_mixed_exact_horizontal():
    # delta* = 0 at n = (1, 0, 0): exactly the horizontal modes in the disc
    dom = DomainParams(2.5)
    M = 32
    r = np.arange(-M, M + 1)
    g1, g2 = np.meshgrid(r, r, indexing="ij")
    disc = int(np.count_nonzero(g1**2 + g2**2 <= M * M)) - 1
    assert count_mixed((1, 0, 0), M, 0.0, dom) == disc


def test_count_mixed_vertical_target():
    dom = DomainParams(2.0)
    n, M, ds = (0, 0, 2), 8.0, 0.3
    brute = 0
    for k in itertools.product(range(-8, 9), repeat=3):
        if k != (0, 0, 0) and np.linalg.norm(k) <= M:
            brute += abs(_omega(k, dom) - 2.0) <= ds
    assert count_mixed(n, M, ds, dom) == brute


def test_mixed_annulus_exponent_and_sqrt_scaling():
    dom = DomainParams(2.5)
    rows = mixed_annulus_counts((1, 0, 0), 5, BandwidthSpec(C_delta_star=1.0, zeta=1.2), dom, i_min=1)
    fit = fit_power_law([2.0**i for i, _, _ in rows], [c for *_, c in rows])
    assert fit.slope <= 2.4 + 0.2
    # once delta* is well above the lattice spacing, doubling it multiplies counts by about sqrt(2)
    a = count_mixed((1, 0, 0), 64, 0.05, dom)
    b = count_mixed((1, 0, 0), 64, 0.1, dom)
    assert b / a == pytest.approx(math.sqrt(2), rel=0.1)


def test_counting_hypothesis_window_closed():
    from nrbous.resonance import counting_hypothesis_check

    rep = counting_hypothesis_check(8, BandwidthSpec(), DomainParams(1.5))
    assert rep.fff_empty and rep.fff_inconclusive
    with pytest.raises(DomainError):
        counting_hypothesis_check(4, BandwidthSpec(), DomainParams(1.5))
