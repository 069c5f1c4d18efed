import os
import subprocess
import sys

import numpy as np
import pytest

from nrbous import BandwidthSpec, DomainParams, kernels
from nrbous.operators import OperatorContext, restricted_bilinear
from nrbous.solver import random_divfree_field

needs_cython = pytest.mark.skipif("cython" not in kernels.backends(), reason="compiled extension not built")


def test_python_backend_always_available():
    assert "python" in kernels.backends()
    assert kernels.BACKEND in kernels.backends()


@needs_cython
@pytest.mark.parametrize("eta", [0.4, 2.5])
def test_restricted_kernels_agree(eta):
    dom = DomainParams(eta, 1.3, 0.7)
    bw = BandwidthSpec(1.0, 1.0, 1.2)
    cy = OperatorContext(4, dom, bw, backend="cython")
    py = OperatorContext(4, dom, bw, index=cy.index, backend="python")
    U = random_divfree_field(4, seed=5, dom=dom)
    V = random_divfree_field(4, seed=6, dom=dom)
    a = restricted_bilinear(U, V, 0.9, cy).values
    b = restricted_bilinear(U, V, 0.9, py).values
    np.testing.assert_allclose(a, b, atol=1e-13)


@needs_cython
def test_kernel_masks_agree():
    dom = DomainParams(2.5)
    ctx = OperatorContext(3, dom)
    lat = ctx.lattice
    rng = np.random.default_rng(1)
    u = rng.normal(size=(lat.size, 3, 3)) + 1j * rng.normal(size=(lat.size, 3, 3))
    v = rng.normal(size=(lat.size, 4, 4)) + 1j * rng.normal(size=(lat.size, 4, 4))
    for mask in (7, 5, 2):
        for half in (False, True):
            args = ctx._kernel_args(mask, half)
            outs = []
            for name, (acc, _) in sorted(kernels.backends().items()):
                out = np.zeros((lat.size, 4, 4), complex)
                acc(*args, ctx._kc, u, v, out)
                outs.append(out)
            np.testing.assert_allclose(outs[0], outs[1], atol=1e-12)


@needs_cython
def test_cube_kernels_agree():
    ctx = OperatorContext(2, DomainParams(1.5))
    lat = ctx.lattice
    rng = np.random.default_rng(2)
    u = rng.normal(size=(lat.size, 3)) + 1j * rng.normal(size=(lat.size, 3))
    v = rng.normal(size=(lat.size, 4)) + 1j * rng.normal(size=(lat.size, 4))
    outs = []
    for _, (_, cube) in sorted(kernels.backends().items()):
        out = np.zeros((lat.size, 4), complex)
        cube(ctx.K, ctx._kc, u, v, out)
        outs.append(out)
    np.testing.assert_allclose(outs[0], outs[1], atol=1e-12)


def test_pure_python_switch():
    code = "from nrbous import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, NRBOUS_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
