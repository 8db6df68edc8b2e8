"""Backend parity: compiled cycle kernels against the pure-Python fallback."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

import glotfit
from glotfit import _lfcore_py
from glotfit import kernels

try:
    from glotfit import _lfcore
except ImportError:
    _lfcore = None

needs_compiled = pytest.mark.skipif(_lfcore is None,
                                    reason="compiled extension not built")


def random_grids(rng, n):
    """Admissible (ne, np, na, nc, n0) tuples from the corpus shape ranges."""
    out = []
    while len(out) < n:
        n0 = int(rng.integers(54, 201))
        te = rng.uniform(0.3, 0.9)
        tp = te * rng.uniform(0.65, 0.8)
        ta = rng.uniform(0.03, 0.08)
        np_ = int(math.floor(tp * n0 + 0.5))
        ne = int(math.floor(te * n0 + 0.5))
        na = int(math.floor(ta * n0 + 0.5))
        if 0 < np_ < ne < n0 and 1 <= na < n0 - ne:
            out.append((ne, np_, na, n0, n0))
    return out


def test_backend_name_matches_module():
    assert kernels.BACKEND in ("compiled", "python")
    assert glotfit.KERNEL_BACKEND == kernels.BACKEND
    if _lfcore is not None:
        assert kernels.BACKEND == "compiled"


def test_pure_python_env_forces_fallback():
    code = "import glotfit; print(glotfit.KERNEL_BACKEND)"
    env = dict(os.environ, GLOTFIT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
def test_solve_mu_parity():
    rng = np.random.default_rng(0)
    for ne, np_, na, nc, n0 in random_grids(rng, 50):
        d = float(nc - ne)
        a = _lfcore.solve_mu(float(na), d)
        b = _lfcore_py.solve_mu(float(na), d)
        assert a == pytest.approx(b, rel=1e-12, abs=1e-15)


@needs_compiled
def test_solve_lambda_parity():
    rng = np.random.default_rng(1)
    for ne, np_, na, nc, n0 in random_grids(rng, 50):
        mu = _lfcore_py.solve_mu(float(na), float(nc - ne))
        a = _lfcore.solve_lambda(ne, np_, mu, float(na), nc)
        b = _lfcore_py.solve_lambda(ne, np_, mu, float(na), nc)
        assert a == pytest.approx(b, rel=1e-12, abs=1e-15)


@needs_compiled
def test_fill_cycle_parity():
    rng = np.random.default_rng(2)
    for ne, np_, na, nc, n0 in random_grids(rng, 25):
        mu = _lfcore_py.solve_mu(float(na), float(nc - ne))
        lam = _lfcore_py.solve_lambda(ne, np_, mu, float(na), nc)
        out_a = np.empty(n0)
        out_b = np.empty(n0)
        _lfcore.fill_cycle(lam, mu, ne, np_, float(na), nc, n0, 1.0, out_a)
        _lfcore_py.fill_cycle(lam, mu, ne, np_, float(na), nc, n0, 1.0, out_b)
        np.testing.assert_allclose(out_a, out_b, rtol=1e-12, atol=1e-15)


def test_solve_mu_no_root_is_nan():
    # the decay equation loses its positive root once na reaches the span
    assert math.isnan(_lfcore_py.solve_mu(10.0, 10.0))
    assert math.isnan(_lfcore_py.solve_mu(12.0, 10.0))
    if _lfcore is not None:
        assert math.isnan(_lfcore.solve_mu(10.0, 10.0))


def test_solve_mu_root_is_exact():
    mu = kernels.solve_mu(6.0, 64.0)
    assert mu > 0
    assert mu * 6.0 - 1.0 + math.exp(-mu * 64.0) == pytest.approx(0.0, abs=1e-12)
