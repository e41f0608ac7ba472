import os
import subprocess
import sys

import numpy as np
import pytest

from posaid import _backend
from posaid._backend import kernels_py

compiled = pytest.mark.skipif(_backend.kernels_c is None, reason="compiled kernels not built")


@compiled
def test_j0_backends_agree():
    x = np.concatenate([np.linspace(0, 30, 3001), np.geomspace(30, 1e4, 500)])
    assert np.max(np.abs(_backend.kernels_c.j0_array(x) - kernels_py.j0_array(x))) < 1e-15


@compiled
def test_kernel_matrix_backends_agree(rng):
    za, zb = rng.uniform(0, 3, 40), rng.uniform(0, 3, 30)
    a = _backend.kernels_c.kernel_matrix(za, zb, 0.15)
    b = kernels_py.kernel_matrix(za, zb, 0.15)
    assert a.shape == (40, 30) and np.max(np.abs(a - b)) < 1e-15


@compiled
def test_omega_objective_backends_agree():
    f = np.linspace(0, 1, 1001)
    (va, oka), (vb, okb) = _backend.kernels_c.omega_objective(f, 0.025), kernels_py.omega_objective(f, 0.025)
    assert np.array_equal(oka, okb)
    assert np.allclose(va[oka], vb[okb], rtol=0, atol=1e-15)


def test_environment_forces_fallback():
    env = dict(os.environ, POSAID_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import posaid; print(posaid.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_fallback_end_to_end_value():
    code = ("from posaid import SystemParams, group_layout, omega_threshold;"
            "p = SystemParams(); print(repr(omega_threshold(p, group_layout(16, p)).omega))")
    env = dict(os.environ, POSAID_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert float(out.stdout) == pytest.approx(0.999997609, rel=1e-6)
