import math
import os
import subprocess
import sys

import numpy as np
import pytest

from holevo_lab import _kernels
from holevo_lab.channels import state_of_bloch
from holevo_lab.opalg import entropy_raw, relative_entropy_raw


def random_bloch(rng, n, r_max=1.0):
    u = rng.standard_normal((n, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return u * rng.uniform(0, r_max, size=(n, 1))


def test_entropy_from_radius_matches_eigensolver(rng):
    vs = random_bloch(rng, 64)
    want = np.array([entropy_raw(state_of_bloch(v)) for v in vs])
    got = _kernels.entropy_from_radius(np.linalg.norm(vs, axis=1))
    assert np.max(np.abs(got - want)) < 1e-12


def test_relent_pairwise_matches_eigensolver(rng):
    a = random_bloch(rng, 20, r_max=0.999)
    b = random_bloch(rng, 15, r_max=0.98)
    got = _kernels.relent_pairwise(a, b)
    for i in range(len(a)):
        for j in range(len(b)):
            want = relative_entropy_raw(state_of_bloch(a[i]), state_of_bloch(b[j]))
            assert got[i, j] == pytest.approx(want, abs=1e-10)


def test_relent_pairwise_pure_reference():
    z = np.array([[0.0, 0.0, 1.0]])
    got = _kernels.relent_pairwise(np.vstack([z, -z, 0.5 * z]), z)
    assert got[0, 0] == pytest.approx(0.0, abs=1e-12)
    assert math.isinf(got[1, 0])
    assert math.isinf(got[2, 0])


def test_numba_and_numpy_paths_agree(rng):
    a = random_bloch(rng, 30)
    b = random_bloch(rng, 10, r_max=0.95)
    jit = _kernels.relent_pairwise(a, b)
    ref = _kernels.relent_pairwise_numpy(a, b)
    assert np.allclose(jit, ref, atol=1e-12)
    r = np.linalg.norm(a, axis=1)
    assert np.allclose(_kernels.entropy_from_radius(r),
                       _kernels.entropy_from_radius_numpy(r), atol=1e-13)


def test_fibonacci_sphere_covers():
    pts = _kernels.fibonacci_sphere(500)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
    # barycenter of a near-uniform grid is close to the origin
    assert np.linalg.norm(pts.mean(axis=0)) < 0.01


def test_env_flag_selects_pure_numpy():
    code = (
        "import holevo_lab._kernels as k; "
        "print(k.USE_NUMBA, k.relent_pairwise is k.relent_pairwise_numpy)"
    )
    env = dict(os.environ, HOLEVO_LAB_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "True"]
