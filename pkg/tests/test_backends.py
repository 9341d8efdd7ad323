"""Compiled and pure-numpy kernels agree on identical inputs."""

import os
import subprocess
import sys

import numpy as np
import pytest

from peanoseg import _kernels_py

compiled = pytest.importorskip("peanoseg._kernels")


def random_case(seed, nsteps=200, m=3):
    rng = np.random.default_rng(seed)
    phi = np.ascontiguousarray(rng.random((nsteps, m, m)) + 0.01)
    initial = rng.random(m)
    initial /= initial.sum()
    trans = rng.random((nsteps, m, m))
    trans /= trans.sum(axis=2, keepdims=True)
    return phi, initial, np.ascontiguousarray(trans)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_backward_sweeps_agree(seed):
    phi, _, _ = random_case(seed)
    beta_c, scale_c, bad_c = compiled.backward_sweep(phi)
    beta_p, scale_p, bad_p = _kernels_py.backward_sweep(phi)
    assert bad_c == bad_p == -1
    np.testing.assert_allclose(beta_c, beta_p, rtol=1e-12)
    np.testing.assert_allclose(scale_c, scale_p, rtol=1e-12)


def test_backward_degenerate_flag_agrees():
    phi = np.zeros((3, 2, 2))
    phi[0][0, 0] = 1.0
    phi[1][1, 1] = 1.0
    phi[2][0, 0] = 1.0
    assert compiled.backward_sweep(phi)[2] == _kernels_py.backward_sweep(phi)[2]


@pytest.mark.parametrize("seed", [3, 4])
def test_forward_sweeps_agree(seed):
    _, initial, trans = random_case(seed)
    m_c = compiled.forward_sweep(initial, trans)
    m_p = _kernels_py.forward_sweep(initial, trans)
    np.testing.assert_allclose(m_c, m_p, rtol=1e-12)


@pytest.mark.parametrize("seed", [5, 6, 7])
def test_sample_sweeps_walk_identical_paths(seed):
    _, initial, trans = random_case(seed)
    uniforms = np.random.default_rng(seed + 100).random(trans.shape[0] + 1)
    path_c = compiled.sample_sweep(initial, trans, uniforms)
    path_p = _kernels_py.sample_sweep(initial, trans, uniforms)
    np.testing.assert_array_equal(path_c, path_p)


def test_env_var_forces_python_backend():
    env = dict(os.environ, PEANOSEG_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c",
         "from peanoseg import backend_name; print(backend_name())"],
        capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


def test_default_backend_is_compiled_when_built():
    env = {k: v for k, v in os.environ.items() if k != "PEANOSEG_PURE_PYTHON"}
    out = subprocess.run(
        [sys.executable, "-c",
         "from peanoseg import backend_name; print(backend_name())"],
        capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "cython"
