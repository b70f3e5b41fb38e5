import os
import subprocess
import sys

import numpy as np
import pytest

from wcfsim import _kernels as k

needs_numba = pytest.mark.skipif(not k.HAVE_NUMBA, reason="numba not importable")

COMMON = dict(p_real=0.9, p_herald=0.95, p_double=0.2, p_db=0.3, p_a=0.25, dark=0.01)


def _run(backend, thresholds, force_b, start=123, n=20_000):
    c1, c12 = thresholds
    return k.sample_runs(
        k.stream_key(42), start, n, COMMON["p_real"], COMMON["p_herald"], COMMON["p_double"],
        COMMON["p_db"], c1, c12, COMMON["p_a"], COMMON["dark"], force_b, backend=backend,
    )


@needs_numba
@pytest.mark.parametrize("force_b", [False, True])
@pytest.mark.parametrize("varying", [False, True])
def test_backends_bit_identical(force_b, varying):
    if varying:
        rng = np.random.default_rng(0)
        c1 = rng.uniform(0.0, 0.5, 20_000)
        thresholds = (c1, c1 + rng.uniform(0.0, 0.5, 20_000))
    else:
        thresholds = (np.array([0.3]), np.array([0.5]))
    a = _run("numpy", thresholds, force_b)
    b = _run("numba", thresholds, force_b)
    for x, y in zip(a, b):
        assert x.dtype == np.int8 and y.dtype == np.int8
        assert np.array_equal(x, y)


def test_uniform_stream_properties():
    key = k.stream_key(1)
    u = k.uniforms(key, np.arange(100_000), k.SLOT_HERALD)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.005
    assert np.array_equal(u, k.uniforms(key, np.arange(100_000), k.SLOT_HERALD))
    assert not np.array_equal(u, k.uniforms(key, np.arange(100_000), k.SLOT_DB1))
    assert not np.array_equal(u, k.uniforms(k.stream_key(2), np.arange(100_000), k.SLOT_HERALD))
    assert k.uniforms(key, [500], k.SLOT_HERALD)[0] == u[500]


def test_gaussian_steps_are_standard_normal():
    steps = k.gaussian_steps(k.stream_key(5), 0, 200_000)
    assert abs(steps.mean()) < 0.01
    assert abs(steps.std() - 1.0) < 0.01
    assert np.array_equal(steps[1000:1010], k.gaussian_steps(k.stream_key(5), 1000, 10))


def test_invalid_inputs():
    with pytest.raises(ValueError):
        k.resolve_backend("fortran")
    with pytest.raises(ValueError):
        k.stream_key(-1)
    with pytest.raises(ValueError):
        k.sample_runs(k.stream_key(0), 0, 10, 1, 1, 0, 0.5, np.zeros(3), np.zeros(3), 0.1, 0, False)


@needs_numba
def test_phase_moments_agree():
    samples = np.random.default_rng(4).normal(0.0, 0.8, 100_000)
    a = k.phase_moments(samples, backend="numpy")
    b = k.phase_moments(samples, backend="numba")
    assert a == pytest.approx(b, abs=1e-12)


def test_environment_flag_selects_numpy():
    env = {**os.environ, "WCFSIM_DISABLE_NUMBA": "1"}
    out = subprocess.run(
        [sys.executable, "-c", "from wcfsim import _kernels; print(_kernels.DEFAULT_BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"
