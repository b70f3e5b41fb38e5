"""Hot loops of the Monte Carlo sampler, with numba and pure-numpy versions.

Both versions draw their uniforms from the same counter-based stream, so
for a given (seed, run index) they produce bit-identical records. The
numba path is used when numba imports and ``WCFSIM_DISABLE_NUMBA`` is unset.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_DISABLE = os.environ.get("WCFSIM_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")
HAVE_NUMBA = numba is not None
DEFAULT_BACKEND = "numba" if HAVE_NUMBA and not _DISABLE else "numpy"

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TO_UNIT = 1.0 / 9007199254740992.0  # 2**-53

# Per-run draw slots. Each run owns NSLOTS consecutive counters.
NSLOTS = np.uint64(16)
SLOT_HERALD = np.uint64(0)
SLOT_DOUBLE = np.uint64(1)
SLOT_DB1 = np.uint64(2)
SLOT_CAT1 = np.uint64(3)
SLOT_DB2 = np.uint64(4)
SLOT_CAT2 = np.uint64(5)
SLOT_DARK_B = np.uint64(6)
SLOT_DARK_A = np.uint64(7)
SLOT_DARK_V1 = np.uint64(8)
SLOT_DARK_V2 = np.uint64(9)
SLOT_WALK1 = np.uint64(10)
SLOT_WALK2 = np.uint64(11)


def resolve_backend(backend: str | None) -> str:
    backend = backend or DEFAULT_BACKEND
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return backend


def _mix_np(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def stream_key(seed: int) -> np.uint64:
    """Scramble a user seed into the SplitMix64 state of its stream."""
    seed = int(seed)
    if not (0 <= seed < 2**64):
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    with np.errstate(over="ignore"):
        return np.uint64(_mix_np(np.array([seed], dtype=np.uint64) ^ GOLDEN)[0])


def uniforms(key: np.uint64, run_index, slot: np.uint64) -> np.ndarray:
    """Uniform [0, 1) draws for the given run indices and slot."""
    idx = np.asarray(run_index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        counter = idx * NSLOTS + slot + np.uint64(1)
        bits = _mix_np(key + counter * GOLDEN)
    return (bits >> _S11).astype(np.float64) * _TO_UNIT


def gaussian_steps(key: np.uint64, start: int, n: int) -> np.ndarray:
    """Standard normal increments for the slow-phase walk (Box-Muller)."""
    idx = np.arange(start, start + n, dtype=np.uint64)
    u1 = uniforms(key, idx, SLOT_WALK1)
    u2 = uniforms(key, idx, SLOT_WALK2)
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


def _sample_numpy(key, start, n, p_real, p_herald, p_double, p_db, c1, c12, p_a, dark, force_b):
    idx = np.arange(start, start + n, dtype=np.uint64)

    def u(slot):
        return uniforms(key, idx, slot)

    uh = u(SLOT_HERALD)
    real = uh < p_real
    herald = uh < p_herald
    two = real & (u(SLOT_DOUBLE) < p_double)
    at_db1 = real & (u(SLOT_DB1) < p_db)
    at_db2 = two & (u(SLOT_DB2) < p_db)
    b = herald & (at_db1 | at_db2 | (u(SLOT_DARK_B) < dark) | force_b)

    free1 = real & ~at_db1
    free2 = two & ~at_db2
    cat1 = u(SLOT_CAT1)
    cat2 = u(SLOT_CAT2)
    a_hit = (free1 & (cat1 < p_a)) | (free2 & (cat2 < p_a)) | (u(SLOT_DARK_A) < dark)
    v1_hit = (free1 & (cat1 < c1)) | (free2 & (cat2 < c1)) | (u(SLOT_DARK_V1) < dark)
    v2_hit = (
        (free1 & (cat1 >= c1) & (cat1 < c12))
        | (free2 & (cat2 >= c1) & (cat2 < c12))
        | (u(SLOT_DARK_V2) < dark)
    )

    decided_b = herald & b
    decided_v = herald & ~b
    out_herald = herald.astype(np.int8)
    out_b = decided_b.astype(np.int8)
    out_a = np.where(decided_b, a_hit, -1).astype(np.int8)
    out_v1 = np.where(decided_v, v1_hit, np.where(herald, -1, 0)).astype(np.int8)
    out_v2 = np.where(decided_v, v2_hit, np.where(herald, -1, 0)).astype(np.int8)
    photons = (real.astype(np.int8) + two.astype(np.int8)).astype(np.int8)
    return out_herald, out_b, out_a, out_v1, out_v2, photons


if HAVE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)

    @_jit
    def _mix_nb(z):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
        return z ^ (z >> _S31)

    @_jit
    def _u_nb(key, base, slot):
        bits = _mix_nb(key + (base + slot + np.uint64(1)) * GOLDEN)
        return np.float64(bits >> _S11) * _TO_UNIT

    @_jit
    def _sample_loop(key, start, n, p_real, p_herald, p_double, p_db, c1, c12, p_a, dark, force_b,
                     out_herald, out_b, out_a, out_v1, out_v2, out_photons):
        stride = 1 if c1.shape[0] > 1 else 0
        for j in range(n):
            base = (np.uint64(start) + np.uint64(j)) * NSLOTS
            k = j * stride
            uh = _u_nb(key, base, SLOT_HERALD)
            real = uh < p_real
            if not uh < p_herald:
                out_herald[j] = 0
                out_b[j] = 0
                out_a[j] = -1
                out_v1[j] = 0
                out_v2[j] = 0
                out_photons[j] = 0
                continue
            two = real and _u_nb(key, base, SLOT_DOUBLE) < p_double
            at_db1 = real and _u_nb(key, base, SLOT_DB1) < p_db
            at_db2 = two and _u_nb(key, base, SLOT_DB2) < p_db
            dark_b = _u_nb(key, base, SLOT_DARK_B) < dark
            b = at_db1 or at_db2 or dark_b or force_b
            free1 = real and not at_db1
            free2 = two and not at_db2
            cat1 = _u_nb(key, base, SLOT_CAT1)
            cat2 = _u_nb(key, base, SLOT_CAT2)
            out_herald[j] = 1
            out_photons[j] = np.int8(real) + np.int8(two)
            if b:
                hit = (free1 and cat1 < p_a) or (free2 and cat2 < p_a)
                hit = hit or _u_nb(key, base, SLOT_DARK_A) < dark
                out_b[j] = 1
                out_a[j] = 1 if hit else 0
                out_v1[j] = -1
                out_v2[j] = -1
            else:
                lo = c1[k]
                hi = c12[k]
                h1 = (free1 and cat1 < lo) or (free2 and cat2 < lo)
                h1 = h1 or _u_nb(key, base, SLOT_DARK_V1) < dark
                h2 = (free1 and cat1 >= lo and cat1 < hi) or (free2 and cat2 >= lo and cat2 < hi)
                h2 = h2 or _u_nb(key, base, SLOT_DARK_V2) < dark
                out_b[j] = 0
                out_a[j] = -1
                out_v1[j] = 1 if h1 else 0
                out_v2[j] = 1 if h2 else 0

    @_jit
    def _phase_moments_nb(samples):
        c = 0.0
        s = 0.0
        for phi in samples:
            c += np.cos(phi)
            s += np.sin(phi)
        return c / samples.size, s / samples.size


def sample_runs(key, start, n, p_real, p_herald, p_double, p_db, c1, c12, p_a, dark, force_b,
                backend=None):
    """Sample runs ``start .. start+n-1``.

    Returns int8 arrays ``(herald, b, a, v1, v2, photons)``; absent flags
    are -1. ``c1`` and ``c12`` hold the conditional V1 and V1+V2 thresholds,
    either one value or one per run.
    """
    backend = resolve_backend(backend)
    c1 = np.ascontiguousarray(c1, dtype=np.float64).ravel()
    c12 = np.ascontiguousarray(c12, dtype=np.float64).ravel()
    if c1.shape != c12.shape or c1.size not in (1, n):
        raise ValueError("threshold arrays must have length 1 or n")
    args = (float(p_real), float(p_herald), float(p_double), float(p_db))
    if backend == "numpy":
        return _sample_numpy(key, start, n, *args, c1, c12, float(p_a), float(dark), bool(force_b))
    outs = [np.empty(n, dtype=np.int8) for _ in range(6)]
    _sample_loop(np.uint64(key), np.int64(start), np.int64(n), *args, c1, c12,
                 float(p_a), float(dark), bool(force_b), *outs)
    return tuple(outs)


def phase_moments(samples: np.ndarray, backend=None) -> tuple[float, float]:
    """Mean cosine and mean sine of a 1-d float64 sample array."""
    if resolve_backend(backend) == "numba":
        c, s = _phase_moments_nb(samples)
        return float(c), float(s)
    return float(np.mean(np.cos(samples))), float(np.mean(np.sin(samples)))
