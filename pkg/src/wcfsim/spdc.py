"""Spectral model of the heralded SPDC source.

The joint spectral amplitude is the product of a Gaussian pump envelope in
``w_s + w_i`` and a phase-matching function of the wave-vector mismatch.
Refractive indices are held constant at their centre values, so the
mismatch is linear in the signal and idler detunings. The constant part of
the mismatch is absorbed into an effective poling period, which centres
phase matching on the nominal signal and idler wavelengths; the mismatch
left by the nominal period is available from :func:`central_phase_mismatch`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import DomainError, NumericalError

C_LIGHT = 299_792_458.0

#: exp(-GAUSS_PM * u**2) matches the central lobe of sinc(u) in width.
GAUSS_PM = 0.193

PHASE_MATCHING = ("sinc", "gaussian", "flat")


@dataclass(frozen=True)
class SourceParams:
    """Pump, crystal and index parameters; lengths in metres.

    ``pump_bandwidth_m`` is the rms width of the pump spectrum in
    wavelength. The idler centre follows from energy conservation with the
    signal centre. The beam waists only document the focusing regime (all
    beams are close to collimated over the crystal); no computed quantity
    depends on them.
    """

    pump_wavelength_m: float = 770e-9
    pump_bandwidth_m: float = 0.2e-9
    crystal_length_m: float = 30e-3
    poling_period_m: float = 46.2e-6
    n_pump: float = 1.76
    n_signal: float = 1.73
    n_idler: float = 1.82
    signal_wavelength_m: float = 1541.5e-9
    phase_matching: str = "sinc"
    pump_waist_m: float = 315e-6
    signal_waist_m: float = 190e-6
    idler_waist_m: float = 218e-6

    def __post_init__(self):
        for name in (
            "pump_wavelength_m",
            "pump_bandwidth_m",
            "crystal_length_m",
            "poling_period_m",
            "signal_wavelength_m",
            "pump_waist_m",
            "signal_waist_m",
            "idler_waist_m",
        ):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name}={value!r} must be strictly positive")
        for name in ("n_pump", "n_signal", "n_idler"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 1):
                raise DomainError(f"{name}={value!r} must be >= 1")
        if self.phase_matching not in PHASE_MATCHING:
            raise DomainError(
                f"phase_matching={self.phase_matching!r}; choose from {PHASE_MATCHING}"
            )
        if self.signal_wavelength_m <= self.pump_wavelength_m:
            raise DomainError("signal wavelength must exceed the pump wavelength")

    @property
    def idler_wavelength_m(self) -> float:
        return 1.0 / (1.0 / self.pump_wavelength_m - 1.0 / self.signal_wavelength_m)

    @property
    def pump_sigma_omega(self) -> float:
        """rms pump bandwidth in angular frequency (rad/s)."""
        return 2 * math.pi * C_LIGHT * self.pump_bandwidth_m / self.pump_wavelength_m**2

    def focusing_parameters(self) -> tuple[float, float, float]:
        """Focusing parameters ``pi w^2 n / (lambda L)`` of pump, signal and idler."""
        length = self.crystal_length_m

        def xi(w, n, lam):
            return math.pi * w**2 * n / (lam * length)

        return (
            xi(self.pump_waist_m, self.n_pump, self.pump_wavelength_m),
            xi(self.signal_waist_m, self.n_signal, self.signal_wavelength_m),
            xi(self.idler_waist_m, self.n_idler, self.idler_wavelength_m),
        )

    def as_dict(self) -> dict:
        return asdict(self)


def separable_toy_params(base: SourceParams | None = None) -> SourceParams:
    """Parameters whose JSA factorises exactly.

    Gaussian phase matching with signal and idler indices placed
    symmetrically about the pump index makes the mismatch proportional to
    ``w_s - w_i``; choosing the offset so its Gaussian width equals the
    pump's in ``w_s + w_i`` yields a product of two one-photon Gaussians.
    """
    base = SourceParams() if base is None else base
    sigma = base.pump_sigma_omega
    dn = 2 * C_LIGHT / (base.crystal_length_m * sigma * math.sqrt(2 * GAUSS_PM))
    if base.n_pump - dn < 1:
        raise DomainError("pump index too small for the separable preset")
    return replace(
        base,
        phase_matching="gaussian",
        n_signal=base.n_pump - dn,
        n_idler=base.n_pump + dn,
    )


def central_frequencies(params: SourceParams) -> tuple[float, float, float]:
    two_pi_c = 2 * math.pi * C_LIGHT
    w_p = two_pi_c / params.pump_wavelength_m
    w_s = two_pi_c / params.signal_wavelength_m
    return w_p, w_s, w_p - w_s


def central_phase_mismatch(params: SourceParams) -> float:
    """Mismatch ``k_p - k_s - k_i - 2 pi / Lambda`` at the nominal centres (rad/m).

    With constant indices the nominal poling period leaves a large residual,
    which the model removes by centring phase matching on the nominal
    signal and idler wavelengths.
    """
    w_p, w_s, w_i = central_frequencies(params)
    k = (params.n_pump * w_p - params.n_signal * w_s - params.n_idler * w_i) / C_LIGHT
    return k - 2 * math.pi / params.poling_period_m


@dataclass(frozen=True)
class JsaGrid:
    """Joint spectral amplitude sampled on detuning axes (rad/s).

    ``amplitude[i, j]`` belongs to idler detuning ``idler_axis[i]`` and
    signal detuning ``signal_axis[j]``; the total weight sum |amp|^2 is 1.
    """

    signal_axis: np.ndarray
    idler_axis: np.ndarray
    amplitude: np.ndarray
    signal_center: float
    idler_center: float

    def __post_init__(self):
        shape = (self.idler_axis.size, self.signal_axis.size)
        if self.amplitude.shape != shape:
            raise DomainError(f"amplitude shape {self.amplitude.shape} does not match axes {shape}")
        weight = float(np.sum(np.abs(self.amplitude) ** 2))
        if abs(weight - 1.0) > 1e-9:
            raise DomainError(f"JSA weight {weight!r} is not normalised")

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2


def _phase_matching(kind: str, half_mismatch: np.ndarray) -> np.ndarray:
    if kind == "sinc":
        return np.sinc(half_mismatch / np.pi)
    if kind == "gaussian":
        return np.exp(-GAUSS_PM * half_mismatch**2)
    return np.ones_like(half_mismatch)


def compute_jsa(
    params: SourceParams,
    n: int = 512,
    window: float = 4.0,
    half_width: float | None = None,
    idler_window: float | None = None,
) -> JsaGrid:
    """Sample the normalised JSA on an ``n x n`` grid.

    Each axis spans ``+/- window`` pump sigmas (in angular frequency)
    around its centre, unless ``half_width`` (rad/s) is given.
    ``idler_window`` narrows the idler axis alone; with flat phase matching
    the signal marginal otherwise stays flat out to the grid edge.
    """
    if int(n) != n or n < 16:
        raise DomainError(f"grid size n={n!r} must be an integer >= 16")
    if not (math.isfinite(window) and window > 0):
        raise DomainError(f"window={window!r} must be > 0")
    sigma = params.pump_sigma_omega
    span = window * sigma if half_width is None else float(half_width)
    if not (math.isfinite(span) and span > 0):
        raise DomainError(f"half_width={half_width!r} must be > 0")
    idler_span = span
    if idler_window is not None:
        if not (math.isfinite(idler_window) and idler_window > 0):
            raise DomainError(f"idler_window={idler_window!r} must be > 0")
        idler_span = idler_window * sigma
    _, w_s0, w_i0 = central_frequencies(params)
    s_axis = np.linspace(-span, span, int(n))
    i_axis = np.linspace(-idler_span, idler_span, int(n))
    d_s = s_axis[np.newaxis, :]
    d_i = i_axis[:, np.newaxis]
    energy = d_s + d_i
    pump = np.exp(-(energy**2) / (2 * sigma**2))
    mismatch = (
        (params.n_pump - params.n_signal) * d_s + (params.n_pump - params.n_idler) * d_i
    ) / C_LIGHT
    amp = pump * _phase_matching(params.phase_matching, mismatch * params.crystal_length_m / 2)
    norm = math.sqrt(float(np.sum(amp**2)))
    if norm == 0.0 or not math.isfinite(norm):
        raise NumericalError("JSA vanishes on the grid; widen the window")
    return JsaGrid(s_axis, i_axis, (amp / norm).astype(np.complex128), w_s0, w_i0)


@dataclass(frozen=True)
class SchmidtResult:
    schmidt_number: float
    purity: float
    weights: np.ndarray


def schmidt_analysis(jsa: JsaGrid) -> SchmidtResult:
    try:
        sv = np.linalg.svd(jsa.amplitude, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD of the JSA did not converge: {exc}") from exc
    weights = sv**2
    weights = weights / weights.sum()
    k = 1.0 / float(np.sum(weights**2))
    return SchmidtResult(max(k, 1.0), 1.0 / max(k, 1.0), weights)


def _fwhm(axis: np.ndarray, profile: np.ndarray) -> float:
    """Full width at half maximum with linear interpolation at both edges."""
    peak = int(np.argmax(profile))
    half = profile[peak] / 2
    above = profile >= half
    lo = peak
    while lo > 0 and above[lo - 1]:
        lo -= 1
    hi = peak
    while hi < profile.size - 1 and above[hi + 1]:
        hi += 1
    if lo == 0 or hi == profile.size - 1:
        raise NumericalError("spectrum does not fall to half maximum inside the grid")

    def cross(a, b):
        fa, fb = profile[a], profile[b]
        return axis[a] + (half - fa) * (axis[b] - axis[a]) / (fb - fa)

    return float(cross(hi, hi + 1) - cross(lo - 1, lo))


@dataclass(frozen=True)
class SpectralSummary:
    signal_fwhm_m: float
    coherence_length_m: float
    signal_fwhm_rad_s: float


def spectral_summaries(jsa: JsaGrid) -> SpectralSummary:
    """Signal marginal FWHM and coherence length ``lambda_s**2 / delta_lambda``.

    The FWHM is converted from angular frequency to wavelength at the
    signal centre, ``delta_lambda = lambda_s**2 delta_omega / (2 pi c)``.
    """
    marginal = jsa.intensity.sum(axis=0)
    width_omega = _fwhm(jsa.signal_axis, marginal)
    lam = 2 * math.pi * C_LIGHT / jsa.signal_center
    width_lambda = lam**2 * width_omega / (2 * math.pi * C_LIGHT)
    return SpectralSummary(width_lambda, lam**2 / width_lambda, width_omega)


def export_jsa_csv(jsa: JsaGrid, path) -> None:
    """Write |JSA|^2 with the signal axis as header row and the idler axis as first column."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["idler_detuning_rad_s\\signal_detuning_rad_s"]
                        + [f"{v:.9g}" for v in jsa.signal_axis])
        for d_i, row in zip(jsa.idler_axis, jsa.intensity):
            writer.writerow([f"{d_i:.9g}"] + [f"{v:.9g}" for v in row])
