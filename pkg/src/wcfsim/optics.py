"""Single-photon propagation through the three-beam-splitter interferometer.

Alice splits a heralded photon on a beam splitter of power reflectivity
``x``. Bob splits his share on ``y`` and sends the transmitted mode to
``D_B``. When no photon is announced, Alice's mode and Bob's reflected
mode interfere on ``z`` and are detected in ``D_V1`` / ``D_V2``.

Losses enter only through the six composite path efficiencies, each one
the transmission of a complete source-to-detector path.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import DegenerateError, DomainError

#: Violations of [0, 1] smaller than this are treated as round-off and clamped.
CLAMP_TOL = 1e-12


def check_unit(name: str, value: float) -> float:
    """Return ``value`` as float if it lies in [0, 1], else raise DomainError."""
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise DomainError(f"{name}={value!r} is outside [0, 1]")
    return value


def clamp_unit(name: str, value: float, tol: float = CLAMP_TOL) -> float:
    value = float(value)
    if -tol <= value < 0.0:
        return 0.0
    if 1.0 < value <= 1.0 + tol:
        return 1.0
    if not (0.0 <= value <= 1.0):
        raise DomainError(f"{name}={value!r} is outside [0, 1] beyond round-off")
    return value


@dataclass(frozen=True)
class Reflectivities:
    """Power reflectivities of Alice's (x) and Bob's (y, z) beam splitters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, check_unit(f.name, getattr(self, f.name)))


@dataclass(frozen=True)
class PathEfficiencies:
    """Composite transmissions of the six optical paths.

    ``eta_a_s``: Alice's arm through the switch into ``D_A``.
    ``eta_b_y``: Bob's arm through ``y`` into ``D_B``.
    ``eta_{a,b}_v{1,2}``: either arm through ``z`` into ``D_V1`` / ``D_V2``.
    """

    eta_a_s: float
    eta_b_y: float
    eta_a_v1: float
    eta_a_v2: float
    eta_b_v1: float
    eta_b_v2: float

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, check_unit(f.name, getattr(self, f.name)))

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    @classmethod
    def reference_setup(cls) -> "PathEfficiencies":
        """Measured efficiencies of the reference setup (VOAs at 0 dB)."""
        return cls(
            eta_a_s=0.315,
            eta_b_y=0.303,
            eta_a_v1=0.231,
            eta_a_v2=0.219,
            eta_b_v1=0.184,
            eta_b_v2=0.175,
        )

    @classmethod
    def ideal(cls) -> "PathEfficiencies":
        return cls(1.0, 1.0, 1.0, 1.0, 1.0, 1.0)

    @classmethod
    def from_components(
        cls,
        eta_a: float,
        eta_b: float,
        eta_v1: float,
        eta_v2: float,
        eta_b_y: float,
        eta_a_s: float,
    ) -> "PathEfficiencies":
        """Build composites from arm transmissions and detector-side factors.

        Efficiencies built this way are physically consistent: the
        verification paths share the arm factor and the detector factor, so
        the three detection probabilities can never sum above one.
        """
        return cls(
            eta_a_s=eta_a_s,
            eta_b_y=eta_b_y,
            eta_a_v1=eta_a * eta_v1,
            eta_a_v2=eta_a * eta_v2,
            eta_b_v1=eta_b * eta_v1,
            eta_b_v2=eta_b * eta_v2,
        )

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    def scaled(self, factors: dict[str, float]) -> "PathEfficiencies":
        values = self.as_dict()
        for name, factor in factors.items():
            if name not in values:
                raise DomainError(f"unknown path efficiency {name!r}")
            values[name] *= factor
        return PathEfficiencies(**values)


@dataclass(frozen=True)
class InterferenceModel:
    """Visibility left after averaging fast phase noise, and the slow phase."""

    visibility: float = 1.0
    slow_phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "visibility", check_unit("visibility", self.visibility))
        if not math.isfinite(self.slow_phase):
            raise DomainError(f"slow_phase={self.slow_phase!r} is not finite")
        object.__setattr__(self, "slow_phase", float(self.slow_phase))


@dataclass(frozen=True)
class DetectionProbabilities:
    p_v1: float
    p_v2: float
    p_db: float

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, clamp_unit(f.name, getattr(self, f.name)))
        total = self.p_v1 + self.p_v2 + self.p_db
        if total > 1.0 + CLAMP_TOL:
            raise DomainError(
                f"detection probabilities sum to {total!r} > 1; "
                "the path efficiencies are physically inconsistent"
            )

    @property
    def loss(self) -> float:
        return max(0.0, 1.0 - self.p_v1 - self.p_v2 - self.p_db)


@dataclass(frozen=True)
class ModeAmplitudes:
    """Final-state coefficients of the V1, V2 and D_B modes (global phase dropped)."""

    a1: complex
    a2: complex
    a3: complex

    def probabilities(self) -> tuple[float, float, float]:
        return abs(self.a1) ** 2, abs(self.a2) ** 2, abs(self.a3) ** 2


def propagate_amplitudes(
    refl: Reflectivities, eff: PathEfficiencies, phase_difference: float = 0.0
) -> ModeAmplitudes:
    """Propagate the one-photon state to the detectors.

    ``phase_difference`` is the phase of Bob's arm relative to Alice's.
    The second verification output carries the beam-splitter minus sign.
    """
    if not math.isfinite(phase_difference):
        raise DomainError(f"phase_difference={phase_difference!r} is not finite")
    x, y, z = refl.x, refl.y, refl.z
    rot = complex(math.cos(phase_difference), math.sin(phase_difference))
    a1 = math.sqrt(x * z * eff.eta_a_v1) + math.sqrt((1 - x) * y * (1 - z) * eff.eta_b_v1) * rot
    a2 = -(math.sqrt(x * (1 - z) * eff.eta_a_v2) - math.sqrt((1 - x) * y * z * eff.eta_b_v2) * rot)
    a3 = math.sqrt((1 - x) * (1 - y) * eff.eta_b_y) * rot
    return ModeAmplitudes(complex(a1), complex(a2), complex(a3))


def detection_arrays(x, y, z, eff: PathEfficiencies, visibility, slow_phase):
    """Vectorised detection probabilities; arguments broadcast as numpy arrays.

    No validation or clamping happens here, callers own that.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    overlap = np.sqrt(x * (1 - x) * y * z * (1 - z))
    fringe = 2.0 * np.asarray(visibility, dtype=float) * np.cos(slow_phase) * overlap
    p_v1 = (
        x * z * eff.eta_a_v1
        + (1 - x) * y * (1 - z) * eff.eta_b_v1
        + fringe * math.sqrt(eff.eta_a_v1 * eff.eta_b_v1)
    )
    p_v2 = (
        x * (1 - z) * eff.eta_a_v2
        + (1 - x) * y * z * eff.eta_b_v2
        - fringe * math.sqrt(eff.eta_a_v2 * eff.eta_b_v2)
    )
    p_db = (1 - x) * (1 - y) * eff.eta_b_y
    return p_v1, p_v2, p_db


def detection_probabilities(
    refl: Reflectivities,
    eff: PathEfficiencies,
    interf: InterferenceModel = InterferenceModel(),
) -> DetectionProbabilities:
    """Click probabilities of D_V1, D_V2 and D_B for an honest run.

    The interference terms are scaled by the visibility and evaluated at
    the slow phase; the remainder ``1 - sum`` is the photon-loss probability.
    """
    p_v1, p_v2, p_db = detection_arrays(
        refl.x, refl.y, refl.z, eff, interf.visibility, interf.slow_phase
    )
    return DetectionProbabilities(float(p_v1), float(p_v2), float(p_db))


def arm_powers(refl: Reflectivities, eff: PathEfficiencies) -> tuple[float, float, float]:
    """Power in each interferometer arm before ``z`` and the balance ratio.

    Returns ``(pi_a, pi_b, xi)`` with ``xi = pi_a / (pi_a + pi_b)``. Arm
    powers are referred to the V1 detector (``eta_a_v1``, ``eta_b_v1``);
    the common detector factor cancels in ``xi``.
    """
    pi_a = refl.x * eff.eta_a_v1
    pi_b = (1 - refl.x) * refl.y * eff.eta_b_v1
    total = pi_a + pi_b
    if total <= 0.0:
        raise DegenerateError("both interferometer arms carry zero power")
    return pi_a, pi_b, pi_a / total


def effective_visibility(fast_phase_samples) -> float:
    """Contrast left after averaging over fast phase fluctuations.

    ``sqrt(<cos phi>**2 + <sin phi>**2)``. A constant offset common to all
    samples only rotates the mean phasor and leaves the result unchanged.
    """
    from ._kernels import phase_moments

    samples = np.ascontiguousarray(fast_phase_samples, dtype=np.float64).ravel()
    if samples.size == 0:
        raise DomainError("effective_visibility needs at least one phase sample")
    mean_cos, mean_sin = phase_moments(samples)
    return min(1.0, math.hypot(mean_cos, mean_sin))


def visibility_from_probabilities(p_at_zero: float, p_at_pi: float) -> float:
    """Fringe contrast ``|P(0) - P(pi)| / (P(0) + P(pi))``."""
    p0 = check_unit("p_at_zero", p_at_zero)
    ppi = check_unit("p_at_pi", p_at_pi)
    if p0 + ppi <= 0.0:
        raise DegenerateError("both fringe probabilities are zero")
    return abs(p0 - ppi) / (p0 + ppi)
