"""Run-by-run sampling with detector noise, coincidence tallies and rate algebra.

A heralded run carries zero, one or two signal photons. Each photon is
first tested against Bob's detector D_B; the announced bit ``b`` is 1 if any
photon (or a dark count) clicks there, or if Bob forces it. With ``b = 1``
the switch sends Alice's mode to D_A, otherwise both arms meet on ``z`` and
the photon lands in V1, V2 or is lost, using the probabilities of
:func:`wcfsim.optics.detection_probabilities` conditioned on no D_B click.

Random numbers come from a counter-based stream keyed on (seed, run index),
so any run can be regenerated on its own and chunking never changes results.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .adversary import alice_x_attack, bob_optimal_attack
from .errors import DegenerateError, DomainError
from .optics import (
    CLAMP_TOL,
    InterferenceModel,
    PathEfficiencies,
    Reflectivities,
    check_unit,
    detection_arrays,
    visibility_from_probabilities,
)
from .protocol import (
    Outcome,
    OutcomeDistribution,
    classify_outcome,
    honest_outcomes,
    honest_reflectivities,
)

PAIR_PROB = 0.015
RUN_RATE_HZ = 51e3
FALSE_TRIGGER_HZ = 40.0
SIGNAL_DARK_HZ = 100.0
GATE_S = 500e-12
DEFAULT_PHASE_WALK_STD = 1e-4
CHUNK = 1 << 20

OUTCOME_ORDER = (
    Outcome.ALICE_WINS,
    Outcome.BOB_WINS,
    Outcome.ALICE_SANCTIONED,
    Outcome.BOB_SANCTIONED,
    Outcome.ABORT,
)


def herald_dark_from_rates(pair_prob: float, run_rate_hz: float, false_trigger_hz: float) -> float:
    """Per-pulse false-trigger probability reproducing the observed false/total run ratio.

    Real triggers occur with ``p`` per pulse and false ones with ``(1-p) q``,
    so ``q = p f / ((1-p)(1-f))`` with ``f`` the false share of all runs.
    """
    if not (0 <= false_trigger_hz < run_rate_hz):
        raise DomainError("need 0 <= false_trigger_hz < run_rate_hz")
    if not (0 < pair_prob < 1):
        raise DomainError("converting rates needs 0 < pair_prob < 1")
    q = pair_prob * false_trigger_hz / ((1 - pair_prob) * (run_rate_hz - false_trigger_hz))
    if q > 1:
        raise DomainError("false-trigger rate too high for this pair probability")
    return q


@dataclass(frozen=True)
class NoiseModel:
    """Source and detector imperfections.

    ``pair_prob`` is the probability that a pump pulse yields a heralded
    pair. ``herald_dark_prob`` is the probability of a photon-less trigger
    on a pulse without a pair. ``signal_dark_prob`` applies per gated run to
    each of D_A, D_B, D_V1, D_V2. A ``phase_walk_std`` of 0 keeps the slow
    phase constant, otherwise it performs a Gaussian walk wrapped to [-pi, pi].
    With ``double_pair_enabled`` a heralded pair carries a second photon with
    probability ``pair_prob``, i.e. ``pair_prob**2`` per pulse.
    """

    pair_prob: float = PAIR_PROB
    herald_dark_prob: float = herald_dark_from_rates(PAIR_PROB, RUN_RATE_HZ, FALSE_TRIGGER_HZ)
    signal_dark_prob: float = SIGNAL_DARK_HZ * GATE_S
    double_pair_enabled: bool = False
    phase_walk_std: float = DEFAULT_PHASE_WALK_STD

    def __post_init__(self):
        for name in ("pair_prob", "herald_dark_prob", "signal_dark_prob"):
            object.__setattr__(self, name, check_unit(name, getattr(self, name)))
        if not (math.isfinite(self.phase_walk_std) and self.phase_walk_std >= 0):
            raise DomainError(f"phase_walk_std={self.phase_walk_std!r} must be >= 0")

    @classmethod
    def from_rates(
        cls,
        pair_prob: float = PAIR_PROB,
        run_rate_hz: float = RUN_RATE_HZ,
        false_trigger_hz: float = FALSE_TRIGGER_HZ,
        signal_dark_hz: float = SIGNAL_DARK_HZ,
        gate_s: float = GATE_S,
        **kwargs,
    ) -> "NoiseModel":
        return cls(
            pair_prob=pair_prob,
            herald_dark_prob=herald_dark_from_rates(pair_prob, run_rate_hz, false_trigger_hz),
            signal_dark_prob=signal_dark_hz * gate_s,
            **kwargs,
        )

    @classmethod
    def noiseless(cls, pair_prob: float = PAIR_PROB) -> "NoiseModel":
        return cls(pair_prob, 0.0, 0.0, False, 0.0)

    @property
    def p_real(self) -> float:
        return self.pair_prob

    @property
    def p_herald(self) -> float:
        return self.pair_prob + (1.0 - self.pair_prob) * self.herald_dark_prob

    def false_herald_fraction(self) -> float:
        """Share of heralded runs that carry no photon."""
        if self.p_herald <= 0.0:
            raise DegenerateError("no runs ever trigger (pair_prob = herald_dark_prob = 0)")
        return 1.0 - self.p_real / self.p_herald


@dataclass(frozen=True)
class RunSetup:
    """Everything the sampler needs for one scenario."""

    refl: Reflectivities
    eff: PathEfficiencies
    interf: InterferenceModel = InterferenceModel(0.96)
    noise: NoiseModel = field(default_factory=NoiseModel)
    bob_cheats: bool = False


@dataclass(frozen=True)
class RunRecord:
    herald: int
    b: int
    a: int | None
    v1: int | None
    v2: int | None
    slow_phase: float

    def outcome(self) -> Outcome | None:
        """Protocol outcome, or None when the pulse was not heralded."""
        if not self.herald:
            return None
        return classify_outcome(self.b, self.a, self.v1, self.v2)


@dataclass
class RunBatch:
    """Columnar run records. Absent flags are stored as -1.

    ``photons`` is simulation truth (number of signal photons in the run)
    and has no counterpart in a real experiment.
    """

    run_index: np.ndarray
    herald: np.ndarray
    b: np.ndarray
    a: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    photons: np.ndarray
    slow_phase: np.ndarray

    def __len__(self) -> int:
        return int(self.herald.size)

    def record(self, i: int) -> RunRecord:
        def opt(arr):
            val = int(arr[i])
            return None if val < 0 else val

        return RunRecord(
            herald=int(self.herald[i]),
            b=int(self.b[i]),
            a=opt(self.a),
            v1=opt(self.v1),
            v2=opt(self.v2),
            slow_phase=float(self.slow_phase[i]),
        )

    def records(self) -> Iterable[RunRecord]:
        for i in range(len(self)):
            yield self.record(i)

    @classmethod
    def from_records(cls, records: Sequence[RunRecord]) -> "RunBatch":
        def col(name, absent=-1):
            return np.array(
                [absent if getattr(r, name) is None else getattr(r, name) for r in records],
                dtype=np.int8,
            )

        n = len(records)
        return cls(
            run_index=np.arange(n, dtype=np.int64),
            herald=col("herald"),
            b=col("b"),
            a=col("a"),
            v1=col("v1"),
            v2=col("v2"),
            photons=np.full(n, -1, dtype=np.int8),
            slow_phase=np.array([r.slow_phase for r in records], dtype=np.float64),
        )

    @classmethod
    def concat(cls, batches: Sequence["RunBatch"]) -> "RunBatch":
        names = [f for f in cls.__dataclass_fields__]
        return cls(**{n: np.concatenate([getattr(b, n) for b in batches]) for n in names})

    def write_jsonl(self, fp, heralded_only: bool = True) -> None:
        for i in range(len(self)):
            if heralded_only and not self.herald[i]:
                continue
            rec = self.record(i)
            fp.write(
                json.dumps(
                    {
                        "run": int(self.run_index[i]),
                        "herald": rec.herald,
                        "b": rec.b,
                        "a": rec.a,
                        "v1": rec.v1,
                        "v2": rec.v2,
                        "slow_phase": rec.slow_phase,
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )


def wrap_phase(phase):
    return (np.asarray(phase) + np.pi) % (2.0 * np.pi) - np.pi


def slow_phase_track(seed: int, start: int, n: int, initial: float, walk_std: float) -> np.ndarray:
    """Slow phase of runs ``start .. start+n-1``; the walk always begins at run 0."""
    if walk_std == 0.0:
        return np.full(n, float(initial))
    key = _kernels.stream_key(seed)
    steps = _kernels.gaussian_steps(key, 0, start + n)
    return wrap_phase(initial + walk_std * np.cumsum(steps))[start:]


def _branch_thresholds(setup: RunSetup, phases: np.ndarray):
    refl, eff = setup.refl, setup.eff
    p_v1, p_v2, p_db = detection_arrays(
        refl.x, refl.y, refl.z, eff, setup.interf.visibility, phases
    )
    p_v1 = np.clip(p_v1, 0.0, None)
    p_v2 = np.clip(p_v2, 0.0, None)
    p_db = float(p_db)
    if np.any(p_v1 + p_v2 + p_db > 1.0 + CLAMP_TOL):
        raise DomainError("detection probabilities exceed 1; inconsistent efficiencies")
    rest = 1.0 - p_db
    if rest <= 0.0:
        return p_db, np.zeros(1), np.zeros(1), 0.0
    c1 = np.minimum(p_v1 / rest, 1.0)
    c12 = np.minimum((p_v1 + p_v2) / rest, 1.0)
    p_a = min(1.0, refl.x * eff.eta_a_s / rest)
    return p_db, c1, c12, p_a


def _sample_block(setup: RunSetup, seed: int, start: int, n: int, heralded_only: bool,
                  phases: np.ndarray, backend) -> RunBatch:
    noise = setup.noise
    if heralded_only:
        p_herald = 1.0
        p_real = 1.0 - noise.false_herald_fraction()
    else:
        p_herald = noise.p_herald
        p_real = noise.p_real
    constant = np.all(phases == phases[0]) if n else True
    p_db, c1, c12, p_a = _branch_thresholds(setup, phases[:1] if constant else phases)
    p_double = noise.pair_prob if noise.double_pair_enabled else 0.0
    key = _kernels.stream_key(seed)
    herald, b, a, v1, v2, photons = _kernels.sample_runs(
        key, start, n, p_real, p_herald, p_double, p_db, c1, c12, p_a,
        noise.signal_dark_prob, setup.bob_cheats, backend=backend,
    )
    return RunBatch(
        run_index=np.arange(start, start + n, dtype=np.int64),
        herald=herald, b=b, a=a, v1=v1, v2=v2, photons=photons,
        slow_phase=np.asarray(phases, dtype=np.float64),
    )


def simulate(
    setup: RunSetup,
    n_runs: int,
    seed: int = 0,
    start: int = 0,
    heralded_only: bool = True,
    backend: str | None = None,
    chunk: int = CHUNK,
) -> RunBatch:
    """Sample runs ``start .. start+n_runs-1``.

    With ``heralded_only`` every sampled run is a triggered protocol run
    (real or false herald); otherwise each index is one pump pulse.
    """
    if n_runs <= 0:
        raise DomainError("no runs: n_runs must be positive")
    if heralded_only:
        setup.noise.false_herald_fraction()  # raises when nothing can trigger
    phases = slow_phase_track(
        seed, start, n_runs, setup.interf.slow_phase, setup.noise.phase_walk_std
    )
    blocks = []
    for lo in range(0, n_runs, chunk):
        n = min(chunk, n_runs - lo)
        blocks.append(
            _sample_block(setup, seed, start + lo, n, heralded_only, phases[lo:lo + n], backend)
        )
    return blocks[0] if len(blocks) == 1 else RunBatch.concat(blocks)


def sample_run(
    seed: int,
    run_index: int,
    setup: RunSetup,
    heralded_only: bool = False,
    backend: str | None = None,
) -> RunRecord:
    """One pump pulse (or one triggered run) at the setup's fixed slow phase."""
    phases = np.array([setup.interf.slow_phase])
    if heralded_only:
        setup.noise.false_herald_fraction()
    return _sample_block(setup, seed, run_index, 1, heralded_only, phases, backend).record(0)


@dataclass(frozen=True)
class CoincidenceCounts:
    """Heralded tallies; the suffix lists every detector that fired."""

    r_h: int = 0
    r_hb: int = 0
    r_ha: int = 0
    r_hab: int = 0
    r_hv1: int = 0
    r_hv2: int = 0
    r_hbv1: int = 0
    r_hbv2: int = 0
    r_hv1v2: int = 0
    r_hbv1v2: int = 0

    _SUBSETS = {
        "r_hb": ("r_h",),
        "r_ha": ("r_h",),
        "r_hv1": ("r_h",),
        "r_hv2": ("r_h",),
        "r_hab": ("r_ha", "r_hb"),
        "r_hbv1": ("r_hb", "r_hv1"),
        "r_hbv2": ("r_hb", "r_hv2"),
        "r_hv1v2": ("r_hv1", "r_hv2"),
        "r_hbv1v2": ("r_hbv1", "r_hbv2", "r_hv1v2"),
    }

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise DomainError(f"{name}={value!r} must be a non-negative integer")
            object.__setattr__(self, name, int(value))
        for name, parents in self._SUBSETS.items():
            for parent in parents:
                if getattr(self, name) > getattr(self, parent):
                    raise DomainError(f"tally {name} exceeds its sub-tally {parent}")

    def __add__(self, other: "CoincidenceCounts") -> "CoincidenceCounts":
        if not isinstance(other, CoincidenceCounts):
            return NotImplemented
        return CoincidenceCounts(
            **{n: getattr(self, n) + getattr(other, n) for n in self.__dataclass_fields__}
        )

    def as_dict(self) -> dict[str, int]:
        return {n: getattr(self, n) for n in self.__dataclass_fields__}


def _as_batch(records) -> RunBatch:
    if isinstance(records, RunBatch):
        return records
    return RunBatch.from_records(list(records))


def _selection(batch: RunBatch, phase_filter: float | None) -> np.ndarray:
    sel = batch.herald == 1
    if phase_filter is not None:
        if not phase_filter >= 0:
            raise DomainError("phase_filter must be a non-negative window half-width")
        sel &= np.abs(wrap_phase(batch.slow_phase)) <= phase_filter
    return sel


def accumulate(records, phase_filter: float | None = None) -> CoincidenceCounts:
    """Tally heralded runs, optionally keeping only those with |slow phase| <= window."""
    batch = _as_batch(records)
    if len(batch) == 0:
        return CoincidenceCounts()
    sel = _selection(batch, phase_filter)
    b = sel & (batch.b == 1)
    a = sel & (batch.a == 1)
    v1 = sel & (batch.v1 == 1)
    v2 = sel & (batch.v2 == 1)

    def n(mask):
        return int(np.count_nonzero(mask))

    return CoincidenceCounts(
        r_h=n(sel),
        r_hb=n(b),
        r_ha=n(a),
        r_hab=n(a & b),
        r_hv1=n(v1),
        r_hv2=n(v2),
        r_hbv1=n(b & v1),
        r_hbv2=n(b & v2),
        r_hv1v2=n(v1 & v2),
        r_hbv1v2=n(b & v1 & v2),
    )


def outcome_counts(counts: CoincidenceCounts) -> dict[Outcome, int]:
    """Exclusive event counts from inclusive coincidence tallies."""
    c = counts
    alice_wins = c.r_hv1 - c.r_hv1v2 - c.r_hbv1 + c.r_hbv1v2
    bob_wins = c.r_hb - c.r_hab
    alice_sanctioned = c.r_hv2 - c.r_hbv2
    bob_sanctioned = c.r_hab
    abort = c.r_h - (alice_wins + bob_wins + alice_sanctioned + bob_sanctioned)
    return {
        Outcome.ALICE_WINS: alice_wins,
        Outcome.BOB_WINS: bob_wins,
        Outcome.ALICE_SANCTIONED: alice_sanctioned,
        Outcome.BOB_SANCTIONED: bob_sanctioned,
        Outcome.ABORT: abort,
    }


def outcome_rates(counts: CoincidenceCounts) -> OutcomeDistribution:
    if counts.r_h == 0:
        raise DegenerateError("no heralded runs (R_h = 0)")
    tallies = outcome_counts(counts)
    slack = -1.0 / counts.r_h
    rates = {}
    for outcome, k in tallies.items():
        rate = k / counts.r_h
        if rate < slack:
            raise DomainError(f"negative {outcome.value} rate {rate!r}; tallies are corrupted")
        rates[outcome] = max(rate, 0.0)
    return OutcomeDistribution(*(rates[o] for o in OUTCOME_ORDER))


def outcome_codes(batch: RunBatch) -> np.ndarray:
    """Index into OUTCOME_ORDER for each run, -1 for pulses without a herald."""
    codes = np.full(len(batch), -1, dtype=np.int8)
    h = batch.herald == 1
    b1 = h & (batch.b == 1)
    b0 = h & (batch.b == 0)
    codes[b1 & (batch.a == 0)] = 1
    codes[b1 & (batch.a == 1)] = 3
    codes[b0 & (batch.v2 == 1)] = 2
    codes[b0 & (batch.v2 == 0) & (batch.v1 == 1)] = 0
    codes[b0 & (batch.v2 == 0) & (batch.v1 == 0)] = 4
    return codes


@dataclass(frozen=True)
class Empirical:
    distribution: OutcomeDistribution
    stderr: dict[str, float]
    n: int


def empirical(batch: RunBatch, phase_filter: float | None = None) -> Empirical:
    counts = accumulate(batch, phase_filter)
    dist = outcome_rates(counts)
    n = counts.r_h
    stderr = {k: math.sqrt(p * (1 - p) / n) for k, p in dist.as_dict().items()}
    return Empirical(dist, stderr, n)


def z_scores(emp: Empirical, reference: OutcomeDistribution) -> dict[str, float]:
    """Per-outcome deviation in binomial standard errors of the reference.

    The variance is floored at 1/n so that a zero-probability reference does
    not turn a single stray event into an infinite score.
    """
    out = {}
    for name, p_ref in reference.as_dict().items():
        p_emp = getattr(emp.distribution, name)
        var = max(p_ref * (1 - p_ref), 1.0 / emp.n)
        out[name] = (p_emp - p_ref) / math.sqrt(var / emp.n)
    return out


def with_false_heralds(
    dist: OutcomeDistribution, fraction: float, outcome: Outcome = Outcome.ABORT
) -> OutcomeDistribution:
    """Mix in photon-less triggered runs, all of which end in ``outcome``.

    Honest parties see no click and abort; a Bob who always announces 1
    wins those runs because D_A stays dark.
    """
    keep = 1.0 - check_unit("fraction", fraction)
    probs = {o: keep * dist[o] for o in OUTCOME_ORDER}
    probs[Outcome(outcome)] += fraction
    return OutcomeDistribution(*(probs[o] for o in OUTCOME_ORDER))


SCENARIOS = ("honest", "bob_attack", "alice_attack")


def scenario(
    name: str,
    eff: PathEfficiencies,
    visibility: float,
    noise: NoiseModel | None = None,
    alice_x: float = 0.78,
) -> tuple[RunSetup, OutcomeDistribution]:
    """Sampler setup and dark-free analytic reference for a named scenario.

    The reference includes the photon-less runs caused by herald dark counts
    but neglects signal dark counts and double pairs.
    """
    noise = NoiseModel.noiseless() if noise is None else noise
    interf = InterferenceModel(visibility, 0.0)
    honest = honest_reflectivities(eff, visibility)
    if name == "honest":
        setup = RunSetup(honest, eff, interf, noise)
        ref = honest_outcomes(eff, visibility)
    elif name == "bob_attack":
        setup = RunSetup(honest, eff, interf, noise, bob_cheats=True)
        ref = bob_optimal_attack(eff, visibility)
    elif name == "alice_attack":
        setup = RunSetup(Reflectivities(alice_x, honest.y, honest.z), eff, interf, noise)
        ref = alice_x_attack(alice_x, eff, visibility)
    else:
        raise DomainError(f"unknown scenario {name!r}; choose from {SCENARIOS}")
    empty = Outcome.BOB_WINS if setup.bob_cheats else Outcome.ABORT
    return setup, with_false_heralds(ref, noise.false_herald_fraction(), empty)


@dataclass(frozen=True)
class VisibilityEstimate:
    value: float
    stderr: float
    p_zero: float
    p_pi: float


def estimate_visibility_mc(
    eff: PathEfficiencies,
    visibility: float,
    n_runs: int,
    seed: int = 0,
    noise: NoiseModel | None = None,
    backend: str | None = None,
) -> VisibilityEstimate:
    """Fringe contrast of the V1 click rate between slow phases 0 and pi.

    Both campaigns use the honest reflectivities; the pi campaign draws run
    indices after the zero-phase one so the two are independent.
    """
    noise = replace(NoiseModel.noiseless() if noise is None else noise, phase_walk_std=0.0)
    refl = honest_reflectivities(eff, visibility)
    probs = []
    for k, phase in enumerate((0.0, math.pi)):
        setup = RunSetup(refl, eff, InterferenceModel(visibility, phase), noise)
        batch = simulate(setup, n_runs, seed=seed, start=k * n_runs, backend=backend)
        hits = np.count_nonzero((batch.herald == 1) & (batch.v1 == 1))
        probs.append(hits / n_runs)
    p0, ppi = probs
    value = visibility_from_probabilities(p0, ppi)
    total = p0 + ppi
    # delta method on |p0 - ppi| / (p0 + ppi) with independent binomial counts
    d0 = 2 * ppi / total**2
    dpi = 2 * p0 / total**2
    var = d0**2 * p0 * (1 - p0) / n_runs + dpi**2 * ppi * (1 - ppi) / n_runs
    return VisibilityEstimate(value, math.sqrt(var), p0, ppi)


def false_trigger_abort_share(batch: RunBatch) -> float:
    """Fraction of heralded runs that abort because no photon was emitted."""
    h = batch.herald == 1
    n = np.count_nonzero(h)
    if n == 0:
        raise DegenerateError("no heralded runs")
    aborted = outcome_codes(batch) == 4
    return np.count_nonzero(h & (batch.photons == 0) & aborted) / n
