"""End-to-end entanglement protocols.

Three procedures built from the source, analyzer, and metric layers:

* post-selected generation: the raw source output as a classical mixture
  over emission sectors (vacuum + entangled branch at first order);
* event-ready generation: source plus an ancilla photon pair, heralded by
  a Bell-state analysis on the forward photon and one ancilla photon;
* teleportation memory: store an arbitrary photonic qubit in the two
  collective atomic modes via Bell analysis against the heralded channel
  state, with an ideal readout back to a photon.

Heralds come with correction operators fixed once for this beam-splitter
sign convention (derived by brute force, pinned by tests): a triplet
herald needs a phase flip on the surviving ancilla photon's H mode
(event-ready) or on the second collective mode (memory); singlet heralds
need no correction.  Corrections map the heralded branch onto the
singlet-herald branch exactly, so heralded states are unique up to
global phase.

Sampled runs draw one counter-based random stream per trial from
(seed, trial index), which makes results independent of execution order
and parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import detection, elements, fock, metrics, sources
from .detection import FAIL, PSI_MINUS, PSI_PLUS, DetectorSpec, PreparedBellAnalyzer
from .errors import ValidationError
from .fock import MixedState, ModeRegistry, PureState
from .rng import trial_rng
from .sources import SourceParams

SQRT_HALF = math.sqrt(0.5)

#: z for a 95% Wilson score interval
_WILSON_Z = 1.959963984540054


@dataclass(frozen=True)
class ProtocolConfig:
    source: SourceParams = field(default_factory=SourceParams)
    detector: DetectorSpec = field(default_factory=DetectorSpec)
    trials: int = 10_000
    mode: str = "exact"
    seed: int = 0
    theta: float = 0.0
    phi: float = 0.0
    #: disable the ancilla pair (dark-count studies feed the analyzer vacuum)
    epr_enabled: bool = True
    retrieval_efficiency: float = 1.0
    cutoff: int = fock.DEFAULT_CUTOFF

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise ValidationError(f"mode {self.mode!r} must be 'exact' or 'sampled'")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if not 0.0 <= self.theta <= math.pi:
            raise ValidationError(f"theta={self.theta} outside [0, pi]")
        if not 0.0 <= self.phi < 2.0 * math.pi:
            raise ValidationError(f"phi={self.phi} outside [0, 2*pi)")
        if not 0.0 <= self.retrieval_efficiency <= 1.0:
            raise ValidationError("retrieval_efficiency outside [0, 1]")


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    outcome: str
    success: bool
    fidelity: float | None = None


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial rate."""
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    z2 = _WILSON_Z * _WILSON_Z
    phat = successes / trials
    denom = 1.0 + z2 / trials
    center = phat + z2 / (2.0 * trials)
    half = _WILSON_Z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4.0 * trials * trials))
    return (center - half) / denom, (center + half) / denom


# ---------------------------------------------------------------------------
# qubit encodings used throughout

ATOMIC_QUBIT = metrics.excitation_qubit("S1", "S2")


def _b_qubit() -> metrics.QubitEncoding:
    return metrics.pol_qubit("B")


# ---------------------------------------------------------------------------
# post-selected generation


def generate_entanglement(config: ProtocolConfig) -> tuple[MixedState, dict]:
    """Source output as the emission-sector mixture.

    Without a phase reference between pump pulses the coherence between
    emission sectors is unobservable, so the physical state is the
    classical mixture of the vacuum branch and the entangled
    one-emission branch (weights 1/(1+p0) and p0/(1+p0) at first order).
    """
    src = sources.dual_ensemble_source(config.source, config.cutoff)
    branches: list[tuple[float, PureState]] = []
    weights: list[float] = []
    for k in range(config.source.emission_order + 1):
        sector, w = fock.restrict_total_occupation(src, ["S1", "S2"], k)
        if sector is not None and w > 0.0:
            branches.append((w, sector))
            weights.append(w)
    mixed = MixedState(branches, check_weights=False)

    system = [m.name for m in mixed.registry.modes if m.kind != fock.LOSS]
    rho, _ = fock.reduced_density(mixed, system)
    report = {
        "protocol": "generate",
        "p0": config.source.p0,
        "emission_order": config.source.emission_order,
        "branch_weights": weights,
        "purity": metrics.purity(rho),
        "truncation_loss": src.truncation_loss,
    }
    if len(branches) > 1:
        excited = branches[1][1]
        pair = metrics.two_qubit_density(excited, ATOMIC_QUBIT, metrics.pol_qubit("p"))
        report["excited_branch_concurrence"] = metrics.concurrence(pair)
        report["excited_branch_entropy"] = metrics.entropy(excited, ["S1", "S2"])
    return mixed, report


# ---------------------------------------------------------------------------
# Bell decomposition

_BELL_TABLE = {
    "phi_plus": {(0, 0): SQRT_HALF, (1, 1): SQRT_HALF},
    "phi_minus": {(0, 0): SQRT_HALF, (1, 1): -SQRT_HALF},
    "psi_plus": {(0, 1): SQRT_HALF, (1, 0): SQRT_HALF},
    "psi_minus": {(0, 1): SQRT_HALF, (1, 0): -SQRT_HALF},
}


def bell_decompose(
    state: PureState, enc_a: metrics.QubitEncoding, enc_b: metrics.QubitEncoding
) -> dict[str, float]:
    """Branch norms of the four Bell components on an encoded qubit pair.

    The complex phase of each component is absorbed into its residual
    factor on the remaining modes, so values are reported as magnitudes;
    their squares sum to the state's norm.
    """
    reg = state.registry
    idx_a = [reg.index(m) for m in enc_a.modes]
    idx_b = [reg.index(m) for m in enc_b.modes]
    rest_idx = [i for i in range(len(reg)) if i not in idx_a and i not in idx_b]

    def bit_of(occ, idx, enc):
        sub = tuple(occ[i] for i in idx)
        if sub == enc.zero:
            return 0
        if sub == enc.one:
            return 1
        raise ValidationError(f"state leaves the qubit sector on modes {enc.modes}: pattern {sub}")

    branches: dict[str, dict[tuple[int, ...], complex]] = {name: {} for name in _BELL_TABLE}
    for occ, c in state.amplitudes.items():
        ba = bit_of(occ, idx_a, enc_a)
        bb = bit_of(occ, idx_b, enc_b)
        rest = tuple(occ[i] for i in rest_idx)
        for name, table in _BELL_TABLE.items():
            amp = table.get((ba, bb))
            if amp is not None:
                acc = branches[name]
                acc[rest] = acc.get(rest, 0.0) + amp * c
    return {
        name: math.sqrt(sum(abs(v) ** 2 for v in acc.values()))
        for name, acc in branches.items()
    }


# ---------------------------------------------------------------------------
# event-ready generation


def _flip_phase(mixed: MixedState, mode) -> MixedState:
    return MixedState(
        [(w, fock.apply_phase(st, mode, math.pi)) for w, st in mixed.branches],
        check_weights=False,
    )


def event_ready_target(registry: ModeRegistry) -> PureState:
    """The singlet the herald announces: (|V>_B|S1> - |H>_B|S2>)/sqrt(2)."""
    v = fock.basis_state(registry, {"S1": 1, "B:V": 1})
    h = fock.basis_state(registry, {"S2": 1, "B:H": 1})
    return PureState(registry, {**{o: SQRT_HALF for o in v.amplitudes}, **{o: -SQRT_HALF for o in h.amplitudes}})


def _event_ready_input(config: ProtocolConfig) -> PureState:
    src = sources.dual_ensemble_source(config.source, config.cutoff)
    if config.epr_enabled:
        ancilla = sources.epr_pair("A", "B", cutoff=config.cutoff)
    else:
        reg = ModeRegistry(cutoff=config.cutoff).add_photonic_path("A", basis="linear")
        ancilla = fock.vacuum(reg.add_photonic_path("B", basis="linear"))
    return fock.tensor(src, ancilla)


def _mixture_fidelity(mixed: MixedState, target: PureState) -> float:
    return fock.state_fidelity(mixed, target)


def false_herald_probability(rule: detection.HeraldRule, dark_prob: float, n_detectors: int = 4) -> float:
    """Per-window probability that dark counts alone forge a herald
    (vacuum at every detector)."""
    total = 0.0
    for pattern, outcome in rule.patterns:
        if outcome == FAIL:
            continue
        k = len(pattern)
        total += dark_prob**k * (1.0 - dark_prob) ** (n_detectors - k)
    return total


class _SampledProtocol:
    """Prepared analyzer plus the per-outcome correction and fidelity
    target for one protocol kind, with conditional fidelities cached per
    true detection pattern."""

    def __init__(self, config: ProtocolConfig, kind: str, channel: PureState | None = None):
        self.kind = kind
        if kind == "event-ready":
            joint = _event_ready_input(config)
            paths = ("p", "A")
        elif kind == "memory":
            chan = channel if channel is not None else ideal_channel(config.cutoff)
            joint = fock.tensor(chan, input_qubit(config.theta, config.phi, config.cutoff))
            paths = ("q", "B")
            self._amps = (math.cos(config.theta), math.sin(config.theta) * np.exp(1j * config.phi))
        else:
            raise ValidationError(f"unknown sampled protocol {kind!r}")
        self.truncation_loss = joint.truncation_loss
        self.prep = PreparedBellAnalyzer(joint, *paths, config.detector)
        self._fids: dict[tuple[tuple[int, ...], str], float] = {}
        self._target: PureState | None = None

    def corrected_conditional(self, true: tuple[int, ...], outcome: str) -> MixedState:
        cond = self.prep.conditional(true)
        if outcome == PSI_PLUS:
            cond = _flip_phase(cond, "B:H" if self.kind == "event-ready" else "S2")
        return cond

    def fidelity(self, true: tuple[int, ...], outcome: str) -> float:
        key = (true, outcome)
        fid = self._fids.get(key)
        if fid is None:
            cond = self.corrected_conditional(true, outcome)
            if self.kind == "event-ready":
                if self._target is None:
                    self._target = event_ready_target(cond.registry)
                fid = _mixture_fidelity(cond, self._target)
            else:
                fid = metrics.qubit_fidelity(cond, ATOMIC_QUBIT, *self._amps)
            self._fids[key] = fid
        return fid


@lru_cache(maxsize=8)
def _cached_protocol(config: ProtocolConfig, kind: str) -> _SampledProtocol:
    return _SampledProtocol(config, kind)


def trial_outcomes(
    config: ProtocolConfig, kind: str, start: int, count: int, channel: PureState | None = None
) -> list[tuple[str, float | None]]:
    """Run trials [start, start+count) and return (outcome, fidelity)
    per trial; fidelity is None on failures.

    Each trial draws its own counter-based stream from (seed, index), so
    any partition of the index range yields identical results.
    """
    sp = _SampledProtocol(config, kind, channel) if channel is not None else _cached_protocol(config, kind)
    out: list[tuple[str, float | None]] = []
    for i in range(start, start + count):
        rng = trial_rng(config.seed, i)
        outcome, _, true = sp.prep.sample(rng)
        fid = sp.fidelity(true, outcome) if outcome != FAIL else None
        out.append((outcome, fid))
    return out


def summarize_sampled(config: ProtocolConfig, kind: str, outcomes: list[tuple[str, float | None]]) -> dict:
    """Aggregate per-trial outcomes (in trial order) into the summary
    block shared by the sampled protocols."""
    successes = 0
    fid_sum = 0.0
    counts = {PSI_MINUS: 0, PSI_PLUS: 0, FAIL: 0}
    for outcome, fid in outcomes:
        counts[outcome] += 1
        if outcome != FAIL:
            successes += 1
            fid_sum += fid
    trials = len(outcomes)
    low, high = wilson_interval(successes, trials)
    fid_key = "mean_heralded_fidelity" if kind == "event-ready" else "mean_stored_fidelity"
    return {
        "trials": trials,
        "seed": config.seed,
        "eta": config.detector.efficiency,
        "dark_prob": config.detector.dark_prob,
        "success_count": successes,
        "success_rate": successes / trials,
        "wilson_low": low,
        "wilson_high": high,
        "psi_minus_count": counts[PSI_MINUS],
        "psi_plus_count": counts[PSI_PLUS],
        fid_key: (fid_sum / successes) if successes else None,
    }


def event_ready_generation(
    config: ProtocolConfig, return_records: bool = False
) -> tuple[MixedState | None, dict, list[TrialRecord]]:
    """Heralded entanglement between the ensembles and ancilla photon B.

    Exact mode evolves the full state and reports closed-form
    probabilities with ideal detectors; sampled mode draws per-trial
    detector records with the configured efficiency and dark counts.
    """
    p0 = config.source.p0
    report: dict = {
        "protocol": "event-ready",
        "mode": config.mode,
        "p0": p0,
        "emission_order": config.source.emission_order,
        "leading_order_success_probability": p0 / 2.0,
        "order1_success_probability": p0 / (2.0 * (1.0 + p0)),
    }
    records: list[TrialRecord] = []

    if config.mode == "exact":
        joint = _event_ready_input(config)
        report["truncation_loss"] = joint.truncation_loss
        prep = PreparedBellAnalyzer(joint, "p", "A")
        outcomes = {name: (cond, prob) for name, cond, prob in prep.exact_outcomes()}
        minus, p_minus = outcomes[PSI_MINUS]
        plus, p_plus = outcomes[PSI_PLUS]
        total = p_minus + p_plus
        report["success_probability"] = total
        report["psi_minus_probability"] = p_minus
        report["psi_plus_probability"] = p_plus
        if total <= 0.0:
            report["heralded_fidelity"] = None
            return None, report, records
        branches: list[tuple[float, PureState]] = []
        if minus is not None and p_minus > 0:
            branches += [(w * p_minus / total, st) for w, st in minus.branches]
        if plus is not None and p_plus > 0:
            corrected = _flip_phase(plus, "B:H")
            branches += [(w * p_plus / total, st) for w, st in corrected.branches]
        heralded = MixedState(branches, check_weights=False)
        target = event_ready_target(heralded.registry)
        report["heralded_fidelity"] = _mixture_fidelity(heralded, target)
        return heralded, report, records

    outcomes_list = trial_outcomes(config, "event-ready", 0, config.trials)
    report.update(summarize_sampled(config, "event-ready", outcomes_list))
    if return_records:
        records = [
            TrialRecord(i, outcome, outcome != FAIL, fid) for i, (outcome, fid) in enumerate(outcomes_list)
        ]
    return None, report, records


# ---------------------------------------------------------------------------
# teleportation memory


def ideal_channel(cutoff: int = fock.DEFAULT_CUTOFF) -> PureState:
    """Perfect event-ready channel state for unit-testing the memory."""
    reg = ModeRegistry(cutoff=cutoff).add_atomic("S1").add_atomic("S2").add_photonic_path("B", basis="linear")
    return event_ready_target(reg)


def input_qubit(theta: float, phi: float, cutoff: int = fock.DEFAULT_CUTOFF) -> PureState:
    """Photon to store: cos(theta)|H> + e^(i phi) sin(theta)|V> on path q."""
    reg = ModeRegistry(cutoff=cutoff).add_photonic_path("q", basis="linear")
    amps = {}
    a0, a1 = math.cos(theta), math.sin(theta)
    if abs(a0) > 1e-15:
        amps[tuple(1 if m.name == "q:H" else 0 for m in reg.modes)] = a0
    if abs(a1) > 1e-15:
        amps[tuple(1 if m.name == "q:V" else 0 for m in reg.modes)] = a1 * np.exp(1j * phi)
    return PureState(reg, amps)


def memory_store(
    config: ProtocolConfig,
    channel: PureState | None = None,
    return_records: bool = False,
) -> tuple[MixedState | None, dict, list[TrialRecord]]:
    """Teleport an input photonic qubit into the collective atomic modes.

    The channel defaults to the ideal heralded singlet; pass an
    event-ready output to study the full chain.  Success is any
    non-failure herald (probability 1/2 for an ideal channel).
    """
    chan = channel if channel is not None else ideal_channel(config.cutoff)
    if "B:H" not in {m.name for m in chan.registry.modes}:
        raise ValidationError("channel state must carry the B path")
    qubit = input_qubit(config.theta, config.phi, config.cutoff)
    joint = fock.tensor(chan, qubit)
    a0 = math.cos(config.theta)
    a1 = math.sin(config.theta) * np.exp(1j * config.phi)

    report: dict = {
        "protocol": "memory",
        "mode": config.mode,
        "theta": config.theta,
        "phi": config.phi,
    }
    records: list[TrialRecord] = []

    if config.mode == "exact":
        prep = PreparedBellAnalyzer(joint, "q", "B")
        outcomes = {name: (cond, prob) for name, cond, prob in prep.exact_outcomes()}
        minus, p_minus = outcomes[PSI_MINUS]
        plus, p_plus = outcomes[PSI_PLUS]
        total = p_minus + p_plus
        report["success_probability"] = total
        if total <= 0.0:
            report["stored_fidelity"] = None
            return None, report, records
        branches: list[tuple[float, PureState]] = []
        if minus is not None and p_minus > 0:
            branches += [(w * p_minus / total, st) for w, st in minus.branches]
        if plus is not None and p_plus > 0:
            corrected = _flip_phase(plus, "S2")
            branches += [(w * p_plus / total, st) for w, st in corrected.branches]
        stored = MixedState(branches, check_weights=False)
        report["stored_fidelity"] = metrics.qubit_fidelity(stored, ATOMIC_QUBIT, a0, a1)
        readout = memory_readout(stored, config.retrieval_efficiency)
        report["round_trip_fidelity"] = metrics.qubit_fidelity(
            readout, metrics.pol_qubit("readout"), a0, a1
        )
        return stored, report, records

    outcomes_list = trial_outcomes(config, "memory", 0, config.trials, channel=channel)
    report.update(summarize_sampled(config, "memory", outcomes_list))
    if return_records:
        records = [
            TrialRecord(i, outcome, outcome != FAIL, fid) for i, (outcome, fid) in enumerate(outcomes_list)
        ]
    return None, report, records


def memory_readout(stored: MixedState | PureState, retrieval_efficiency: float = 1.0) -> MixedState:
    """Convert the collective excitation back into a photon: S1 becomes
    the H mode and S2 the V mode of a fresh `readout` path, optionally
    thinned by a retrieval efficiency."""
    mixed = fock.as_mixed(stored)
    reg = mixed.registry
    for name in ("S1", "S2"):
        if name not in {m.name for m in reg.modes}:
            raise ValidationError("readout needs the two collective modes")
    i1, i2 = reg.index("S1"), reg.index("S2")
    for _, st in mixed.branches:
        for occ in st.amplitudes:
            if occ[i1] + occ[i2] > 1:
                raise ValidationError("readout input must stay in the single-excitation sector")
    new_reg = reg.replace(
        {reg.mode("S1"): fock.photonic_mode("readout", "H"), reg.mode("S2"): fock.photonic_mode("readout", "V")}
    )
    branches = []
    for w, st in mixed.branches:
        out = st.with_registry(new_reg)
        if retrieval_efficiency < 1.0:
            out = elements.attenuate_mode(out, "readout:H", retrieval_efficiency)
            out = elements.attenuate_mode(out, "readout:V", retrieval_efficiency)
        branches.append((w, out))
    return MixedState(branches, check_weights=False)


def fidelity_report(
    before: PureState,
    before_enc: metrics.QubitEncoding,
    after: MixedState | PureState,
    after_enc: metrics.QubitEncoding,
) -> float:
    """<phi|rho|phi> between a pure qubit and a possibly-mixed qubit that
    may live on different physical modes."""
    a0 = before.amplitude(before_enc.pattern(0))
    a1 = before.amplitude(before_enc.pattern(1))
    n = abs(a0) ** 2 + abs(a1) ** 2
    if abs(n - 1.0) > 1e-9:
        raise ValidationError("reference state is not a normalized qubit in its encoding")
    return metrics.qubit_fidelity(after, after_enc, a0, a1)
