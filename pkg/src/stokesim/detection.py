"""Threshold photodetection and the two-path Bell-state analyzer.

Detection is a two-stage story.  The quantum part is a projective
measurement of photon number on the measured modes, sampled by the Born
rule; this fixes the conditional state of everything not measured.  The
classical part turns true photon numbers into clicks: each photon is
seen with probability `efficiency`, a threshold detector reports only
click/no-click, and a dark count ORs in a spurious click per window.
Dark counts never alter the conditional state; they only corrupt the
classical record.

The Bell-state analyzer interferes two linear-basis paths on a balanced
beam splitter, splits each output by polarization onto detectors D_H and
D_V (first side) and D_H' and D_V' (second side), and classifies click
coincidences: one H click and one V click on opposite sides heralds the
singlet, on the same side the triplet; every other pattern is a failure.
Both same-polarization inputs bunch into one detector, which is why only
two of the four Bell states are ever identified.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import elements, fock
from .errors import ValidationError
from .fock import LOSS, MixedState, PureState, as_mixed

PSI_MINUS = "PsiMinus"
PSI_PLUS = "PsiPlus"
FAIL = "Fail"

D_H, D_V, D_HP, D_VP = "D_H", "D_V", "D_H'", "D_V'"

_MAX_OUTCOMES = 4096


@dataclass(frozen=True)
class DetectorSpec:
    """Threshold single-photon detector model."""

    efficiency: float = 1.0
    dark_prob: float = 1e-5
    resolving: bool = False
    label: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValidationError(f"efficiency {self.efficiency} outside [0, 1]")
        if not 0.0 <= self.dark_prob < 1.0:
            raise ValidationError(f"dark_prob {self.dark_prob} outside [0, 1)")

    def click_prob(self, n: int) -> float:
        """Probability this detector clicks on n incident photons."""
        return 1.0 - (1.0 - self.efficiency) ** n * (1.0 - self.dark_prob)


@dataclass(frozen=True)
class ClickPattern:
    """Set of detectors that fired; `counts` present only when a
    number-resolving detector took part."""

    clicks: frozenset
    counts: tuple = ()

    def __contains__(self, label) -> bool:
        return label in self.clicks


@dataclass(frozen=True)
class HeraldRule:
    """Mapping from click patterns to protocol outcomes; unlisted
    patterns are failures."""

    patterns: tuple

    def classify(self, pattern: ClickPattern | frozenset) -> str:
        clicks = pattern.clicks if isinstance(pattern, ClickPattern) else frozenset(pattern)
        for pat, outcome in self.patterns:
            if pat == clicks:
                return outcome
        return FAIL


def default_herald_rule() -> HeraldRule:
    return HeraldRule(
        (
            (frozenset({D_H, D_VP}), PSI_MINUS),
            (frozenset({D_V, D_HP}), PSI_MINUS),
            (frozenset({D_H, D_V}), PSI_PLUS),
            (frozenset({D_HP, D_VP}), PSI_PLUS),
        )
    )


def classify(pattern, rule: HeraldRule | None = None) -> str:
    return (rule or default_herald_rule()).classify(pattern)


def exact_outcome_distribution(
    state: PureState | MixedState, modes: Sequence
) -> list[tuple[tuple[int, ...], float]]:
    """Exhaustive Born distribution of photon numbers on `modes`,
    normalized, sorted by occupation pattern."""
    mixed = as_mixed(state)
    idx = [mixed.registry.index(m) for m in modes]
    probs: dict[tuple[int, ...], float] = {}
    for w, st in mixed.branches:
        for occ, c in st.amplitudes.items():
            key = tuple(occ[i] for i in idx)
            probs[key] = probs.get(key, 0.0) + w * abs(c) ** 2
    if len(probs) > _MAX_OUTCOMES:
        raise ValidationError(f"outcome space has {len(probs)} patterns, bound is {_MAX_OUTCOMES}")
    total = sum(probs.values())
    if total <= 0.0:
        raise ValidationError("state has no weight on the measured modes")
    return sorted((occ, p / total) for occ, p in probs.items())


def _condition_on_pattern(
    state: PureState | MixedState, modes: Sequence, pattern: tuple[int, ...]
) -> MixedState:
    """State of the rest of the system given true photon numbers
    `pattern` on `modes`: measured modes removed, loss modes traced."""
    mixed = as_mixed(state)
    target = dict(zip(modes, pattern))
    kept: list[tuple[float, PureState]] = []
    for w, st in mixed.branches:
        post, weight = fock.project(st, target)
        if post is not None:
            kept.append((w * weight, fock.remove_definite_modes(post, modes)))
    if not kept:
        raise ValidationError(f"pattern {pattern} has zero probability")
    total = sum(w for w, _ in kept)
    conditional = MixedState([(w / total, s) for w, s in kept], check_weights=False)
    lossy = [m.name for m in conditional.registry.modes if m.kind == LOSS]
    if lossy:
        conditional = fock.trace_out(conditional, lossy)
    return conditional


def _sample_clicks(
    true_counts: Sequence[int], specs: Sequence[DetectorSpec], labels: Sequence[str], rng
) -> ClickPattern:
    clicks = set()
    counts = []
    resolving = False
    for n, spec, label in zip(true_counts, specs, labels):
        seen = n if spec.efficiency >= 1.0 else int(rng.binomial(n, spec.efficiency)) if n else 0
        if spec.dark_prob > 0.0 and rng.random() < spec.dark_prob:
            seen += 1
        if seen:
            clicks.add(label)
        if spec.resolving:
            resolving = True
        counts.append((label, seen))
    return ClickPattern(frozenset(clicks), tuple(counts) if resolving else ())


def _pattern_probability(
    dist: list[tuple[tuple[int, ...], float]], specs: Sequence[DetectorSpec], clicked: Sequence[bool]
) -> float:
    total = 0.0
    for occ, p in dist:
        factor = 1.0
        for n, spec, hit in zip(occ, specs, clicked):
            q = spec.click_prob(n)
            factor *= q if hit else (1.0 - q)
        total += p * factor
    return total


def measure(
    state: PureState | MixedState, detectors: Mapping, rng
) -> tuple[ClickPattern, MixedState, float]:
    """Measure the modes named in `detectors` (mode -> DetectorSpec).

    Returns the observed click pattern, the conditional state given the
    true photon-number outcome, and the total probability of observing
    that click pattern.
    """
    modes = list(detectors)
    specs = [detectors[m] for m in modes]
    labels = [s.label or (m if isinstance(m, str) else m.name) for s, m in zip(specs, modes)]
    dist = exact_outcome_distribution(state, modes)
    pick = rng.choice(len(dist), p=np.array([p for _, p in dist]))
    true = dist[pick][0]
    pattern = _sample_clicks(true, specs, labels, rng)
    conditional = _condition_on_pattern(state, modes, true)
    clicked = [lab in pattern.clicks for lab in labels]
    return pattern, conditional, _pattern_probability(dist, specs, clicked)


class PreparedBellAnalyzer:
    """Bell-state analyzer with the optical network applied once up
    front, so repeated trials only sample detector clicks.

    The input must carry two linear-basis paths; the first named path
    feeds detectors D_H/D_V, the second D_H'/D_V'.
    """

    def __init__(
        self,
        state: PureState,
        path_1: str,
        path_2: str,
        detector: DetectorSpec = DetectorSpec(),
        rule: HeraldRule | None = None,
    ):
        st = elements.beam_splitter(state, path_1, path_2)
        st, out_1h, out_1v = elements.pol_splitter(st, path_1)
        st, out_2h, out_2v = elements.pol_splitter(st, path_2)
        self.state = st
        self.modes = [f"{out_1h}:H", f"{out_1v}:V", f"{out_2h}:H", f"{out_2v}:V"]
        self.labels = [D_H, D_V, D_HP, D_VP]
        self.specs = [
            DetectorSpec(detector.efficiency, detector.dark_prob, detector.resolving, label)
            for label in self.labels
        ]
        self.rule = rule or default_herald_rule()
        self.distribution = exact_outcome_distribution(st, self.modes)
        self._cum = np.cumsum([p for _, p in self.distribution])
        self._conditionals: dict[tuple[int, ...], MixedState] = {}

    def conditional(self, true_pattern: tuple[int, ...]) -> MixedState:
        cached = self._conditionals.get(true_pattern)
        if cached is None:
            cached = _condition_on_pattern(self.state, self.modes, true_pattern)
            self._conditionals[true_pattern] = cached
        return cached

    def sample(self, rng) -> tuple[str, ClickPattern, tuple[int, ...]]:
        pick = min(int(np.searchsorted(self._cum, rng.random(), side="right")), len(self._cum) - 1)
        true = self.distribution[pick][0]
        pattern = _sample_clicks(true, self.specs, self.labels, rng)
        return self.rule.classify(pattern), pattern, true

    def exact_outcomes(self) -> list[tuple[str, MixedState | None, float]]:
        """Outcome distribution with ideal detectors: every mode with at
        least one photon clicks.  Returns (outcome, conditional state,
        probability) with conditionals mixed over the click-degenerate
        true patterns."""
        grouped: dict[str, list[tuple[tuple[int, ...], float]]] = {PSI_MINUS: [], PSI_PLUS: [], FAIL: []}
        for occ, p in self.distribution:
            clicks = frozenset(lab for lab, n in zip(self.labels, occ) if n > 0)
            grouped[self.rule.classify(ClickPattern(clicks))].append((occ, p))
        out = []
        for outcome in (PSI_MINUS, PSI_PLUS, FAIL):
            entries = grouped[outcome]
            prob = sum(p for _, p in entries)
            if prob <= 0.0:
                out.append((outcome, None, 0.0))
                continue
            branches: list[tuple[float, PureState]] = []
            for occ, p in entries:
                for w, st in self.conditional(occ).branches:
                    branches.append((p / prob * w, st))
            out.append((outcome, MixedState(branches, check_weights=False), prob))
        return out


def bell_analyzer(
    state: PureState,
    path_1: str,
    path_2: str,
    detector: DetectorSpec = DetectorSpec(),
    rng=None,
    exact: bool = False,
    rule: HeraldRule | None = None,
):
    """One-shot Bell-state analysis on two linear-basis paths.

    With `exact=True` returns the full outcome table
    [(outcome, conditional, probability)]; otherwise samples one trial
    and returns (outcome, conditional given the true photon numbers,
    click-pattern probability).
    """
    prepared = PreparedBellAnalyzer(state, path_1, path_2, detector, rule)
    if exact:
        return prepared.exact_outcomes()
    if rng is None:
        raise ValidationError("sampled analysis needs a random generator")
    outcome, pattern, true = prepared.sample(rng)
    clicked = [lab in pattern.clicks for lab in prepared.labels]
    prob = _pattern_probability(prepared.distribution, prepared.specs, clicked)
    return outcome, prepared.conditional(true), prob
