"""Instantaneous projective measurements of a single spin.

The initial state is pure and a projector maps pure states to pure states,
so Tr[S P rho P]/Tr[P rho P] is evaluated as an expectation value on the
renormalized branch P|psi>/|P psi|. Non-selective measurements are lists of
weighted branches rather than density matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .basis import ChainSpec
from .errors import DomainError, ImpossibleOutcomeError
from .operators import AXES, LocalSpinOp, StateVector, apply_local_spin
from .propagate import PropagatorConfig, evolve

PROBABILITY_FLOOR = 1e-14


@dataclass(frozen=True)
class ProjectorSpec:
    """(1 + 2 sign S^axis_site) / 2; sign +1 projects parallel, -1 antiparallel."""

    site: int
    axis: str = "z"
    sign: int = 1

    def __post_init__(self):
        sign = self.sign
        if isinstance(sign, str):
            if sign not in ("+", "-"):
                raise DomainError(f"sign must be '+' or '-', got {sign!r}")
            sign = 1 if sign == "+" else -1
        if sign not in (1, -1):
            raise DomainError(f"sign must be +1 or -1, got {sign!r}")
        object.__setattr__(self, "sign", int(sign))
        if self.axis not in AXES:
            raise DomainError(f"axis must be one of {AXES}, got {self.axis!r}")
        if self.site < 1:
            raise DomainError(f"site must be >= 1, got {self.site}")

    @property
    def label(self) -> str:
        return f"P{'+' if self.sign > 0 else '-'}{self.axis}@{self.site}"

    def opposite(self) -> "ProjectorSpec":
        return ProjectorSpec(self.site, self.axis, -self.sign)


@dataclass(frozen=True, eq=False)
class MeasurementOutcome:
    """One branch of a measurement. ``state`` is None for a forbidden outcome."""

    state: StateVector | None
    probability: float
    projector: ProjectorSpec

    @property
    def impossible(self) -> bool:
        return self.state is None


def apply_projector(psi: StateVector, p: ProjectorSpec) -> StateVector:
    """Unnormalized P|psi>. z projectors keep a sector state in its sector."""
    s_psi = apply_local_spin(LocalSpinOp(p.site, p.axis), psi)
    base = psi if s_psi.sector == psi.sector else psi.to_full()
    amps = 0.5 * base.amplitudes + p.sign * s_psi.amplitudes
    return StateVector(psi.chain, amps, s_psi.sector, normalized=False)


def _branch(psi, p):
    projected = apply_projector(psi, p)
    prob = float(np.vdot(projected.amplitudes, projected.amplitudes).real)
    return projected, prob


def project(psi: StateVector, p: ProjectorSpec) -> MeasurementOutcome:
    """Selective measurement: keep the ``p`` outcome and renormalize."""
    projected, prob = _branch(psi, p)
    if prob < PROBABILITY_FLOOR:
        raise ImpossibleOutcomeError(
            f"outcome {p.label} has probability {prob:.3e} below {PROBABILITY_FLOOR:g}", probability=prob
        )
    state = StateVector(psi.chain, projected.amplitudes / np.sqrt(prob), projected.sector)
    return MeasurementOutcome(state, prob, p)


def measure_nonselective(psi: StateVector, site: int, axis: str = "z") -> list[MeasurementOutcome]:
    """Both outcomes (+ then -) with their probabilities."""
    outcomes = []
    for sign in (1, -1):
        p = ProjectorSpec(site, axis, sign)
        projected, prob = _branch(psi, p)
        if prob < PROBABILITY_FLOOR:
            outcomes.append(MeasurementOutcome(None, prob, p))
        else:
            state = StateVector(psi.chain, projected.amplitudes / np.sqrt(prob), projected.sector)
            outcomes.append(MeasurementOutcome(state, prob, p))
    return outcomes


def branch_average(outcomes: Sequence[MeasurementOutcome], observable: Callable[[StateVector], float]) -> float:
    """sum_i p_i <O>_i over the possible branches of a mixture."""
    return float(sum(o.probability * observable(o.state) for o in outcomes if not o.impossible))


@dataclass(frozen=True, eq=False)
class ZenoEvent:
    time: float
    outcome: MeasurementOutcome
    observables: dict


def zeno_sequence(
    psi0: StateVector,
    chain: ChainSpec,
    p: ProjectorSpec,
    times: Sequence[float],
    cfg: PropagatorConfig | None = None,
    t0: float = 0.0,
    observe: Callable[[StateVector], dict] | None = None,
) -> list[ZenoEvent]:
    """Evolve from ``t0`` and apply the same selective projector at each time.

    Between events the state evolves freely, so the composite map between
    two events is P exp(-iH dt) P.
    """
    times = list(times)
    if any(b <= a for a, b in zip(times, times[1:])):
        raise DomainError("measurement times must be strictly increasing")
    if times and times[0] < t0:
        raise DomainError("first measurement precedes the initial time")
    if observe is None:
        from .observables import magnetization_profile, staggered_magnetization

        def observe(state):
            return {
                "sz": magnetization_profile(state, "z").tolist(),
                "staggered": staggered_magnetization(state),
            }

    events = []
    state, t_prev = psi0, t0
    for t in times:
        state = evolve(state, chain, t - t_prev, cfg)
        outcome = project(state, p)
        state = outcome.state
        events.append(ZenoEvent(float(t), outcome, observe(state)))
        t_prev = t
    return events
