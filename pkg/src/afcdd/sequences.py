"""Dynamical-decoupling pulse schedules (XX, XY-4, XY-8).

Pulses are instantaneous. Timing follows the CPMG convention: the first
pulse sits at ``tau/2``, pulses are spaced by ``tau`` and readout happens
``tau/2`` after the last pulse, so ``t_spin = n * tau`` and a static
detuning refocuses exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_int, check_scalar

__all__ = ["SequenceKind", "PulseEvent", "DdSequence", "build_sequence", "two_pulse_echo",
           "free_evolution"]

X, Y = 0.0, math.pi / 2


class SequenceKind(str, enum.Enum):
    XX = "XX"
    XY4 = "XY4"
    XY8 = "XY8"

    @property
    def phases(self):
        return _PHASES[self]

    @property
    def n_p(self) -> int:
        return len(_PHASES[self])

    @classmethod
    def parse(cls, kind) -> "SequenceKind":
        if isinstance(kind, cls):
            return kind
        key = str(kind).upper().replace("-", "").replace("_", "")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown sequence kind {kind!r}; expected XX, XY4 or XY8") from None


_PHASES = {
    SequenceKind.XX: (X, X),
    SequenceKind.XY4: (X, Y, X, Y),
    SequenceKind.XY8: (X, Y, X, Y, Y, X, Y, X),
}


@dataclass(frozen=True)
class PulseEvent:
    time: float
    phase: float
    area: float

    def __post_init__(self):
        check_scalar(self.time, "time", min_val=0)
        check_scalar(self.area, "area", min_val=0, include_min=False)


@dataclass(frozen=True)
class DdSequence:
    kind: SequenceKind
    n_s: int
    n_p: int
    tau: float
    pulses: tuple
    t_spin: float

    def __post_init__(self):
        if self.n_p % 2:
            raise ValueError("n_p must be even")
        if len(self.pulses) != self.n_s * self.n_p:
            raise ValueError("pulse count must equal n_s * n_p")
        times = [p.time for p in self.pulses]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("pulse times must be strictly increasing")
        if times and times[-1] > self.t_spin:
            raise ValueError("pulses must precede readout")

    @property
    def n(self) -> int:
        return len(self.pulses)

    @property
    def epsilon(self) -> float:
        return self.pulses[0].area - math.pi if self.pulses else 0.0

    def segment_durations(self):
        """Free-evolution intervals between start, pulses and readout."""
        edges = np.array([0.0] + [p.time for p in self.pulses] + [self.t_spin])
        return np.diff(edges)

    def segment_signs(self):
        """Toggling-frame sign of each free interval for ideal pulses."""
        return np.where(np.arange(self.n + 1) % 2 == 0, 1.0, -1.0)

    def to_dict(self):
        return {"kind": self.kind.value, "n_s": self.n_s, "tau_ms": self.tau * 1e3,
                "epsilon_rad": self.epsilon}


def build_sequence(kind, n_s: int, tau: float, epsilon: float = 0.0) -> DdSequence:
    """Build ``n_s`` repetitions of ``kind`` with pulse area ``pi + epsilon``."""
    kind = SequenceKind.parse(kind)
    n_s = check_int(n_s, "n_s", min_val=1)
    tau = check_scalar(tau, "tau", min_val=0, include_min=False)
    epsilon = check_scalar(epsilon, "epsilon", min_val=-math.pi, include_min=False)
    n_p = kind.n_p
    n = n_s * n_p
    phases = kind.phases * n_s
    pulses = tuple(PulseEvent(time=(k + 0.5) * tau, phase=phases[k], area=math.pi + epsilon)
                   for k in range(n))
    return DdSequence(kind=kind, n_s=n_s, n_p=n_p, tau=tau, pulses=pulses, t_spin=n * tau)


def two_pulse_echo(tau: float, epsilon: float = 0.0) -> DdSequence:
    return build_sequence(SequenceKind.XX, 1, tau, epsilon)


def free_evolution(t_spin: float, kind=SequenceKind.XX, tau: float = 0.0) -> DdSequence:
    """A pulse-free schedule of length ``t_spin`` (the ``n = 0`` point)."""
    t_spin = check_scalar(t_spin, "t_spin", min_val=0)
    kind = SequenceKind.parse(kind)
    return DdSequence(kind=kind, n_s=0, n_p=kind.n_p, tau=tau, pulses=(), t_spin=t_spin)
