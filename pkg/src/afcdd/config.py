"""Run configuration: YAML text with unit-suffixed keys.

Frequencies are given in Hz and durations in ms on the user side; the
``*_s`` / ``to_*`` helpers convert to SI seconds once, here. Unknown keys and
missing mandatory values raise :class:`ConfigError`.

Example::

    scenario: sweep-fixed-n
    physics:
      ou: {sigma_hz: 15.1, tau_c_ms: 9.5}
      epsilon_rad: 0.0
    sequence: {kind: XX, n: 4, tau_grid_ms: [1, 2, 4, 8]}
    ensemble: {n_traj: 20000, seed: 7}
    io: {out_dir: out}
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields

import yaml

from .afc import CombSpec, FieldConfig, OperatingEnvelope
from .ou import OuParams
from .sequences import SequenceKind
from .spinsim import EnsembleConfig

__all__ = ["ConfigError", "RunConfig", "SCENARIOS", "REPRODUCIBLE", "load_config",
           "parse_config"]

SCENARIOS = ("simulate", "sweep-fixed-n", "sweep-fixed-tau", "fit", "check-config", "reproduce")
REPRODUCIBLE = ("fig4", "fig5", "fig6a", "fig6b", "appendixA3")
FIT_MODELS = ("EXP", "GAUSS", "STRETCHED", "STRETCHED_OFFSET", "POWER_LAW", "OU_GLOBAL")
# pulse-area error used by the reproduce scenarios unless configured
REPRODUCE_EPSILON = 0.154
_SIMULATING = ("simulate", "sweep-fixed-n", "sweep-fixed-tau", "reproduce")


class ConfigError(ValueError):
    """Schema violation in a run configuration."""

    category = "schema"


def _section(cls, data, where):
    """Build a section dataclass from a mapping, rejecting unknown keys."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a mapping")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    kw = {}
    for k, v in data.items():
        kw[k] = tuple(v) if isinstance(v, list) else v
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _number(value, where, *, positive=False, nonnegative=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number")
    if positive and not value > 0:
        raise ConfigError(f"{where} must be positive")
    if nonnegative and not value >= 0:
        raise ConfigError(f"{where} must be non-negative")
    return value


def _grid(values, where, *, integer=False, nonnegative=False):
    if values is None:
        return None
    if not isinstance(values, tuple) or not values:
        raise ConfigError(f"{where} must be a non-empty list")
    for v in values:
        if integer and (isinstance(v, bool) or not isinstance(v, int)):
            raise ConfigError(f"{where} entries must be integers")
        _number(v, where, positive=not nonnegative, nonnegative=nonnegative)
    return values


@dataclass(frozen=True)
class FieldSection:
    magnitude_t: float = 15e-3
    angle_deg: float = 65.0
    ground_gradient_hz_per_t: float = 14e6
    excited_gradient_hz_per_t: float = 20e6
    s1_gradient_hz_per_t: float = 17e6

    def to_field(self) -> FieldConfig:
        return FieldConfig(self.magnitude_t, self.angle_deg, self.ground_gradient_hz_per_t,
                           self.excited_gradient_hz_per_t, self.s1_gradient_hz_per_t)


@dataclass(frozen=True)
class EnvelopeSection:
    gamma_inh_hz: float = 30e3
    rabi_hz: float = 23e3
    gamma_afc_hz: float = 160e3

    def to_envelope(self) -> OperatingEnvelope:
        return OperatingEnvelope(self.gamma_inh_hz, self.rabi_hz, self.gamma_afc_hz)


@dataclass(frozen=True)
class OuSection:
    sigma_hz: float = 15.1
    tau_c_ms: float = 9.5

    def to_params(self) -> OuParams:
        return OuParams.from_hz(self.sigma_hz, self.tau_c_ms * 1e-3)


@dataclass(frozen=True)
class CombSection:
    period_us: float = 17.0
    bandwidth_hz: float = 160e3
    tooth_width_hz: float | None = None

    def to_comb(self) -> CombSpec:
        period = 1.0 / (self.period_us * 1e-6)
        width = period / 3 if self.tooth_width_hz is None else self.tooth_width_hz
        return CombSpec.from_bandwidth(period, self.bandwidth_hz, width)


@dataclass(frozen=True)
class PhysicsSection:
    field: FieldSection = dataclasses.field(default_factory=FieldSection)
    envelope: EnvelopeSection = dataclasses.field(default_factory=EnvelopeSection)
    ou: OuSection = dataclasses.field(default_factory=OuSection)
    comb: CombSection = dataclasses.field(default_factory=CombSection)
    # None: 0.154 rad for reproduce scenarios, ideal pulses otherwise
    epsilon_rad: float | None = None
    eta_afc: float = 0.102
    eta_ctrl: float = 0.61


@dataclass(frozen=True)
class SequenceSection:
    kind: str = "XX"
    n_s: int | None = None
    tau_ms: float | None = None
    n: int | None = None
    tau_grid_ms: tuple | None = None
    n_grid: tuple | None = None


@dataclass(frozen=True)
class EnsembleSection:
    n_traj: int = 20_000
    seed: int | None = None
    batch_size: int | None = None


@dataclass(frozen=True)
class FitSection:
    model: str = "STRETCHED"
    inputs: tuple | None = None


@dataclass(frozen=True)
class ReproduceSection:
    name: str | None = None


@dataclass(frozen=True)
class IoSection:
    out_dir: str = "out"


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    physics: PhysicsSection = dataclasses.field(default_factory=PhysicsSection)
    sequence: SequenceSection = dataclasses.field(default_factory=SequenceSection)
    ensemble: EnsembleSection = dataclasses.field(default_factory=EnsembleSection)
    fit: FitSection = dataclasses.field(default_factory=FitSection)
    reproduce: ReproduceSection = dataclasses.field(default_factory=ReproduceSection)
    io: IoSection = dataclasses.field(default_factory=IoSection)

    # --- conversions at the boundary
    @property
    def ou(self) -> OuParams:
        return self.physics.ou.to_params()

    @property
    def epsilon(self) -> float:
        if self.physics.epsilon_rad is not None:
            return float(self.physics.epsilon_rad)
        return REPRODUCE_EPSILON if self.scenario == "reproduce" else 0.0

    @property
    def kind(self) -> SequenceKind:
        return SequenceKind.parse(self.sequence.kind)

    @property
    def tau_s(self) -> float:
        return self.sequence.tau_ms * 1e-3

    @property
    def tau_grid_s(self):
        return [v * 1e-3 for v in self.sequence.tau_grid_ms]

    def ensemble_config(self) -> EnsembleConfig:
        e = self.ensemble
        return EnsembleConfig(e.n_traj, self.physics.envelope.gamma_inh_hz, e.seed, e.batch_size)

    def to_dict(self) -> dict:
        def plain(obj):
            if dataclasses.is_dataclass(obj):
                return {f.name: plain(getattr(obj, f.name)) for f in fields(obj)}
            if isinstance(obj, tuple):
                return [plain(v) for v in obj]
            return obj

        return plain(self)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def with_overrides(self, *, seed=None, n_traj=None, out_dir=None) -> "RunConfig":
        ens = self.ensemble
        if seed is not None:
            ens = dataclasses.replace(ens, seed=seed)
        if n_traj is not None:
            ens = dataclasses.replace(ens, n_traj=n_traj)
        io = self.io if out_dir is None else dataclasses.replace(self.io, out_dir=str(out_dir))
        cfg = dataclasses.replace(self, ensemble=ens, io=io)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {', '.join(SCENARIOS)}")
        ph = self.physics
        for name in ("eta_afc", "eta_ctrl"):
            v = _number(getattr(ph, name), f"physics.{name}", nonnegative=True)
            if v > 1:
                raise ConfigError(f"physics.{name} must be <= 1")
        if ph.epsilon_rad is not None:
            _number(ph.epsilon_rad, "physics.epsilon_rad")
        _number(ph.ou.sigma_hz, "physics.ou.sigma_hz", nonnegative=True)
        _number(ph.ou.tau_c_ms, "physics.ou.tau_c_ms", positive=True)
        for section, build in ((ph.field, ph.field.to_field), (ph.envelope, ph.envelope.to_envelope),
                               (ph.comb, ph.comb.to_comb)):
            try:
                build()
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"physics.{type(section).__name__}: {exc}") from None
        try:
            kind = SequenceKind.parse(self.sequence.kind)
        except ValueError as exc:
            raise ConfigError(f"sequence.kind: {exc}") from None
        e = self.ensemble
        if isinstance(e.n_traj, bool) or not isinstance(e.n_traj, int) or e.n_traj < 1:
            raise ConfigError("ensemble.n_traj must be a positive integer")
        if self.scenario in _SIMULATING:
            if e.seed is None:
                raise ConfigError("ensemble.seed is mandatory for simulation scenarios")
            if isinstance(e.seed, bool) or not isinstance(e.seed, int) or not 0 <= e.seed < 2**64:
                raise ConfigError("ensemble.seed must be an unsigned 64-bit integer")
            try:
                self.ensemble_config()
            except ValueError as exc:
                raise ConfigError(f"ensemble: {exc}") from None
        s = self.sequence
        _grid(s.tau_grid_ms, "sequence.tau_grid_ms")
        _grid(s.n_grid, "sequence.n_grid", integer=True, nonnegative=True)
        if self.scenario == "simulate":
            self._require("n_s", "tau_ms")
            if not isinstance(s.n_s, int) or s.n_s < 0:
                raise ConfigError("sequence.n_s must be a non-negative integer")
            _number(s.tau_ms, "sequence.tau_ms", positive=True)
        elif self.scenario == "sweep-fixed-n":
            self._require("n", "tau_grid_ms")
            if not isinstance(s.n, int) or s.n < kind.n_p or s.n % kind.n_p:
                raise ConfigError(f"sequence.n must be a positive multiple of {kind.n_p}")
        elif self.scenario == "sweep-fixed-tau":
            self._require("tau_ms", "n_grid")
            _number(s.tau_ms, "sequence.tau_ms", positive=True)
            if any(v % kind.n_p for v in s.n_grid):
                raise ConfigError(f"sequence.n_grid entries must be multiples of {kind.n_p}")
        elif self.scenario == "fit":
            if self.fit.model.upper() not in FIT_MODELS:
                raise ConfigError(f"fit.model must be one of {', '.join(FIT_MODELS)}")
            if not self.fit.inputs or not all(isinstance(p, str) for p in self.fit.inputs):
                raise ConfigError("fit.inputs must be a non-empty list of CSV paths")
        elif self.scenario == "reproduce":
            if self.reproduce.name not in REPRODUCIBLE:
                raise ConfigError(f"reproduce.name must be one of {', '.join(REPRODUCIBLE)}")

    def _require(self, *names):
        for n in names:
            if getattr(self.sequence, n) is None:
                raise ConfigError(f"sequence.{n} is required for scenario {self.scenario}")


_TOP = {"physics", "sequence", "ensemble", "fit", "reproduce", "io", "scenario"}


def parse_config(data) -> RunConfig:
    """Validate a mapping (e.g. parsed YAML) into a :class:`RunConfig`."""
    if isinstance(data, str):
        try:
            data = yaml.safe_load(data)
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    unknown = sorted(set(data) - _TOP)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    if "scenario" not in data:
        raise ConfigError("scenario is required")
    ph = dict(data.get("physics") or {})
    if not isinstance(data.get("physics", {}) or {}, dict):
        raise ConfigError("physics must be a mapping")
    sub = {"field": FieldSection, "envelope": EnvelopeSection, "ou": OuSection,
           "comb": CombSection}
    for key, cls in sub.items():
        ph[key] = _section(cls, ph.get(key), f"physics.{key}")
    cfg = RunConfig(
        scenario=data["scenario"],
        physics=_section(PhysicsSection, ph, "physics"),
        sequence=_section(SequenceSection, data.get("sequence"), "sequence"),
        ensemble=_section(EnsembleSection, data.get("ensemble"), "ensemble"),
        fit=_section(FitSection, data.get("fit"), "fit"),
        reproduce=_section(ReproduceSection, data.get("reproduce"), "reproduce"),
        io=_section(IoSection, data.get("io"), "io"),
    )
    cfg.validate()
    if cfg.physics.epsilon_rad is None:
        # echo the value actually used
        cfg = dataclasses.replace(
            cfg, physics=dataclasses.replace(cfg.physics, epsilon_rad=cfg.epsilon))
    return cfg


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
