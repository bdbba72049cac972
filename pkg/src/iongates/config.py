"""Run configuration: nested dataclasses loaded from JSON with strict key checking."""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .constraints import ROBUST_FAMILIES
from .errors import ConfigError
from .solver import SolverOptions
from .targets import TARGET_KINDS
from .trap_modes import AMU, SR88_MASS_AMU, SR88_WAVELENGTH, TrapModel


@dataclass
class TrapSection:
    kind: str = "harmonic"
    nu1_hz: float = 400e3
    mass_amu: float = SR88_MASS_AMU
    wavelength_nm: Optional[float] = SR88_WAVELENGTH * 1e9
    wave_number: Optional[float] = None
    spacing: float = 1.0
    curvature: Optional[object] = None
    positions: Optional[list] = None
    mode_nu: Optional[list] = None
    mode_matrix: Optional[list] = None

    def validate(self):
        for name in ("nu1_hz", "mass_amu", "spacing"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"trap.{name} must be positive")
        if self.wave_number is None and not (self.wavelength_nm and self.wavelength_nm > 0):
            raise ConfigError("trap needs a positive wavelength_nm or wave_number")
        if self.wave_number is not None and not self.wave_number > 0:
            raise ConfigError("trap.wave_number must be positive")

    def model(self):
        k = self.wave_number if self.wave_number is not None else 2 * np.pi / (self.wavelength_nm * 1e-9)
        curv = self.curvature
        if isinstance(curv, list):
            curv = tuple(curv)
        return TrapModel(
            kind=self.kind,
            nu1=2 * np.pi * self.nu1_hz,
            ion_mass=self.mass_amu * AMU,
            wave_number=k,
            spacing=self.spacing,
            curvature=curv,
            positions=None if self.positions is None else tuple(self.positions),
            mode_nu=None if self.mode_nu is None else tuple(self.mode_nu),
            mode_matrix=None if self.mode_matrix is None else tuple(map(tuple, self.mode_matrix)),
        )


@dataclass
class TargetSection:
    kind: str = "all_to_all"
    params: dict = field(default_factory=dict)

    def validate(self):
        if self.kind not in TARGET_KINDS:
            raise ConfigError(f"unknown target kind {self.kind!r}")


@dataclass
class GateSection:
    T_in_com_periods: float = 10.0
    target: TargetSection = field(default_factory=TargetSection)
    robust: list = field(default_factory=list)
    timing_order: int = 1
    margin: float = 0.35
    carrier: bool = True
    auto_widen: bool = True
    T_list: list = field(default_factory=list)

    def validate(self):
        if not self.T_in_com_periods > 0:
            raise ConfigError("gate.T_in_com_periods must be positive")
        if not self.margin > 0:
            raise ConfigError("gate.margin must be positive")
        if self.timing_order < 1:
            raise ConfigError("gate.timing_order must be >= 1")
        for fam in self.robust:
            if fam not in ROBUST_FAMILIES:
                raise ConfigError(f"unknown robustness family {fam!r}")
        if any(not t > 0 for t in self.T_list):
            raise ConfigError("gate.T_list entries must be positive")
        self.target.validate()


@dataclass
class SolverSection:
    seed: int = 0
    restarts: int = 32
    tol_quad: float = 1e-6
    tol_cc: float = 4e-5
    max_iterations: int = 200
    global_stage: bool = False

    def validate(self):
        if self.restarts < 1 or self.max_iterations < 1:
            raise ConfigError("solver.restarts and solver.max_iterations must be >= 1")
        if not (self.tol_quad > 0 and self.tol_cc > 0):
            raise ConfigError("solver tolerances must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("solver.seed must be an unsigned 64-bit integer")

    def options(self):
        return SolverOptions(restarts=self.restarts, seed=self.seed, tol_quad=self.tol_quad,
                             tol_cc=self.tol_cc, max_iterations=self.max_iterations,
                             global_stage=self.global_stage)


@dataclass
class VerifySection:
    fidelity_mode: str = "exact"
    nbar: float = 0.0
    oracle: bool = False
    n_max: int = 25
    max_infidelity: float = 1e-4

    def validate(self):
        if self.fidelity_mode not in ("exact", "approx"):
            raise ConfigError("verify.fidelity_mode must be exact or approx")
        if self.nbar < 0:
            raise ConfigError("verify.nbar must be non-negative")
        if self.n_max < 2:
            raise ConfigError("verify.n_max must be >= 2")


@dataclass
class RunConfig:
    n_ions: int = 2
    trap: TrapSection = field(default_factory=TrapSection)
    gate: GateSection = field(default_factory=GateSection)
    solver: SolverSection = field(default_factory=SolverSection)
    verify: VerifySection = field(default_factory=VerifySection)

    def validate(self):
        if not isinstance(self.n_ions, int) or self.n_ions < 1:
            raise ConfigError("n_ions must be a positive integer")
        for sec in (self.trap, self.gate, self.solver, self.verify):
            sec.validate()
        return self

    def to_dict(self):
        return asdict(self)

    def digest(self):
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


_NESTED = {
    RunConfig: {"trap": TrapSection, "gate": GateSection, "solver": SolverSection, "verify": VerifySection},
    GateSection: {"target": TargetSection},
}


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'} must be an object")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in {path or 'config'}: {', '.join(unknown)}")
    kw = {}
    for k, v in data.items():
        sub = _NESTED.get(cls, {}).get(k)
        kw[k] = _build(sub, v, f"{path}.{k}" if path else k) if sub else v
    try:
        return cls(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def config_from_dict(data):
    cfg = _build(RunConfig, data, "")
    try:
        return cfg.validate()
    except TypeError as exc:
        raise ConfigError(f"wrong value type in config: {exc}") from exc


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(data)
