"""Domain types for the recoilless quantum Brownian motion model.

Natural units throughout: hbar = k_B = 1, so lambda_k = beta * omega_k is
dimensionless.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    """Base class for invalid model parameters or configuration documents."""


class NonPositiveParameter(ConfigError):
    def __init__(self, name: str, value: Any = None):
        self.field = name
        super().__init__(f"{name} must be positive (got {value!r})")


class EmptyEnvironment(ConfigError):
    def __init__(self):
        super().__init__("ensemble needs at least one environment oscillator")


class PhiOutOfRange(ConfigError):
    def __init__(self, phi: float):
        self.phi = phi
        super().__init__(f"phi must lie in [0, pi/2] (got {phi!r})")


@dataclass(frozen=True)
class CentralOscillator:
    mass_M: float = 1.0
    omega_big: float = 1.0


@dataclass(frozen=True)
class EnvOscillator:
    mass_m: float = 1.0
    omega: float = 1.0
    coupling_g: float = 1.0


@dataclass(frozen=True)
class TrajectoryPair:
    y: float = 1.0
    y_prime: float = 0.0
    phi: float = 0.0

    @property
    def delta_y(self) -> float:
        return self.y - self.y_prime


@dataclass(frozen=True)
class ThermalBath:
    beta: float = 1.0

    def lambda_k(self, omega: float) -> float:
        return self.beta * omega


@dataclass(frozen=True)
class Ensemble:
    central: CentralOscillator
    oscillators: tuple[EnvOscillator, ...]
    bath: ThermalBath = field(default_factory=ThermalBath)
    trajectory: TrajectoryPair = field(default_factory=TrajectoryPair)

    def __post_init__(self):
        # lists are accepted for convenience but stored as a tuple
        object.__setattr__(self, "oscillators", tuple(self.oscillators))

    @property
    def omegas(self) -> tuple[float, ...]:
        return tuple(o.omega for o in self.oscillators)

    def with_trajectory(self, **changes) -> "Ensemble":
        traj = TrajectoryPair(**{**self.trajectory.__dict__, **changes})
        return validate(Ensemble(self.central, self.oscillators, self.bath, traj))


def _positive(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise NonPositiveParameter(name, value)


def validate(ensemble: Ensemble) -> Ensemble:
    """Check every type invariant and return the ensemble unchanged."""
    _positive("mass_M", ensemble.central.mass_M)
    _positive("omega_big", ensemble.central.omega_big)
    if not ensemble.oscillators:
        raise EmptyEnvironment()
    for osc in ensemble.oscillators:
        _positive("mass_m", osc.mass_m)
        _positive("omega", osc.omega)
        if not math.isfinite(osc.coupling_g):
            raise ConfigError(f"coupling_g must be finite (got {osc.coupling_g!r})")
    _positive("beta", ensemble.bath.beta)
    traj = ensemble.trajectory
    for name in ("y", "y_prime"):
        if not math.isfinite(getattr(traj, name)):
            raise ConfigError(f"{name} must be finite")
    if not (0.0 <= traj.phi <= math.pi / 2):
        raise PhiOutOfRange(traj.phi)
    return ensemble


# --- configuration documents -------------------------------------------------

def parse_real(value: Any, name: str = "value") -> float:
    """Accept a plain number or ``{"sqrt": x}``."""
    if isinstance(value, bool):
        raise ConfigError(f"{name}: booleans are not numbers")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, dict) and set(value) == {"sqrt"}:
        x = parse_real(value["sqrt"], name)
        if x < 0:
            raise ConfigError(f"{name}: sqrt of a negative number")
        return math.sqrt(x)
    raise ConfigError(f"{name}: expected a number or {{'sqrt': x}}, got {value!r}")


def _section(doc: dict, key: str) -> dict:
    sec = doc.get(key, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"'{key}' must be an object")
    return sec


def ensemble_from_dict(doc: dict) -> Ensemble:
    """Build and validate an Ensemble from a parsed JSON document.

    Top-level keys are ``central``, ``oscillators``, ``bath`` and
    ``trajectory``; field names mirror the dataclass fields. An oscillator
    frequency may also be given as ``{"fraction": [m, n]}``, meaning
    omega = (m / n) * omega_big exactly.
    """
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    c = _section(doc, "central")
    central = CentralOscillator(
        mass_M=parse_real(c.get("mass_M", 1.0), "mass_M"),
        omega_big=parse_real(c.get("omega_big", 1.0), "omega_big"),
    )
    raw_oscs = doc.get("oscillators", [])
    if not isinstance(raw_oscs, list):
        raise ConfigError("'oscillators' must be an array")
    oscs = []
    for i, o in enumerate(raw_oscs):
        if not isinstance(o, dict):
            raise ConfigError(f"oscillators[{i}] must be an object")
        omega = o.get("omega", 1.0)
        if isinstance(omega, dict) and "fraction" in omega:
            num, den = parse_fraction_pair(omega["fraction"], f"oscillators[{i}].omega")
            omega_val = num / den * central.omega_big
        else:
            omega_val = parse_real(omega, f"oscillators[{i}].omega")
        oscs.append(EnvOscillator(
            mass_m=parse_real(o.get("mass_m", 1.0), "mass_m"),
            omega=omega_val,
            coupling_g=parse_real(o.get("coupling_g", 1.0), "coupling_g"),
        ))
    b = _section(doc, "bath")
    t = _section(doc, "trajectory")
    ens = Ensemble(
        central=central,
        oscillators=tuple(oscs),
        bath=ThermalBath(beta=parse_real(b.get("beta", 1.0), "beta")),
        trajectory=TrajectoryPair(
            y=parse_real(t.get("y", 1.0), "y"),
            y_prime=parse_real(t.get("y_prime", 0.0), "y_prime"),
            phi=parse_real(t.get("phi", 0.0), "phi"),
        ),
    )
    return validate(ens)


def parse_fraction_pair(value: Any, name: str) -> tuple[int, int]:
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)):
        raise ConfigError(f"{name}: fraction must be a pair of integers, got {value!r}")
    num, den = value
    if num <= 0 or den <= 0:
        raise ConfigError(f"{name}: fraction entries must be positive, got {value!r}")
    return num, den


def load_config(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc


def ensemble_to_dict(ens: Ensemble) -> dict:
    return {
        "central": {"mass_M": ens.central.mass_M, "omega_big": ens.central.omega_big},
        "oscillators": [
            {"mass_m": o.mass_m, "omega": o.omega, "coupling_g": o.coupling_g}
            for o in ens.oscillators
        ],
        "bath": {"beta": ens.bath.beta},
        "trajectory": {
            "y": ens.trajectory.y,
            "y_prime": ens.trajectory.y_prime,
            "phi": ens.trajectory.phi,
        },
    }


def make_ensemble(omega_big: float, omegas, *, g: float = 1.0, m: float = 1.0,
                  beta: float = 1.0, y: float = 1.0, y_prime: float = 0.0,
                  phi: float = 0.0, mass_M: float = 1.0) -> Ensemble:
    """Shorthand for an ensemble of identical-mass, identical-coupling oscillators."""
    oscs = tuple(EnvOscillator(mass_m=m, omega=float(w), coupling_g=g) for w in omegas)
    return validate(Ensemble(
        CentralOscillator(mass_M=mass_M, omega_big=omega_big),
        oscs,
        ThermalBath(beta),
        TrajectoryPair(y, y_prime, phi),
    ))
