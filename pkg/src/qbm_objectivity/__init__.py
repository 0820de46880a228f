"""Objectivity markers for a central oscillator coupled to a thermal bath of
oscillators through position (recoilless quantum Brownian motion)."""
from .fraction import (FrequencyRelation, ParityClass, ReducedFraction, common_recurrence,
                       frequency_family, rationalize, reduce_ratio, t_min)
from .markers import (beating_envelope, decoherence_factor, eta, generalized_overlap,
                      marker_point, phase_extremes)
from .model import (CentralOscillator, ConfigError, Ensemble, EnvOscillator, ThermalBath,
                    TrajectoryPair, ensemble_from_dict, load_config, make_ensemble)

__version__ = "0.1.0"

__all__ = [
    "CentralOscillator", "ConfigError", "Ensemble", "EnvOscillator", "FrequencyRelation",
    "ParityClass", "ReducedFraction", "ThermalBath", "TrajectoryPair", "beating_envelope",
    "common_recurrence", "decoherence_factor", "ensemble_from_dict", "eta",
    "frequency_family", "generalized_overlap", "load_config", "make_ensemble",
    "marker_point", "phase_extremes", "rationalize", "reduce_ratio", "t_min",
]
