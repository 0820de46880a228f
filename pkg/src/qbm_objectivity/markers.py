"""Closed-form objectivity markers of the recoilless QBM model.

Everything here is vectorised over the time argument: pass a scalar for a
single point or a numpy array for a grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .model import CentralOscillator, Ensemble, EnvOscillator

# |omega/Omega - 1| below which eta switches to the cancellation-free form
RESONANCE_WINDOW = 1e-4


@dataclass(frozen=True)
class EtaValue:
    value: complex
    q_factor: float
    eta_bar: complex


@dataclass(frozen=True)
class BeatingEnvelope:
    delta_omega: float
    amplitude_D: float
    phase_xi: float
    constant_offset: float
    degenerate: bool = False

    @property
    def period(self) -> float:
        return math.inf if self.degenerate else 2 * math.pi / self.delta_omega

    def __call__(self, t):
        """Slowly varying part D cos(dw t - xi) + 1 + Omega^2/omega^2."""
        return self.amplitude_D * np.cos(self.delta_omega * np.asarray(t) - self.phase_xi) \
            + self.constant_offset


@dataclass(frozen=True)
class MarkerPoint:
    t: float
    gamma_sq_per_osc: Optional[list]
    overlap_per_osc: Optional[list]
    gamma_sq_total: Optional[float]
    overlap_total: Optional[float]


@dataclass(frozen=True)
class PhaseExtremes:
    phi_at_max: Optional[float]
    phi_at_min: Optional[float]
    v0_mag_sq: Callable


def resonance_factor(osc: EnvOscillator, central: CentralOscillator) -> float:
    """R_k = 1 / (m_k (omega_k^2 - Omega^2)); infinite on resonance."""
    d = osc.omega ** 2 - central.omega_big ** 2
    return math.inf if d == 0 else 1.0 / (osc.mass_m * d)


def q_factor(osc: EnvOscillator, central: CentralOscillator) -> float:
    """Signed resonant factor R_k sqrt(m_k omega_k / 2).

    Its modulus is sqrt(omega / (2 m (omega^2 - Omega^2)^2)). Keeping the sign
    of omega - Omega makes eta continuous through resonance.
    """
    d = osc.omega ** 2 - central.omega_big ** 2
    if d == 0:
        return math.inf
    return math.sqrt(osc.mass_m * osc.omega / 2) / (osc.mass_m * d)


def drive_amplitude(osc: EnvOscillator, central: CentralOscillator, phi: float, t):
    """alpha_k(t) = R_k sqrt(m_k omega_k / 2) (c + i Omega/omega s)."""
    W = central.omega_big
    th = W * np.asarray(t, dtype=float) + phi
    return q_factor(osc, central) * (np.cos(th) + 1j * (W / osc.omega) * np.sin(th))


def eta_bar(omega: float, omega_big: float, phi: float, t):
    """eta / (g Q) = -exp(-i omega t) v(t) + v(0)."""
    t = np.asarray(t, dtype=float)
    r = omega_big / omega
    th = omega_big * t + phi
    v = np.cos(th) + 1j * r * np.sin(th)
    v0 = math.cos(phi) + 1j * r * math.sin(phi)
    return -np.exp(-1j * omega * t) * v + v0


def _eta_stable(g, m, omega, omega_big, phi, t):
    # eta_bar = e^{i phi}(1 - e^{i d t}) + i (r - 1)(sin phi - e^{-i omega t} sin th),
    # d = Omega - omega; the common factor d cancels against Q analytically.
    d = omega_big - omega
    th = omega_big * t + phi
    beat = 1j * t * np.exp(1j * (phi + d * t / 2)) * np.sinc(d * t / (2 * np.pi))
    micro = (1j / omega) * (math.sin(phi) - np.exp(-1j * omega * t) * np.sin(th))
    return g * math.sqrt(omega / (2 * m)) / (omega + omega_big) * (beat - micro)


def _near_resonance(omega: float, omega_big: float) -> bool:
    return abs(omega / omega_big - 1.0) < RESONANCE_WINDOW


def eta_array(osc: EnvOscillator, central: CentralOscillator, phi: float, t):
    """Complex eta_k on a time grid (no EtaValue bookkeeping)."""
    t = np.asarray(t, dtype=float)
    if _near_resonance(osc.omega, central.omega_big):
        return _eta_stable(osc.coupling_g, osc.mass_m, osc.omega,
                           central.omega_big, phi, t)
    return osc.coupling_g * q_factor(osc, central) * eta_bar(
        osc.omega, central.omega_big, phi, t)


def eta(osc: EnvOscillator, central: CentralOscillator, phi: float, t: float) -> EtaValue:
    """eta_k at a single time.

    Away from resonance ``value == coupling_g * q_factor * eta_bar``. Inside
    the resonance window the value comes from a factorised expression with no
    cancellation; ``q_factor`` may then be huge (or inf at exact resonance).
    """
    val = complex(eta_array(osc, central, phi, t))
    return EtaValue(
        value=val,
        q_factor=q_factor(osc, central),
        eta_bar=complex(eta_bar(osc.omega, central.omega_big, phi, t)),
    )


def eta_resonance_limit(g: float, m: float, omega_big: float, phi: float, t):
    """Limit of eta as omega -> Omega.

    i g sqrt(1/(8 m Omega^3)) [e^{-i Omega t} sin(Omega t + phi) - sin(phi) + Omega t e^{i phi}]
    """
    t = np.asarray(t, dtype=float)
    W = omega_big
    bracket = (np.exp(-1j * W * t) * np.sin(W * t + phi) - math.sin(phi)
               + W * t * np.exp(1j * phi))
    return 1j * g * math.sqrt(1.0 / (8 * m * W ** 3)) * bracket


def eta_first_order(g: float, m: float, omega: float, omega_big: float, phi: float, t):
    """eta expanded to first order in (omega - Omega) about resonance."""
    t = np.asarray(t, dtype=float)
    W = omega_big
    s = np.sin(W * t + phi)
    s0 = math.sin(phi)
    e = np.exp(-1j * W * t)
    d1 = 1j * t * np.exp(1j * phi) + (1j / W) * (s * e - s0)
    d2 = (t ** 2 * np.exp(1j * phi) + (2 * t / W) * s * e
          - (2j / W ** 2) * (s * e - s0))
    pref = g * math.sqrt(omega / (2 * m)) / (omega + W)
    return pref * (d1 + 0.5 * d2 * (omega - W))


def eta_bar_abs2_expansion(omega: float, omega_big: float, phi: float, t):
    """|eta_bar|^2 as the constant plus five-cosine combination."""
    t = np.asarray(t, dtype=float)
    r = omega_big / omega
    k = 1 - r ** 2
    dn, up = omega_big - omega, omega_big + omega
    return (-0.5 * (1 + r) ** 2 * np.cos(dn * t)
            - 0.5 * k * np.cos(dn * t + 2 * phi)
            - 0.5 * (1 - r) ** 2 * np.cos(up * t)
            - 0.5 * k * np.cos(up * t + 2 * phi)
            + 1 + r ** 2
            + 0.5 * k * (np.cos(2 * (omega_big * t + phi)) + math.cos(2 * phi)))


def beating_envelope(omega: float, omega_big: float, phi: float) -> BeatingEnvelope:
    r = omega_big / omega
    k = 1 - r ** 2
    p = (1 + r) ** 2
    D = 0.5 * math.sqrt(max(2 * p * k * math.cos(2 * phi) + p ** 2 + k ** 2, 0.0))
    dw = abs(omega_big - omega)
    # with dw = |Omega - omega| the sine component flips sign when Omega < omega
    sgn = 1.0 if omega_big >= omega else -1.0
    sin_part = sgn * 0.5 * k * math.sin(2 * phi)
    cos_part = -0.5 * (p + k * math.cos(2 * phi))
    xi = math.atan2(sin_part, cos_part)
    if xi == -math.pi:
        xi = math.pi
    return BeatingEnvelope(dw, D, xi, 1 + r ** 2, degenerate=(dw == 0))


# --- markers -----------------------------------------------------------------

def _coth(x):
    return 1.0 / np.tanh(x)


def marker_exponents(ens: Ensemble, t):
    """Per-oscillator exponents of the decoherence factor and overlap.

    Returns ``(gamma_exp, overlap_exp)`` with shape ``(K,) + shape(t)``;
    the markers are ``exp(-gamma_exp)`` and ``exp(-overlap_exp)``.
    """
    t = np.asarray(t, dtype=float)
    dy2 = ens.trajectory.delta_y ** 2
    phi = ens.trajectory.phi
    gam, ovl = [], []
    for osc in ens.oscillators:
        e2 = np.abs(eta_array(osc, ens.central, phi, t)) ** 2
        half = ens.bath.beta * osc.omega / 2
        base = dy2 * e2
        gam.append(_coth(half) * base)
        ovl.append(np.tanh(half) * base)
    return np.array(gam), np.array(ovl)


def _point(t, exps):
    per = np.exp(-exps)
    # totals from the summed exponent: avoids underflow of long products
    return [float(x) for x in per], float(np.exp(-exps.sum()))


def decoherence_factor(ens: Ensemble, t: float) -> MarkerPoint:
    g, _ = marker_exponents(ens, t)
    per, tot = _point(t, g)
    return MarkerPoint(float(t), per, None, tot, None)


def generalized_overlap(ens: Ensemble, t: float) -> MarkerPoint:
    _, o = marker_exponents(ens, t)
    per, tot = _point(t, o)
    return MarkerPoint(float(t), None, per, None, tot)


def marker_point(ens: Ensemble, t: float) -> MarkerPoint:
    g, o = marker_exponents(ens, t)
    gp, gt = _point(t, g)
    op, ot = _point(t, o)
    return MarkerPoint(float(t), gp, op, gt, ot)


def phase_extremes(omega: float, omega_big: float) -> PhaseExtremes:
    """Which trajectory phase in [0, pi/2] maximises |v(0)|^2."""
    coeff = omega_big ** 2 / omega ** 2 - 1

    def v0_mag_sq(phi):
        return coeff * np.sin(phi) ** 2 + 1

    if omega_big > omega:
        return PhaseExtremes(math.pi / 2, 0.0, v0_mag_sq)
    if omega_big < omega:
        return PhaseExtremes(0.0, math.pi / 2, v0_mag_sq)
    return PhaseExtremes(None, None, v0_mag_sq)
