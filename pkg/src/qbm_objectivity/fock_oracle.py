"""Brute-force check of the markers in a truncated Fock basis.

Two unitaries are built independently for one driven environment oscillator

    H_eff(s) = p^2/2m + m w^2 x^2/2 - Y g x cos(Omega s + phi)

``propagate`` integrates the matrix ODE with fixed-step RK4, and
``closed_form_unitary`` composes displacement operators along the periodic
classical orbit. ``gamma_oracle`` and ``overlap_oracle`` then evaluate the
marker definitions directly (trace and Uhlmann fidelity), sharing no algebra
with ``markers``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

from .model import CentralOscillator, EnvOscillator

DEFAULT_DIMS = (20, 40, 80, 160)
EIG_CLAMP = 1e-10


class TruncationWarning(UserWarning):
    pass


class OracleEnvelopeWarning(UserWarning):
    pass


class DimensionTooSmall(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class NonPositiveDensity(ValueError):
    pass


class ResonanceUnsupported(ValueError):
    pass


class NonConvergedStepSize(RuntimeError):
    pass


class NotConvergedAtMaxDim(RuntimeError):
    def __init__(self, msg, last_change=None, dim=None):
        super().__init__(msg)
        self.last_change = last_change
        self.dim = dim


class Ladder(NamedTuple):
    a: np.ndarray
    a_dag: np.ndarray
    x: np.ndarray
    p: np.ndarray


def build_operators(dim: int, mass: float = 1.0, omega: float = 1.0) -> Ladder:
    if dim < 2:
        raise DimensionTooSmall(f"dim must be >= 2 (got {dim})")
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    ad = a.conj().T
    x = (a + ad) / math.sqrt(2 * mass * omega)
    p = 1j * math.sqrt(mass * omega / 2) * (ad - a)
    return Ladder(a, ad, x, p)


def thermal_state(lam: float, dim: int) -> np.ndarray:
    """Truncated Gibbs state (1 - e^-lam) e^(-lam n), renormalised to trace 1."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    n = np.arange(dim, dtype=float)
    if math.isinf(lam):
        w = (n == 0).astype(float)
    else:
        w = np.exp(-lam * n)
    w /= w.sum()
    return np.diag(w).astype(complex)


def displacement(alpha: complex, dim: int) -> np.ndarray:
    """expm(alpha a^dag - alpha^* a) in the truncated basis."""
    if abs(alpha) ** 2 > dim / 4:
        warnings.warn(f"|alpha|^2 = {abs(alpha) ** 2:.3g} exceeds dim/4 = {dim / 4:g}",
                      TruncationWarning, stacklevel=2)
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)
    gen = alpha * a.T - np.conj(alpha) * a
    return scipy.linalg.expm(gen)


def _free_phases(omega: float, dim: int, t: float) -> np.ndarray:
    return np.exp(-1j * omega * (np.arange(dim) + 0.5) * t)


# --- numerical propagation -----------------------------------------------------

def _rk4_interaction(osc, central, y, phi, t, dim, steps):
    """RK4 for dU_I/ds = -i V_I(s) U_I, V_I = -f(s) x_I(s).

    x_I(s) only couples n <-> n+1, so V_I @ U is applied as a banded product.
    """
    w, m = osc.omega, osc.mass_m
    amp = y * osc.coupling_g / math.sqrt(2 * m * w)
    sq = np.sqrt(np.arange(1, dim, dtype=float))[:, None]

    def rhs(s, U):
        # -i V_I U = i f(s) x_I(s) U
        coef = 1j * amp * math.cos(central.omega_big * s + phi)
        e = np.exp(-1j * w * s)
        out = np.zeros_like(U)
        out[:-1] += e * sq * U[1:]            # a e^{-iws}
        out[1:] += np.conj(e) * sq * U[:-1]   # a^dag e^{iws}
        return coef * out

    U = np.eye(dim, dtype=complex)
    h = t / steps
    s = 0.0
    for _ in range(steps):
        k1 = rhs(s, U)
        k2 = rhs(s + h / 2, U + (h / 2) * k1)
        k3 = rhs(s + h / 2, U + (h / 2) * k2)
        k4 = rhs(s + h, U + h * k3)
        U = U + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        s += h
    return _free_phases(w, dim, t)[:, None] * U


def _default_steps(osc, central, y, t, dim):
    amp = abs(y * osc.coupling_g) * math.sqrt(2 * dim / (2 * osc.mass_m * osc.omega))
    rate = amp + osc.omega + central.omega_big
    return max(16, int(math.ceil(t * rate / 0.05)))


def propagate(osc: EnvOscillator, central: CentralOscillator, y: float, phi: float,
              t: float, dim: int, steps: Optional[int] = None, *,
              step_tol: float = 1e-8, max_steps: int = 2 ** 18) -> np.ndarray:
    """Time-ordered solution of the driven-oscillator Schrodinger equation.

    The free part is removed analytically (interaction picture), the
    remaining matrix ODE is integrated by RK4. ``steps`` is doubled until
    halving the step changes U by less than ``step_tol``.
    """
    if t == 0:
        return np.eye(dim, dtype=complex)
    if steps is None:
        steps = _default_steps(osc, central, y, t, dim)
    U = _rk4_interaction(osc, central, y, phi, t, dim, steps)
    while steps <= max_steps:
        steps *= 2
        U2 = _rk4_interaction(osc, central, y, phi, t, dim, steps)
        if np.linalg.norm(U2 - U, 2) < step_tol:
            return U2
        U = U2
    raise NonConvergedStepSize(f"RK4 not converged at {steps // 2} steps")


# --- closed form -------------------------------------------------------------

@dataclass(frozen=True)
class FloquetFactors:
    k_y_displacement: complex
    heisenberg_displacement: complex
    floquet_phase_shift: float
    periodic_phase: float


def orbit_amplitude(osc: EnvOscillator, central: CentralOscillator, y: float,
                    phi: float, s: float) -> complex:
    """Coherent amplitude sqrt(m w/2)(x_p + i p_p/(m w)) of the periodic orbit.

    x_p(s) = Y g R cos(Omega s + phi) is the particular solution of the
    driven equation of motion.
    """
    W, w, m = central.omega_big, osc.omega, osc.mass_m
    R = 1.0 / (m * (w * w - W * W))
    th = W * s + phi
    return y * osc.coupling_g * R * math.sqrt(m * w / 2) * (
        math.cos(th) - 1j * (W / w) * math.sin(th))


def floquet_factors(osc: EnvOscillator, central: CentralOscillator, y: float,
                    phi: float, t: float) -> FloquetFactors:
    W, w, m = central.omega_big, osc.omega, osc.mass_m
    if abs(w / W - 1) < 1e-4:
        raise ResonanceUnsupported("closed form needs |omega/Omega - 1| >= 1e-4; use propagate")
    R = 1.0 / (m * (w * w - W * W))
    k = (y * osc.coupling_g) ** 2 * R
    return FloquetFactors(
        k_y_displacement=orbit_amplitude(osc, central, y, phi, t),
        heisenberg_displacement=-np.exp(-1j * w * t) * orbit_amplitude(osc, central, y, phi, 0.0),
        # quasi-energy shift of H_F = H_0 + shift
        floquet_phase_shift=-k / 4,
        periodic_phase=k / (8 * W) * (math.sin(2 * (W * t + phi)) - math.sin(2 * phi)),
    )


def closed_form_unitary(osc: EnvOscillator, central: CentralOscillator, y: float,
                        phi: float, t: float, dim: int, *,
                        with_phase: bool = True) -> np.ndarray:
    """D(beta_t) D(-e^{-iwt} beta_0) exp(-i H_F t), times the periodic phase."""
    ff = floquet_factors(osc, central, y, phi, t)
    U = displacement(ff.k_y_displacement, dim) @ displacement(ff.heisenberg_displacement, dim)
    free = _free_phases(osc.omega, dim, t) * np.exp(-1j * ff.floquet_phase_shift * t)
    U = U * free[None, :]
    if with_phase:
        U = U * np.exp(1j * ff.periodic_phase)
    return U


# --- marker definitions --------------------------------------------------------

def _check_dims(*mats):
    shapes = {m.shape for m in mats}
    if len(shapes) != 1 or any(len(s) != 2 or s[0] != s[1] for s in shapes):
        raise DimensionMismatch(f"incompatible shapes {sorted(shapes)}")


def gamma_oracle(u_y: np.ndarray, u_yp: np.ndarray, rho: np.ndarray) -> complex:
    """Tr[U_Y rho U_Y'^dag]."""
    _check_dims(u_y, u_yp, rho)
    return complex(np.einsum("ij,jk,ik->", u_y, rho, u_yp.conj()))


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    h = (mat + mat.conj().T) / 2
    vals, vecs = np.linalg.eigh(h)
    if vals.min() < -EIG_CLAMP:
        raise NonPositiveDensity(f"eigenvalue {vals.min():.3g} below -{EIG_CLAMP}")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity(sigma: np.ndarray, tau: np.ndarray) -> float:
    """[Tr sqrt(sqrt(sigma) tau sqrt(sigma))]^2."""
    _check_dims(sigma, tau)
    rs = _psd_sqrt(sigma)
    inner = rs @ tau @ rs
    inner = (inner + inner.conj().T) / 2
    vals = np.linalg.eigvalsh(inner)
    if vals.min() < -EIG_CLAMP:
        raise NonPositiveDensity(f"eigenvalue {vals.min():.3g} below -{EIG_CLAMP}")
    return float(np.sqrt(np.clip(vals, 0.0, None)).sum() ** 2)


def overlap_oracle(u_y: np.ndarray, u_yp: np.ndarray, rho: np.ndarray) -> float:
    """Uhlmann fidelity of U_Y rho U_Y^dag and U_Y' rho U_Y'^dag."""
    _check_dims(u_y, u_yp, rho)
    tau = u_y @ rho @ u_y.conj().T
    sigma = u_yp @ rho @ u_yp.conj().T
    return fidelity(sigma, tau)


# --- convergence -----------------------------------------------------------------

@dataclass(frozen=True)
class OracleParams:
    osc: EnvOscillator
    central: CentralOscillator
    y: float
    y_prime: float
    phi: float
    t: float
    beta: float


@dataclass(frozen=True)
class OracleResult:
    dim: int
    gamma: complex
    gamma_sq: float
    overlap: float


def oracle_markers(params: OracleParams, dim: int, construction: str = "propagate") -> OracleResult:
    """|Gamma|^2 and B from the chosen unitary construction at a fixed dim."""
    P = params
    if construction == "propagate":
        u_y = propagate(P.osc, P.central, P.y, P.phi, P.t, dim)
        u_yp = propagate(P.osc, P.central, P.y_prime, P.phi, P.t, dim)
    elif construction == "closed_form":
        u_y = closed_form_unitary(P.osc, P.central, P.y, P.phi, P.t, dim)
        u_yp = closed_form_unitary(P.osc, P.central, P.y_prime, P.phi, P.t, dim)
    else:
        raise ValueError(f"unknown construction {construction!r}")
    rho = thermal_state(P.beta * P.osc.omega, dim)
    gam = gamma_oracle(u_y, u_yp, rho)
    return OracleResult(dim, gam, abs(gam) ** 2, overlap_oracle(u_y, u_yp, rho))


def truncation_convergence(params: OracleParams, target_tol: float,
                           dims=DEFAULT_DIMS, construction: str = "closed_form") -> int:
    """Smallest dim in ``dims`` whose markers move by < target_tol when doubled."""
    if not target_tol > 0:
        raise ValueError("target_tol must be positive")
    cache: dict[int, OracleResult] = {}

    def at(d):
        if d not in cache:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TruncationWarning)
                cache[d] = oracle_markers(params, d, construction)
        return cache[d]

    change = None
    for d in dims:
        lo, hi = at(d), at(2 * d)
        change = max(abs(lo.gamma_sq - hi.gamma_sq), abs(lo.overlap - hi.overlap))
        if change < target_tol:
            return d
    raise NotConvergedAtMaxDim(
        f"markers still change by {change:.3g} at dim {dims[-1]}", change, dims[-1])


def truncation_diagnosis(params: OracleParams, dim: int) -> str:
    """Human-readable estimate of why a given dim is too small."""
    lam = params.beta * params.osc.omega
    tail = math.exp(-lam * dim)
    occ = 1.0 / math.expm1(lam)
    shift = max(abs(orbit_amplitude(params.osc, params.central, y, params.phi, s))
                for y in (params.y, params.y_prime) for s in (0.0, params.t))
    return (f"dim={dim}: thermal tail weight e^(-lambda N)={tail:.2e}, "
            f"mean occupancy={occ:.3g}, max |orbit amplitude|^2={shift ** 2:.3g}")


def envelope_excess(params: OracleParams, eta_abs: float) -> None:
    """Warn when |dY eta| leaves the desk-scale oracle envelope."""
    x = abs(params.y - params.y_prime) * eta_abs
    if x > 2:
        warnings.warn(f"|dY eta| = {x:.3g} > 2: oracle needs a large Fock space",
                      OracleEnvelopeWarning, stacklevel=2)


def operator_distance(u1: np.ndarray, u2: np.ndarray, block: Optional[int] = None) -> float:
    """Spectral norm of (u1 - u2) restricted to the first ``block`` input states."""
    _check_dims(u1, u2)
    k = u1.shape[0] if block is None else block
    return float(np.linalg.norm((u1 - u2)[:, :k], 2))


def unitarity_defect(u: np.ndarray, block: Optional[int] = None) -> float:
    k = u.shape[0] if block is None else block
    sub = u[:, :k]
    return float(np.linalg.norm(sub.conj().T @ sub - np.eye(k), 2))


# --- seeded equivalence suite --------------------------------------------------

GAMMA_TOL = 1e-6
OVERLAP_TOL = 1e-5
UNITARY_TOL = 1e-7
CONVERGENCE_TOL = 1e-8


def draw_parameters(rng: np.random.Generator) -> OracleParams:
    """One random point of the desk-scale validation envelope.

    |Y|, |Y'| <= 1, g <= 0.3, beta in [0.5, 5] and omega/Omega in [0.3, 3]
    kept at least 0.2 away from resonance so displacements stay small.
    """
    W = rng.uniform(0.8, 1.5)
    while True:
        ratio = rng.uniform(0.3, 3.0)
        if abs(ratio - 1) >= 0.2:
            break
    osc = EnvOscillator(mass_m=rng.uniform(0.5, 2.0), omega=ratio * W,
                        coupling_g=rng.uniform(0.0, 0.3))
    return OracleParams(
        osc=osc,
        central=CentralOscillator(1.0, W),
        y=rng.uniform(-1, 1),
        y_prime=rng.uniform(-1, 1),
        phi=rng.uniform(0, math.pi / 2),
        t=rng.uniform(0.2, 3.0),
        beta=rng.uniform(0.5, 5.0),
    )


@dataclass
class DrawReport:
    params: OracleParams
    dim: int
    gamma_sq_analytic: float
    gamma_sq_oracle: float
    overlap_analytic: float
    overlap_oracle: float
    unitary_distance: float
    unitarity: float
    diagnosis: str = ""

    @property
    def gamma_diff(self) -> float:
        return abs(self.gamma_sq_analytic - self.gamma_sq_oracle)

    @property
    def overlap_diff(self) -> float:
        return abs(self.overlap_analytic - self.overlap_oracle)

    @property
    def passed(self) -> bool:
        return (self.gamma_diff < GAMMA_TOL and self.overlap_diff < OVERLAP_TOL
                and self.unitary_distance < UNITARY_TOL)


def analytic_markers(params: OracleParams) -> tuple[float, float, complex]:
    # imported lazily: the oracle itself must not depend on the closed form
    from .markers import eta_array
    P = params
    e = complex(eta_array(P.osc, P.central, P.phi, P.t))
    x = (P.y - P.y_prime) ** 2 * abs(e) ** 2
    half = P.beta * P.osc.omega / 2
    return math.exp(-x / math.tanh(half)), math.exp(-x * math.tanh(half)), e


def check_draw(params: OracleParams, *, dim: Optional[int] = None,
               dims=DEFAULT_DIMS, tol: float = CONVERGENCE_TOL) -> DrawReport:
    """Oracle versus analytic markers, plus propagate versus closed form."""
    g_an, b_an, e = analytic_markers(params)
    envelope_excess(params, abs(e))
    if dim is None:
        dim = truncation_convergence(params, tol, dims)
    P = params
    u_y = propagate(P.osc, P.central, P.y, P.phi, P.t, dim)
    u_yp = propagate(P.osc, P.central, P.y_prime, P.phi, P.t, dim)
    rho = thermal_state(P.beta * P.osc.omega, dim)
    gam = gamma_oracle(u_y, u_yp, rho)
    ovl = overlap_oracle(u_y, u_yp, rho)
    block = dim // 2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        c_y = closed_form_unitary(P.osc, P.central, P.y, P.phi, P.t, dim)
    rep = DrawReport(
        params=P, dim=dim,
        gamma_sq_analytic=g_an, gamma_sq_oracle=abs(gam) ** 2,
        overlap_analytic=b_an, overlap_oracle=ovl,
        unitary_distance=operator_distance(u_y, c_y, block),
        unitarity=max(unitarity_defect(u_y), unitarity_defect(u_yp)),
    )
    if not rep.passed:
        rep.diagnosis = truncation_diagnosis(P, dim)
    return rep


def equivalence_suite(seed: int = 0, draws: int = 20, *, dim: Optional[int] = None,
                      max_dim: int = 160) -> list[DrawReport]:
    rng = np.random.default_rng(seed)
    dims = tuple(d for d in DEFAULT_DIMS if d <= max_dim) or (max_dim,)
    return [check_draw(draw_parameters(rng), dim=dim, dims=dims) for _ in range(draws)]
