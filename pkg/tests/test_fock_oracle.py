import cmath
import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qbm_objectivity import fock_oracle as fo
from qbm_objectivity.model import CentralOscillator, EnvOscillator

C = CentralOscillator(1.0, 1.2)


def params(omega=0.6, g=1.0, beta=0.6, y=1.0, yp=-1.0, phi=0.3, t=2.0, m=1.0, W=1.2):
    return fo.OracleParams(EnvOscillator(m, omega, g), CentralOscillator(1.0, W),
                           y, yp, phi, t, beta)


# --- operators -----------------------------------------------------------------

def test_ladder_commutator():
    L = fo.build_operators(12, mass=2.0, omega=1.5)
    comm = L.a @ L.a_dag - L.a_dag @ L.a
    # exact identity except in the last (truncated) level
    assert np.allclose(np.diag(comm)[:-1], 1.0)
    xp = L.x @ L.p - L.p @ L.x
    assert np.allclose(np.diag(xp)[:-1], 1j)
    with pytest.raises(fo.DimensionTooSmall):
        fo.build_operators(1)


def test_thermal_state():
    rho = fo.thermal_state(0.7, 30)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-15)
    w = np.diag(rho).real
    assert w[1] / w[0] == pytest.approx(math.exp(-0.7), rel=1e-13)
    assert np.diag(fo.thermal_state(math.inf, 5)).real.tolist() == [1, 0, 0, 0, 0]
    with pytest.raises(ValueError):
        fo.thermal_state(0.0, 5)


@given(st.complex_numbers(max_magnitude=1.5))
def test_displacement_vacuum_element(alpha):
    D = fo.displacement(alpha, 60)
    assert abs(D[0, 0] - math.exp(-abs(alpha) ** 2 / 2)) < 1e-12


@given(st.complex_numbers(max_magnitude=1.0), st.complex_numbers(max_magnitude=1.0))
def test_displacement_composition(a, b):
    dim, k = 100, 20
    lhs = fo.displacement(a, dim) @ fo.displacement(b, dim)
    phase = cmath.exp(1j * (a * b.conjugate()).imag)
    rhs = phase * fo.displacement(a + b, dim)
    assert fo.operator_distance(lhs, rhs, k) < 1e-10


def test_displacement_warns():
    with pytest.warns(fo.TruncationWarning):
        fo.displacement(3.0, 20)


# --- constructions -------------------------------------------------------------

def test_propagate_free_evolution():
    p = params(g=0.0)
    U = fo.propagate(p.osc, p.central, 1.0, 0.0, 1.7, 10)
    expected = np.diag(np.exp(-1j * 0.6 * (np.arange(10) + 0.5) * 1.7))
    assert np.allclose(U, expected, atol=1e-14)
    assert np.array_equal(fo.propagate(p.osc, p.central, 1.0, 0.0, 0.0, 6), np.eye(6))


@pytest.mark.parametrize("omega,W,phi,t", [
    (0.6, 1.2, 0.3, 2.0), (2.5, 1.0, 1.2, 3.0), (1.5, 0.9, 0.0, 0.7),
])
def test_closed_form_matches_propagation(omega, W, phi, t):
    p = params(omega=omega, W=W, phi=phi, t=t, g=0.8)
    dim = 40
    U = fo.propagate(p.osc, p.central, 1.0, phi, t, dim)
    V = fo.closed_form_unitary(p.osc, p.central, 1.0, phi, t, dim)
    assert fo.operator_distance(U, V, dim // 2) < 1e-7
    assert fo.unitarity_defect(U, dim // 2) < 1e-9


def test_closed_form_without_phase_differs_by_phase_only():
    p = params()
    U = fo.closed_form_unitary(p.osc, p.central, 1.0, 0.3, 2.0, 20)
    V = fo.closed_form_unitary(p.osc, p.central, 1.0, 0.3, 2.0, 20, with_phase=False)
    ratio = U[0, 0] / V[0, 0]
    assert abs(abs(ratio) - 1) < 1e-13
    assert np.allclose(U, ratio * V, atol=1e-13)


def test_closed_form_rejects_resonance():
    p = params(omega=1.2)
    with pytest.raises(fo.ResonanceUnsupported):
        fo.closed_form_unitary(p.osc, p.central, 1.0, 0.3, 2.0, 10)


# --- marker definitions ----------------------------------------------------------

def test_fidelity_basics():
    rho = fo.thermal_state(1.0, 10)
    assert fo.fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)
    pure0 = np.zeros((3, 3), complex)
    pure0[0, 0] = 1
    plus = np.full((3, 3), 0.5, complex)
    plus[2, :] = plus[:, 2] = 0
    assert fo.fidelity(pure0, plus) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(fo.DimensionMismatch):
        fo.fidelity(rho, np.eye(3))
    with pytest.raises(fo.NonPositiveDensity):
        fo.fidelity(-rho, rho)


def test_gamma_oracle_identical_unitaries():
    U = fo.displacement(0.3 + 0.1j, 20)
    rho = fo.thermal_state(0.9, 20)
    assert fo.gamma_oracle(U, U, rho) == pytest.approx(1.0, abs=1e-12)
    assert fo.overlap_oracle(U, U, rho) == pytest.approx(1.0, abs=1e-9)


def test_vacuum_gamma_is_coherent_overlap():
    # at zero temperature Tr = <0|D(-a)D(b)|0>, |.|^2 = exp(-|a-b|^2)
    a, b = 0.4 - 0.2j, -0.1 + 0.3j
    rho = fo.thermal_state(math.inf, 40)
    g = fo.gamma_oracle(fo.displacement(a, 40), fo.displacement(b, 40), rho)
    assert abs(g) ** 2 == pytest.approx(math.exp(-abs(a - b) ** 2), rel=1e-12)


# --- convergence and the draw suite ----------------------------------------------

@pytest.mark.parametrize("beta,dim", [(1.0, 40), (0.6, 80), (0.3, 160)])
def test_truncation_convergence_picks_dim(beta, dim):
    assert fo.truncation_convergence(params(beta=beta), 1e-8) == dim


@pytest.mark.parametrize("beta,dim", [(1.0, 40), (0.6, 80)])
def test_hot_draw_passes_at_converged_dim(beta, dim):
    rep = fo.check_draw(params(beta=beta))
    assert rep.dim == dim and rep.passed
    assert rep.gamma_sq_analytic < 0.2  # a non-trivial check, far from 1


def test_not_converged():
    with pytest.raises(fo.NotConvergedAtMaxDim) as exc:
        fo.truncation_convergence(params(beta=0.05), 1e-8, dims=(20, 40))
    assert exc.value.dim == 40 and exc.value.last_change > 1e-8


def test_tiny_dim_fails_with_diagnosis():
    rep = fo.check_draw(params(beta=0.05), dim=8)
    assert not rep.passed
    assert "dim=8" in rep.diagnosis and "occupancy" in rep.diagnosis


def test_zero_coupling_draws_round_off():
    rng = np.random.default_rng(5)
    for _ in range(3):
        p = fo.draw_parameters(rng)
        p0 = fo.OracleParams(EnvOscillator(p.osc.mass_m, p.osc.omega, 0.0), p.central,
                             p.y, p.y_prime, p.phi, p.t, p.beta)
        rep = fo.check_draw(p0)
        assert rep.gamma_diff < 1e-13 and rep.overlap_diff < 1e-9


def test_draws_are_seeded():
    a = fo.draw_parameters(np.random.default_rng(11))
    b = fo.draw_parameters(np.random.default_rng(11))
    assert a == b
    assert 0.3 <= a.osc.omega / a.central.omega_big <= 3


def test_envelope_warning():
    with pytest.warns(fo.OracleEnvelopeWarning):
        fo.envelope_excess(params(), 5.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fo.envelope_excess(params(), 0.5)


def test_reference_construction_case():
    o, c = EnvOscillator(1.0, 2.0, 0.2), CentralOscillator(1.0, 1.0)
    U = fo.propagate(o, c, 1.0, 0.0, 1.0, 60)
    V = fo.closed_form_unitary(o, c, 1.0, 0.0, 1.0, 60)
    assert fo.operator_distance(U, V, 30) < 1e-7


def test_zero_branch_is_free_evolution():
    o, c = EnvOscillator(1.0, 2.0, 0.7), CentralOscillator(1.0, 1.3)
    V = fo.closed_form_unitary(o, c, 0.0, 0.4, 2.2, 12)
    assert np.allclose(V, np.diag(np.exp(-1j * 2.0 * (np.arange(12) + 0.5) * 2.2)), atol=1e-15)
    ff = fo.floquet_factors(o, c, 0.0, 0.4, 2.2)
    assert ff.floquet_phase_shift == 0 and ff.k_y_displacement == 0


def test_gamma_phase_is_reported():
    # complex Gamma carries a branch-dependent phase; only |Gamma|^2 is a marker
    p = params(beta=1.0, yp=0.0)  # the shift goes with Y^2, so Y' = -Y would hide it
    r = fo.oracle_markers(p, 40, "closed_form")
    assert abs(r.gamma.imag) > 1e-6 and r.gamma_sq == pytest.approx(abs(r.gamma) ** 2)
