import math

import numpy as np
import pytest

from jccorr.exceptions import NormalizationUndefined
from jccorr.hilbert import build_operators, quadrature_operator
from jccorr.liouville import (LiouvillePropagator, build_liouvillian,
                              correlation_g2, correlation_h, expect,
                              partial_trace_atom, steady_state, unvectorize,
                              vectorize)
from jccorr.params import SystemParams
from jccorr.series import symmetric_tau_grid


@pytest.fixture(scope="module")
def prop(small_params):
    return LiouvillePropagator(small_params)


@pytest.fixture(scope="module")
def rho_ss(prop):
    return prop.steady_state()


def test_vectorize_roundtrip(rho_ss):
    assert np.allclose(unvectorize(vectorize(rho_ss)), rho_ss)


def test_liouvillian_preserves_trace(small_params):
    """tr(L rho) = 0 for arbitrary matrices: the trace functional is a left
    null vector of L."""
    lv = build_liouvillian(small_params)
    d = small_params.dim
    tr = vectorize(np.eye(d, dtype=complex))
    assert np.max(np.abs(tr @ lv)) < 1e-10


def test_steady_state_properties(prop, rho_ss):
    assert np.allclose(rho_ss, rho_ss.conj().T)
    assert np.trace(rho_ss).real == pytest.approx(1.0, abs=1e-12)
    evals = np.linalg.eigvalsh(rho_ss)
    assert evals.min() > -1e-12          # positivity floor
    residual = np.max(np.abs(prop.lv @ vectorize(rho_ss)))
    assert residual < 1e-10


def test_steady_state_unique(prop):
    rho = prop.steady_state(check_unique=True)
    assert np.trace(rho).real == pytest.approx(1.0)


def test_driven_cavity_oracle():
    """g=0 decouples the atom: the cavity settles into a coherent state with
    alpha = -i eps / (kappa - i delta_omega) (closed-form filter response)."""
    p = SystemParams(g=0.0, eps=0.8, delta_omega=1.5, gamma=2.0, n_max=10)
    prop = LiouvillePropagator(p)
    rho = prop.steady_state()
    ops = build_operators(p)
    alpha = -1j * p.eps / (p.kappa - 1j * p.delta_omega)
    a_ss = expect(ops["a"], rho)
    assert a_ss == pytest.approx(alpha, abs=1e-8)
    n_ss = expect(ops["a_dagger"] @ ops["a"], rho).real
    assert n_ss == pytest.approx(abs(alpha) ** 2, abs=1e-8)


def test_propagate_matches_expm(small_params, prop):
    import scipy.linalg
    d = small_params.dim
    rho0 = np.zeros((d, d), dtype=complex)
    rho0[0, 0] = 1.0
    direct = unvectorize(scipy.linalg.expm(prop.lv * 0.7) @ vectorize(rho0))
    assert np.allclose(prop.propagate(rho0, 0.7), direct, atol=1e-9)


def test_propagate_preserves_trace_and_reaches_steady(prop, rho_ss,
                                                      small_params):
    d = small_params.dim
    rho0 = np.zeros((d, d), dtype=complex)
    rho0[0, 0] = 1.0
    rho_t = prop.propagate(rho0, 30.0)
    assert np.trace(rho_t).real == pytest.approx(1.0, abs=1e-8)
    assert np.max(np.abs(rho_t - rho_ss)) < 1e-6


def test_correlation_h_continuous_at_zero(small_params, prop):
    """Both regression branches give the same value at tau = 0."""
    from jccorr.liouville import correlation_h
    eps_tau = 1e-9
    tau = np.array([-eps_tau, 0.0, eps_tau])
    ser = correlation_h(0.0, tau, small_params, propagator=prop)
    assert ser.values[0] == pytest.approx(ser.values[1], abs=1e-6)
    assert ser.values[2] == pytest.approx(ser.values[1], abs=1e-6)


def test_correlation_h_decays_to_one(small_params, prop):
    tau = symmetric_tau_grid(8.0, 0.02)
    ser = correlation_h(0.0, tau, small_params, propagator=prop)
    assert abs(ser.value_at(8.0) - 1.0) < 1e-3
    assert abs(ser.value_at(-8.0) - 1.0) < 1e-3


def test_normalization_guard():
    """Undriven system: <A_theta>_ss = 0, h undefined."""
    p = SystemParams(g=20.0, eps=0.0, n_max=4)
    with pytest.raises(NormalizationUndefined) as exc_info:
        correlation_h(0.0, np.array([0.0, 1.0]), p)
    assert exc_info.value.numerator is not None


def test_g2_symmetric_and_coherent_oracle():
    p = SystemParams(g=0.0, eps=0.8, delta_omega=0.5, n_max=10)
    tau = symmetric_tau_grid(2.0, 0.1)
    ser = correlation_g2(tau, p)
    assert np.allclose(ser.values, 1.0, atol=1e-6)
    # symmetry in tau by construction
    assert np.allclose(ser.values, ser.values[::-1])


def test_partial_trace(small_params, rho_ss):
    rho_c = partial_trace_atom(rho_ss, small_params)
    assert np.trace(rho_c).real == pytest.approx(1.0, abs=1e-12)
    ops = build_operators(small_params)
    nf = small_params.n_fock
    n_f = np.diag(np.arange(nf, dtype=float))
    n_from_reduced = np.trace(n_f @ rho_c).real
    n_full = expect(ops["a_dagger"] @ ops["a"], rho_ss).real
    assert n_from_reduced == pytest.approx(n_full, abs=1e-12)


def test_quadrature_expectation_consistency(small_params, rho_ss):
    """<A_theta>_ss = Re[<a>_ss e^{-i theta}] for several theta."""
    ops = build_operators(small_params)
    a_ss = expect(ops["a"], rho_ss)
    for theta in (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4):
        aq = quadrature_operator(theta, small_params)
        assert expect(aq, rho_ss).real == pytest.approx(
            (a_ss * np.exp(-1j * theta)).real, abs=1e-12)
