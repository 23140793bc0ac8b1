import numpy as np
import pytest

from jccorr.wigner import WignerGrid, count_local_maxima, wigner


def _coherent_rho(alpha, n_fock):
    from scipy.special import gammaln
    n = np.arange(n_fock)
    # stable evaluation of e^{-|a|^2/2} alpha^n / sqrt(n!)
    log_mag = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) \
        - 0.5 * gammaln(n + 1.0)
    psi = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    return np.outer(psi, psi.conj())


def test_vacuum_gaussian():
    rho = np.zeros((6, 6), dtype=complex)
    rho[0, 0] = 1.0
    x = np.linspace(-2.5, 2.5, 41)
    grid = wigner(rho, x, x)
    assert grid.values[20, 20] == pytest.approx(2.0 / np.pi, abs=1e-10)
    # W(alpha) = (2/pi) exp(-2 |alpha|^2)
    expected = (2.0 / np.pi) * np.exp(-2.0 * (x[None, :] ** 2 + x[:, None] ** 2))
    assert np.max(np.abs(grid.values - expected)) < 1e-8
    assert grid.captured_mass == pytest.approx(1.0, abs=1e-3)


def test_coherent_state_displaced():
    alpha = 0.7 + 0.4j
    rho = _coherent_rho(alpha, 12)
    x = np.linspace(-2.5, 2.5, 51)
    grid = wigner(rho, x, x)
    j, i = np.unravel_index(np.argmax(grid.values), grid.values.shape)
    assert x[i] == pytest.approx(alpha.real, abs=0.11)
    assert x[j] == pytest.approx(alpha.imag, abs=0.11)
    assert grid.values.max() == pytest.approx(2.0 / np.pi, rel=1e-3)


def test_fock_one_negative_at_origin():
    rho = np.zeros((6, 6), dtype=complex)
    rho[1, 1] = 1.0
    x = np.array([-0.1, 0.0, 0.1])
    grid = wigner(rho, x, x)
    assert grid.values[1, 1] == pytest.approx(-2.0 / np.pi, abs=1e-9)


def test_parity_bound():
    """|W| <= 2/pi always (displaced parity has unit spectral radius)."""
    rng = np.random.default_rng(5)
    m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    rho = m @ m.conj().T
    rho /= np.trace(rho).real
    x = np.linspace(-2.0, 2.0, 21)
    grid = wigner(rho, x, x, mass_warn=0.0)
    assert np.max(np.abs(grid.values)) <= 2.0 / np.pi + 1e-9


def test_mass_warning_small_grid():
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0
    x = np.linspace(-0.3, 0.3, 7)
    with pytest.warns(UserWarning, match="captures only"):
        wigner(rho, x, x)


def test_count_local_maxima_synthetic():
    x = np.linspace(-3.0, 3.0, 61)
    xx, yy = np.meshgrid(x, x)
    two = np.exp(-((xx - 1) ** 2 + yy ** 2)) + np.exp(-((xx + 1) ** 2 + yy ** 2))
    grid = WignerGrid(x=x, y=x, values=two)
    assert count_local_maxima(grid) == 2
    one = np.exp(-(xx ** 2 + yy ** 2))
    assert count_local_maxima(WignerGrid(x=x, y=x, values=one)) == 1
    # sub-threshold secondary bump is not counted
    weak = one + 0.01 * np.exp(-((xx - 2) ** 2 + yy ** 2) / 0.1)
    assert count_local_maxima(WignerGrid(x=x, y=x, values=weak),
                              rel_threshold=0.05) == 1


def test_serialization(tmp_path):
    import json
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0
    x = np.linspace(-2.0, 2.0, 11)
    grid = wigner(rho, x, x, mass_warn=0.0)
    grid.to_csv(tmp_path / "w.csv")
    lines = (tmp_path / "w.csv").read_text().splitlines()
    assert lines[0] == "x,y,W"
    assert len(lines) == 1 + 11 * 11
    data = json.loads(grid.to_json())
    assert data["type"] == "WignerGrid"
    assert np.allclose(np.array(data["values"]), grid.values)


@pytest.mark.slow
def test_two_photon_steady_state_bimodality():
    """In the zero-system-size limit the two-photon-resonance steady state
    develops two Wigner lobes along a diagonal; at gamma = 2 kappa the
    structure is washed down to a single elongated maximum."""
    from jccorr.liouville import LiouvillePropagator, partial_trace_atom
    from jccorr.presets import preset, two_photon_peak_detuning

    x = np.linspace(-2.0, 2.0, 61)
    pre = preset("fig9c")
    rho_c = partial_trace_atom(LiouvillePropagator(pre.params).steady_state(),
                               pre.params)
    grid = wigner(rho_c, x, x)
    assert grid.captured_mass > 0.99
    assert count_local_maxima(grid) == 2

    p_matched = pre.params.with_(gamma=2.0,
                                 delta_omega=two_photon_peak_detuning())
    rho_m = partial_trace_atom(LiouvillePropagator(p_matched).steady_state(),
                               p_matched)
    assert count_local_maxima(wigner(rho_m, x, x)) == 1
