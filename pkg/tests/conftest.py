import numpy as np
import pytest

from jccorr.params import SystemParams


@pytest.fixture(scope="session")
def small_params():
    """Cheap operating point for algebra-level tests."""
    return SystemParams(g=20.0, kappa=1.0, gamma=2.0, eps=2.0,
                        delta_omega=20.0, n_max=6)


@pytest.fixture(scope="session")
def paper_params():
    """Strong-coupling operating point (vacuum Rabi resonance)."""
    return SystemParams(g=200.0, kappa=1.0, gamma=2.0, eps=10.0,
                        delta_omega=200.0, theta=np.pi / 2, r=0.5, n_max=12)
