"""Truncated Hilbert space, bare operators, JC Hamiltonian and dressed states.

Basis convention (fixed for bit-exact test vectors): the composite index is
atom-major, ``index = atom * (n_max + 1) + n`` with atom 0 the lower state
``|->``, atom 1 the upper state ``|+>``, and photon numbers ``n`` ascending.
Operators are dense complex matrices of dimension ``2 * (n_max + 1)``.

The dynamics is written in a frame rotating with the drive; ``hbar = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import SystemParams

# Branch labels for the dressed-state doublets.
LOWER = "L"
UPPER = "U"


def _field_annihilator(n_fock: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_fock, dtype=float)), 1).astype(complex)


def build_operators(params: SystemParams) -> dict[str, np.ndarray]:
    """Bare mode and atom ladder operators on the composite basis.

    Returns a dict with keys ``a``, ``a_dagger``, ``sigma_minus``,
    ``sigma_plus``.
    """
    nf = params.n_fock
    a_f = _field_annihilator(nf)
    id_f = np.eye(nf, dtype=complex)
    # Atom basis ordering (|->, |+>): sigma_- = |-><+|.
    sm = np.zeros((2, 2), dtype=complex)
    sm[0, 1] = 1.0
    a = np.kron(np.eye(2, dtype=complex), a_f)
    sigma_minus = np.kron(sm, id_f)
    return {
        "a": a,
        "a_dagger": a.conj().T,
        "sigma_minus": sigma_minus,
        "sigma_plus": sigma_minus.conj().T,
    }


def build_jc_hamiltonian(params: SystemParams, delta_omega: float | None = None) -> np.ndarray:
    """Driven JC Hamiltonian in the frame rotating with the drive.

    H = -delta_omega (sigma_+ sigma_- + a^dag a)
        + g (a sigma_+ + a^dag sigma_-) + eps (a + a^dag)

    ``delta_omega`` overrides the value in ``params`` (used by detuning scans).
    """
    ops = build_operators(params)
    a, ad = ops["a"], ops["a_dagger"]
    sm, sp = ops["sigma_minus"], ops["sigma_plus"]
    dw = params.delta_omega if delta_omega is None else delta_omega
    h = (
        -dw * (sp @ sm + ad @ a)
        + params.g * (a @ sp + ad @ sm)
        + params.eps * (a + ad)
    )
    return h


def ground_state(params: SystemParams) -> np.ndarray:
    """The JC ground state |G> = |->|0> as a basis vector."""
    psi = np.zeros(params.dim, dtype=complex)
    psi[0] = 1.0
    return psi


@dataclass(frozen=True)
class DressedState:
    """A dressed doublet state |n, L/U> of the undriven JC ladder."""

    n: int
    branch: str
    vector: np.ndarray
    energy: float          # rotating-frame energy: -n*delta_omega -/+ sqrt(n)*g
    energy_lab_offset: float  # lab-frame energy minus n*hbar*omega_0: -/+ sqrt(n)*g


def dressed_state(n: int, branch: str, params: SystemParams) -> DressedState:
    """Dressed state |n,L> or |n,U> with its energies.

    |n,L> = (|+>|n-1> - |->|n>)/sqrt(2), lab energy n*omega - sqrt(n)*g;
    |n,U> = (|+>|n-1> + |->|n>)/sqrt(2), lab energy n*omega + sqrt(n)*g.
    """
    if branch not in (LOWER, UPPER):
        raise ValueError(f"branch must be '{LOWER}' or '{UPPER}', got {branch!r}")
    if not 1 <= n <= params.n_max:
        raise ValueError(f"excitation number n={n} outside truncation 1..{params.n_max}")
    nf = params.n_fock
    vec = np.zeros(params.dim, dtype=complex)
    sign = 1.0 if branch == UPPER else -1.0
    vec[nf + (n - 1)] = 1.0 / math.sqrt(2)   # |+>|n-1>
    vec[n] = sign / math.sqrt(2)             # |->|n>
    offset = sign * math.sqrt(n) * params.g
    energy = -n * params.delta_omega + offset
    return DressedState(n=n, branch=branch, vector=vec, energy=energy,
                        energy_lab_offset=offset)


def resonance_detuning(n: int, branch: str, params: SystemParams,
                       corrected: bool = False) -> float:
    """Drive detuning exciting the n-photon resonance of the given branch.

    Uncorrected: delta_omega = +/- g/sqrt(n) (+ for the upper branch).  The
    drive-dressing correction is only known for the two-photon case,
    delta_omega = +/- (g/sqrt(2)) [1 + 2 (eps/g)^2].
    """
    if branch not in (LOWER, UPPER):
        raise ValueError(f"branch must be '{LOWER}' or '{UPPER}', got {branch!r}")
    if n < 1:
        raise ValueError(f"resonance order n must be >= 1, got {n}")
    sign = 1.0 if branch == UPPER else -1.0
    if not corrected:
        return sign * params.g / math.sqrt(n)
    if n != 2:
        raise ValueError("drive-dressing correction is only available for n=2")
    return sign * (params.g / math.sqrt(2)) * (1.0 + 2.0 * (params.eps / params.g) ** 2)


def next_step_detuning(n: int, branch: str, params: SystemParams) -> float:
    """Detuning of the next ladder step when driving the n-photon resonance.

    E_{n+1} - E_n - omega_d = -/+ [(n+1)/sqrt(n) - sqrt(n+1)] g, with the
    minus sign for the upper branch.
    """
    if branch not in (LOWER, UPPER):
        raise ValueError(f"branch must be '{LOWER}' or '{UPPER}', got {branch!r}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    sign = -1.0 if branch == UPPER else 1.0
    return sign * ((n + 1) / math.sqrt(n) - math.sqrt(n + 1)) * params.g


def quadrature_operator(theta: float, params: SystemParams) -> np.ndarray:
    """Measured quadrature amplitude A_theta = (a e^{-i theta} + a^dag e^{i theta})/2.

    The Hermitian form is used, consistent with
    <A_theta> = Re[<a> e^{-i theta}].
    """
    a = build_operators(params)["a"]
    return 0.5 * (a * np.exp(-1j * theta) + a.conj().T * np.exp(1j * theta))
