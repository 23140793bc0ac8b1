"""Two-state (vacuum-Rabi-manifold) approximation.

Restricting the dynamics to {|G>, |1,U>} (drive detuning +g) or
{|G>, |1,L>} (detuning -g) maps the JC oscillator to resonance
fluorescence of an effective two-level transition with raising operator
l+ = |1,U(L)><G|, decay rate gamma_bar = gamma/2 + kappa and Rabi drive
eps/sqrt(2).  The cavity and atom operators map as a -> l-/sqrt(2) and
sigma- -> +/- l-/sqrt(2) (sign +- for the upper/lower branch).
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .series import METHOD_ANALYTIC, METHOD_REGRESSION, CorrelationSeries

BRANCH_UPPER = "upper"   # drive at delta_omega = +g
BRANCH_LOWER = "lower"   # drive at delta_omega = -g

_L_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
_L_PLUS = _L_MINUS.conj().T


@dataclass(frozen=True)
class TwoStateParams:
    """Parameters of the effective two-state model (units of kappa)."""

    eps: float
    kappa: float = 1.0
    gamma: float = 2.0
    branch: str = BRANCH_UPPER

    def __post_init__(self):
        if self.branch not in (BRANCH_UPPER, BRANCH_LOWER):
            raise ValueError(f"branch must be 'upper' or 'lower', got {self.branch!r}")
        if self.eps < 0 or self.kappa < 0 or self.gamma < 0:
            raise ValueError("rates must be non-negative")
        if self.gamma_bar <= 0:
            raise ValueError("gamma_bar = gamma/2 + kappa must be positive")

    @property
    def gamma_bar(self) -> float:
        """Effective decay rate out of the dressed couplet state."""
        return self.gamma / 2.0 + self.kappa

    @property
    def drive_y(self) -> float:
        """Dimensionless drive parameter Y = 2 eps / gamma_bar."""
        return 2.0 * self.eps / self.gamma_bar

    @property
    def delta(self) -> complex:
        """(gamma_bar/4) sqrt(1 - 8 Y^2); purely imaginary for strong drive."""
        return (self.gamma_bar / 4.0) * cmath.sqrt(1.0 - 8.0 * self.drive_y**2)

    @property
    def ringing_frequency(self) -> float:
        """Angular frequency (gamma_bar/4) sqrt(8 Y^2 - 1) of the damped
        oscillations, zero in the overdamped regime 8 Y^2 <= 1."""
        val = 8.0 * self.drive_y**2 - 1.0
        return (self.gamma_bar / 4.0) * math.sqrt(val) if val > 0 else 0.0

    @property
    def sigma_minus_sign(self) -> float:
        """Sign in the mapping sigma- -> sign * l- / sqrt(2)."""
        return 1.0 if self.branch == BRANCH_UPPER else -1.0


def effective_hamiltonian(p: TwoStateParams) -> np.ndarray:
    """Non-Hermitian Hamiltonian governing the no-collapse evolution.

    H = (eps/sqrt(2)) (l+ + l-) - (i/2) (kappa + gamma/2) l+ l-
    on the basis {|G>, |1,U(L)>}.
    """
    return (p.eps / math.sqrt(2)) * (_L_PLUS + _L_MINUS) \
        - 0.5j * p.gamma_bar * (_L_PLUS @ _L_MINUS)


def analytic_h(tau_abs: float | np.ndarray, p: TwoStateParams) -> float | np.ndarray:
    """Closed-form h_{pi/2}(|tau|) at the vacuum Rabi resonance.

    h = 1 - e^{-3 gb |tau| / 4} [cosh(d |tau|)
        + (gb / 4d)(1 - 2 Y^2) sinh(d |tau|)]

    with gb = gamma_bar and d possibly imaginary (evaluated with complex
    cosh/sinh; the imaginary residue is discarded).  Independent of g.
    """
    tau = np.abs(np.asarray(tau_abs, dtype=float))
    gb = p.gamma_bar
    y2 = p.drive_y**2
    d = p.delta
    envelope = np.exp(-3.0 * gb * tau / 4.0)
    if abs(d) < 1e-12 * gb:
        # 8 Y^2 = 1 exactly: cosh -> 1, sinh(d tau)/d -> tau.
        bracket = 1.0 + (gb / 4.0) * (1.0 - 2.0 * y2) * tau
    else:
        bracket = (np.cosh(d * tau)
                   + (gb / (4.0 * d)) * (1.0 - 2.0 * y2) * np.sinh(d * tau)).real
    out = 1.0 - envelope * bracket
    return out if out.ndim else float(out)


def _two_state_liouvillian(p: TwoStateParams) -> np.ndarray:
    """4x4 Liouvillian of the effective resonance-fluorescence model."""
    h = (p.eps / math.sqrt(2)) * (_L_PLUS + _L_MINUS)
    eye = np.eye(2, dtype=complex)
    lv = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    pp = _L_PLUS @ _L_MINUS
    lv += (p.gamma_bar / 2.0) * (
        2.0 * np.kron(_L_MINUS.conj(), _L_MINUS)
        - np.kron(eye, pp) - np.kron(pp.T, eye))
    return lv


def two_state_steady_state(p: TwoStateParams) -> np.ndarray:
    lv = _two_state_liouvillian(p)
    mat = np.vstack([lv, np.eye(2, dtype=complex).flatten(order="F")])
    rhs = np.zeros(5, dtype=complex)
    rhs[-1] = 1.0
    sol, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
    rho = sol.reshape(2, 2, order="F")
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def map_full_operators(p: TwoStateParams) -> dict[str, np.ndarray]:
    """Cavity/atom lowering operators realized in the two-state manifold."""
    return {
        "a": _L_MINUS / math.sqrt(2),
        "sigma_minus": p.sigma_minus_sign * _L_MINUS / math.sqrt(2),
    }


def two_state_h_regression(p: TwoStateParams, tau_grid: np.ndarray,
                           theta: float = math.pi / 2) -> CorrelationSeries:
    """h_theta(tau) from quantum regression inside the 2x2 manifold.

    Cross-validates :func:`analytic_h` through an independent numerical
    path; the mapping constants 1/sqrt(2) cancel in the normalization.
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    lv = _two_state_liouvillian(p)
    rho_ss = two_state_steady_state(p)
    w, v = np.linalg.eig(lv)
    vinv = np.linalg.inv(v)

    def evolve(op_vec: np.ndarray, taus: np.ndarray) -> np.ndarray:
        coeff = vinv @ op_vec
        return np.exp(np.outer(taus, w)) * coeff @ v.T

    def tr_func(op: np.ndarray) -> np.ndarray:
        return op.T.flatten(order="F")

    pp = _L_PLUS @ _L_MINUS
    phase = np.exp(-1j * theta)
    numerator = np.empty_like(tau_grid)
    pos = tau_grid >= 0
    if np.any(pos):
        seed = (_L_MINUS @ rho_ss @ _L_PLUS).flatten(order="F")
        numerator[pos] = (evolve(seed, tau_grid[pos]) @ tr_func(_L_MINUS) * phase).real
    if np.any(~pos):
        seed = (_L_MINUS @ rho_ss).flatten(order="F")
        numerator[~pos] = (evolve(seed, -tau_grid[~pos]) @ tr_func(pp) * phase).real

    pop_ss = np.trace(pp @ rho_ss).real
    amp_ss = (np.trace(_L_MINUS @ rho_ss) * phase).real
    values = numerator / (pop_ss * amp_ss)
    return CorrelationSeries(tau_grid=tau_grid, values=values,
                             method=METHOD_REGRESSION, kind="h", theta=theta)


def analytic_h_series(tau_grid: np.ndarray, p: TwoStateParams) -> CorrelationSeries:
    tau_grid = np.asarray(tau_grid, dtype=float)
    return CorrelationSeries(tau_grid=tau_grid, values=analytic_h(tau_grid, p),
                             method=METHOD_ANALYTIC, kind="h", theta=math.pi / 2)


@dataclass
class BoundReport:
    """Outcome of the classical-bound checks on a correlation series.

    Bound (a): 0 <= h(0) - 1 <= 1 at zero delay.
    Bound (b): |h(tau) - 1| <= |h(0) - 1| <= 1 for every tau.
    """

    tau0: float
    h0: float
    zero_delay_on_grid: bool
    bound_a_violated: bool
    bound_a_margin: float
    bound_b_violated: bool
    bound_b_intervals: list = field(default_factory=list)
    bound_b_worst_margin: float = 0.0
    bound_b_worst_tau: float | None = None

    def to_json(self, path: str | Path | None = None) -> str:
        data = dict(self.__dict__)
        text = json.dumps(data, indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text)
        return text


def classical_bounds_report(series: CorrelationSeries,
                            tau0_tol: float = 1e-9) -> BoundReport:
    """Check the classical inequalities on h and list the violating delays."""
    tau = series.tau_grid
    h = series.values
    if tau.size == 0:
        raise ValueError("empty correlation series")
    i0 = int(np.argmin(np.abs(tau)))
    tau0, h0 = float(tau[i0]), float(h[i0])
    on_grid = abs(tau0) <= tau0_tol

    # (a): 0 <= h(0) - 1 <= 1.
    dev0 = h0 - 1.0
    margin_a = max(0.0 - dev0, dev0 - 1.0)
    violated_a = margin_a > 0.0

    # (b): |h - 1| <= |h(0) - 1| and |h(0) - 1| <= 1, everywhere.
    excess = np.abs(h - 1.0) - min(abs(dev0), 1.0)
    mask = excess > 0.0
    intervals = []
    worst_margin, worst_tau = 0.0, None
    if np.any(mask):
        edges = np.flatnonzero(np.diff(np.concatenate(([False], mask, [False])).astype(int)))
        for start, stop in zip(edges[::2], edges[1::2]):
            seg = slice(start, stop)
            k = start + int(np.argmax(excess[seg]))
            intervals.append((float(tau[start]), float(tau[stop - 1])))
            if excess[k] > worst_margin:
                worst_margin, worst_tau = float(excess[k]), float(tau[k])
    return BoundReport(
        tau0=tau0, h0=h0, zero_delay_on_grid=on_grid,
        bound_a_violated=violated_a, bound_a_margin=float(margin_a),
        bound_b_violated=bool(np.any(mask)), bound_b_intervals=intervals,
        bound_b_worst_margin=worst_margin, bound_b_worst_tau=worst_tau)
