"""Lindblad superoperator, steady state, propagation and two-time correlations.

The master equation is

    drho/dt = L rho = -i [H_JC, rho]
              + kappa (2 a rho a^dag - a^dag a rho - rho a^dag a)
              + (gamma/2) (2 sm rho sp - sp sm rho - rho sp sm),

so the photon loss rate is 2*kappa.  Density matrices are vectorized by
column stacking, vec(A X B) = (B^T kron A) vec(X).
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .exceptions import DegenerateSteadyState, NormalizationUndefined
from .hilbert import build_jc_hamiltonian, build_operators, quadrature_operator
from .params import SystemParams
from .series import METHOD_REGRESSION, CorrelationSeries


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Column-stacked vectorization."""
    return rho.flatten(order="F")


def unvectorize(vec: np.ndarray) -> np.ndarray:
    dim = int(round(np.sqrt(vec.size)))
    return vec.reshape((dim, dim), order="F")


def _dissipator(op: np.ndarray, rate: float) -> np.ndarray:
    """rate * (2 op . op^dag - op^dag op . - . op^dag op), vectorized."""
    d = op.shape[0]
    eye = np.eye(d, dtype=complex)
    opd_op = op.conj().T @ op
    return rate * (
        2.0 * np.kron(op.conj(), op)
        - np.kron(eye, opd_op)
        - np.kron(opd_op.T, eye)
    )


def build_liouvillian(params: SystemParams, delta_omega: float | None = None) -> np.ndarray:
    """Dense D^2 x D^2 Liouvillian matrix acting on column-stacked states."""
    h = build_jc_hamiltonian(params, delta_omega=delta_omega)
    ops = build_operators(params)
    d = params.dim
    eye = np.eye(d, dtype=complex)
    lv = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    lv += _dissipator(ops["a"], params.kappa)
    lv += _dissipator(ops["sigma_minus"], params.gamma / 2.0)
    return lv


def steady_state(lv: np.ndarray, check_unique: bool = False,
                 null_tol: float = 1e-9) -> np.ndarray:
    """Steady-state density matrix solving L rho_ss = 0.

    The (rank-deficient) linear system is closed with the trace constraint
    and solved by least squares.  With ``check_unique`` the two smallest
    singular values of L are inspected; a second near-null direction raises
    :class:`DegenerateSteadyState`.
    """
    d2 = lv.shape[0]
    d = int(round(np.sqrt(d2)))
    if check_unique:
        svals = np.linalg.svd(lv, compute_uv=False)
        scale = svals[0]
        null_dim = int(np.sum(svals < null_tol * scale))
        if null_dim > 1:
            raise DegenerateSteadyState(
                f"steady state is not unique: {null_dim} null directions "
                f"(multistability)", null_dim=null_dim)
    trace_row = vectorize(np.eye(d, dtype=complex)).conj()
    mat = np.vstack([lv, trace_row])
    rhs = np.zeros(d2 + 1, dtype=complex)
    rhs[-1] = 1.0
    sol, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
    rho = unvectorize(sol)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    return rho


class LiouvillePropagator:
    """Cached exact diagonalization of the Liouvillian.

    Propagation applies e^{L tau} through the eigendecomposition
    L = V diag(w) V^{-1} (exponential-series method).  If the
    diagonalization reconstructs L poorly, the propagator falls back to
    scaling-and-squaring matrix exponentials per delay.
    """

    def __init__(self, params: SystemParams, delta_omega: float | None = None,
                 reconstruct_tol: float = 1e-8):
        self.params = params
        self.lv = build_liouvillian(params, delta_omega=delta_omega)
        self._use_eig = True
        try:
            self.eigvals, self.eigvecs = np.linalg.eig(self.lv)
            self._vinv = np.linalg.solve(self.eigvecs, np.eye(self.lv.shape[0], dtype=complex))
            resid = np.linalg.norm(
                self.eigvecs @ (self.eigvals[:, None] * self._vinv) - self.lv
            ) / max(np.linalg.norm(self.lv), 1.0)
            if resid > reconstruct_tol:
                raise np.linalg.LinAlgError(f"eigendecomposition residual {resid:.2e}")
        except np.linalg.LinAlgError as exc:
            warnings.warn(f"Liouvillian diagonalization unreliable ({exc}); "
                          "falling back to matrix exponentials", stacklevel=2)
            self._use_eig = False

    def steady_state(self, **kwargs) -> np.ndarray:
        return steady_state(self.lv, **kwargs)

    def evolve_vec(self, vec: np.ndarray, tau: float) -> np.ndarray:
        """Apply e^{L tau} to a vectorized operator."""
        if tau < 0:
            raise ValueError("tau must be non-negative")
        if self._use_eig:
            coeff = self._vinv @ vec
            return self.eigvecs @ (np.exp(self.eigvals * tau) * coeff)
        return scipy.linalg.expm(self.lv * tau) @ vec

    def evolve_many(self, vec: np.ndarray, taus: np.ndarray) -> np.ndarray:
        """Apply e^{L tau} for a whole set of delays; returns (len(taus), D^2)."""
        taus = np.asarray(taus, dtype=float)
        if np.any(taus < 0):
            raise ValueError("delays must be non-negative")
        if self._use_eig:
            coeff = self._vinv @ vec
            phases = np.exp(np.outer(taus, self.eigvals))
            return phases * coeff @ self.eigvecs.T
        return np.stack([self.evolve_vec(vec, t) for t in taus])

    def propagate(self, rho: np.ndarray, tau: float) -> np.ndarray:
        """Propagate a density matrix by tau."""
        return unvectorize(self.evolve_vec(vectorize(rho), tau))


def _trace_functional(op: np.ndarray) -> np.ndarray:
    """Row vector f with f . vec(X) = tr(op X) under column stacking."""
    return vectorize(op.T)


def correlation_h(theta: float, tau_grid: np.ndarray, params: SystemParams,
                  propagator: LiouvillePropagator | None = None,
                  denominator_tol: float = 1e-12) -> CorrelationSeries:
    """Normalized intensity-field correlation h_theta(tau) by quantum regression.

    For tau >= 0 the numerator is Re{tr[a e^{L tau}(a rho_ss a^dag)] e^{-i theta}};
    for tau <= 0 it is Re{tr[a^dag a e^{L |tau|}(a rho_ss)] e^{-i theta}}.
    Both are divided by <a^dag a>_ss <A_theta>_ss.  If the mean quadrature
    amplitude vanishes, :class:`NormalizationUndefined` is raised carrying the
    unnormalized numerator.
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    prop = propagator or LiouvillePropagator(params)
    rho_ss = prop.steady_state()
    ops = build_operators(params)
    a, ad = ops["a"], ops["a_dagger"]
    n_op = ad @ a
    a_theta = quadrature_operator(theta, params)

    n_ss = np.trace(n_op @ rho_ss).real
    a_theta_ss = np.trace(a_theta @ rho_ss).real
    phase = np.exp(-1j * theta)

    numerator = np.empty_like(tau_grid)
    pos = tau_grid >= 0
    neg = ~pos
    if np.any(pos):
        seed = vectorize(a @ rho_ss @ ad)
        evolved = prop.evolve_many(seed, tau_grid[pos])
        numerator[pos] = (evolved @ _trace_functional(a) * phase).real
    if np.any(neg):
        seed = vectorize(a @ rho_ss)
        evolved = prop.evolve_many(seed, -tau_grid[neg])
        numerator[neg] = (evolved @ _trace_functional(n_op) * phase).real

    denom = n_ss * a_theta_ss
    if abs(a_theta_ss) < denominator_tol or abs(denom) < denominator_tol**2:
        raise NormalizationUndefined(
            f"<A_theta>_ss = {a_theta_ss:.3e} vanishes; h is undefined at "
            f"theta={theta}", tau_grid=tau_grid, numerator=numerator)
    return CorrelationSeries(tau_grid=tau_grid, values=numerator / denom,
                             method=METHOD_REGRESSION, kind="h", theta=theta,
                             params=params)


def correlation_g2(tau_grid: np.ndarray, params: SystemParams,
                   propagator: LiouvillePropagator | None = None,
                   denominator_tol: float = 1e-12) -> CorrelationSeries:
    """Steady-state intensity correlation g2(tau), symmetric in the delay."""
    tau_grid = np.asarray(tau_grid, dtype=float)
    prop = propagator or LiouvillePropagator(params)
    rho_ss = prop.steady_state()
    ops = build_operators(params)
    a, ad = ops["a"], ops["a_dagger"]
    n_op = ad @ a
    n_ss = np.trace(n_op @ rho_ss).real
    if n_ss < denominator_tol:
        raise NormalizationUndefined(
            f"<a^dag a>_ss = {n_ss:.3e} vanishes; g2 is undefined")
    seed = vectorize(a @ rho_ss @ ad)
    evolved = prop.evolve_many(seed, np.abs(tau_grid))
    values = (evolved @ _trace_functional(n_op)).real / n_ss**2
    return CorrelationSeries(tau_grid=tau_grid, values=values,
                             method=METHOD_REGRESSION, kind="g2",
                             params=params)


def partial_trace_atom(rho: np.ndarray, params: SystemParams) -> np.ndarray:
    """Reduced cavity state: trace over the atom."""
    nf = params.n_fock
    r4 = rho.reshape(2, nf, 2, nf)
    return np.einsum("anam->nm", r4)


def expect(op: np.ndarray, rho: np.ndarray) -> complex:
    return complex(np.trace(op @ rho))
