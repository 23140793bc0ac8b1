"""Wave-particle correlator unraveling of the master equation.

Between collapses the un-normalized conditioned state obeys

    d|psi> = [-i H_JC dt - kappa a^dag a dt - (gamma/2) sp sm dt
              + sqrt(2 kappa (1-r)) a e^{-i theta} dxi] |psi>,

with the homodyne record increment
dxi = sqrt(8 kappa (1-r)) <A_theta>_REC dt + dW.  APD clicks occur with
probability 2 kappa r <a^dag a> dt (collapse a), spontaneous emissions at
rate gamma <sp sm> (collapse sigma-).  The BHD photocurrent is the
single-pole filter dI = -tau_d^{-1} (I dt - dxi).

The deterministic drift is applied through a precomputed matrix exponential
(exact for fixed detuning, a diagonal-detuning split for scans): the plain
Euler step is unstable over many cavity lifetimes at g >> kappa, since its
stability region excludes the near-imaginary Liouvillian eigenvalues.  An
explicit Euler drift remains available for step-level tests.  Detector
constants are absorbed into dimensionless units (G e = 1), so dq = dxi.

The batched integrator advances many trajectories as one (W, 2, n_fock)
array; a single trajectory is a batch of width one.  Records are
reproducible bit-exactly from (params, protocol, dt, seed, batch layout).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from . import __version__
from .exceptions import IntegrationFault
from .hilbert import build_jc_hamiltonian
from .params import SystemParams

APD = "APD"
SPONTANEOUS = "Spontaneous"

# Step-size guards.
G_DT_MAX = 0.05          # resolve the 2g quantum beat
JUMP_PROB_MAX = 0.1      # total jump probability per step


@dataclass(frozen=True)
class FixedDetuning:
    """Constant drive-cavity detuning for ``duration`` (units of 1/kappa)."""

    delta_omega: float
    duration: float

    def detuning_at(self, t: np.ndarray) -> np.ndarray:
        return np.full_like(np.asarray(t, dtype=float), self.delta_omega)

    def to_dict(self) -> dict:
        return {"type": "fixed", "delta_omega": self.delta_omega,
                "duration": self.duration}


@dataclass(frozen=True)
class DetuningScan:
    """Detuning swept linearly from ``start`` to ``stop`` over ``duration``."""

    start: float
    stop: float
    duration: float

    def detuning_at(self, t: np.ndarray) -> np.ndarray:
        frac = np.clip(np.asarray(t, dtype=float) / self.duration, 0.0, 1.0)
        return self.start + (self.stop - self.start) * frac

    def to_dict(self) -> dict:
        return {"type": "scan", "start": self.start, "stop": self.stop,
                "duration": self.duration}


def protocol_from_dict(data: dict):
    kind = data.get("type")
    if kind == "fixed":
        return FixedDetuning(data["delta_omega"], data["duration"])
    if kind == "scan":
        return DetuningScan(data["start"], data["stop"], data["duration"])
    raise ValueError(f"unknown protocol type {kind!r}")


@dataclass
class JumpEvent:
    time: float
    kind: str                 # APD | Spontaneous
    detuning_at_event: float
    trajectory: int = 0


@dataclass
class ConditionedState:
    """Un-normalized conditioned wavefunction with cached expectations."""

    psi_bar: np.ndarray

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.psi_bar, self.psi_bar).real)

    @property
    def psi(self) -> np.ndarray:
        return self.psi_bar / np.sqrt(self.norm_sq)


@dataclass
class PhotocurrentFilter:
    """Single-pole low-pass filter for the BHD photocurrent."""

    tau_d_inv: float
    current: float = 0.0


def filter_step(f: PhotocurrentFilter, dq: float, dt: float) -> PhotocurrentFilter:
    """Advance dI = -tau_d^{-1} (I dt - dq) one explicit-Euler step."""
    if dt * f.tau_d_inv >= 1.0:
        raise ValueError("dt * tau_d_inv must be < 1 for filter stability")
    return PhotocurrentFilter(
        tau_d_inv=f.tau_d_inv,
        current=f.current + f.tau_d_inv * (dq - f.current * dt),
    )


class _Model:
    """Precomputed operators for one parameter set, in (atom, fock) layout."""

    def __init__(self, params: SystemParams):
        self.params = params
        nf = params.n_fock
        self.a_f = np.diag(np.sqrt(np.arange(1, nf, dtype=float)), 1).astype(complex)
        self.n_f = np.diag(np.arange(nf, dtype=float)).astype(complex)
        # Excitation number (a^dag a + sp sm), diagonal in (atom, fock).
        exc = np.arange(nf, dtype=float)
        self.exc_diag = np.stack([exc, exc + 1.0])
        self.n_diag = np.stack([exc, exc])
        self.sig_diag = np.stack([np.zeros(nf), np.ones(nf)])

    def drift_generator(self, delta_omega: float) -> np.ndarray:
        """-i H - kappa a^dag a - (gamma/2) sp sm as a dense (D, D) matrix."""
        p = self.params
        h = build_jc_hamiltonian(p, delta_omega=delta_omega)
        d = p.dim
        nf = p.n_fock
        damp = np.zeros((d, d), dtype=complex)
        np.fill_diagonal(damp, -(p.kappa * self.n_diag + p.gamma / 2.0 * self.sig_diag).reshape(-1))
        return -1j * h + damp

    def apply_a(self, psi: np.ndarray) -> np.ndarray:
        """(I_atom kron a) acting on (..., 2, nf) arrays."""
        return psi @ self.a_f.T

    def apply_sigma_minus(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        out[..., 0, :] = psi[..., 1, :]
        return out


def sse_step(state: ConditionedState, dt: float, rng: np.random.Generator,
             params: SystemParams, drift: str = "exponential",
             model: _Model | None = None,
             delta_omega: float | None = None) -> tuple[ConditionedState, float]:
    """One diffusive step of the SSE; returns the new state and dq.

    ``drift='euler'`` uses the plain explicit Euler-Maruyama drift;
    ``'exponential'`` (default) applies the exact no-jump propagator for the
    step and adds the order-dt^(1/2) measurement back-action term.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if params.g * dt > G_DT_MAX:
        raise ValueError(f"g*dt = {params.g * dt:.3f} exceeds {G_DT_MAX}; "
                         "the quantum beat would be under-resolved")
    model = model or _Model(params)
    p = params
    dw_val = p.delta_omega if delta_omega is None else delta_omega
    psi = state.psi.reshape(2, p.n_fock)
    apsi = model.apply_a(psi)
    a_exp = np.vdot(psi, apsi)
    a_theta = (a_exp * np.exp(-1j * p.theta)).real
    dxi = np.sqrt(8.0 * p.kappa * (1.0 - p.r)) * a_theta * dt \
        + rng.normal(0.0, np.sqrt(dt))

    psi_bar = state.psi_bar.reshape(2, p.n_fock)
    gen = model.drift_generator(dw_val)
    if drift == "euler":
        dpsi = dt * (gen @ psi_bar.reshape(-1)).reshape(2, p.n_fock)
        new = psi_bar + dpsi
    elif drift == "exponential":
        step_op = scipy.linalg.expm(gen * dt)
        new = (step_op @ psi_bar.reshape(-1)).reshape(2, p.n_fock)
    else:
        raise ValueError(f"unknown drift scheme {drift!r}")
    new = new + np.sqrt(2.0 * p.kappa * (1.0 - p.r)) * np.exp(-1j * p.theta) \
        * dxi * model.apply_a(psi_bar)
    nrm = np.vdot(new, new).real
    if nrm < 1e-300:
        raise IntegrationFault("conditioned state norm underflow")
    # Renormalize each step; the un-normalized growth is not needed further.
    new = new / np.sqrt(nrm)
    return ConditionedState(psi_bar=new.reshape(-1)), float(dxi)


def maybe_jump(state: ConditionedState, dt: float, rng: np.random.Generator,
               params: SystemParams, t: float = 0.0,
               model: _Model | None = None,
               delta_omega: float | None = None) -> JumpEvent | None:
    """Collapse test for one step: APD click or spontaneous emission.

    Uses two independent uniform draws against p_APD = 2 kappa r <n> dt and
    p_spon = gamma <sp sm> dt.  On a jump the state is collapsed in place.
    """
    model = model or _Model(params)
    p = params
    psi = state.psi.reshape(2, p.n_fock)
    n_exp = float(np.sum(np.abs(model.apply_a(psi)) ** 2))
    s_exp = float(np.sum(np.abs(psi[1]) ** 2))
    p_apd = 2.0 * p.kappa * p.r * n_exp * dt
    p_spon = p.gamma * s_exp * dt
    if p_apd + p_spon > JUMP_PROB_MAX:
        raise ValueError(f"total jump probability {p_apd + p_spon:.3f} per step "
                         f"exceeds {JUMP_PROB_MAX}; reduce dt")
    u_apd, u_spon = rng.random(2)
    fire_apd = u_apd < p_apd
    fire_spon = u_spon < p_spon
    if not (fire_apd or fire_spon):
        return None
    if fire_apd and fire_spon:
        warnings.warn("APD and spontaneous collapse in the same step; "
                      "applying both in random order", stacklevel=2)
        ops = [model.apply_a, model.apply_sigma_minus]
        if rng.random() < 0.5:
            ops.reverse()
        new = ops[1](ops[0](psi))
        kind = APD
    elif fire_apd:
        new = model.apply_a(psi)
        kind = APD
    else:
        new = model.apply_sigma_minus(psi)
        kind = SPONTANEOUS
    nrm = np.vdot(new, new).real
    if nrm < 1e-300:
        raise IntegrationFault("collapse annihilated the state")
    state.psi_bar = (new / np.sqrt(nrm)).reshape(-1)
    dw_val = p.delta_omega if delta_omega is None else delta_omega
    return JumpEvent(time=t, kind=kind, detuning_at_event=dw_val)


@dataclass
class TrajectoryRecord:
    """Decimated conditioned records of one realization."""

    times: np.ndarray
    delta_omega: np.ndarray
    n_cond: np.ndarray
    a_cond: np.ndarray
    photocurrent: np.ndarray
    events: list
    seed: int
    dt: float
    decimation: int
    params: SystemParams
    protocol: object

    def save(self, stem: str | Path) -> None:
        """Write <stem>.npz plus a JSON sidecar and CSV files."""
        stem = Path(stem)
        np.savez_compressed(
            stem.with_suffix(".npz"),
            times=self.times, delta_omega=self.delta_omega,
            n_cond=self.n_cond, a_cond=self.a_cond,
            photocurrent=self.photocurrent,
            event_times=np.array([e.time for e in self.events]),
            event_kinds=np.array([e.kind for e in self.events]),
            event_detunings=np.array([e.detuning_at_event for e in self.events]),
        )
        sidecar = {
            "type": "TrajectoryRecord",
            "version": __version__,
            "params": self.params.to_dict(),
            "protocol": self.protocol.to_dict(),
            "seed": self.seed,
            "dt": self.dt,
            "decimation": self.decimation,
        }
        stem.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
        with open(stem.with_suffix(".csv"), "w") as fh:
            fh.write("t,delta_omega,n_cond,A_cond,I_theta\n")
            for row in zip(self.times, self.delta_omega, self.n_cond,
                           self.a_cond, self.photocurrent):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
        with open(stem.parent / (stem.name + "_events.csv"), "w") as fh:
            fh.write("time,kind\n")
            for e in self.events:
                fh.write(f"{e.time!r},{e.kind}\n")


@dataclass
class EnsembleResult:
    """Batched trajectory output; row w is trajectory w."""

    times: np.ndarray
    delta_omega: np.ndarray
    n_cond: np.ndarray | None
    a_cond: np.ndarray | None
    photocurrent: np.ndarray | None
    events: list
    snapshots: dict          # time -> ensemble-mean density matrix (D, D)
    n_traj: int
    seed: int
    dt: float
    decimation: int
    params: SystemParams
    protocol: object

    def trajectory(self, w: int) -> TrajectoryRecord:
        return TrajectoryRecord(
            times=self.times, delta_omega=self.delta_omega,
            n_cond=self.n_cond[w] if self.n_cond is not None else None,
            a_cond=self.a_cond[w] if self.a_cond is not None else None,
            photocurrent=self.photocurrent[w] if self.photocurrent is not None else None,
            events=[e for e in self.events if e.trajectory == w],
            seed=self.seed, dt=self.dt, decimation=self.decimation,
            params=self.params, protocol=self.protocol)


def run_ensemble(params: SystemParams, protocol, dt: float, n_traj: int,
                 seed: int, decimation: int = 10,
                 snapshot_times: tuple = (),
                 record: tuple = ("n", "a", "photocurrent"),
                 initial: str = "ground") -> EnsembleResult:
    """Integrate ``n_traj`` trajectories in lockstep from the JC ground state.

    ``snapshot_times`` requests ensemble-mean density matrices
    (1/W) sum |psi><psi| at the given times.  ``record`` selects which
    decimated series are kept ("n", "a", "photocurrent"); records are
    stored as float32.
    """
    p = params
    if dt <= 0:
        raise ValueError("dt must be positive")
    if p.g * dt > G_DT_MAX:
        raise ValueError(f"g*dt = {p.g * dt:.3f} exceeds {G_DT_MAX}")
    if dt * p.tau_d_inv >= 1.0:
        raise ValueError("dt * tau_d_inv must be < 1 for the photocurrent filter")
    model = _Model(p)
    nf = p.n_fock
    n_steps = int(round(protocol.duration / dt))
    rng = np.random.default_rng(seed)

    scanning = isinstance(protocol, DetuningScan)
    if scanning:
        # Split drift: exact exponential at the mean detuning rate zero plus a
        # per-step diagonal detuning phase (the detuning term commutes with
        # everything except the weak drive).
        base = model.drift_generator(0.0)
        step_base = scipy.linalg.expm(base * dt)
        exc = model.exc_diag.reshape(-1)
        dw_steps = protocol.detuning_at((np.arange(n_steps) + 0.5) * dt)
    else:
        step_base = scipy.linalg.expm(model.drift_generator(protocol.delta_omega) * dt)
        exc = None
        dw_steps = np.full(n_steps, protocol.delta_omega)
    step_base_t = np.ascontiguousarray(step_base.T)

    if initial != "ground":
        raise ValueError("only the ground-state initial condition is supported")
    psi = np.zeros((n_traj, 2, nf), dtype=complex)
    psi[:, 0, 0] = 1.0

    diff_coef = np.sqrt(2.0 * p.kappa * (1.0 - p.r)) * np.exp(-1j * p.theta)
    drive_coef = np.sqrt(8.0 * p.kappa * (1.0 - p.r))
    sqdt = np.sqrt(dt)

    n_samples = n_steps // decimation
    rec_n = "n" in record
    rec_a = "a" in record
    rec_i = "photocurrent" in record
    n_rec = np.empty((n_traj, n_samples), dtype=np.float32) if rec_n else None
    a_rec = np.empty((n_traj, n_samples), dtype=np.float32) if rec_a else None
    i_rec = np.empty((n_traj, n_samples), dtype=np.float32) if rec_i else None
    times = (np.arange(n_samples) + 1.0) * (decimation * dt)
    dw_rec = protocol.detuning_at(times)

    snap_steps = {int(round(t / dt)): t for t in snapshot_times}
    snapshots = {}
    events: list[JumpEvent] = []
    current = np.zeros(n_traj)
    guard_warned = False

    for step in range(n_steps):
        apsi = psi @ model.a_f.T
        n_exp = np.einsum("wij,wij->w", apsi.conj(), apsi).real
        s_exp = np.einsum("wj,wj->w", psi[:, 1, :].conj(), psi[:, 1, :]).real
        a_exp = np.einsum("wij,wij->w", psi.conj(), apsi)
        a_theta = (a_exp * np.exp(-1j * p.theta)).real

        # Homodyne record increment (charge in detector units).
        dw_noise = rng.normal(0.0, sqdt, n_traj)
        dxi = drive_coef * a_theta * dt + dw_noise

        # Collapse tests with the state at the start of the step.
        p_apd = 2.0 * p.kappa * p.r * n_exp * dt
        p_spon = p.gamma * s_exp * dt
        if not guard_warned and np.max(p_apd + p_spon) > JUMP_PROB_MAX:
            warnings.warn("total jump probability per step exceeded "
                          f"{JUMP_PROB_MAX}; reduce dt", stacklevel=2)
            guard_warned = True
        u = rng.random((2, n_traj))
        fire_apd = u[0] < p_apd
        fire_spon = u[1] < p_spon

        # Diffusive update for every trajectory.
        new = psi.reshape(n_traj, -1) @ step_base_t
        if scanning:
            new *= np.exp(1j * dw_steps[step] * dt * exc)[None, :]
        new = new.reshape(n_traj, 2, nf)
        new += diff_coef * dxi[:, None, None] * apsi

        any_jump = fire_apd | fire_spon
        if np.any(any_jump):
            t_now = (step + 1) * dt
            both = fire_apd & fire_spon
            if np.any(both):
                warnings.warn("APD and spontaneous collapse in the same step",
                              stacklevel=2)
            for w in np.flatnonzero(any_jump):
                collapsed = psi[w]
                order = []
                if fire_apd[w]:
                    order.append("a")
                if fire_spon[w]:
                    order.append("s")
                if len(order) == 2 and rng.random() < 0.5:
                    order.reverse()
                for opname in order:
                    if opname == "a":
                        collapsed = collapsed @ model.a_f.T
                        events.append(JumpEvent(time=t_now, kind=APD,
                                                detuning_at_event=float(dw_steps[step]),
                                                trajectory=int(w)))
                    else:
                        tmp = np.zeros_like(collapsed)
                        tmp[0, :] = collapsed[1, :]
                        collapsed = tmp
                        events.append(JumpEvent(time=t_now, kind=SPONTANEOUS,
                                                detuning_at_event=float(dw_steps[step]),
                                                trajectory=int(w)))
                new[w] = collapsed

        nrm = np.einsum("wij,wij->w", new.conj(), new).real
        if np.any(nrm < 1e-300):
            raise IntegrationFault("conditioned state norm underflow "
                                   f"at step {step}")
        psi = new / np.sqrt(nrm)[:, None, None]

        # Photocurrent filter (explicit Euler, stable for dt*tau_d_inv < 1).
        current = current + p.tau_d_inv * (dxi - current * dt)

        if (step + 1) % decimation == 0:
            k = (step + 1) // decimation - 1
            if k < n_samples:
                if rec_n:
                    n_rec[:, k] = n_exp
                if rec_a:
                    a_rec[:, k] = a_theta
                if rec_i:
                    i_rec[:, k] = current
        if (step + 1) in snap_steps:
            t_snap = snap_steps[step + 1]
            flat = psi.reshape(n_traj, -1)
            snapshots[t_snap] = (flat.conj().T @ flat).T / n_traj

    return EnsembleResult(
        times=times, delta_omega=dw_rec, n_cond=n_rec, a_cond=a_rec,
        photocurrent=i_rec, events=events, snapshots=snapshots,
        n_traj=n_traj, seed=seed, dt=dt, decimation=decimation,
        params=p, protocol=protocol)


def run_trajectory(params: SystemParams, protocol, dt: float, seed: int,
                   decimation: int = 10) -> TrajectoryRecord:
    """Single realization (batch of width one) from the ground state."""
    result = run_ensemble(params, protocol, dt, n_traj=1, seed=seed,
                          decimation=decimation)
    return result.trajectory(0)
