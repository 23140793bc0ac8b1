import math

import numpy as np
import pytest

from jccorr.hilbert import UPPER, dressed_state, ground_state
from jccorr.liouville import LiouvillePropagator
from jccorr.params import SystemParams
from jccorr.trajectories import (APD, SPONTANEOUS, ConditionedState,
                                 DetuningScan, FixedDetuning,
                                 PhotocurrentFilter, filter_step, maybe_jump,
                                 protocol_from_dict, run_ensemble,
                                 run_trajectory, sse_step)


def _state(params, vec=None):
    psi = ground_state(params) if vec is None else vec
    return ConditionedState(psi_bar=psi.astype(complex))


# ---------------------------------------------------------------- sse_step

def test_dark_ground_state_stationary(small_params):
    """eps=0 from |G>: the state does not move and dq is pure noise."""
    p = small_params.with_(eps=0.0)
    rng = np.random.default_rng(0)
    state = _state(p)
    dqs = []
    for _ in range(200):
        state, dq = sse_step(state, 1e-3, rng, p)
        dqs.append(dq)
    assert np.allclose(state.psi, ground_state(p))
    dqs = np.array(dqs)
    # mean zero within 3 sigma of the Wiener std
    assert abs(dqs.mean()) < 3 * math.sqrt(1e-3 / 200)


def test_r_one_reverts_to_photodetection(small_params):
    """r=1: the diffusion term vanishes; the step is purely deterministic."""
    p = small_params.with_(r=1.0)
    s1, _ = sse_step(_state(p), 1e-3, np.random.default_rng(1), p)
    s2, _ = sse_step(_state(p), 1e-3, np.random.default_rng(2), p)
    assert np.allclose(s1.psi_bar, s2.psi_bar)


def test_dw_moments():
    """10^5 Wiener increments: mean 0 within 3 sigma, variance dt within 2%."""
    rng = np.random.default_rng(12345)
    dt = 1e-3
    dw = rng.normal(0.0, math.sqrt(dt), 100_000)
    assert abs(dw.mean()) < 3 * math.sqrt(dt / dw.size)
    assert abs(dw.var() - dt) / dt < 0.02


def test_sse_step_guards(small_params):
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError, match="dt"):
        sse_step(_state(small_params), -1e-3, rng, small_params)
    with pytest.raises(ValueError, match="beat"):
        sse_step(_state(small_params), 1.0, rng, small_params)


def test_euler_and_exponential_drift_agree_at_small_dt(small_params):
    p = small_params.with_(r=1.0)    # deterministic
    dt = 1e-5
    se, _ = sse_step(_state(p), dt, np.random.default_rng(0), p,
                     drift="euler")
    sx, _ = sse_step(_state(p), dt, np.random.default_rng(0), p,
                     drift="exponential")
    assert np.max(np.abs(se.psi_bar - sx.psi_bar)) < 1e-8


def test_norm_after_renormalization(small_params):
    rng = np.random.default_rng(3)
    state = _state(small_params)
    for _ in range(50):
        state, _ = sse_step(state, 1e-3, rng, small_params)
        assert abs(state.norm_sq - 1.0) < 1e-10


# --------------------------------------------------------------- maybe_jump

def test_no_photons_no_clicks(small_params):
    p = small_params.with_(eps=0.0)
    rng = np.random.default_rng(7)
    state = _state(p)
    for _ in range(500):
        assert maybe_jump(state, 1e-3, rng, p) is None


def test_apd_collapse_from_dressed_state(small_params):
    """a |1,U> = |->|0>/sqrt(2): the photon escape from the first couplet
    returns the system to its ground state (single matrix-application
    oracle)."""
    p = small_params.with_(gamma=0.0)   # isolate the APD channel
    ds = dressed_state(1, UPPER, p)
    rng = np.random.default_rng(0)
    hit = None
    for _ in range(2000):
        state = ConditionedState(psi_bar=ds.vector.copy())
        hit = maybe_jump(state, 0.05, rng, p)
        if hit is not None:
            break
    assert hit is not None and hit.kind == APD
    expected = np.zeros(p.dim, dtype=complex)
    expected[0] = 1.0    # |->|0> = |G>
    assert np.allclose(state.psi_bar, expected)


def test_jump_probability_guard(small_params):
    ds = dressed_state(1, UPPER, small_params)
    state = ConditionedState(psi_bar=ds.vector.copy())
    with pytest.raises(ValueError, match="jump probability"):
        maybe_jump(state, 0.5, np.random.default_rng(0), small_params)


# -------------------------------------------------------------- filter_step

def test_filter_step_response():
    """Constant drive dq = c dt settles at I = c."""
    f = PhotocurrentFilter(tau_d_inv=50.0)
    dt, c = 1e-3, 4.0
    for _ in range(5000):
        f = filter_step(f, c * dt, dt)
    assert f.current == pytest.approx(c, rel=1e-3)


def test_filter_decay():
    f = PhotocurrentFilter(tau_d_inv=10.0, current=1.0)
    dt = 1e-3
    for _ in range(1000):
        f = filter_step(f, 0.0, dt)
    # exact discrete decay (1 - tau_d_inv dt)^N, close to exp(-10)
    assert f.current == pytest.approx((1.0 - 10.0 * dt) ** 1000, rel=1e-12)
    assert f.current == pytest.approx(math.exp(-10.0), rel=0.06)


def test_filter_white_noise_variance():
    """Single-pole filter of white noise: Var(I) = tau_d_inv / 2."""
    rng = np.random.default_rng(42)
    tau_d_inv, dt, n = 20.0, 1e-3, 1_000_000
    dq = rng.normal(0.0, math.sqrt(dt), n)
    current = 0.0
    out = np.empty(n)
    for i in range(n):
        current += tau_d_inv * (dq[i] - current * dt)
        out[i] = current
    assert out[10_000:].var() == pytest.approx(tau_d_inv / 2.0, rel=0.05)


def test_filter_stability_guard():
    with pytest.raises(ValueError, match="stability"):
        filter_step(PhotocurrentFilter(tau_d_inv=10.0), 0.0, 0.2)


# ----------------------------------------------------------- trajectories

def test_bit_exact_replay(small_params):
    proto = FixedDetuning(delta_omega=20.0, duration=1.0)
    r1 = run_trajectory(small_params, proto, dt=1e-3, seed=99)
    r2 = run_trajectory(small_params, proto, dt=1e-3, seed=99)
    assert np.array_equal(r1.n_cond, r2.n_cond)
    assert np.array_equal(r1.a_cond, r2.a_cond)
    assert np.array_equal(r1.photocurrent, r2.photocurrent)
    assert [(e.time, e.kind) for e in r1.events] == \
           [(e.time, e.kind) for e in r2.events]


def test_different_seeds_differ(small_params):
    proto = FixedDetuning(delta_omega=20.0, duration=1.0)
    r1 = run_trajectory(small_params, proto, dt=1e-3, seed=1)
    r2 = run_trajectory(small_params, proto, dt=1e-3, seed=2)
    assert not np.array_equal(r1.photocurrent, r2.photocurrent)


def test_event_times_increasing(small_params):
    proto = FixedDetuning(delta_omega=20.0, duration=5.0)
    rec = run_trajectory(small_params, proto, dt=1e-3, seed=4)
    times = [e.time for e in rec.events]
    assert times == sorted(times)
    assert all(0 < t <= 5.0 for t in times)


def test_no_drive_no_jumps(small_params):
    p = small_params.with_(eps=0.0)
    proto = FixedDetuning(delta_omega=20.0, duration=5.0)
    rec = run_trajectory(p, proto, dt=1e-3, seed=5)
    assert rec.events == []
    assert np.allclose(rec.n_cond, 0.0, atol=1e-12)


def test_record_save_roundtrip(small_params, tmp_path):
    import json
    proto = DetuningScan(start=22.0, stop=18.0, duration=1.0)
    rec = run_trajectory(small_params, proto, dt=1e-3, seed=6)
    stem = tmp_path / "run"
    rec.save(stem)
    with np.load(stem.with_suffix(".npz")) as data:
        assert np.array_equal(data["photocurrent"], rec.photocurrent)
        assert data["event_times"].size == len(rec.events)
    sidecar = json.loads(stem.with_suffix(".json").read_text())
    assert sidecar["seed"] == 6
    assert sidecar["protocol"]["type"] == "scan"
    assert sidecar["params"]["g"] == small_params.g
    csv_lines = stem.with_suffix(".csv").read_text().splitlines()
    assert csv_lines[0] == "t,delta_omega,n_cond,A_cond,I_theta"
    assert len(csv_lines) == 1 + rec.times.size


def test_protocol_roundtrip():
    scan = DetuningScan(start=220.0, stop=132.0, duration=25.0)
    assert protocol_from_dict(scan.to_dict()) == scan
    fixed = FixedDetuning(delta_omega=200.0, duration=5.0)
    assert protocol_from_dict(fixed.to_dict()) == fixed
    with pytest.raises(ValueError):
        protocol_from_dict({"type": "wobble"})


def test_scan_detuning_profile():
    scan = DetuningScan(start=220.0, stop=132.0, duration=25.0)
    t = np.array([0.0, 12.5, 25.0, 30.0])
    assert np.allclose(scan.detuning_at(t), [220.0, 176.0, 132.0, 132.0])


# ---------------------------------------------------- ensemble consistency

def _trace_distance(a, b):
    ev = np.linalg.eigvalsh(a - b)
    return 0.5 * np.sum(np.abs(ev))


@pytest.mark.slow
@pytest.mark.parametrize("r,theta", [(0.0, 0.0), (0.5, math.pi / 4),
                                     (1.0, 0.0)])
def test_unraveling_matches_master_equation(small_params, r, theta):
    """Mean conditioned projector vs. master-equation propagation, across
    detection splits (r=0 pure homodyne, r=1 pure counting)."""
    p = small_params.with_(r=r, theta=theta)
    proto = FixedDetuning(delta_omega=p.delta_omega, duration=1.0)
    res = run_ensemble(p, proto, dt=1e-3, n_traj=2000, seed=21,
                       snapshot_times=(1.0,), record=())
    prop = LiouvillePropagator(p)
    rho0 = np.zeros((p.dim, p.dim), dtype=complex)
    rho0[0, 0] = 1.0
    assert _trace_distance(prop.propagate(rho0, 1.0),
                           res.snapshots[1.0]) < 0.02


@pytest.mark.slow
def test_jump_rates_match_steady_state(small_params):
    """Long-run click rates approach 2 kappa r <n>_ss and gamma <s+s->_ss."""
    p = small_params
    proto = FixedDetuning(delta_omega=p.delta_omega, duration=40.0)
    res = run_ensemble(p, proto, dt=1e-3, n_traj=60, seed=8, record=())
    prop = LiouvillePropagator(p)
    rho = prop.steady_state()
    from jccorr.hilbert import build_operators
    ops = build_operators(p)
    n_ss = np.trace(ops["a_dagger"] @ ops["a"] @ rho).real
    s_ss = np.trace(ops["sigma_plus"] @ ops["sigma_minus"] @ rho).real
    t_obs = 30.0   # discard the transient
    horizon = 60 * t_obs
    n_apd = sum(1 for e in res.events if e.kind == APD and e.time > 10.0)
    n_spon = sum(1 for e in res.events if e.kind == SPONTANEOUS
                 and e.time > 10.0)
    for count, rate in ((n_apd, 2 * p.kappa * p.r * n_ss),
                        (n_spon, p.gamma * s_ss)):
        expected = rate * horizon
        assert abs(count - expected) < 3.5 * math.sqrt(expected)


@pytest.mark.slow
def test_dt_halving_weak_convergence(small_params):
    """Halving dt moves ensemble means by less than the sampling error."""
    p = small_params
    proto = FixedDetuning(delta_omega=p.delta_omega, duration=2.0)
    means = {}
    for dt in (1e-3, 5e-4):
        res = run_ensemble(p, proto, dt=dt, n_traj=1200, seed=31,
                           snapshot_times=(2.0,), record=())
        nf = p.n_fock
        n_op = np.kron(np.eye(2), np.diag(np.arange(nf, dtype=float)))
        means[dt] = np.trace(n_op @ res.snapshots[2.0]).real
    # photon-number sampling std ~ sqrt(<n^2>)/sqrt(W) ~ 0.02 here
    assert abs(means[1e-3] - means[5e-4]) < 0.03
