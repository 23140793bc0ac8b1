"""Start-conditioned photocurrent averaging and beat-revival spectroscopy.

The wave-particle correlator estimates the intensity-field correlation by
averaging the BHD photocurrent over lag windows centered on APD clicks
("starts"):

    h_theta(tau) ~ <I_theta(t + tau)>_starts / [sqrt(8 kappa (1-r)) <A_theta>_ss].

Starts are only counted after a burn-in (the correlation is a steady-state
quantity) and when the full lag window fits inside the record, so the
pre-start branch tau < 0 comes from the same stored record.  The residual
local-oscillator shot noise in the average has variance proportional to
1/N_s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ZeroStarts
from .params import SystemParams
from .series import METHOD_TRAJECTORY, CorrelationSeries
from .trajectories import APD, EnsembleResult, FixedDetuning


class StartConditionedAccumulator:
    """Running lag-window sums of photocurrent keyed to APD starts.

    Starts are distributed round-robin over ``n_buckets`` independent
    sub-accumulators so that subsets of the data (for noise-floor scaling
    checks) can be formed after the fact; merging buckets is associative
    and order-independent.
    """

    def __init__(self, params: SystemParams, t_window: float,
                 dt_sample: float, steady_amp: float,
                 burn_in: float = 10.0, n_buckets: int = 8,
                 amp_tol: float = 1e-9):
        if t_window <= 0 or dt_sample <= 0:
            raise ValueError("t_window and dt_sample must be positive")
        if abs(steady_amp) < amp_tol:
            raise ValueError(f"|<A_theta>_ss| = {abs(steady_amp):.3e} below "
                             f"{amp_tol}; the normalization is undefined")
        self.params = params
        self.t_window = float(t_window)
        self.dt_sample = float(dt_sample)
        self.steady_amp = float(steady_amp)
        self.burn_in = float(burn_in)
        self.n_lags = int(round(t_window / dt_sample))
        self.tau_grid = np.arange(-self.n_lags, self.n_lags + 1) * self.dt_sample
        width = 2 * self.n_lags + 1
        self.sums = np.zeros((n_buckets, width))
        self.sums_amp = np.zeros((n_buckets, width))
        self.counts = np.zeros(n_buckets, dtype=np.int64)
        self._has_amp = False
        self._next_bucket = 0

    @property
    def n_starts(self) -> int:
        return int(self.counts.sum())

    def add_ensemble(self, result: EnsembleResult) -> int:
        """Accumulate every eligible APD start in a batched run.

        Returns the number of starts added.  The run must use a fixed
        detuning (stationarity) and carry a photocurrent record on the same
        sampling grid as the accumulator.
        """
        if not isinstance(result.protocol, FixedDetuning):
            raise ValueError("starts require a fixed-detuning protocol")
        if result.photocurrent is None:
            raise ValueError("ensemble was run without photocurrent records")
        dts = result.dt * result.decimation
        if not math.isclose(dts, self.dt_sample, rel_tol=1e-9):
            raise ValueError(f"record sampling {dts} does not match "
                             f"accumulator grid {self.dt_sample}")
        n_samples = result.times.size
        L = self.n_lags
        added = 0
        use_amp = result.a_cond is not None
        for ev in result.events:
            if ev.kind != APD or ev.time < self.burn_in:
                continue
            k = int(round(ev.time / dts)) - 1
            if k - L < 0 or k + L >= n_samples:
                continue
            b = self._next_bucket
            self.sums[b] += result.photocurrent[ev.trajectory, k - L:k + L + 1]
            if use_amp:
                self.sums_amp[b] += result.a_cond[ev.trajectory, k - L:k + L + 1]
                self._has_amp = True
            self.counts[b] += 1
            self._next_bucket = (b + 1) % self.counts.size
            added += 1
        return added

    def series(self, buckets: slice | None = None) -> CorrelationSeries:
        """Normalized empirical h over the lag grid (optionally a bucket subset).

        ``meta`` reports the number of starts and the measured shot-noise
        floor, estimated as the sample std of the series over the outer
        quarter of the lag window where the true correlation has decayed.
        """
        sel = slice(None) if buckets is None else buckets
        n = int(self.counts[sel].sum())
        if n == 0:
            raise ZeroStarts("no APD starts accumulated")
        mean_i = self.sums[sel].sum(axis=0) / n
        denom = math.sqrt(8.0 * self.params.kappa * (1.0 - self.params.r)) \
            * self.steady_amp
        values = mean_i / denom
        quiet = np.abs(self.tau_grid) >= 0.75 * self.t_window
        floor = float(np.std(values[quiet]))
        return CorrelationSeries(
            tau_grid=self.tau_grid.copy(), values=values,
            method=METHOD_TRAJECTORY, kind="h", theta=self.params.theta,
            params=self.params,
            meta={"n_starts": n, "noise_floor": floor,
                  "burn_in": self.burn_in, "t_window": self.t_window})

    def amplitude_series(self, buckets: slice | None = None) -> CorrelationSeries:
        """Start-conditioned <A_theta>_REC average, normalized by <A_theta>_ss."""
        if not self._has_amp:
            raise ValueError("no quadrature records were accumulated")
        sel = slice(None) if buckets is None else buckets
        n = int(self.counts[sel].sum())
        if n == 0:
            raise ZeroStarts("no APD starts accumulated")
        values = self.sums_amp[sel].sum(axis=0) / n / self.steady_amp
        return CorrelationSeries(
            tau_grid=self.tau_grid.copy(), values=values,
            method=METHOD_TRAJECTORY, kind="h", theta=self.params.theta,
            params=self.params, meta={"n_starts": n, "source": "a_cond"})


def accumulate_starts(results, params: SystemParams, t_window: float,
                      steady_amp: float, burn_in: float = 10.0,
                      n_buckets: int = 8) -> CorrelationSeries:
    """One-shot start-conditioned estimate of h_theta over [-t_window, t_window].

    ``results`` is a single :class:`EnsembleResult` or an iterable of them
    (accumulated in order, merged associatively).
    """
    if isinstance(results, EnsembleResult):
        results = [results]
    results = list(results)
    if not results:
        raise ZeroStarts("no trajectory results supplied")
    dts = results[0].dt * results[0].decimation
    acc = StartConditionedAccumulator(params, t_window, dts, steady_amp,
                                      burn_in=burn_in, n_buckets=n_buckets)
    for res in results:
        acc.add_ensemble(res)
    return acc.series()


@dataclass
class BeatReport:
    """Windowed spectral comparison around a collapse event.

    Frequencies are angular (rad per unit 1/kappa); amplitudes are the Hann-
    windowed single-sided spectral peak within the analysis band.
    """

    event_time: float
    event_kind: str
    dominant_frequency: float
    pre_amplitude: float
    post_amplitude: float
    band: tuple
    meta: dict = field(default_factory=dict)

    @property
    def amplitude_gain(self) -> float:
        return self.post_amplitude / self.pre_amplitude if self.pre_amplitude > 0 \
            else math.inf


def _windowed_peak(signal: np.ndarray, dt_sample: float,
                   band: tuple) -> tuple[float, float]:
    """Dominant angular frequency and amplitude of a detrended segment.

    Hann window, zero-padded FFT, parabolic interpolation of the peak bin.
    Amplitude is calibrated so a pure sinusoid of amplitude A returns A.
    """
    seg = np.asarray(signal, dtype=float)
    seg = seg - seg.mean()
    n = seg.size
    win = np.hanning(n)
    nfft = max(4096, 4 * n)
    spec = np.abs(np.fft.rfft(seg * win, nfft)) / (win.sum() / 2.0)
    omega = 2.0 * np.pi * np.fft.rfftfreq(nfft, d=dt_sample)
    lo, hi = band
    sel = (omega >= lo) & (omega <= hi)
    if not np.any(sel):
        raise ValueError("analysis band is empty at this sampling rate")
    idx = np.flatnonzero(sel)
    k = idx[np.argmax(spec[idx])]
    # Parabolic refinement of the peak location.
    if 0 < k < spec.size - 1:
        a, b, c = spec[k - 1], spec[k], spec[k + 1]
        denom = a - 2 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
        shift = float(np.clip(shift, -0.5, 0.5))
    else:
        shift = 0.0
    dom = float(omega[k] + shift * (omega[1] - omega[0]))
    return dom, float(spec[k])


def beat_revival_detector(times: np.ndarray, signal: np.ndarray, event,
                          window: float = 0.25,
                          band: tuple | None = None) -> BeatReport:
    """Spectral amplitude of a conditioned record before vs after a collapse.

    ``signal`` is a conditioned expectation record (photon number or
    quadrature) on the ``times`` grid; ``event`` is a JumpEvent (or anything
    with ``time`` and ``kind``).  The spectrum of the ``window``-long
    segments immediately before and after the event is compared inside
    ``band`` (angular frequencies); the default band is the half-decade
    around the quantum beat inferred from nothing — callers should pass
    (0.8*2g, 1.2*2g) or similar.
    """
    times = np.asarray(times, dtype=float)
    signal = np.asarray(signal, dtype=float)
    if times.size != signal.size:
        raise ValueError("times and signal must have equal length")
    dt_sample = float(times[1] - times[0])
    if band is None:
        band = (2.0 * np.pi / window, np.pi / dt_sample)
    t_e = float(event.time)
    if t_e - window < times[0] or t_e + window > times[-1]:
        raise ValueError("event window clipped by the record boundary")
    n_w = int(round(window / dt_sample))
    k = int(np.searchsorted(times, t_e))
    pre = signal[k - n_w:k]
    post = signal[k:k + n_w]
    dom_post, amp_post = _windowed_peak(post, dt_sample, band)
    _, amp_pre = _windowed_peak(pre, dt_sample, band)
    return BeatReport(event_time=t_e, event_kind=getattr(event, "kind", "?"),
                      dominant_frequency=dom_post,
                      pre_amplitude=amp_pre, post_amplitude=amp_post,
                      band=(float(band[0]), float(band[1])),
                      meta={"window": window, "dt_sample": dt_sample})
