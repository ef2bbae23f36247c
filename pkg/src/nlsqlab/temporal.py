"""Temporal wave packets, matched filters, simulated homodyne traces, and
mode estimation.

Wave packets are one-sided rising exponentials e^{-gamma|t-t0|/2} Theta(t0-t)
and weighted three-pole composites thereof; a third-order low-pass filter
whose time-reversed impulse response overlaps the packet implements the
real-time quadrature readout that digital post-integration would otherwise
provide.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import (AmbiguityError, DegeneratePoleError, DimensionError,
                     InvalidInputError, NumericalError, TruncationError)
from .fock import QuantumState

#: Oscilloscope-like defaults: 5 GS/s over a 200 ns frame centered on the
#: herald (t0 = 0 in frame coordinates).
DEFAULT_DT = 0.2e-9
DEFAULT_FRAME = 200e-9

#: Cavity half-width-half-maximum linewidths (Hz) of the modeled source:
#: the parametric oscillator and two idler filter cavities.
DEFAULT_CAVITY_HWHM_HZ = (33.7e6, 140.1e6, 90.9e6)

MIN_CAPTURED_NORM = 0.999
MIN_PCA_EVENTS = 1000


def gamma_from_hwhm(hwhm_hz: float) -> float:
    """Field decay rate gamma (rad/s) of a cavity quoted by its Lorentzian
    HWHM in Hz.  The packet amplitude decays as gamma/2 = 2*pi*HWHM; this is
    the single place the convention lives."""
    return 4.0 * math.pi * hwhm_hz


def default_gammas() -> tuple[float, float, float]:
    return tuple(gamma_from_hwhm(h) for h in DEFAULT_CAVITY_HWHM_HZ)


def default_grid(frame: float = DEFAULT_FRAME, dt: float = DEFAULT_DT,
                 center: float = 0.0) -> np.ndarray:
    n = int(round(frame / dt)) + 1
    return center + (np.arange(n) - (n - 1) / 2.0) * dt


def _grid_step(t: np.ndarray) -> float:
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise InvalidInputError("time grid must be a 1-D array with >= 2 points")
    steps = np.diff(t)
    dt = steps[0]
    if not np.allclose(steps, dt, rtol=1e-9, atol=0.0):
        raise InvalidInputError("time grid must be uniform")
    return float(dt)


@dataclass(frozen=True)
class TemporalMode:
    """A normalized causal wave packet sampled on a uniform time grid.

    `decay_rates`/`weights` document the analytic pole structure when there
    is one (empty for estimated modes).  Samples vanish for t > t0 and
    satisfy sum(samples^2) * dt = 1.
    """

    decay_rates: tuple
    weights: tuple
    t0: float
    t: np.ndarray
    samples: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        samples = np.asarray(self.samples, dtype=float).copy()
        dt = _grid_step(t)
        if samples.shape != t.shape:
            raise DimensionError("samples and grid must have identical shape")
        if np.any(np.abs(samples[t > self.t0 + dt * 1e-9]) > 0):
            raise InvalidInputError("mode must vanish for t > t0")
        norm = math.sqrt(float(np.sum(samples ** 2)) * dt)
        if norm == 0.0:
            raise InvalidInputError("mode has zero norm on the grid")
        samples /= norm
        t = t.copy()
        t.setflags(write=False)
        samples.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "decay_rates", tuple(float(g) for g in self.decay_rates))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def __repr__(self):
        return (f"TemporalMode(poles={len(self.decay_rates)}, t0={self.t0!r}, "
                f"n={self.t.size})")


def _check_span(gamma_min: float, t0: float, t: np.ndarray) -> None:
    span = t0 - float(t[0])
    captured = 1.0 - math.exp(-gamma_min * span) if span > 0 else 0.0
    if captured < MIN_CAPTURED_NORM:
        raise TruncationError(
            f"grid captures only {captured:.6f} of the packet norm; extend it "
            f"to at least {10.0 / gamma_min:.3e} s before t0"
        )


def single_pole_mode(gamma: float, t0: float, t) -> TemporalMode:
    """Normalized e^{-gamma (t0-t)/2} Theta(t0-t) on the grid."""
    if not gamma > 0:
        raise InvalidInputError(f"decay rate must be positive, got {gamma}")
    t = np.asarray(t, dtype=float)
    _grid_step(t)
    _check_span(gamma, t0, t)
    tau = t0 - t
    samples = np.where(tau >= 0, np.exp(-gamma * np.clip(tau, 0, None) / 2.0), 0.0)
    return TemporalMode((gamma,), (1.0,), t0, t, samples)


def composite_weights(gammas) -> tuple[float, float, float]:
    """c1 = 1/((g2-g1)(g3-g1)) and cyclic permutations."""
    g1, g2, g3 = (float(g) for g in gammas)
    return (
        1.0 / ((g2 - g1) * (g3 - g1)),
        1.0 / ((g3 - g2) * (g1 - g2)),
        1.0 / ((g1 - g3) * (g2 - g3)),
    )


def composite_mode(gammas, t0: float, t) -> TemporalMode:
    """Three-cavity packet: normalized sum of one-sided exponentials with the
    partial-fraction weights of a cascade of three single-pole responses."""
    gammas = tuple(float(g) for g in gammas)
    if len(gammas) != 3:
        raise InvalidInputError("composite mode takes exactly three decay rates")
    if any(not g > 0 for g in gammas):
        raise InvalidInputError("decay rates must be positive")
    for i, a in enumerate(gammas):
        for b in gammas[i + 1:]:
            if abs(a - b) < 1e-9 * max(abs(a), abs(b)):
                raise DegeneratePoleError(f"decay rates must be distinct, got {gammas}")
    t = np.asarray(t, dtype=float)
    _grid_step(t)
    _check_span(min(gammas), t0, t)
    weights = composite_weights(gammas)
    tau = np.clip(t0 - t, 0.0, None)
    samples = np.zeros_like(tau)
    for g, w in zip(gammas, weights):
        samples += w * np.exp(-g * tau / 2.0)
    samples = np.where(t0 - t >= 0, samples, 0.0)
    return TemporalMode(gammas, weights, t0, t, samples)


def mode_overlap(a: TemporalMode, b: TemporalMode) -> float:
    """Squared normalized inner product |<a|b>|^2 of two modes on one grid."""
    if a.t.shape != b.t.shape or not np.allclose(a.t, b.t, rtol=0, atol=1e-15):
        raise DimensionError("modes live on different time grids")
    inner = float(np.sum(a.samples * b.samples) * a.dt)
    return min(inner ** 2, 1.0)


# ---------------------------------------------------------------------------
# matched filter design
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MatchedFilter:
    """Third-order low-pass filter: real poles (rad/s) plus its time-reversed
    impulse response on the target grid and the achieved overlap."""

    poles: tuple[float, float, float]
    response: TemporalMode
    overlap: float


def _response_from_poles(poles, t0: float, t) -> TemporalMode:
    # The time-reversed impulse response of a cascade of three real poles p_n
    # is exactly the composite packet with decay rates 2*p_n.
    return composite_mode(tuple(2.0 * p for p in poles), t0, t)


def design_matched_filter(target: TemporalMode, order: int = 3, seed: int = 0,
                          starts: int = 8) -> MatchedFilter:
    """Pick three real pole frequencies whose time-reversed impulse response
    maximizes the overlap with the target packet.

    Derivative-free multi-start search over strictly ordered poles (so the
    confluent case cannot occur).  Only third-order filters are supported.
    """
    if order != 3:
        raise InvalidInputError("only third-order filters are supported")
    t = target.t
    t0 = target.t0
    tau_mean = float(np.sum((t0 - t) * target.samples ** 2) * target.dt)
    rate0 = 1.0 / max(tau_mean, 10.0 * target.dt)  # effective power decay rate

    def poles_from(u):
        p1 = math.exp(u[0])
        p2 = p1 * (1.0 + math.exp(u[1]))
        p3 = p2 * (1.0 + math.exp(u[2]))
        return p1, p2, p3

    def objective(u):
        try:
            resp = _response_from_poles(poles_from(u), t0, t)
        except (TruncationError, DegeneratePoleError, OverflowError):
            return 1.0
        return -mode_overlap(resp, target)

    rng = np.random.default_rng(seed)
    u0 = np.array([math.log(rate0 / 2.0), math.log(3.0), math.log(2.0)])
    starts_list = [u0, u0 + np.array([0.0, 1.5, 1.5]), u0 + np.array([-0.5, 0.5, 2.0])]
    while len(starts_list) < starts:
        starts_list.append(u0 + rng.normal(0.0, 1.0, 3))
    best_u, best_val = None, np.inf
    for u_start in starts_list[:max(starts, 3)]:
        res = minimize(objective, u_start, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14,
                                "maxiter": 4000, "maxfev": 6000})
        if np.isfinite(res.fun) and res.fun < best_val:
            best_u, best_val = res.x, float(res.fun)
    if best_u is None or best_val >= 0.0:
        raise NumericalError("filter design failed to improve on any start")
    poles = poles_from(best_u)
    response = _response_from_poles(poles, t0, t)
    return MatchedFilter(poles=poles, response=response,
                         overlap=mode_overlap(response, target))


# ---------------------------------------------------------------------------
# trace simulation, PCA mode estimation, and the two readout paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceSet:
    """Simulated continuous homodyne records, one row per heralding event."""

    traces: np.ndarray
    dt: float
    phases: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        traces = np.asarray(self.traces, dtype=float)
        phases = np.asarray(self.phases, dtype=float).ravel()
        t = np.asarray(self.t, dtype=float).ravel()
        if traces.ndim != 2:
            raise InvalidInputError("traces must be a 2-D array")
        if phases.size != traces.shape[0]:
            raise DimensionError("one LO phase per trace required")
        if t.size != traces.shape[1]:
            raise DimensionError("time grid must match the trace length")
        if not np.all(np.isfinite(traces)):
            raise InvalidInputError("traces contain non-finite values")
        for arr in (traces, phases, t):
            arr.setflags(write=False)
        object.__setattr__(self, "traces", traces)
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "t", t)

    @property
    def n_events(self) -> int:
        return self.traces.shape[0]

    @property
    def n_bins(self) -> int:
        return self.traces.shape[1]

    def __repr__(self):
        return f"TraceSet(n_events={self.n_events}, n_bins={self.n_bins})"


def simulate_traces(state: QuantumState, mode: TemporalMode, n_events: int,
                    phases, seed: int = 0) -> TraceSet:
    """Homodyne records q*f(t) + vacuum noise in the orthogonal complement.

    q is drawn from the state's quadrature distribution at each trace's LO
    phase; the additive noise is white with the vacuum variance per mode on
    the grid, with its component along f removed.  Integrating a trace
    against f therefore returns exactly the drawn quadrature sample.
    """
    from .tomo import _cdf_table

    if n_events < 1:
        raise InvalidInputError("need at least one event")
    f = mode.samples
    dt = mode.dt
    norm = float(np.sum(f ** 2) * dt)
    if abs(norm - 1.0) > 1e-6:
        raise InvalidInputError("mode must be normalized on its grid")
    phase_per_event = np.resize(np.asarray(phases, dtype=float), n_events)
    ss = np.random.SeedSequence(seed)
    rng_q, rng_noise = (np.random.default_rng(c) for c in ss.spawn(2))

    u = rng_q.random(n_events)
    q = np.empty(n_events)
    for phase in np.unique(phase_per_event):
        idx = np.flatnonzero(phase_per_event == phase)
        x_grid, cdf = _cdf_table(state, float(phase))
        q[idx] = np.interp(u[idx], cdf, x_grid)

    noise = rng_noise.standard_normal((n_events, f.size)) / math.sqrt(2.0 * dt)
    noise -= np.outer(noise @ f * dt, f)
    traces = np.outer(q, f) + noise
    return TraceSet(traces=traces, dt=dt, phases=phase_per_event, t=mode.t)


def pca_mode_estimate(traces: TraceSet, window=None) -> TemporalMode:
    """Leading principal component of the trace covariance after subtracting
    the known vacuum floor 1/(2 dt); returned sign-fixed (positive peak) and
    normalized.

    `window = (t_lo, t_hi)` restricts the analysis to bins inside the window
    (estimation error grows with the number of analyzed bins, so localizing
    around the herald helps); outside bins enter the returned mode as zeros.
    """
    if traces.n_events < MIN_PCA_EVENTS:
        raise InvalidInputError(f"need at least {MIN_PCA_EVENTS} traces")
    sel = np.ones(traces.n_bins, dtype=bool)
    if window is not None:
        lo, hi = float(window[0]), float(window[1])
        sel = (traces.t >= lo) & (traces.t <= hi)
        if not np.any(sel):
            raise InvalidInputError("analysis window contains no grid points")
    x = traces.traces[:, sel]
    x = x - x.mean(axis=0)
    cov = (x.T @ x) / traces.n_events
    cov -= np.eye(cov.shape[0]) / (2.0 * traces.dt)
    vals, vecs = np.linalg.eigh(cov)
    mu1, mu2 = vals[-1], vals[-2]
    if mu1 <= 0 or mu1 < 2.0 * max(mu2, 0.0):
        raise AmbiguityError(
            f"leading covariance eigenvalue {mu1:.3e} is not separated from "
            f"the next one {mu2:.3e}; no preferred temporal mode"
        )
    full = np.zeros(traces.n_bins)
    full[sel] = vecs[:, -1]
    if full[np.argmax(np.abs(full))] < 0:
        full = -full
    t0 = float(traces.t[sel][-1])
    return TemporalMode((), (), t0, traces.t, full)


def realtime_vs_postprocess(traces: TraceSet, filt, mode: TemporalMode) -> dict:
    """Pearson correlation, per LO phase, between the digital mode-weighted
    integral and the filtered signal sampled at the herald time."""
    response = filt.response if isinstance(filt, MatchedFilter) else filt
    for m in (response, mode):
        if m.t.shape != traces.t.shape or not np.allclose(m.t, traces.t, rtol=0, atol=1e-15):
            raise DimensionError("filter/mode grids must match the trace grid")
    q_pp = traces.traces @ mode.samples * traces.dt
    q_rt = traces.traces @ response.samples * traces.dt
    out = {}
    for phase in np.unique(traces.phases):
        idx = traces.phases == phase
        if idx.sum() < 2:
            raise InvalidInputError(f"phase bin {phase} has fewer than 2 traces")
        out[float(phase)] = float(np.corrcoef(q_pp[idx], q_rt[idx])[0, 1])
    return out


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<IId")


def save_traces(traces: TraceSet, fh) -> None:
    """Binary layout: header {n_events u32, n_bins u32, dt_ns f64}, then
    row-major float32 samples, then one float64 phase per event.  Frames are
    stored relative to the herald (grid centered on t0 = 0)."""
    fh.write(_HEADER.pack(traces.n_events, traces.n_bins, traces.dt * 1e9))
    fh.write(traces.traces.astype("<f4").tobytes(order="C"))
    fh.write(traces.phases.astype("<f8").tobytes())


def load_traces(fh) -> TraceSet:
    head = fh.read(_HEADER.size)
    if len(head) != _HEADER.size:
        raise InvalidInputError("truncated trace file header")
    n_events, n_bins, dt_ns = _HEADER.unpack(head)
    dt = dt_ns * 1e-9
    payload = np.frombuffer(fh.read(4 * n_events * n_bins), dtype="<f4")
    if payload.size != n_events * n_bins:
        raise InvalidInputError("truncated trace payload")
    phases = np.frombuffer(fh.read(8 * n_events), dtype="<f8")
    if phases.size != n_events:
        raise InvalidInputError("truncated phase block")
    t = (np.arange(n_bins) - (n_bins - 1) / 2.0) * dt
    return TraceSet(traces=payload.astype(float).reshape(n_events, n_bins),
                    dt=dt, phases=phases.astype(float), t=t)


def mode_to_csv(mode: TemporalMode, fh) -> None:
    fh.write("t_ns,amplitude\n")
    for t, a in zip(mode.t, mode.samples):
        fh.write(f"{float(t) * 1e9!r},{float(a)!r}\n")
