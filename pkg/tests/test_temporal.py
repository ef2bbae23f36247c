import io
import types

import numpy as np
import pytest

import nlsqlab as nl
from nlsqlab.errors import (AmbiguityError, DegeneratePoleError, DimensionError,
                            InvalidInputError, TruncationError)

import oracles

PHASES = tuple(np.deg2rad([0, 30, 60, 90, 120, 150]))

#: inner product (and its square, which mode_overlap reports) of the
#: three-cavity packet with the bare single-pole packet at the default
#: bandwidths and grid (regression values)
COMPOSITE_VS_SINGLE_POLE_INNER = 0.7014784321527746
COMPOSITE_VS_SINGLE_POLE_SQ = 0.4920719907755148


def default_composite():
    return nl.composite_mode(nl.default_gammas(), 0.0, nl.default_grid())


# ---------------------------------------------------------------------------
# wave packets
# ---------------------------------------------------------------------------

def test_single_pole_normalization_and_shape():
    g = 4e8
    t = nl.default_grid()
    m = nl.single_pole_mode(g, 0.0, t)
    assert np.sum(m.samples ** 2) * m.dt == pytest.approx(1.0, abs=1e-9)
    assert np.all(m.samples[t > 0] == 0.0)
    i0 = np.argmin(np.abs(t - 0.0))
    i1 = np.argmin(np.abs(t - (-2.0 / g)))
    assert m.samples[i1] / m.samples[i0] == pytest.approx(np.exp(-1.0), rel=1e-6)


def test_single_pole_inner_product_closed_form():
    g = 4e8
    t = np.arange(-60e-9, 1e-9, 0.01e-9)  # fine grid for the continuum value
    m1 = nl.single_pole_mode(g, 0.0, t)
    m2 = nl.single_pole_mode(2 * g, 0.0, t)
    inner = float(np.sum(m1.samples * m2.samples) * m1.dt)
    assert inner == pytest.approx(oracles.single_pole_inner_product(g, 2 * g), abs=2e-4)
    assert inner == pytest.approx(2 * np.sqrt(2) / 3, abs=2e-4)
    assert nl.mode_overlap(m1, m2) == pytest.approx(8.0 / 9.0, abs=5e-4)


def test_single_pole_truncation_guard():
    g = 4e8
    short = np.arange(-4e-9, 1e-9, 0.2e-9)  # spans only 1.6/gamma
    with pytest.raises(TruncationError):
        nl.single_pole_mode(g, 0.0, short)


def test_grid_validation():
    with pytest.raises(InvalidInputError):
        nl.single_pole_mode(4e8, 0.0, np.array([0.0, 1e-9, 3e-9]))
    with pytest.raises(InvalidInputError):
        nl.single_pole_mode(-1.0, 0.0, nl.default_grid())


def test_composite_weights_hand_value():
    assert nl.composite_weights((1.0, 2.0, 3.0)) == pytest.approx((0.5, -1.0, 0.5))


def test_composite_mode_weights_invariant():
    m = default_composite()
    g1, g2, g3 = m.decay_rates
    assert m.weights[0] == pytest.approx(1.0 / ((g2 - g1) * (g3 - g1)), rel=1e-12)
    assert m.weights[1] == pytest.approx(1.0 / ((g3 - g2) * (g1 - g2)), rel=1e-12)
    assert m.weights[2] == pytest.approx(1.0 / ((g1 - g3) * (g2 - g3)), rel=1e-12)


def test_composite_repeated_pole_rejected():
    with pytest.raises(DegeneratePoleError):
        nl.composite_mode((4e8, 4e8, 9e8), 0.0, nl.default_grid())
    with pytest.raises(InvalidInputError):
        nl.composite_mode((4e8, 9e8), 0.0, nl.default_grid())


def test_composite_approaches_single_pole_as_filters_widen():
    g1 = 4e8
    t = np.arange(-60e-9, 0.2e-9, 0.01e-9)  # resolve the fast poles
    single = nl.single_pole_mode(g1, 0.0, t)
    overlaps = []
    for scale in (3.0, 10.0, 30.0, 100.0, 300.0):
        comp = nl.composite_mode((g1, scale * g1, 2.1 * scale * g1), 0.0, t)
        overlaps.append(nl.mode_overlap(comp, single))
    assert np.all(np.diff(overlaps) > 0)
    assert overlaps[-1] > 0.99


def test_composite_vs_single_pole_regression_value():
    comp = default_composite()
    single = nl.single_pole_mode(nl.default_gammas()[0], 0.0, comp.t)
    inner = float(np.sum(comp.samples * single.samples) * comp.dt)
    assert inner == pytest.approx(COMPOSITE_VS_SINGLE_POLE_INNER, abs=1e-6)
    assert nl.mode_overlap(comp, single) == pytest.approx(
        COMPOSITE_VS_SINGLE_POLE_SQ, abs=1e-6)


def test_gamma_from_hwhm_convention():
    assert nl.gamma_from_hwhm(33.7e6) == pytest.approx(4 * np.pi * 33.7e6, rel=1e-15)


# ---------------------------------------------------------------------------
# overlaps
# ---------------------------------------------------------------------------

def test_overlap_identity_and_orthogonal():
    m = default_composite()
    assert nl.mode_overlap(m, m) == pytest.approx(1.0, abs=1e-12)
    other = nl.single_pole_mode(nl.default_gammas()[1], 0.0, m.t)
    # Gram-Schmidt the second mode against the first
    inner = np.sum(m.samples * other.samples) * m.dt
    resid = other.samples - inner * m.samples
    ortho = nl.TemporalMode((), (), other.t0, m.t, resid)
    assert nl.mode_overlap(m, ortho) == pytest.approx(0.0, abs=1e-12)


def test_overlap_symmetry_and_bounds():
    rng = np.random.default_rng(0)
    t = nl.default_grid()
    for _ in range(5):
        g_a = rng.uniform(2e8, 2e9, 3)
        g_b = rng.uniform(2e8, 2e9, 3)
        a = nl.composite_mode(g_a, 0.0, t)
        b = nl.composite_mode(g_b, 0.0, t)
        ab, ba = nl.mode_overlap(a, b), nl.mode_overlap(b, a)
        assert ab == pytest.approx(ba, abs=1e-13)
        assert 0.0 <= ab <= 1.0


def test_overlap_grid_mismatch():
    a = nl.single_pole_mode(4e8, 0.0, nl.default_grid())
    b = nl.single_pole_mode(4e8, 0.0, nl.default_grid(frame=100e-9))
    with pytest.raises(DimensionError):
        nl.mode_overlap(a, b)


# ---------------------------------------------------------------------------
# matched filter design
# ---------------------------------------------------------------------------

def test_filter_matches_composite_target():
    target = default_composite()
    filt = nl.design_matched_filter(target, seed=0)
    assert filt.overlap >= 0.97
    assert filt.overlap > 0.9999  # poles land on the analytic optimum
    for pole, gamma in zip(sorted(filt.poles), sorted(nl.default_gammas())):
        assert pole == pytest.approx(gamma / 2.0, rel=1e-3)


def test_filter_matches_single_pole_on_fine_grid():
    g = 4e8
    t = np.arange(-30e-9, 1e-9, 1e-12)
    target = nl.single_pole_mode(g, 0.0, t)
    filt = nl.design_matched_filter(target, seed=0)
    assert filt.overlap > 0.999
    poles = sorted(filt.poles)
    assert poles[0] == pytest.approx(g / 2.0, rel=0.05)
    assert poles[1] > 10 * poles[0]  # the other poles are pushed far out


def test_filter_rejects_other_orders():
    with pytest.raises(InvalidInputError):
        nl.design_matched_filter(default_composite(), order=2)


# ---------------------------------------------------------------------------
# trace simulation
# ---------------------------------------------------------------------------

def test_trace_statistics_vacuum():
    mode = default_composite()
    ts = nl.simulate_traces(nl.vacuum(5), mode, 10000, PHASES, seed=3)
    q = ts.traces @ mode.samples * ts.dt
    bound = 3.0 * 0.5 * np.sqrt(2.0 / ts.n_events)
    assert abs(q.var() - 0.5) < bound


def test_trace_statistics_single_photon():
    mode = default_composite()
    ts = nl.simulate_traces(nl.fock_state(1, 5), mode, 10000, PHASES, seed=4)
    q = ts.traces @ mode.samples * ts.dt
    se = np.sqrt((oracles.x4_diag(1) - 2.25) / ts.n_events)
    assert abs(q.var() - 1.5) < 3.0 * se


def test_trace_determinism_and_roundtrip():
    mode = default_composite()
    blobs = []
    for _ in range(2):
        ts = nl.simulate_traces(nl.fock_state(1, 5), mode, 40, PHASES, seed=9)
        buf = io.BytesIO()
        nl.save_traces(ts, buf)
        blobs.append(buf.getvalue())
    assert blobs[0] == blobs[1]
    assert len(blobs[0]) == 16 + 40 * mode.t.size * 4 + 40 * 8
    back = nl.load_traces(io.BytesIO(blobs[0]))
    assert back.n_events == 40
    assert back.dt == pytest.approx(mode.dt, rel=1e-12)
    assert np.allclose(back.t, mode.t, atol=1e-15)


def test_trace_input_validation():
    mode = default_composite()
    with pytest.raises(InvalidInputError):
        nl.simulate_traces(nl.vacuum(5), mode, 0, PHASES)
    fake = types.SimpleNamespace(samples=mode.samples * 2.0, dt=mode.dt, t=mode.t)
    with pytest.raises(InvalidInputError):
        nl.simulate_traces(nl.vacuum(5), fake, 10, PHASES)


def test_traceset_validation():
    with pytest.raises(DimensionError):
        nl.TraceSet(traces=np.zeros((3, 5)), dt=1e-9, phases=np.zeros(2),
                    t=np.zeros(5))
    with pytest.raises(InvalidInputError):
        nl.TraceSet(traces=np.full((2, 3), np.nan), dt=1e-9, phases=np.zeros(2),
                    t=np.zeros(3))


# ---------------------------------------------------------------------------
# PCA mode estimation
# ---------------------------------------------------------------------------

def test_pca_recovers_composite_mode():
    mode = default_composite()
    ts = nl.simulate_traces(nl.fock_state(1, 5), mode, 10000, PHASES, seed=4)
    est = nl.pca_mode_estimate(ts, window=(-30e-9, 0.0))
    assert nl.mode_overlap(est, mode) >= 0.98
    assert est.samples[np.argmax(np.abs(est.samples))] > 0


def test_pca_vacuum_is_ambiguous():
    mode = default_composite()
    ts = nl.simulate_traces(nl.vacuum(5), mode, 2000, PHASES, seed=5)
    with pytest.raises(AmbiguityError):
        nl.pca_mode_estimate(ts, window=(-30e-9, 0.0))


def test_pca_needs_enough_traces():
    mode = default_composite()
    ts = nl.simulate_traces(nl.fock_state(1, 5), mode, 200, PHASES, seed=6)
    with pytest.raises(InvalidInputError):
        nl.pca_mode_estimate(ts)


def test_pca_single_pole_decay_refit():
    g = nl.default_gammas()[0]
    mode = nl.single_pole_mode(g, 0.0, nl.default_grid())
    ts = nl.simulate_traces(nl.fock_state(1, 5), mode, 10000, PHASES, seed=5)
    est = nl.pca_mode_estimate(ts, window=(-30e-9, 0.0))
    mask = (est.t <= 0) & (est.samples > est.samples.max() * 0.2)
    w = est.samples[mask]
    slope = np.polyfit(est.t[mask], np.log(w), 1, w=w)[0]
    assert 2 * slope == pytest.approx(g, rel=0.05)


def test_pca_consistency_with_more_events():
    # shorter frame so the largest run stays cheap
    t = np.arange(-40e-9, 4e-9, 0.2e-9)
    mode = nl.composite_mode(nl.default_gammas(), 0.0, t)
    overlaps = []
    for n_events, seed in ((1000, 0), (10000, 1), (100000, 2)):
        ts = nl.simulate_traces(nl.fock_state(1, 5), mode, n_events, PHASES,
                                seed=seed)
        est = nl.pca_mode_estimate(ts, window=(-30e-9, 0.0))
        overlaps.append(nl.mode_overlap(est, mode))
    assert np.all(np.diff(overlaps) > 0)
    assert overlaps[-1] > 0.998


# ---------------------------------------------------------------------------
# real-time versus postprocessing
# ---------------------------------------------------------------------------

def test_identical_weighting_gives_unit_correlation():
    mode = default_composite()
    ts = nl.simulate_traces(nl.vacuum(5), mode, 300, PHASES, seed=7)
    corr = nl.realtime_vs_postprocess(ts, mode, mode)
    for r in corr.values():
        assert r == pytest.approx(1.0, abs=1e-12)


def test_designed_filter_correlations_high():
    mode = default_composite()
    filt = nl.design_matched_filter(mode, seed=0)
    ts = nl.simulate_traces(nl.fock_state(1, 5), mode, 10000, PHASES, seed=4)
    corr = nl.realtime_vs_postprocess(ts, filt, mode)
    assert len(corr) == len(PHASES)
    for r in corr.values():
        assert r >= 0.98


def test_vacuum_correlation_equals_weighting_overlap():
    # on vacuum traces the correlation equals the amplitude inner product
    mode = default_composite()
    rng = np.random.default_rng(12)
    raw = rng.normal(size=mode.t.size) * np.exp(-np.abs(mode.t) / 40e-9)
    weight = nl.TemporalMode((), (), mode.t[-1], mode.t, raw)
    inner = float(np.sum(weight.samples * mode.samples) * mode.dt)
    ts = nl.simulate_traces(nl.vacuum(5), mode, 20000, PHASES, seed=8)
    corr = nl.realtime_vs_postprocess(ts, weight, mode)
    se = 1.0 / np.sqrt(ts.n_events / len(PHASES))
    for r in corr.values():
        assert r == pytest.approx(inner, abs=3.5 * se)


def test_correlation_needs_populated_phase_bins():
    mode = default_composite()
    ts = nl.simulate_traces(nl.vacuum(5), mode, 3, [0.0, 0.5, 1.0], seed=9)
    with pytest.raises(InvalidInputError):
        nl.realtime_vs_postprocess(ts, mode, mode)


# ---------------------------------------------------------------------------
# end-to-end: traces -> quadratures -> reconstruction
# ---------------------------------------------------------------------------

def test_traces_feed_tomography_roundtrip():
    truth = nl.rho_theta_phi_L(
        nl.GenerationParams(theta=1.09, phi=3 * np.pi / 2, loss=0.25), 5)
    mode = default_composite()
    ts = nl.simulate_traces(truth, mode, 12000, PHASES, seed=10)
    q = ts.traces @ mode.samples * ts.dt
    ds = nl.TomographyDataset(phases=ts.phases, values=q)
    res = nl.mle_reconstruct(ds, dim=5)
    assert nl.fidelity(res.state, truth) >= 0.99


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def test_mode_csv_format():
    m = default_composite()
    buf = io.StringIO()
    nl.mode_to_csv(m, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t_ns,amplitude"
    assert len(lines) == m.t.size + 1
    t0, a0 = map(float, lines[1].split(","))
    assert t0 == pytest.approx(m.t[0] * 1e9)
    assert a0 == pytest.approx(m.samples[0])
