"""Homodyne quadrature sampling and iterative maximum-likelihood reconstruction.

Quadrature statistics follow pr(x|theta) = sum_mn rho_mn e^{i(m-n)theta}
psi_m(x) psi_n(x) with oscillator eigenfunctions normalized to a vacuum
variance of 1/2.  Reconstruction uses the standard iterated R*rho*R scheme
on binned data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidInputError
from .fock import QuantumState

DEFAULT_PHASES = tuple(np.deg2rad([0.0, 30.0, 60.0, 90.0, 120.0, 150.0]))
DEFAULT_EVENTS_PER_PHASE = 21000

# MLE discretization: uniform bins with sub-bin midpoint quadrature for the
# projectors, a probability floor against empty-bin blowups, and a relative
# log-likelihood stopping rule.
MLE_SUPPORT = (-6.0, 6.0)
MLE_BINS = 256
MLE_SUBDIV = 8
MLE_PROB_FLOOR = 1e-12
MLE_TOL = 1e-9
MLE_MAX_ITERS = 2000

SAMPLER_SUPPORT = (-8.0, 8.0)
SAMPLER_POINTS = 8192


def oscillator_wavefunctions(dim: int, x) -> np.ndarray:
    """psi_n(x) for n < dim, shape (dim, len(x)); vacuum variance 1/2."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    psi = np.empty((dim, x.size))
    psi[0] = np.pi ** -0.25 * np.exp(-x ** 2 / 2.0)
    if dim > 1:
        psi[1] = np.sqrt(2.0) * x * psi[0]
    for n in range(1, dim - 1):
        psi[n + 1] = np.sqrt(2.0 / (n + 1)) * x * psi[n] - np.sqrt(n / (n + 1)) * psi[n - 1]
    return psi


def _rotated_wavefunctions(dim: int, phase: float, x) -> np.ndarray:
    """v_m(x) = e^{-i m phase} psi_m(x), so pr = v^dag rho v term by term."""
    psi = oscillator_wavefunctions(dim, x)
    return np.exp(-1j * phase * np.arange(dim))[:, None] * psi


def quadrature_pdf(state: QuantumState, phase: float, x):
    """Probability density of a quadrature sample at the given LO phase."""
    scalar = np.isscalar(x)
    v = _rotated_wavefunctions(state.dim, float(phase), x)
    pr = np.einsum("mx,mn,nx->x", v.conj(), state.matrix, v).real
    pr = np.clip(pr, 0.0, None)
    return float(pr[0]) if scalar else pr


@dataclass(frozen=True)
class TomographyDataset:
    """Phase-tagged quadrature records.

    Phases are folded into [0, pi); folding a phase by pi flips the sign of
    its quadrature values.
    """

    phases: np.ndarray
    values: np.ndarray
    seed: int | None = None
    source: str = ""

    def __post_init__(self):
        phases = np.asarray(self.phases, dtype=float).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        if phases.size != values.size:
            raise InvalidInputError("phases and values must have equal length")
        if phases.size and not (np.all(np.isfinite(phases)) and np.all(np.isfinite(values))):
            raise InvalidInputError("dataset contains non-finite entries")
        folded = np.mod(phases, 2.0 * np.pi)
        flip = folded >= np.pi
        folded = np.where(flip, folded - np.pi, folded)
        values = np.where(flip, -values, values)
        folded.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "phases", folded)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    def unique_phases(self) -> np.ndarray:
        return np.unique(self.phases)

    def __repr__(self):
        return f"TomographyDataset(n={len(self)}, phases={len(self.unique_phases())})"


def _cdf_table(state: QuantumState, phase: float):
    x = np.linspace(*SAMPLER_SUPPORT, SAMPLER_POINTS)
    pdf = quadrature_pdf(state, phase, x)
    cdf = np.concatenate([[0.0], np.cumsum((pdf[1:] + pdf[:-1]) / 2.0 * np.diff(x))])
    cdf /= cdf[-1]
    return x, cdf


def sample_values(state: QuantumState, phase: float, n: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws from the quadrature distribution at one phase."""
    x, cdf = _cdf_table(state, phase)
    return np.interp(rng.random(n), cdf, x)


def sample(state: QuantumState, phases=DEFAULT_PHASES,
           n_per_phase: int = DEFAULT_EVENTS_PER_PHASE, seed: int = 0,
           source: str = "sampler") -> TomographyDataset:
    """Draw n_per_phase quadratures at each LO phase; deterministic per seed.

    Each phase consumes an independent child stream of the master seed, so
    per-phase sampling may run in parallel without changing the result.
    """
    if n_per_phase < 1:
        raise InvalidInputError("n_per_phase must be at least 1")
    phases = [float(p) for p in phases]
    children = np.random.SeedSequence(seed).spawn(len(phases))
    all_phases = []
    all_values = []
    for phase, child in zip(phases, children):
        rng = np.random.default_rng(child)
        all_phases.append(np.full(n_per_phase, phase))
        all_values.append(sample_values(state, phase, n_per_phase, rng))
    return TomographyDataset(
        phases=np.concatenate(all_phases),
        values=np.concatenate(all_values),
        seed=seed,
        source=source,
    )


# ---------------------------------------------------------------------------
# maximum-likelihood reconstruction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MleResult:
    state: QuantumState
    iters: int
    loglik: float
    loglik_trace: np.ndarray
    converged: bool
    warnings: tuple[str, ...] = ()

    def report(self) -> dict:
        return {
            "iters": int(self.iters),
            "loglik": float(self.loglik),
            "converged": bool(self.converged),
            "warnings": list(self.warnings),
        }


def _bin_projectors(dim: int, phase: float, edges: np.ndarray, subdiv: int) -> np.ndarray:
    """Integrated projector per bin, midpoint rule with `subdiv` points."""
    n_bins = edges.size - 1
    width = edges[1] - edges[0]
    sub = (np.arange(subdiv) + 0.5) / subdiv
    xs = (edges[:-1, None] + sub[None, :] * width).ravel()
    v = _rotated_wavefunctions(dim, phase, xs)          # (dim, n_bins*subdiv)
    v = v.reshape(dim, n_bins, subdiv)
    pi = np.einsum("mjs,njs->jmn", v, v.conj()) * (width / subdiv)
    return pi


def mle_reconstruct(data: TomographyDataset, dim: int = 5,
                    max_iters: int = MLE_MAX_ITERS, tol: float = MLE_TOL,
                    n_bins: int = MLE_BINS, support=MLE_SUPPORT,
                    subdiv: int = MLE_SUBDIV) -> MleResult:
    """Iterated R*rho*R maximum-likelihood estimate from binned quadratures.

    Iterates rho <- normalize(R(rho) rho R(rho)) with
    R = sum_j f_j / pr_j(rho) * Pi_j until the relative log-likelihood gain
    drops below `tol` or `max_iters` is reached (then flagged, not raised).
    """
    if dim < 2:
        raise DimensionError("reconstruction needs dim >= 2")
    if len(data) == 0:
        raise InvalidInputError("empty dataset")
    edges = np.linspace(support[0], support[1], n_bins + 1)
    phases = data.unique_phases()
    projectors = []
    counts = []
    dropped = 0
    for phase in phases:
        vals = data.values[data.phases == phase]
        inside = vals[(vals >= support[0]) & (vals <= support[1])]
        dropped += vals.size - inside.size
        hist, _ = np.histogram(inside, bins=edges)
        keep = hist > 0
        projectors.append(_bin_projectors(dim, float(phase), edges, subdiv)[keep])
        counts.append(hist[keep].astype(float))
    pi = np.concatenate(projectors, axis=0)
    f = np.concatenate(counts)

    warnings = []
    if dropped:
        warnings.append(f"dropped {dropped} samples outside {support}")

    rho = np.eye(dim, dtype=complex) / dim
    trace = []
    converged = False
    iters = 0
    for iters in range(1, max_iters + 1):
        pr = np.einsum("jmn,nm->j", pi, rho).real
        pr = np.clip(pr, MLE_PROB_FLOOR, None)
        loglik = float(f @ np.log(pr))
        trace.append(loglik)
        r = np.einsum("j,jmn->mn", f / pr, pi)
        rho = r @ rho @ r
        rho = (rho + rho.conj().T) / 2.0
        rho /= rho.trace().real
        if len(trace) > 1:
            gain = trace[-1] - trace[-2]
            if gain < tol * abs(trace[-1]):
                converged = True
                break
    if not converged:
        warnings.append(f"no convergence after {max_iters} iterations")

    eigs = np.linalg.eigvalsh(rho)
    if eigs[0] < 0:  # tiny negative round-off; project back onto PSD cone
        vals, vecs = np.linalg.eigh(rho)
        vals = np.clip(vals, 0.0, None)
        rho = (vecs * vals) @ vecs.conj().T
        rho /= rho.trace().real
    return MleResult(
        state=QuantumState(dim, rho),
        iters=iters,
        loglik=trace[-1],
        loglik_trace=np.asarray(trace),
        converged=converged,
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# bootstrap error bars
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BootstrapErrors:
    db: float
    rho: np.ndarray
    n_resamples: int


def bootstrap_error(data: TomographyDataset, dim: int = 5, n_resamples: int = 50,
                    seed: int = 0, kappa: float = 1.0, order: int = 3,
                    **mle_kwargs) -> BootstrapErrors:
    """Nonparametric bootstrap (stratified per phase) of the reconstruction.

    Returns the standard deviation, across resamples, of the NLSQ dB value
    and of every density-matrix entry (elementwise absolute deviation).
    """
    from .nlsq import nlsq_db

    if n_resamples < 2:
        raise InvalidInputError("need at least 2 resamples")
    rng = np.random.default_rng(seed)
    groups = [np.flatnonzero(data.phases == p) for p in data.unique_phases()]
    dbs = []
    rhos = []
    for _ in range(n_resamples):
        picks = [g[rng.integers(0, g.size, g.size)] for g in groups]
        idx = np.concatenate(picks)
        resampled = TomographyDataset(phases=data.phases[idx], values=data.values[idx])
        result = mle_reconstruct(resampled, dim=dim, **mle_kwargs)
        dbs.append(nlsq_db(result.state, kappa, order))
        rhos.append(result.state.matrix)
    rhos = np.asarray(rhos)
    rho_err = np.sqrt(np.mean(np.abs(rhos - rhos.mean(axis=0)) ** 2, axis=0))
    return BootstrapErrors(db=float(np.std(dbs)), rho=rho_err, n_resamples=n_resamples)


# ---------------------------------------------------------------------------
# dataset serialization
# ---------------------------------------------------------------------------


def write_dataset_csv(data: TomographyDataset, fh) -> None:
    fh.write("phase_deg,quadrature\n")
    for phase, value in zip(data.phases, data.values):
        fh.write(f"{math.degrees(phase)!r},{float(value)!r}\n")


def read_dataset_csv(fh, source: str = "csv") -> TomographyDataset:
    header = fh.readline().strip()
    if header != "phase_deg,quadrature":
        raise InvalidInputError(f"unexpected dataset header {header!r}")
    phases = []
    values = []
    for line in fh:
        line = line.strip()
        if not line:
            continue
        a, b = line.split(",")
        phases.append(math.radians(float(a)))
        values.append(float(b))
    return TomographyDataset(phases=np.asarray(phases), values=np.asarray(values),
                             source=source)
