"""Nonlinear quadrature variance, its lambda-optimum, and ancilla optimization.

The noise operator of an order-N phase gate ancilla is
``y = lam * p - (N * kappa / lam**(N-1)) * x**(N-1)``; its variance,
minimized over ``lam > 0`` and compared against the vacuum optimum, measures
how nonlinearly squeezed a state is (ratio < 1, i.e. negative dB).
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from .errors import DimensionError, InvalidInputError, NumericalError
from .fock import QuantumState, apply_loss, make_superposition, quadrature_ops, vacuum

LAMBDA_BOUNDS = (1e-2, 1e2)
LAMBDA_GRID_POINTS = 64
LAMBDA_TOL = 1e-9

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

Moments = namedtuple("Moments", "p p2 xn xn2 sym")


@dataclass(frozen=True)
class NlsqResult:
    """Optimal nonlinear variance of a state at a given gate order/strength."""

    variance_opt: float
    lambda_opt: float
    ratio: float
    db: float
    order: int
    kappa: float

    def __post_init__(self):
        if not self.lambda_opt > 0:
            raise InvalidInputError("lambda_opt must be positive")
        if not self.ratio > 0:
            raise InvalidInputError("ratio must be positive")

    @property
    def squeezed(self) -> bool:
        """True when the state beats every Gaussian state (ratio < 1)."""
        return self.ratio < 1.0

    def to_dict(self) -> dict:
        return {
            "variance_opt": float(self.variance_opt),
            "lambda_opt": float(self.lambda_opt),
            "ratio": float(self.ratio),
            "db": float(self.db),
            "order": int(self.order),
            "kappa": float(self.kappa),
        }


def golden_section_minimize(f, a: float, b: float, tol: float = LAMBDA_TOL,
                            max_iter: int = 400) -> tuple[float, float]:
    """Golden-section search for the minimum of a unimodal f on [a, b]."""
    a, b = (a, b) if a <= b else (b, a)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > tol:
        if it >= max_iter:
            raise NumericalError(
                f"golden-section search did not reach tol={tol} in {max_iter} "
                f"iterations (interval [{a}, {b}])"
            )
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
        it += 1
    x = (a + b) / 2.0
    return x, f(x)


def _validate_order(order: int) -> None:
    if int(order) != order or order < 3:
        raise InvalidInputError(f"gate order must be an integer >= 3, got {order}")


def _min_dim(order: int) -> int:
    return 2 * (order - 1) + 2


@lru_cache(maxsize=128)
def _moment_blocks(dim: int, order: int):
    """dim x dim blocks of p, p^2, x^(N-1), x^(2N-2) and {p, x^(N-1)}/2.

    Built at cutoff dim + 2(N-1) so the blocks give exact moments for any
    state supported on the first dim levels.
    """
    pad = 2 * (order - 1)
    x, p = quadrature_ops(dim + pad)
    xm, pm = x.matrix, p.matrix
    xn = np.linalg.matrix_power(xm, order - 1)
    blocks = (
        pm[:dim, :dim],
        (pm @ pm)[:dim, :dim],
        xn[:dim, :dim],
        (xn @ xn)[:dim, :dim],
        ((pm @ xn + xn @ pm) / 2.0)[:dim, :dim],
    )
    for b in blocks:
        b.setflags(write=False)
    return blocks


def _real_trace(rho: np.ndarray, block: np.ndarray) -> float:
    value = np.einsum("ij,ji->", block, rho)
    return float(value.real)


def noise_moments(state: QuantumState, order: int = 3) -> Moments:
    """First/second moments of p and x^(N-1) entering the noise variance.

    The operator blocks carry 2(N-1) levels of internal headroom, so the
    moments are exact at any state cutoff >= 2.
    """
    _validate_order(order)
    if state.dim < 2:
        raise DimensionError(f"state cutoff {state.dim} too small; need at least 2")
    bp, bp2, bxn, bxn2, bsym = _moment_blocks(state.dim, order)
    rho = state.matrix
    return Moments(
        p=_real_trace(rho, bp),
        p2=_real_trace(rho, bp2),
        xn=_real_trace(rho, bxn),
        xn2=_real_trace(rho, bxn2),
        sym=_real_trace(rho, bsym),
    )


def variance_from_moments(mom: Moments, lam: float, kappa: float, order: int) -> float:
    if not lam > 0:
        raise InvalidInputError(f"lambda must be positive, got {lam}")
    coeff = order * kappa / lam ** (order - 1)
    var_p = mom.p2 - mom.p ** 2
    var_xn = mom.xn2 - mom.xn ** 2
    cov = mom.sym - mom.p * mom.xn
    return lam ** 2 * var_p + coeff ** 2 * var_xn - 2.0 * lam * coeff * cov


def nonlinear_variance(state: QuantumState, lam: float, kappa: float = 1.0,
                       order: int = 3) -> float:
    """Variance of lam*p - (N*kappa/lam^(N-1)) x^(N-1) in the given state."""
    mom = noise_moments(state, order)
    return variance_from_moments(mom, lam, kappa, order)


def _minimize_lambda(mom: Moments, kappa: float, order: int,
                     bounds=LAMBDA_BOUNDS, grid_points: int = LAMBDA_GRID_POINTS,
                     tol: float = LAMBDA_TOL) -> tuple[float, float]:
    """Grid-first bracketing, then golden-section refinement of every local
    minimum found on the grid (the objective can be multimodal)."""
    grid = np.geomspace(bounds[0], bounds[1], grid_points)
    vals = np.array([variance_from_moments(mom, g, kappa, order) for g in grid])
    candidates = []
    for i in range(grid_points):
        left = vals[i - 1] if i > 0 else np.inf
        right = vals[i + 1] if i < grid_points - 1 else np.inf
        if vals[i] <= left and vals[i] <= right:
            candidates.append(i)
    best = (None, np.inf)
    for i in candidates:
        a = grid[max(i - 1, 0)]
        b = grid[min(i + 1, grid_points - 1)]
        lam, val = golden_section_minimize(
            lambda l: variance_from_moments(mom, l, kappa, order), a, b, tol=tol
        )
        if val < best[1]:
            best = (lam, val)
    if best[0] is None or not np.isfinite(best[1]):
        raise NumericalError("lambda optimization failed to locate a minimum")
    return best


_vacuum_cache: dict[tuple[float, int], tuple[float, float]] = {}


def vacuum_optimum(kappa: float = 1.0, order: int = 3) -> tuple[float, float]:
    """(optimal variance, optimizing lambda) of the vacuum at (kappa, order)."""
    key = (float(kappa), int(order))
    if key not in _vacuum_cache:
        mom = noise_moments(vacuum(_min_dim(order)), order)
        lam, val = _minimize_lambda(mom, kappa, order)
        _vacuum_cache[key] = (val, lam)
    return _vacuum_cache[key]


def optimal_nonlinear_variance(state: QuantumState, kappa: float = 1.0,
                               order: int = 3) -> NlsqResult:
    """Minimize the nonlinear variance over lam in [1e-2, 1e2] and report the
    ratio against the vacuum baseline at the same (kappa, order)."""
    mom = noise_moments(state, order)
    lam, val = _minimize_lambda(mom, kappa, order)
    v_vac, _ = vacuum_optimum(kappa, order)
    ratio = val / v_vac
    return NlsqResult(
        variance_opt=val,
        lambda_opt=lam,
        ratio=ratio,
        db=10.0 * math.log10(ratio),
        order=int(order),
        kappa=float(kappa),
    )


def nlsq_db(state: QuantumState, kappa: float = 1.0, order: int = 3) -> float:
    """Nonlinear squeezing in dB; negative iff the state beats all Gaussians."""
    return optimal_nonlinear_variance(state, kappa, order).db


def kappa_rescale(result: NlsqResult, u: float) -> NlsqResult:
    """Result for the rescaled strength kappa' = u^N kappa, without
    re-optimizing: variance scales by u^2, lambda by u, the ratio (and dB)
    are unchanged."""
    if not u > 0:
        raise InvalidInputError(f"scale factor must be positive, got {u}")
    return NlsqResult(
        variance_opt=result.variance_opt * u ** 2,
        lambda_opt=result.lambda_opt * u,
        ratio=result.ratio,
        db=result.db,
        order=result.order,
        kappa=result.kappa * u ** result.order,
    )


# ---------------------------------------------------------------------------
# superposition-coefficient optimization
# ---------------------------------------------------------------------------


def _coeffs_from_params(t: np.ndarray, max_photon: int) -> np.ndarray:
    """Hypersphere angles + relative phases -> unit coefficient vector."""
    angles = t[:max_photon]
    phases = t[max_photon:]
    mags = np.ones(max_photon + 1)
    sin_running = 1.0
    for k in range(max_photon):
        mags[k] = sin_running * np.cos(angles[k])
        sin_running *= np.sin(angles[k])
    mags[max_photon] = sin_running
    c = mags.astype(complex)
    c[1:] *= np.exp(1j * phases)
    return c


def _canonical_coeffs(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    c = c / np.linalg.norm(c)
    pivot = np.flatnonzero(np.abs(c) > 1e-12)
    if pivot.size:
        c = c * np.exp(-1j * np.angle(c[pivot[0]]))
    return c


def optimize_coefficients(max_photon: int, kappa: float = 1.0, order: int = 3,
                          loss: float | None = None, seed: int = 0,
                          starts: int = 32, dim: int | None = None
                          ) -> tuple[np.ndarray, NlsqResult]:
    """Search the unit-norm coefficients c_0..c_M minimizing the NLSQ ratio.

    Multi-start Nelder-Mead over hypersphere angles and relative phases with
    the global phase fixed (c_0 real nonnegative); start points come from a
    PCG64 generator, so a fixed seed reproduces the search exactly.  With
    ``loss`` given, the pure-loss channel is applied before the ratio is
    evaluated.
    """
    _validate_order(order)
    if max_photon < 0:
        raise InvalidInputError("max photon number must be nonnegative")
    if dim is None:
        dim = max(max_photon + 1, _min_dim(order))

    def evaluate(coeffs) -> NlsqResult:
        state = make_superposition(coeffs, dim)
        if loss is not None:
            state = apply_loss(state, loss)
        return optimal_nonlinear_variance(state, kappa, order)

    if max_photon == 0:
        c = np.array([1.0 + 0.0j])
        return c, evaluate(c)

    def objective(t) -> float:
        return evaluate(_coeffs_from_params(np.asarray(t, float), max_photon)).ratio

    rng = np.random.default_rng(seed)
    best_x, best_val = None, np.inf
    for _ in range(starts):
        t0 = np.concatenate([
            rng.uniform(0.0, np.pi / 2.0, max_photon),
            rng.uniform(0.0, 2.0 * np.pi, max_photon),
        ])
        res = minimize(objective, t0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-13,
                                "maxiter": 4000, "maxfev": 6000})
        if np.isfinite(res.fun) and res.fun < best_val:
            best_x, best_val = res.x, float(res.fun)
    if best_x is None:
        raise NumericalError("coefficient optimization failed for every start")
    coeffs = _canonical_coeffs(_coeffs_from_params(best_x, max_photon))
    return coeffs, evaluate(coeffs)


# ---------------------------------------------------------------------------
# theta sweeps (CSV emission)
# ---------------------------------------------------------------------------


def sweep_rows(thetas, phi: float, losses, kappa: float = 1.0, order: int = 3,
               dim: int | None = None) -> list[tuple]:
    """NLSQ of the 0/1-superposition model across theta for each loss value.

    Rows are (theta_rad, phi_rad, loss, ratio, db, lambda_opt).
    """
    from .genmodel import GenerationParams, rho_theta_phi_L

    if dim is None:
        dim = _min_dim(order)
    rows = []
    for loss in losses:
        for theta in thetas:
            params = GenerationParams(theta=float(theta), phi=float(phi), loss=float(loss))
            res = optimal_nonlinear_variance(rho_theta_phi_L(params, dim), kappa, order)
            rows.append((float(theta), float(phi), float(loss),
                         res.ratio, res.db, res.lambda_opt))
    return rows


def write_sweep_csv(rows, fh) -> None:
    fh.write("theta_rad,phi_rad,loss,ratio,db,lambda_opt\n")
    for theta, phi, loss, ratio, db, lam in rows:
        fh.write(f"{float(theta)!r},{float(phi)!r},{float(loss)!r},{float(ratio)!r},{float(db)!r},{float(lam)!r}\n")
