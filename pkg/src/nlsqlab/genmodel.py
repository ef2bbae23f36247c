"""Heralded 0/1-superposition generation model and its lossy density matrix.

A weakly pumped two-mode squeezer plus a weak displacement on the idler,
followed by an idler photon click, leaves the signal mode (to first order)
in alpha|0> + q|1>.  With optical loss L the state becomes the two-level
mixed state rho(theta, phi, L) handled here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .fock import MIN_TWO_LEVEL_DIM, QuantumState, make_superposition

#: herald() is a first-order model; larger pump/displacement amplitudes fall
#: outside its validity.
PERTURBATIVE_LIMIT = 0.3

#: theta below this leaves the state vacuum-dominated and the loss fit
#: ill-conditioned; theta within this margin of pi makes the state phase
#: insensitive and the phase fit ill-conditioned.
THETA_LOSS_BLIND = 0.2
THETA_PHASE_BLIND = 0.05


@dataclass(frozen=True)
class GenerationParams:
    """Superposition angle/phase, optical loss, and optionally the raw
    squeezing and displacement amplitudes they derive from."""

    theta: float
    phi: float
    loss: float = 0.0
    q: complex | None = None
    alpha: complex | None = None

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise InvalidInputError(f"theta must lie in [0, pi], got {self.theta}")
        if not 0.0 <= self.loss <= 1.0:
            raise InvalidInputError(f"loss must lie in [0, 1], got {self.loss}")
        object.__setattr__(self, "phi", float(self.phi) % (2.0 * math.pi))

    @classmethod
    def from_herald(cls, q: complex, alpha: complex, loss: float = 0.0) -> "GenerationParams":
        """Angle/phase of the heralded pure state: tan(theta/2) = |q|/|alpha|,
        phi = arg(q/alpha)."""
        q = complex(q)
        alpha = complex(alpha)
        if q == 0 and alpha == 0:
            raise InvalidInputError("q and alpha cannot both vanish")
        theta = 2.0 * math.atan2(abs(q), abs(alpha))
        phi = math.atan2((q * np.conj(alpha)).imag, (q * np.conj(alpha)).real) if alpha != 0 else 0.0
        return cls(theta=theta, phi=phi, loss=loss, q=q, alpha=alpha)


def herald(q: complex, alpha: complex, dim: int = MIN_TWO_LEVEL_DIM) -> QuantumState:
    """Signal state after an idler click: normalized alpha|0> + q|1>.

    First-order model; requires |q|, |alpha| below the perturbative limit.
    """
    q = complex(q)
    alpha = complex(alpha)
    if q == 0 and alpha == 0:
        raise InvalidInputError("herald impossible: q and alpha both zero")
    if abs(q) >= PERTURBATIVE_LIMIT or abs(alpha) >= PERTURBATIVE_LIMIT:
        raise InvalidInputError(
            f"|q| and |alpha| must stay below {PERTURBATIVE_LIMIT} for the "
            "first-order herald model"
        )
    return make_superposition([alpha, q], dim)


def rho_theta_phi_L(params: GenerationParams, dim: int = MIN_TWO_LEVEL_DIM) -> QuantumState:
    """Two-level mixed state of the lossy superposition, embedded at the cutoff:

    rho00 = 1 - (1-L) sin^2(theta/2),  rho01 = sin(theta) e^{-i phi} sqrt(1-L) / 2,
    rho11 = (1-L) sin^2(theta/2).
    """
    s2 = math.sin(params.theta / 2.0) ** 2
    eta = 1.0 - params.loss
    mat = np.zeros((dim, dim), dtype=complex)
    mat[0, 0] = 1.0 - eta * s2
    mat[1, 1] = eta * s2
    mat[0, 1] = 0.5 * math.sin(params.theta) * np.exp(-1j * params.phi) * math.sqrt(eta)
    mat[1, 0] = np.conj(mat[0, 1])
    return QuantumState(dim, mat)


@dataclass(frozen=True)
class FitResult:
    phi: float
    loss: float
    residual: float
    phi_reliable: bool
    loss_reliable: bool

    def to_dict(self) -> dict:
        return {
            "phi": float(self.phi),
            "loss": float(self.loss),
            "residual": float(self.residual),
            "phi_reliable": bool(self.phi_reliable),
            "loss_reliable": bool(self.loss_reliable),
        }


def _block_distance_sq(block: np.ndarray, theta: float, phi: float, loss: float) -> float:
    s2 = math.sin(theta / 2.0) ** 2
    eta = 1.0 - loss
    off = 0.5 * math.sin(theta) * math.sqrt(eta) * np.exp(-1j * phi)
    d00 = block[0, 0].real - (1.0 - eta * s2)
    d11 = block[1, 1].real - eta * s2
    doff = block[0, 1] - off
    return d00 ** 2 + d11 ** 2 + 2.0 * abs(doff) ** 2


def fit_phi_L(measured: QuantumState, theta: float) -> FitResult:
    """Least-squares (phi, L) of the two-level model at a known theta.

    Minimizes the Frobenius distance on the 2x2 number-basis block.  The
    optimal phi is analytic (phase of the off-diagonal); L is refined by a
    bounded scalar search.  Fits are flagged unreliable near theta = pi
    (phase-insensitive state) and near theta = 0 (loss-insensitive state).
    """
    if not 0.0 <= theta <= math.pi:
        raise InvalidInputError(f"theta must lie in [0, pi], got {theta}")
    if measured.dim < 2:
        raise InvalidInputError("state must resolve at least the {|0>, |1>} block")
    leak = float(np.trace(measured.matrix[2:, 2:]).real) if measured.dim > 2 else 0.0
    if leak >= 0.1:
        raise InvalidInputError(
            f"population above |1> is {leak:.3f}; the two-level model does not apply"
        )
    block = measured.matrix[:2, :2]

    off = complex(block[0, 1])
    if math.sin(theta) > 1e-12 and abs(off) > 0.0:
        phi = float(-np.angle(off)) % (2.0 * math.pi)
    else:
        phi = 0.0

    from .nlsq import golden_section_minimize

    # The objective is a quartic in sqrt(1-L): bracket on a grid first, then
    # refine, so a secondary shallow minimum cannot mislead the search.
    grid = np.linspace(0.0, 1.0, 101)
    vals = np.array([_block_distance_sq(block, theta, phi, L) for L in grid])
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    loss_opt, f_opt = golden_section_minimize(
        lambda L: _block_distance_sq(block, theta, phi, L), lo, hi, tol=1e-12
    )
    if vals[i] < f_opt:
        loss_opt, f_opt = grid[i], vals[i]
    return FitResult(
        phi=phi,
        loss=float(np.clip(loss_opt, 0.0, 1.0)),
        residual=math.sqrt(max(f_opt, 0.0)),
        phi_reliable=theta <= math.pi - THETA_PHASE_BLIND and theta >= THETA_PHASE_BLIND,
        loss_reliable=theta >= THETA_LOSS_BLIND,
    )


def count_rate_ratio(theta: float) -> float:
    """APD count-rate ratio, displacement beam on versus off, for the pure
    model: (1 + tan^2(theta/2)) / tan^2(theta/2).  Diverges at theta = 0."""
    if not 0.0 <= theta <= math.pi:
        raise InvalidInputError(f"theta must lie in [0, pi], got {theta}")
    s2 = math.sin(theta / 2.0) ** 2
    if s2 == 0.0:
        return math.inf
    return 1.0 / s2


def write_fit_sweep_csv(rows, fh, unwrap: bool = True) -> None:
    """CSV rows `theta_rad,phi_fit,L_fit,residual`; optionally unwrap the
    fitted phase for branch continuity across the sweep."""
    rows = [tuple(map(float, r)) for r in rows]
    phis = [r[1] for r in rows]
    if unwrap and len(phis) > 1:
        phis = list(np.unwrap(phis))
    fh.write("theta_rad,phi_fit,L_fit,residual\n")
    for (theta, _, loss, residual), phi in zip(rows, phis):
        fh.write(f"{theta!r},{float(phi)!r},{loss!r},{residual!r}\n")
