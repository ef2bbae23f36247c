"""Truncated-Fock-basis states, quadrature operators, channels and phase space.

Conventions used throughout the package: the quadratures satisfy
``[x, p] = i`` and the vacuum has ``Var(x) = Var(p) = 1/2``, i.e.
``x = (a + a^dag)/sqrt(2)`` and ``p = (a - a^dag)/(i sqrt(2))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DimensionError, InvalidInputError, NumericalError

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10

#: Default photon-number cutoff (basis size) for generic states.
DEFAULT_DIM = 20
#: Minimum cutoff for which fourth powers of x are exact on 0/1-photon states.
MIN_TWO_LEVEL_DIM = 6


def _square_complex(matrix, dim: int) -> np.ndarray:
    arr = np.asarray(matrix, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    if arr.shape[0] != dim:
        raise DimensionError(f"matrix shape {arr.shape} does not match dim={dim}")
    if not np.all(np.isfinite(arr.view(float))):
        raise InvalidInputError("matrix contains non-finite entries")
    return arr


@dataclass(frozen=True)
class QuantumState:
    """Density matrix on the truncated number basis {|0>, ..., |dim-1>}.

    The constructor enforces hermiticity, unit trace and positive
    semidefiniteness (up to small numerical tolerances); instances are
    immutable and safe to share.
    """

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        mat = _square_complex(self.matrix, self.dim).copy()
        herm_defect = np.abs(mat - mat.conj().T).max()
        if herm_defect > HERMITICITY_TOL:
            raise InvalidInputError(f"matrix not Hermitian (defect {herm_defect:.2e})")
        trace_defect = abs(mat.trace() - 1.0)
        if trace_defect > TRACE_TOL:
            raise InvalidInputError(f"trace differs from 1 by {trace_defect:.2e}")
        lowest = np.linalg.eigvalsh((mat + mat.conj().T) / 2.0)[0]
        if lowest < -PSD_TOL:
            raise InvalidInputError(f"matrix not PSD (lowest eigenvalue {lowest:.2e})")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def __repr__(self):  # keep reprs short; the matrix can be large
        return f"QuantumState(dim={self.dim})"


@dataclass(frozen=True)
class FockOperator:
    """A dim x dim operator in the number basis."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        mat = _square_complex(self.matrix, self.dim).copy()
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        return bool(np.abs(self.matrix - self.matrix.conj().T).max() <= tol)

    def __repr__(self):
        return f"FockOperator(dim={self.dim})"


def make_superposition(coeffs, dim: int) -> QuantumState:
    """Pure state |psi><psi| with psi proportional to sum_k coeffs[k] |k>."""
    c = np.asarray(coeffs, dtype=complex).ravel()
    if c.size == 0 or not np.all(np.isfinite(c.view(float))):
        raise InvalidInputError("coefficient vector must be nonempty and finite")
    if c.size > dim:
        raise DimensionError(
            f"need dim > max photon number: got {c.size - 1} photons at dim={dim}"
        )
    norm = np.linalg.norm(c)
    if norm == 0.0:
        raise InvalidInputError("all-zero coefficient vector")
    psi = np.zeros(dim, dtype=complex)
    psi[: c.size] = c / norm
    return QuantumState(dim, np.outer(psi, psi.conj()))


def vacuum(dim: int = DEFAULT_DIM) -> QuantumState:
    return make_superposition([1.0], dim)


def fock_state(n: int, dim: int = DEFAULT_DIM) -> QuantumState:
    """Number state |n><n|."""
    if n < 0:
        raise InvalidInputError("photon number must be nonnegative")
    coeffs = np.zeros(n + 1, dtype=complex)
    coeffs[n] = 1.0
    return make_superposition(coeffs, dim)


def coherent_state(alpha: complex, dim: int = DEFAULT_DIM) -> QuantumState:
    """Coherent state truncated at the cutoff (renormalized)."""
    n = np.arange(dim)
    with np.errstate(divide="ignore"):
        logmag = n * np.log(np.abs(alpha)) if alpha != 0 else np.where(n == 0, 0.0, -np.inf)
    amps = np.exp(logmag - gammaln(n + 1) / 2.0) * np.exp(1j * n * np.angle(alpha))
    return make_superposition(amps, dim)


def squeezed_vacuum(r: float, dim: int) -> QuantumState:
    """Squeezed vacuum with Var(x) = exp(-2r)/2, truncated and renormalized."""
    n_pairs = np.arange((dim + 1) // 2)
    th = np.tanh(r)
    with np.errstate(divide="ignore"):
        logmag = n_pairs * np.log(np.abs(th)) if th != 0 else np.where(n_pairs == 0, 0.0, -np.inf)
    logmag = logmag + 0.5 * gammaln(2 * n_pairs + 1) - n_pairs * np.log(2.0) - gammaln(n_pairs + 1)
    amps = np.zeros(dim)
    amps[2 * n_pairs] = np.sign(-th) ** n_pairs * np.exp(logmag)
    return make_superposition(amps, dim)


def quadrature_ops(dim: int) -> tuple[FockOperator, FockOperator]:
    """Quadrature pair (x, p) with matrix elements x[n, n+1] = sqrt((n+1)/2)."""
    if dim < 2:
        raise DimensionError("quadrature operators need dim >= 2")
    a = np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)
    x = (a + a.conj().T) / np.sqrt(2.0)
    p = (a - a.conj().T) / (1j * np.sqrt(2.0))
    return FockOperator(dim, x), FockOperator(dim, p)


def moment(state: QuantumState, op: FockOperator):
    """Tr(op * rho); real for Hermitian operators, complex otherwise."""
    if state.dim != op.dim:
        raise DimensionError(f"state dim {state.dim} != operator dim {op.dim}")
    value = np.einsum("ij,ji->", op.matrix, state.matrix)
    if op.is_hermitian():
        if abs(value.imag) > 1e-10:
            raise NumericalError(f"Hermitian expectation came out complex: {value!r}")
        return float(value.real)
    return complex(value)


def apply_loss(state: QuantumState, loss: float) -> QuantumState:
    """Pure-loss channel: beamsplitter of transmissivity 1-loss against vacuum.

    Exact Kraus-operator sum in the number basis (dim Kraus terms), so the
    result is deterministic and trace preserving to machine precision.
    """
    if not 0.0 <= loss <= 1.0:
        raise InvalidInputError(f"loss fraction must lie in [0, 1], got {loss}")
    dim = state.dim
    eta = 1.0 - loss
    lg = gammaln(np.arange(dim) + 1.0)
    rho = state.matrix
    out = np.zeros_like(rho)
    for k in range(dim):
        ns = np.arange(k, dim)
        comb = np.exp(lg[ns] - lg[ns - k] - lg[k])
        weight = np.sqrt(comb * np.power(eta, (ns - k).astype(float)) * np.power(loss, float(k)))
        out[: dim - k, : dim - k] += np.outer(weight, weight) * rho[k:, k:]
    return QuantumState(dim, out)


# ---------------------------------------------------------------------------
# displacement and Wigner function
# ---------------------------------------------------------------------------


def _displacement_tensor(dim: int, alphas: np.ndarray) -> np.ndarray:
    """Matrix elements <m|D(alpha)|n> for a batch of displacements.

    Uses the closed form with associated Laguerre polynomials, evaluated by
    the usual stable three-term recurrence in n.
    """
    alphas = np.asarray(alphas, dtype=complex).ravel()
    npts = alphas.size
    r = np.abs(alphas) ** 2
    env = np.exp(-r / 2.0)
    lg = gammaln(np.arange(dim) + 1.0)
    out = np.zeros((npts, dim, dim), dtype=complex)
    apow = np.ones(npts, dtype=complex)       # alpha**k
    bpow = np.ones(npts, dtype=complex)       # (-conj(alpha))**k
    for k in range(dim):
        lag_prev = np.zeros(npts)
        lag = np.ones(npts)                   # L_0^{(k)}
        for n in range(dim - k):
            if n > 0:
                lag_next = ((2 * n - 1 + k - r) * lag - (n - 1 + k) * lag_prev) / n
                lag_prev, lag = lag, lag_next
            amp = np.exp(0.5 * (lg[n] - lg[n + k])) * env * lag
            out[:, n + k, n] = amp * apow
            out[:, n, n + k] = amp * bpow
        apow = apow * alphas
        bpow = bpow * (-alphas.conj())
    return out


def displacement_matrix(dim: int, alpha: complex) -> FockOperator:
    """Displacement operator D(alpha) truncated at the cutoff."""
    return FockOperator(dim, _displacement_tensor(dim, np.array([alpha]))[0])


def displace(state: QuantumState, alpha: complex) -> QuantumState:
    """Displace a state; <x> shifts by sqrt(2) Re(alpha), <p> by sqrt(2) Im(alpha).

    The truncated displacement leaks population above the cutoff for large
    |alpha|; the output state validation will reject such cases, in which
    case the caller should enlarge the cutoff.
    """
    d = displacement_matrix(state.dim, alpha).matrix
    return QuantumState(state.dim, d @ state.matrix @ d.conj().T)


def squeezing_matrix(dim: int, r: float) -> FockOperator:
    """Squeezing operator with x -> x e^{-r}, p -> p e^{r}, truncated."""
    from scipy.linalg import expm

    a = np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)
    return FockOperator(dim, expm((r / 2.0) * (a @ a - a.conj().T @ a.conj().T)))


def squeeze(state: QuantumState, r: float) -> QuantumState:
    """Squeeze a state: Var(x) scales by e^{-2r} (for r > 0).

    Same truncation caveat as displace(): population near the cutoff leaks,
    and the output validation rejects states the cutoff cannot hold.
    """
    s = squeezing_matrix(state.dim, r).matrix
    return QuantumState(state.dim, s @ state.matrix @ s.conj().T)


def wigner(state: QuantumState, xs, ps) -> np.ndarray:
    """Wigner function W[i, j] = W(xs[i], ps[j]), normalized so that
    the integral over dx dp is 1.

    Evaluated through the displaced-parity form with alpha = (x + ip)/sqrt(2),
    using the operator identity D(alpha) P D(alpha)^dag = D(2 alpha) P: only
    the analytic matrix elements of D(2 alpha) on the state's support enter,
    so no truncated operator product is involved.
    """
    xs = np.asarray(xs, dtype=float).ravel()
    ps = np.asarray(ps, dtype=float).ravel()
    if xs.size == 0 or ps.size == 0:
        raise InvalidInputError("empty phase-space grid")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ps))):
        raise InvalidInputError("phase-space grid must be finite")
    xg, pg = np.meshgrid(xs, ps, indexing="ij")
    alphas = ((xg + 1j * pg) / np.sqrt(2.0)).ravel()
    parity = (-1.0) ** np.arange(state.dim)
    rho = state.matrix
    w = np.empty(alphas.size)
    chunk = 4096
    for lo in range(0, alphas.size, chunk):
        d2 = _displacement_tensor(state.dim, 2.0 * alphas[lo : lo + chunk])
        w[lo : lo + chunk] = np.einsum("mn,pnm,m->p", rho, d2, parity).real
    return (w / np.pi).reshape(xs.size, ps.size)


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2."""
    if a.dim != b.dim:
        raise DimensionError("states live on different cutoffs")
    vals, vecs = np.linalg.eigh(a.matrix)
    vals = np.clip(vals, 0.0, None)
    sq = (vecs * np.sqrt(vals)) @ vecs.conj().T
    m = sq @ b.matrix @ sq
    ev = np.linalg.eigvalsh((m + m.conj().T) / 2.0)
    return float(np.sum(np.sqrt(np.clip(ev, 0.0, None))) ** 2)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def state_to_json(state: QuantumState) -> dict:
    """JSON-ready dict {dim, re, im} with row-major real/imaginary parts."""
    flat = state.matrix.ravel()
    return {
        "dim": int(state.dim),
        "re": [float(v) for v in flat.real],
        "im": [float(v) for v in flat.imag],
    }


def state_from_json(obj: dict) -> QuantumState:
    dim = int(obj["dim"])
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj["im"], dtype=float)
    if re.size != dim * dim or im.size != dim * dim:
        raise InvalidInputError("re/im arrays do not match dim*dim")
    return QuantumState(dim, (re + 1j * im).reshape(dim, dim))


def wigner_to_csv(xs, ps, w, fh) -> None:
    """Write a Wigner field as CSV rows `x,p,w` (header included)."""
    xs = np.asarray(xs, dtype=float).ravel()
    ps = np.asarray(ps, dtype=float).ravel()
    w = np.asarray(w, dtype=float)
    fh.write("x,p,w\n")
    for i, x in enumerate(xs):
        for j, p in enumerate(ps):
            fh.write(f"{float(x)!r},{float(p)!r},{float(w[i, j])!r}\n")
