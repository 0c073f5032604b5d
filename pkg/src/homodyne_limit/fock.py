"""Single-mode truncated Fock space.

States are stored as amplitude arrays in the photon-number basis together with
the norm mass lost to truncation. Operators are dense complex matrices.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import poisson

# Below this, 1 - sum|amps|^2 is rounding noise rather than truncated mass.
ROUNDING_FLOOR = 1e-12

DEFAULT_MAX_DIM = 4096


class TruncationBudgetError(RuntimeError):
    """A requested truncation dimension exceeds the configured hard cap."""


def max_dim() -> int:
    """Hard cap on any single-mode truncation, overridable by ``HD_MAX_DIM``."""
    value = os.environ.get("HD_MAX_DIM")
    if value is None:
        return DEFAULT_MAX_DIM
    return int(value)


def check_budget(dim: int) -> int:
    cap = max_dim()
    if dim > cap:
        raise TruncationBudgetError(
            f"truncation dimension {dim} exceeds budget {cap} (set HD_MAX_DIM to raise it)"
        )
    return dim


def auto_dim(mean_photons: float) -> int:
    """Truncation keeping a Poisson(mean_photons) tail far below 1e-12."""
    mu = max(float(mean_photons), 0.0)
    return int(math.ceil(mu + 10.0 * math.sqrt(mu) + 20.0))


@dataclass(frozen=True)
class FockVector:
    amps: np.ndarray
    trunc_deficit: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.size == 0:
            raise ValueError("FockVector needs at least one amplitude")
        if not np.all(np.isfinite(amps)):
            raise ValueError("non-finite amplitude")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)
        if self.trunc_deficit < 0:
            raise ValueError("trunc_deficit must be nonnegative")

    @property
    def dim(self) -> int:
        return self.amps.size

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def mean_photons(self) -> float:
        n = np.arange(self.dim)
        return float(np.sum(n * np.abs(self.amps) ** 2))

    def support(self, atol: float = 1e-300) -> int:
        """Index of the highest nonzero amplitude (0 for the vacuum)."""
        nz = np.flatnonzero(np.abs(self.amps) > atol)
        return int(nz[-1]) if nz.size else 0

    def padded(self, dim: int) -> np.ndarray:
        if dim < self.dim:
            raise ValueError("cannot pad to a smaller dimension")
        out = np.zeros(dim, dtype=complex)
        out[: self.dim] = self.amps
        return out

    def phase_rotated(self, theta: float) -> "FockVector":
        """The vector exp(-i theta N) applied to this one."""
        phases = np.exp(-1j * theta * np.arange(self.dim))
        return FockVector(self.amps * phases, self.trunc_deficit)


@dataclass(frozen=True)
class HermitianOperator:
    entries: np.ndarray
    tol: float | None = field(default=None, compare=False)

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("HermitianOperator needs a square matrix")
        tol = herm_tol(m.shape[0]) if self.tol is None else self.tol
        # Scale-aware: powers of quadratures have large entries.
        scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
        if np.max(np.abs(m - m.conj().T), initial=0.0) > tol * scale:
            raise ValueError("matrix is not Hermitian within tolerance")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def block(self, n: int) -> np.ndarray:
        """Leading n x n block (the low-Fock block)."""
        return self.entries[:n, :n]

    def expectation(self, state: FockVector) -> float:
        v = state.padded(self.dim) if state.dim < self.dim else state.amps[: self.dim]
        return float(np.vdot(v, self.entries @ v).real)


def herm_tol(dim: int) -> float:
    return 1e-12 * dim


def vacuum(dim: int = 1) -> FockVector:
    amps = np.zeros(dim, dtype=complex)
    amps[0] = 1.0
    return FockVector(amps)


def fock_state(n: int, dim: int | None = None) -> FockVector:
    if n < 0:
        raise ValueError("photon number must be nonnegative")
    dim = n + 1 if dim is None else dim
    if dim <= n:
        raise ValueError("dimension too small for requested Fock state")
    amps = np.zeros(dim, dtype=complex)
    amps[n] = 1.0
    return FockVector(amps)


def coherent_amplitudes(beta: complex, dim: int) -> np.ndarray:
    """Amplitudes <n|beta> for n < dim via amps[n+1] = amps[n] * beta / sqrt(n+1)."""
    amps = np.empty(dim, dtype=complex)
    amps[0] = math.exp(-0.5 * abs(beta) ** 2)
    for n in range(dim - 1):
        amps[n + 1] = amps[n] * beta / math.sqrt(n + 1)
    return amps


def coherent_state(beta: complex, dim: int | None = None) -> FockVector:
    """Truncated coherent state |beta>; ``dim=None`` picks the auto dimension."""
    beta = complex(beta)
    if not (math.isfinite(beta.real) and math.isfinite(beta.imag)):
        raise ValueError("coherent amplitude must be finite")
    if dim is None:
        dim = auto_dim(abs(beta) ** 2)
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    check_budget(dim)
    deficit = float(poisson.sf(dim - 1, abs(beta) ** 2)) if beta != 0 else 0.0
    return FockVector(coherent_amplitudes(beta, dim), deficit)


def vector_state(amps, normalize: bool = False) -> FockVector:
    """Wrap user amplitudes; the missing norm becomes the truncation deficit."""
    amps = np.asarray(amps, dtype=complex).reshape(-1)
    norm_sq = float(np.vdot(amps, amps).real)
    if normalize:
        if norm_sq == 0:
            raise ValueError("zero vector cannot be normalized")
        return FockVector(amps / math.sqrt(norm_sq))
    if norm_sq > 1 + ROUNDING_FLOOR:
        raise ValueError(f"vector norm^2 {norm_sq} exceeds 1")
    deficit = 1.0 - norm_sq
    return FockVector(amps, deficit if deficit > ROUNDING_FLOOR else 0.0)


def _laguerre_rows(degree: int, order: np.ndarray, x: float) -> np.ndarray:
    """L_degree^(order)(x) for an array of orders, by the forward three-term recurrence."""
    order = np.asarray(order, dtype=float)
    prev = np.ones_like(order)
    if degree == 0:
        return prev
    cur = 1.0 + order - x
    for n in range(1, degree):
        prev, cur = cur, ((2 * n + 1 + order - x) * cur - (n + order) * prev) / (n + 1)
    return cur


def displaced_fock_columns(alpha: complex, nrows: int, ncols: int) -> np.ndarray:
    """Matrix elements <m|D(alpha)|j> for m < nrows, j < ncols.

    Closed form sqrt(j!/m!) alpha^(m-j) e^{-|alpha|^2/2} L_j^(m-j)(|alpha|^2) for
    m >= j (and its adjoint form for m < j), with the prefactor carried in logs.
    Column 0 is the coherent state |alpha>.
    """
    alpha = complex(alpha)
    x = abs(alpha) ** 2
    out = np.zeros((nrows, ncols), dtype=complex)
    if alpha == 0:
        k = min(nrows, ncols)
        out[np.arange(k), np.arange(k)] = 1.0
        return out
    log_r, phase = math.log(abs(alpha)), alpha / abs(alpha)
    lgam = np.array([math.lgamma(k + 1) for k in range(max(nrows, ncols))])
    for j in range(ncols):
        m = np.arange(j, nrows)
        if m.size:
            k = m - j
            lag = _laguerre_rows(j, k, x)
            logpre = k * log_r + 0.5 * (lgam[j] - lgam[m]) - 0.5 * x
            out[m, j] = np.exp(logpre) * phase**k * lag
        m = np.arange(0, min(j, nrows))
        for mm in m:
            k = j - mm
            lag = _laguerre_rows(int(mm), np.array([k]), x)[0]
            logpre = k * log_r + 0.5 * (lgam[mm] - lgam[j]) - 0.5 * x
            out[mm, j] = math.exp(logpre) * (-phase.conjugate()) ** k * lag
    return out


def coherent_overlap(z: complex, zp: complex) -> complex:
    """Closed form of <z|z'>."""
    z, zp = complex(z), complex(zp)
    return complex(np.exp(-0.5 * (abs(z) ** 2 + abs(zp) ** 2) + z.conjugate() * zp))


def ladder_ops(dim: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Annihilation, creation and number matrices on a dim-level truncation."""
    if dim < 2:
        raise ValueError("ladder operators need dim >= 2")
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    adag = a.conj().T.copy()
    num = np.diag(np.arange(dim, dtype=float)).astype(complex)
    return a, adag, num


def rotated_quadrature(theta: float, dim: int) -> HermitianOperator:
    """Truncation of (e^{-i theta} a + e^{i theta} a^*) / sqrt(2)."""
    a, adag, _ = ladder_ops(dim)
    q = (np.exp(-1j * theta) * a + np.exp(1j * theta) * adag) / math.sqrt(2)
    return HermitianOperator(q)


def apply_rotated_quadrature(theta: float, v: np.ndarray) -> np.ndarray:
    """Q_theta applied to a padded vector without forming the matrix."""
    n = v.size
    out = np.zeros(n, dtype=complex)
    s = np.sqrt(np.arange(1, n, dtype=float))
    out[:-1] += np.exp(-1j * theta) * s * v[1:]
    out[1:] += np.exp(1j * theta) * s * v[:-1]
    return out / math.sqrt(2)


def hermite_functions(nmax: int, x: np.ndarray) -> np.ndarray:
    """Rows h_0..h_{nmax-1} evaluated on x, by the normalized three-term recurrence."""
    x = np.asarray(x, dtype=float)
    h = np.zeros((max(nmax, 1), x.size))
    h[0] = math.pi ** -0.25 * np.exp(-0.5 * x**2)
    if nmax > 1:
        h[1] = math.sqrt(2.0) * x * h[0]
    for n in range(1, nmax - 1):
        h[n + 1] = math.sqrt(2.0 / (n + 1)) * x * h[n] - math.sqrt(n / (n + 1)) * h[n - 1]
    return h[:nmax]


def position_wavefunction(state: FockVector, theta: float, xgrid) -> np.ndarray:
    """sum_n amps_n e^{-i theta n} h_n(x): the wavefunction whose |.|^2 is the Q_theta density."""
    x = np.asarray(xgrid, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("grid must be finite")
    h = hermite_functions(state.dim, x.reshape(-1))
    coeffs = state.phase_rotated(theta).amps
    return (coeffs @ h).reshape(x.shape)
