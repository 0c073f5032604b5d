"""The homodyne detector observable E^z on the signal mode.

Outcomes are x_k = k / (sqrt2 r), k = n2 - n1 the photon-number difference of
the two output ports (auxiliary minus signal). For a pure signal phi the
outcome weights are the N_- sector masses of U(phi (x) |z>), z = r e^{i theta};
mixtures add linearly. Effect matrices are assembled from the vectors
w_n = U(|n> (x) |z>) without ever forming a two-mode operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .beamsplitter import difference_masses, oscillator_basis, signal_with_oscillator
from .fock import HermitianOperator
from .states import SignalStateSpec

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Interval:
    """Real interval with explicit endpoint closure; default is [lo, hi)."""

    lo: float = -math.inf
    hi: float = math.inf
    closed_lo: bool = True
    closed_hi: bool = False

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        left = x >= self.lo if self.closed_lo else x > self.lo
        right = x <= self.hi if self.closed_hi else x < self.hi
        return left & right

    def label(self) -> str:
        lb = "[" if self.closed_lo and math.isfinite(self.lo) else "("
        rb = "]" if self.closed_hi and math.isfinite(self.hi) else ")"
        return f"{lb}{self.lo:g},{self.hi:g}{rb}"


def ray(c: float) -> Interval:
    """(-inf, c]."""
    return Interval(-math.inf, c, closed_lo=False, closed_hi=True)


@dataclass(frozen=True)
class LatticeDistribution:
    r: float
    theta: float
    kmin: int
    weights: np.ndarray
    deficit: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def spacing(self) -> float:
        return 1.0 / (SQRT2 * self.r)

    @property
    def kmax(self) -> int:
        return self.kmin + self.weights.size - 1

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.kmin, self.kmin + self.weights.size)

    @property
    def xs(self) -> np.ndarray:
        return self.ks / (SQRT2 * self.r)

    def mass(self, interval: Interval) -> float:
        return float(np.sum(self.weights[interval.contains(self.xs)]))

    def cdf_at_atoms(self) -> np.ndarray:
        return np.cumsum(self.weights)

    def mean(self) -> float:
        return float(np.dot(self.weights, self.xs))

    def variance(self) -> float:
        m = self.mean()
        return float(np.dot(self.weights, (self.xs - m) ** 2))

    def expect(self, f) -> complex:
        return complex(np.sum(self.weights * f(self.xs)))


def k_range(mean_total_photons: float) -> int:
    """Retained |k| bound: ceil(mu + 12 sqrt(mu)) for combined mean photon number mu."""
    mu = max(mean_total_photons, 1.0)
    return int(math.ceil(mu + 12 * math.sqrt(mu)))


def homodyne_distribution(state: SignalStateSpec, r: float, theta: float = 0.0) -> LatticeDistribution:
    """Exact lattice statistics of E^{r e^{i theta}} in the given signal state."""
    if not r > 0:
        raise ValueError("oscillator amplitude r must be positive")
    z = r * np.exp(1j * theta)
    parts = []
    deficit = 0.0
    for t, vec in state.components:
        v = signal_with_oscillator(vec, z)
        kmin, masses = difference_masses(v)
        parts.append((t, kmin, masses))
        deficit += t * v.trunc_deficit
    lo = min(kmin for _, kmin, _ in parts)
    hi = max(kmin + m.size - 1 for _, kmin, m in parts)
    weights = np.zeros(hi - lo + 1)
    for t, kmin, masses in parts:
        weights[kmin - lo : kmin - lo + masses.size] += t * masses
    bound = k_range(state.mean_photons() + r * r)
    keep_lo, keep_hi = max(lo, -bound), min(hi, bound)
    kept = weights[keep_lo - lo : keep_hi - lo + 1]
    deficit += math.fsum(weights) - math.fsum(kept)
    return LatticeDistribution(r, theta, keep_lo, kept.copy(), max(deficit, 0.0))


def lattice_mass(state: SignalStateSpec, r: float, theta: float = 0.0) -> float:
    """Probability that the outcome lies on the lattice (sqrt2 r)^-1 Z: one, up to truncation."""
    dist = homodyne_distribution(state, r, theta)
    return math.fsum(dist.weights) + dist.deficit


class EffectAssembler:
    """Sector overlap data for w_n = U(|n> (x) |z>), n < dim.

    ``gram(weights_by_k)`` returns sum_k f(k) <w_m|Pi_k|w_n>, which covers
    effects (f an indicator) and moment operators (f(k) = x_k^j) alike.
    """

    def __init__(self, r: float, theta: float, dim: int):
        if dim < 1:
            raise ValueError("signal dimension must be at least 1")
        if not r > 0:
            raise ValueError("oscillator amplitude r must be positive")
        self.r, self.theta, self.dim = r, theta, dim
        basis, self.tail = oscillator_basis(dim, r * np.exp(1j * theta))
        d1, d2 = basis.shape[1:]
        n1, n2 = np.indices((d1, d2))
        self.k_of_entry = (n2 - n1).ravel()
        self.flat = basis.reshape(dim, -1)
        self.kmin, self.kmax = -(d1 - 1), d2 - 1
        # random-walk estimate of accumulated rounding in a gram entry
        self.rounding = float(np.finfo(float).eps * math.sqrt(self.flat.size))

    @property
    def deficit(self) -> float:
        """Error certificate for gram entries: analytic truncation tail plus rounding."""
        return self.tail + self.rounding

    def atom(self, k) -> np.ndarray:
        return np.asarray(k) / (SQRT2 * self.r)

    def gram(self, f_of_k: np.ndarray) -> np.ndarray:
        """f_of_k indexed by k - kmin."""
        weights = f_of_k[self.k_of_entry - self.kmin]
        sel = weights != 0
        fl = self.flat[:, sel]
        return fl.conj() @ (fl * weights[sel]).T

    def indicator(self, atoms=None, intervals=None) -> np.ndarray:
        ks = np.arange(self.kmin, self.kmax + 1)
        if atoms is None and intervals is None:
            return np.ones(ks.size)
        mask = np.zeros(ks.size, dtype=bool)
        if atoms is not None:
            mask |= np.isin(ks, np.asarray(list(atoms), dtype=int))
        for iv in intervals or ():
            mask |= iv.contains(self.atom(ks))
        return mask.astype(float)

    def effect(self, atoms=None, intervals=None) -> HermitianOperator:
        return HermitianOperator(self.gram(self.indicator(atoms, intervals)))

    def moment(self, k: int) -> HermitianOperator:
        ks = np.arange(self.kmin, self.kmax + 1)
        return HermitianOperator(self.gram(self.atom(ks) ** k))


def effect_matrix(r: float, theta: float, dim: int, atoms=None, intervals=None) -> HermitianOperator:
    """E^z(S) on the first ``dim`` Fock levels; S is a union of lattice atoms (by k) and intervals.

    With neither given, S is the whole real line.
    """
    return EffectAssembler(r, theta, dim).effect(atoms, intervals)
