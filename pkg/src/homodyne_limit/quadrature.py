"""Statistics of the rotated quadrature Q_theta, the high-amplitude limit observable."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.interpolate import CubicHermiteSpline
from scipy.special import ndtr

from .fock import apply_rotated_quadrature, check_budget, position_wavefunction
from .states import SignalStateSpec

GRID_TAIL_TOL = 1e-8
CDF_STEP = 2.5e-3


class GridWidthError(ValueError):
    """The evaluation grid misses more than the allowed probability mass."""


@dataclass(frozen=True)
class ContinuousDistribution:
    """Either an exact Gaussian (kind="gaussian") or a tabulated density (kind="grid")."""

    kind: str
    mean: float = 0.0
    variance: float = 0.5
    x: np.ndarray | None = None
    density: np.ndarray | None = None
    trunc_deficit: float = 0.0
    exact_pdf: Callable | None = field(default=None, repr=False, compare=False)
    _spline: CubicHermiteSpline | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "gaussian":
            if not self.variance > 0:
                raise ValueError("gaussian variance must be positive")
        elif self.kind == "grid":
            if self.x is None or self.density is None:
                raise ValueError("grid law needs x and density")
            cdf = cumulative_simpson(self.density, x=self.x, initial=0.0)
            object.__setattr__(self, "_spline", CubicHermiteSpline(self.x, cdf, self.density))
        else:
            raise ValueError(f"unknown kind {self.kind!r}")

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-((x - self.mean) ** 2) / (2 * self.variance)) / math.sqrt(2 * math.pi * self.variance)
        if self.exact_pdf is not None:
            return self.exact_pdf(x)
        inside = (x >= self.x[0]) & (x <= self.x[-1])
        return np.where(inside, self._spline(np.clip(x, self.x[0], self.x[-1]), 1), 0.0)

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "gaussian":
            return ndtr((x - self.mean) / self.sd)
        inside = np.clip(x, self.x[0], self.x[-1])
        return np.where(x < self.x[0], 0.0, self._spline(inside))

    def total(self) -> float:
        if self.kind == "gaussian":
            return 1.0
        return float(self._spline(self.x[-1]))

    def mass(self, interval) -> float:
        hi = 1.0 if math.isinf(interval.hi) and interval.hi > 0 else float(self.cdf(interval.hi))
        lo = 0.0 if math.isinf(interval.lo) and interval.lo < 0 else float(self.cdf(interval.lo))
        if self.kind == "grid" and hi == 1.0:
            hi = self.total()
        return hi - lo

    def expect(self, f) -> complex:
        if self.kind == "gaussian":
            nodes, w = np.polynomial.hermite.hermgauss(160)
            xs = self.mean + math.sqrt(2 * self.variance) * nodes
            return complex(np.sum(w * f(xs)) / math.sqrt(math.pi))
        return complex(simpson(self.density * f(self.x), x=self.x))

    def to_json(self) -> dict:
        if self.kind == "gaussian":
            return {"kind": "gaussian", "mean": self.mean, "variance": self.variance}
        return {"kind": "grid", "points": int(self.x.size), "x_min": float(self.x[0]), "x_max": float(self.x[-1])}


def coherent_quadrature_law(beta: complex, theta: float = 0.0) -> ContinuousDistribution:
    """Gaussian with mean sqrt2 Re(e^{-i theta} beta) and variance 1/2."""
    q = math.sqrt(2.0) * (np.exp(-1j * theta) * complex(beta)).real
    return ContinuousDistribution("gaussian", mean=float(q), variance=0.5)


def quadrature_mean(state: SignalStateSpec, theta: float) -> float:
    return quadrature_moment(state, theta, 1)


def default_grid(state: SignalStateSpec, theta: float, points: int = 2001) -> np.ndarray:
    q = quadrature_mean(state, theta)
    half = 10.0 + 4.0 * math.sqrt(state.mean_photons())
    return np.linspace(q - half, q + half, points)


def quadrature_density(state: SignalStateSpec, theta: float, xgrid=None, check: bool = True) -> ContinuousDistribution:
    """sum_j t_j |psi_j(x)|^2 tabulated on xgrid, psi_j the Q_theta-representation of phi_j."""
    x = default_grid(state, theta) if xgrid is None else np.asarray(xgrid, dtype=float)

    def density(pts):
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.size)
        for t, vec in state.components:
            out += t * np.abs(position_wavefunction(vec, theta, pts.ravel())) ** 2
        return out.reshape(pts.shape)

    law = ContinuousDistribution("grid", x=x, density=density(x), trunc_deficit=state.trunc_deficit, exact_pdf=density)
    if check:
        missing = (1.0 - state.trunc_deficit) - law.total()
        if missing > GRID_TAIL_TOL:
            raise GridWidthError(f"grid [{x[0]:g}, {x[-1]:g}] misses probability {missing:.3g}")
    return law


def quadrature_law(state: SignalStateSpec, theta: float) -> ContinuousDistribution:
    """Fine-grid law used for CDF comparisons."""
    q = quadrature_mean(state, theta)
    half = 10.0 + 4.0 * math.sqrt(state.mean_photons())
    n = int(math.ceil(2 * half / CDF_STEP)) + 1
    return quadrature_density(state, theta, np.linspace(q - half, q + half, n))


def quadrature_moment(state: SignalStateSpec, theta: float, k: int) -> float:
    """<Q_theta^k> evaluated with the truncated quadrature applied to a zero-padded vector.

    Padding by k levels makes every power exact on the stored amplitudes.
    """
    if k < 0:
        raise ValueError("moment order must be nonnegative")
    total = 0.0
    for t, vec in state.components:
        dim = check_budget(vec.dim + k + 1)
        v = vec.padded(dim)
        half = k // 2
        left = v
        for _ in range(half):
            left = apply_rotated_quadrature(theta, left)
        right = v
        for _ in range(k - half):
            right = apply_rotated_quadrature(theta, right)
        total += t * float(np.vdot(left, right).real)
    return total
