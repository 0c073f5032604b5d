"""The 50-50 beam splitter on two truncated modes.

Mode 1 is the signal output port, mode 2 the auxiliary one. ``U`` is fixed by

    U |n, m> = ((a* + b*)/sqrt2)^n ((b* - a*)/sqrt2)^m |0, 0> / sqrt(n! m!)

so that U|beta, z> = |(beta - z)/sqrt2, (beta + z)/sqrt2>. U conserves the total
photon number, and on each sector n1 + n2 = s it is a real orthogonal
(s+1) x (s+1) matrix with exact binomial (Krawtchouk) coefficients.
"""

from __future__ import annotations

import math
from itertools import accumulate
from dataclasses import dataclass

import numpy as np

from .fock import FockVector, check_budget, displaced_fock_columns, ladder_ops

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class TwoModeVector:
    amps: np.ndarray  # amps[n1, n2]
    trunc_deficit: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.ndim != 2:
            raise ValueError("TwoModeVector amplitudes must be 2-D")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def dim1(self) -> int:
        return self.amps.shape[0]

    @property
    def dim2(self) -> int:
        return self.amps.shape[1]

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def inner(self, other: "TwoModeVector") -> complex:
        d1, d2 = min(self.dim1, other.dim1), min(self.dim2, other.dim2)
        return complex(np.vdot(self.amps[:d1, :d2], other.amps[:d1, :d2]))


def product_state(first: FockVector, second: FockVector) -> TwoModeVector:
    return TwoModeVector(
        np.outer(first.amps, second.amps), first.trunc_deficit + second.trunc_deficit
    )


class _SectorCache:
    """Orthogonal matrices U_s, column n = U|n, s-n>, row p = output mode-1 count.

    U_s[p, n] = K_p(n) sqrt(p! (s-p)! / (n! (s-n)!)) / 2^(s/2), where the integer
    K_p(n) is the x^p coefficient of (1 + x)^n (1 - x)^(s-n). The integers are
    exact, so every entry carries only a few roundings regardless of s.
    """

    def __init__(self):
        self.blocks = [np.ones((1, 1))]

    @staticmethod
    def _block(s: int) -> np.ndarray:
        lf = [math.lgamma(k + 1) for k in range(s + 1)]
        out = np.empty((s + 1, s + 1))
        poly = [(-1) ** p * math.comb(s, p) for p in range(s + 1)]  # (1 - x)^s
        for n in range(s + 1):
            if n:
                # multiply by (1 + x), then divide exactly by (1 - x)
                q = [poly[p] + (poly[p - 1] if p else 0) for p in range(s + 1)]
                poly = list(accumulate(q))
            for p, k in enumerate(poly):
                if k == 0:
                    out[p, n] = 0.0
                    continue
                log_mag = (
                    math.log(abs(k))
                    + 0.5 * (lf[p] + lf[s - p] - lf[n] - lf[s - n])
                    - 0.5 * s * math.log(2.0)
                )
                out[p, n] = math.copysign(math.exp(log_mag), k)
        return out

    def upto(self, smax: int) -> list[np.ndarray]:
        while len(self.blocks) <= smax:
            self.blocks.append(self._block(len(self.blocks)))
        return self.blocks[: smax + 1]


_SECTORS = _SectorCache()


def sector_unitary(s: int) -> np.ndarray:
    """Matrix of U on the total-photon-number sector s."""
    return _SECTORS.upto(s)[s]


def apply_beamsplitter(state: TwoModeVector, inverse: bool = False) -> TwoModeVector:
    """U (or U^*) applied sector by sector; output dims are dim1 + dim2 - 1 in each mode."""
    d1, d2 = state.dim1, state.dim2
    dout = check_budget(d1 + d2 - 1)
    smax = d1 + d2 - 2
    blocks = _SECTORS.upto(smax)
    out = np.zeros((dout, dout), dtype=complex)
    for s in range(smax + 1):
        lo, hi = max(0, s - d2 + 1), min(s, d1 - 1)
        n = np.arange(lo, hi + 1)
        vin = state.amps[n, s - n]
        if not np.any(vin):
            continue
        block = blocks[s].T if inverse else blocks[s]
        p = np.arange(s + 1)
        out[p, s - p] = block[:, lo : hi + 1] @ vin
    return TwoModeVector(out, state.trunc_deficit)


def displaced_support(alpha_sq: float, ncols: int) -> tuple[int, int]:
    """Rows kept for D(alpha)|j>, j < ncols, and extra rows used to measure the tail."""
    mean = alpha_sq + ncols - 1
    sd = math.sqrt(alpha_sq * (2 * ncols - 1) + ncols)
    return int(math.ceil(mean + 10 * sd + 20)), int(math.ceil(4 * sd + 20))


def _output_factors(z: complex, signal_dim: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Displaced Fock columns for both output ports and their summed tail mass."""
    keep, extra = displaced_support(abs(z) ** 2 / 2, signal_dim)
    check_budget(keep)
    d1 = displaced_fock_columns(-z / SQRT2, keep + extra, signal_dim)
    d2 = displaced_fock_columns(z / SQRT2, keep + extra, signal_dim)
    tail = float(np.max(np.sum(np.abs(d1[keep:]) ** 2, axis=0)))
    tail += float(np.max(np.sum(np.abs(d2[keep:]) ** 2, axis=0)))
    return d1[:keep], d2[:keep], tail


def _vacuum_coefficients(signal_dim: int) -> np.ndarray:
    """coef[n, j] = <j, n-j|U|n, 0>, zero for j > n."""
    blocks = _SECTORS.upto(signal_dim - 1)
    coef = np.zeros((signal_dim, signal_dim))
    for n in range(signal_dim):
        coef[n, : n + 1] = blocks[n][:, n]
    return coef


def oscillator_basis(signal_dim: int, z: complex) -> tuple[np.ndarray, float]:
    """Stack of w_n = U(|n> (x) |z>) for n < signal_dim, shape (signal_dim, D, D).

    U (I (x) D(z)) U^* = D(-z/sqrt2) (x) D(z/sqrt2), so
    w_n = sum_j <j, n-j|U|n, 0> D(-z/sqrt2)|j> (x) D(z/sqrt2)|n-j>.
    The second return value is the truncated tail mass (per-mode maxima, summed).
    """
    d1, d2, tail = _output_factors(complex(z), signal_dim)
    coef = _vacuum_coefficients(signal_dim)
    basis = np.zeros((signal_dim, d1.shape[0], d2.shape[0]), dtype=complex)
    for n in range(signal_dim):
        for j in range(n + 1):
            basis[n] += coef[n, j] * np.outer(d1[:, j], d2[:, n - j])
    return basis, tail


def signal_with_oscillator(signal: FockVector, z: complex) -> TwoModeVector:
    """U(signal (x) |z>), assembled as D1 M D2^T with M[j, l] = c_{j+l} <j, l|U|j+l, 0>."""
    dim = signal.support() + 1
    d1, d2, tail = _output_factors(complex(z), dim)
    coef = _vacuum_coefficients(dim)
    mix = np.zeros((dim, dim), dtype=complex)
    for n in range(dim):
        j = np.arange(n + 1)
        mix[j, n - j] = signal.amps[n] * coef[n, : n + 1]
    return TwoModeVector(d1 @ mix @ d2.T, signal.trunc_deficit + tail)


def difference_masses(v: TwoModeVector) -> tuple[int, np.ndarray]:
    """(kmin, masses) with masses[j] the Pi_k mass for k = kmin + j, k = n2 - n1."""
    p = np.abs(v.amps) ** 2
    n1, n2 = np.indices(p.shape)
    kmin = -(v.dim1 - 1)
    masses = np.bincount((n2 - n1 - kmin).ravel(), weights=p.ravel(), minlength=v.dim1 + v.dim2 - 1)
    return kmin, masses


def difference_projection_mass(v: TwoModeVector, k: int) -> float:
    """Weight of v on the eigenspace N_aux - N = k."""
    return float(np.sum(np.abs(np.diagonal(v.amps, offset=k)) ** 2)) if -v.dim1 < k < v.dim2 else 0.0


def difference_number(dim1: int, dim2: int) -> np.ndarray:
    """Diagonal of N_- = I (x) N_aux - N (x) I in the row-major (n1, n2) ordering."""
    n1, n2 = np.indices((dim1, dim2))
    return (n2 - n1).ravel().astype(float)


def dilation_generator(dim1: int, dim2: int) -> np.ndarray:
    """Truncation of A = (a (x) b* + a* (x) b)/sqrt2 on the (n1, n2) row-major basis."""
    if dim1 < 2 or dim2 < 2:
        raise ValueError("dilation generator needs dims >= 2")
    a, adag, _ = ladder_ops(dim1)
    b, bdag, _ = ladder_ops(dim2)
    return (np.kron(a, bdag) + np.kron(adag, b)) / SQRT2
