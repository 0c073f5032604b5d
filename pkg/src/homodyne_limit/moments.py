"""Moment operators of E^z, intrinsic noise, residual scaling and moment-growth probes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fock import FockVector, HermitianOperator, rotated_quadrature
from .homodyne import EffectAssembler, LatticeDistribution, homodyne_distribution
from .states import coherent

TAIL_TOL = 1e-8
DEFAULT_KMAX = 8


class TailDominatedError(ValueError):
    """Mass outside the retained lattice range could dominate the requested moment."""


@dataclass
class MomentReport:
    r: float
    theta: float
    k: int
    empirical_moments: list[float]
    operator_moments: list[float] = field(default_factory=list)
    residual_table: list[tuple[float, int, float]] = field(default_factory=list)
    exp_bound: "ExpBound | None" = None

    def to_json(self) -> dict:
        out = {
            "r": self.r,
            "theta": self.theta,
            "moments": {"empirical": self.empirical_moments, "operator": self.operator_moments},
            "residuals": [{"r": r, "k": k, "value": v} for r, k, v in self.residual_table],
        }
        if self.exp_bound is not None:
            out["exp_bound"] = self.exp_bound.to_json()
        return out


def empirical_moment(dist: LatticeDistribution, k: int) -> float:
    """sum_j p_j x_j^k over the retained atoms."""
    if k < 0:
        raise ValueError("moment order must be nonnegative")
    xs = dist.xs
    xmax = float(np.max(np.abs(xs))) if xs.size else 0.0
    if k > 0 and dist.deficit * xmax**k >= TAIL_TOL:
        raise TailDominatedError(
            f"deficit {dist.deficit:.3g} times |x|max^{k} = {dist.deficit * xmax**k:.3g} exceeds {TAIL_TOL:g}"
        )
    return math.fsum(dist.weights * xs**k)


def low_fock_block(dim: int, k: int) -> int:
    """Number of leading levels n with n + k + 2 < dim, where truncated identities are exact."""
    return max(dim - k - 2, 0)


def moment_operator_matrix(r: float, theta: float, k: int, dim: int) -> HermitianOperator:
    """(sqrt2 r)^-k <w_m|N_-^k|w_n>, w_n = U(|n> (x) |r e^{i theta}>)."""
    if k == 0:
        return HermitianOperator(np.eye(dim, dtype=complex))
    return EffectAssembler(r, theta, dim).moment(k)


def quadrature_power(theta: float, k: int, dim: int) -> np.ndarray:
    """Leading dim x dim block of Q_theta^k, computed on dim + k levels so the block is exact."""
    q = rotated_quadrature(theta, dim + k + 1).entries
    return np.linalg.matrix_power(q, k)[:dim, :dim]


def intrinsic_noise_matrix(r: float, theta: float, dim: int) -> HermitianOperator:
    """M2 - M1^2; reliable on the low-Fock block, where it equals N / (2 r^2)."""
    asm = EffectAssembler(r, theta, dim)
    m1 = asm.moment(1).entries
    m2 = asm.moment(2).entries
    noise = m2 - m1 @ m1
    return HermitianOperator((noise + noise.conj().T) / 2)


def _as_amps(v, dim: int) -> np.ndarray:
    if isinstance(v, FockVector):
        return v.padded(dim)
    out = np.zeros(dim, dtype=complex)
    v = np.asarray(v, dtype=complex)
    out[: v.size] = v
    return out


def residual_scaling_probe(k: int, theta: float, r_list, phi, psi) -> list[tuple[float, int, float]]:
    """|<psi|(L(x^k, E^z) - Q_theta^k)|phi>| for each r; decays like r^-2."""
    phi = np.asarray(phi.amps if isinstance(phi, FockVector) else phi, dtype=complex)
    psi = np.asarray(psi.amps if isinstance(psi, FockVector) else psi, dtype=complex)
    dim = max(phi.size, psi.size)
    a, b = _as_amps(phi, dim), _as_amps(psi, dim)
    qk = quadrature_power(theta, k, dim)
    table = []
    for r in r_list:
        if r < 1:
            raise ValueError("residual law is stated for r >= 1")
        mk = moment_operator_matrix(r, theta, k, dim).entries
        table.append((float(r), k, float(abs(np.vdot(b, (mk - qk) @ a)))))
    return table


@dataclass(frozen=True)
class ExpBound:
    a: float
    lhs: float
    rhs: float
    holds: bool

    def to_json(self) -> dict:
        return {"a": self.a, "lhs": self.lhs, "rhs": self.rhs, "holds": self.holds}


def exp_moment_rhs(beta: complex, r: float, a: float) -> float:
    """exp[(|beta|^2 + r^2)(e^{a / (sqrt2 r)} - 1)]."""
    return math.exp((abs(beta) ** 2 + r * r) * math.expm1(a / (math.sqrt(2.0) * r)))


def exp_moment_bound_check(beta: complex, r: float, theta: float, a: float) -> ExpBound:
    """Compare sum_k p_k e^{a|x_k|} for the coherent signal |beta> with its closed-form bound."""
    if not a > 0:
        raise ValueError("a must be positive")
    dist = homodyne_distribution(coherent(beta), r, theta)
    lhs = math.fsum(dist.weights * np.exp(a * np.abs(dist.xs)))
    rhs = exp_moment_rhs(beta, r, a)
    return ExpBound(a, lhs, rhs, lhs <= rhs + 1e-9)


@dataclass(frozen=True)
class DeterminacyProbe:
    s: np.ndarray  # s_k = M_{2k}^{1/(2k)} / (2k), k = 1..K
    running_min: np.ndarray
    verdict: str  # "consistent with determinacy" | "indeterminate-suspect"

    @property
    def flagged(self) -> bool:
        return self.verdict != "consistent with determinacy"

    def to_json(self) -> dict:
        return {"s": self.s.tolist(), "running_min": self.running_min.tolist(), "verdict": self.verdict}


GROWTH_FLAG = 2.0


def determinacy_probe(moments) -> DeterminacyProbe:
    """Finite-data shadow of liminf_k M_{2k}^{1/(2k)} / (2k) < infinity.

    ``moments`` is M_0, M_1, ..., M_{2K} (K >= 4). The sequence is flagged when
    its tail keeps rising and ends more than GROWTH_FLAG times above the
    smallest value seen; a diagnostic only, it proves nothing either way.
    """
    m = np.asarray(moments, dtype=float)
    if m.size < 9:
        raise ValueError("need even moments up to order 2K with K >= 4")
    even = m[2::2]
    if not np.all(np.isfinite(even)) or np.any(even < 0):
        raise ValueError("even moments must be finite and nonnegative")
    k = np.arange(1, even.size + 1)
    s = even ** (1.0 / (2 * k)) / (2 * k)
    running = np.minimum.accumulate(s)
    tail = s[-3:]
    rising = bool(np.all(np.diff(tail) > 0))
    if rising and s[-1] > GROWTH_FLAG * max(running[-1], np.finfo(float).tiny):
        verdict = "indeterminate-suspect"
    else:
        verdict = "consistent with determinacy"
    return DeterminacyProbe(s, running, verdict)


def gaussian_moments(kmax: int, mean: float = 0.0, variance: float = 0.5) -> list[float]:
    """Raw moments of N(mean, variance) up to order kmax, by the standard recurrence."""
    out = [1.0, mean]
    for j in range(2, kmax + 1):
        out.append(mean * out[j - 1] + (j - 1) * variance * out[j - 2])
    return out[: kmax + 1]


def lognormal_moments(kmax: int) -> list[float]:
    """E[X^j] = e^{j^2/2} for the standard lognormal, which its moments do not determine."""
    return [math.exp(j * j / 2.0) for j in range(kmax + 1)]


def moment_report(state, r: float, theta: float, kmax: int, dim: int | None = None) -> MomentReport:
    """Empirical lattice moments next to operator-side moments <phi|L(x^k, E^z)|phi>."""
    dist = homodyne_distribution(state, r, theta)
    emp = [empirical_moment(dist, k) for k in range(kmax + 1)]
    dim = dim or state.dim
    asm = EffectAssembler(r, theta, dim)
    ops = []
    for k in range(kmax + 1):
        mat = np.eye(dim, dtype=complex) if k == 0 else asm.moment(k).entries
        val = 0.0
        for t, vec in state.components:
            v = vec.amps[:dim] if vec.dim >= dim else vec.padded(dim)
            val += t * float(np.vdot(v, mat @ v).real)
        ops.append(val)
    return MomentReport(r, theta, kmax, emp, ops)
