"""Convergence of E^{r e^{i theta}} to the Q_theta spectral measure as r grows.

Four finite-r diagnostics are provided, one per equivalent form of weak
convergence: interval probabilities for pure states, the same for mixtures,
the CDF sup-distance, and expectations of bounded continuous functions. The
moment-level checks and the calibration driver sit on top of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .homodyne import Interval, LatticeDistribution, homodyne_distribution, lattice_mass, ray
from .moments import determinacy_probe, empirical_moment
from .quadrature import ContinuousDistribution, quadrature_law, quadrature_moment
from .states import SignalStateSpec, fock

SQRT2 = math.sqrt(2.0)

INTERVAL_BATTERY = tuple(ray(c) for c in (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0)) + (Interval(-1.0, 1.0),)

FUNCTION_BATTERY = {
    "cos": np.cos,
    "sin": np.sin,
    "gauss": lambda x: np.exp(-(x**2)),
    "lorentz": lambda x: 1.0 / (1.0 + x**2),
}

# Alternative limit candidate: the quadrature law smeared by independent N(0, delta) noise.
# For coherent states this is the Gaussian with variance 1/2 + delta.
UNIQUENESS_DELTA = 0.05
IDENTIFY_RTOL = 1e-3
MONOTONE_SLACK = 1e-12


class CalibrationError(RuntimeError):
    def __init__(self, message: str, state: str = "", r: float | None = None, k: int | None = None):
        super().__init__(message)
        self.state, self.r, self.k = state, r, k


def moment_tolerance(k: int, target: float, r_max: float, mean_photons: float) -> float:
    """tol_k = max(1e-6, 2 max(1, |target|) r_max^-2 (<N> + 1) k^2).

    The +1 keeps vacuum-like states honest: the residual has parts not
    proportional to N (e.g. the fourth cumulant 1/(4 r^2) of the vacuum).
    """
    scale = max(1.0, abs(target))
    return max(1e-6, 2.0 * scale * (mean_photons + 1.0) * k * k / (r_max * r_max))


def weak_tolerance(r_max: float) -> float:
    """Empirical ceiling for CDF-type gaps: one lattice spacing at the largest r."""
    return 1.0 / (SQRT2 * r_max)


def non_increasing(seq, slack: float = MONOTONE_SLACK) -> bool:
    return all(b <= a + slack for a, b in zip(seq, seq[1:]))


def strictly_decreasing(seq) -> bool:
    return all(b < a for a, b in zip(seq, seq[1:]))


def richardson_limit(r_list, values) -> float:
    """Value at r = infinity of the polynomial in r^-2 through the last three points."""
    u = np.asarray(r_list[-3:], dtype=float) ** -2
    v = np.asarray(values[-3:], dtype=float)
    if u.size == 1:
        return float(v[0])
    coeffs = np.polyfit(u, v, u.size - 1)
    return float(coeffs[-1])


@dataclass
class MomentLimitVerdict:
    k: int
    r_list: list[float]
    moments: list[float]
    target: float
    gaps: list[float]
    tol: float
    passed: bool
    identified: float

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "moments": self.moments,
            "target": self.target,
            "gaps": self.gaps,
            "tol": self.tol,
            "pass": self.passed,
            "identified_limit": self.identified,
        }


def moment_limit_check(
    state: SignalStateSpec, theta: float, r_list, kmax: int, dists: dict | None = None
) -> list[MomentLimitVerdict]:
    """Per-k check that the lattice moments approach the quadrature moments along r_list."""
    r_list = [float(r) for r in r_list]
    if len(r_list) < 3 or any(b <= a for a, b in zip(r_list, r_list[1:])):
        raise ValueError("r_list must be increasing with at least three values")
    dists = dists if dists is not None else {}
    for r in r_list:
        if r not in dists:
            dists[r] = homodyne_distribution(state, r, theta)
    mean_n = state.mean_photons()
    out = []
    for k in range(1, kmax + 1):
        target = quadrature_moment(state, theta, k)
        moments = [empirical_moment(dists[r], k) for r in r_list]
        gaps = [abs(m - target) for m in moments]
        tol = moment_tolerance(k, target, r_list[-1], mean_n)
        passed = gaps[-1] < tol and non_increasing(gaps[-3:], slack=1e-9 * max(1.0, abs(target)))
        out.append(
            MomentLimitVerdict(k, r_list, moments, target, gaps, tol, passed, richardson_limit(r_list, moments))
        )
    return out


def _law(state: SignalStateSpec, theta: float, law: ContinuousDistribution | None):
    return quadrature_law(state, theta) if law is None else law


def cdf_interval_diagnostic(
    state: SignalStateSpec,
    theta: float,
    r: float,
    intervals=INTERVAL_BATTERY,
    law: ContinuousDistribution | None = None,
    dist: LatticeDistribution | None = None,
) -> np.ndarray:
    """|E^z-probability - E^{Q_theta}-probability| for each interval."""
    dist = homodyne_distribution(state, r, theta) if dist is None else dist
    law = _law(state, theta, law)
    return np.array([abs(dist.mass(iv) - law.mass(iv)) for iv in intervals])


def ks_between(dist: LatticeDistribution, law: ContinuousDistribution) -> float:
    """Exact sup_x |F_lattice(x) - F_law(x)| for a continuous law.

    The lattice CDF is a step function, so the supremum is attained at an
    atom, from the left or the right.
    """
    cum = dist.cdf_at_atoms()
    before = np.concatenate(([0.0], cum[:-1]))
    f = law.cdf(dist.xs)
    gap = max(float(np.max(np.abs(cum - f))), float(np.max(np.abs(before - f))))
    return min(max(gap, abs(law.total() - cum[-1])), 1.0)


def ks_distance(
    state: SignalStateSpec,
    theta: float,
    r: float,
    law: ContinuousDistribution | None = None,
    dist: LatticeDistribution | None = None,
) -> float:
    dist = homodyne_distribution(state, r, theta) if dist is None else dist
    return ks_between(dist, _law(state, theta, law))


def ks_continuous(first: ContinuousDistribution, second: ContinuousDistribution, points: int = 20001) -> float:
    """sup |F1 - F2| over a fine common grid."""
    lo = min(first.x[0] if first.kind == "grid" else first.mean - 12 * first.sd,
             second.x[0] if second.kind == "grid" else second.mean - 12 * second.sd)
    hi = max(first.x[-1] if first.kind == "grid" else first.mean + 12 * first.sd,
             second.x[-1] if second.kind == "grid" else second.mean + 12 * second.sd)
    x = np.linspace(lo, hi, points)
    return float(np.max(np.abs(first.cdf(x) - second.cdf(x))))


def bounded_function_diagnostic(
    state: SignalStateSpec,
    theta: float,
    r: float,
    functions: dict | None = None,
    law: ContinuousDistribution | None = None,
    dist: LatticeDistribution | None = None,
) -> dict[str, float]:
    """|sum_k p_k f(x_k) - integral f dE^{Q_theta}| for each bounded continuous f."""
    functions = FUNCTION_BATTERY if functions is None else functions
    dist = homodyne_distribution(state, r, theta) if dist is None else dist
    law = _law(state, theta, law)
    return {name: abs(dist.expect(f) - law.expect(f)) for name, f in functions.items()}


def mixed_state_diagnostic(
    mixture: SignalStateSpec, theta: float, r: float, intervals=INTERVAL_BATTERY, law=None, dist=None
) -> np.ndarray:
    """Interval gaps for a genuine mixture, so convergence is seen beyond pure calibration vectors."""
    if len(mixture.components) < 2:
        raise ValueError("mixed-state diagnostic needs at least two components")
    return cdf_interval_diagnostic(mixture, theta, r, intervals, law, dist)


def characteristic_function(beta: complex, r: float, theta: float, t) -> np.ndarray:
    """Closed-form characteristic function of E^z in the coherent state |beta>, z = r e^{i theta}."""
    beta = complex(beta)
    z = r * np.exp(1j * theta)
    t = np.asarray(t, dtype=float)
    c2 = abs(beta - z) ** 2 / 2
    d2 = abs(beta + z) ** 2 / 2
    phase = np.exp(1j * t / (SQRT2 * r))
    return np.exp(-abs(z) ** 2 - abs(beta) ** 2 + c2 / phase + d2 * phase)


def empirical_cf(dist: LatticeDistribution, t) -> np.ndarray:
    """sum_k p_k e^{i t x_k}."""
    t = np.asarray(t, dtype=float)
    return np.exp(1j * np.multiply.outer(t, dist.xs)) @ dist.weights


def counterexample(state: SignalStateSpec, theta: float, r_list, law=None) -> dict:
    """E^z puts all its mass on the lattice (sqrt2 r)^-1 Z; Q_theta puts none there."""
    law = _law(state, theta, law)
    masses_e, masses_q = [], []
    for r in r_list:
        dist = homodyne_distribution(state, r, theta)
        masses_e.append(lattice_mass(state, r, theta))
        # Each lattice point is a degenerate interval [x, x].
        masses_q.append(math.fsum(law.mass(Interval(x, x, True, True)) for x in dist.xs))
    return {
        "r_list": [float(r) for r in r_list],
        "lattice_mass_E": [float(m) for m in masses_e],
        "lattice_mass_Q": [float(m) for m in masses_q],
        # The E^z masses form a constant sequence, so its limit is that constant.
        "converges_on_lattice": bool(abs(masses_e[-1] - masses_q[-1]) < 1e-6),
    }


def _lattice_summary(cx: dict) -> dict:
    return {
        "lattice_mass_E": round(min(cx["lattice_mass_E"]), 9),
        "lattice_mass_Q": round(max(cx["lattice_mass_Q"]), 9),
        "converges_on_lattice": cx["converges_on_lattice"],
    }


@dataclass
class StateConvergence:
    label: str
    moment_limit: list[MomentLimitVerdict]
    ks_distance: list[float]
    interval_cdf_gaps: list[list[float]]
    bounded_fn_gaps: list[dict[str, float]]
    determinacy_limit: dict
    determinacy_by_r: list[dict]
    uniqueness: dict
    verdicts: dict[str, bool] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "moment_limit": [v.to_json() for v in self.moment_limit],
            "ks_distance": self.ks_distance,
            "interval_cdf_gaps": self.interval_cdf_gaps,
            "bounded_fn_gaps": self.bounded_fn_gaps,
            "determinacy": {"limit": self.determinacy_limit, "by_r": self.determinacy_by_r},
            "uniqueness": self.uniqueness,
            "verdicts": self.verdicts,
        }


@dataclass
class ConvergenceReport:
    theta: float
    r_list: list[float]
    kmax: int
    states: list[StateConvergence]
    mixed_state_gaps: list[list[float]]
    mixed_label: str
    counterexample: dict
    tolerances: dict
    deficits: dict

    @property
    def all_pass(self) -> bool:
        return all(all(s.verdicts.values()) for s in self.states) and self.counterexample["flagged"]

    def to_json(self) -> dict:
        return {
            "theta": self.theta,
            "r_list": self.r_list,
            "kmax": self.kmax,
            "tolerances": self.tolerances,
            "deficits": self.deficits,
            "states": [s.to_json() for s in self.states],
            "mixed_state": {"label": self.mixed_label, "gaps": self.mixed_state_gaps},
            "counterexample": self.counterexample,
            "all_pass": self.all_pass,
        }

    def moment_rows(self):
        """Rows (state, r, k, empirical, target, gap) for the flat moment CSV."""
        for s in self.states:
            for v in s.moment_limit:
                for r, m, g in zip(v.r_list, v.moments, v.gaps):
                    yield s.label, r, v.k, m, v.target, g


def smeared_moments(moments, delta: float) -> list[float]:
    """Raw moments of X + G, G ~ N(0, delta) independent of X."""
    from .moments import gaussian_moments

    g = gaussian_moments(len(moments) - 1, 0.0, delta)
    return [math.fsum(math.comb(k, j) * moments[j] * g[k - j] for j in range(k + 1)) for k in range(len(moments))]


def _matches(identified, candidate) -> bool:
    return all(abs(a - b) <= IDENTIFY_RTOL * max(1.0, abs(b)) for a, b in zip(identified, candidate))


def interval_verdict(ks, interval_gaps, tol) -> bool:
    """Battery gaps shrink from first to last r, stay under tol, and sit inside the 2 KS envelope.

    Single interval gaps wobble with the lattice phase, so only the envelope
    is asked to decrease.
    """
    int_max = [max(g) for g in interval_gaps]
    enveloped = all(m <= 2 * d + MONOTONE_SLACK for m, d in zip(int_max, ks))
    return enveloped and int_max[-1] < int_max[0] and int_max[-1] <= tol


def _weak_verdicts(ks, interval_gaps, fn_gaps, tol) -> dict[str, bool]:
    fn_max = [max(g.values()) for g in fn_gaps]
    return {
        "cdf_intervals": interval_verdict(ks, interval_gaps, tol),
        "ks": strictly_decreasing(ks) and ks[-1] <= tol,
        "bounded_functions": non_increasing(fn_max) and fn_max[-1] <= tol,
    }


def analyze_state(
    state: SignalStateSpec, theta: float, r_list, kmax: int, weak_tol: float | None = None
) -> tuple[StateConvergence, dict]:
    r_list = [float(r) for r in r_list]
    dists = {r: homodyne_distribution(state, r, theta) for r in r_list}
    law = quadrature_law(state, theta)
    order = max(kmax, 8)
    limit = moment_limit_check(state, theta, r_list, order, dists)
    ks = [ks_distance(state, theta, r, law, dists[r]) for r in r_list]
    ints = [cdf_interval_diagnostic(state, theta, r, law=law, dist=dists[r]).tolist() for r in r_list]
    fns = [bounded_function_diagnostic(state, theta, r, law=law, dist=dists[r]) for r in r_list]

    quad_moments = [1.0] + [v.target for v in limit]
    identified = [1.0] + [v.identified for v in limit]
    candidate = smeared_moments(quad_moments, UNIQUENESS_DELTA)
    uniqueness = {
        "identified_matches_quadrature": _matches(identified[: kmax + 1], quad_moments[: kmax + 1]),
        "identified_matches_alternative": _matches(identified[: kmax + 1], candidate[: kmax + 1]),
        "alternative": f"quadrature law + N(0, {UNIQUENESS_DELTA})",
    }
    det_limit = determinacy_probe(quad_moments).to_json()
    det_by_r = []
    for i, r in enumerate(r_list):
        seq = [1.0] + [v.moments[i] for v in limit]
        det_by_r.append({"r": r, **determinacy_probe(seq).to_json()})

    tol = weak_tolerance(r_list[-1]) if weak_tol is None else weak_tol
    verdicts = {"moment_limit": all(v.passed for v in limit[:kmax])}
    verdicts.update(_weak_verdicts(ks, ints, fns, tol))
    verdicts["unique_limit"] = uniqueness["identified_matches_quadrature"] and not uniqueness["identified_matches_alternative"]
    verdicts["determinate_limit"] = det_limit["verdict"] == "consistent with determinacy"
    verdicts["determinate_by_r"] = all(d["verdict"] == "consistent with determinacy" for d in det_by_r)
    result = StateConvergence(
        state.label or "state",
        limit[:kmax],
        ks,
        ints,
        fns,
        det_limit,
        det_by_r,
        uniqueness,
        verdicts,
    )
    deficits = {str(r): dists[r].deficit for r in r_list}
    return result, deficits


def calibrate(states, theta: float, r_list, kmax: int = 6, weak_tol: float | None = None) -> ConvergenceReport:
    """Run the asymptotic-measurement protocol on a list of calibration states.

    Moments at every r, a Cauchy-at-tail limit check, identification of the
    limit with quadrature moments, determinacy probes on the limit and on each
    finite-r sequence, the four weak-convergence diagnostics, and the lattice
    counterexample.
    """
    states = list(states)
    if not states:
        raise CalibrationError("no calibration states")
    r_list = [float(r) for r in r_list]
    if any(r <= 0 for r in r_list):
        raise CalibrationError("oscillator amplitudes must be positive")
    results, deficits = [], {}
    for i, st in enumerate(states):
        label = st.label or f"state{i}"
        try:
            res, dfc = analyze_state(st, theta, r_list, kmax, weak_tol)
        except Exception as exc:
            raise CalibrationError(f"{label}: {exc}", state=label) from exc
        res.label = label
        results.append(res)
        deficits[label] = dfc

    if len(states) >= 2:
        mixture = SignalStateSpec.mixture([(1.0 / len(states), s) for s in states], "uniform mixture")
    else:
        mixture = SignalStateSpec.mixture([(0.5, states[0]), (0.5, fock(0))], "half vacuum mixture")
    mix_law = quadrature_law(mixture, theta)
    mixed = [mixed_state_diagnostic(mixture, theta, r, law=mix_law).tolist() for r in r_list]
    mixed_ks = [ks_distance(mixture, theta, r, mix_law) for r in r_list]
    tol = weak_tolerance(r_list[-1]) if weak_tol is None else weak_tol
    mixed_ok = strictly_decreasing(mixed_ks) and interval_verdict(mixed_ks, mixed, tol)
    for res in results:
        res.verdicts["mixed_state"] = mixed_ok

    cx = counterexample(states[0], theta, r_list)
    intervals_converge = all(res.verdicts["cdf_intervals"] for res in results)
    cx_section = {
        **cx,
        "summary": _lattice_summary(cx),
        "intervals_converge": intervals_converge,
        "flagged": (not cx["converges_on_lattice"]) and intervals_converge,
    }
    tolerances = {
        "moment": "max(1e-6, 2 max(1,|target|) r_max^-2 (<N>+1) k^2)",
        "moment_values": {r.label: {v.k: v.tol for v in r.moment_limit} for r in results},
        "weak": tol,
        "weak_note": "empirical: one lattice spacing at r_max; no rate is known for weak convergence",
        "identify_rtol": IDENTIFY_RTOL,
        "uniqueness_delta": UNIQUENESS_DELTA,
        "monotone_slack": MONOTONE_SLACK,
    }
    return ConvergenceReport(theta, r_list, kmax, results, mixed, mixture.label, cx_section, tolerances, deficits)
