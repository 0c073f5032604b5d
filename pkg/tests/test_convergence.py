import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import ive

from homodyne_limit.convergence import (
    CalibrationError,
    bounded_function_diagnostic,
    calibrate,
    cdf_interval_diagnostic,
    characteristic_function,
    counterexample,
    empirical_cf,
    interval_verdict,
    ks_continuous,
    ks_distance,
    mixed_state_diagnostic,
    moment_limit_check,
    richardson_limit,
    smeared_moments,
)
from homodyne_limit.fock import vector_state
from homodyne_limit.homodyne import Interval, homodyne_distribution, ray
from homodyne_limit.moments import gaussian_moments
from homodyne_limit.quadrature import coherent_quadrature_law, quadrature_law
from homodyne_limit.states import SignalStateSpec, coherent, fock


def test_moment_limit_gaps():
    verdicts = moment_limit_check(coherent(1.0), 0.0, [2.0, 4.0, 8.0], 4)
    assert max(verdicts[0].gaps) < 1e-8
    assert verdicts[1].gaps == pytest.approx([0.125, 0.03125, 0.0078125], abs=1e-6)
    assert all(v.passed for v in verdicts)
    vac = moment_limit_check(fock(0), 0.0, [2.0, 4.0, 8.0], 2)
    assert max(vac[1].gaps) < 1e-12


def test_moment_limit_needs_increasing_r():
    with pytest.raises(ValueError):
        moment_limit_check(fock(0), 0.0, [2.0, 4.0], 2)
    with pytest.raises(ValueError):
        moment_limit_check(fock(0), 0.0, [4.0, 2.0, 8.0], 2)


def test_richardson_recovers_polynomial_limit():
    r = [2.0, 4.0, 8.0]
    vals = [3.0 + 1.5 / x**2 - 0.25 / x**4 for x in r]
    assert richardson_limit(r, vals) == pytest.approx(3.0, abs=1e-12)


def test_vacuum_ray_gap_is_half_central_atom():
    gap = cdf_interval_diagnostic(fock(0), 0.0, 2.0, [ray(0.0)], law=coherent_quadrature_law(0))[0]
    assert gap == pytest.approx(ive(0, 4.0) / 2, abs=1e-12)  # ive already carries e^-4
    assert gap == pytest.approx(0.10350, abs=1e-5)


def test_whole_line_gap_bounded_by_deficit():
    dist = homodyne_distribution(coherent(1 + 1j), 3.0)
    gap = cdf_interval_diagnostic(coherent(1 + 1j), 0.0, 3.0, [Interval()], dist=dist)[0]
    assert gap <= dist.deficit + 1e-12


def test_ks_vacuum_sweep():
    law = coherent_quadrature_law(0)
    ks = [ks_distance(fock(0), 0.0, r, law) for r in (2.0, 4.0, 8.0, 16.0)]
    assert all(b < a for a, b in zip(ks, ks[1:]))
    assert ks[2] <= 0.1


def test_ks_between_identical_laws():
    law = quadrature_law(fock(1), 0.0)
    assert ks_continuous(law, law) == 0.0


def test_bounded_functions():
    gaps = bounded_function_diagnostic(
        fock(0), 0.0, 2.0, {"one": np.ones_like, "cos": np.cos}, law=coherent_quadrature_law(0)
    )
    assert gaps["one"] < 1e-12
    lattice = math.exp(4 * (math.cos(1 / (2 * math.sqrt(2))) - 1))
    assert gaps["cos"] == pytest.approx(abs(lattice - math.exp(-0.25)), abs=1e-12)


def test_mixture_gaps_linear_in_signed_form():
    mix = SignalStateSpec.mixture([(0.5, fock(0)), (0.5, fock(1))])
    ivs = [ray(0.5), Interval(-1, 1)]
    r = 3.0
    signed = lambda st: np.array(
        [homodyne_distribution(st, r).mass(iv) - quadrature_law(st, 0.0).mass(iv) for iv in ivs]
    )
    assert np.abs(signed(mix) - 0.5 * signed(fock(0)) - 0.5 * signed(fock(1))).max() < 1e-9
    with pytest.raises(ValueError):
        mixed_state_diagnostic(fock(0), 0.0, r)


def test_mixture_sweep_decreases():
    mix = SignalStateSpec.mixture([(0.5, fock(0)), (0.5, fock(1))])
    law = quadrature_law(mix, 0.0)
    gaps = [mixed_state_diagnostic(mix, 0.0, r, law=law).max() for r in (2.0, 4.0, 8.0)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_characteristic_function_reference():
    assert characteristic_function(0, 2.0, 0.0, 0.0) == pytest.approx(1.0)
    val = characteristic_function(0, 2.0, 0.0, 1.0)
    assert val.real == pytest.approx(math.exp(4 * (math.cos(1 / (2 * math.sqrt(2))) - 1)), abs=1e-14)
    assert val.real == pytest.approx(0.780823, abs=1e-6)


@given(st.complex_numbers(max_magnitude=1.5), st.floats(1.0, 4.0), st.floats(0, 2 * math.pi))
def test_characteristic_function_matches_lattice(beta, r, theta):
    t = np.linspace(-5, 5, 21)
    dist = homodyne_distribution(coherent(beta), r, theta)
    assert np.abs(empirical_cf(dist, t) - characteristic_function(beta, r, theta, t)).max() < 1e-9


def test_counterexample():
    cx = counterexample(fock(0), 0.0, [2.0, 4.0, 8.0])
    assert cx["lattice_mass_E"] == pytest.approx([1.0] * 3, abs=1e-12)
    assert cx["lattice_mass_Q"] == [0.0] * 3
    assert cx["converges_on_lattice"] is False


def test_interval_verdict_envelope():
    ks = [0.1, 0.05, 0.02]
    assert interval_verdict(ks, [[0.1], [0.02], [0.03]], 0.05)
    assert not interval_verdict(ks, [[0.1], [0.2], [0.03]], 0.05)


def test_smeared_moments_add_variance():
    m = smeared_moments(gaussian_moments(4, 0.3, 0.5), 0.05)
    assert m == pytest.approx(gaussian_moments(4, 0.3, 0.55))


def test_calibrate_coherent():
    rep = calibrate([coherent(1.0)], 0.0, [2.0, 4.0, 8.0], 6)
    st0 = rep.states[0]
    assert all(v.passed for v in st0.moment_limit) and len(st0.moment_limit) == 6
    assert all(b < a for a, b in zip(st0.ks_distance, st0.ks_distance[1:]))
    assert rep.counterexample["flagged"]
    assert rep.all_pass


def test_calibrate_superposition():
    sup = SignalStateSpec.pure(vector_state([1, 0, 1], normalize=True), "sup02")
    rep = calibrate([sup], 0.0, [2.0, 4.0, 8.0], 6)
    assert rep.all_pass, rep.states[0].verdicts


def test_calibrate_empty():
    with pytest.raises(CalibrationError, match="no calibration states"):
        calibrate([], 0.0, [2.0, 4.0, 8.0])


def test_ks_vacuum_vs_one_photon_closed_form():
    # F0 - F1 = x e^{-x^2} / sqrt(pi), maximal at x = 1/sqrt2
    ks = ks_continuous(quadrature_law(fock(0), 0.0), quadrature_law(fock(1), 0.0))
    assert ks == pytest.approx(math.exp(-0.5) / math.sqrt(2 * math.pi), abs=1e-8)
