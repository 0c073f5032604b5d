"""Balanced homodyne detection on truncated Fock spaces and its high-amplitude limit."""

from .beamsplitter import apply_beamsplitter, product_state, sector_unitary, signal_with_oscillator
from .convergence import calibrate, characteristic_function, counterexample, ks_distance, moment_limit_check
from .fock import FockVector, HermitianOperator, TruncationBudgetError, coherent_state, fock_state, rotated_quadrature
from .homodyne import Interval, LatticeDistribution, effect_matrix, homodyne_distribution, ray
from .moments import determinacy_probe, exp_moment_bound_check, moment_operator_matrix, moment_report
from .quadrature import coherent_quadrature_law, quadrature_density, quadrature_law, quadrature_moment
from .states import SignalStateSpec, coherent, fock, load_state, parse_state

__version__ = "0.1.0"
