"""Multistable spin currents and probe spectroscopy of Kerr magnon polaritons."""

from .model import (CavityMode, Detunings, Drive, MagnonMode, ParameterError,
                    PhysicalConstants, SystemParams, angular, build_system,
                    cycles, derive_detunings, linewidth_from_rate,
                    rabi_from_power, rate_from_linewidth)
from .probe import (PolaritonPeaks, ProbeSpec, ShiftCurve, Spectrum,
                    closed_form_single, closed_form_two, default_probe_spec,
                    extract_peaks, peak_positions_single, response_single,
                    response_two, shift_vs_power, sigma_position)
from .steady import (SpinPolynomial, SteadyBranch, build_spin_polynomial,
                     classify_stability, linear_spin_current, mean_field_rhs,
                     reconstruct_amplitudes, solve_single_yig, solve_steady,
                     solve_two_yig, stability_matrix)
from .sweep import (JumpEvent, RegimeReport, SweepSpec, SweepTrace,
                    classify_regime, follow_branches, leakage_robustness,
                    run_sweep)

__version__ = "0.1.0"
