"""Weak-probe linear response of the driven steady state.

A weak probe at detuning ``delta`` from the drive scatters off the stationary
amplitudes; keeping the first sideband pair turns the equations of motion into
a small linear system per grid point (4 unknowns for one magnon mode, 6 for
two).  The normalized cavity response ``T(delta)`` exposes the polariton
peaks, whose drive-power dependence carries the multistability signature.

The direct linear solve is the canonical output; closed-form expressions are
retained as cross-checks.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import TWO_PI, SystemParams, derive_detunings
from .steady import SteadyBranch, solve_steady
from .sweep import follow_branches

__all__ = [
    "ProbeSpec", "Spectrum", "PolaritonPeaks", "ShiftCurve",
    "ProbeSingularityError", "ComplexFrequencyError", "ClosedFormError",
    "default_probe_spec", "response_single", "closed_form_single",
    "peak_positions_single", "response_two", "closed_form_two",
    "extract_peaks", "sigma_position", "shift_vs_power",
]

SIGMAS = ("LP", "MP", "HP")

#: Closed-form vs direct-solve agreement threshold for the two-mode check.
AGREEMENT_RTOL = 1e-6
#: Absolute floor for shift-curve jump detection (rad/s).
SHIFT_JUMP_FLOOR = TWO_PI * 1e6


class ProbeSingularityError(ArithmeticError):
    """Probe response evaluated at an exactly singular point."""


class ComplexFrequencyError(ArithmeticError):
    """Polariton frequency formula left the real domain (overdamped regime)."""


class ClosedFormError(ValueError):
    """Closed-form two-mode coefficients are undefined for this background."""


@dataclass(frozen=True)
class ProbeSpec:
    """Probe detuning grid (rad/s, strictly increasing) and probe amplitude.

    The response is normalized by ``ep``, so its value only matters for
    conditioning; the grid must resolve the linewidths of interest.
    """

    delta: np.ndarray
    ep: float = 1.0

    def __post_init__(self):
        grid = np.asarray(self.delta, dtype=float)
        if grid.ndim != 1 or grid.size < 3:
            raise ValueError("delta grid must be 1-D with at least 3 points")
        if not np.all(np.diff(grid) > 0):
            raise ValueError("delta grid must be strictly increasing")
        if self.ep <= 0:
            raise ValueError("probe amplitude must be positive")
        object.__setattr__(self, "delta", grid)


def default_probe_spec(params: SystemParams, half_span_mhz: float = 150.0,
                       points: int = 4001) -> ProbeSpec:
    """Grid of ``points`` detunings spanning +-``half_span_mhz`` around the cavity."""
    det = derive_detunings(params)
    span = TWO_PI * half_span_mhz * 1e6
    return ProbeSpec(delta=np.linspace(det.delta_c - span, det.delta_c + span,
                                       points))


@dataclass(frozen=True)
class Spectrum:
    """Complex transmission on a detuning grid, for one steady branch."""

    delta: np.ndarray
    transmission: np.ndarray
    magnitude2: np.ndarray
    branch: SteadyBranch


@dataclass(frozen=True)
class PolaritonPeaks:
    """Refined local maxima of ``|T|^2``, ascending in frequency."""

    delta: np.ndarray
    height: np.ndarray
    labels: tuple[str, ...]


@dataclass(frozen=True)
class ShiftCurve:
    """Peak frequency shift versus drive power along one sweep direction.

    ``shift`` is NaN where the requested peak was unresolvable.  ``jumps``
    holds ``(index, power_before, power_after)`` for discontinuities detected
    in the shift signal itself.
    """

    power: np.ndarray
    shift: np.ndarray
    sigma: str
    direction: str
    reference_delta: float
    jumps: list[tuple[int, float, float]]


def _sideband_shifts(branch_amp: complex, kerr: float, delta_bare: float,
                     gamma: float):
    eff = delta_bare + 4.0 * kerr * abs(branch_amp) ** 2 - 1j * gamma
    cross = 2.0 * kerr * branch_amp**2
    return eff, cross


def _solve_single(params: SystemParams, branch: SteadyBranch, d: np.ndarray,
                  ep: float) -> np.ndarray:
    det = derive_detunings(params)
    mode = params.magnons[0]
    eff, cross = _sideband_shifts(branch.m1, mode.kerr, det.delta[0],
                                  mode.gamma)
    dc = det.delta_c_complex
    g = mode.coupling
    n = d.size
    mat = np.zeros((n, 4, 4), dtype=complex)
    mat[:, 0, 0] = eff - d
    mat[:, 0, 1] = cross
    mat[:, 0, 2] = g
    mat[:, 1, 0] = np.conj(cross)
    mat[:, 1, 1] = np.conj(eff) + d
    mat[:, 1, 3] = g
    mat[:, 2, 0] = g
    mat[:, 2, 2] = dc - d
    mat[:, 3, 1] = g
    mat[:, 3, 3] = np.conj(dc) + d
    rhs = np.zeros((n, 4, 1), dtype=complex)
    rhs[:, 2, 0] = -1j * ep
    try:
        sol = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise ProbeSingularityError(str(exc)) from exc
    return sol[:, 2, 0] / ep


def response_single(params: SystemParams, branch: SteadyBranch,
                    spec: ProbeSpec) -> Spectrum:
    """Direct solve of the 4-unknown sideband system for one magnon mode."""
    if params.n_magnons != 1:
        raise ValueError("single magnon mode required")
    t = _solve_single(params, branch, spec.delta, spec.ep)
    return Spectrum(delta=spec.delta, transmission=t,
                    magnitude2=np.abs(t) ** 2, branch=branch)


def closed_form_single(params: SystemParams, branch: SteadyBranch, delta):
    """Closed-form single-mode transmission; cross-check for the direct solve.

    Eliminating the conjugate sideband gives an effective magnon response
    ``v`` whose Kerr term carries ``(kerr * |m0|^2)^2``; this is the
    dimensionally consistent reading of the published expression.
    """
    if params.n_magnons != 1:
        raise ValueError("single magnon mode required")
    det = derive_detunings(params)
    mode = params.magnons[0]
    eff, _ = _sideband_shifts(branch.m1, mode.kerr, det.delta[0], mode.gamma)
    dc = det.delta_c_complex
    g = mode.coupling
    d = np.asarray(delta, dtype=float)
    x0 = abs(branch.m1) ** 2
    inner = (np.conj(dc) + d) * (np.conj(eff) + d) - g**2
    if np.any(inner == 0):
        raise ProbeSingularityError("conjugate-sideband denominator vanished")
    v = (eff - d - g**2 / (dc - d)
         - 4.0 * (mode.kerr * x0) ** 2 * (np.conj(dc) + d) / inner)
    if np.any(v == 0):
        raise ProbeSingularityError("effective response denominator vanished")
    t = -1j / (dc - d) * (1.0 + g**2 / ((dc - d) * v))
    return t if t.ndim else complex(t)


def peak_positions_single(params: SystemParams, x0: float) -> tuple[float, float]:
    """Analytic single-mode polariton peak positions for background ``x0``.

    Solves the undamped resonance condition; returns the signed detunings
    (lower, higher).  Raises :class:`ComplexFrequencyError` when the formula
    leaves the real domain.
    """
    if params.n_magnons != 1:
        raise ValueError("single magnon mode required")
    if x0 < 0:
        raise ValueError("x0 must be nonnegative")
    det = derive_detunings(params)
    mode = params.magnons[0]
    dm = det.delta[0] + 4.0 * mode.kerr * x0
    dc = det.delta_c
    g = mode.coupling
    k = mode.kerr * x0
    inner = (((dm - dc) ** 2 + 4.0 * g**2 - 4.0 * k**2)
             * ((dm + dc) ** 2 - 4.0 * k**2)) + 16.0 * k**2 * dc**2
    if inner < 0:
        raise ComplexFrequencyError("negative discriminant under inner root")
    base = dm**2 + dc**2 + 2.0 * g**2 - 4.0 * k**2
    sq_hi = 0.5 * (base + math.sqrt(inner))
    sq_lo = 0.5 * (base - math.sqrt(inner))
    if sq_hi < 0 or sq_lo < 0:
        raise ComplexFrequencyError("negative squared polariton frequency")
    mag_hi, mag_lo = math.sqrt(sq_hi), math.sqrt(sq_lo)
    # the squared roots lose the signs; recover them from the trace
    trace = dm + dc
    candidates = [(sa * mag_hi, sb * mag_lo)
                  for sa in (1.0, -1.0) for sb in (1.0, -1.0)]
    pair = min(candidates, key=lambda p: abs(p[0] + p[1] - trace))
    return min(pair), max(pair)


def _solve_two(params: SystemParams, branch: SteadyBranch, d: np.ndarray,
               ep: float) -> np.ndarray:
    det = derive_detunings(params)
    m1, m2 = params.magnons
    eff1, cross1 = _sideband_shifts(branch.m1, m1.kerr, det.delta[0], m1.gamma)
    eff2, cross2 = _sideband_shifts(branch.m2, m2.kerr, det.delta[1], m2.gamma)
    dc = det.delta_c_complex
    g1, g2 = m1.coupling, m2.coupling
    n = d.size
    mat = np.zeros((n, 6, 6), dtype=complex)
    mat[:, 0, 0] = eff1 - d
    mat[:, 0, 1] = cross1
    mat[:, 0, 4] = g1
    mat[:, 1, 0] = np.conj(cross1)
    mat[:, 1, 1] = np.conj(eff1) + d
    mat[:, 1, 5] = g1
    mat[:, 2, 2] = eff2 - d
    mat[:, 2, 3] = cross2
    mat[:, 2, 4] = g2
    mat[:, 3, 2] = np.conj(cross2)
    mat[:, 3, 3] = np.conj(eff2) + d
    mat[:, 3, 5] = g2
    mat[:, 4, 0] = g1
    mat[:, 4, 2] = g2
    mat[:, 4, 4] = dc - d
    mat[:, 5, 1] = g1
    mat[:, 5, 3] = g2
    mat[:, 5, 5] = np.conj(dc) + d
    rhs = np.zeros((n, 6, 1), dtype=complex)
    rhs[:, 4, 0] = -1j * ep
    try:
        sol = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise ProbeSingularityError(str(exc)) from exc
    return sol[:, 4, 0] / ep


def response_two(params: SystemParams, branch: SteadyBranch,
                 spec: ProbeSpec) -> Spectrum:
    """Direct solve of the 6-unknown sideband system for two magnon modes."""
    if params.n_magnons != 2:
        raise ValueError("two magnon modes required")
    if branch.m2 is None:
        raise ValueError("branch lacks the second magnon amplitude")
    t = _solve_two(params, branch, spec.delta, spec.ep)
    return Spectrum(delta=spec.delta, transmission=t,
                    magnitude2=np.abs(t) ** 2, branch=branch)


def closed_form_two(params: SystemParams, branch: SteadyBranch, delta,
                    ep: float = 1.0):
    """Two-mode closed form, transcribed verbatim from its published source.

    Returns ``(t, agree)`` where ``agree`` flags pointwise agreement with the
    direct solve within :data:`AGREEMENT_RTOL`.  The transcription retains a
    suspected misprint in one coefficient denominator, so persistent
    disagreement is expected and recorded rather than silently corrected.
    Requires nonzero Kerr coefficients and background amplitudes.
    """
    if params.n_magnons != 2:
        raise ValueError("two magnon modes required")
    if branch.m2 is None:
        raise ValueError("branch lacks the second magnon amplitude")
    mo1, mo2 = params.magnons
    b1, b2 = branch.m1, branch.m2
    if b1 == 0 or b2 == 0 or mo1.kerr == 0 or mo2.kerr == 0:
        raise ClosedFormError("closed form needs nonzero Kerr coefficients "
                              "and background amplitudes; use the direct solve")
    det = derive_detunings(params)
    eff1, _ = _sideband_shifts(b1, mo1.kerr, det.delta[0], mo1.gamma)
    eff2, _ = _sideband_shifts(b2, mo2.kerr, det.delta[1], mo2.gamma)
    dc = det.delta_c_complex
    g1, g2 = mo1.coupling, mo2.coupling
    u1, u2 = mo1.kerr, mo2.kerr
    d = np.asarray(delta, dtype=float)

    r12 = (u1 * b1**2) / (u2 * b2**2)
    r21 = (u2 * b2**2) / (u1 * b1**2)
    dcm = dc - d
    dcp = np.conj(dc) + d
    v11 = (eff1 - d - g1**2 / dcm
           + r12 * (g1**2 * g2**2 - 4.0 * u1 * u2 * dcp * dcm
                    * np.conj(b1) ** 2 * b2**2)
           / (dcm * (dcp * (dc + d) - g1**2)))
    v22 = (eff2 - d - g2**2 / dcm
           + r21 * (g1**2 * g2**2 - 4.0 * u1 * u2 * dcp * dcm
                    * b1**2 * np.conj(b2) ** 2)
           / (dcm * (dcp * (dc + d) - g2**2)))
    v12 = g1 * g2 / dcm * (r12 * (g2**2 - dcm * (eff2 - d))
                           / (dcp * (np.conj(eff1) + d) - g1**2) - 1.0)
    v21 = g1 * g2 / dcm * (r21 * (g1**2 - dcm * (eff1 - d))
                           / (dcp * (np.conj(eff2) + d) - g2**2) - 1.0)
    a1 = g1 / dcm * (1.0 - r12 * g2**2
                     / (dcp * (np.conj(eff1) + d) - g1**2))
    a2 = g2 / dcm * (1.0 - r21 * g1**2
                     / (dcp * (np.conj(eff2) + d) - g2**2))
    det2 = v11 * v22 - v12 * v21
    if np.any(det2 == 0):
        raise ClosedFormError("2x2 reduction is singular at an evaluation point")
    t = -1j / dcm * (1.0 + ((g1 * v22 - g2 * v21) * a1
                            - (g1 * v12 - g2 * v11) * a2) / det2)

    direct = _solve_two(params, branch, np.atleast_1d(d), ep)
    direct = direct if d.ndim else direct[0]
    agree = np.abs(t - direct) / np.abs(direct) < AGREEMENT_RTOL
    if d.ndim:
        return t, agree
    return complex(t), bool(agree)


def extract_peaks(spectrum: Spectrum) -> PolaritonPeaks:
    """Strict local maxima of ``|T|^2``, refined by 3-point parabolic fit.

    Labels are LP/HP for two peaks and LP/MP/HP for three, ascending in
    frequency; other counts get positional labels.
    """
    mag = spectrum.magnitude2
    d = spectrum.delta
    idx = np.nonzero((mag[1:-1] > mag[:-2]) & (mag[1:-1] > mag[2:]))[0] + 1
    if idx.size == 0:
        warnings.warn("no local maxima found in |T|^2 on the probe grid",
                      stacklevel=2)
        return PolaritonPeaks(delta=np.array([]), height=np.array([]),
                              labels=())
    pos = np.empty(idx.size)
    height = np.empty(idx.size)
    for j, i in enumerate(idx):
        a, b, c = np.polyfit(d[i - 1:i + 2], mag[i - 1:i + 2], 2)
        if a < 0:
            pos[j] = -b / (2.0 * a)
            height[j] = c - b**2 / (4.0 * a)
        else:  # numerically flat triple; keep the grid point
            pos[j] = d[i]
            height[j] = mag[i]
    order = np.argsort(pos)
    pos, height = pos[order], height[order]
    if idx.size == 2:
        labels = ("LP", "HP")
    elif idx.size == 3:
        labels = ("LP", "MP", "HP")
    else:
        labels = tuple(f"P{k + 1}" for k in range(idx.size))
    return PolaritonPeaks(delta=pos, height=height, labels=labels)


def sigma_position(peaks: PolaritonPeaks, sigma: str) -> float:
    """Frequency of the requested polariton peak, NaN when unresolvable.

    HP/LP map to the extreme peaks whenever at least two are resolved; MP
    needs exactly three.
    """
    if sigma not in SIGMAS:
        raise ValueError(f"sigma must be one of {SIGMAS}")
    n = peaks.delta.size
    if n < 2:
        return math.nan
    if sigma == "LP":
        return float(peaks.delta[0])
    if sigma == "HP":
        return float(peaks.delta[-1])
    if n == 3:
        return float(peaks.delta[1])
    return math.nan


def _response_for(params: SystemParams, branch: SteadyBranch,
                  spec: ProbeSpec) -> Spectrum:
    if params.n_magnons == 2:
        return response_two(params, branch, spec)
    return response_single(params, branch, spec)


def _detect_shift_jumps(power: np.ndarray,
                        shift: np.ndarray) -> list[tuple[int, float, float]]:
    steps = []
    for k in range(1, shift.size):
        if math.isfinite(shift[k]) and math.isfinite(shift[k - 1]):
            steps.append(abs(shift[k] - shift[k - 1]))
    if not steps:
        return []
    threshold = max(10.0 * float(np.median(steps)), SHIFT_JUMP_FLOOR)
    jumps = []
    for k in range(1, shift.size):
        if (math.isfinite(shift[k]) and math.isfinite(shift[k - 1])
                and abs(shift[k] - shift[k - 1]) > threshold):
            jumps.append((k, float(power[k - 1]), float(power[k])))
    return jumps


def shift_vs_power(params: SystemParams, power_grid, sigma: str,
                   direction: str = "up",
                   spec: ProbeSpec | None = None) -> ShiftCurve:
    """Polariton frequency shift along a hysteretic power sweep.

    The zero-power peak defines the reference frequency; backgrounds follow
    the sweep module's branch selection in the given direction.  Unresolvable
    peaks leave NaN gaps instead of aborting.
    """
    if sigma not in SIGMAS:
        raise ValueError(f"sigma must be one of {SIGMAS}")
    if direction not in ("up", "down"):
        raise ValueError("direction must be 'up' or 'down'")
    if spec is None:
        spec = default_probe_spec(params)
    grid = np.sort(np.asarray(power_grid, dtype=float))
    if np.any(grid < 0):
        raise ValueError("powers must be nonnegative")

    zero = solve_steady(params.with_parameter("power", 0.0))[0]
    ref_peaks = extract_peaks(_response_for(params, zero, spec))
    ref = sigma_position(ref_peaks, sigma)
    if math.isnan(ref):
        raise ValueError(f"{sigma} peak unresolvable at zero power")

    values = grid if direction == "up" else grid[::-1].copy()
    selected, _, _ = follow_branches(params, "power", values,
                                     start_high=(direction == "down"))
    shift = np.empty(values.size)
    for k, (p, branch) in enumerate(zip(values, selected)):
        peaks = extract_peaks(
            _response_for(params.with_parameter("power", float(p)), branch,
                          spec))
        pos = sigma_position(peaks, sigma)
        shift[k] = pos - ref if math.isfinite(pos) else math.nan
    jumps = _detect_shift_jumps(values, shift)
    return ShiftCurve(power=values, shift=shift, sigma=sigma,
                      direction=direction, reference_delta=ref, jumps=jumps)
