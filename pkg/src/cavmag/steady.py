"""Steady states of the driven Kerr-nonlinear magnon-cavity system.

For two magnon modes the stationary amplitudes reduce to a degree-9 real
polynomial in the excitation number ``x = |m2|^2`` transferred to the undriven
sphere; for a single mode the analogue is a cubic in ``x = |m|^2``.  Every
nonnegative real root is reconstructed into complex amplitudes and classified
by the eigenvalues of the linearized mean-field flow.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .model import Detunings, MagnonMode, SystemParams, derive_detunings

__all__ = [
    "SteadyBranch", "SpinPolynomial", "DegenerateCouplingError",
    "SingularSteadyStateError", "ResonanceSingularityError", "RootSearchError",
    "build_spin_polynomial", "reconstruct_amplitudes", "linear_spin_current",
    "solve_two_yig", "solve_single_yig", "classify_stability",
    "stability_matrix", "mean_field_rhs",
]

#: Relative tolerance for merging nearly equal roots.
DEDUP_RTOL = 1e-8
#: A branch is stable when max Re(eigenvalue) < STABILITY_BAND * gamma_c.
STABILITY_BAND = 1e-6
#: Default log-spaced search grid for the excitation number.
GRID_LO, GRID_HI, GRID_POINTS = 1e8, 1e18, 2000


class DegenerateCouplingError(ValueError):
    """Two-mode reduction requires both cavity couplings nonzero."""


class SingularSteadyStateError(ArithmeticError):
    """Amplitude reconstruction hit a zero of the response denominator."""


class ResonanceSingularityError(ArithmeticError):
    """Closed-form expression evaluated at an exact resonance."""


class RootSearchError(RuntimeError):
    """Root polishing failed; carries the polynomial coefficients."""

    def __init__(self, message, coeffs):
        super().__init__(message)
        self.coeffs = coeffs


@dataclass(frozen=True)
class SteadyBranch:
    """One steady-state solution.

    ``x`` is ``|m2|^2`` (two modes) or ``|m|^2`` (single mode); ``m2`` is None
    in single-mode operation.  ``residual`` is the max modulus of the
    stationarity equations at the reconstructed amplitudes.  ``eigenvalues``
    are those of the real Jacobian of the mean-field flow at this point.
    """

    x: float
    m1: complex
    m2: complex | None
    a: complex
    residual: float
    stable: bool
    eigenvalues: np.ndarray
    multiplicity: int = 1


@dataclass(frozen=True)
class SpinPolynomial:
    """Degree-9 polynomial whose nonnegative roots are steady excitation numbers.

    ``coeffs`` are the 10 real coefficients in ascending order; ``rhs`` is the
    constant drive term, so ``p(0) = -rhs``.
    """

    coeffs: np.ndarray
    rhs: float

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)


def _kerr_weight(det: Detunings, magnons) -> float:
    g1, g2 = magnons[0].coupling, magnons[1].coupling
    mod2 = det.delta_c**2 + det.delta_c_complex.imag**2
    return 2.0 * magnons[0].kerr * mod2 / (g1**2 * g2**2)


def _denominator(x: float, det: Detunings, magnons) -> complex:
    """Complex response denominator whose squared modulus enters the polynomial."""
    g1, g2 = magnons[0].coupling, magnons[1].coupling
    line2 = det.dressed[1] + 2.0 * magnons[1].kerr * x
    c1 = _kerr_weight(det, magnons)
    return ((det.dressed[0] + c1 * abs(line2) ** 2 * x) * line2
            - g1**2 * g2**2 / det.delta_c_complex**2)


def build_spin_polynomial(det: Detunings, magnons, rabi: float) -> SpinPolynomial:
    """Expand the two-mode steady-state condition into real coefficients.

    The excitation number of the undriven mode satisfies
    ``|denominator(x)|^2 * x = g1^2 g2^2 rabi^2 / (delta_c^2 + gamma_c^2)``
    with a denominator quartic in x, giving a degree-9 real polynomial.
    """
    if len(magnons) != 2:
        raise DegenerateCouplingError("two magnon modes required")
    if magnons[0].coupling == 0 or magnons[1].coupling == 0:
        raise DegenerateCouplingError(
            "both couplings must be nonzero; run the single-mode solver instead")
    if rabi < 0:
        raise ValueError("rabi must be nonnegative")
    g1, g2 = magnons[0].coupling, magnons[1].coupling
    u2 = magnons[1].kerr
    gamma_c = -det.delta_c_complex.imag
    mod2 = det.delta_c**2 + gamma_c**2
    rhs = g1**2 * g2**2 * rabi**2 / mod2

    P = np.polynomial.Polynomial
    line2 = P([det.dressed[1], 2.0 * u2])
    quad = line2 * P(np.conj(line2.coef))          # |line2|^2, real for real x
    c1 = _kerr_weight(det, magnons)
    denom = (P([det.dressed[0]]) + c1 * quad * P([0.0, 1.0])) * line2 \
        - P([g1**2 * g2**2 / det.delta_c_complex**2])
    poly = denom * P(np.conj(denom.coef)) * P([0.0, 1.0]) - P([rhs])
    coeffs = np.zeros(10)
    coeffs[: poly.coef.size] = np.real(poly.coef)
    return SpinPolynomial(coeffs=coeffs, rhs=rhs)


def characteristic_x(det: Detunings, magnons, rabi: float) -> float:
    """Scale for the excitation number, from the Kerr-free response."""
    g1, g2 = magnons[0].coupling, magnons[1].coupling
    gamma_c = -det.delta_c_complex.imag
    mod2 = det.delta_c**2 + gamma_c**2
    dd = abs(det.dressed[0] * det.dressed[1]) ** 2
    if rabi == 0 or dd == 0:
        return 1.0
    return rabi**2 / mod2 * g1**2 * g2**2 / dd


def real_nonneg_roots(coeffs: np.ndarray,
                      lo: float = GRID_LO,
                      hi: float = GRID_HI,
                      points: int = GRID_POINTS) -> list[tuple[float, int]]:
    """Real nonnegative roots of a polynomial with ascending ``coeffs``.

    Scans a log grid (with 0 prepended) for sign changes, polishes each
    bracket with Brent's method, and merges near-identical roots, returning
    ``(root, multiplicity)`` pairs in ascending order.  The grid extends
    upward by decades while the polynomial is still negative at the top.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if not np.any(coeffs):
        return []
    pol = np.polynomial.Polynomial(coeffs)
    grid = np.concatenate(([0.0], np.geomspace(lo, hi, points)))
    vals = pol(grid)
    # leading coefficient sign rules p at +inf; extend until that sign shows up
    top = grid[-1]
    lead = coeffs[np.nonzero(coeffs)[0][-1]]
    extra = 0
    while np.sign(vals[-1]) != np.sign(lead) and extra < 60:
        top *= 10.0
        grid = np.append(grid, top)
        vals = np.append(vals, pol(top))
        extra += 1

    roots = []
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(grid[i])
            continue
        if a * b < 0:
            try:
                r = brentq(pol, grid[i], grid[i + 1],
                           rtol=4 * np.finfo(float).eps, maxiter=200)
            except Exception as exc:  # pragma: no cover - brentq is robust
                raise RootSearchError(f"root polish failed in "
                                      f"[{grid[i]:g}, {grid[i+1]:g}]: {exc}",
                                      coeffs) from exc
            roots.append(r)
    if vals[-1] == 0.0:
        roots.append(grid[-1])

    roots.sort()
    merged: list[tuple[float, int]] = []
    for r in roots:
        if merged and abs(r - merged[-1][0]) <= DEDUP_RTOL * max(abs(r), abs(merged[-1][0])):
            merged[-1] = (merged[-1][0], merged[-1][1] + 1)
        else:
            merged.append((r, 1))
    return merged


def reconstruct_amplitudes(x: float, det: Detunings, magnons,
                           rabi: float) -> tuple[complex, complex, complex, float]:
    """Back-substitute a root ``x`` into the two-mode stationarity equations.

    Returns ``(m1, m2, a, residual)``.
    """
    if x < 0:
        raise ValueError("x must be nonnegative")
    g1, g2 = magnons[0].coupling, magnons[1].coupling
    u1, u2 = magnons[0].kerr, magnons[1].kerr
    gamma1, gamma2 = magnons[0].gamma, magnons[1].gamma
    dcc = det.delta_c_complex
    gamma_c = -dcc.imag
    denom = _denominator(x, det, magnons)
    if denom == 0:
        raise SingularSteadyStateError("response denominator vanished")
    m2 = -1j * g1 * g2 * rabi / (dcc * denom)
    d2_shift = det.delta[1] + 2.0 * u2 * x - 1j * gamma2
    a = -(d2_shift / g2) * m2
    m1 = (dcc * d2_shift - g2**2) * m2 / (g1 * g2)

    e1 = (-(1j * det.delta[0] + gamma1) * m1
          - 2j * u1 * abs(m1) ** 2 * m1 - 1j * g1 * a + rabi)
    e2 = (-(1j * det.delta[1] + gamma2) * m2
          - 2j * u2 * abs(m2) ** 2 * m2 - 1j * g2 * a)
    e3 = -(1j * det.delta_c + gamma_c) * a - 1j * (g1 * m1 + g2 * m2)
    residual = max(abs(e1), abs(e2), abs(e3))
    return m1, m2, a, residual


def linear_spin_current(params: SystemParams) -> float:
    """Kerr-free excitation number of the undriven mode (exact linear response).

    Equal to the unique root of the steady-state polynomial in the limit of
    vanishing Kerr coefficients.
    """
    if params.n_magnons != 2:
        raise DegenerateCouplingError("two magnon modes required")
    det = derive_detunings(params)
    g1, g2 = params.magnons[0].coupling, params.magnons[1].coupling
    gamma_c = params.cavity.gamma
    mod2 = det.delta_c**2 + gamma_c**2
    denom = abs(det.dressed[0] * det.dressed[1]
                - g1**2 * g2**2 / det.delta_c_complex**2) ** 2
    if denom == 0:
        raise ResonanceSingularityError("linear response denominator vanished")
    return g1**2 * g2**2 * params.rabi() ** 2 / (mod2 * denom)


def _conjugate_pair_block(dz: complex, dzbar: complex) -> np.ndarray:
    """2x2 real block for d(F)/d(Re z, Im z) given complex derivatives."""
    return np.array([[(dz + dzbar).real, -(dz - dzbar).imag],
                     [(dz + dzbar).imag, (dz - dzbar).real]])


def stability_matrix(m_amps, a: complex, params: SystemParams) -> np.ndarray:
    """Real Jacobian of the noise-free mean-field flow at given amplitudes.

    State ordering: (Re m1, Im m1[, Re m2, Im m2], Re a, Im a).
    """
    det = derive_detunings(params)
    n = params.n_magnons
    size = 2 * (n + 1)
    jac = np.zeros((size, size))
    ia = 2 * n
    for k, mode in enumerate(params.magnons):
        mk = m_amps[k]
        dz = -(1j * det.delta[k] + mode.gamma) - 4j * mode.kerr * abs(mk) ** 2
        dzbar = -2j * mode.kerr * mk**2
        jac[2 * k:2 * k + 2, 2 * k:2 * k + 2] = _conjugate_pair_block(dz, dzbar)
        jac[2 * k:2 * k + 2, ia:ia + 2] = _conjugate_pair_block(-1j * mode.coupling, 0.0)
        jac[ia:ia + 2, 2 * k:2 * k + 2] = _conjugate_pair_block(-1j * mode.coupling, 0.0)
    jac[ia:ia + 2, ia:ia + 2] = _conjugate_pair_block(
        -(1j * det.delta_c + params.cavity.gamma), 0.0)
    return jac


def classify_stability(branch: SteadyBranch,
                       params: SystemParams) -> tuple[bool, np.ndarray]:
    """Eigenvalue stability of a steady branch.

    Stable iff every eigenvalue real part is below ``1e-6 * gamma_c``; the
    small positive band keeps marginal points at turning values deterministic.
    """
    m_amps = (branch.m1,) if branch.m2 is None else (branch.m1, branch.m2)
    eig = np.linalg.eigvals(stability_matrix(m_amps, branch.a, params))
    stable = bool(eig.real.max() < STABILITY_BAND * params.cavity.gamma)
    return stable, eig


def mean_field_rhs(params: SystemParams):
    """Real-vector mean-field flow ``f(t, y)`` for time integration.

    ``y`` follows the ordering of :func:`stability_matrix`.
    """
    det = derive_detunings(params)
    rabi = params.rabi()
    n = params.n_magnons
    modes = params.magnons
    gamma_c = params.cavity.gamma

    def rhs(t, y):
        m = [y[2 * k] + 1j * y[2 * k + 1] for k in range(n)]
        a = y[2 * n] + 1j * y[2 * n + 1]
        out = np.empty(2 * (n + 1))
        for k, mode in enumerate(modes):
            drive = rabi if k == 0 else 0.0
            f = (-(1j * det.delta[k] + mode.gamma) * m[k]
                 - 2j * mode.kerr * abs(m[k]) ** 2 * m[k]
                 - 1j * mode.coupling * a + drive)
            out[2 * k], out[2 * k + 1] = f.real, f.imag
        fa = -(1j * det.delta_c + gamma_c) * a - 1j * sum(
            mode.coupling * mk for mode, mk in zip(modes, m))
        out[2 * n], out[2 * n + 1] = fa.real, fa.imag
        return out

    return rhs


def _finish_branch(x: float, m1: complex, m2: complex | None, a: complex,
                   residual: float, multiplicity: int,
                   params: SystemParams) -> SteadyBranch:
    m_amps = (m1,) if m2 is None else (m1, m2)
    eig = np.linalg.eigvals(stability_matrix(m_amps, a, params))
    stable = bool(eig.real.max() < STABILITY_BAND * params.cavity.gamma)
    if multiplicity > 1:
        stable = False  # coalesced roots sit at turning points
    if x >= params.constants.total_spin:
        warnings.warn(f"excitation number {x:.3e} exceeds the spin bound "
                      f"{params.constants.total_spin:.3e}; the weak-excitation "
                      "model is outside its validity range", stacklevel=3)
    return SteadyBranch(x=x, m1=m1, m2=m2, a=a, residual=residual,
                        stable=stable, eigenvalues=eig,
                        multiplicity=multiplicity)


def _warn_if_not_alternating(branches: list[SteadyBranch]) -> None:
    flags = [b.stable for b in branches]
    expected = [i % 2 == 0 for i in range(len(flags))]
    if flags != expected:
        warnings.warn("stable/unstable branches do not alternate in x; "
                      "some branches carry oscillatory instabilities",
                      stacklevel=3)


def solve_two_yig(params: SystemParams) -> list[SteadyBranch]:
    """All steady branches of the two-mode system, ascending in ``x``."""
    if params.n_magnons != 2:
        raise DegenerateCouplingError("two magnon modes required")
    det = derive_detunings(params)
    rabi = params.rabi()
    if rabi == 0.0:
        return [_finish_branch(0.0, 0j, 0j, 0j, 0.0, 1, params)]
    poly = build_spin_polynomial(det, params.magnons, rabi)
    branches = []
    for x, mult in real_nonneg_roots(poly.coeffs):
        m1, m2, a, residual = reconstruct_amplitudes(x, det, params.magnons, rabi)
        branches.append(_finish_branch(x, m1, m2, a, residual, mult, params))
    _warn_if_not_alternating(branches)
    return branches


def solve_single_yig(params: SystemParams) -> list[SteadyBranch]:
    """All steady branches of the single-mode system, ascending in ``x``.

    The excitation number solves the real cubic
    ``|dressed + 2 kerr x|^2 x = rabi^2``.
    """
    if params.n_magnons != 1:
        raise ValueError("single magnon mode required")
    det = derive_detunings(params)
    mode = params.magnons[0]
    rabi = params.rabi()
    if rabi == 0.0:
        return [_finish_branch(0.0, 0j, None, 0j, 0.0, 1, params)]
    r, s = det.dressed[0].real, det.dressed[0].imag
    u = mode.kerr
    coeffs = np.zeros(10)
    coeffs[:4] = [-(rabi**2), r * r + s * s, 4.0 * u * r, 4.0 * u * u]
    branches = []
    for x, mult in real_nonneg_roots(coeffs):
        denom = det.dressed[0] + 2.0 * u * x
        if denom == 0:
            raise SingularSteadyStateError("response denominator vanished")
        m = -1j * rabi / denom
        a = -mode.coupling * m / det.delta_c_complex
        e_m = (-(1j * det.delta[0] + mode.gamma) * m
               - 2j * u * abs(m) ** 2 * m - 1j * mode.coupling * a + rabi)
        e_a = (-(1j * det.delta_c + params.cavity.gamma) * a
               - 1j * mode.coupling * m)
        residual = max(abs(e_m), abs(e_a))
        branches.append(_finish_branch(x, m, None, a, residual, mult, params))
    _warn_if_not_alternating(branches)
    return branches


def solve_steady(params: SystemParams) -> list[SteadyBranch]:
    """Dispatch to the one- or two-mode solver."""
    if params.n_magnons == 2:
        return solve_two_yig(params)
    return solve_single_yig(params)
