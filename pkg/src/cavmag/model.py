"""Physical parameters and derived detunings for the driven cavity-magnon system.

Everything downstream works in angular frequency units (rad/s).  Entry points
that accept experiment-style values (GHz / MHz / nHz / mW) convert once, here.

Unit conventions
----------------
* Mode frequencies, couplings and Kerr coefficients are quoted as cycles
  (nu = omega / 2pi) and convert with a factor 2pi.
* Dissipation values are quoted as resonance linewidths (FWHM).  The amplitude
  decay rate entering the equations of motion is half the linewidth, so a
  quoted ``gamma/2pi = 5.8 MHz`` becomes ``gamma = pi * 5.8e6 rad/s``.  This
  reading reproduces the published multistable operating points; treating the
  quoted values as amplitude rates does not (see README).
* The drive Rabi frequency follows from the input power in Gaussian-CGS units,
  where ``rho * d * P / c`` is an energy density (Gauss^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

TWO_PI = 2.0 * math.pi

#: 1 watt in erg/s.
ERG_PER_S_PER_WATT = 1.0e7


def angular(nu_hz: float) -> float:
    """Convert a cycle frequency in Hz to rad/s."""
    return TWO_PI * nu_hz


def cycles(omega: float) -> float:
    """Convert rad/s back to a cycle frequency in Hz."""
    return omega / TWO_PI


def rate_from_linewidth(fwhm_hz: float) -> float:
    """Amplitude decay rate (rad/s) for a resonance of full linewidth ``fwhm_hz``."""
    return math.pi * fwhm_hz


def linewidth_from_rate(gamma: float) -> float:
    """Inverse of :func:`rate_from_linewidth`."""
    return gamma / math.pi


class ParameterError(ValueError):
    """Invalid or inconsistent physical parameters."""


@dataclass(frozen=True)
class PhysicalConstants:
    """Material and geometry constants entering the drive-power conversion.

    Gaussian-CGS throughout: ``gyro_ratio`` in rad/(s G), ``spin_density``
    in cm^-3, ``sphere_diameter`` in cm, ``light_speed`` in cm/s.
    ``total_spin`` is the dimensionless bound 2S on the magnon number.
    """

    gyro_ratio: float = TWO_PI * 2.8e6
    spin_density: float = 4.22e21
    sphere_diameter: float = 0.1
    light_speed: float = 2.99792458e10
    total_spin: float = 1.1e19

    def __post_init__(self):
        for name in ("gyro_ratio", "spin_density", "sphere_diameter",
                     "light_speed", "total_spin"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class MagnonMode:
    """One Kittel mode: frequency, decay rate, cavity coupling, Kerr coefficient.

    All fields in rad/s.  ``kerr`` is the self-interaction coefficient; the
    steady-state frequency pull per excitation is ``2 * kerr``.
    """

    omega: float
    gamma: float
    coupling: float
    kerr: float

    def __post_init__(self):
        if self.omega <= 0:
            raise ParameterError("magnon omega must be strictly positive")
        if self.gamma <= 0:
            raise ParameterError("magnon gamma must be strictly positive")
        if self.coupling < 0:
            raise ParameterError("magnon coupling must be nonnegative")
        if self.kerr < 0:
            raise ParameterError("kerr coefficient must be nonnegative")


@dataclass(frozen=True)
class CavityMode:
    """Cavity frequency and leakage rate, both rad/s."""

    omega: float
    gamma: float

    def __post_init__(self):
        if self.omega <= 0 or self.gamma <= 0:
            raise ParameterError("cavity omega and gamma must be strictly positive")


@dataclass(frozen=True)
class Drive:
    """Microwave drive on magnon 1: frequency plus either power or Rabi rate.

    Exactly one of ``power`` (watts) and ``rabi`` (rad/s) must be given;
    ``rabi`` bypasses the Gaussian-unit power conversion.
    """

    omega: float
    power: float | None = None
    rabi: float | None = None

    def __post_init__(self):
        if self.omega <= 0:
            raise ParameterError("drive omega must be strictly positive")
        if (self.power is None) == (self.rabi is None):
            raise ParameterError("exactly one of power and rabi must be set")
        if self.power is not None and self.power < 0:
            raise ParameterError("drive power must be nonnegative")
        if self.rabi is not None and self.rabi < 0:
            raise ParameterError("drive rabi rate must be nonnegative")


def rabi_from_power(power: float, constants: PhysicalConstants) -> float:
    """Drive Rabi rate (rad/s) for an input power in watts.

    Evaluates ``gyro * sqrt(5 pi rho d P / (3 c))`` in Gaussian-CGS units,
    with the power converted to erg/s.
    """
    if power < 0:
        raise ParameterError("power must be nonnegative")
    p_cgs = power * ERG_PER_S_PER_WATT
    return constants.gyro_ratio * math.sqrt(
        5.0 * math.pi * constants.spin_density * constants.sphere_diameter
        * p_cgs / (3.0 * constants.light_speed))


@dataclass(frozen=True)
class SystemParams:
    """Full parameter set: constants, cavity, one or two magnon modes, drive.

    In the two-magnon configuration the drive acts on magnon 1 only.
    Immutable; all solvers are pure functions of this object.
    """

    constants: PhysicalConstants
    cavity: CavityMode
    magnons: tuple[MagnonMode, ...]
    drive: Drive

    def __post_init__(self):
        if not 1 <= len(self.magnons) <= 2:
            raise ParameterError("need one or two magnon modes")
        object.__setattr__(self, "magnons", tuple(self.magnons))

    @property
    def n_magnons(self) -> int:
        return len(self.magnons)

    def rabi(self) -> float:
        """Drive Rabi rate in rad/s, from the override or the power formula."""
        if self.drive.rabi is not None:
            return self.drive.rabi
        return rabi_from_power(self.drive.power, self.constants)

    def with_parameter(self, name: str, value: float) -> "SystemParams":
        """Return a copy with one sweepable parameter replaced.

        ``name`` is one of ``power`` (watts), ``omega_d``, ``omega_c``,
        ``gamma_c`` (rad/s).
        """
        if name == "power":
            return replace(self, drive=Drive(self.drive.omega, power=value))
        if name == "omega_d":
            return replace(self, drive=replace(self.drive, omega=value))
        if name == "omega_c":
            return replace(self, cavity=replace(self.cavity, omega=value))
        if name == "gamma_c":
            return replace(self, cavity=replace(self.cavity, gamma=value))
        raise ParameterError(f"unknown sweep parameter {name!r}")


@dataclass(frozen=True)
class Detunings:
    """Detunings of every mode from the drive, plus cavity-dressed values.

    ``delta[i]`` includes the single-excitation Kerr shift of mode i.
    ``delta_c_complex`` is ``delta_c - i gamma_c``; ``dressed[i]`` is the
    magnon detuning with damping and the cavity back-action folded in:
    ``delta_i - i gamma_i - g_i^2 / delta_c_complex``.
    """

    delta: tuple[float, ...]
    delta_c: float
    delta_c_complex: complex
    dressed: tuple[complex, ...]


def derive_detunings(params: SystemParams) -> Detunings:
    """Compute all drive-frame detunings for the given parameter set."""
    wd = params.drive.omega
    delta_c = params.cavity.omega - wd
    dcc = delta_c - 1j * params.cavity.gamma
    delta = tuple(m.omega + m.kerr - wd for m in params.magnons)
    dressed = tuple(
        d - 1j * m.gamma - m.coupling**2 / dcc
        for d, m in zip(delta, params.magnons))
    return Detunings(delta=delta, delta_c=delta_c, delta_c_complex=dcc,
                     dressed=dressed)


def build_system(*,
                 omega_c_ghz: float,
                 gamma_c_mhz: float,
                 omega_d_ghz: float,
                 omega_1_ghz: float,
                 gamma_1_mhz: float,
                 g_1_mhz: float,
                 u_1_nhz: float,
                 omega_2_ghz: float | None = None,
                 gamma_2_mhz: float | None = None,
                 g_2_mhz: float | None = None,
                 u_2_nhz: float | None = None,
                 power_mw: float | None = None,
                 rabi_override: float | None = None,
                 sphere_diameter_mm: float = 1.0,
                 spin_density_per_m3: float = 4.22e27,
                 total_spin: float = 1.1e19) -> SystemParams:
    """Assemble a :class:`SystemParams` from experiment-style values.

    Frequencies in GHz, couplings in MHz, Kerr coefficients in nHz, power in
    mW, all as cycle frequencies nu = omega/2pi.  ``gamma_*_mhz`` are full
    linewidths (FWHM); see the module docstring.  ``rabi_override`` is in
    rad/s and replaces the power conversion when given.
    """
    second = (omega_2_ghz, gamma_2_mhz, g_2_mhz, u_2_nhz)
    if any(v is not None for v in second) and any(v is None for v in second):
        raise ParameterError("magnon 2 requires omega_2_ghz, gamma_2_mhz, "
                             "g_2_mhz and u_2_nhz together")
    constants = PhysicalConstants(
        sphere_diameter=sphere_diameter_mm * 0.1,
        spin_density=spin_density_per_m3 * 1e-6,
        total_spin=total_spin)
    cavity = CavityMode(omega=angular(omega_c_ghz * 1e9),
                        gamma=rate_from_linewidth(gamma_c_mhz * 1e6))
    magnons = [MagnonMode(omega=angular(omega_1_ghz * 1e9),
                          gamma=rate_from_linewidth(gamma_1_mhz * 1e6),
                          coupling=angular(g_1_mhz * 1e6),
                          kerr=angular(u_1_nhz * 1e-9))]
    if omega_2_ghz is not None:
        magnons.append(MagnonMode(omega=angular(omega_2_ghz * 1e9),
                                  gamma=rate_from_linewidth(gamma_2_mhz * 1e6),
                                  coupling=angular(g_2_mhz * 1e6),
                                  kerr=angular(u_2_nhz * 1e-9)))
    drive = Drive(omega=angular(omega_d_ghz * 1e9),
                  power=None if power_mw is None else power_mw * 1e-3,
                  rabi=rabi_override)
    return SystemParams(constants=constants, cavity=cavity,
                        magnons=tuple(magnons), drive=drive)
