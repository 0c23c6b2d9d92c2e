"""Dimensionless unit system and material permittivity models.

All frequencies are measured in units of the wire plasma frequency
(Omega = omega/omega_p), axial wavenumbers in omega_p/c (K = k_z c/omega_p)
and lengths in c/omega_p, so the effective wire radius is R = omega_p a / c.
"""

from __future__ import annotations

from dataclasses import dataclass

from scipy.constants import e as _e_charge, hbar as _hbar

from .errors import DomainError

ROLES = ("energy", "length", "rate", "time")


@dataclass(frozen=True)
class UnitSystem:
    """Conversion between dimensionless quantities and physical values.

    hbar_omega_p_ev : plasma energy quantum in eV (3.76 eV for bulk silver).
    length_unit_nm  : physical length of one unit of R.  The default 53.8 nm
        is kept configurable because it differs by ~2% from hbar*c/(hbar*omega_p).
    """

    hbar_omega_p_ev: float = 3.76
    length_unit_nm: float = 53.8

    def __post_init__(self):
        if self.hbar_omega_p_ev <= 0:
            raise DomainError("hbar_omega_p_ev must be positive")
        if self.length_unit_nm <= 0:
            raise DomainError("length_unit_nm must be positive")

    @property
    def omega_p_rad_per_s(self) -> float:
        """Plasma angular frequency in rad/s."""
        return self.hbar_omega_p_ev * _e_charge / _hbar

    def to_physical(self, q, role: str):
        """Convert a dimensionless quantity to physical units.

        energy -> eV, length -> nm, rate -> 1/s, time -> s.
        """
        if role == "energy":
            return q * self.hbar_omega_p_ev
        if role == "length":
            return q * self.length_unit_nm
        if role == "rate":
            return q * self.omega_p_rad_per_s
        if role == "time":
            return q / self.omega_p_rad_per_s
        raise DomainError(f"unknown role {role!r}; expected one of {ROLES}")

    def from_physical(self, value, role: str):
        """Inverse of :meth:`to_physical`."""
        if role == "energy":
            return value / self.hbar_omega_p_ev
        if role == "length":
            return value / self.length_unit_nm
        if role == "rate":
            return value / self.omega_p_rad_per_s
        if role == "time":
            return value * self.omega_p_rad_per_s
        raise DomainError(f"unknown role {role!r}; expected one of {ROLES}")


@dataclass(frozen=True)
class MediumParams:
    """Permittivity model of one medium.

    kind "drude": eps_inf * (1 - 1/(Omega*(Omega + i/tau_hat))), lossless when
    tau_hat is None.  kind "constant": non-dispersive eps_const.
    """

    kind: str
    eps_inf: float | None = None
    eps_const: float | None = None
    tau_hat: float | None = None

    def __post_init__(self):
        if self.kind == "drude":
            if self.eps_inf is None or self.eps_inf <= 0:
                raise DomainError("drude medium needs eps_inf > 0")
            if self.tau_hat is not None and self.tau_hat <= 0:
                raise DomainError("tau_hat must be positive when given")
        elif self.kind == "constant":
            if self.eps_const is None or self.eps_const <= 0:
                raise DomainError("constant medium needs eps_const > 0")
        else:
            raise DomainError(f"unknown medium kind {self.kind!r}")

    @staticmethod
    def drude(eps_inf: float, tau_hat: float | None = None) -> "MediumParams":
        return MediumParams(kind="drude", eps_inf=eps_inf, tau_hat=tau_hat)

    @staticmethod
    def constant(eps_const: float) -> "MediumParams":
        return MediumParams(kind="constant", eps_const=eps_const)


def permittivity(m: MediumParams, omega):
    """Relative permittivity of medium ``m`` at dimensionless frequency Omega.

    Accepts real or complex scalars (and numpy arrays) and preserves the
    input numeric type, so lossless Drude at real Omega stays real.
    """
    if m.kind == "constant":
        return m.eps_const * (omega * 0 + 1)
    # Drude: the 1/Omega pole makes Omega = 0 a genuine domain error.
    import numpy as np

    if np.any(omega == 0):
        raise DomainError("Drude permittivity is singular at Omega = 0")
    inv_tau = 0.0 if m.tau_hat is None else 1.0 / m.tau_hat
    if inv_tau == 0.0:
        return m.eps_inf * (1.0 - 1.0 / (omega * omega))
    return m.eps_inf * (1.0 - 1.0 / (omega * (omega + 1j * inv_tau)))


# Material presets addressable by name in the CLI config.
PRESETS = {
    "Ag": MediumParams.drude(9.6),
    "GaN": MediumParams.constant(5.3),
}


def medium_by_name(name: str) -> MediumParams:
    try:
        return PRESETS[name]
    except KeyError:
        raise DomainError(
            f"unknown medium preset {name!r}; known: {sorted(PRESETS)}"
        ) from None
