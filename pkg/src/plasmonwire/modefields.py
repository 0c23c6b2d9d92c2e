"""Boundary-matched mode profiles, vacuum-fluctuation normalization,
field evaluation and the exciton-plasmon coupling.

Per region (inside: psi = J_n, radial wavenumber q_I; outside: psi = H^(1)_n,
q_O) with x = q*rho and unit magnetic permeability, the transverse components
follow from the longitudinal pair (E_z ~ A psi, H_z ~ B psi):

    E_rho = (iK/q) psi'(x) A - (n Omega/(q^2 rho)) psi(x) B
    E_phi = -(n K/(q^2 rho)) psi(x) A - (i Omega/q) psi'(x) B
    H_rho = (n Omega eps/(q^2 rho)) psi(x) A + (iK/q) psi'(x) B
    H_phi = (i Omega eps/q) psi'(x) A - (n K/(q^2 rho)) psi(x) B

all carrying exp(i n phi).  Requiring E_z, E_phi, H_z, H_phi continuous at
rho = R makes the 4x4 system singular exactly on the dispersion roots.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

from ._fmt import sci9
from .dispersion import BOUND, ModePoint, _radial_args
from .errors import ContractError, DomainError, InconsistentRootError, NormalizationError
from .media import MediumParams
from .specfun import cyl_fun, cyl_fun_deriv

SV_RATIO_TOL = 1e-6
QUAD_EPSREL = 1e-11
_GAUSS_ORDER = 80


@dataclass(frozen=True)
class DipoleSpec:
    """Point dipole outside the wire at (rho = R + d_hat, phi = 0).

    orientation : unit vector in the (rho, phi, z) basis.
    d_hat       : surface-to-dot distance in units c/omega_p.
    free_space_rate_beta : free-space decay rate beta; the dipole magnitude
        is folded into it as mu = sqrt(beta), so emitted rates come out in
        units of beta.
    """

    orientation: tuple[float, float, float]
    d_hat: float
    free_space_rate_beta: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.orientation, dtype=float)
        if abs(np.linalg.norm(v) - 1.0) > 1e-8:
            raise DomainError("dipole orientation must be a unit vector")
        if self.d_hat <= 0:
            raise DomainError("dot must sit outside the wire (d_hat > 0)")
        if self.free_space_rate_beta < 0:
            raise DomainError("free_space_rate_beta must be >= 0")

    @staticmethod
    def radial(d_hat: float, free_space_rate_beta: float = 1.0) -> "DipoleSpec":
        return DipoleSpec((1.0, 0.0, 0.0), d_hat, free_space_rate_beta)


@dataclass(frozen=True)
class ModeProfile:
    """Field coefficients of one mode, plus the context to evaluate them."""

    point: ModePoint
    media: tuple[MediumParams, MediumParams]
    R: float
    A_I: complex
    B_I: complex
    A_O: complex
    B_O: complex
    norm_factor: float = 1.0
    quantization_length_hat: float = 1.0
    normalized: bool = False


@dataclass(frozen=True)
class FieldSample:
    """E and H (rho, phi, z) components at one point; ``normalized`` flags
    whether the profile carried the vacuum-fluctuation normalization."""

    E: np.ndarray
    H: np.ndarray
    normalized: bool


def _mode_params(profile: ModeProfile):
    pt = profile.point
    x_i, x_o, eps_i, eps_o = _radial_args(pt.K, pt.Omega, profile.media, profile.R)
    q_i = complex(x_i) / profile.R
    q_o = complex(x_o) / profile.R
    return q_i, q_o, complex(eps_i), complex(eps_o)


def _boundary_matrix(point: ModePoint, media, R) -> np.ndarray:
    n, K = point.n, point.K
    x_i, x_o, eps_i, eps_o = _radial_args(K, point.Omega, media, R)
    q_i, q_o = complex(x_i) / R, complex(x_o) / R
    om = point.Omega
    J = cyl_fun("J", n, x_i)
    Jp = cyl_fun_deriv("J", n, x_i)
    H = cyl_fun("H1", n, x_o)
    Hp = cyl_fun_deriv("H1", n, x_o)
    ang_i = n * K / (q_i * q_i * R)
    ang_o = n * K / (q_o * q_o * R)
    return np.array([
        [J, 0.0, -H, 0.0],                                       # E_z
        [0.0, J, 0.0, -H],                                       # H_z
        [-ang_i * J, -1j * om / q_i * Jp,
         ang_o * H, 1j * om / q_o * Hp],                         # E_phi
        [1j * om * eps_i / q_i * Jp, -ang_i * J,
         -1j * om * eps_o / q_o * Hp, ang_o * H],                # H_phi
    ], dtype=complex)


def solve_mode_coefficients(point: ModePoint, media, R,
                            quantization_length_hat: float = 1.0) -> ModeProfile:
    """Null vector of the continuity system at a converged root.

    The smallest singular value of the row-normalized 4x4 system must be
    separated from the rest by SV_RATIO_TOL, otherwise the point is not a
    mode (InconsistentRootError).  The global phase is fixed by making A_I
    real positive and the vector scaled to max |coefficient| = 1.
    """
    if point.residual > 1e-8:
        raise ContractError(
            f"point residual {point.residual:.2e} exceeds the 1e-8 root contract")
    M = _boundary_matrix(point, media, R)
    row_scale = np.abs(M).max(axis=1, keepdims=True)
    _, sv, vh = np.linalg.svd(M / row_scale)
    if sv[-1] > SV_RATIO_TOL * sv[0]:
        raise InconsistentRootError(
            f"smallest singular value {sv[-1]:.2e} not separated "
            f"(largest {sv[0]:.2e}); point is not a mode")
    v = vh[-1].conj()
    ref = v[0] if abs(v[0]) > 1e-12 * np.abs(v).max() else v[np.argmax(np.abs(v))]
    v = v * (abs(ref) / ref)
    v = v / np.abs(v).max()
    return ModeProfile(point=point, media=media, R=R,
                       A_I=complex(v[0]), B_I=complex(v[1]),
                       A_O=complex(v[2]), B_O=complex(v[3]),
                       quantization_length_hat=quantization_length_hat)


def boundary_residual(profile: ModeProfile) -> float:
    """max |M v| over the row-normalized continuity system, relative to
    the largest coefficient."""
    M = _boundary_matrix(profile.point, profile.media, profile.R)
    M = M / np.abs(M).max(axis=1, keepdims=True)
    v = np.array([profile.A_I, profile.B_I, profile.A_O, profile.B_O])
    return float(np.abs(M @ v).max() / np.abs(v).max())


def _e_fields_vec(profile: ModeProfile, rho: np.ndarray, inside: bool):
    """(E_rho, E_phi, E_z) on an array of radii within one region, phi = 0."""
    pt = profile.point
    n, K, om = pt.n, pt.K, pt.Omega
    q_i, q_o, eps_i, eps_o = _mode_params(profile)
    if inside:
        q, A, B = q_i, profile.A_I, profile.B_I
        x = q * rho
        psi = cyl_fun("J", n, x)
        dpsi = cyl_fun_deriv("J", n, x)
        # psi/rho = q * J_n(x)/x, finite on the axis (q/2 for n=1, else 0)
        small = np.abs(x) < 1e-10
        x_safe = np.where(small, 1.0, x)
        psi_or = q * np.where(small, 0.5 if n == 1 else 0.0, psi / x_safe)
    else:
        q, A, B = q_o, profile.A_O, profile.B_O
        x = q * rho
        psi = cyl_fun("H1", n, x)
        dpsi = cyl_fun_deriv("H1", n, x)
        psi_or = psi / rho
    E_rho = 1j * K / q * dpsi * A - n * om / (q * q) * psi_or * B
    E_phi = -(n * K / (q * q) * psi_or * A + 1j * om / q * dpsi * B)
    E_z = psi * A
    return E_rho, E_phi, E_z


def eval_fields(profile: ModeProfile, rho: float, phi: float = 0.0) -> FieldSample:
    """E and H at (rho, phi); exp(i n phi) applied, axial/time phases omitted.

    Points with rho >= R evaluate on the outside expansion (tangential
    components are continuous at R by construction).
    """
    if rho < 0:
        raise DomainError("rho must be >= 0")
    pt = profile.point
    n, K, om = pt.n, pt.K, pt.Omega
    q_i, q_o, eps_i, eps_o = _mode_params(profile)
    inside = rho < profile.R
    if inside:
        q, eps, A, B = q_i, eps_i, profile.A_I, profile.B_I
        x = q * rho
        psi = cyl_fun("J", n, x)
        dpsi = cyl_fun_deriv("J", n, x)
        psi_or = (0.5 if n == 1 else 0.0) * q if abs(x) < 1e-10 else psi / rho
    else:
        q, eps, A, B = q_o, eps_o, profile.A_O, profile.B_O
        x = q * rho
        psi = cyl_fun("H1", n, x)
        dpsi = cyl_fun_deriv("H1", n, x)
        psi_or = psi / rho
    ang = np.exp(1j * n * phi)
    E = np.array([
        1j * K / q * dpsi * A - n * om / (q * q) * psi_or * B,
        -(n * K / (q * q) * psi_or * A + 1j * om / q * dpsi * B),
        psi * A,
    ]) * ang
    Hf = np.array([
        n * om * eps / (q * q) * psi_or * A + 1j * K / q * dpsi * B,
        1j * om * eps / q * dpsi * A - n * K / (q * q) * psi_or * B,
        psi * B,
    ]) * ang
    return FieldSample(E=E, H=Hf, normalized=profile.normalized)


def _gauss_panel(f, a, b, order=_GAUSS_ORDER):
    x, w = np.polynomial.legendre.leggauss(order)
    xm = 0.5 * (b - a) * x + 0.5 * (a + b)
    return 0.5 * (b - a) * float(np.sum(w * f(xm)))


def cross_section_energy(profile: ModeProfile, method: str = "gauss") -> float:
    """Per-unit-length integral 2 pi int eps(rho) |E|^2 rho drho.

    method "gauss": composite fixed-order Gauss-Legendre (fast path used by
    sweeps; accurate to machine precision for these analytic integrands).
    method "quad": adaptive Gauss-Kronrod, kept as the slow reference.
    The exterior integral substitutes u = kappa_O (rho - R), which makes the
    integrand decay like exp(-2u) uniformly; the remaining tail beyond
    u = 40 is added analytically from the leading exponential estimate.
    """
    pt = profile.point
    if pt.regime != BOUND:
        raise NormalizationError("non-bound mode: outside field is not "
                                 "square-integrable")
    q_i, q_o, eps_i, eps_o = _mode_params(profile)
    kappa = q_o.imag
    if kappa <= 0:
        raise NormalizationError("outside field does not decay (kappa <= 0)")
    R = profile.R

    def dens_in(rho):
        E_rho, E_phi, E_z = _e_fields_vec(profile, np.asarray(rho, float), True)
        return eps_i.real * (np.abs(E_rho) ** 2 + np.abs(E_phi) ** 2
                             + np.abs(E_z) ** 2) * rho

    def dens_out_u(u):
        rho = R + np.asarray(u, float) / kappa
        E_rho, E_phi, E_z = _e_fields_vec(profile, rho, False)
        return eps_o.real * (np.abs(E_rho) ** 2 + np.abs(E_phi) ** 2
                             + np.abs(E_z) ** 2) * rho / kappa

    u_max = 40.0
    if method == "gauss":
        inner = _gauss_panel(dens_in, 0.0, 0.5 * R) + _gauss_panel(dens_in, 0.5 * R, R)
        outer = sum(_gauss_panel(dens_out_u, a, b)
                    for a, b in ((0.0, 2.0), (2.0, 8.0), (8.0, 20.0), (20.0, u_max)))
    elif method == "quad":
        inner, _ = quad(lambda r: float(dens_in(np.array([r]))[0]), 0.0, R,
                        epsabs=0.0, epsrel=QUAD_EPSREL, limit=200)
        outer, _ = quad(lambda u: float(dens_out_u(np.array([u]))[0]), 0.0, u_max,
                        epsabs=0.0, epsrel=QUAD_EPSREL, limit=400)
    else:
        raise DomainError(f"unknown quadrature method {method!r}")
    tail = float(dens_out_u(np.array([u_max]))[0]) / 2.0
    return 2.0 * np.pi * (inner + outer + tail)


def normalize_mode(profile: ModeProfile, method: str = "gauss") -> ModeProfile:
    """Scale the coefficients so the cross-section energy integral times the
    bookkeeping length L_hat equals Omega (the mode's vacuum quantum)."""
    energy = cross_section_energy(profile, method=method)
    if energy <= 0:
        raise NormalizationError(
            f"cross-section energy integral {energy:.3e} is not positive; "
            "mode cannot carry the vacuum normalization")
    target = profile.point.Omega.real
    scale = float(np.sqrt(target / (profile.quantization_length_hat * energy)))
    return replace(profile,
                   A_I=profile.A_I * scale, B_I=profile.B_I * scale,
                   A_O=profile.A_O * scale, B_O=profile.B_O * scale,
                   norm_factor=profile.norm_factor * scale,
                   normalized=True)


def coupling_g(profile: ModeProfile, dipole: DipoleSpec) -> complex:
    """Exciton-plasmon coupling mu . E at the dot position.

    The dipole magnitude is sqrt(beta), so |g|^2 scales with the free-space
    rate and as 1/L_hat through the normalization (rates built from
    L_hat |g|^2 are bookkeeping-independent).
    """
    if not profile.normalized:
        raise ContractError("coupling requires a normalized profile")
    rho = profile.R + dipole.d_hat
    sample = eval_fields(profile, rho, 0.0)
    e_hat = np.asarray(dipole.orientation, dtype=float)
    return complex(np.sqrt(dipole.free_space_rate_beta) * (e_hat @ sample.E))


def field_profile_csv(profile: ModeProfile, rho_values) -> str:
    """CSV of all six components along a radial cut (phi = 0)."""
    cols = ["rho"]
    for name in ("E_rho", "E_phi", "E_z", "H_rho", "H_phi", "H_z"):
        cols += [f"Re_{name}", f"Im_{name}"]
    lines = [",".join(cols)]
    for rho in rho_values:
        s = eval_fields(profile, float(rho))
        vals = [float(rho)]
        for comp in (*s.E, *s.H):
            vals += [comp.real, comp.imag]
        lines.append(",".join(sci9(v) for v in vals))
    return "\n".join(lines) + "\n"
