"""Markovian spontaneous emission into bound surface modes.

Golden-rule bookkeeping: each order n contributes, at every wavenumber K*
where the branch crosses the exciton frequency Omega_0,

    rate += 2 * L_hat * |g_n(K*)|^2 / |dOmega/dK|

(the factor 2 counts +-k_z propagation; the one-dimensional density of
states is 1/|v_g|).  The 1/L_hat in |g|^2 cancels the explicit L_hat, and
rates are reported in units of the free-space rate beta.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._fmt import sci9
from .dispersion import DispersionCurve, _slope_at_point, solve_on_branch
from .errors import PlasmonWireError, RootNotFoundError
from .modefields import DipoleSpec, coupling_g, normalize_mode, solve_mode_coefficients

VG_FLOOR = 1e-6
EDGE_WINDOW = 1e-4


@dataclass(frozen=True)
class RatePoint:
    """Emission rate at one exciton frequency, per order and total (beta units)."""

    omega0: float
    per_mode: dict[int, float]
    total: float
    diverged: bool
    error: str | None = None


def mode_coupling_density(curve: DispersionCurve, K: float, dipole: DipoleSpec,
                          quantization_length_hat: float = 1.0):
    """(g2hat, v_g) at wavenumber K on the branch.

    g2hat = L_hat |g|^2 / beta is the bookkeeping-independent coupling
    density in beta units; v_g the implicit-function group velocity.
    """
    pt = solve_on_branch(curve, K)
    prof = solve_mode_coefficients(pt, curve.media, curve.R,
                                   quantization_length_hat)
    prof = normalize_mode(prof)
    g = coupling_g(prof, dipole)
    beta = dipole.free_space_rate_beta
    g2hat = quantization_length_hat * abs(g) ** 2 / beta if beta > 0 else 0.0
    vg = _slope_at_point(curve, pt)
    return g2hat, vg


def branch_crossings(curve: DispersionCurve, omega0: float) -> list[float]:
    """All K* with Omega_n(K*) = omega0, from a sign scan of the traced
    samples refined on the continuation-backed root function."""
    pts = curve.bound_samples()
    if len(pts) < 2:
        return []
    Ks = np.array([p.K for p in pts])
    Om = np.array([p.Omega.real for p in pts])
    d = Om - omega0
    out = []
    for i in range(len(Ks) - 1):
        if d[i] == 0.0:
            out.append(float(Ks[i]))
        elif np.sign(d[i]) != np.sign(d[i + 1]):
            f = lambda K: solve_on_branch(curve, K).Omega.real - omega0
            try:
                out.append(float(brentq(f, Ks[i], Ks[i + 1], xtol=1e-12)))
            except (ValueError, RootNotFoundError):
                continue
    if d[-1] == 0.0:
        out.append(float(Ks[-1]))
    return out


def se_rate(omega0: float, curves, dipole: DipoleSpec, *,
            quantization_length_hat: float = 1.0,
            mode_data=None) -> RatePoint:
    """Golden-rule rate of an exciton at Omega_0 into the traced branches.

    ``mode_data(curve, K) -> (g2hat, v_g)`` may replace the physical
    mode-profile pipeline (used for model bands in tests and studies).
    Frequencies within EDGE_WINDOW of a detected band edge are flagged
    ``diverged`` and the group velocity is clamped at VG_FLOOR so the value
    stays finite.
    """
    get = mode_data or (lambda c, K: mode_coupling_density(
        c, K, dipole, quantization_length_hat))
    per_mode: dict[int, float] = {}
    diverged = False
    for curve in curves:
        per_mode.setdefault(curve.n, 0.0)
        for edge in curve.edges:
            if abs(omega0 - edge.Omega_c) <= EDGE_WINDOW:
                diverged = True
        for K_star in branch_crossings(curve, omega0):
            g2hat, vg = get(curve, K_star)
            per_mode[curve.n] += 2.0 * g2hat / max(abs(vg), VG_FLOOR)
    total = float(sum(per_mode.values()))
    return RatePoint(omega0=float(omega0), per_mode=per_mode, total=total,
                     diverged=diverged)


def rate_sweep(omega0_grid, curves, dipole: DipoleSpec, *,
               quantization_length_hat: float = 1.0,
               mode_data=None, threads: int = 1) -> list[RatePoint]:
    """Pointwise se_rate over a grid; per-point failures become flags on the
    returned points instead of aborting the sweep.  Results keep input order
    regardless of the thread count."""

    def one(om0):
        try:
            return se_rate(om0, curves, dipole,
                           quantization_length_hat=quantization_length_hat,
                           mode_data=mode_data)
        except PlasmonWireError as exc:
            return RatePoint(omega0=float(om0), per_mode={}, total=float("nan"),
                             diverged=False, error=str(exc))

    grid = list(omega0_grid)
    if not grid:
        raise PlasmonWireError("omega0_grid must be nonempty")
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, grid))
    return [one(om0) for om0 in grid]


def rates_to_csv(points: list[RatePoint], orders=(0, 1, 2, 3)) -> str:
    """CSV: omega0,rate_n0,...,total,diverged (one row per grid point)."""
    header = ["omega0"] + [f"rate_n{n}" for n in orders] + ["total", "diverged"]
    lines = [",".join(header)]
    for p in points:
        row = [sci9(p.omega0)]
        row += [sci9(p.per_mode.get(n, 0.0)) for n in orders]
        row += [sci9(p.total), "1" if p.diverged else "0"]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


@dataclass
class CouplingTable:
    """Dense samples of (K, Omega, g2hat) along one branch, the raw material
    for memory kernels; g2hat is in beta units (L_hat-independent)."""

    n: int
    K: np.ndarray
    omega: np.ndarray
    g2hat: np.ndarray
    meta: dict = field(default_factory=dict)

    @staticmethod
    def build(curve: DispersionCurve, dipole: DipoleSpec, n_samples: int = 600,
              quantization_length_hat: float = 1.0,
              k_min: float | None = None,
              k_max: float | None = None) -> "CouplingTable":
        pts = curve.bound_samples()
        if len(pts) < 2:
            raise PlasmonWireError(f"branch n={curve.n} has no bound samples")
        lo = pts[0].K if k_min is None else max(k_min, pts[0].K)
        hi = pts[-1].K if k_max is None else min(k_max, pts[-1].K)
        Ks = np.linspace(lo, hi, n_samples)
        om = np.empty_like(Ks)
        g2 = np.empty_like(Ks)
        beta = dipole.free_space_rate_beta
        for i, K in enumerate(Ks):
            try:
                pt = solve_on_branch(curve, K)
                prof = normalize_mode(solve_mode_coefficients(
                    pt, curve.media, curve.R, quantization_length_hat))
                g = coupling_g(prof, dipole)
                om[i] = pt.Omega.real
                g2[i] = quantization_length_hat * abs(g) ** 2 / beta if beta > 0 else 0.0
            except PlasmonWireError:
                om[i] = np.nan
                g2[i] = 0.0
        ok = np.isfinite(om)
        return CouplingTable(n=curve.n, K=Ks[ok], omega=om[ok], g2hat=g2[ok],
                             meta={"R": curve.R})
