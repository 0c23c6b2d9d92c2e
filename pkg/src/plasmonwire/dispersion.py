"""Surface-mode dispersion of a coated cylindrical wire.

Evaluates the transcendental mode function S(K, Omega) built from the
logarithmic derivatives of J_n inside and H^(1)_n outside, finds its roots,
traces branches Omega_n(K) by parameter continuation, classifies bound vs
non-bound points against the host light line, and locates zero-slope band
edges together with their local quadratic curvature.

Dimensionless conventions: K = k_z c/omega_p, Omega = omega/omega_p,
R = omega_p a/c.  Radial arguments are x_xi = R*sqrt(Omega^2 eps_xi - K^2)
on the branch Im(x) >= 0 so that H^(1)_n decays outside for bound modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._fmt import sci9
from .errors import (
    ContractError,
    DegeneratePointError,
    NotConvergedError,
    PoleError,
    RootNotFoundError,
)
from .media import MediumParams, permittivity
from .specfun import cyl_fun, cyl_fun_deriv

BOUND = "bound"
NONBOUND = "nonbound"

ROOT_RESIDUAL_TOL = 1e-8
DEFAULT_SCAN_STEP = 5e-3
_OMEGA_FLOOR = 1e-3


@dataclass(frozen=True)
class ModePoint:
    """One converged root of the mode function.

    ``sheet`` records the branch of the outside radial wavenumber the root
    lives on: "proper" (Im K_O >= 0, bound/decaying) or "leaky" (outgoing
    continuation used for the non-bound dashed branches)."""

    n: int
    K: float
    Omega: complex
    regime: str
    residual: float
    sheet: str = "proper"


@dataclass(frozen=True)
class BandEdge:
    """Zero-slope point of a branch with local quadratic model
    Omega(K) ~ Omega_c + A_n (K - K_c)^2 (A_n signed)."""

    n: int
    K_c: float
    Omega_c: float
    A_n: float
    kind: str  # "minimum" | "maximum"
    fit_residual: float


@dataclass(frozen=True)
class UnresolvedEdge:
    n: int
    K_approx: float
    reason: str


@dataclass
class DispersionCurve:
    """A traced branch: samples ordered by strictly increasing K.

    Carries the media pair and radius it was traced with so that derived
    quantities (group velocity, band edges, couplings) need no extra context.
    """

    n: int
    media: tuple[MediumParams, MediumParams]
    R: float
    samples: list[ModePoint]
    edges: list[BandEdge] = field(default_factory=list)
    gaps: list[float] = field(default_factory=list)

    @property
    def K(self) -> np.ndarray:
        return np.array([p.K for p in self.samples])

    @property
    def omega(self) -> np.ndarray:
        return np.array([p.Omega for p in self.samples])

    def bound_samples(self) -> list[ModePoint]:
        return [p for p in self.samples if p.regime == BOUND]


def _branch_sqrt(w):
    """sqrt with Im >= 0 (ties broken toward Re >= 0): decay at infinity."""
    s = np.sqrt(np.asarray(w, dtype=complex))
    flip = (s.imag < 0) | ((s.imag == 0) & (s.real < 0))
    return np.where(flip, -s, s)


def _leaky_sqrt(w):
    """sqrt with Re >= 0 (ties: Im >= 0): outgoing continuation for the
    non-bound quasi-modes (the outside field grows radially while the
    frequency decays in time)."""
    s = np.sqrt(np.asarray(w, dtype=complex))
    flip = (s.real < 0) | ((s.real == 0) & (s.imag < 0))
    return np.where(flip, -s, s)


def _sqrt_eps_out(media) -> float:
    """Host index used for the light line Omega = K / sqrt(eps_O)."""
    eps = permittivity(media[1], 1.0)
    return float(np.sqrt(np.real(eps)))


def _radial_args(K, Omega, media, R, sheet: str = "proper"):
    eps_i = permittivity(media[0], Omega)
    eps_o = permittivity(media[1], Omega)
    out_sqrt = _branch_sqrt if sheet == "proper" else _leaky_sqrt
    x_i = R * _branch_sqrt(Omega * Omega * eps_i - K * K)
    x_o = R * out_sqrt(Omega * Omega * eps_o - K * K)
    return x_i, x_o, eps_i, eps_o


def eval_S(n, K, Omega, media, R, sheet: str = "proper"):
    """Mode function: (bracket_mu)(bracket_eps) - n^2 K^2 (1/x_O^2 - 1/x_I^2)^2.

    bracket_mu  = J_n'/(x_I J_n) - H_n'/(x_O H_n)
    bracket_eps = Omega^2 [eps_I J_n'/(x_I J_n) - eps_O H_n'/(x_O H_n)]

    Vectorized over Omega.  A scalar evaluation landing on a pole of the
    logarithmic derivatives (J_n or H_n zero) raises PoleError so root
    finders can deflate.
    """
    Omega_arr = np.asarray(Omega, dtype=complex)
    scalar = Omega_arr.ndim == 0
    x_i, x_o, eps_i, eps_o = _radial_args(K, Omega_arr, media, R, sheet)
    J = cyl_fun("J", n, x_i)
    Jp = cyl_fun_deriv("J", n, x_i)
    H = cyl_fun("H1", n, x_o)
    Hp = cyl_fun_deriv("H1", n, x_o)
    with np.errstate(divide="ignore", invalid="ignore"):
        lj = Jp / (x_i * J)
        lh = Hp / (x_o * H)
        S = (lj - lh) * Omega_arr * Omega_arr * (eps_i * lj - eps_o * lh) \
            - n * n * K * K * (1.0 / x_o**2 - 1.0 / x_i**2) ** 2
    if scalar:
        S = complex(S)
        if not np.isfinite(S.real) or not np.isfinite(S.imag):
            raise PoleError(
                f"S(n={n}, K={K}, Omega={complex(Omega_arr)}) hit a Bessel-zero pole"
            )
        return S
    return S


def eval_S_deflated(n, K, Omega, media, R):
    """Pole-free form S * (J_n(x_I) H_n(x_O))^2, same zeros as eval_S.

    Used by scans that must cross Bessel-zero poles of the logarithmic
    derivatives without sign artifacts.
    """
    Omega_arr = np.asarray(Omega, dtype=complex)
    x_i, x_o, eps_i, eps_o = _radial_args(K, Omega_arr, media, R)
    J = cyl_fun("J", n, x_i)
    Jp = cyl_fun_deriv("J", n, x_i)
    H = cyl_fun("H1", n, x_o)
    Hp = cyl_fun_deriv("H1", n, x_o)
    F1 = Jp * H / x_i - J * Hp / x_o
    F2 = Omega_arr * Omega_arr * (eps_i * Jp * H / x_i - eps_o * J * Hp / x_o)
    out = F1 * F2 - n * n * K * K * (1.0 / x_o**2 - 1.0 / x_i**2) ** 2 * (J * H) ** 2
    if np.asarray(Omega).ndim == 0:
        return complex(out)
    return out


def tm_factor(K, Omega, media, R):
    """n = 0 TM factor Omega^2 [eps_I L_J - eps_O L_H]; its roots are the
    n = 0 surface branch (the TE factor has no surface solutions)."""
    Omega_arr = np.asarray(Omega, dtype=complex)
    x_i, x_o, eps_i, eps_o = _radial_args(K, Omega_arr, media, R)
    lj = cyl_fun_deriv("J", 0, x_i) / (x_i * cyl_fun("J", 0, x_i))
    lh = cyl_fun_deriv("H1", 0, x_o) / (x_o * cyl_fun("H1", 0, x_o))
    out = Omega_arr * Omega_arr * (eps_i * lj - eps_o * lh)
    if np.asarray(Omega).ndim == 0:
        return complex(out)
    return out


def _scan_fn(n, media, R):
    """Real-valued function whose sign changes bracket bound roots."""
    if n == 0:
        return lambda K, om: np.real(tm_factor(K, om, media, R))
    return lambda K, om: np.real(eval_S(np.int64(n) * 1, K, om, media, R))


def _omega_cap(K, media, omega_cap=None):
    """Upper end of the bound-mode search window.

    Surface modes of a Drude wire need eps_I < 0, i.e. Omega < 1; the window
    is additionally capped just below the host light line.
    """
    light = K / _sqrt_eps_out(media)
    metal_cap = 0.999999 if media[0].kind == "drude" else np.inf
    cap = min(light * (1.0 - 1e-12), metal_cap)
    if omega_cap is not None:
        cap = min(cap, omega_cap)
    return cap


def _bisect_real(f, lo, hi, flo=None, max_iter=100):
    """Bisection on a real function with a sign change in [lo, hi]."""
    if flo is None:
        flo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = f(mid)
        if not np.isfinite(fm):
            # Pole inside the bracket: nudge off it.
            mid = np.nextafter(mid, hi)
            fm = f(mid)
            if not np.isfinite(fm):
                raise PoleError("persistent pole inside bisection bracket")
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def _scan_grid(lo, hi, step):
    """Uniform scan grid plus a geometric refinement tail toward hi, where
    roots of higher orders accumulate against the light line."""
    base = np.arange(lo, hi, step)
    tail = hi - step * np.geomspace(1.0, 1e-7, 20)
    grid = np.unique(np.concatenate([base, tail, [hi]]))
    return grid[(grid >= lo) & (grid <= hi)]


def _brackets_from_scan(fvals, grid):
    ok = np.isfinite(fvals)
    idx = []
    for i in range(len(grid) - 1):
        if ok[i] and ok[i + 1] and np.sign(fvals[i]) != np.sign(fvals[i + 1]):
            idx.append(i)
    return [(grid[i], grid[i + 1]) for i in idx]


def _make_point(n, K, omega_root, media, R, sheet="proper") -> ModePoint:
    om = complex(omega_root)
    residual = abs(eval_S(n, K, om, media, R, sheet))
    regime = BOUND if K > om.real * _sqrt_eps_out(media) else NONBOUND
    return ModePoint(n=n, K=float(K), Omega=om, regime=regime,
                     residual=residual, sheet=sheet)


def find_root_real(n, K, bracket, media, R) -> ModePoint:
    """Bisect a real bound root of S inside ``bracket`` (below the light line).

    Raises RootNotFoundError when the bracket holds no sign change and
    PoleError when a logarithmic-derivative pole blocks the bisection; the
    caller may then retry on the deflated form.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if lo >= hi:
        raise ContractError("bracket must satisfy lo < hi")
    light = _sqrt_eps_out(media)
    if hi * light >= K:
        raise RootNotFoundError(
            f"bracket [{lo}, {hi}] not entirely below the light line at K={K}"
        )
    f = _scan_fn(n, media, R)
    flo, fhi = f(K, lo), f(K, hi)
    if not (np.isfinite(flo) and np.isfinite(fhi)):
        # endpoints on a pole: fall back to the deflated form
        f = lambda Kv, om: np.real(eval_S_deflated(n, Kv, om, media, R))
        flo, fhi = f(K, lo), f(K, hi)
    if np.sign(flo) == np.sign(fhi):
        raise RootNotFoundError(
            f"no sign change of S in [{lo}, {hi}] at n={n}, K={K}"
        )
    root = _bisect_real(lambda om: f(K, om), lo, hi, flo=flo)
    pt = _make_point(n, K, root, media, R)
    if pt.residual > ROOT_RESIDUAL_TOL:
        raise NotConvergedError(
            f"bisection residual {pt.residual:.3e} exceeds {ROOT_RESIDUAL_TOL}",
            last=pt.Omega,
            residual=pt.residual,
        )
    return pt


def find_root_complex(n, K, guess, media, R, max_iter=60,
                      sheet: str = "leaky") -> ModePoint:
    """Damped Newton iteration for a complex (non-bound) root of S.

    The derivative uses a central finite difference with step
    1e-7 * max(1, |Omega|).  Non-bound quasi-modes exist on the outgoing
    ("leaky") continuation of the outside wavenumber, the default here; the
    converged root is mapped onto the decaying-in-time half plane
    Im(Omega) <= 0 (conjugation is exact for lossless media).
    """
    om = complex(guess)

    def f(z):
        return eval_S(n, K, z, media, R, sheet)

    fz = f(om)
    for _ in range(max_iter):
        if abs(fz) <= ROOT_RESIDUAL_TOL:
            break
        h = 1e-7 * max(1.0, abs(om))
        df = (f(om + h) - f(om - h)) / (2.0 * h)
        if df == 0:
            raise NotConvergedError("vanishing derivative in Newton step",
                                    last=om, residual=abs(fz))
        step = -fz / df
        lam = 1.0
        while lam >= 1.0 / 64.0:
            cand = om + lam * step
            try:
                fc = f(cand)
            except PoleError:
                lam *= 0.5
                continue
            if abs(fc) < abs(fz):
                om, fz = cand, fc
                break
            lam *= 0.5
        else:
            raise NotConvergedError("damped Newton stalled",
                                    last=om, residual=abs(fz))
    if abs(fz) > ROOT_RESIDUAL_TOL:
        raise NotConvergedError(
            f"Newton did not reach |S| <= {ROOT_RESIDUAL_TOL} in {max_iter} iterations",
            last=om, residual=abs(fz))
    if om.imag > 0 and media[0].tau_hat is None:
        om = om.conjugate()  # lossless roots come in conjugate pairs
    return _make_point(n, K, om, media, R, sheet)


def _scan_bound_root(n, K, media, R, scan_step, omega_cap=None):
    """Full-window scan for the lowest bound root at a single K."""
    cap = _omega_cap(K, media, omega_cap)
    if cap <= _OMEGA_FLOOR:
        return None
    grid = _scan_grid(_OMEGA_FLOOR, cap, scan_step)
    f = _scan_fn(n, media, R)
    vals = f(K, grid)
    brackets = _brackets_from_scan(vals, grid)
    if not brackets:
        return None
    lo, hi = brackets[0]
    try:
        return find_root_real(n, K, (lo, hi), media, R)
    except (RootNotFoundError, NotConvergedError, PoleError):
        return None


def _local_bound_root(n, K, omega_seed, media, R, half_width, omega_cap=None):
    """Continuation step: bracket around the previous root, widening twice."""
    cap = _omega_cap(K, media, omega_cap)
    f = _scan_fn(n, media, R)
    width = half_width
    for _ in range(3):
        lo = max(_OMEGA_FLOOR, omega_seed - width)
        hi = min(cap, omega_seed + width)
        if hi > lo:
            grid = np.linspace(lo, hi, 17)
            vals = f(K, grid)
            brackets = _brackets_from_scan(vals, grid)
            if brackets:
                # take the bracket whose midpoint is nearest the seed
                mids = [0.5 * (a + b) for a, b in brackets]
                a, b = brackets[int(np.argmin(np.abs(np.array(mids) - omega_seed)))]
                try:
                    return find_root_real(n, K, (a, b), media, R)
                except (RootNotFoundError, NotConvergedError, PoleError):
                    pass
        width *= 4.0
    return None


def trace_mode(n, K_grid, media, R, *, scan_step=DEFAULT_SCAN_STEP,
               include_nonbound=True, omega_cap=None,
               continuation_bound=0.05) -> DispersionCurve:
    """Trace the order-n branch over an increasing K grid by continuation.

    Bound roots are found by scan+bisection, each seeding the bracket at the
    next K.  Where the branch crosses the light line toward small K, the
    non-bound complex continuation (damped Newton seeded from the adjacent
    bound root) extends the curve; regime changes are recorded per sample,
    never interpolated across.  A lost branch leaves a gap marker in
    ``gaps`` rather than an error.
    """
    K_grid = np.asarray(K_grid, dtype=float)
    if K_grid.size == 0:
        raise ContractError("K_grid must be nonempty")
    if np.any(np.diff(K_grid) <= 0):
        raise ContractError("K_grid must be strictly increasing")
    if R <= 0:
        raise ContractError("R must be positive")

    bound: dict[int, ModePoint] = {}
    prev_omega = None
    last_step = None
    gaps: list[float] = []
    for i, K in enumerate(K_grid):
        pt = None
        if prev_omega is not None:
            half = max(4.0 * scan_step, 3.0 * abs(last_step or 0.0))
            pt = _local_bound_root(n, K, prev_omega, media, R, half, omega_cap)
        if pt is None:
            pt = _scan_bound_root(n, K, media, R, scan_step, omega_cap)
        if pt is None:
            if prev_omega is not None:
                gaps.append(float(K))
            prev_omega, last_step = None, None
            continue
        if prev_omega is not None:
            step = pt.Omega.real - prev_omega
            if abs(step) > max(continuation_bound, 10.0 * abs(last_step or np.inf)):
                gaps.append(float(K))  # suspected branch jump
            last_step = step
        prev_omega = pt.Omega.real
        bound[i] = pt

    nonbound: dict[int, ModePoint] = {}
    if include_nonbound and bound:
        first = min(bound)
        # a small imaginary nudge lets Newton leave the real axis
        guess = bound[first].Omega - 1e-3j
        for i in range(first - 1, -1, -1):
            K = float(K_grid[i])
            try:
                pt = find_root_complex(n, K, guess, media, R)
            except (NotConvergedError, PoleError):
                break
            if pt.regime != NONBOUND:
                break  # continuation crossed back below the light line
            nonbound[i] = pt
            guess = pt.Omega

    samples = [bound.get(i) or nonbound.get(i)
               for i in range(len(K_grid))
               if i in bound or i in nonbound]
    return DispersionCurve(n=n, media=media, R=R, samples=samples, gaps=gaps)


def solve_on_branch(curve: DispersionCurve, K: float) -> ModePoint:
    """Root at an arbitrary K on a traced bound branch (continuation-backed).

    Seeds the bracket by linear interpolation of the traced samples.
    """
    pts = curve.bound_samples()
    if len(pts) < 2:
        raise ContractError("need at least two bound samples to interpolate")
    Ks = np.array([p.K for p in pts])
    Os = np.array([p.Omega.real for p in pts])
    if K < Ks[0] - 0.5 or K > Ks[-1] + 0.5:
        raise RootNotFoundError(f"K={K} outside traced bound range "
                                f"[{Ks[0]}, {Ks[-1]}]")
    seed = float(np.interp(K, Ks, Os))
    j = int(np.clip(np.searchsorted(Ks, K), 1, len(Ks) - 1))
    local_var = abs(Os[j] - Os[j - 1])
    pt = _local_bound_root(curve.n, K, seed, curve.media, curve.R,
                           max(4.0 * local_var, 1e-4))
    if pt is None:
        raise RootNotFoundError(f"lost branch n={curve.n} at K={K}")
    return pt


def group_velocity(curve: DispersionCurve, K: float) -> float:
    """dOmega/dK on the bound branch via the implicit-function derivative
    -(dS/dK)/(dS/dOmega) evaluated at the root."""
    pt = solve_on_branch(curve, K)
    n, media, R = curve.n, curve.media, curve.R
    om = pt.Omega.real
    hK = 1e-6 * max(1.0, abs(K))
    hO = 1e-7 * max(1.0, abs(om))
    f = _scan_fn(n, media, R)
    dS_dK = (f(K + hK, om) - f(K - hK, om)) / (2.0 * hK)
    dS_dO = (f(K, om + hO) - f(K, om - hO)) / (2.0 * hO)
    if dS_dO == 0 or not np.isfinite(dS_dO):
        raise DegeneratePointError(f"dS/dOmega degenerate at K={K}")
    return float(-dS_dK / dS_dO)


def _slope_at_point(curve: DispersionCurve, pt: ModePoint) -> float:
    """Implicit derivative at an already-converged sample (no re-solve)."""
    n, media, R = curve.n, curve.media, curve.R
    om, K = pt.Omega.real, pt.K
    hK = 1e-6 * max(1.0, abs(K))
    hO = 1e-7 * max(1.0, abs(om))
    f = _scan_fn(n, media, R)
    dS_dK = (f(K + hK, om) - f(K - hK, om)) / (2.0 * hK)
    dS_dO = (f(K, om + hO) - f(K, om - hO)) / (2.0 * hO)
    if dS_dO == 0 or not np.isfinite(dS_dO):
        raise DegeneratePointError(f"dS/dOmega degenerate at K={K}")
    return float(-dS_dK / dS_dO)


def find_band_edges(curve: DispersionCurve, *, fit_halfwidth=0.05,
                    fit_points=9) -> tuple[list[BandEdge], list[UnresolvedEdge]]:
    """Locate interior zero-slope points of the bound branch.

    Slope sign changes between adjacent samples are refined by bisection on
    the implicit derivative to |K - K_c| <= 1e-6.  The signed curvature A_n
    comes from a quadratic least-squares fit over ``fit_points`` freshly
    solved roots spanning K_c +- fit_halfwidth; edges whose fit window falls
    off the branch (or with fewer than 3 traced samples on a side) are
    reported as unresolved.
    """
    pts = curve.bound_samples()
    if len(pts) < 5:
        raise ContractError("need >= 5 bound samples to search for band edges")
    slopes = [_slope_at_point(curve, p) for p in pts]
    edges: list[BandEdge] = []
    unresolved: list[UnresolvedEdge] = []
    for i in range(len(pts) - 1):
        if not (np.isfinite(slopes[i]) and np.isfinite(slopes[i + 1])):
            continue
        if np.sign(slopes[i]) == np.sign(slopes[i + 1]) or slopes[i] == 0:
            continue
        K_approx = 0.5 * (pts[i].K + pts[i + 1].K)
        if i < 3 or i + 1 > len(pts) - 4:
            unresolved.append(UnresolvedEdge(curve.n, K_approx,
                                             "fewer than 3 samples on one side"))
            continue
        lo, hi = pts[i].K, pts[i + 1].K
        slo = slopes[i]
        while hi - lo > 1e-7:
            mid = 0.5 * (lo + hi)
            sm = group_velocity(curve, mid)
            if slo * sm <= 0:
                hi = mid
            else:
                lo, slo = mid, sm
        K_c = 0.5 * (lo + hi)
        try:
            Omega_c = solve_on_branch(curve, K_c).Omega.real
            dKs = np.linspace(-fit_halfwidth, fit_halfwidth, fit_points)
            om_fit = np.array([solve_on_branch(curve, K_c + d).Omega.real
                               for d in dKs])
        except (RootNotFoundError, ContractError):
            unresolved.append(UnresolvedEdge(curve.n, K_c,
                                             "fit window falls off the branch"))
            continue
        # least squares Omega ~ c0 + c1 dK + c2 dK^2 (c1 stays ~0 at an extremum)
        coeff = np.polynomial.polynomial.polyfit(dKs, om_fit, 2)
        A_n = float(coeff[2])
        model = Omega_c + A_n * dKs**2
        fit_residual = float(np.max(np.abs(om_fit - model)))
        kind = "minimum" if A_n > 0 else "maximum"
        edges.append(BandEdge(n=curve.n, K_c=float(K_c), Omega_c=float(Omega_c),
                              A_n=A_n, kind=kind, fit_residual=fit_residual))
    return edges, unresolved


def attach_band_edges(curve: DispersionCurve, **kwargs) -> list[BandEdge]:
    """Detect edges and store them on the curve; returns the edge list."""
    edges, _ = find_band_edges(curve, **kwargs)
    curve.edges = edges
    return edges


def curve_to_csv(curve: DispersionCurve) -> str:
    """CSV export: n,K,Re_Omega,Im_Omega,regime,residual (9 sig. digits)."""
    lines = ["n,K,Re_Omega,Im_Omega,regime,residual"]
    for p in curve.samples:
        lines.append(",".join([
            str(p.n), sci9(p.K), sci9(p.Omega.real), sci9(p.Omega.imag),
            p.regime, sci9(p.residual),
        ]))
    return "\n".join(lines) + "\n"
