"""Two dots coupled through the one-dimensional plasmon continuum.

With both dots at the same distance from the wire, zero mutual detuning and
only dot 1 excited, the amplitudes obey the coupled memory equations

    db1/dt = -int_0^t [K11(tau) b1(t-tau) + K12(tau) b2(t-tau)] dtau
    db2/dt = -int_0^t [K12(tau) b1(t-tau) + K11(tau) b2(t-tau)] dtau

with the self-kernel K11 equal to the single-dot mode integral and the
cross-kernel carrying the standing-wave factor of the two propagation
directions,

    K12(tau) = -(beta/pi) sum_n int dK g2hat_n(K) cos(K z0) e^{-i(Omega-Omega_0) tau}.

The overall cross sign is pinned by the Markovian limit: at the dark
separations k0 z0 = m pi (and at z0 = 0) the closed-form pair amplitudes

    b1 = (1 + e^{-2 Gamma t})/2,   b2 = e^{-i k0 z0} (1 - e^{-2 Gamma t})/2

must emerge, leaving the pair in the half-trapped entangled state
|up,down> + e^{-i k0 z0} |down,up> with probability 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._fmt import sci9
from .dynamics import kernel_from_tables
from .errors import ContractError, DomainError
from .modefields import DipoleSpec

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TwoDotConfig:
    """Pair-dynamics parameters.

    omega0   : exciton transition frequency (plasma units).
    z0_hat   : inter-dot separation in units c/omega_p.
    k0       : wavenumber of the resonant n = 0 plasmon at omega0.
    gamma_sp : the Gamma parameter of the closed-form pair amplitudes; it is
        half the single-dot golden-rule population rate, calibrated so the
        z0 -> infinity limit decays at the emission-module rate.
    t_max, n_steps : uniform time grid (same rate units as gamma_sp).
    """

    omega0: float
    z0_hat: float
    k0: float
    gamma_sp: float
    t_max: float
    n_steps: int = 1200

    def __post_init__(self):
        if self.z0_hat < 0:
            raise DomainError("z0_hat must be >= 0")
        if self.gamma_sp < 0:
            raise DomainError("gamma_sp must be >= 0")
        if self.t_max <= 0 or self.n_steps < 100:
            raise DomainError("need t_max > 0 and n_steps >= 100")


@dataclass
class TwoDotTrace:
    """Amplitude history of the pair, with derived populations and
    pairwise concurrence of the conditional excited state."""

    times: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    accuracy: float | None = None
    warning: str | None = None

    @property
    def pop1(self) -> np.ndarray:
        return np.abs(self.b1) ** 2

    @property
    def pop2(self) -> np.ndarray:
        return np.abs(self.b2) ** 2

    @property
    def concurrence(self) -> np.ndarray:
        norm2 = self.pop1 + self.pop2
        with np.errstate(invalid="ignore", divide="ignore"):
            c = 2.0 * np.abs(self.b1) * np.abs(self.b2) / norm2
        return np.where(norm2 > 0, c, 0.0)


def markovian_amplitudes(cfg: TwoDotConfig, t):
    """Closed-form pair amplitudes in the flat-band (Markovian) regime where
    a single resonant branch carries the decay:

        b1 = (1 + e^{-2 Gamma t}) / 2
        b2 = e^{-i k0 z0} (1 - e^{-2 Gamma t}) / 2
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be >= 0")
    decay = np.exp(-2.0 * cfg.gamma_sp * t)
    b1 = 0.5 * (1.0 + decay) + 0.0j
    b2 = np.exp(-1j * cfg.k0 * cfg.z0_hat) * 0.5 * (1.0 - decay)
    if t.ndim == 0:
        return complex(b1), complex(b2)
    return b1.astype(complex), b2


def concurrence(b1: complex, b2: complex) -> float:
    """Concurrence of the normalized conditional one-excitation state
    (b1 |ud> + b2 |du>)/norm: C = 2|b1||b2| / (|b1|^2 + |b2|^2)."""
    n2 = abs(b1) ** 2 + abs(b2) ** 2
    if n2 == 0:
        raise DomainError("concurrence undefined for the zero state")
    return 2.0 * abs(b1) * abs(b2) / n2


@dataclass(frozen=True)
class StatePhase:
    kind: str  # "singlet_like" | "triplet_like" | "general"
    phi: float


def entangled_state_phase(k0: float, z0: float, tol: float = 1e-9) -> StatePhase:
    """Classify the trapped-state phase phi = k0 z0 mod 2 pi: the singlet
    forms at odd multiples of pi, the triplet at even multiples."""
    if k0 < 0 or z0 < 0:
        raise DomainError("k0 and z0 must be >= 0")
    phi = float(np.mod(k0 * z0, TWO_PI))
    if abs(phi - np.pi) <= tol:
        return StatePhase("singlet_like", phi)
    if phi <= tol or abs(phi - TWO_PI) <= tol:
        return StatePhase("triplet_like", 0.0)
    return StatePhase("general", phi)


def pair_kernels(tables, omega0: float, z0_hat: float, taus, beta: float = 1.0):
    """(K11, K12) at the requested lags; K12 carries -cos(K z0)."""
    k11 = kernel_from_tables(tables, omega0, taus, beta=beta)
    k12 = -kernel_from_tables(tables, omega0, taus, beta=beta,
                              weight=lambda K: np.cos(K * z0_hat))
    return k11, k12


def _pair_kernel_limit(tables, z0_hat: float, beta: float):
    k11 = sum(np.trapezoid(tb.g2hat, tb.K) for tb in tables if len(tb.K) >= 2)
    k12 = -sum(np.trapezoid(tb.g2hat * np.cos(tb.K * z0_hat), tb.K)
               for tb in tables if len(tb.K) >= 2)
    return beta * k11 / np.pi, beta * k12 / np.pi


def _volterra_pair(k11: np.ndarray, k12: np.ndarray, t_max: float, N: int):
    """Integrated trapezoidal-product scheme for the symmetric 2x2 system."""
    h = t_max / N
    half_h = 0.5 * h
    b = np.zeros((N + 1, 2), dtype=complex)
    D = np.zeros((N + 1, 2), dtype=complex)
    b[0, 0] = 1.0
    M0 = np.array([[k11[0], k12[0]], [k12[0], k11[0]]])
    lhs = np.eye(2) + half_h ** 2 * M0
    rhs_m = np.eye(2) - half_h ** 2 * M0
    lhs_inv = np.linalg.inv(lhs)
    for j in range(1, N + 1):
        if j > 1:
            d1 = D[j - 1:0:-1, 0]
            d2 = D[j - 1:0:-1, 1]
            conv1 = h * (k11[1:j] @ d1 + k12[1:j] @ d2)
            conv2 = h * (k12[1:j] @ d1 + k11[1:j] @ d2)
        else:
            conv1 = conv2 = 0.0
        rhs = rhs_m @ b[j - 1] - np.array([conv1, conv2])
        b[j] = lhs_inv @ rhs
        D[j] = half_h * (b[j - 1] + b[j])
    return b


def evolve_two(cfg: TwoDotConfig, curves, dipole: DipoleSpec, *,
               quantization_length_hat: float = 1.0,
               table_samples: int = 600, tables=None,
               check_convergence: bool = True) -> TwoDotTrace:
    """Integrate the coupled pair equations with kernels built from the
    traced branches (retardation enters through the cos(K z0) phase
    structure of the cross-kernel; no instantaneous-coupling shortcut).

    Precomputed coupling tables may be passed to bypass the mode-profile
    pipeline (model bands, or reuse across runs)."""
    from .emission import CouplingTable

    if tables is None:
        tables = [CouplingTable.build(c, dipole, n_samples=table_samples,
                                      quantization_length_hat=quantization_length_hat)
                  for c in curves]
    if not any(len(tb.K) >= 2 for tb in tables):
        raise ContractError("no usable branch coverage for the pair kernels")
    beta = dipole.free_space_rate_beta
    times = np.linspace(0.0, cfg.t_max, cfg.n_steps + 1)

    def solve(n_steps: int):
        tloc = np.linspace(0.0, cfg.t_max, n_steps + 1)
        k11 = np.empty(n_steps + 1, dtype=complex)
        k12 = np.empty(n_steps + 1, dtype=complex)
        k11[1:], k12[1:] = pair_kernels(tables, cfg.omega0, cfg.z0_hat,
                                        tloc[1:], beta=beta)
        k11[0], k12[0] = _pair_kernel_limit(tables, cfg.z0_hat, beta)
        return _volterra_pair(k11, k12, cfg.t_max, n_steps)

    b = solve(cfg.n_steps)
    accuracy = None
    warning = None
    if check_convergence:
        n2 = cfg.n_steps // 2
        b_coarse = solve(n2)
        if 2 * n2 == cfg.n_steps:
            accuracy = float(np.max(np.abs(b[::2] - b_coarse)))
        else:
            t2 = np.linspace(0.0, cfg.t_max, n2 + 1)
            fine = np.stack([
                np.interp(t2, times, b[:, k].real) + 1j * np.interp(t2, times, b[:, k].imag)
                for k in range(2)], axis=1)
            accuracy = float(np.max(np.abs(fine - b_coarse)))
        if accuracy > 1e-3:
            warning = f"step-halving disagreement {accuracy:.2e} exceeds 1e-3"
    return TwoDotTrace(times=times, b1=b[:, 0], b2=b[:, 1],
                       accuracy=accuracy, warning=warning)


def twodot_to_csv(trace: TwoDotTrace) -> str:
    """CSV: t,Re_b1,Im_b1,Re_b2,Im_b2,pop1,pop2,concurrence."""
    lines = ["t,Re_b1,Im_b1,Re_b2,Im_b2,pop1,pop2,concurrence"]
    p1, p2, cc = trace.pop1, trace.pop2, trace.concurrence
    for i, t in enumerate(trace.times):
        lines.append(",".join([
            sci9(t), sci9(trace.b1[i].real), sci9(trace.b1[i].imag),
            sci9(trace.b2[i].real), sci9(trace.b2[i].imag),
            sci9(p1[i]), sci9(p2[i]), sci9(cc[i]),
        ]))
    return "\n".join(lines) + "\n"
