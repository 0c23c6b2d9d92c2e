"""Cylindrical Bessel and Hankel functions of integer order, complex argument.

Thin validated layer over scipy.special (Amos zbesj/zbesy/zbesh), which is
accurate to well below the 1e-10 relative contract on the supported domain
|n| <= 60, |z| <= 1e4.  Derivatives use the standard recurrence
f_n'(z) = (f_{n-1}(z) - f_{n+1}(z)) / 2, valid for J, Y and H1 alike.
"""

from __future__ import annotations

import numpy as np
from scipy import special

from .errors import DomainError, SingularityError

KINDS = ("J", "Y", "H1")

MAX_ORDER = 60
MAX_ABS_Z = 1.0e4

_FUNCS = {"J": special.jv, "Y": special.yv, "H1": special.hankel1}


def _check(kind: str, n: int, z):
    if kind not in KINDS:
        raise DomainError(f"unknown cylinder-function kind {kind!r}; expected {KINDS}")
    if not isinstance(n, (int, np.integer)):
        raise DomainError(f"order must be an integer, got {type(n).__name__}")
    if n < 0 or n > MAX_ORDER:
        raise DomainError(f"order {n} outside supported range 0..{MAX_ORDER}")
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) > MAX_ABS_Z):
        raise DomainError(f"|z| exceeds supported bound {MAX_ABS_Z:g}")
    if kind in ("Y", "H1") and np.any(z == 0):
        raise SingularityError(f"{kind}_n is singular at z = 0")
    return z


def cyl_fun(kind: str, n: int, z):
    """J_n, Y_n or H^(1)_n at complex argument z (scalar or array)."""
    z = _check(kind, n, z)
    out = _FUNCS[kind](n, z)
    if out.ndim == 0:
        return complex(out)
    return out


def cyl_fun_deriv(kind: str, n: int, z):
    """First derivative via f_n' = (f_{n-1} - f_{n+1}) / 2.

    At z = 0 (J only): J_1'(0) = 1/2, all other orders have J_n'(0) = 0.
    """
    z = _check(kind, n, z)
    f = _FUNCS[kind]
    # scipy handles negative integer orders through f_{-m} = (-1)^m f_m.
    out = 0.5 * (f(n - 1, z) - f(n + 1, z))
    if kind == "J" and np.any(z == 0):
        at0 = 0.5 if n == 1 else 0.0
        out = np.where(z == 0, at0, out)
    if out.ndim == 0:
        return complex(out)
    return out
