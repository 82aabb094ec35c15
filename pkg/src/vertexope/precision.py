"""Working-precision arithmetic context.

All coefficients in the engine are mpmath numbers at a configurable decimal
precision (default 50 digits).  Normalizations involve sqrt and pi factors,
and zeta values enter through Gamma-function Laurent expansions, so no exact
coefficient field closes over everything; arbitrary-precision floats do.
"""

from __future__ import annotations

import contextlib

import mpmath as mp

DEFAULT_DPS = 50

mp.mp.dps = DEFAULT_DPS


def set_precision(dps: int) -> None:
    if dps < 20:
        raise ValueError("working precision must be at least 20 digits")
    mp.mp.dps = dps


def get_precision() -> int:
    return mp.mp.dps


@contextlib.contextmanager
def precision(dps: int):
    """Temporarily switch the working precision."""
    old = mp.mp.dps
    set_precision(dps)
    try:
        yield
    finally:
        mp.mp.dps = old


def tol(margin: int = 10) -> mp.mpf:
    """Default comparison tolerance: 10^-(dps - margin)."""
    return mp.mpf(10) ** (-(mp.mp.dps - margin))


def to_mpc(x) -> mp.mpc:
    return mp.mpc(x)


def is_small(x, margin: int = 10) -> bool:
    return abs(mp.mpc(x)) < tol(margin)


def chop(x, margin: int = 10):
    """Zero out values below tolerance (used when normalizing term maps)."""
    z = mp.mpc(x)
    re = z.real if abs(z.real) >= tol(margin) else mp.mpf(0)
    im = z.imag if abs(z.imag) >= tol(margin) else mp.mpf(0)
    return mp.mpc(re, im)


def num_str(x) -> str:
    """Deterministic decimal string at full working precision.

    Used by the CLI so that identical configurations give byte-identical
    output; binary floats never appear in emitted JSON.
    """
    z = mp.mpc(x)
    re = mp.nstr(z.real, mp.mp.dps, strip_zeros=True)
    if z.imag == 0:
        return re
    im = mp.nstr(z.imag, mp.mp.dps, strip_zeros=True)
    return f"{re}{'+' if not im.startswith('-') else ''}{im}j"
