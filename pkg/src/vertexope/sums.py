"""Exact summation of rational sequences.

Mode sums from same-point contractions have summands that are rational in
the summed index with rational pole locations (the factored inverse-
Laplacian denominators).  They are summed in closed form through partial
fractions: Hurwitz zeta values for pole orders >= 2 and digamma differences
for the simple-pole part, whose coefficients must cancel for an absolutely
convergent sum.  A geometrically weighted variant (Lerch transcendent plus
polylogarithms for the polynomial part) covers operator compositions at
separated radii, where the ratio of radii enters as the weight.
"""

from __future__ import annotations

from fractions import Fraction

import mpmath as mp


class NonSummableError(ArithmeticError):
    pass


def _frval(x: Fraction) -> mp.mpf:
    x = Fraction(x)
    return mp.mpf(x.numerator) / mp.mpf(x.denominator)


def _poly_eval(coeffs, x):
    total = mp.mpc(0)
    for c in reversed(coeffs):
        total = total * x + c
    return total


def _poly_shift(coeffs, r):
    """Coefficients of N(t + r) in t, given those of N(l)."""
    out = [mp.mpc(0)] * max(len(coeffs), 1)
    for k, c in enumerate(coeffs):
        for j in range(k + 1):
            out[j] += c * mp.binomial(k, j) * mp.mpc(r) ** (k - j)
    return out


def _normalize_den(den):
    """den [(a, b, p)] -> ({root: multiplicity}, scalar) with monic factors."""
    roots: dict[Fraction, int] = {}
    scale = mp.mpc(1)
    for a, b, p in den:
        a, b = Fraction(a), Fraction(b)
        if a == 0:
            if b == 0:
                raise ZeroDivisionError("zero denominator form")
            scale /= _frval(b) ** p
            continue
        roots[-b / a] = roots.get(-b / a, 0) + p
        scale /= _frval(a) ** p
    return roots, scale


def partial_fractions(num, den, allow_poly: bool = False):
    """Decompose N(l) / prod (a l + b)^p.

    Returns (pf, poly): pf maps each rational root r to [c_1, ..., c_m] with
    c_i the coefficient of (l - r)^{-i}; poly is the polynomial part (empty
    unless allow_poly).  Roots are exact Fractions, so equal poles group
    exactly.
    """
    roots, scale = _normalize_den(den)
    numc = [mp.mpc(c) * scale for c in num]
    total_mult = sum(roots.values())
    poly: list = []
    if not roots:
        return {}, numc
    if len(numc) - 1 >= total_mult:
        if not allow_poly:
            raise NonSummableError("degree gap below 2: not summable")
        # build the monic denominator polynomial by repeated multiplication
        denpoly = [mp.mpc(1)]
        for r, m in roots.items():
            rv = _frval(r)
            for _ in range(m):
                denpoly = [(-rv) * denpoly[0]] + [
                    denpoly[i - 1] - rv * denpoly[i] for i in range(1, len(denpoly))
                ] + [denpoly[-1]]
        quot = [mp.mpc(0)] * (len(numc) - len(denpoly) + 1)
        rem = list(numc)
        while len(rem) >= len(denpoly):
            lead = rem[-1] / denpoly[-1]
            shift = len(rem) - len(denpoly)
            quot[shift] += lead
            for i, dc in enumerate(denpoly):
                rem[shift + i] -= lead * dc
            rem.pop()
        numc = rem if rem else [mp.mpc(0)]
        poly = quot
    elif len(numc) - 1 > total_mult - 2 and not allow_poly:
        raise NonSummableError("degree gap below 2: not summable")
    pf = {}
    for r, m in roots.items():
        rv = _frval(r)
        series = _poly_shift(numc, rv)[:m]
        series += [mp.mpc(0)] * (m - len(series))
        for rp, mpow in roots.items():
            if rp == r:
                continue
            gap = rv - _frval(rp)
            inv = []
            binom = mp.mpf(1)
            for n in range(m):
                inv.append(binom * (-1) ** n / gap ** (mpow + n))
                binom = binom * (mpow + n) / (n + 1)
            series = [sum(series[i] * inv[n - i] for i in range(n + 1))
                      for n in range(m)]
        coeffs = [mp.mpc(0)] * m
        for t in range(m):
            coeffs[m - t - 1] = series[t]
        pf[r] = coeffs
    return pf, poly


def sum_rational_tail(num, den, l0: int) -> mp.mpc:
    """sum_{l >= l0} N(l)/prod (a l + b)^p; every pole must lie below l0."""
    pf, poly = partial_fractions(num, den)
    if any(c != 0 for c in poly):
        raise NonSummableError("polynomial part in an unweighted tail")
    total = mp.mpc(0)
    simple = []
    for r, coeffs in pf.items():
        q = mp.mpf(l0) - _frval(r)
        if q <= 0:
            raise NonSummableError("pole at or above the summation start")
        for i, c in enumerate(coeffs):
            if i == 0:
                simple.append((c, q))
            elif c != 0:
                total += c * mp.zeta(i + 1, q)
    if simple:
        resid = sum(c for c, _ in simple)
        span = max(abs(c) for c, _ in simple)
        if abs(resid) > mp.mpf(10) ** (-(mp.mp.dps - 12)) * (1 + span):
            raise NonSummableError("simple-pole coefficients do not cancel")
        for c, q in simple:
            if c != 0:
                total -= c * mp.digamma(q)
    return total


def rational_value(num, den, l) -> mp.mpc:
    v = _poly_eval(num, l)
    for a, b, p in den:
        v /= (_frval(Fraction(a)) * l + _frval(Fraction(b))) ** p
    return v


def sum_rational_range(num, den, l0: int, l1: int, skip=()) -> mp.mpc:
    total = mp.mpc(0)
    for l in range(l0, l1 + 1):
        if l in skip:
            continue
        total += rational_value(num, den, l)
    return total


def sum_rational_tail_geometric(num, den, l0: int, h) -> mp.mpc:
    """sum_{l >= l0} N(l) h^l / prod (a l + b)^p for |h| < 1; exact."""
    h = mp.mpc(h)
    if abs(h) >= 1:
        raise NonSummableError("|h| < 1 required for the geometric tail")
    pf, poly = partial_fractions(num, den, allow_poly=True)
    total = mp.mpc(0)
    for r, coeffs in pf.items():
        q = mp.mpf(l0) - _frval(r)
        if q <= 0:
            raise NonSummableError("pole at or above the summation start")
        for i, c in enumerate(coeffs):
            if c != 0:
                total += c * h ** l0 * mp.lerchphi(h, i + 1, q)
    for k, c in enumerate(poly):
        if c != 0:
            total += c * _power_geometric(k, h, l0)
    return total


def _power_geometric(k: int, h, l0: int) -> mp.mpc:
    """sum_{l >= l0} l^k h^l via the polylogarithm of negative order."""
    full = mp.polylog(-k, h)  # sum_{l >= 1} l^k h^l
    if k == 0:
        full += 1  # include l = 0
        head = sum(h ** l for l in range(0, l0))
    else:
        head = sum(mp.mpf(l) ** k * h ** l for l in range(1, l0))
    return full - head
