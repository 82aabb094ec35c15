"""Harmonic polynomials in D real variables.

Dimension counting, orthonormal bases on the sphere S^{D-1}, differential
action on polynomials and on the radial fundamental solution, decomposition
of harmonic functions, exact monomial sphere integrals, and the SO(D)
representation matrices on degree-l harmonics.

Polynomials are stored as dicts mapping exponent tuples alpha (len D) to
mpmath coefficients.  Bases are orthonormal with respect to the *unnormalized*
surface measure dOmega: integral of conj(h) h' over S^{D-1} equals delta.
With that convention the Gram constant of the derivative pairing is
k_l / sigma_D rather than the bare k_l (which belongs to the convention where
the measure is normalized to total mass sigma_D); see norm_constants.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import mpmath as mp

from .precision import is_small, tol

_cache_lock = threading.Lock()
_basis_cache: dict = {}
_integral_cache: dict = {}

Poly = dict  # exponent tuple -> mpc


# ---------------------------------------------------------------------------
# polynomial helpers


def poly_add(p: Poly, q: Poly) -> Poly:
    out = dict(p)
    for a, c in q.items():
        out[a] = out.get(a, mp.mpf(0)) + c
        if out[a] == 0:
            del out[a]
    return out


def poly_scale(p: Poly, s) -> Poly:
    return {a: c * s for a, c in p.items()}


def poly_mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for a, ca in p.items():
        for b, cb in q.items():
            key = tuple(x + y for x, y in zip(a, b))
            out[key] = out.get(key, mp.mpf(0)) + ca * cb
    return {a: c for a, c in out.items() if c != 0}


def poly_eval(p: Poly, point) -> mp.mpc:
    total = mp.mpc(0)
    for a, c in p.items():
        term = mp.mpc(c)
        for xi, ai in zip(point, a):
            if ai:
                term *= mp.mpc(xi) ** ai
        total += term
    return total


def poly_conj(p: Poly) -> Poly:
    return {a: mp.conj(c) for a, c in p.items()}


def poly_laplacian(p: Poly) -> Poly:
    out: Poly = {}
    for a, c in p.items():
        for mu, am in enumerate(a):
            if am >= 2:
                key = a[:mu] + (am - 2,) + a[mu + 1:]
                out[key] = out.get(key, mp.mpf(0)) + c * am * (am - 1)
    return {a: c for a, c in out.items() if c != 0}


def poly_diff(p: Poly, mu: int) -> Poly:
    out: Poly = {}
    for a, c in p.items():
        if a[mu]:
            key = a[:mu] + (a[mu] - 1,) + a[mu + 1:]
            out[key] = out.get(key, mp.mpf(0)) + c * a[mu]
    return out


def poly_degree(p: Poly) -> int:
    return max((sum(a) for a in p), default=0)


def r2_poly(D: int) -> Poly:
    return {tuple(2 if nu == mu else 0 for nu in range(D)): mp.mpf(1) for mu in range(D)}


# ---------------------------------------------------------------------------
# counting, sphere integrals, constants


def count_harmonics(D: int, l: int) -> int:
    """Number N(D,l) of independent degree-l harmonic polynomials."""
    if D < 2:
        raise ValueError("dimension must be >= 2")
    if l < 0:
        raise ValueError("degree must be >= 0")
    if l == 0:
        return 1
    num = (2 * l + D - 2) * mp.factorial(l + D - 3)
    den = mp.factorial(D - 2) * mp.factorial(l)
    return int(mp.nint(num / den))


def sphere_area(D: int) -> mp.mpf:
    """Surface area of S^{D-1}: 2 pi^{D/2} / Gamma(D/2)."""
    return 2 * mp.pi ** (mp.mpf(D) / 2) / mp.gamma(mp.mpf(D) / 2)


def monomial_sphere_integral(D: int, alpha) -> mp.mpf:
    """Integral of x-hat^alpha over S^{D-1}; zero unless all exponents even."""
    alpha = tuple(int(a) for a in alpha)
    if any(a < 0 for a in alpha):
        raise ValueError("exponents must be non-negative")
    if any(a % 2 for a in alpha):
        return mp.mpf(0)
    key = (D, alpha, mp.mp.dps)
    with _cache_lock:
        if key in _integral_cache:
            return _integral_cache[key]
    num = mp.mpf(2)
    for a in alpha:
        num *= mp.gamma(mp.mpf(a + 1) / 2)
    val = num / mp.gamma(mp.mpf(sum(alpha) + D) / 2)
    with _cache_lock:
        _integral_cache[key] = val
    return val


def sphere_inner(p: Poly, q: Poly, D: int) -> mp.mpc:
    """<p, q> = integral over S^{D-1} of conj(p)(x-hat) q(x-hat)."""
    total = mp.mpc(0)
    for a, ca in p.items():
        for b, cb in q.items():
            key = tuple(x + y for x, y in zip(a, b))
            total += mp.conj(ca) * cb * monomial_sphere_integral(D, key)
    return total


@dataclass(frozen=True)
class NormConstants:
    """The l-dependent constants of the free-field construction.

    k_l, q_l, c_l are the closed forms quoted with the sigma_D-normalized
    harmonic convention (total sphere mass sigma_D); gram_l = k_l / sigma_D
    and chat_l = c_l / sqrt(sigma_D) are their counterparts for the
    unit-normalized bases this module builds.  c_l is defined as
    sqrt(q_l k_l), which is what the symmetric form of the free OPE requires.
    """

    D: int
    l: int
    k_l: mp.mpf
    q_l: mp.mpf
    c_l: mp.mpf
    omega: mp.mpf
    K_D: mp.mpf
    sigma_D: mp.mpf
    gram_l: mp.mpf
    chat_l: mp.mpf


def norm_constants(D: int, l: int) -> NormConstants:
    half_D = mp.mpf(D) / 2
    k_l = mp.mpf(2) ** l * mp.gamma(l + half_D) / mp.gamma(half_D)
    if D == 2:
        q_l = mp.mpf(1) if l == 0 else mp.mpf(2) ** (l - 1) * mp.gamma(l)
        K_D = mp.mpf(1)
    else:
        q_l = mp.mpf(2) ** l * mp.gamma(l + half_D - 1) / mp.gamma(half_D - 1)
        K_D = mp.sqrt(D - 2)
    c_l = mp.sqrt(q_l * k_l)
    sigma = sphere_area(D)
    return NormConstants(
        D=D,
        l=l,
        k_l=k_l,
        q_l=q_l,
        c_l=c_l,
        omega=mp.mpf(2 * l + D - 2),
        K_D=K_D,
        sigma_D=sigma,
        gram_l=k_l / sigma,
        chat_l=c_l / mp.sqrt(sigma),
    )


# ---------------------------------------------------------------------------
# harmonic polynomials and bases


class HarmonicPolynomial:
    """Homogeneous harmonic polynomial of degree l in D variables."""

    def __init__(self, D: int, l: int, coeffs: Poly, check: bool = True):
        self.D = D
        self.l = l
        self.coeffs = {a: mp.mpc(c) for a, c in coeffs.items() if c != 0}
        if check:
            for a in self.coeffs:
                if sum(a) != l:
                    raise ValueError("polynomial is not homogeneous of the stated degree")
            lap = poly_laplacian(self.coeffs)
            scale = max((abs(c) for c in self.coeffs.values()), default=mp.mpf(1))
            if any(abs(c) > tol() * scale * 100 for c in lap.values()):
                raise ValueError("polynomial is not harmonic")

    def __call__(self, point) -> mp.mpc:
        return poly_eval(self.coeffs, point)

    def conj(self) -> "HarmonicPolynomial":
        return HarmonicPolynomial(self.D, self.l, poly_conj(self.coeffs), check=False)

    def scale(self, s) -> "HarmonicPolynomial":
        return HarmonicPolynomial(self.D, self.l, poly_scale(self.coeffs, s), check=False)

    def __repr__(self):
        return f"HarmonicPolynomial(D={self.D}, l={self.l}, {len(self.coeffs)} terms)"


def harmonic_projection(p: Poly, D: int, degree: int) -> Poly:
    """Top harmonic component of a homogeneous degree-n polynomial.

    Gauss decomposition p = H_n + r^2 H_{n-2} + ...; the top part is
    sum_k c_k r^{2k} Laplacian^k p with c_0 = 1 and
    c_{k+1} = -c_k / (2(k+1)(2n + D - 2 - 2(k+1))).
    """
    n = degree
    out: Poly = dict(p)
    ck = mp.mpf(1)
    rk: Poly = {tuple([0] * D): mp.mpf(1)}
    lap = dict(p)
    for k in range(1, n // 2 + 1):
        lap = poly_laplacian(lap)
        if not lap:
            break
        ck = -ck / (2 * k * (2 * n + D - 2 - 2 * k))
        rk = poly_mul(rk, r2_poly(D))
        out = poly_add(out, poly_scale(poly_mul(rk, lap), ck))
    return out


def _lex_monomials(D: int, l: int):
    if D == 1:
        yield (l,)
        return
    for first in range(l, -1, -1):
        for rest in _lex_monomials(D - 1, l - first):
            yield (first,) + rest


def build_basis(D: int, l: int) -> list[HarmonicPolynomial]:
    """Deterministic orthonormal basis of degree-l harmonics.

    D=2 returns the complex pair (2 pi)^{-1/2} (x1 +/- i x2)^l (single constant
    member at l=0).  D>=3 projects lexicographic monomials onto their harmonic
    part and Gram-Schmidt orthonormalizes with the exact sphere inner product.
    Results are cached per (D, l, precision); population is idempotent.
    """
    key = (D, l, mp.mp.dps)
    with _cache_lock:
        if key in _basis_cache:
            return _basis_cache[key]
    members = _build_basis_uncached(D, l)
    with _cache_lock:
        _basis_cache.setdefault(key, members)
        return _basis_cache[key]


def _build_basis_uncached(D: int, l: int) -> list[HarmonicPolynomial]:
    if D < 2:
        raise ValueError("dimension must be >= 2")
    if l == 0:
        c = 1 / mp.sqrt(sphere_area(D))
        return [HarmonicPolynomial(D, 0, {(0,) * D: c}, check=False)]
    if D == 2:
        # (x1 + i x2)^l and its conjugate, normalized on the circle
        plus: Poly = {(1, 0): mp.mpc(1), (0, 1): mp.mpc(0, 1)}
        w: Poly = {(0, 0): mp.mpc(1)}
        for _ in range(l):
            w = poly_mul(w, plus)
        c = 1 / mp.sqrt(2 * mp.pi)
        h_plus = HarmonicPolynomial(2, l, poly_scale(w, c), check=False)
        return [h_plus, h_plus.conj()]

    n_target = count_harmonics(D, l)
    members: list[Poly] = []
    parities: list[tuple] = []  # inner products across parity classes vanish
    for alpha in _lex_monomials(D, l):
        par = tuple(a % 2 for a in alpha)
        cand = harmonic_projection({alpha: mp.mpf(1)}, D, l)
        for h, hp in zip(members, parities):
            if hp == par:
                cand = poly_add(cand, poly_scale(h, -sphere_inner(h, cand, D)))
        nrm2 = sphere_inner(cand, cand, D).real
        if nrm2 < tol(15):
            continue
        members.append(poly_scale(cand, 1 / mp.sqrt(nrm2)))
        parities.append(par)
        if len(members) == n_target:
            break
    if len(members) != n_target:
        raise RuntimeError(f"harmonic basis construction failed for D={D}, l={l}")
    return [HarmonicPolynomial(D, l, h, check=False) for h in members]


def eval_basis(D: int, l: int, m: int, xhat) -> mp.mpc:
    """h_{l,m}(xhat) with caching over repeated evaluation points."""
    key = ("ev", D, l, m, tuple(str(v) for v in xhat), mp.mp.dps)
    with _cache_lock:
        if key in _integral_cache:
            return _integral_cache[key]
    val = build_basis(D, l)[m - 1](xhat)
    with _cache_lock:
        _integral_cache[key] = val
    return val


def conj_index(D: int, l: int, m: int) -> int:
    """Index m' with h_{l,m'} = conj(h_{l,m}) in the canonical basis."""
    if D == 2 and l > 0:
        return 2 if m == 1 else 1
    return m  # D=2 l=0 and all D>=3 bases are real


def gram_constant(D: int, l: int) -> mp.mpf:
    """Derivative pairing constant: conj(h)(d) h'(x) at 0 = gram * delta."""
    return norm_constants(D, l).gram_l


# ---------------------------------------------------------------------------
# differential action and decomposition


def apply_operator(h: HarmonicPolynomial, p: Poly) -> Poly:
    """h(d) acting on a polynomial: exact repeated differentiation."""
    out: Poly = {}
    for alpha, c in h.coeffs.items():
        q = dict(p)
        for mu, amu in enumerate(alpha):
            for _ in range(amu):
                q = poly_diff(q, mu)
                if not q:
                    break
        for b, cb in q.items():
            out[b] = out.get(b, mp.mpf(0)) + c * cb
    return {a: c for a, c in out.items() if c != 0}


def apply_differential(h: HarmonicPolynomial, target="g"):
    """h(d) applied to a polynomial or to the radial fundamental solution g.

    For target "g" (g = ln r in D=2, r^{2-D} for D>2) the exact result is
    (-1)^l q_l r^{2-D-l} h(x-hat) for D>2 and, for D=2 with l>=1,
    (-1)^{l+1} q_l r^{-l} h(x-hat); both are returned as a LogLaurentElement
    on the canonical angular basis.  Polynomial targets are differentiated
    exactly and returned as a plain coefficient dict.
    """
    if isinstance(target, dict):
        return apply_operator(h, target)
    if target != "g":
        raise ValueError("target must be a polynomial dict or 'g'")
    from .loglaurent import LogLaurentElement

    D, l = h.D, h.l
    nc = norm_constants(D, l)
    if D == 2 and l == 0:
        # h is the constant (2 pi)^{-1/2}: multiplication by it
        c0 = h.coeffs.get((0, 0), mp.mpc(0))
        return LogLaurentElement(D, {(0, 1, 0, 1): c0 * mp.sqrt(2 * mp.pi)})
    sign = (-1) ** l if D > 2 else (-1) ** (l + 1)
    # h(x-hat) decomposed over the canonical basis of the same degree
    basis = build_basis(D, l)
    terms = {}
    k = (2 - D) - l
    for m, hm in enumerate(basis, start=1):
        coeff = sphere_inner(hm, {a: mp.mpc(c) for a, c in h.coeffs.items()}, D)
        if not is_small(coeff):
            terms[(k, 0, l, m)] = sign * nc.q_l * coeff
    return LogLaurentElement(D, terms)


def angular_decompose(p: Poly, D: int, degree: int) -> dict:
    """Decompose the sphere restriction of a homogeneous polynomial.

    Returns {(lam, m): coeff} with p(x-hat) = sum coeff h_{lam,m}(x-hat),
    lam running over degree, degree-2, ...  Exact via monomial integrals.
    """
    out = {}
    lam = degree
    while lam >= 0:
        for m, hm in enumerate(build_basis(D, lam), start=1):
            c = sphere_inner(hm.coeffs, p, D)
            if not is_small(c):
                out[(lam, m)] = c
        lam -= 2
    return out


def harmonic_decompose(f: Poly, D: int) -> dict:
    """Coefficients of a harmonic polynomial over the canonical bases.

    f may mix degrees; each homogeneous part must be harmonic (Laplacian
    residual above tolerance is rejected).  Coefficient of h_{l,m} is
    gram_l^{-1} (conj(h_{l,m})(d) f)(0); reconstruction is exact.
    """
    lap = poly_laplacian(f)
    scale = max((abs(c) for c in f.values()), default=mp.mpf(1))
    if any(abs(c) > tol() * scale * 100 for c in lap.values()):
        raise ValueError("input polynomial is not harmonic")
    by_degree: dict[int, Poly] = {}
    for a, c in f.items():
        by_degree.setdefault(sum(a), {})[a] = c
    out = {}
    for l, part in sorted(by_degree.items()):
        g = gram_constant(D, l)
        for m, hm in enumerate(build_basis(D, l), start=1):
            # conj(h)(d) part, evaluated at 0: pure pairing of coefficients
            val = mp.mpc(0)
            for alpha, c in hm.coeffs.items():
                if alpha in part:
                    fact = mp.mpf(1)
                    for ai in alpha:
                        fact *= mp.factorial(ai)
                    val += mp.conj(c) * part[alpha] * fact
            coeff = val / g
            if not is_small(coeff):
                out[(l, m)] = coeff
    return out


def product_decompose(D: int, l1: int, m1: int, l2: int, m2: int) -> dict:
    """Sphere decomposition of h_{l1,m1}(x-hat) h_{l2,m2}(x-hat); cached."""
    key = ("prod", D, l1, m1, l2, m2, mp.mp.dps)
    with _cache_lock:
        if key in _integral_cache:
            return _integral_cache[key]
    h1 = build_basis(D, l1)[m1 - 1]
    h2 = build_basis(D, l2)[m2 - 1]
    out = angular_decompose(poly_mul(h1.coeffs, h2.coeffs), D, l1 + l2)
    with _cache_lock:
        _integral_cache[key] = out
    return out


# ---------------------------------------------------------------------------
# rotations


def rotation_matrix(D: int, l: int, g) -> list[list[mp.mpc]]:
    """Matrix of the SO(D) action on degree-l harmonics.

    Defined by h_{l,m}(g x) = sum_m' Dmat[m][m'] h_{l,m'}(x); rejects
    matrices that are not orthogonal within tolerance.
    """
    g = [[mp.mpf(x) for x in row] for row in g]
    for i in range(D):
        for j in range(D):
            dot = mp.fsum(g[k][i] * g[k][j] for k in range(D))
            if abs(dot - (1 if i == j else 0)) > tol():
                raise ValueError("matrix is not orthogonal within tolerance")
    basis = build_basis(D, l)
    rows = []
    for hm in basis:
        # h_m(g x) as a polynomial in x
        comp: Poly = {}
        for alpha, c in hm.coeffs.items():
            term: Poly = {(0,) * D: mp.mpc(1)}
            for mu, amu in enumerate(alpha):
                lin = {tuple(1 if nu == j else 0 for nu in range(D)): g[mu][j]
                       for j in range(D)}
                for _ in range(amu):
                    term = poly_mul(term, lin)
            for b, cb in term.items():
                comp[b] = comp.get(b, mp.mpc(0)) + c * cb
        rows.append([sphere_inner(hp.coeffs, comp, D) for hp in basis])
    return rows
