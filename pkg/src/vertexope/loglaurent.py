"""The filtered ring of r^k ln^j r h_{l,m}(x-hat) terms and its Green operator.

Elements are finite sums over the canonical angular bases of the harmonics
module.  The Laplacian acts exactly on basis monomials; the right inverse G
is realized by the residue trick: each monomial is lifted to a contour
representation in auxiliary delta variables (canonical lift: ln^j r becomes
j!/delta^{j+1} on one fresh variable), the new quadratic denominator
[(k+2+s)(k+D+s) - l(l+D-2)] with s the sum of all variables is appended, and
residues are collapsed innermost-first.  Resonant denominators are what
produce new logarithms, never an error.

Contour elements support several exponential carriers (r^delta always;
additional symbols such as a regulator power eps^delta appear in the
renormalization fixtures), so collapse returns polynomials in the
corresponding log symbols.
"""

from __future__ import annotations

import mpmath as mp

from .precision import is_small, chop
from . import harmonics


class LogLaurentElement:
    """Finite sum of r^k ln^j r h_{l,m}(x-hat) monomials in dimension D.

    terms: {(k, j, l, m): coefficient}; k integer, j the log power, (l, m)
    indexing the canonical harmonic basis.
    """

    __slots__ = ("D", "terms")

    def __init__(self, D: int, terms: dict | None = None):
        self.D = D
        self.terms = {}
        if terms:
            for key, c in terms.items():
                if c != 0:
                    self.terms[key] = self.terms.get(key, mp.mpc(0)) + mp.mpc(c)

    # -- ring structure ----------------------------------------------------

    def __add__(self, other: "LogLaurentElement") -> "LogLaurentElement":
        if self.D != other.D:
            raise ValueError("dimension mismatch")
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, mp.mpc(0)) + c
        return LogLaurentElement(self.D, out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, s) -> "LogLaurentElement":
        return LogLaurentElement(self.D, {k: c * s for k, c in self.terms.items()})

    def __mul__(self, other: "LogLaurentElement") -> "LogLaurentElement":
        """Product; angular parts re-expanded through harmonic decomposition."""
        if self.D != other.D:
            raise ValueError("dimension mismatch")
        out: dict = {}
        for (k1, j1, l1, m1), c1 in self.terms.items():
            for (k2, j2, l2, m2), c2 in other.terms.items():
                dec = harmonics.product_decompose(self.D, l1, m1, l2, m2)
                for (lam, mm), w in dec.items():
                    key = (k1 + k2, j1 + j2, lam, mm)
                    out[key] = out.get(key, mp.mpc(0)) + c1 * c2 * w
        return LogLaurentElement(self.D, out)

    def normalized(self, margin: int = 10) -> "LogLaurentElement":
        return LogLaurentElement(
            self.D, {k: c for k, c in self.terms.items()
                     if not is_small(c, margin)})

    # -- inspection ----------------------------------------------------------

    def is_zero(self, margin: int = 10) -> bool:
        return all(is_small(c, margin) for c in self.terms.values())

    def filtration(self) -> int:
        return max((j for (_, j, _, _) in self.terms), default=0)

    def scaling_degree(self) -> int:
        """Most singular power of r (logs ignored); undefined for zero."""
        nz = [k for (k, j, l, m), c in self.terms.items() if not is_small(c)]
        if not nz:
            raise ValueError("scaling degree of the zero element is undefined")
        return min(nz)

    def max_abs(self) -> mp.mpf:
        return max((abs(c) for c in self.terms.values()), default=mp.mpf(0))

    def distance(self, other: "LogLaurentElement") -> mp.mpf:
        return (self - other).max_abs()

    def evaluate(self, r, xhat) -> mp.mpc:
        """Numeric value at radius r and unit vector xhat."""
        r = mp.mpf(r)
        lr = mp.log(r)
        total = mp.mpc(0)
        for (k, j, l, m), c in self.terms.items():
            total += c * r ** k * lr ** j * harmonics.eval_basis(self.D, l, m, xhat)
        return total

    def __repr__(self):
        if not self.terms:
            return "LogLaurentElement(0)"
        bits = []
        for (k, j, l, m), c in sorted(self.terms.items()):
            s = mp.nstr(c, 8)
            piece = f"{s}*r^{k}"
            if j:
                piece += f"*ln^{j}r" if j > 1 else "*ln r"
            piece += f"*Y[{l},{m}]"
            bits.append(piece)
        return " + ".join(bits)

    def to_records(self):
        out = []
        for (k, j, l, m), c in sorted(self.terms.items()):
            z = mp.mpc(c)
            out.append({"k": k, "j": j, "l": l, "m": m,
                        "re": mp.nstr(z.real, mp.mp.dps),
                        "im": mp.nstr(z.imag, mp.mp.dps)})
        return out


def laplacian(a: LogLaurentElement) -> LogLaurentElement:
    """Exact Laplacian on basis monomials:

    D[r^k ln^j h] = [k(k+D-2) - l(l+D-2)] r^{k-2} ln^j h
                    + j(2k+D-2) r^{k-2} ln^{j-1} h
                    + j(j-1) r^{k-2} ln^{j-2} h.
    """
    D = a.D
    out: dict = {}

    def put(key, c):
        if c != 0:
            out[key] = out.get(key, mp.mpc(0)) + c

    for (k, j, l, m), c in a.terms.items():
        put((k - 2, j, l, m), c * (k * (k + D - 2) - l * (l + D - 2)))
        if j >= 1:
            put((k - 2, j - 1, l, m), c * j * (2 * k + D - 2))
        if j >= 2:
            put((k - 2, j - 2, l, m), c * j * (j - 1))
    return LogLaurentElement(D, out)


def _green_monomial_coeffs(D: int, k: int, j: int, l: int) -> list[mp.mpc]:
    """Log-polynomial coefficients of G(r^k ln^j r h_{l,m}) / r^{k+2}.

    Residue at 0 of j! e^{sL} / (s^{j+1} (s - rho1)(s - rho2)) with
    rho1 = l - k - 2, rho2 = -(k + l + D); returns [c_0, ..., c_t] meaning
    sum c_t ln^t r.  Zero roots raise the pole order (the resonant case).
    """
    rho = [l - k - 2, -(k + l + D)]
    nonzero = [r for r in rho if r != 0]
    extra = 2 - len(nonzero)
    order = j + extra  # degree of the log polynomial of the result
    # series of prod 1/(s - rho) up to s^order
    ser = [mp.mpf(1)] + [mp.mpf(0)] * order
    for r in nonzero:
        geo = [-(mp.mpf(r)) ** (-(n + 1)) for n in range(order + 1)]
        ser = [sum(ser[i] * geo[n - i] for i in range(n + 1)) for n in range(order + 1)]
    # coefficient of s^{j+extra} in e^{sL} * ser = sum_n L^n/n! ser[j+extra-n]
    fact_j = mp.factorial(j)
    out = []
    for n in range(order + 1):
        idx = j + extra - n
        if idx < 0:
            out.append(mp.mpc(0))
        else:
            out.append(fact_j * ser[idx] / mp.factorial(n))
    return out


def green(a: LogLaurentElement) -> LogLaurentElement:
    """The right inverse G of the Laplacian (all free constants zero)."""
    out: dict = {}
    for (k, j, l, m), c in a.terms.items():
        coeffs = _green_monomial_coeffs(a.D, k, j, l)
        for t, ct in enumerate(coeffs):
            if ct != 0:
                key = (k + 2, t, l, m)
                out[key] = out.get(key, mp.mpc(0)) + c * ct
    return LogLaurentElement(a.D, out)


def green_ambiguous(a: LogLaurentElement, A: dict | None = None,
                    B: dict | None = None) -> LogLaurentElement:
    """G plus the homogeneous-solution freedom.

    Per source monomial r^k ln^j h_{l,m}: adds A[(j,l,m)] r^l h when k+2 = l
    and B[(j,l,m)] r^{2-D-l} h when k+2 = 2-D-l.
    """
    A = A or {}
    B = B or {}
    out = green(a)
    extra: dict = {}
    for (k, j, l, m), c in a.terms.items():
        if k + 2 == l and (j, l, m) in A:
            key = (l, 0, l, m)
            extra[key] = extra.get(key, mp.mpc(0)) + A[(j, l, m)]
        if k + 2 == 2 - a.D - l and (j, l, m) in B:
            key = (2 - a.D - l, 0, l, m)
            extra[key] = extra.get(key, mp.mpc(0)) + B[(j, l, m)]
    return out + LogLaurentElement(a.D, extra)


def green_contour(c: "ContourElement") -> "ContourElement":
    """G on a contour element: appends a fresh innermost variable and the
    factored inverse-Laplacian denominator.

    The new denominator [(k+2+s)(k+D+s) - l(l+D-2)]^{-1} with s the sum of
    all variables factors into (s - rho1)(s - rho2), rho1 = l-k-2,
    rho2 = -(k+l+D); its residue in the new variable must be taken first.
    """
    n = c.nvars + 1
    numer = {e + (0,): v for e, v in c.numer.items()}
    denom = [(LinForm(f.const, f.coeffs + (0,)), p) for f, p in c.denom]
    ones = (1,) * n
    rho1 = c.l - c.k - 2
    rho2 = -(c.k + c.l + c.D)
    denom.append((LinForm(-rho1, ones), 1))
    denom.append((LinForm(-rho2, ones), 1))
    carriers = [dict(d) for d in c.carriers] + [{}]
    return ContourElement(c.D, c.k + 2, c.l, c.m, n, numer, denom, carriers,
                          prefactor=c.prefactor)


# ---------------------------------------------------------------------------
# contour (delta-variable) representation


class LinForm:
    """Linear form a0 + sum a_i delta_i over the contour variables."""

    __slots__ = ("const", "coeffs")

    def __init__(self, const, coeffs: tuple):
        self.const = mp.mpc(const)
        self.coeffs = tuple(mp.mpc(c) for c in coeffs)

    def drop_last(self) -> "LinForm":
        return LinForm(self.const, self.coeffs[:-1])

    def last(self) -> mp.mpc:
        return self.coeffs[-1] if self.coeffs else mp.mpc(0)

    def is_zero_without_last(self) -> bool:
        return self.const == 0 and all(c == 0 for c in self.coeffs[:-1])

    def key(self):
        return (str(self.const),) + tuple(str(c) for c in self.coeffs)


class ContourElement:
    """r^k h_{l,m}(x-hat) times an iterated residue integral.

    variables: ordering of the delta's, the *last* being innermost (its
    residue is taken first).  Each variable i carries the measure
    d delta_i / delta_i, the radial power r^{delta_i}, and optionally extra
    exponential carriers exp(delta_i * logsym) recorded in carriers[i] as
    {symbol: weight}.  F is (numerator polynomial, list of (LinForm, power)).
    """

    def __init__(self, D: int, k: int, l: int, m: int, nvars: int,
                 numer: dict | None = None,
                 denom: list | None = None,
                 carriers: list | None = None,
                 prefactor=1):
        self.D = D
        self.k = k
        self.l = l
        self.m = m
        self.nvars = nvars
        self.numer = numer if numer is not None else {(0,) * nvars: mp.mpc(1)}
        self.denom = denom if denom is not None else []
        self.carriers = carriers if carriers is not None else [{} for _ in range(nvars)]
        self.prefactor = mp.mpc(prefactor)


def _poly_mul1(p: dict, q: dict) -> dict:
    out: dict = {}
    for a, ca in p.items():
        for b, cb in q.items():
            key = tuple(x + y for x, y in zip(a, b))
            out[key] = out.get(key, mp.mpc(0)) + ca * cb
    return out


def _series_inverse_linform(c0_form: LinForm, a_last, power: int, order: int):
    """1/(c0 + a s)^power as a series in s up to s^order.

    c0 is a linear form in the outer variables; entry n is the pair
    (C(power-1+n, n) (-a)^n, power + n) meaning that scalar over c0^{power+n}.
    """
    out = []
    binom = mp.mpf(1)
    for n in range(order + 1):
        out.append((binom * (-mp.mpc(a_last)) ** n, power + n))
        binom = binom * (power + n) / (n + 1)
    return out


def collapse(c: ContourElement, log_symbols: tuple = ("r",)) -> dict:
    """Iterated residues, innermost (last) variable first.

    Returns {(k, logpowers, l, m): coefficient} with logpowers a tuple of
    exponents of the registered log symbols ("r" for ln r, plus any carrier
    symbols).  Residues are taken at 0; under the nested-radius contour
    policy every pole whose location is set by an outer variable lies outside
    the inner circle, so only the explicit poles at 0 contribute.
    """
    nsym = len(log_symbols)
    sym_index = {s: i for i, s in enumerate(log_symbols)}
    if "r" not in sym_index:
        raise ValueError("the 'r' log symbol must be registered")
    state = [(dict(c.numer), list(c.denom), {(0,) * nsym: mp.mpc(1)})]
    for var in range(c.nvars - 1, -1, -1):
        key = [0] * nsym
        key[sym_index["r"]] = 1
        lam = {tuple(key): mp.mpc(1)}
        for sym, w in c.carriers[var].items():
            key = [0] * nsym
            key[sym_index[sym]] = 1
            lam[tuple(key)] = lam.get(tuple(key), mp.mpc(0)) + mp.mpc(w)
        new_state = []
        for numer, denom, logpoly in state:
            new_state.extend(_residue_step(numer, denom, logpoly, var, lam))
        state = new_state
    out: dict = {}
    for numer, denom, logpoly in state:
        scale = mp.mpc(1)
        for form, power in denom:
            if any(cc != 0 for cc in form.coeffs) or form.const == 0:
                raise RuntimeError("collapse left unresolved denominators")
            scale /= form.const ** power
        const = numer.get((), mp.mpc(0)) * scale
        for jkey, cc in logpoly.items():
            key = (c.k, jkey, c.l, c.m)
            out[key] = out.get(key, mp.mpc(0)) + c.prefactor * const * cc
    return {k: v for k, v in out.items() if v != 0}


def _logpoly_mul(p: dict, q: dict, scale=1) -> dict:
    out: dict = {}
    for a, ca in p.items():
        for b, cb in q.items():
            key = tuple(x + y for x, y in zip(a, b))
            out[key] = out.get(key, mp.mpc(0)) + ca * cb * scale
    return out


def _residue_step(numer: dict, denom: list, logpoly: dict, var: int, lam: dict):
    """Residue in variable index var (the innermost remaining one).

    Input exponent tuples have length var+1; outputs have length var.  lam is
    the carrier log-polynomial Lambda with exp(s Lambda) entering the series.
    Returns a list of branches (numer, denom, logpoly).
    """
    pole_power = 1  # the measure ds/s
    scalar = mp.mpc(1)
    true_factors = []
    rest_denom = []
    for form, power in denom:
        a = form.coeffs[var]
        reduced = LinForm(form.const, form.coeffs[:var] + form.coeffs[var + 1:])
        if a == 0:
            rest_denom.append((reduced, power))
        elif reduced.const == 0 and all(cc == 0 for cc in reduced.coeffs):
            # factor (a s)^power: a pure pole at 0 scaled by a^{-power}
            pole_power += power
            scalar *= mp.mpc(a) ** (-power)
        else:
            true_factors.append((reduced, a, power))
    order = pole_power - 1
    by_s: dict[int, dict] = {}
    for exps, cc in numer.items():
        s_pow = exps[var]
        rest = exps[:var] + exps[var + 1:]
        slot = by_s.setdefault(s_pow, {})
        slot[rest] = slot.get(rest, mp.mpc(0)) + cc
    lam_pows = [{(0,) * len(next(iter(lam))): mp.mpc(1)}]
    for _ in range(order):
        lam_pows.append(_logpoly_mul(lam_pows[-1], lam))

    fac_series = [(reduced, _series_inverse_linform(reduced, a, power, order))
                  for reduced, a, power in true_factors]
    branches = []

    def rec(fi, remaining, coeff_acc, denom_acc):
        if fi == len(fac_series):
            for s_pow, poly in by_s.items():
                n_exp = remaining - s_pow
                if n_exp < 0:
                    continue
                new_logpoly = _logpoly_mul(logpoly, lam_pows[n_exp],
                                           scale=1 / mp.factorial(n_exp))
                new_numer = {e: cc * coeff_acc * scalar for e, cc in poly.items()}
                branches.append((new_numer, rest_denom + denom_acc, new_logpoly))
            return
        reduced, series = fac_series[fi]
        for n in range(remaining + 1):
            coeff, powc0 = series[n]
            rec(fi + 1, remaining - n, coeff_acc * coeff,
                denom_acc + [(reduced, powc0)])

    rec(0, order, mp.mpc(1), [])
    return branches
