"""Free-field vertex operators and OPE coefficients.

Y0 of the basic field is the mode expansion over the canonical (unit-norm)
harmonic bases; composite vertex operators are normal-ordered products of
derivative-extracted copies.  Matrix elements between field labels are the
free OPE coefficients; everything is cross-checked against the
Schwinger-function oracle and the consistency (associativity) condition.

Normalization: with unit-normalized harmonics the mode coefficients carry
sqrt(sigma_D) relative to the forms quoted for sigma_D-normalized harmonics
(K_D sqrt(sigma_D/omega) per branch, all positive for D > 2), the basic
field embeds as the bare label e_{(0,1)}, and in D = 2 associativity forces
the l >= 1 annihilation coefficients to be negative once the two-point
function is ln r.  These choices make <c|Y0(a,x)|b> an exactly associative
system of structure constants and keep <1|Y0(phi,x)|phi> = r^{2-D} (ln r in
D=2).
"""

from __future__ import annotations

import itertools
import threading
from fractions import Fraction

import mpmath as mp

from . import fock, harmonics, loglaurent
from .fock import FieldLabel, FockVector
from .loglaurent import LogLaurentElement
from .precision import is_small

_lock = threading.Lock()
_phi_cache: dict = {}
_mode_factor_cache: dict = {}
_pair_kernel_cache: dict = {}


class OperatorExpansion:
    """Normal-ordered operator: sum over (creation, annihilation) multi-
    indices of LogLaurentElement coefficient functions.

    terms: {(A, B): LogLaurentElement} with A, B sorted tuples of (l, m).
    """

    def __init__(self, D: int, order: int, terms: dict, l_max: int,
                 particle_cap: int | None = None):
        self.D = D
        self.order = order
        self.terms = {k: v for k, v in terms.items() if v.terms}
        self.l_max = l_max
        self.particle_cap = particle_cap

    def scale(self, s) -> "OperatorExpansion":
        return OperatorExpansion(self.D, self.order,
                                 {k: v.scale(s) for k, v in self.terms.items()},
                                 self.l_max, self.particle_cap)

    def __add__(self, other: "OperatorExpansion") -> "OperatorExpansion":
        out = dict(self.terms)
        for key, el in other.terms.items():
            out[key] = out[key] + el if key in out else el
        return OperatorExpansion(self.D, max(self.order, other.order), out,
                                 min(self.l_max, other.l_max), self.particle_cap)

    def matrix_element(self, c: FieldLabel, b: FieldLabel) -> LogLaurentElement:
        out = LogLaurentElement(self.D)
        for (A, B), el in self.terms.items():
            w = fock.monomial_matrix_element(c, A, B, b)
            if w != 0:
                out = out + el.scale(w)
        return out

    def out_labels(self, b: FieldLabel):
        """Labels c with <c|Y|b> potentially nonzero."""
        seen = set()
        for (A, B) in self.terms:
            lab = b
            ok = True
            for l, m in B:
                if lab.get(l, m) == 0:
                    ok = False
                    break
                lab = lab.shifted(l, m, -1)
            if not ok:
                continue
            for l, m in A:
                lab = lab.shifted(l, m, +1)
            seen.add(lab)
        return sorted(seen)


def _identity_expansion(D: int, l_max: int) -> OperatorExpansion:
    # the constant function 1 expanded over the l=0 basis member
    one = mp.sqrt(harmonics.sphere_area(D))
    return OperatorExpansion(
        D, 0, {((), ()): LogLaurentElement(D, {(0, 0, 0, 1): one})}, l_max)


def y0_phi(D: int, l_max: int) -> OperatorExpansion:
    """Y0 of the basic field, truncated at mode cutoff l_max."""
    key = (D, l_max, mp.mp.dps)
    with _lock:
        if key in _phi_cache:
            return _phi_cache[key]
    terms: dict = {}
    if D == 2:
        root = mp.sqrt(2 * mp.pi)
        terms[(((0, 1),), ())] = LogLaurentElement(2, {(0, 0, 0, 1): root})
        terms[((), ((0, 1),))] = LogLaurentElement(2, {(0, 1, 0, 1): root})
        for l in range(1, l_max + 1):
            c = mp.sqrt(mp.pi / l)
            for m in (1, 2):
                mbar = harmonics.conj_index(2, l, m)
                terms[(((l, m),), ())] = LogLaurentElement(2, {(l, 0, l, m): c})
                terms[((), ((l, m),))] = LogLaurentElement(2, {(-l, 0, l, mbar): -c})
    else:
        sigma = harmonics.sphere_area(D)
        for l in range(l_max + 1):
            nc = harmonics.norm_constants(D, l)
            c = nc.K_D * mp.sqrt(sigma / nc.omega)
            for m in range(1, harmonics.count_harmonics(D, l) + 1):
                mbar = harmonics.conj_index(D, l, m)
                terms[(((l, m),), ())] = LogLaurentElement(D, {(l, 0, l, m): c})
                terms[((), ((l, m),))] = LogLaurentElement(
                    D, {(2 - D - l, 0, l, mbar): c})
    out = OperatorExpansion(D, 0, terms, l_max)
    with _lock:
        _phi_cache.setdefault(key, out)
        return _phi_cache[key]


# ---------------------------------------------------------------------------
# differential action on coefficient functions


def differentiate_element(el: LogLaurentElement, op: harmonics.HarmonicPolynomial
                          ) -> LogLaurentElement:
    """Apply the polynomial differential operator op(d) to an element.

    Works in mixed form P(x) r^c ln^j with P homogeneous; each partial
    derivative preserves the class, and the result is re-expanded over the
    canonical angular bases by exact sphere projection.
    """
    D = el.D
    mixed: dict = {}
    for (k, j, l, m), c in el.terms.items():
        h = harmonics.build_basis(D, l)[m - 1]
        for alpha, ca in h.coeffs.items():
            key = (alpha, k - l, j)
            mixed[key] = mixed.get(key, mp.mpc(0)) + c * ca
    out_mixed = {}
    for alpha_op, c_op in op.coeffs.items():
        cur = dict(mixed)
        for mu, n_mu in enumerate(alpha_op):
            for _ in range(n_mu):
                cur = _mixed_diff(cur, mu, D)
        for key, c in cur.items():
            out_mixed[key] = out_mixed.get(key, mp.mpc(0)) + c_op * c
    # regroup mixed terms into canonical LogLaurent terms
    by_shape: dict = {}
    for (alpha, cpow, j), c in out_mixed.items():
        if c == 0:
            continue
        d = sum(alpha)
        by_shape.setdefault((d, cpow, j), {})[alpha] = \
            by_shape.setdefault((d, cpow, j), {}).get(alpha, mp.mpc(0)) + c
    terms: dict = {}
    for (d, cpow, j), poly in by_shape.items():
        dec = harmonics.angular_decompose(poly, D, d)
        for (lam, mm), w in dec.items():
            key = (cpow + d, j, lam, mm)
            terms[key] = terms.get(key, mp.mpc(0)) + w
    return LogLaurentElement(D, terms)


def _mixed_diff(mixed: dict, mu: int, D: int) -> dict:
    """d/dx_mu on sum of P(x) r^c ln^j terms (P a monomial dict here)."""
    out: dict = {}

    def put(key, c):
        if c != 0:
            out[key] = out.get(key, mp.mpc(0)) + c

    for (alpha, cpow, j), c in mixed.items():
        if alpha[mu]:
            put((alpha[:mu] + (alpha[mu] - 1,) + alpha[mu + 1:], cpow, j),
                c * alpha[mu])
        bumped = alpha[:mu] + (alpha[mu] + 1,) + alpha[mu + 1:]
        if cpow:
            put((bumped, cpow - 2, j), c * cpow)
        if j:
            put((bumped, cpow - 2, j - 1), c * j)
    return out


def ope_entry(D: int, lam: int, mu: int, branch: str, lp: int, mpp: int
              ) -> LogLaurentElement:
    """Single coefficient function of Y0(e_{(lam,mu)}, x).

    branch "c": the a^+_{lp,mpp} coefficient; branch "a": the a_{lp,mpp}
    coefficient.  Obtained as chat^{-1} conj(h_{lam,mu})(d) applied to the
    corresponding Y0(phi) entry; cached per precision.
    """
    key = (D, lam, mu, branch, lp, mpp, mp.mp.dps)
    with _lock:
        if key in _mode_factor_cache:
            return _mode_factor_cache[key]
    base = y0_phi(D, max(lp, 0))
    tkey = (((lp, mpp),), ()) if branch == "c" else ((), ((lp, mpp),))
    el = base.terms.get(tkey, LogLaurentElement(D))
    if (lam, mu) == (0, 1):
        out = el
    elif branch == "c" and lp < lam:
        out = LogLaurentElement(D)
    else:
        hbar = harmonics.build_basis(D, lam)[mu - 1].conj()
        chat = harmonics.norm_constants(D, lam).chat_l
        out = differentiate_element(el, hbar).scale(1 / chat)
    with _lock:
        _mode_factor_cache.setdefault(key, out)
        return _mode_factor_cache[key]


def mode_factor(D: int, l: int, m: int, l_max: int) -> OperatorExpansion:
    """Y0 of the single-quantum label e_{(l,m)}, truncated at l_max."""
    terms = {}
    for lp in range(l_max + 1):
        for mpp in range(1, harmonics.count_harmonics(D, lp) + 1):
            for branch in ("c", "a"):
                el = ope_entry(D, l, m, branch, lp, mpp)
                if el.terms:
                    tkey = ((((lp, mpp),), ()) if branch == "c"
                            else ((), ((lp, mpp),)))
                    terms[tkey] = el
    return OperatorExpansion(D, 0, terms, l_max)


def product_no_contraction(e1: OperatorExpansion, e2: OperatorExpansion
                           ) -> OperatorExpansion:
    """Normal-ordered product: merge ladder content, multiply coefficients."""
    out: dict = {}
    for (A1, B1), f1 in e1.terms.items():
        for (A2, B2), f2 in e2.terms.items():
            key = (tuple(sorted(A1 + A2)), tuple(sorted(B1 + B2)))
            prod = f1 * f2
            out[key] = out[key] + prod if key in out else prod
    return OperatorExpansion(e1.D, e1.order + e2.order, out,
                             min(e1.l_max, e2.l_max))


def y0(a: FieldLabel, D: int, l_max: int) -> OperatorExpansion:
    """Free vertex operator of a composite label (normal-ordered product of
    single-quantum factors with the (a!)^{-1/2} normalization)."""
    if a.is_vacuum():
        return _identity_expansion(D, l_max)
    out = None
    norm = mp.mpf(1)
    for (l, m), n in a.occ:
        norm /= mp.sqrt(mp.factorial(n))
        fac = mode_factor(D, l, m, l_max)
        for _ in range(n):
            out = fac if out is None else product_no_contraction(out, fac)
    return out.scale(norm)


def y0_vector(v: FockVector, D: int, l_max: int) -> OperatorExpansion:
    """Y0 extended linearly to Fock vectors."""
    out = None
    for lab, c in v.terms.items():
        e = y0(lab, D, l_max).scale(c)
        out = e if out is None else out + e
    if out is None:
        return OperatorExpansion(D, 0, {}, l_max)
    return out


def matrix_element(c: FieldLabel, Y: OperatorExpansion, b: FieldLabel
                   ) -> LogLaurentElement:
    return Y.matrix_element(c, b)


def label_matrix_element(a: FieldLabel, c: FieldLabel, b: FieldLabel,
                         l_max: int | None = None) -> LogLaurentElement:
    """<c| Y0(a, x) |b> by direct assignment enumeration.

    Each quantum of a either creates a quantum of c or annihilates one of b;
    the coefficient of an assignment is the product of the single-quantum
    entry functions times the normal-ordered ladder matrix element.  Avoids
    building the full operator expansion (modes outside c and b never enter).
    """
    D = a.D
    if a.is_vacuum():
        out = LogLaurentElement(D)
        if b == c:
            one = mp.sqrt(harmonics.sphere_area(D))
            out = out + LogLaurentElement(D, {(0, 0, 0, 1): one})
        return out
    quanta = []
    norm = mp.mpf(1)
    for (l, m), n in a.occ:
        norm /= mp.sqrt(mp.factorial(n))
        quanta.extend([(l, m)] * n)
    b_modes = b.modes()
    c_modes = c.modes()
    total = LogLaurentElement(D)
    results = []

    def rec(idx, A, B, acc):
        if idx == len(quanta):
            w = fock.monomial_matrix_element(c, tuple(sorted(A)), tuple(sorted(B)), b)
            if w != 0:
                results.append((acc, w))
            return
        lam, mu = quanta[idx]
        for target in c_modes:
            el = ope_entry(D, lam, mu, "c", *target)
            if el.terms:
                rec(idx + 1, A + [target], B, acc * el if acc is not None else el)
        for target in b_modes:
            el = ope_entry(D, lam, mu, "a", *target)
            if el.terms:
                rec(idx + 1, A, B + [target], acc * el if acc is not None else el)

    one = LogLaurentElement(D, {(0, 0, 0, 1): mp.sqrt(harmonics.sphere_area(D))})
    rec(0, [], [], one)
    for el, w in results:
        total = total + el.scale(w)
    return total.scale(norm)


def out_labels_lazy(a: FieldLabel, b: FieldLabel, l_max: int):
    """Labels c with <c|Y0(a,x)|b> potentially nonzero, mode cutoff l_max."""
    D = a.D
    quanta = []
    for (l, m), n in a.occ:
        quanta.extend([(l, m)] * n)
    seen = set()

    def rec(idx, lab):
        if idx == len(quanta):
            seen.add(lab)
            return
        lam, mu = quanta[idx]
        for (l, m) in lab.modes():
            if ope_entry(D, lam, mu, "a", l, m).terms:
                rec(idx + 1, lab.shifted(l, m, -1))
        for lp in range(l_max + 1):
            for mpp in range(1, harmonics.count_harmonics(D, lp) + 1):
                if ope_entry(D, lam, mu, "c", lp, mpp).terms:
                    rec(idx + 1, lab.shifted(lp, mpp, +1))

    rec(0, b)
    return sorted(seen)


# ---------------------------------------------------------------------------
# Schwinger-function oracle


def _pair_kernel(D: int, mode1, mode2):
    """Contraction < quantum (l,m) at u, quantum (l',m') at 0 > as a mixed
    polynomial list [(poly, cpow, j)] in u; exact differentiation of the
    propagator g (ln r in D=2, r^{2-D} else)."""
    key = (D, mode1, mode2, mp.mp.dps)
    with _lock:
        if key in _pair_kernel_cache:
            return _pair_kernel_cache[key]
    (l1, m1), (l2, m2) = mode1, mode2
    h1 = harmonics.build_basis(D, l1)[m1 - 1].conj()
    h2 = harmonics.build_basis(D, l2)[m2 - 1].conj()
    oppoly = harmonics.poly_mul(h1.coeffs, h2.coeffs)
    sign = (-1) ** l2  # second operator differentiates the other argument
    chat1 = harmonics.norm_constants(D, l1).chat_l
    chat2 = harmonics.norm_constants(D, l2).chat_l
    scale = sign / (chat1 * chat2)
    mixed = ({((0,) * D, 0, 1): mp.mpc(1)} if D == 2
             else {((0,) * D, 2 - D, 0): mp.mpc(1)})
    out: dict = {}
    for alpha, c_op in oppoly.items():
        cur = dict(mixed)
        for mu, n_mu in enumerate(alpha):
            for _ in range(n_mu):
                cur = _mixed_diff(cur, mu, D)
        for kk, c in cur.items():
            out[kk] = out.get(kk, mp.mpc(0)) + c_op * c * scale
    result = [(alpha, cpow, j, c) for (alpha, cpow, j), c in out.items() if c != 0]
    with _lock:
        _pair_kernel_cache.setdefault(key, result)
        return _pair_kernel_cache[key]


def _eval_pair_kernel(D: int, mode1, mode2, u) -> mp.mpc:
    r2 = mp.fsum(x * x for x in u)
    r = mp.sqrt(r2)
    lr = mp.log(r)
    total = mp.mpc(0)
    for alpha, cpow, j, c in _pair_kernel(D, mode1, mode2):
        term = c * r ** cpow * (lr ** j if j else 1)
        for xi, ai in zip(u, alpha):
            if ai:
                term *= mp.mpf(xi) ** ai
        total += term
    return total


def schwinger_free(powers, points, D: int) -> mp.mpc:
    """Schwinger function of unnormalized phi^{p_v} insertions.

    Sum over perfect matchings of the quanta with no same-vertex pairs of
    the product of propagators (ln in D=2).  Zero for odd total power.
    """
    labels = [FieldLabel(D, {(0, 1): p}) for p in powers]
    norm = mp.mpf(1)
    for p in powers:
        norm *= mp.sqrt(mp.factorial(p))
    return schwinger_labels(labels, points, D) * norm


def schwinger_labels(labels, points, D: int) -> mp.mpc:
    """Schwinger function of normalized composite labels O_a at points."""
    pts = [tuple(mp.mpf(x) for x in p) for p in points]
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if all(a == b for a, b in zip(pts[i], pts[j])):
                raise ValueError("coincident insertion points")
    quanta = []
    norm = mp.mpf(1)
    for v, lab in enumerate(labels):
        for (l, m), n in lab.occ:
            norm /= mp.sqrt(mp.factorial(n))
            quanta.extend([(v, (l, m))] * n)
    if len(quanta) % 2:
        return mp.mpc(0)

    total = mp.mpc(0)

    def rec(remaining, acc):
        nonlocal total
        if not remaining:
            total += acc
            return
        v0, mode0 = remaining[0]
        rest = remaining[1:]
        for idx in range(len(rest)):
            v1, mode1 = rest[idx]
            if v1 == v0:
                continue
            u = tuple(a - b for a, b in zip(pts[v0], pts[v1]))
            k = _eval_pair_kernel(D, mode0, mode1, u)
            if k != 0:
                rec(rest[:idx] + rest[idx + 1:], acc * k)

    rec(quanta, mp.mpc(1))
    return total * norm


# ---------------------------------------------------------------------------
# residual checks


def _unit(x):
    r = mp.sqrt(mp.fsum(v * v for v in x))
    return r, tuple(v / r for v in x)


def verify_ope_against_schwinger(a: FieldLabel, b: FieldLabel, spectators,
                                 x, ys, D: int, dim_cutoff,
                                 l_max: int | None = None):
    """|<O_a(x) O_b(0) prod spect> - sum_c <c|Y0(a,x)|b><O_c(0) prod spect>|.

    Returns (residual, lhs, rhs); requires |y_i| > |x| > 0.
    """
    rx = mp.sqrt(mp.fsum(mp.mpf(v) ** 2 for v in x))
    for y in ys:
        ry = mp.sqrt(mp.fsum(mp.mpf(v) ** 2 for v in y))
        if not ry > rx:
            raise ValueError("spectator points must satisfy |y| > |x|")
    if l_max is None:
        l_max = int(dim_cutoff) + 2
    origin = tuple(mp.mpf(0) for _ in range(D))
    lhs = schwinger_labels([a, b] + list(spectators),
                           [tuple(x), origin] + [tuple(y) for y in ys], D)
    r, xhat = _unit([mp.mpf(v) for v in x])
    rhs = mp.mpc(0)
    for c in out_labels_lazy(a, b, l_max):
        if c.dimension() > Fraction(dim_cutoff):
            continue
        coeff = label_matrix_element(a, c, b).evaluate(r, xhat)
        if is_small(coeff, margin=5):
            continue
        rhs += coeff * schwinger_labels([c] + list(spectators),
                                        [origin] + [tuple(y) for y in ys], D)
    return abs(lhs - rhs), lhs, rhs


def consistency_residual(a: FieldLabel, b: FieldLabel, c: FieldLabel,
                         e: FieldLabel, x, y, D: int, dim_cutoff,
                         l_max: int | None = None, particle_cap: int = 8):
    """Order-0 consistency: the d-sum difference

    sum_{dim(d)<=cutoff} [C^d_{ab}(x-y) C^e_{dc}(y) - C^d_{bc}(y) C^e_{ad}(x)]

    evaluated at a configuration with 0 < |x-y| < |y| < |x|.
    """
    x = tuple(mp.mpf(v) for v in x)
    y = tuple(mp.mpf(v) for v in y)
    xy = tuple(p - q for p, q in zip(x, y))
    r_x, xhat = _unit(x)
    r_y, yhat = _unit(y)
    r_xy, xyhat = _unit(xy)
    if not (0 < r_xy < r_y < r_x):
        raise ValueError("points must satisfy 0 < |x-y| < |y| < |x|")
    if l_max is None:
        l_max = int(dim_cutoff) + 2
    cutoff = Fraction(dim_cutoff)

    lhs = mp.mpc(0)
    for d in out_labels_lazy(a, b, l_max):
        if d.dimension() > cutoff or d.total() > particle_cap:
            continue
        c1 = label_matrix_element(a, d, b).evaluate(r_xy, xyhat)
        if is_small(c1, margin=5):
            continue
        c2 = label_matrix_element(d, e, c).evaluate(r_y, yhat)
        lhs += c1 * c2
    rhs = mp.mpc(0)
    for d in out_labels_lazy(b, c, l_max):
        if d.dimension() > cutoff or d.total() > particle_cap:
            continue
        c1 = label_matrix_element(b, d, c).evaluate(r_y, yhat)
        if is_small(c1, margin=5):
            continue
        c2 = label_matrix_element(a, e, d).evaluate(r_x, xhat)
        rhs += c1 * c2
    return abs(lhs - rhs), lhs, rhs


def composition_me(e: FieldLabel, a: FieldLabel, x, b: FieldLabel, y,
                   c: FieldLabel) -> mp.mpc:
    """<e| Y0(a,x) Y0(b,y) |c>: exact two-operator composition.

    Wick's theorem between the two normal-ordered operators: cross
    contractions of a-quanta annihilation branches with b-quanta creation
    branches resum to the closed pair kernel at x - y (the differentiated
    propagator), so no intermediate state sum enters.  Requires |x| > |y|.
    """
    D = a.D
    x = tuple(mp.mpf(v) for v in x)
    y = tuple(mp.mpf(v) for v in y)
    rx = mp.sqrt(mp.fsum(v * v for v in x))
    ry = mp.sqrt(mp.fsum(v * v for v in y))
    if not rx > ry:
        raise ValueError("composition needs |x| > |y|")
    u = tuple(p - q for p, q in zip(x, y))
    r1, xhat = _unit(x)
    r2, yhat = _unit(y)

    a_quanta = []
    norm = mp.mpf(1)
    for (l, m), n in a.occ:
        norm /= mp.sqrt(mp.factorial(n))
        a_quanta.extend([(l, m)] * n)
    b_quanta = []
    for (l, m), n in b.occ:
        norm /= mp.sqrt(mp.factorial(n))
        b_quanta.extend([(l, m)] * n)

    e_modes = e.modes()
    c_modes = c.modes()
    total = mp.mpc(0)

    def value_entry(mode, branch, target, point):
        el = ope_entry(D, mode[0], mode[1], branch, *target)
        if not el.terms:
            return mp.mpc(0)
        r, hat = (r1, xhat) if point == 0 else (r2, yhat)
        return el.evaluate(r, hat)

    def rec_b(idx, A, B, acc):
        nonlocal total
        if idx == len(b_quanta):
            w = fock.monomial_matrix_element(e, tuple(sorted(A)), tuple(sorted(B)), c)
            if w != 0:
                total += acc * w
            return
        mode = b_quanta[idx]
        if mode is None:  # contracted away
            rec_b(idx + 1, A, B, acc)
            return
        for target in e_modes:
            v = value_entry(mode, "c", target, 1)
            if v != 0:
                rec_b(idx + 1, A + [target], B, acc * v)
        for target in c_modes:
            v = value_entry(mode, "a", target, 1)
            if v != 0:
                rec_b(idx + 1, A, B + [target], acc * v)

    def rec_a(idx, b_free, A, B, acc):
        if idx == len(a_quanta):
            saved = list(b_quanta)
            for i, alive in enumerate(b_free):
                if not alive:
                    b_quanta[i] = None
            rec_b(0, A, B, acc)
            for i, q in enumerate(saved):
                b_quanta[i] = q
            return
        mode = a_quanta[idx]
        for target in e_modes:
            v = value_entry(mode, "c", target, 0)
            if v != 0:
                rec_a(idx + 1, b_free, A + [target], B, acc * v)
        for target in c_modes:
            v = value_entry(mode, "a", target, 0)
            if v != 0:
                rec_a(idx + 1, b_free, A, B + [target], acc * v)
        for j, alive in enumerate(b_free):
            if alive:
                k = _eval_pair_kernel(D, mode, b_quanta[j], u)
                if k != 0:
                    rec_a(idx + 1, b_free[:j] + [False] + b_free[j + 1:],
                          A, B, acc * k)

    rec_a(0, [True] * len(b_quanta), [], [], mp.mpc(1))
    return total * norm


def reexpansion_me(e: FieldLabel, a: FieldLabel, x, b: FieldLabel, y,
                   c: FieldLabel, dim_cutoff, l_max: int | None = None,
                   particle_cap: int = 10) -> mp.mpc:
    """<e| Y0(Y0(a, x-y) b, y) |c> with the intermediate sum truncated at
    dimension dim_cutoff (the consistency-condition right-hand side)."""
    D = a.D
    x = tuple(mp.mpf(v) for v in x)
    y = tuple(mp.mpf(v) for v in y)
    xy = tuple(p - q for p, q in zip(x, y))
    r_y, yhat = _unit(y)
    r_xy, xyhat = _unit(xy)
    if not (0 < r_xy < r_y):
        raise ValueError("re-expansion needs 0 < |x-y| < |y|")
    if l_max is None:
        l_max = int(dim_cutoff) + 2
    cutoff = Fraction(dim_cutoff)
    out = mp.mpc(0)
    for d in out_labels_lazy(a, b, l_max):
        if d.dimension() > cutoff or d.total() > particle_cap:
            continue
        c1 = label_matrix_element(a, d, b).evaluate(r_xy, xyhat)
        if is_small(c1, margin=5):
            continue
        out += c1 * label_matrix_element(d, e, c).evaluate(r_y, yhat)
    return out


def rotation_covariance_residual(a: FieldLabel, c: FieldLabel, b: FieldLabel,
                                 g, x, D: int, l_max: int) -> mp.mpf:
    """|<R c|Y0(R a, g x)|R b> - <c|Y0(a,x)|b>| at one sampled rotation."""
    x = tuple(mp.mpf(v) for v in x)
    gx = tuple(mp.fsum(mp.mpf(g[i][j]) * x[j] for j in range(D)) for i in range(D))

    def rotate_label_vector(lab: FieldLabel) -> FockVector:
        vec = FockVector.basis(FieldLabel.vacuum(D))
        for (l, m), n in lab.occ:
            Dm = harmonics.rotation_matrix(D, l, g)
            for _ in range(n):
                new = FockVector.zero(D)
                for mp_, w in enumerate(Dm[m - 1], start=1):
                    if not is_small(w, margin=12):
                        new = new + fock.create(vec, l, mp_).scale(w)
                vec = new
        norm = mp.mpf(1)
        for _, n in lab.occ:
            norm /= mp.sqrt(mp.factorial(n))
        return vec.scale(norm)

    ra = rotate_label_vector(a)
    rb = rotate_label_vector(b)
    rc = rotate_label_vector(c)
    r1, xh1 = _unit(x)
    r2, xh2 = _unit(gx)
    base = y0(a, D, l_max).matrix_element(c, b).evaluate(r1, xh1)
    Y = y0_vector(ra, D, l_max)
    rot = mp.mpc(0)
    for lab_c, cc in rc.terms.items():
        for lab_b, cb in rb.terms.items():
            rot += mp.conj(cc) * cb * Y.matrix_element(lab_c, lab_b).evaluate(r2, xh2)
    return abs(rot - base)
