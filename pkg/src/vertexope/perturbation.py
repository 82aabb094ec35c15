"""The perturbative recursion in D = 2.

Order i+1 of the basic-field vertex operator is G applied to the composite
operators of order i, which in turn are operator products of lower orders
with Wick contractions (contractions between two order-0 factors are
excluded: those live at a single vertex and are normal-ordered away by the
construction of the composite).

Terms are kept mode-symbolic: a term carries ladder slots whose degree l is
a symbol, exponents of w = r e^{i a} and wbar as exact affine forms in the
mode symbols and the contour variables, factored affine denominators from
the inverse Laplacian, and the ordered list of contour variables (each
integrated with measure d delta/delta against r^delta, innermost last).
Matrix elements pin the external slots to concrete modes; contraction sums
are then evaluated exactly: residue collapse with the summed symbol carried
as an outer parameter yields rational functions of it, summed in closed
form (Hurwitz zeta / digamma), with resonant values treated separately by
exact numeric collapse.
"""

from __future__ import annotations

import itertools
import threading
from fractions import Fraction

import mpmath as mp

from . import fock, harmonics, sums
from .fock import FieldLabel
from .loglaurent import LogLaurentElement
from .precision import is_small

_lock = threading.Lock()
_family_cache: dict = {}

HALF = Fraction(1, 2)


class Interaction:
    """Polynomial interaction sum_p c_p phi^p / p! with formal coupling."""

    def __init__(self, D: int, coeffs: dict):
        self.D = D
        self.coeffs = {int(p): mp.mpf(c) if not isinstance(c, mp.mpc) else c
                       for p, c in coeffs.items() if c != 0}
        for p in self.coeffs:
            if p < 1:
                raise ValueError("interaction powers must be >= 1")

    def degree(self) -> int:
        return max(self.coeffs, default=0)

    def renormalizable(self) -> bool:
        return Fraction(self.degree() * (self.D - 2), 2) <= self.D

    def signature(self):
        return tuple(sorted((p, mp.nstr(mp.mpc(c), 30)) for p, c in self.coeffs.items()))


def check_renormalizable(interaction: Interaction) -> bool:
    return interaction.renormalizable()


def sd_bound(a: FieldLabel, b: FieldLabel, c: FieldLabel, i: int,
             interaction: Interaction) -> Fraction:
    """dim(a) + dim(b) - dim(c) + i [D - (D-2)/2 deg P].

    The scaling degree (most singular power of r) of <c|Y_i(a,x)|b> is
    bounded below by minus this number.
    """
    D = interaction.D
    inc = Fraction(D) - Fraction((D - 2) * interaction.degree(), 2)
    return a.dimension() + b.dimension() - c.dimension() + i * inc


# ---------------------------------------------------------------------------
# affine forms over symbols


class Form:
    """const + sum coeff * var with exact Fraction data; immutable."""

    __slots__ = ("const", "items")

    def __init__(self, const=0, items=()):
        self.const = Fraction(const)
        if isinstance(items, dict):
            items = items.items()
        merged: dict = {}
        for v, c in items:
            c = Fraction(c)
            if c:
                merged[v] = merged.get(v, Fraction(0)) + c
        self.items = tuple(sorted((v, c) for v, c in merged.items() if c))

    def __add__(self, other):
        if isinstance(other, Form):
            return Form(self.const + other.const,
                        list(self.items) + list(other.items))
        return Form(self.const + Fraction(other), self.items)

    def __sub__(self, other):
        return self + other.scale(-1) if isinstance(other, Form) else self + (-Fraction(other))

    def scale(self, s):
        s = Fraction(s)
        return Form(self.const * s, [(v, c * s) for v, c in self.items])

    def subs(self, var, value) -> "Form":
        """Substitute var -> Fraction value or -> another symbol."""
        items = []
        extra = Fraction(0)
        for v, c in self.items:
            if v == var:
                if isinstance(value, str):
                    items.append((value, c))
                else:
                    extra += c * Fraction(value)
            else:
                items.append((v, c))
        return Form(self.const + extra, items)

    def coeff(self, var) -> Fraction:
        for v, c in self.items:
            if v == var:
                return c
        return Fraction(0)

    def without(self, var) -> "Form":
        return Form(self.const, [(v, c) for v, c in self.items if v != var])

    def vars(self):
        return [v for v, _ in self.items]

    def is_const(self):
        return not self.items

    def __eq__(self, other):
        return self.const == other.const and self.items == other.items

    def __hash__(self):
        return hash((self.const, self.items))

    def __repr__(self):
        bits = [str(self.const)] if self.const or not self.items else []
        bits += [f"{c}*{v}" for v, c in self.items]
        return "(" + "+".join(bits) + ")"


class Slot:
    __slots__ = ("kind", "l", "m")

    def __init__(self, kind: str, l, m: int):
        self.kind = kind  # 'c' creation, 'a' annihilation
        self.l = l        # int (concrete degree) or str (symbol)
        self.m = m        # chirality: 1 = e^{+il a}, 2 = e^{-il a}

    def __repr__(self):
        return f"{self.kind}[{self.l},{self.m}]"


class FamilyTerm:
    """One mode-symbolic summand of a D=2 vertex-operator expansion."""

    __slots__ = ("pref", "slots", "p", "q", "sqrts", "num", "den",
                 "deltas", "sum_vars")

    def __init__(self, pref, slots, p, q, sqrts=(), num=(), den=(),
                 deltas=(), sum_vars=()):
        self.pref = mp.mpc(pref)
        self.slots = tuple(slots)
        self.p = p
        self.q = q
        self.sqrts = tuple(sqrts)
        self.num = tuple(num)
        self.den = tuple(den)
        self.deltas = tuple(deltas)
        self.sum_vars = tuple(sum_vars)

    def subs(self, var, value) -> "FamilyTerm":
        return FamilyTerm(
            self.pref,
            [Slot(s.kind, value if s.l == var and isinstance(value, str)
                  else (s.l if s.l != var else int(value)), s.m)
             for s in self.slots],
            self.p.subs(var, value), self.q.subs(var, value),
            [f.subs(var, value) for f in self.sqrts],
            [(f.subs(var, value), pw) for f, pw in self.num],
            [(f.subs(var, value), pw) for f, pw in self.den],
            self.deltas,
            tuple(value if v == var and isinstance(value, str) else v
                  for v in self.sum_vars if not (v == var and not isinstance(value, str))),
        )


def y0_terms(ctr: itertools.count) -> list[FamilyTerm]:
    """The six structural pieces of Y0(phi, x) in D = 2.

    Zero modes: a creation slot with coefficient 1 and an annihilation slot
    carrying ln r lifted to a fresh contour variable.  l >= 1 modes: one
    symbol per piece, (2l)^{-1/2} normalization, annihilation sign -1.
    """
    out = [FamilyTerm(1, [Slot("c", 0, 1)], Form(), Form())]
    dz = f"z{next(ctr)}"
    # ln r lifted to a contour variable: measure d z/z with an extra 1/z
    out.append(FamilyTerm(1, [Slot("a", 0, 1)],
                          Form(0, [(dz, HALF)]), Form(0, [(dz, HALF)]),
                          den=((Form(0, [(dz, 1)]), 1),),
                          deltas=(dz,)))
    for m in (1, 2):
        v = f"l{next(ctr)}"
        pq = (Form(0, [(v, 1)]), Form()) if m == 1 else (Form(), Form(0, [(v, 1)]))
        out.append(FamilyTerm(1, [Slot("c", v, m)], pq[0], pq[1],
                              sqrts=[Form(0, [(v, 2)])]))
        v = f"l{next(ctr)}"
        pq = (Form(0, [(v, -1)]), Form()) if m == 1 else (Form(), Form(0, [(v, -1)]))
        out.append(FamilyTerm(-1, [Slot("a", v, m)], pq[0], pq[1],
                              sqrts=[Form(0, [(v, 2)])]))
    return out


def relabel(term: FamilyTerm, ctr: itertools.count) -> FamilyTerm:
    mapping = {}
    for v in set(term.p.vars()) | set(term.q.vars()) | set(term.deltas) | \
            set(term.sum_vars) | {s.l for s in term.slots if isinstance(s.l, str)} | \
            {v for f, _ in term.num for v in f.vars()} | \
            {v for f, _ in term.den for v in f.vars()} | \
            {v for f in term.sqrts for v in f.vars()}:
        mapping[v] = f"{v[0]}{next(ctr)}"
    t = term
    for old, new in mapping.items():
        t = t.subs(old, new)
    return FamilyTerm(t.pref, t.slots, t.p, t.q, t.sqrts, t.num, t.den,
                      tuple(mapping.get(d, d) for d in term.deltas),
                      t.sum_vars)


def apply_green(term: FamilyTerm, ctr: itertools.count) -> FamilyTerm:
    """One inverse-Laplacian step: fresh innermost contour variable and the
    factored denominator (2p+2+s)(2q+2+s)."""
    s = f"g{next(ctr)}"
    f1 = term.p.scale(2) + Form(2, [(s, 1)])
    f2 = term.q.scale(2) + Form(2, [(s, 1)])
    return FamilyTerm(
        term.pref, term.slots,
        term.p + Form(1, [(s, HALF)]), term.q + Form(1, [(s, HALF)]),
        term.sqrts, term.num, list(term.den) + [(f1, 1), (f2, 1)],
        list(term.deltas) + [s], term.sum_vars)


def wick_products(factors, ctr: itertools.count) -> list[FamilyTerm]:
    """Operator product of term lists with Wick contractions.

    factors: list of (terms, order).  Contractions pair an annihilation slot
    of a left factor with a creation slot of a right factor in the same mode;
    pairs of order-0 factors are skipped (same-vertex normal ordering).
    """
    out: list[FamilyTerm] = []
    orders = [o for _, o in factors]

    for combo in itertools.product(*[t for t, _ in factors]):
        combo = [relabel(t, ctr) for t in combo]
        # slot inventory: (factor index, slot index)
        a_slots = [(fi, si) for fi, t in enumerate(combo)
                   for si, s in enumerate(t.slots) if s.kind == "a"]

        def compatible(fi, si, fj, sj):
            if fj <= fi:
                return False
            if orders[fi] == 0 and orders[fj] == 0:
                return False
            sa = combo[fi].slots[si]
            sc = combo[fj].slots[sj]
            if sa.m != sc.m:
                return False
            if isinstance(sa.l, int) and isinstance(sc.l, int):
                return sa.l == sc.l
            # a symbol ranges over l >= 1 only
            if isinstance(sa.l, int) and sa.l == 0:
                return False
            if isinstance(sc.l, int) and sc.l == 0:
                return False
            return True

        def rec(ai, pairs):
            if ai == len(a_slots):
                out.append(_assemble(combo, pairs, ctr))
                return
            rec(ai + 1, pairs)  # leave unpaired
            fi, si = a_slots[ai]
            used = {(fj, sj) for _, _, fj, sj in pairs}
            for fj, t in enumerate(combo):
                for sj, s in enumerate(t.slots):
                    if s.kind == "c" and (fj, sj) not in used and \
                            compatible(fi, si, fj, sj):
                        rec(ai + 1, pairs + [(fi, si, fj, sj)])

        rec(0, [])
    return out


def _assemble(combo, pairs, ctr) -> list:
    """Merge a tuple of terms with the chosen contraction pairs."""
    terms = list(combo)
    # unify contracted symbols / check concrete matches
    removed = set()
    subs_chain = []
    for fi, si, fj, sj in pairs:
        sa = terms[fi].slots[si]
        sc = terms[fj].slots[sj]
        removed.add((fi, si))
        removed.add((fj, sj))
        la, lc = sa.l, sc.l
        if isinstance(la, str) and isinstance(lc, str):
            subs_chain.append((lc, la, True))   # unify, mark summed
        elif isinstance(la, str):
            subs_chain.append((la, Fraction(lc), False))
        elif isinstance(lc, str):
            subs_chain.append((lc, Fraction(la), False))
    pref = mp.mpc(1)
    slots = []
    p = Form()
    q = Form()
    sqrts: list = []
    num: list = []
    den: list = []
    deltas: list = []
    sum_vars: list = []
    for fi, t in enumerate(terms):
        pref *= t.pref
        p = p + t.p
        q = q + t.q
        sqrts += list(t.sqrts)
        num += list(t.num)
        den += list(t.den)
        deltas += list(t.deltas)
        sum_vars += list(t.sum_vars)
        for si, s in enumerate(t.slots):
            if (fi, si) not in removed:
                slots.append(s)
    term = FamilyTerm(pref, slots, p, q, sqrts, num, den, deltas, sum_vars)
    for var, value, summed in subs_chain:
        term = term.subs(var, value if not summed else value)
        if summed:
            term = FamilyTerm(term.pref, term.slots, term.p, term.q,
                              term.sqrts, term.num, term.den, term.deltas,
                              tuple(list(term.sum_vars) + [value]))
    # pair up sqrt factors of summed symbols into plain denominators
    term = _pair_sqrts(term)
    return term


def _pair_sqrts(term: FamilyTerm) -> FamilyTerm:
    counts: dict = {}
    for f in term.sqrts:
        counts[f] = counts.get(f, 0) + 1
    sqrts = []
    den = list(term.den)
    for f, n in counts.items():
        den += [(f, n // 2)] if n // 2 else []
        sqrts += [f] * (n % 2)
    den = [(f, pw) for f, pw in den if pw]
    return FamilyTerm(term.pref, term.slots, term.p, term.q, sqrts, term.num,
                      den, term.deltas, term.sum_vars)


# ---------------------------------------------------------------------------
# the recursion


def phi_family(i: int, interaction: Interaction) -> list[FamilyTerm]:
    """Terms of Y_i(phi, x) for the given D=2 interaction."""
    if interaction.D != 2:
        raise NotImplementedError("the closed recursion is implemented in D=2; "
                                  "use the regulated graph rules for D>2")
    key = ("phi", i, interaction.signature(), mp.mp.dps)
    with _lock:
        if key in _family_cache:
            return _family_cache[key]
    ctr = itertools.count()
    if i == 0:
        out = y0_terms(ctr)
    else:
        out = []
        for power, cp in sorted(interaction.coeffs.items()):
            qpow = power - 1  # P'(phi) brings c_p phi^{p-1}/(p-1)!
            if qpow < 1:
                continue
            weight = cp / mp.factorial(qpow)
            for t in composite_family(i - 1, qpow, interaction):
                out.append(_scaled(apply_green(t, ctr), weight))
        out = merge_terms(out)
    with _lock:
        _family_cache.setdefault(key, out)
        return _family_cache[key]


def composite_family(i: int, power: int, interaction: Interaction
                     ) -> list[FamilyTerm]:
    """Terms of Y_i(phi^power, x): ordered order-partitions, Wick products."""
    key = ("comp", i, power, interaction.signature(), mp.mp.dps)
    with _lock:
        if key in _family_cache:
            return _family_cache[key]
    ctr = itertools.count(10 ** 6)
    out = []
    for parts in _ordered_partitions(i, power):
        factors = [(phi_family(j, interaction), j) for j in parts]
        out.extend(wick_products(factors, ctr))
    out = merge_terms(out)
    with _lock:
        _family_cache.setdefault(key, out)
        return _family_cache[key]


def _ordered_partitions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _ordered_partitions(total - first, parts - 1):
            yield (first,) + rest


def _scaled(term: FamilyTerm, s) -> FamilyTerm:
    return FamilyTerm(term.pref * s, term.slots, term.p, term.q, term.sqrts,
                      term.num, term.den, term.deltas, term.sum_vars)


# ---------------------------------------------------------------------------
# pinning external slots and evaluating matrix elements


class RatL:
    """Rational function of one integer symbol: numerator coefficient list
    over factored denominators [(a, b, power)] meaning (a l + b)^power."""

    __slots__ = ("num", "den")

    def __init__(self, num=(1,), den=()):
        self.num = tuple(mp.mpc(c) for c in num)
        self.den = tuple(den)

    def __mul__(self, other):
        if isinstance(other, RatL):
            n1, n2 = self.num, other.num
            num = [mp.mpc(0)] * (len(n1) + len(n2) - 1)
            for i, a in enumerate(n1):
                for j, b in enumerate(n2):
                    num[i + j] += a * b
            return RatL(num, self.den + other.den)
        return RatL([c * other for c in self.num], self.den)

    def scale_poly(self, coeffs):
        return self * RatL(coeffs)

    def value(self, l) -> mp.mpc:
        return sums.rational_value(list(self.num), list(self.den), l)

    def tail(self, l0: int) -> mp.mpc:
        return sums.sum_rational_tail(list(self.num), list(self.den), l0)

    def tail_geometric(self, l0: int, h) -> mp.mpc:
        return sums.sum_rational_tail_geometric(list(self.num), list(self.den), l0, h)

    def constant(self) -> mp.mpc:
        v = self.num[0] if len(self.num) == 1 else None
        if v is None or any(c != 0 for c in self.num[1:]):
            raise ValueError("not a constant")
        for a, b, pw in self.den:
            if Fraction(a) != 0:
                raise ValueError("not a constant")
            v /= sums._frval(Fraction(b)) ** pw
        return v


def _form_ratl(f: Form, sym) -> tuple:
    """Split an l-affine, delta-free form into numerator coefficients."""
    cl = f.coeff(sym) if sym else Fraction(0)
    rest = [v for v in f.vars() if v != sym]
    if rest:
        raise ValueError(f"unexpected symbols {rest} in {f}")
    c0 = sums._frval(f.const)
    return (c0,) if not cl else (c0, sums._frval(cl))


def _collapse_pinned(term: FamilyTerm, sym):
    """Residue collapse of a fully pinned term, innermost delta first.

    sym: remaining summation symbol (or None).  Branches are single delta
    monomials (exps, coeff RatL, den forms, {log power: RatL}); the result
    is a list of (j, RatL) with the term's coefficient function equal to
    r^k sum RatL(l) ln^j r, k the constant radial exponent.
    """
    dvars = list(term.deltas)
    nd = len(dvars)
    # expand the factored numerator into delta monomials with RatL coeffs
    monos = {(0,) * nd: RatL((term.pref,))}
    for f, pw in term.num:
        base = _form_ratl(Form(f.const, [(v, c) for v, c in f.items
                                         if v not in dvars]), sym)
        for _ in range(pw):
            new: dict = {}
            for exps, coeff in monos.items():
                if any(c != 0 for c in base):
                    _mono_acc(new, exps, coeff.scale_poly(base))
                for i, dv in enumerate(dvars):
                    a = f.coeff(dv)
                    if a:
                        key = exps[:i] + (exps[i] + 1,) + exps[i + 1:]
                        _mono_acc(new, key, coeff * sums._frval(a))
            monos = new
    branches = [(exps, coeff, tuple(term.den), {0: RatL((1,))})
                for exps, coeff in monos.items()]
    for pos in range(nd - 1, -1, -1):
        new_branches = []
        for br in branches:
            new_branches.extend(_residue_step_ratl(br, pos, dvars[pos]))
        branches = new_branches
    out = []
    for exps, coeff, den, logmap in branches:
        extra = RatL((1,), tuple((f.coeff(sym) if sym else Fraction(0),
                                  f.const, pw) for f, pw in den))
        for j, lc in logmap.items():
            out.append((j, coeff * lc * extra))
    return out


def _mono_acc(d, key, val: RatL):
    if key not in d:
        d[key] = val
        return
    old = d[key]
    if old.den != val.den:
        raise RuntimeError("numerator accumulation with mixed denominators")
    n = [mp.mpc(0)] * max(len(old.num), len(val.num))
    for i, c in enumerate(old.num):
        n[i] += c
    for i, c in enumerate(val.num):
        n[i] += c
    d[key] = RatL(n, old.den)


def _residue_step_ratl(branch, pos: int, svar: str):
    """Residue at 0 in the contour variable svar for one branch."""
    exps, coeff, den, logmap = branch
    s_pow = exps[pos]
    rest_exps = exps[:pos] + exps[pos + 1:]
    pole = 1
    scalar = mp.mpc(1)
    series_factors = []
    rest_den = []
    for f, pw in den:
        a = f.coeff(svar)
        if a == 0:
            rest_den.append((f, pw))
            continue
        red = f.without(svar)
        if red.const == 0 and not red.items:
            pole += pw
            scalar /= sums._frval(a) ** pw
        else:
            series_factors.append((red, sums._frval(a), pw))
    order = pole - 1
    out = []

    def rec(fi, remaining, acc, den_acc):
        if fi == len(series_factors):
            n_exp = remaining - s_pow
            if n_exp < 0:
                return
            inv = scalar / mp.factorial(n_exp)
            newlog = {j + n_exp: lc * (acc * inv)
                      for j, lc in logmap.items()}
            out.append((rest_exps, coeff * RatL((1,)),
                        tuple(rest_den + den_acc),
                        newlog))
            return
        red, av, pw = series_factors[fi]
        binom = mp.mpf(1)
        for n in range(remaining - s_pow + 1):
            rec(fi + 1, remaining - n, acc * binom * (-av) ** n,
                den_acc + [(red, pw + n)])
            binom = binom * (pw + n) / (n + 1)

    rec(0, order, mp.mpc(1), [])
    return out


# ---------------------------------------------------------------------------
# canonical merging


def canonicalize(term: FamilyTerm):
    """Rename symbols in order of first structural appearance; returns
    (hashable key without the prefactor, renamed term)."""
    order: list = []

    def note(v):
        if isinstance(v, str) and v not in order:
            order.append(v)

    for s in term.slots:
        note(s.l)
    for d in term.deltas:
        note(d)
    for f in [term.p, term.q] + [f for f, _ in term.num] + \
            [f for f, _ in term.den] + list(term.sqrts):
        for v, _ in f.items:
            note(v)
    for v in term.sum_vars:
        note(v)
    # two-phase rename: simultaneous substitution via unique temporaries
    tmp = {v: f"T&{i}" for i, v in enumerate(order)}
    mapping = {v: f"v{i}" for i, v in enumerate(order)}
    t = term
    for old, new in tmp.items():
        t = t.subs(old, new)
    for old, new in tmp.items():
        t = t.subs(new, mapping[old])
    t = FamilyTerm(t.pref, t.slots, t.p, t.q, t.sqrts, t.num, t.den,
                   tuple(mapping[d] for d in term.deltas),
                   tuple(sorted(t.sum_vars)))
    key = (
        tuple((s.kind, s.l, s.m) for s in t.slots),
        (t.p.const, t.p.items), (t.q.const, t.q.items),
        tuple(sorted((f.const, f.items, pw) for f, pw in t.num)),
        tuple(sorted((f.const, f.items, pw) for f, pw in t.den)),
        tuple(sorted((f.const, f.items) for f in t.sqrts)),
        t.deltas, t.sum_vars,
    )
    return key, t


def merge_terms(terms) -> list[FamilyTerm]:
    """Combine structurally identical terms (prefactors add)."""
    buckets: dict = {}
    for term in terms:
        key, t = canonicalize(term)
        if key in buckets:
            old = buckets[key]
            buckets[key] = FamilyTerm(old.pref + t.pref, old.slots, old.p,
                                      old.q, old.sqrts, old.num, old.den,
                                      old.deltas, old.sum_vars)
        else:
            buckets[key] = t
    return [t for t in buckets.values() if not is_small(t.pref, margin=8)]


# ---------------------------------------------------------------------------
# matrix elements


def family_matrix_element(terms, c: FieldLabel, b: FieldLabel,
                          head: int = 24) -> LogLaurentElement:
    """<c| (terms) |b> with exact contraction sums.

    Pinned assignments are canonically merged before evaluation, so each
    distinct analytic structure is collapsed and summed once.
    """
    pinned_buckets: dict = {}
    for term in terms:
        for pinned, weight in _pin_assignments(term, c, b):
            key, t = canonicalize(_scaled(pinned, weight))
            if key in pinned_buckets:
                old = pinned_buckets[key]
                pinned_buckets[key] = FamilyTerm(
                    old.pref + t.pref, old.slots, old.p, old.q, old.sqrts,
                    old.num, old.den, old.deltas, old.sum_vars)
            else:
                pinned_buckets[key] = t
    total = LogLaurentElement(2)
    for t in pinned_buckets.values():
        if is_small(t.pref, margin=8):
            continue
        total = total + _eval_pinned(t, head)
    return total.normalized(margin=8)


def _pin_assignments(term: FamilyTerm, c: FieldLabel, b: FieldLabel):
    """Enumerate slot -> concrete-mode assignments with their Wick weights."""
    c_modes = c.modes()
    b_modes = b.modes()
    n = len(term.slots)

    def rec(idx, t, A, B):
        if idx == n:
            w = fock.monomial_matrix_element(
                c, tuple(sorted(A)), tuple(sorted(B)), b)
            if w != 0:
                yield _finalize_pins(t), w
            return
        slot = term.slots[idx]
        targets = c_modes if slot.kind == "c" else b_modes
        for (l, m) in targets:
            if isinstance(slot.l, str):
                if slot.m != m or l < 1:
                    continue
                t2 = t.subs(slot.l, Fraction(l))
            else:
                if (slot.l, slot.m) != (l, m):
                    continue
                t2 = t
            if slot.kind == "c":
                yield from rec(idx + 1, t2, A + [(l, m)], B)
            else:
                yield from rec(idx + 1, t2, A, B + [(l, m)])

    yield from rec(0, term, [], [])


def _finalize_pins(term: FamilyTerm) -> FamilyTerm:
    """Fold constant sqrt / numerator / denominator forms into the prefactor."""
    pref = term.pref
    sqrts = []
    for f in term.sqrts:
        if f.is_const():
            pref /= mp.sqrt(sums._frval(f.const))
        else:
            sqrts.append(f)
    if sqrts:
        raise RuntimeError("unpaired symbolic sqrt factor after pinning")
    num = []
    for f, pw in term.num:
        if f.is_const():
            pref *= sums._frval(f.const) ** pw
        else:
            num.append((f, pw))
    den = []
    for f, pw in term.den:
        if f.is_const():
            pref /= sums._frval(f.const) ** pw
        else:
            den.append((f, pw))
    return FamilyTerm(pref, (), term.p, term.q, (), num, den,
                      term.deltas, term.sum_vars)


def _angular_key(chi: int):
    if chi == 0:
        return (0, 1)
    return (abs(chi), 1 if chi > 0 else 2)


def _eval_pinned(term: FamilyTerm, head: int = 24) -> LogLaurentElement:
    """Value of a fully pinned term as a LogLaurentElement."""
    chi_form = term.p - term.q
    if not chi_form.is_const() or chi_form.const.denominator != 1:
        raise RuntimeError(f"angular exponent not integer: {chi_form}")
    chi = int(chi_form.const)
    kf = term.p + term.q
    for v, coeff in kf.items:
        if v not in term.deltas:
            raise RuntimeError(f"radial exponent depends on {v}")
        if coeff != 1:
            raise RuntimeError("contour variable with nonunit radial weight")
    if kf.const.denominator != 1:
        raise RuntimeError("non-integer radial exponent")
    k = int(kf.const)
    lam, mm = _angular_key(chi)
    root2pi = mp.sqrt(2 * mp.pi)

    svars = list(term.sum_vars)
    if len(svars) == 0:
        branches = _collapse_pinned(term, None)
        out = {}
        for j, ratl in branches:
            key = (k, j, lam, mm)
            out[key] = out.get(key, mp.mpc(0)) + root2pi * ratl.constant()
        return LogLaurentElement(2, out)
    if len(svars) == 1:
        vals = _sum_one_var(term, svars[0])
        return LogLaurentElement(
            2, {(k, j, lam, mm): root2pi * v for j, v in vals.items()})
    if len(svars) == 2:
        vals = _sum_two_vars(term, svars[0], svars[1], head)
        return LogLaurentElement(
            2, {(k, j, lam, mm): root2pi * v for j, v in vals.items()})
    raise NotImplementedError("more than two pending mode sums")


def _resonant_set(term: FamilyTerm, sym: str):
    """Integer values >= 1 of sym at which a denominator form degenerates."""
    res = set()
    for f, _ in term.den:
        has_delta = any(v in term.deltas for v, _ in f.items)
        g = Form(f.const, [(v, cc) for v, cc in f.items
                           if v not in term.deltas])
        cl = g.coeff(sym)
        if cl == 0:
            if g.is_const() and g.const == 0 and not has_delta:
                raise ZeroDivisionError("identically zero denominator")
            continue
        g_rest = g.without(sym)
        if not g_rest.is_const():
            raise RuntimeError(f"unexpected extra symbols in {f}")
        root = -g_rest.const / cl
        if root.denominator == 1 and root >= 1:
            res.add(int(root))
    return res


def _sum_one_var(term: FamilyTerm, sym: str) -> dict:
    """sum_{l >= 1} of the collapsed values; exact zeta/psi tails."""
    res = _resonant_set(term, sym)
    l0 = max(res | {0}) + 1
    out: dict = {}
    branches = _collapse_pinned(term, sym)
    for j, ratl in branches:
        out[j] = out.get(j, mp.mpc(0)) + ratl.tail(l0)
        for l in range(1, l0):
            if l not in res:
                out[j] = out.get(j, mp.mpc(0)) + ratl.value(l)
    for lstar in res:
        sub = _finalize_pins(term.subs(sym, Fraction(lstar)))
        sub = FamilyTerm(sub.pref, (), sub.p, sub.q, (), sub.num, sub.den,
                         sub.deltas, tuple(v for v in sub.sum_vars if v != sym))
        for j, ratl in _collapse_pinned(sub, None):
            out[j] = out.get(j, mp.mpc(0)) + ratl.constant()
    return {j: v for j, v in out.items() if v != 0}


_TAIL_POWERS = (2, 3, 4, 5, 6)  # basis (1, ln l)/l^s per power


def _sum_two_vars(term: FamilyTerm, outer: str, inner: str,
                  head: int = 48) -> dict:
    """Inner sum exact per outer value; outer tail by log-aware asymptotics.

    The outer summand is analytic with an asymptotic expansion in
    (1, ln l) / l^s; six far samples fit the s = 2, 3, 4 shells, and the
    fitted tail is summed exactly with Hurwitz zeta values and their
    s-derivatives.  Direct summation covers the head.
    """
    def inner_vals(l1) -> dict:
        sub = _finalize_pins(term.subs(outer, Fraction(l1)))
        sub = FamilyTerm(sub.pref, (), sub.p, sub.q, (), sub.num, sub.den,
                         sub.deltas,
                         tuple(v for v in sub.sum_vars if v != outer))
        return _sum_one_var(sub, inner)

    tail_start = 2 * head + 1
    out: dict = {}
    for l1 in range(1, tail_start):
        for j, v in inner_vals(l1).items():
            out[j] = out.get(j, mp.mpc(0)) + v
    samples = [tail_start + 15 + 16 * i for i in range(2 * len(_TAIL_POWERS))]
    sample_vals = [inner_vals(l1) for l1 in samples]
    jset = set(out)
    for sv in sample_vals:
        jset |= set(sv)
    basis = []
    for s in _TAIL_POWERS:
        basis.append(lambda l, s=s: mp.mpf(l) ** (-s))
        basis.append(lambda l, s=s: mp.log(l) * mp.mpf(l) ** (-s))
    A = mp.matrix([[f(l1) for f in basis] for l1 in samples])
    a0 = mp.mpf(tail_start)
    closed = []
    for s in _TAIL_POWERS:
        closed.append(mp.zeta(s, a0))
        closed.append(-mp.zeta(s, a0, 1))
    for j in sorted(jset):
        rhs = mp.matrix([sv.get(j, mp.mpc(0)) for sv in sample_vals])
        coeffs = mp.lu_solve(A, rhs)
        tail = mp.fsum(coeffs[i] * closed[i] for i in range(len(closed)))
        out[j] = out.get(j, mp.mpc(0)) + tail
    return {j: v for j, v in out.items() if v != 0}
