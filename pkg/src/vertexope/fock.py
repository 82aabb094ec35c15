"""Field labels, the Fock space V, ladder operators, Wick combinatorics.

Composite fields are labeled by finitely supported occupation multi-indices
a = {a_{l,m}} over the mode set (l, m), m indexing the canonical harmonic
basis of degree l.  Basis labels are orthonormal; creation and annihilation
act with the usual sqrt factors.  The embedding of formal polynomials in phi
and its derivatives into V reduces derivative monomials modulo the field
equation (trace parts are set to zero) and lands on creation-operator words
applied to the vacuum.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import lru_cache

import mpmath as mp

from . import harmonics
from .precision import is_small


class FieldLabel:
    """Occupation multi-index a = {a_{l,m}}; immutable and hashable."""

    __slots__ = ("D", "occ", "_hash")

    def __init__(self, D: int, occ=()):
        self.D = D
        if isinstance(occ, dict):
            occ = occ.items()
        cleaned = []
        for (l, m), n in sorted(occ):
            if n < 0:
                raise ValueError("occupation numbers must be non-negative")
            if n == 0:
                continue
            if l < 0 or not (1 <= m <= harmonics.count_harmonics(D, l)):
                raise ValueError(f"invalid mode (l={l}, m={m}) in D={D}")
            cleaned.append(((l, m), n))
        self.occ = tuple(cleaned)
        self._hash = hash((D, self.occ))

    @classmethod
    def vacuum(cls, D: int) -> "FieldLabel":
        return cls(D)

    def get(self, l: int, m: int) -> int:
        for (ll, mm), n in self.occ:
            if (ll, mm) == (l, m):
                return n
        return 0

    def shifted(self, l: int, m: int, dn: int) -> "FieldLabel":
        d = dict(self.occ)
        d[(l, m)] = d.get((l, m), 0) + dn
        return FieldLabel(self.D, d)

    def merged(self, other: "FieldLabel") -> "FieldLabel":
        d = dict(self.occ)
        for key, n in other.occ:
            d[key] = d.get(key, 0) + n
        return FieldLabel(self.D, d)

    def total(self) -> int:
        return sum(n for _, n in self.occ)

    def modes(self):
        return [key for key, _ in self.occ]

    def dimension(self) -> Fraction:
        """Engineering dimension: sum a_{l,m} (l + (D-2)/2)."""
        return sum((Fraction(n) * (Fraction(l) + Fraction(self.D - 2, 2))
                    for (l, _), n in self.occ), Fraction(0))

    def is_vacuum(self) -> bool:
        return not self.occ

    def sort_key(self):
        return (self.total(), self.occ)

    def __eq__(self, other):
        return isinstance(other, FieldLabel) and self.D == other.D and self.occ == other.occ

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def __repr__(self):
        if not self.occ:
            return "1"
        inner = ",".join(f"({l},{m}):{n}" for (l, m), n in self.occ)
        return "occ{%s}" % inner


class FockVector:
    """Finitely supported complex combination of field labels."""

    __slots__ = ("D", "terms")

    def __init__(self, D: int, terms: dict | None = None):
        self.D = D
        self.terms = {}
        if terms:
            for label, c in terms.items():
                if c != 0:
                    self.terms[label] = self.terms.get(label, mp.mpc(0)) + mp.mpc(c)

    @classmethod
    def basis(cls, label: FieldLabel) -> "FockVector":
        return cls(label.D, {label: mp.mpc(1)})

    @classmethod
    def zero(cls, D: int) -> "FockVector":
        return cls(D)

    def __add__(self, other):
        out = dict(self.terms)
        for lab, c in other.terms.items():
            out[lab] = out.get(lab, mp.mpc(0)) + c
        return FockVector(self.D, out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, s) -> "FockVector":
        return FockVector(self.D, {lab: c * s for lab, c in self.terms.items()})

    def normalized(self, margin: int = 10) -> "FockVector":
        return FockVector(self.D, {lab: c for lab, c in self.terms.items()
                                   if not is_small(c, margin)})

    def norm(self) -> mp.mpf:
        return mp.sqrt(sum(abs(c) ** 2 for c in self.terms.values())) if self.terms else mp.mpf(0)

    def is_zero(self, margin: int = 10) -> bool:
        return all(is_small(c, margin) for c in self.terms.values())

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for lab in sorted(self.terms):
            bits.append(f"{mp.nstr(self.terms[lab], 8)}*{lab!r}")
        return " + ".join(bits)


def create(v: FockVector, l: int, m: int) -> FockVector:
    out: dict = {}
    for lab, c in v.terms.items():
        n = lab.get(l, m)
        key = lab.shifted(l, m, +1)
        out[key] = out.get(key, mp.mpc(0)) + c * mp.sqrt(n + 1)
    return FockVector(v.D, out)


def annihilate(v: FockVector, l: int, m: int) -> FockVector:
    out: dict = {}
    for lab, c in v.terms.items():
        n = lab.get(l, m)
        if n == 0:
            continue
        key = lab.shifted(l, m, -1)
        out[key] = out.get(key, mp.mpc(0)) + c * mp.sqrt(n)
    return FockVector(v.D, out)


def inner_product(u: FockVector, v: FockVector) -> mp.mpc:
    """Sesquilinear pairing; basis labels orthonormal."""
    if u.D != v.D:
        raise ValueError("dimension mismatch")
    total = mp.mpc(0)
    for lab, c in u.terms.items():
        if lab in v.terms:
            total += mp.conj(c) * v.terms[lab]
    return total


# ---------------------------------------------------------------------------
# Wick combinatorics on ladder words


def normal_order(word) -> dict:
    """Wick expansion of a ladder word into normal-ordered monomials.

    word: sequence of (kind, l, m) with kind 'c' (creation) or 'a'
    (annihilation).  Returns {(A, B): coefficient} where A and B are sorted
    tuples of created / annihilated modes; creation operators stand leftmost
    in the canonical form.  Contractions pair an annihilator with a creator
    standing to its right in the word, one unit each (bosonic).
    """
    ann_pos = [i for i, (k, _, _) in enumerate(word) if k == "a"]
    cre_pos = [i for i, (k, _, _) in enumerate(word) if k == "c"]
    out: dict = {}

    def rec(ai: int, used: frozenset, coeff: int):
        if ai == len(ann_pos):
            rest_c = tuple(sorted(word[j][1:] for j in cre_pos if j not in used))
            rest_a = tuple(sorted(word[i][1:] for i in ann_pos if i not in used))
            key = (rest_c, rest_a)
            out[key] = out.get(key, 0) + coeff
            return
        i = ann_pos[ai]
        rec(ai + 1, used, coeff)  # leave this annihilator uncontracted
        for j in cre_pos:
            if j > i and j not in used and word[j][1:] == word[i][1:]:
                rec(ai + 1, used | {i, j}, coeff)

    rec(0, frozenset(), 1)
    return out


def normal_order_brute(word) -> dict:
    """Oracle: reduce a ladder word by repeated commutator moves."""
    out: dict = {}
    stack = [(list(word), 1)]
    while stack:
        w, coeff = stack.pop()
        for i in range(len(w) - 1):
            if w[i][0] == "a" and w[i + 1][0] == "c":
                swapped = w[:i] + [w[i + 1], w[i]] + w[i + 2:]
                stack.append((swapped, coeff))
                if w[i][1:] == w[i + 1][1:]:
                    stack.append((w[:i] + w[i + 2:], coeff))
                break
        else:
            A = tuple(sorted(op[1:] for op in w if op[0] == "c"))
            B = tuple(sorted(op[1:] for op in w if op[0] == "a"))
            out[(A, B)] = out.get((A, B), 0) + coeff
    return {k: v for k, v in out.items() if v != 0}


def apply_normal_monomial(A, B, v: FockVector) -> FockVector:
    """Apply :prod a^+_{A} prod a_{B}: to a vector."""
    for l, m in B:
        v = annihilate(v, l, m)
    for l, m in A:
        v = create(v, l, m)
    return v


def monomial_matrix_element(c: FieldLabel, A, B, b: FieldLabel):
    """<c| :prod a^+_A prod a_B: |b>; nonzero iff c = b - B + A componentwise.

    Value prod_modes sqrt(b! c!) / (b - B)! over the touched modes.
    """
    need: dict = {}
    for l, m in B:
        need[(l, m)] = need.get((l, m), 0) + 1
    add: dict = {}
    for l, m in A:
        add[(l, m)] = add.get((l, m), 0) + 1
    val = mp.mpf(1)
    keys = set(need) | set(add) | set(b.modes()) | set(c.modes())
    for key in keys:
        nb = b.get(*key)
        nB = need.get(key, 0)
        nA = add.get(key, 0)
        nc = c.get(*key)
        if nb - nB < 0 or nb - nB + nA != nc:
            return mp.mpf(0)
        val *= mp.sqrt(mp.factorial(nb) * mp.factorial(nc)) / mp.factorial(nb - nB)
    return val


# ---------------------------------------------------------------------------
# embedding of field expressions


@lru_cache(maxsize=None)
def _single_quantum_vector(D: int, alpha: tuple):
    """Creation content of the derivative field d^alpha phi, reduced modulo
    the field equation: {(l, m): coeff} with d^alpha phi = sum coeff chat_l
    O_{e_{l,m}}-style single quanta.  Empty when alpha is pure trace.
    """
    l = sum(alpha)
    top = harmonics.harmonic_projection({alpha: mp.mpf(1)}, D, l)
    if not top:
        return ()
    chat = harmonics.norm_constants(D, l).chat_l
    dec = harmonics.harmonic_decompose(top, D)
    out = []
    for (ll, m), kappa in dec.items():
        mbar = harmonics.conj_index(D, ll, m)
        out.append(((ll, mbar), kappa * chat))
    return tuple(out)


class ParseError(ValueError):
    pass


_NUMBER_RE = re.compile(r"[+\-]?[0-9.][0-9.eE+\-j]*")


def _try_number(tok: str):
    body = tok[1:-1] if tok.startswith("(") and tok.endswith(")") else tok
    if not body or not _NUMBER_RE.fullmatch(body):
        return None
    try:
        return mp.mpmathify(body)
    except (ValueError, TypeError):
        return None


_OCC_RE = re.compile(r"occ\{([^}]*)\}")
_ENTRY_RE = re.compile(r"\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*:\s*(\d+)")


def _parse_factor(tok: str, D: int):
    """One multiplicative factor -> ('occ', label) or ('ops', [creation-ops], power)."""
    tok = tok.strip()
    mo = _OCC_RE.fullmatch(tok)
    if mo:
        entries = {}
        body = mo.group(1).strip()
        if body:
            pos = 0
            for ent in _ENTRY_RE.finditer(body):
                entries[(int(ent.group(1)), int(ent.group(2)))] = int(ent.group(3))
            if not list(_ENTRY_RE.finditer(body)):
                raise ParseError(f"bad occ literal: {tok!r}")
        return ("occ", FieldLabel(D, entries))
    power = 1
    if "^" in tok:
        tok, p = tok.rsplit("^", 1)
        try:
            power = int(p)
        except ValueError as exc:
            raise ParseError(f"bad power in {tok!r}") from exc
        if power < 0:
            raise ParseError("negative powers are not fields")
    mo = re.fullmatch(r"a(\d+)", tok.strip())
    if mo:
        # shorthand: a0 = the l=0 creation mode, a3 = (3,1), etc.
        return ("mode", (int(mo.group(1)), 1), power)
    derivs = []
    rest = tok.strip()
    while rest.startswith("d["):
        close = rest.index("]")
        idx = int(rest[2:close])
        if not (1 <= idx <= D):
            raise ParseError(f"derivative index {idx} out of range for D={D}")
        derivs.append(idx - 1)
        rest = rest[close + 1:]
    if rest == "phi":
        alpha = [0] * D
        for mu in derivs:
            alpha[mu] += 1
        return ("phi", tuple(alpha), power)
    if rest == "1" and not derivs:
        return ("one", None, power)
    raise ParseError(f"cannot parse factor {tok!r}")


def _split_top(expr: str, seps: str):
    parts = []
    depth = 0
    cur = ""
    sign = "+"
    out = []
    for ch in expr:
        if ch in "{([":
            depth += 1
        elif ch in "})]":
            depth -= 1
        if depth == 0 and ch in seps:
            out.append((sign if seps == "+-" else None, cur))
            cur = ""
            sign = ch
        else:
            cur += ch
    out.append((sign if seps == "+-" else None, cur))
    return out


def embed_field(expr: str, D: int) -> FockVector:
    """Formal polynomial in phi and derivatives -> Fock vector.

    Grammar: sum of terms; term = [number *] factor * factor * ...;
    factor = phi | d[mu]...d[nu]phi | phi^k | aN[^k] | occ{(l,m):n,...} | 1.
    Derivative monomials are reduced modulo the field equation (trace parts
    dropped), so a Laplacian combination embeds to the zero vector.
    """
    expr = expr.replace(" ", "")
    if not expr:
        raise ParseError("empty expression")
    total = FockVector.zero(D)
    for sign, term in _split_top(expr, "+-"):
        if not term:
            continue
        coeff = mp.mpc(-1 if sign == "-" else 1)
        vec = FockVector.basis(FieldLabel.vacuum(D))
        for _, factor in _split_top(term, "*"):
            if not factor:
                raise ParseError(f"dangling '*' in {term!r}")
            num = _try_number(factor)
            if num is not None:
                coeff *= num
                continue
            kind, data, *rest = _parse_factor(factor, D)
            if kind == "occ":
                vec_occ = FockVector.basis(data)
                # occ literal must be the only field content of its term
                vec = _fock_product(vec, vec_occ)
                continue
            power = rest[0]
            if kind == "one":
                continue
            if kind == "mode":
                for _ in range(power):
                    vec = create(vec, *data)
                continue
            content = _single_quantum_vector(D, data)
            if not content:
                vec = FockVector.zero(D)
                break
            for _ in range(power):
                new = FockVector.zero(D)
                for (l, m), cc in content:
                    new = new + create(vec, l, m).scale(cc)
                vec = new
        total = total + vec.scale(coeff)
    return total.normalized()


def _fock_product(u: FockVector, v: FockVector) -> FockVector:
    """Product of field monomials: merge occupations with sqrt bookkeeping.

    |a> * |b> corresponds to the normal-ordered product of the underlying
    monomials: sqrt((a+b)! / (a! b!)) |a+b> mode-wise.
    """
    out: dict = {}
    for la, ca in u.terms.items():
        for lb, cb in v.terms.items():
            lab = la.merged(lb)
            fac = mp.mpf(1)
            for key, n in lab.occ:
                na, nb = la.get(*key), lb.get(*key)
                fac *= mp.sqrt(mp.factorial(n) / (mp.factorial(na) * mp.factorial(nb)))
            out[lab] = out.get(lab, mp.mpc(0)) + ca * cb * fac
    return FockVector(u.D, out)


def vector_to_string(v: FockVector) -> str:
    """Round-trippable text form (sum of occ literals with coefficients)."""
    from .precision import num_str

    if not v.terms:
        return "0*occ{}"
    bits = []
    for lab in sorted(v.terms):
        body = ",".join(f"({l},{m}):{n}" for (l, m), n in lab.occ)
        bits.append(f"({num_str(v.terms[lab])})*occ{{{body}}}")
    return "+".join(bits)


def parse_vector(text: str, D: int) -> FockVector:
    if text.strip() == "0*occ{}":
        return FockVector.zero(D)
    return embed_field(text, D)


def enumerate_labels(D: int, max_dim: Fraction, max_quanta: int,
                     l_max: int | None = None) -> list[FieldLabel]:
    """Deterministic list of labels with dimension <= max_dim and at most
    max_quanta quanta (needed to bound the l=0 sector in D=2)."""
    max_dim = Fraction(max_dim)
    if l_max is None:
        l_max = int(max_dim) if D == 2 else int(max_dim / Fraction(1, 1))
    modes = []
    for l in range(l_max + 1):
        dim_step = Fraction(l) + Fraction(D - 2, 2)
        if dim_step > max_dim and not (dim_step == 0):
            break
        for m in range(1, harmonics.count_harmonics(D, l) + 1):
            modes.append(((l, m), dim_step))
    out = []

    def rec(idx, occ, dim, quanta):
        if idx == len(modes):
            out.append(FieldLabel(D, dict(occ)))
            return
        key, step = modes[idx]
        n = 0
        while True:
            if quanta + n > max_quanta or dim + n * step > max_dim:
                break
            occ[key] = n
            rec(idx + 1, occ, dim + n * step, quanta + n)
            n += 1
        occ.pop(key, None)

    rec(0, {}, Fraction(0), 0)
    return sorted(out)
