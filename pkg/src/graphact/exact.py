"""Exact scalars, graded bases, formal tensor words, and Koszul sign bookkeeping.

Degree conventions used throughout the package. Every letter in a tensor word
is a basis symbol tagged (dual?, shifted?), and its *effective degree* is

    primal, unshifted:  deg(b)
    primal, shifted:    deg(b) - 1
    dual,   unshifted: -deg(b)
    dual,   shifted:   -deg(b) - 1

The shift tag always means "tensored with one copy of the degree -1 shift
generator", for primal and dual letters alike. This is the only reading under
which the cochain differentials are homogeneous of degree -1 while the
structure entries of arity l keep a uniform degree independent of l.
All Koszul signs reduce to (-1)^(p*q) over effective degrees, so a single
integer grading serves both sign computations and homogeneity checks.
Contraction pairs an *unshifted* dual letter with a primal letter and never
introduces a sign by itself; signs live entirely in reorder/unshift.

Scalars are exact rationals (stdlib Fraction: lowest terms, positive
denominator). Everything here is an immutable value; operations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

Scalar = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def sc(p, q=1) -> Scalar:
    """Shorthand rational constructor."""
    return Fraction(p, q)


class GradedBasis:
    """Ordered finite basis with integer degrees and unique names.

    The dual basis is implicit: the dual of b is written b* and carries
    degree -deg(b) before shifting.
    """

    __slots__ = ("elements", "_degree", "_index")

    def __init__(self, elements: Iterable[tuple[str, int]]):
        elements = tuple((str(n), int(d)) for n, d in elements)
        names = [n for n, _ in elements]
        if len(set(names)) != len(names):
            raise ValueError("basis names must be unique")
        for n in names:
            if not n or n.endswith("*"):
                raise ValueError("bad basis name %r" % (n,))
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "_degree", {n: d for n, d in elements})
        object.__setattr__(self, "_index", {n: i for i, (n, _) in enumerate(elements)})

    def __setattr__(self, *a):
        raise AttributeError("GradedBasis is immutable")

    def degree(self, name: str) -> int:
        return self._degree[name]

    def index(self, name: str) -> int:
        return self._index[name]

    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.elements)

    def __contains__(self, name: str) -> bool:
        return name in self._degree

    def __len__(self) -> int:
        return len(self.elements)

    def __eq__(self, other) -> bool:
        return isinstance(other, GradedBasis) and self.elements == other.elements

    def __hash__(self) -> int:
        return hash(self.elements)

    def __repr__(self) -> str:
        return "GradedBasis(%r)" % (list(self.elements),)


@dataclass(frozen=True)
class Letter:
    """One tensor factor: a basis symbol tagged dual/primal and shifted/unshifted."""

    name: str
    dual: bool = False
    shifted: bool = False

    def effective_degree(self, degrees: Mapping[str, int]) -> int:
        d = degrees[self.name]
        if self.dual:
            d = -d
        if self.shifted:
            d -= 1
        return d

    def __repr__(self) -> str:
        s = self.name + ("*" if self.dual else "")
        return "s(%s)" % s if self.shifted else s


def primal(name: str) -> Letter:
    return Letter(name, dual=False, shifted=False)


def dual(name: str, shifted: bool = True) -> Letter:
    return Letter(name, dual=True, shifted=shifted)


Word = tuple[Letter, ...]


def word_degree(word: Word, degrees: Mapping[str, int]) -> int:
    return sum(l.effective_degree(degrees) for l in word)


def word_parity(word: Word, degrees: Mapping[str, int]) -> int:
    return word_degree(word, degrees) & 1


class FormalTensor:
    """Exact-rational formal combination of tensor words.

    Stored as word -> coefficient with no zero coefficients. Immutable by
    convention: every operation returns a fresh tensor.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Word, Scalar] | Iterable[tuple[Word, Scalar]] = ()):
        acc: dict[Word, Scalar] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for word, coeff in items:
            word = tuple(word)
            c = acc.get(word, ZERO) + coeff
            if c:
                acc[word] = c
            elif word in acc:
                del acc[word]
        object.__setattr__(self, "terms", acc)

    def __setattr__(self, *a):
        raise AttributeError("FormalTensor is immutable")

    @staticmethod
    def zero() -> "FormalTensor":
        return FormalTensor()

    @staticmethod
    def single(word: Sequence[Letter], coeff: Scalar = ONE) -> "FormalTensor":
        return FormalTensor([(tuple(word), Fraction(coeff))])

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __add__(self, other: "FormalTensor") -> "FormalTensor":
        acc = dict(self.terms)
        for w, c in other.terms.items():
            s = acc.get(w, ZERO) + c
            if s:
                acc[w] = s
            elif w in acc:
                del acc[w]
        out = FormalTensor.__new__(FormalTensor)
        object.__setattr__(out, "terms", acc)
        return out

    def __sub__(self, other: "FormalTensor") -> "FormalTensor":
        return self + other.scale(-ONE)

    def scale(self, coeff) -> "FormalTensor":
        coeff = Fraction(coeff)
        if not coeff:
            return FormalTensor()
        out = FormalTensor.__new__(FormalTensor)
        object.__setattr__(out, "terms", {w: c * coeff for w, c in self.terms.items()})
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, FormalTensor) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def map_words(self, fn) -> "FormalTensor":
        """Apply fn(word, coeff) -> iterable of (word, coeff) and re-collect."""
        out: list[tuple[Word, Scalar]] = []
        for w, c in self.terms.items():
            out.extend(fn(w, c))
        return FormalTensor(out)

    def degrees_present(self, degrees: Mapping[str, int]) -> set[int]:
        return {word_degree(w, degrees) for w in self.terms}

    def is_homogeneous(self, degrees: Mapping[str, int]) -> bool:
        return len(self.degrees_present(degrees)) <= 1

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        bits = []
        for w, c in sorted(self.terms.items(), key=lambda t: repr(t[0])):
            bits.append("%s*(%s)" % (c, ", ".join(repr(l) for l in w)))
        return " + ".join(bits)


def koszul_sign(perm: Sequence[int], degrees: Sequence[int]) -> int:
    """Sign of rearranging graded elements x_0..x_{n-1} into x_{perm[0]}, x_{perm[1]}, ...

    perm is in gather form: position i of the result holds the original
    element perm[i]. Each inversion (i<j with perm[i]>perm[j]) contributes
    (-1)^(deg_{perm[i]} * deg_{perm[j]}). Only parities matter.
    """
    n = len(perm)
    if len(degrees) != n:
        raise ValueError("permutation/degree length mismatch")
    if sorted(perm) != list(range(n)):
        raise ValueError("not a permutation of 0..n-1")
    sign = 1
    for i in range(n):
        for j in range(i + 1, n):
            if perm[i] > perm[j] and (degrees[perm[i]] & 1) and (degrees[perm[j]] & 1):
                sign = -sign
    return sign


def transport_sign(ref_parities: Sequence[int], target_index_order: Sequence[int]) -> int:
    """Koszul sign of moving items from reference order into the given index order.

    ref_parities[i] is the parity of reference item i; target_index_order is a
    permutation of range(len(ref_parities)) in gather form.
    """
    sign = 1
    seq = list(target_index_order)
    n = len(seq)
    for i in range(n):
        for j in range(i + 1, n):
            if seq[i] > seq[j] and (ref_parities[seq[i]] & 1) and (ref_parities[seq[j]] & 1):
                sign = -sign
    return sign


def reorder(t: FormalTensor, perm: Sequence[int], degrees: Mapping[str, int]) -> FormalTensor:
    """Permute the letters of every word (gather form), with Koszul signs."""
    perm = tuple(perm)

    def go(word: Word, coeff: Scalar):
        if len(word) != len(perm):
            raise ValueError("permutation length %d does not match word length %d" % (len(perm), len(word)))
        degs = [l.effective_degree(degrees) for l in word]
        s = koszul_sign(perm, degs)
        yield tuple(word[p] for p in perm), coeff * s

    return t.map_words(go)


def unshift(t: FormalTensor, pos: int, degrees: Mapping[str, int]) -> FormalTensor:
    """Remove the shift from the letter at pos (0-indexed).

    The degree-1 shift operator is carried in from the left, so the
    coefficient picks up (-1)^(sum of effective degrees strictly left of pos).
    """

    def go(word: Word, coeff: Scalar):
        if not (0 <= pos < len(word)):
            raise ValueError("position out of range")
        l = word[pos]
        if not l.shifted:
            raise ValueError("letter at position %d is already unshifted" % pos)
        crossing = sum(w.effective_degree(degrees) for w in word[:pos])
        s = -1 if crossing & 1 else 1
        new = word[:pos] + (Letter(l.name, l.dual, False),) + word[pos + 1:]
        yield new, coeff * s

    return t.map_words(go)


def contract(t: FormalTensor, dual_pos: int, primal_pos: int) -> FormalTensor:
    """Pair the unshifted dual letter at dual_pos against the primal letter at primal_pos.

    <b*, b> = 1 and <b*, c> = 0 for c != b; both letters are removed; no sign
    is introduced here (any sign belongs to the reorder/unshift that made the
    pair adjacent).
    """

    def go(word: Word, coeff: Scalar):
        d, p = word[dual_pos], word[primal_pos]
        if not d.dual or d.shifted:
            raise ValueError("contract needs an unshifted dual letter at dual_pos")
        if p.dual:
            raise ValueError("contract needs a primal letter at primal_pos")
        if d.name != p.name:
            return
        keep = tuple(l for i, l in enumerate(word) if i not in (dual_pos, primal_pos))
        yield keep, coeff

    return t.map_words(go)


def tensor_product(a: FormalTensor, b: FormalTensor) -> FormalTensor:
    out = []
    for wa, ca in a.terms.items():
        for wb, cb in b.terms.items():
            out.append((wa + wb, ca * cb))
    return FormalTensor(out)


# ---------------------------------------------------------------------------
# Exact sparse linear algebra.


class SparseMatrix:
    """Rectangular exact matrix stored as (row, col) -> Scalar."""

    __slots__ = ("nrows", "ncols", "entries")

    def __init__(self, nrows: int, ncols: int, entries: Mapping[tuple[int, int], Scalar] | None = None):
        self.nrows = nrows
        self.ncols = ncols
        self.entries = {}
        if entries:
            for (i, j), v in entries.items():
                if not (0 <= i < nrows and 0 <= j < ncols):
                    raise ValueError("entry out of bounds")
                v = Fraction(v)
                if v:
                    self.entries[(i, j)] = v

    def row(self, i: int) -> dict[int, Scalar]:
        return {j: v for (r, j), v in self.entries.items() if r == i}


def rank_and_kernel(m: SparseMatrix) -> tuple[int, list[list[Scalar]]]:
    """Exact rank and a kernel basis, by fraction-free (Bareiss) elimination.

    Rows are first scaled to integers (row scaling changes neither rank nor
    kernel); the Bareiss pivoting keeps intermediate entries integral. The
    kernel basis comes from back-substitution over the echelon form and spans
    the exact rational null space; rank + len(kernel) == ncols always.
    """
    nrows, ncols = m.nrows, m.ncols
    rows: list[dict[int, int]] = []
    for i in range(nrows):
        r = m.row(i)
        if not r:
            continue
        denom_lcm = 1
        for v in r.values():
            denom_lcm = denom_lcm * v.denominator // _gcd(denom_lcm, v.denominator)
        rows.append({j: int(v * denom_lcm) for j, v in r.items()})

    pivots: list[tuple[int, dict[int, int]]] = []  # (pivot col, row)
    prev_pivot = 1
    work = rows
    while work:
        # pick the remaining row whose leading column is smallest
        work = [r for r in work if r]
        if not work:
            break
        lead = min(min(r) for r in work)
        cand = [r for r in work if min(r) == lead]
        piv = min(cand, key=lambda r: abs(r[lead]))
        work.remove(piv)
        new_work = []
        p = piv[lead]
        for r in work:
            # Bareiss step: r <- (p*r - r[lead]*piv) / prev_pivot.  Every
            # remaining row is updated, including rows with r[lead] == 0;
            # skipping those would leave them a generation behind and the
            # division below would stop being exact.
            rl = r.get(lead, 0)
            out: dict[int, int] = {}
            for j in set(r) | set(piv):
                if j == lead:
                    continue
                v = p * r.get(j, 0) - rl * piv.get(j, 0)
                assert v % prev_pivot == 0, "fraction-free step not integral"
                v //= prev_pivot
                if v:
                    out[j] = v
            new_work.append(out)
        prev_pivot = p
        pivots.append((lead, piv))
        work = new_work

    rank = len(pivots)
    pivot_cols = [c for c, _ in pivots]
    free_cols = [j for j in range(ncols) if j not in pivot_cols]
    kernel: list[list[Scalar]] = []
    for fc in free_cols:
        vec = [ZERO] * ncols
        vec[fc] = ONE
        # back-substitute pivot rows from the last
        for c, row in reversed(pivots):
            s = sum((Fraction(v) * vec[j] for j, v in row.items() if j != c), ZERO)
            vec[c] = -s / row[c]
        kernel.append(vec)
    return rank, kernel


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a if a else 1
