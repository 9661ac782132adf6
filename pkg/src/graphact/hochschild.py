"""Truncated cyclic and ordinary Hochschild complexes, and the two-sided cobar complex.

Cochains are stored as formal tensors of shifted dual letters: the word
(a1*, ..., an*) with coefficient c is the functional sending (a1, ..., an) to
c, with no interleaving signs (the same reading the test oracles use). All
three differentials share one sign authority: build the linear expression of
the inserted-operation term, then compare it against the reference word

    psi ^ f ^ (arguments in slot order)

with psi (the operation) of degree 1 and every argument at its shifted
degree. Complexes are truncated at a cap; whenever a nonzero term is dropped
for exceeding the cap the result is flagged lossy, and identities are only
asserted inside the safe window.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .exact import (
    FormalTensor,
    GradedBasis,
    Letter,
    Scalar,
    dual,
    reorder,
    transport_sign,
    word_parity,
)
from .report import Check, Report
from .valgebra import VStructure

DEFAULT_CAP = 6


def _expr_sign(f_parity: int, arg_parities: Sequence[int], order: Sequence[int]) -> int:
    """The one sign rule. Reference item 0 is psi (parity 1), item 1 is f,
    item 2+i is the i-th argument; order lists reference items as they appear
    in the term's written expression."""
    ref = [1, f_parity & 1] + [p & 1 for p in arg_parities]
    return transport_sign(ref, order)


def _check_words(components: Mapping[int, FormalTensor], cap: int, min_len: int,
                 extra: int = 0) -> None:
    for n, t in components.items():
        if not (min_len <= n <= cap):
            raise ValueError("component length %d outside [%d, cap=%d]" % (n, min_len, cap))
        for w in t.terms:
            if len(w) != n + extra:
                raise ValueError("word length %d in component %d" % (len(w), n))
            if not all(l.dual and l.shifted for l in w):
                raise ValueError("cochain letters must be shifted duals")


def _clean(components: Mapping[int, FormalTensor]) -> dict[int, FormalTensor]:
    return {n: t for n, t in components.items() if not t.is_zero()}


@dataclass(frozen=True)
class CyclicCochain:
    """Cyclically invariant functional, one tensor per word length.

    The length-0 (scalar) component is admitted; the differential vanishes on
    it. Rotating any stored word one step must reproduce the component with
    the Koszul sign of the moved letter; see check_invariance.
    """

    components: Mapping[int, FormalTensor]
    cap: int = DEFAULT_CAP
    lossy: bool = False

    def __post_init__(self):
        object.__setattr__(self, "components", _clean(self.components))
        _check_words(self.components, self.cap, 0)

    def component(self, n: int) -> FormalTensor:
        return self.components.get(n, FormalTensor.zero())

    def is_zero(self) -> bool:
        return not self.components

    def check_invariance(self, degrees: Mapping[str, int]) -> bool:
        for n, t in self.components.items():
            if n <= 1:
                continue
            perm = [n - 1] + list(range(n - 1))  # last letter to the front
            if reorder(t, perm, degrees) != t:
                return False
        return True


@dataclass(frozen=True)
class HochschildCochain:
    """Functional with the last letter distinguished as the value slot.

    With normalized=True (requires the unit's name), words carrying the unit's
    dual outside the value slot are projected away at construction.
    """

    components: Mapping[int, FormalTensor]
    cap: int = DEFAULT_CAP
    normalized: bool = False
    unit: str | None = None
    lossy: bool = False

    def __post_init__(self):
        comps = _clean(self.components)
        if self.normalized:
            if self.unit is None:
                raise ValueError("normalized cochain needs the unit name")
            comps = {n: self._project(t) for n, t in comps.items()}
            comps = _clean(comps)
        object.__setattr__(self, "components", comps)
        _check_words(self.components, self.cap, 1)

    def _project(self, t: FormalTensor) -> FormalTensor:
        def go(word, coeff):
            if any(l.name == self.unit for l in word[:-1]):
                return
            yield word, coeff

        return t.map_words(go)

    def component(self, n: int) -> FormalTensor:
        return self.components.get(n, FormalTensor.zero())

    def is_zero(self) -> bool:
        return not self.components


@dataclass(frozen=True)
class CobarCochain:
    """Two-sided cochain: words are (module dual, internal duals..., module dual).

    Components are keyed by the internal letter count; the module letters make
    every stored word two longer than its key.
    """

    components: Mapping[int, FormalTensor]
    cap: int = DEFAULT_CAP
    lossy: bool = False

    def __post_init__(self):
        object.__setattr__(self, "components", _clean(self.components))
        _check_words(self.components, self.cap, 0, extra=2)

    def component(self, n: int) -> FormalTensor:
        return self.components.get(n, FormalTensor.zero())

    def is_zero(self) -> bool:
        return not self.components


@dataclass(frozen=True)
class ModulePairSpec:
    """Left and right homotopy module data over the same algebra.

    left[t] holds words (output primal, module dual, t algebra duals) and
    right[t] holds (output primal, t algebra duals, module dual); degree-wise
    each entry behaves like a type-1 structure entry. Arity 0 is the module
    differential.
    """

    left_basis: GradedBasis
    right_basis: GradedBasis
    left: Mapping[int, FormalTensor] = field(default_factory=dict)
    right: Mapping[int, FormalTensor] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "left", _clean(self.left))
        object.__setattr__(self, "right", _clean(self.right))
        for t, entry in self.left.items():
            for w in entry.terms:
                assert len(w) == t + 2 and not w[0].dual and all(
                    l.dual and l.shifted for l in w[1:]), "bad left entry word"
                assert w[0].name in self.left_basis and w[1].name in self.left_basis
        for t, entry in self.right.items():
            for w in entry.terms:
                assert len(w) == t + 2 and not w[0].dual and all(
                    l.dual and l.shifted for l in w[1:]), "bad right entry word"
                assert w[0].name in self.right_basis and w[-1].name in self.right_basis

    def degrees(self, v: VStructure) -> dict[str, int]:
        merged = dict(v.degs)
        for basis in (self.left_basis, self.right_basis):
            for name in basis.names():
                if name in merged and merged[name] != basis.degree(name):
                    raise ValueError("degree clash on name %r" % (name,))
                merged[name] = basis.degree(name)
        return merged


def _op_terms(entry: FormalTensor, arity: int):
    for word, coeff in entry.terms.items():
        out, ins = word[0], word[1:]
        assert not out.dual and len(ins) == arity
        yield out.name, tuple(l.name for l in ins), coeff


def _mu_arities(v: VStructure) -> list[int]:
    return sorted(p[0] for p in v.patterns() if len(p) == 1)


def module_over_self(v: VStructure) -> ModulePairSpec:
    """The algebra as a left and right module over itself.

    Stored type-1 entries already carry the suspended-element dressing and
    have the word shape ModulePairSpec expects (output primal, input duals),
    so arity l is reused verbatim as the module entry at t = l - 1. The first
    input plays the module letter on the left, the last one on the right.
    """
    entries = {p[0] - 1: v.entry(p) for p in v.patterns() if len(p) == 1}
    return ModulePairSpec(v.basis, v.basis, left=dict(entries), right=dict(entries))


def cyclic_project(t: FormalTensor, degrees: Mapping[str, int]) -> FormalTensor:
    """Sum of all cyclic rotations of every word, each with its Koszul sign.

    No 1/length averaging: projecting an already invariant length-n word
    returns n times it.
    """
    out = FormalTensor.zero()
    by_len: dict[int, list] = {}
    for w, c in t.terms.items():
        assert all(l.dual and l.shifted for l in w), "project expects shifted duals"
        by_len.setdefault(len(w), []).append((w, c))
    for n, terms in by_len.items():
        part = FormalTensor(terms)
        if n <= 1:
            out = out + part
            continue
        for r in range(n):
            perm = [(i - r) % n for i in range(n)]
            out = out + reorder(part, perm, degrees)
    return out


def delta_cc(f: CyclicCochain, v: VStructure) -> CyclicCochain:
    """Cyclic differential: insert every type-1 operation at every cyclic slot.

    Wrap-around positions come from cyclic invariance: each front-slot
    insertion is spread over all rotations of its output word, which is the
    same sum position by position.
    """
    raw: dict[int, FormalTensor] = {}
    lossy = f.lossy
    for m, comp in f.components.items():
        if m == 0:
            continue  # no slot eats the operation's output
        for word, coeff in comp.terms.items():
            fp = word_parity(word, v.degs)
            for l in _mu_arities(v):
                n_out = m + l - 1
                for p, ins, cmu in _op_terms(v.entry((l,)), l):
                    if word[0].name != p:
                        continue
                    if n_out > f.cap:
                        lossy = True
                        continue
                    base = tuple(dual(b) for b in ins) + word[1:]
                    parities = [l2.effective_degree(v.degs) for l2 in base]
                    sign = _expr_sign(fp, parities, [1, 0] + list(range(2, 2 + n_out)))
                    raw[n_out] = raw.get(n_out, FormalTensor.zero()) + \
                        FormalTensor.single(base, coeff * cmu * sign)
    comps = {n: cyclic_project(t, v.degs) for n, t in raw.items()}
    return CyclicCochain(comps, cap=f.cap, lossy=lossy)


def delta_ch(f: HochschildCochain, v: VStructure) -> HochschildCochain:
    """Hochschild differential in the value-slot presentation.

    Two term families: in-place insertions at stored slots 1..m, and
    wrap-around terms where the value slot eats an operation whose inputs run
    off the end of the word and back through its front.
    """
    raw: dict[int, FormalTensor] = {}
    lossy = f.lossy
    for m, comp in f.components.items():
        for word, coeff in comp.terms.items():
            fp = word_parity(word, v.degs)
            for l in _mu_arities(v):
                n_out = m + l - 1
                for p, ins, cmu in _op_terms(v.entry((l,)), l):
                    ins_duals = tuple(dual(b) for b in ins)
                    cases = []
                    for i in range(1, m + 1):  # in place
                        if word[i - 1].name != p:
                            continue
                        out_word = word[:i - 1] + ins_duals + word[i:]
                        order = [1] + [2 + j for j in range(i - 1)] + [0] + \
                            [2 + j for j in range(i - 1, n_out)]
                        cases.append((out_word, order))
                    for u in range(1, l):  # wrapped through the value slot
                        if word[m - 1].name != p:
                            continue
                        out_word = ins_duals[l - u:] + word[:m - 1] + ins_duals[:l - u]
                        order = [1] + [2 + j for j in range(u, u + m - 1)] + [0] + \
                            [2 + j for j in range(u + m - 1, n_out)] + \
                            [2 + j for j in range(u)]
                        cases.append((out_word, order))
                    for out_word, order in cases:
                        if n_out > f.cap:
                            lossy = True
                            continue
                        parities = [l2.effective_degree(v.degs) for l2 in out_word]
                        sign = _expr_sign(fp, parities, order)
                        raw[n_out] = raw.get(n_out, FormalTensor.zero()) + \
                            FormalTensor.single(out_word, coeff * cmu * sign)
    return HochschildCochain(raw, cap=f.cap, normalized=f.normalized,
                             unit=f.unit, lossy=lossy)


def delta_cobar(f: CobarCochain, v: VStructure, mods: ModulePairSpec) -> CobarCochain:
    """Two-sided differential: left action terms, internal insertions, right
    action terms. Reference orientation is psi ^ f ^ m ^ a_1 ^ ... ^ a_j ^ n."""
    degs = mods.degrees(v)
    raw: dict[int, FormalTensor] = {}
    lossy = f.lossy

    def emit(j_out: int, out_word, order, fp, coeff):
        nonlocal lossy
        if j_out > f.cap:
            lossy = True
            return
        parities = [l2.effective_degree(degs) for l2 in out_word]
        sign = _expr_sign(fp, parities, order)
        raw[j_out] = raw.get(j_out, FormalTensor.zero()) + \
            FormalTensor.single(tuple(out_word), coeff * sign)

    for j, comp in f.components.items():
        for word, coeff in comp.terms.items():
            fp = word_parity(word, degs)
            for t, entry in mods.left.items():
                j_out = j + t
                for out_m, ins, c in _op_terms(entry, t + 1):
                    if word[0].name != out_m:
                        continue
                    out_word = tuple(dual(b) for b in ins) + word[1:]
                    order = [1, 0] + [2 + q for q in range(j_out + 2)]
                    emit(j_out, out_word, order, fp, coeff * c)
            for l in _mu_arities(v):
                j_out = j + l - 1
                for p, ins, cmu in _op_terms(v.entry((l,)), l):
                    for i in range(1, j + 1):
                        if word[i].name != p:
                            continue
                        out_word = word[:i] + tuple(dual(b) for b in ins) + word[i + 1:]
                        order = [1, 2] + [3 + q for q in range(i - 1)] + [0] + \
                            [3 + q for q in range(i - 1, j_out)] + [3 + j_out]
                        emit(j_out, out_word, order, fp, coeff * cmu)
            for t, entry in mods.right.items():
                j_out = j + t
                for out_n, ins, c in _op_terms(entry, t + 1):
                    if word[-1].name != out_n:
                        continue
                    out_word = word[:-1] + tuple(dual(b) for b in ins)
                    order = [1, 2] + [3 + q for q in range(j_out - t)] + [0] + \
                        [3 + q for q in range(j_out - t, j_out)] + [3 + j_out]
                    emit(j_out, out_word, order, fp, coeff * c)
    return CobarCochain(raw, cap=f.cap, lossy=lossy)


def check_module_relations(mods: ModulePairSpec, v: VStructure, max_arity: int) -> Report:
    """Homotopy module relations for both sides, arity by arity.

    Left family at arity n: compositions lambda_s(lambda_t(m, a_1..a_t), ...)
    plus lambda with an internal mu insertion; right family mirrors it with
    the module letter last. Signs come from the same expression-vs-reference
    rule with reference X ^ Y ^ (slots in order), both operations of degree 1.
    """
    degs = mods.degrees(v)
    rep = Report("module relations")

    def term(out_name, in_letters, order, ref_parities, coeff):
        sign = transport_sign([1, 1] + [p & 1 for p in ref_parities], order)
        word = (Letter(out_name),) + tuple(in_letters)
        return FormalTensor.single(word, coeff * sign)

    for n in range(max_arity + 1):
        total_l = FormalTensor.zero()
        for t in range(n + 1):
            s = n - t
            inner = mods.left.get(t)
            outer = mods.left.get(s)
            if inner is None or outer is None:
                continue
            for o_out, o_ins, oc in _op_terms(outer, s + 1):
                for i_out, i_ins, ic in _op_terms(inner, t + 1):
                    if o_ins[0] != i_out:
                        continue
                    ins = tuple(dual(b) for b in i_ins + o_ins[1:])
                    parities = [l.effective_degree(degs) for l in ins]
                    order = list(range(2 + n + 1))
                    total_l = total_l + term(o_out, ins, order, parities, oc * ic)
        for l in _mu_arities(v):
            t = n - l + 1
            outer = mods.left.get(t)
            if outer is None or t < 1:
                continue
            for o_out, o_ins, oc in _op_terms(outer, t + 1):
                for p, ins_mu, cmu in _op_terms(v.entry((l,)), l):
                    for i in range(1, t + 1):
                        if o_ins[i] != p:
                            continue
                        names = o_ins[:i] + ins_mu + o_ins[i + 1:]
                        ins = tuple(dual(b) for b in names)
                        parities = [let.effective_degree(degs) for let in ins]
                        order = [0, 2] + [3 + q for q in range(i - 1)] + [1] + \
                            [3 + q for q in range(i - 1, n)]
                        total_l = total_l + term(o_out, ins, order, parities, oc * cmu)
        rep.add("left arity %d" % n, total_l.is_zero(),
                "" if total_l.is_zero() else repr(total_l))

        total_r = FormalTensor.zero()
        for t in range(n + 1):
            s = n - t
            inner = mods.right.get(t)
            outer = mods.right.get(s)
            if inner is None or outer is None:
                continue
            for o_out, o_ins, oc in _op_terms(outer, s + 1):
                for i_out, i_ins, ic in _op_terms(inner, t + 1):
                    if o_ins[-1] != i_out:
                        continue
                    ins = tuple(dual(b) for b in o_ins[:-1] + i_ins)
                    parities = [l.effective_degree(degs) for l in ins]
                    order = [0] + [2 + q for q in range(s)] + [1] + \
                        [2 + q for q in range(s, n)] + [2 + n]
                    total_r = total_r + term(o_out, ins, order, parities, oc * ic)
        for l in _mu_arities(v):
            t = n - l + 1
            outer = mods.right.get(t)
            if outer is None or t < 1:
                continue
            for o_out, o_ins, oc in _op_terms(outer, t + 1):
                for p, ins_mu, cmu in _op_terms(v.entry((l,)), l):
                    for i in range(1, t + 1):
                        if o_ins[i - 1] != p:
                            continue
                        names = o_ins[:i - 1] + ins_mu + o_ins[i:]
                        ins = tuple(dual(b) for b in names)
                        parities = [let.effective_degree(degs) for let in ins]
                        order = [0] + [2 + q for q in range(i - 1)] + [1] + \
                            [2 + q for q in range(i - 1, n)] + [2 + n]
                        total_r = total_r + term(o_out, ins, order, parities, oc * cmu)
        rep.add("right arity %d" % n, total_r.is_zero(),
                "" if total_r.is_zero() else repr(total_r))
    return rep
