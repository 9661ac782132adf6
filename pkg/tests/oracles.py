"""Independent brute-force oracles used to freeze expected values.

Everything here deliberately avoids the package's stored-word machinery:
cochains are plain functionals (basis tuple -> rational), differentials are
the literal insert-an-operation-at-every-cyclic-slot formulas, and every sign
is computed by naive bubble-sort transport over explicit symbol lists. Slow
and dumb on purpose.
"""

from __future__ import annotations

from fractions import Fraction

from graphact.exact import FormalTensor, Letter

ZERO = Fraction(0)


def naive_koszul(perm, degrees):
    """Bubble-sort the permuted sequence back to identity, one adjacent swap at
    a time, collecting (-1)^(p*q) per swap. Gather form, same as the package."""
    seq = list(perm)
    degs = [degrees[i] for i in seq]
    sign = 1
    changed = True
    while changed:
        changed = False
        for i in range(len(seq) - 1):
            if seq[i] > seq[i + 1]:
                if degs[i] & 1 and degs[i + 1] & 1:
                    sign = -sign
                seq[i], seq[i + 1] = seq[i + 1], seq[i]
                degs[i], degs[i + 1] = degs[i + 1], degs[i]
                changed = True
    return sign


def transport(ref_parities, order):
    """Sign of rearranging reference items into the given index order."""
    return naive_koszul(order, ref_parities)


# ---------------------------------------------------------------------------
# Functional cochains.


class FnCochain:
    """A cochain as a plain functional: {length: {basis tuple: coeff}}."""

    def __init__(self, values=None):
        self.values = {}
        if values:
            for n, table in values.items():
                clean = {tuple(t): Fraction(c) for t, c in table.items() if c}
                if clean:
                    self.values[n] = clean

    def __call__(self, args):
        table = self.values.get(len(args), {})
        return table.get(tuple(args), ZERO)

    def set(self, args, coeff):
        args = tuple(args)
        table = self.values.setdefault(len(args), {})
        c = Fraction(coeff)
        if c:
            table[args] = c
        elif args in table:
            del table[args]

    def add(self, args, coeff):
        self.set(args, self(args) + Fraction(coeff))

    def nonzero(self):
        return {n: dict(t) for n, t in self.values.items() if t}

    def __eq__(self, other):
        return self.nonzero() == other.nonzero()

    def __repr__(self):
        return "FnCochain(%r)" % (self.nonzero(),)


def tensor_to_fn(t: FormalTensor) -> FnCochain:
    """Naive conversion: a dual word (c1*,...,cn*) is the functional sending
    (c1,...,cn) to 1, with no interleaving signs. Both sides of every
    cross-check use this same conversion."""
    out = FnCochain()
    for word, coeff in t.terms.items():
        assert all(l.dual for l in word)
        out.add(tuple(l.name for l in word), coeff)
    return out


def fn_to_tensor(f_component) -> FormalTensor:
    terms = []
    for args, coeff in f_component.items():
        terms.append((tuple(Letter(a, dual=True, shifted=True) for a in args), coeff))
    return FormalTensor(terms)


def shifted_parity(name, degrees):
    return (degrees[name] + 1) & 1


def fn_parity(f: FnCochain, degrees) -> int:
    """Parity of a homogeneous functional: sum of shifted argument degrees."""
    ps = set()
    for n, table in f.values.items():
        for args in table:
            ps.add(sum(degrees[a] + 1 for a in args) & 1)
    if not ps:
        return 0
    assert len(ps) == 1, "oracle needs parity-homogeneous cochains"
    return ps.pop()


def mu_terms(vtable, arity):
    """Type-1 table entry as a list of (output name, input names, coeff)."""
    entry = vtable.get((arity,))
    if entry is None:
        return []
    out = []
    for word, coeff in entry.terms.items():
        p, ds = word[0], word[1:]
        assert not p.dual and all(d.dual for d in ds) and len(ds) == arity
        out.append((p.name, tuple(d.name for d in ds), coeff))
    return out


def oracle_delta_cc(f: FnCochain, vtable, degrees, basis_names, cap):
    """Literal cyclic differential: insert every arity-l operation at every
    cyclic run of the output arguments; the cochain eats the operation's
    output first and the remaining arguments in cyclic order after the run.

    Sign: compare the symbol order  f mu a_i .. a_{i+l-1} a_{i+l} .. a_{i-1}
    against the reference  psi f a_1 .. a_N  (psi and mu of degree 1).
    """
    out = FnCochain()
    fp = fn_parity(f, degrees)
    arities = sorted(l for (l,) in (k for k in vtable if len(k) == 1))
    for l in arities:
        terms = mu_terms(vtable, l)
        if not terms:
            continue
        for m in list(f.values):
            n_out = m + l - 1
            if n_out > cap or n_out < 1:
                continue
            for args in _tuples(basis_names, n_out):
                total = ZERO
                for i in range(n_out):  # cyclic run start
                    run = [args[(i + t) % n_out] for t in range(l)]
                    rest = [args[(i + l + t) % n_out] for t in range(n_out - l)]
                    # reference items: 0 = psi (parity 1), 1 = f, 2.. = a_1..a_N
                    parities = [1, fp] + [degrees[a] + 1 for a in args]
                    order = [1, 0] + [2 + ((i + t) % n_out) for t in range(n_out)]
                    sgn = transport(parities, order)
                    for (p, ins, c) in terms:
                        if tuple(ins) != tuple(run):
                            continue
                        total += sgn * c * f([p] + rest)
                if total:
                    out.add(args, total)
    return out


def oracle_delta_ch(f: FnCochain, vtable, degrees, basis_names, cap):
    """Value-slot-last differential, two literal term families.

    In place (i = 1..m, 1-based stored slot):
        f(a_1, .., a_{i-1}, mu(a_i .. a_{i+l-1}), a_{i+l}, .., a_N)
    Wrapped through the junction (u = 1..l-1 leading output letters):
        f(a_{u+1}, .., a_{u+m-1}, mu(a_{m+u}, .., a_N, a_1, .., a_u))
    with N = m+l-1. Signs compare the symbol appearance order against the
    reference  psi f a_1 .. a_N.
    """
    out = FnCochain()
    fp = fn_parity(f, degrees)
    arities = sorted(l for (l,) in (k for k in vtable if len(k) == 1))
    for l in arities:
        terms = mu_terms(vtable, l)
        if not terms:
            continue
        for m in list(f.values):
            n_out = m + l - 1
            if n_out > cap or n_out < 1:
                continue
            for args in _tuples(basis_names, n_out):
                total = ZERO
                parities = [1, fp] + [degrees[a] + 1 for a in args]
                cases = []
                for i in range(1, m + 1):  # in place
                    run = list(range(i, i + l))
                    f_args_idx = list(range(1, i)) + [0] + list(range(i + l, n_out + 1))
                    order = [1] + [2 + t - 1 for t in range(1, i)] + [0] + \
                        [2 + t - 1 for t in run] + [2 + t - 1 for t in range(i + l, n_out + 1)]
                    cases.append((run, f_args_idx, order))
                for u in range(1, l):  # wrapped, eaten by the value slot
                    run = list(range(m + u, n_out + 1)) + list(range(1, u + 1))
                    f_args_idx = list(range(u + 1, u + m)) + [0]
                    order = [1] + [2 + t - 1 for t in range(u + 1, u + m)] + [0] + \
                        [2 + t - 1 for t in run]
                    cases.append((run, f_args_idx, order))
                for run, f_args_idx, order in cases:
                    sgn = transport(parities, order)
                    run_names = tuple(args[t - 1] for t in run)
                    for (p, ins, c) in terms:
                        if ins != run_names:
                            continue
                        f_args = [p if t == 0 else args[t - 1] for t in f_args_idx]
                        total += sgn * c * f(f_args)
                if total:
                    out.add(args, total)
    return out


def _tuples(names, n):
    if n == 0:
        yield ()
        return
    for rest in _tuples(names, n - 1):
        for a in names:
            yield (a,) + rest
