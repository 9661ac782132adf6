"""Directed ribbon graphs with typed vertices, and the PROP structure on them.

Model. A graph is a tuple of typed vertices, each carrying the cyclic
(counterclockwise) tuple of its half-edge tokens. A token is (edge_id, end)
with end "s" on the outgoing side and "t" on the incoming side; both tokens
of every edge appear exactly once across the vertex lists, so there is no
separate edge table. Type-0 vertices are the enumerated inputs and carry
incoming tokens only; a type-n vertex (n >= 1) carries exactly n outgoing
tokens. A vertex with no tokens is trivial.

Corners and outputs. The corner after a half-edge h is the gap between h and
the next token in the cyclic order at its vertex; a trivial vertex v has the
single corner (v, "v"). Walking corner -> partner(next(corner)) traverses the
boundary of the thickened graph, so the corner orbits are the boundary
cycles, and those are the outputs. An explicit output enumeration is a tuple
of corner representatives, one per cycle; outputs=None resolves to the
minimal-corner enumeration in the current labels. Both enumerations are part
of a graph's identity: isomorphisms must match inputs index by index and
outputs cycle by cycle, exactly what feeding cochains through the graph
requires.

Grading. A nontrivial type-0 vertex with m incoming edges contributes m - 1
to the degree, a type-n vertex (n >= 1) with m incoming contributes
2n + m - 4, and trivial vertices contribute 0. The constant -4 is pinned by
requiring the expansion differential to lower the degree by exactly one.

Orientation. Each graph carries an ordered word listing every edge and every
type->=1 vertex exactly once. Generator degrees (edge: 1, type-n vertex:
n(2-d) + (d-4), with d the ambient dimension) drive all Koszul signs; a graph
equals minus itself with two odd generators transposed. canonicalize() folds
the word into a fixed order and returns the transported sign; graphs whose
automorphisms reverse the orientation get sign 0 and drop out of sums.

Marked graphs add start-point data: each nontrivial input names one incoming
edge as its marked edge; each output owns a leg (a stub vertex with a single
outgoing edge whose tip pins the output's starting corner); unit stubs are
single-outgoing-edge vertices feeding a marked slot. Legs and their edges are
position markers only: they are not orientation generators and do not count
toward degrees or incoming-edge minima. Leg and unit stubs are stored with
vertex type 1 (one outgoing token) and are recognized via the markings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Iterable, Mapping

from .exact import ONE, Scalar, transport_sign
from .report import Report
from .valgebra import required_entry_degree

Half = tuple[str, str]
Corner = tuple[str, str]

OUT = "s"
IN = "t"


@dataclass(frozen=True)
class Markings:
    """Start-point data for marked graphs.

    marked pairs each nontrivial input with its marked incoming edge. legs is
    aligned with the output enumeration. units lists the unit stubs.
    """

    marked: tuple[tuple[str, str], ...] = ()
    legs: tuple[str, ...] = ()
    units: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "marked", tuple((str(v), str(e)) for v, e in self.marked))
        object.__setattr__(self, "legs", tuple(str(v) for v in self.legs))
        object.__setattr__(self, "units", tuple(str(v) for v in self.units))

    def marked_edge(self, vid: str) -> str | None:
        for v, e in self.marked:
            if v == vid:
                return e
        return None


@dataclass(frozen=True)
class PropGraph:
    """One directed ribbon graph. Immutable and hashable.

    vertices holds (id, type, cyclic token tuple); orientation is the
    generator word; inputs enumerates the type-0 vertices; outputs, when not
    None, enumerates the boundary cycles by corner representatives.
    """

    vertices: tuple[tuple[str, int, tuple[Half, ...]], ...]
    orientation: tuple[str, ...] = ()
    inputs: tuple[str, ...] = ()
    outputs: tuple[Corner, ...] | None = None
    markings: Markings | None = None
    dim_d: int = 0

    _types: dict = field(init=False, repr=False, compare=False, default=None)
    _cyc: dict = field(init=False, repr=False, compare=False, default=None)
    _tok: dict = field(init=False, repr=False, compare=False, default=None)
    _edges: tuple = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        verts = tuple((str(v), int(n), tuple((str(e), end) for e, end in cyc)) for v, n, cyc in self.vertices)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "orientation", tuple(str(x) for x in self.orientation))
        object.__setattr__(self, "inputs", tuple(str(x) for x in self.inputs))
        if self.outputs is not None:
            object.__setattr__(self, "outputs", tuple((str(a), str(b)) for a, b in self.outputs))
        types = {}
        cyc = {}
        tok = {}
        for vid, n, lst in verts:
            if vid in types:
                raise ValueError("duplicate vertex id %r" % vid)
            if n < 0:
                raise ValueError("negative vertex type at %r" % vid)
            types[vid] = n
            cyc[vid] = lst
            for i, t in enumerate(lst):
                if t[1] not in (OUT, IN):
                    raise ValueError("bad half-edge end %r" % (t,))
                if t in tok:
                    raise ValueError("half-edge %r attached twice" % (t,))
                tok[t] = (vid, i)
        ends: dict[str, set] = {}
        for e, end in tok:
            ends.setdefault(e, set()).add(end)
        for e, s in ends.items():
            if s != {OUT, IN}:
                raise ValueError("edge %r lacks an end (%r)" % (e, s))
            if e in types:
                raise ValueError("id %r used for both a vertex and an edge" % e)
        object.__setattr__(self, "_types", types)
        object.__setattr__(self, "_cyc", cyc)
        object.__setattr__(self, "_tok", tok)
        object.__setattr__(self, "_edges", tuple(sorted(ends)))

    def vtype(self, vid: str) -> int:
        return self._types[vid]

    def cyc(self, vid: str) -> tuple[Half, ...]:
        return self._cyc[vid]

    def vertex_ids(self) -> tuple[str, ...]:
        return tuple(v for v, _, _ in self.vertices)

    def edge_ids(self) -> tuple[str, ...]:
        return self._edges

    def vertex_of(self, token: Half) -> str:
        return self._tok[token][0]

    def source(self, eid: str) -> str:
        return self._tok[(eid, OUT)][0]

    def target(self, eid: str) -> str:
        return self._tok[(eid, IN)][0]

    def leg_ids(self) -> tuple[str, ...]:
        return self.markings.legs if self.markings else ()

    def unit_ids(self) -> tuple[str, ...]:
        return self.markings.units if self.markings else ()

    def leg_edges(self) -> tuple[str, ...]:
        cy = self._cyc
        return tuple(cy[v][0][0] for v in self.leg_ids() if cy[v])

    def is_stub(self, vid: str) -> bool:
        return vid in self.leg_ids() or vid in self.unit_ids()

    def __repr__(self) -> str:
        bits = ["%s:%d(%s)" % (v, n, ",".join("%s%s" % ("+" if e == OUT else "-", i) for i, e in c)) for v, n, c in self.vertices]
        return "PropGraph[%s | or=%s in=%s]" % ("; ".join(bits), "^".join(self.orientation), ",".join(self.inputs))


def graph(vertices, orientation=(), inputs=(), outputs=None, markings=None, dim_d=0) -> PropGraph:
    """Convenience constructor accepting any nested iterables."""
    verts = tuple((v, n, tuple(tuple(t) for t in cyc)) for v, n, cyc in vertices)
    outs = None if outputs is None else tuple(tuple(c) for c in outputs)
    return PropGraph(verts, tuple(orientation), tuple(inputs), outs, markings, dim_d)


def _incoming(g: PropGraph, vid: str) -> int:
    legs = set(g.leg_edges())
    return sum(1 for e, end in g.cyc(vid) if end == IN and e not in legs)


def degree(g: PropGraph) -> int:
    """Total degree: sum of per-vertex contributions (see module docstring)."""
    legs = set(g.leg_edges())
    total = 0
    for vid, n, cyc in g.vertices:
        if g.is_stub(vid):
            continue
        m = sum(1 for e, end in cyc if end == IN and e not in legs)
        if n == 0:
            total += m - 1 if m else 0
        else:
            total += 2 * n + m - 4
    return total


def generator_parities(g: PropGraph) -> dict[str, int]:
    """Parity of every orientation generator (edges odd, vertices by type)."""
    par = {}
    legs = set(g.leg_ids())
    leg_edges = set(g.leg_edges())
    for e in g.edge_ids():
        if e not in leg_edges:
            par[e] = 1
    for vid, n, _ in g.vertices:
        if n >= 1 and vid not in legs:
            par[vid] = required_entry_degree(n, g.dim_d) & 1
    return par


# ---------------------------------------------------------------------------
# Boundary traversal.


def _next_corner(g: PropGraph, c: Corner) -> Corner:
    vid, pos = g._tok[c]
    cyc = g._cyc[vid]
    e, end = cyc[(pos + 1) % len(cyc)]
    return (e, IN if end == OUT else OUT)


def boundary_cycles(g: PropGraph) -> tuple[tuple[Corner, ...], ...]:
    """All boundary cycles as corner sequences in traversal order.

    Each cycle is rotated to start at its minimal corner and the cycles are
    sorted by that corner, so the result is deterministic for a fixed
    labeling. Trivial vertices contribute their own one-corner cycles.
    """
    seen = set()
    cycles = []
    for t in sorted(g._tok):
        if t in seen:
            continue
        orbit = []
        c = t
        while c not in seen:
            seen.add(c)
            orbit.append(c)
            c = _next_corner(g, c)
        assert c == t, "corner walk did not close"
        k = orbit.index(min(orbit))
        cycles.append(tuple(orbit[k:] + orbit[:k]))
    for vid, _, cyc in g.vertices:
        if not cyc:
            cycles.append(((vid, "v"),))
    return tuple(sorted(cycles))


def outputs_of(g: PropGraph) -> tuple[Corner, ...]:
    """Output enumeration: explicit if present, else by minimal corner."""
    if g.outputs is not None:
        return g.outputs
    return tuple(c[0] for c in boundary_cycles(g))


def corner_cycle_map(g: PropGraph) -> dict[Corner, int]:
    """Corner -> position of its cycle in the output enumeration."""
    cycles = boundary_cycles(g)
    outs = outputs_of(g)
    where = {}
    for i, cyc in enumerate(cycles):
        for c in cyc:
            where[c] = i
    idx = {}
    for k, rep in enumerate(outs):
        if rep not in where:
            raise ValueError("output %d names a missing corner %r" % (k, rep))
        for c in cycles[where[rep]]:
            if c in idx:
                raise ValueError("outputs name the same cycle twice")
            idx[c] = k
    if len(idx) != len(where):
        raise ValueError("outputs do not cover every boundary cycle")
    return idx


# ---------------------------------------------------------------------------
# Validation.


def validate(g: PropGraph, allow_type0_sources: bool = False, type_bound: int | None = None) -> Report:
    rep = Report("graph structure")
    legs = set(g.leg_ids())
    units = set(g.unit_ids())
    leg_edges = set(g.leg_edges())
    rep.add("nonempty", bool(g.vertices))
    ok = True
    for vid, n, cyc in g.vertices:
        outs = sum(1 for _, end in cyc if end == OUT)
        ins = len(cyc) - outs
        if vid in legs or vid in units:
            if not (n == 1 and outs == 1 and ins == 0):
                ok = False
                rep.add("stub shape %s" % vid, False, "stub needs exactly one outgoing token")
        elif n == 0:
            if outs and not allow_type0_sources:
                ok = False
                rep.add("type-0 source %s" % vid, False, "%d outgoing tokens" % outs)
        else:
            if outs != n:
                ok = False
                rep.add("out-count %s" % vid, False, "type %d with %d outgoing" % (n, outs))
            if n == 1 and _incoming(g, vid) < 2:
                ok = False
                rep.add("type-1 fan-in %s" % vid, False, "needs at least two incoming edges")
    if ok:
        rep.add("vertex shapes", True)
    want_inputs = sorted(v for v, n, _ in g.vertices if n == 0 and v not in legs)
    rep.add("input enumeration", sorted(g.inputs) == want_inputs and len(set(g.inputs)) == len(g.inputs),
            "" if sorted(g.inputs) == want_inputs else "inputs %r vs type-0 set %r" % (g.inputs, want_inputs))
    gen_want = set(generator_parities(g))
    gen_have = list(g.orientation)
    rep.add("orientation word", sorted(gen_have) == sorted(gen_want) and len(set(gen_have)) == len(gen_have),
            "" if set(gen_have) == gen_want else "missing %r extra %r" % (sorted(gen_want - set(gen_have)), sorted(set(gen_have) - gen_want)))
    if type_bound is not None:
        bad = [v for v, n, _ in g.vertices if n > type_bound and v not in legs and v not in units]
        rep.add("type bound %d" % type_bound, not bad, repr(bad))
    try:
        ncyc = len(boundary_cycles(g))
        rep.add("has outputs", ncyc >= 1, "%d boundary cycles" % ncyc)
        if g.outputs is not None:
            try:
                corner_cycle_map(g)
                rep.add("output enumeration", True)
            except ValueError as exc:
                rep.add("output enumeration", False, str(exc))
    except (KeyError, AssertionError) as exc:
        rep.add("boundary traversal", False, repr(exc))
    if g.markings is not None:
        mk = g.markings
        for v, e in mk.marked:
            good = v in g.inputs and (e, IN) in g._tok and g.target(e) == v
            rep.add("marked edge %s" % v, good, "" if good else "edge %r does not enter input %r" % (e, v))
        for v in g.inputs:
            if g.cyc(v) and mk.marked_edge(v) is None:
                rep.add("marked edge %s" % v, False, "nontrivial input lacks a marked edge")
        if mk.legs:
            if g.outputs is None:
                rep.add("legs aligned", False, "legs need an explicit output enumeration")
            else:
                align = len(mk.legs) == len(g.outputs)
                if align:
                    for k, leg in enumerate(mk.legs):
                        e = g.cyc(leg)[0][0] if g.cyc(leg) else None
                        if e is None or g.outputs[k] != (e, OUT):
                            align = False
                            rep.add("leg %d" % k, False, "output must start at the leg corner")
                rep.add("legs aligned", align)
        for v in mk.units:
            e = g.cyc(v)[0][0] if g.cyc(v) else None
            tgt = g.target(e) if e else None
            good = e is not None and tgt in g.inputs and mk.marked_edge(tgt) == e
            rep.add("unit %s" % v, good, "" if good else "unit stub must feed the marked slot of an input")
    return rep


# ---------------------------------------------------------------------------
# Canonical form.


def _components(g: PropGraph) -> list[list[str]]:
    adj: dict[str, set] = {v: set() for v in g.vertex_ids()}
    for e in g.edge_ids():
        a, b = g.source(e), g.target(e)
        adj[a].add(b)
        adj[b].add(a)
    comps = []
    left = set(adj)
    for v in g.vertex_ids():
        if v not in left:
            continue
        comp = []
        stack = [v]
        left.discard(v)
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in adj[u]:
                if w in left:
                    left.discard(w)
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def _vertex_tag(g: PropGraph, vid: str, input_pos: Mapping[str, int]) -> tuple[int, int]:
    legs = g.leg_ids()
    if vid in legs:
        return (1, legs.index(vid))
    if vid in g.unit_ids():
        return (2, -1)
    return (0, input_pos.get(vid, -1))


def _trace(g: PropGraph, root: Half, input_pos, out_idx):
    """Deterministic breadth-first encoding of root's component.

    Vertices are numbered in first-visit order and each one's token list is
    rotated to start at the entry half-edge; edge numbers are assigned in
    first-sight order. The encoding determines the component up to labels.
    """
    vnum: dict[str, int] = {}
    enum: dict[str, int] = {}
    rot: dict[str, int] = {}
    enc = []
    queue = [root]
    qi = 0
    while qi < len(queue):
        h = queue[qi]
        qi += 1
        vid, pos = g._tok[h]
        if vid in vnum:
            continue
        vnum[vid] = len(vnum)
        rot[vid] = pos
        cyc = g._cyc[vid]
        slots = []
        for k in range(len(cyc)):
            e, end = cyc[(pos + k) % len(cyc)]
            if e not in enum:
                enum[e] = len(enum)
            queue.append((e, IN if end == OUT else OUT))
            o = out_idx.get((e, end), -1) if out_idx is not None else -1
            slots.append((0 if end == OUT else 1, enum[e], o))
        tag = _vertex_tag(g, vid, input_pos)
        enc.append((g.vtype(vid), tag[0], tag[1], tuple(slots)))
    return tuple(enc), vnum, enum, rot


def _global_sign(g: PropGraph, labelings, comp_order, par) -> Scalar:
    """Transport sign of g's orientation into the canonical generator order."""
    gen_vs: list[str] = []
    gen_es: list[str] = []
    for ci in comp_order:
        _, vnum, enum, _ = labelings[ci]
        legs = set(g.leg_ids())
        leg_edges = set(g.leg_edges())
        gen_vs.extend(v for v, _ in sorted(vnum.items(), key=lambda t: t[1]) if g.vtype(v) >= 1 and v not in legs)
        gen_es.extend(e for e, _ in sorted(enum.items(), key=lambda t: t[1]) if e not in leg_edges)
    target = gen_vs + gen_es
    pos = {x: i for i, x in enumerate(g.orientation)}
    assert sorted(target) == sorted(pos), "orientation word does not match the generators"
    gather = [pos[x] for x in target]
    parities = [par[x] for x in g.orientation]
    return Fraction(transport_sign(parities, gather))


def canonicalize(g: PropGraph) -> tuple[PropGraph, Scalar]:
    """Deterministic relabeling plus the orientation transport sign.

    The input/output enumerations are part of a graph's identity (the PROP
    needs them), so a missing output enumeration is resolved to the
    minimal-corner one in the current labels before anything else; graphs
    meant to be compared across relabelings should carry explicit outputs.
    Returns sign 0 when the graph admits an orientation-reversing
    automorphism preserving both enumerations (it then equals its own
    negative and vanishes in sums).
    """
    input_pos = {v: i for i, v in enumerate(g.inputs)}
    out_idx = corner_cycle_map(g)  # resolves a missing enumeration, checks coverage
    par = generator_parities(g)

    comp_best = []  # per component: (encoding, [labeling, ...]); labeling = (enc, vnum, enum, rot)
    for comp in _components(g):
        tokens = [t for v in comp for t in g._cyc[v]]
        if not tokens:
            vid = comp[0]
            tag = _vertex_tag(g, vid, input_pos)
            enc = ((g.vtype(vid), tag[0], tag[1], ((2, -1, out_idx[(vid, "v")]),)),)
            comp_best.append((enc, [(enc, {vid: 0}, {}, {vid: 0})]))
            continue
        best = None
        labs = []
        for root in sorted(tokens):
            got = _trace(g, root, input_pos, out_idx)
            if best is None or got[0] < best:
                best, labs = got[0], [got]
            elif got[0] == best:
                labs.append(got)
        comp_best.append((best, labs))

    # Distinct components can never share an encoding: each component owns at
    # least one boundary cycle, and the output indices in the slot records
    # are disjoint between components. Component order is therefore strict.
    comp_order = sorted(range(len(comp_best)), key=lambda i: comp_best[i][0])
    chosen = [comp_best[i][1][0] for i in range(len(comp_best))]
    base_sign = _global_sign(g, chosen, comp_order, par)

    # Labeling ties within a component are enumeration-preserving
    # automorphisms; an odd one makes the graph its own negative.
    zero = False
    for ci, (_, labs) in enumerate(comp_best):
        for alt in labs[1:]:
            trial = list(chosen)
            trial[ci] = alt
            if _global_sign(g, trial, comp_order, par) != base_sign:
                zero = True

    # Global numbering in sorted component order.
    voff = 0
    eoff = 0
    vmap: dict[str, str] = {}
    emap: dict[str, str] = {}
    vorder: list[str] = []
    for ci in comp_order:
        _, vnum, enum, _ = chosen[ci]
        for v, i in sorted(vnum.items(), key=lambda t: t[1]):
            vmap[v] = "v%d" % (voff + i)
            vorder.append(v)
        for e, i in sorted(enum.items(), key=lambda t: t[1]):
            emap[e] = "e%d" % (eoff + i)
        voff += len(vnum)
        eoff += len(enum)

    rots = {}
    for ci in comp_order:
        rots.update(chosen[ci][3])
    verts = []
    for v in vorder:
        cyc = g._cyc[v]
        r = rots[v]
        rotated = tuple((emap[e], end) for e, end in (cyc[r:] + cyc[:r]))
        verts.append((vmap[v], g.vtype(v), rotated))

    legs = set(g.leg_ids())
    leg_edges = set(g.leg_edges())
    orientation = tuple(vmap[v] for v in vorder if g.vtype(v) >= 1 and v not in legs)
    orientation += tuple(sorted((emap[e] for e in g.edge_ids() if e not in leg_edges), key=lambda s: int(s[1:])))
    inputs = tuple(vmap[v] for v in g.inputs)
    markings = None
    if g.markings is not None:
        markings = Markings(
            tuple(sorted((vmap[v], emap[e]) for v, e in g.markings.marked)),
            tuple(vmap[v] for v in g.markings.legs),
            tuple(sorted(vmap[v] for v in g.markings.units)),
        )

    def map_corner(c: Corner) -> Corner:
        if c[1] == "v":
            return (vmap[c[0]], "v")
        return (emap[c[0]], c[1])

    resolved = outputs_of(g)
    cg = PropGraph(tuple(verts), orientation, inputs, None, markings, g.dim_d)
    if markings is not None and markings.legs:
        # Leg corners are the enumeration; keep them verbatim.
        outs = tuple(map_corner(c) for c in resolved)
    else:
        # Same enumeration, but rep-normalized so presentations differing
        # only in corner representatives collapse to one form.
        at_cycle = {c: cyc[0] for cyc in boundary_cycles(cg) for c in cyc}
        outs = tuple(at_cycle[map_corner(c)] for c in resolved)
    cg = PropGraph(tuple(verts), orientation, inputs, outs, markings, g.dim_d)
    return cg, Fraction(0) if zero else base_sign


# ---------------------------------------------------------------------------
# Formal sums of graphs.


class GraphSum:
    """Exact formal sum of canonical-form graphs."""

    __slots__ = ("terms",)

    def __init__(self, items: Iterable[tuple[PropGraph, Scalar]] = ()):
        acc: dict[PropGraph, Scalar] = {}
        for gr, coeff in items:
            coeff = Fraction(coeff)
            if not coeff:
                continue
            cg, sign = canonicalize(gr)
            if not sign:
                continue
            c = acc.get(cg, Fraction(0)) + coeff * sign
            if c:
                acc[cg] = c
            elif cg in acc:
                del acc[cg]
        self.terms = acc

    @staticmethod
    def _raw(acc: dict) -> "GraphSum":
        out = GraphSum()
        out.terms = acc
        return out

    def __add__(self, other: "GraphSum") -> "GraphSum":
        acc = dict(self.terms)
        for gr, c in other.terms.items():
            s = acc.get(gr, Fraction(0)) + c
            if s:
                acc[gr] = s
            elif gr in acc:
                del acc[gr]
        return GraphSum._raw(acc)

    def __sub__(self, other: "GraphSum") -> "GraphSum":
        return self + other.scale(-ONE)

    def scale(self, coeff) -> "GraphSum":
        coeff = Fraction(coeff)
        if not coeff:
            return GraphSum()
        return GraphSum._raw({gr: c * coeff for gr, c in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, GraphSum) and self.terms == other.terms

    def __iter__(self):
        return iter(sorted(self.terms.items(), key=lambda t: repr(t[0])))

    def __repr__(self) -> str:
        if not self.terms:
            return "GraphSum(0)"
        return "GraphSum(%d terms)" % len(self.terms)


def d_of_sum(s: GraphSum) -> GraphSum:
    total = GraphSum()
    for gr, c in s.terms.items():
        total = total + differential_D(gr).scale(c)
    return total


def compose_sum(a: GraphSum, b: GraphSum) -> GraphSum:
    """Bilinear extension of compose to formal sums."""
    total = GraphSum()
    for g1, c1 in a.terms.items():
        for g2, c2 in b.terms.items():
            total = total + compose(g1, g2).scale(c1 * c2)
    return total


# ---------------------------------------------------------------------------
# The expansion differential.


def _fresh(used: set, prefix: str) -> str:
    i = 0
    while "%s%d" % (prefix, i) in used:
        i += 1
    name = "%s%d" % (prefix, i)
    used.add(name)
    return name


def differential_D(g: PropGraph, type0_runs: str = "all") -> GraphSum:
    """Sum of all one-edge expansions, with orientation signs.

    Every vertex is split into two vertices joined by a fresh edge, the
    cyclic token list distributed over two complementary contiguous arcs (one
    arc may be empty; an empty complement has one split per cut gap, which is
    where the several full pull-offs at a type-0 vertex come from). A split
    survives when both pieces are legal: a type-0 vertex yields type-0 plus
    type-1 with the new edge feeding the type-0 side, an internal vertex
    yields two internal vertices, and type-1 pieces need two incoming edges.
    The new generator pair is spliced onto the front of the orientation word
    after Koszul-moving the split vertex's own generator there.

    type0_runs="proper" drops the empty-complement splits; that variant
    breaks the differential property and exists as a negative control.
    """
    assert type0_runs in ("all", "proper")
    terms: list[tuple[PropGraph, Scalar]] = []
    par = generator_parities(g)
    used_base = set(g.vertex_ids()) | set(g.edge_ids())
    outs = outputs_of(g)
    marked = g.markings.marked_edge if g.markings else (lambda v: None)
    stub_edges = set(g.leg_edges())
    for v in g.unit_ids():
        if g.cyc(v):
            stub_edges.add(g.cyc(v)[0][0])

    for vid, n, cyc in g.vertices:
        if g.is_stub(vid) or not cyc:
            continue
        L = len(cyc)
        pinned = marked(vid)
        for i in range(L):
            for j in range(i, L):
                if i == j:
                    # Empty complement: one full pull-off per cut gap.
                    if type0_runs == "proper":
                        continue
                    arc_p, arc_q = cyc[i:] + cyc[:i], ()
                else:
                    arc_p, arc_q = cyc[i:j], cyc[j:] + cyc[:i]
                for p_sources in (True, False):
                    term = _expand(g, vid, n, arc_p, arc_q, p_sources, par, used_base, outs, pinned, stub_edges)
                    if term is not None:
                        terms.append(term)
    return GraphSum(terms)


def _expand(g, vid, n, arc_p, arc_q, p_sources, par, used_base, outs, pinned, stub_edges):
    out_p = sum(1 for _, end in arc_p if end == OUT)
    out_q = sum(1 for _, end in arc_q if end == OUT)
    # Leg edges are position markers and do not feed the fan-in minimum.
    in_p = sum(1 for e, end in arc_p if end == IN and e not in stub_edges)
    in_q = sum(1 for e, end in arc_q if end == IN and e not in stub_edges)
    n_p = out_p + (1 if p_sources else 0)
    n_q = out_q + (0 if p_sources else 1)
    in_p += 0 if p_sources else 1
    in_q += 1 if p_sources else 0
    assert n_p + n_q == n + 1
    n_zero = (1 if n_p == 0 else 0) + (1 if n_q == 0 else 0)
    if n_zero != (1 if n == 0 else 0):
        return None
    if (n_p == 1 and in_p < 2) or (n_q == 1 and in_q < 2):
        return None
    # Marked edges (unit-fed ones included) stay with the residual type-0
    # vertex; a split that strands one on the new internal piece is dropped.
    if pinned is not None:
        residual = arc_q if n_q == 0 else arc_p
        if (pinned, IN) not in residual:
            return None

    used = set(used_base)
    enew = _fresh(used, "x")
    tok_p = (enew, OUT if p_sources else IN)
    tok_q = (enew, IN if p_sources else OUT)
    if n_p == 0:
        id_p, id_q = vid, _fresh(used, "w")
    elif n_q == 0:
        id_p, id_q = _fresh(used, "w"), vid
    else:
        id_p, id_q = _fresh(used, "w"), _fresh(used, "w")

    verts = []
    for wid, wn, wcyc in g.vertices:
        if wid != vid:
            verts.append((wid, wn, wcyc))
        else:
            verts.append((id_p, n_p, tuple(arc_p) + (tok_p,)))
            verts.append((id_q, n_q, tuple(arc_q) + (tok_q,)))

    src_id, tgt_id = (id_p, id_q) if p_sources else (id_q, id_p)
    if n >= 1:
        k = g.orientation.index(vid)
        crossed = sum(par[x] for x in g.orientation[:k])
        sign = -ONE if (par[vid] & crossed & 1) else ONE
        rest = g.orientation[:k] + g.orientation[k + 1:]
        orientation = (enew, src_id, tgt_id) + rest
    else:
        sign = ONE
        new_gen = src_id  # the type-1 piece; the type-0 residual is not a generator
        orientation = (enew, new_gen) + g.orientation

    inputs = g.inputs
    gr = PropGraph(tuple(verts), orientation, inputs, outs, g.markings, g.dim_d)
    return gr, sign


# ---------------------------------------------------------------------------
# PROP composition and disjoint union.


def _relabel(g: PropGraph, vfn, efn) -> PropGraph:
    verts = tuple((vfn(v), n, tuple((efn(e), end) for e, end in cyc)) for v, n, cyc in g.vertices)
    vset = set(g.vertex_ids())
    orientation = tuple(vfn(x) if x in vset else efn(x) for x in g.orientation)
    inputs = tuple(vfn(v) for v in g.inputs)
    outputs = None
    if g.outputs is not None:
        outputs = tuple((vfn(c[0]), "v") if c[1] == "v" else (efn(c[0]), c[1]) for c in g.outputs)
    markings = None
    if g.markings is not None:
        markings = Markings(
            tuple((vfn(v), efn(e)) for v, e in g.markings.marked),
            tuple(vfn(v) for v in g.markings.legs),
            tuple(vfn(v) for v in g.markings.units),
        )
    return PropGraph(verts, orientation, inputs, outputs, markings, g.dim_d)


def _relabel_disjoint(g: PropGraph, used: set) -> PropGraph:
    vmap = {}
    emap = {}
    work = set(used)
    for v in g.vertex_ids():
        vmap[v] = _fresh(work, "q")
    for e in g.edge_ids():
        emap[e] = _fresh(work, "y")
    return _relabel(g, vmap.__getitem__, emap.__getitem__)


def disjoint_union(g1: PropGraph, g2: PropGraph) -> PropGraph:
    """Side-by-side union; enumerations and orientation concatenate."""
    if g1.dim_d != g2.dim_d:
        raise ValueError("dimension mismatch")
    g2r = _relabel_disjoint(g2, set(g1.vertex_ids()) | set(g1.edge_ids()))
    m1 = g1.markings or Markings()
    m2 = g2r.markings or Markings()
    markings = None
    if g1.markings is not None or g2r.markings is not None:
        markings = Markings(m1.marked + m2.marked, m1.legs + m2.legs, m1.units + m2.units)
    return PropGraph(
        g1.vertices + g2r.vertices,
        g1.orientation + g2r.orientation,
        g1.inputs + g2r.inputs,
        outputs_of(g1) + outputs_of(g2r),
        markings,
        g1.dim_d,
    )


def _attachments(m: int, K: int):
    """Cyclic-order-preserving placements of m marks into K corner gaps.

    Yields per-attachment lists `where` with where[t] in range(K+1) relative
    to the linearization cut at mark 0's own position: 0 is the tail of mark
    0's gap (right after it), q in 1..K-1 the later gaps, K the head of mark
    0's gap (right before it). Mark 0's gap is chosen separately.
    """
    for rest in combinations_with_replacement(range(K + 1), m - 1):
        yield rest


def compose(g1: PropGraph, g2: PropGraph) -> GraphSum:
    """Feed g1's outputs into g2's inputs, summing over all gluings.

    For each matched pair, the input's incoming edges are re-targeted onto
    corners along the output's boundary cycle in every cyclic-order-preserving
    way; gluing onto a trivial-vertex output is the unique identity-style
    attachment. Orientation words concatenate. Marked graphs additionally pin
    each input's marked edge to the matched output's leg corner, consuming
    the leg.
    """
    if g1.dim_d != g2.dim_d:
        raise ValueError("dimension mismatch")
    marked_mode = g1.markings is not None or g2.markings is not None
    if marked_mode and (g1.markings is None or g2.markings is None):
        raise ValueError("cannot compose a marked graph with an unmarked one")
    out1 = outputs_of(g1)
    if len(out1) != len(g2.inputs):
        raise ValueError("composition arity mismatch: %d outputs vs %d inputs" % (len(out1), len(g2.inputs)))
    g2r = _relabel_disjoint(g2, set(g1.vertex_ids()) | set(g1.edge_ids()))

    cycles1 = boundary_cycles(g1)
    rep_cycle = {}
    for cyc in cycles1:
        for c in cyc:
            rep_cycle[c] = cyc
    if marked_mode:
        return _compose_marked(g1, g2r, out1, rep_cycle)

    per_input = []
    for k, vin in enumerate(g2r.inputs):
        edges = g2r.cyc(vin)
        m = len(edges)
        rep = out1[k]
        choices = []
        if m == 0:
            choices.append(("none",))
        elif rep[1] == "v":
            choices.append(("point", rep[0], edges))
        else:
            corners = rep_cycle[rep]
            K = len(corners)
            for g0 in range(K):
                for rest in _attachments(m, K):
                    choices.append(("corners", corners, g0, edges, rest))
        per_input.append(choices)

    total: list[tuple[PropGraph, Scalar]] = []
    for combo in _product(per_input):
        total.append((_glue(g1, g2r, combo), ONE))
    return GraphSum(total)


def _product(lists):
    if not lists:
        yield []
        return
    for head in lists[0]:
        for tail in _product(lists[1:]):
            yield [head] + tail


def _glue(g1: PropGraph, g2r: PropGraph, combo) -> PropGraph:
    insert_after: dict[Half, list[Half]] = {}
    point_fill: dict[str, tuple] = {}
    for choice in combo:
        if choice[0] == "none":
            continue
        if choice[0] == "point":
            _, tvid, edges = choice
            assert tvid not in point_fill, "two inputs glued to one trivial output"
            point_fill[tvid] = tuple(edges)
            continue
        _, corners, g0, edges, rest = choice
        K = len(corners)
        m = len(edges)
        gap: dict[int, list[Half]] = {q: [] for q in range(K + 1)}
        for t in range(1, m):
            gap[rest[t - 1]].append(edges[t])
        seq0 = gap[K] + [edges[0]] + gap[0]
        insert_after.setdefault(corners[g0], []).extend(seq0)
        for q in range(1, K):
            c = corners[(g0 + q) % K]
            insert_after.setdefault(c, []).extend(gap[q])

    dead = set(g2r.inputs)
    verts = []
    for vid, n, cyc in g1.vertices:
        if vid in point_fill:
            assert not cyc
            verts.append((vid, n, point_fill[vid]))
            continue
        new = []
        for tok in cyc:
            new.append(tok)
            new.extend(insert_after.get(tok, ()))
        verts.append((vid, n, tuple(new)))
    for vid, n, cyc in g2r.vertices:
        if vid not in dead:
            verts.append((vid, n, cyc))

    outs2 = outputs_of(g2r)
    out1 = outputs_of(g1)
    outputs = []
    for c in outs2:
        if c[1] == "v" and c[0] in dead:
            outputs.append(out1[g2r.inputs.index(c[0])])
        else:
            outputs.append(c)
    return PropGraph(
        tuple(verts),
        g1.orientation + g2r.orientation,
        g1.inputs,
        tuple(outputs),
        None,
        g1.dim_d,
    )


def _compose_marked(g1: PropGraph, g2r: PropGraph, out1, rep_cycle) -> GraphSum:
    mk1 = g1.markings
    mk2 = g2r.markings
    if len(mk1.legs) != len(out1):
        raise ValueError("marked composition needs one leg per output of the first graph")
    unit_edges2 = {g2r.cyc(u)[0][0] for u in mk2.units if g2r.cyc(u)}
    for vin in g2r.inputs:
        if g2r.cyc(vin):
            e = mk2.marked_edge(vin)
            if e is None:
                raise ValueError("input %r lacks a marked edge" % vin)
            if e in unit_edges2:
                # Re-targeting a unit edge needs the unit relations; out of scope.
                raise NotImplementedError("composing a unit-marked input is not supported")

    # Remove g1's legs. Both tokens of a leg edge vanish, and each input's
    # marked edge will be pinned into the corner slot its leg occupied.
    drop_tokens = set()
    dead1 = set()
    for leg in mk1.legs:
        e = g1.cyc(leg)[0][0]
        drop_tokens.add((e, IN))
        drop_tokens.add((e, OUT))
        dead1.add(leg)
    pins: list[Corner] = []
    for leg in mk1.legs:
        e = g1.cyc(leg)[0][0]
        w, pos = g1._tok[(e, IN)]
        cycw = g1._cyc[w]
        surviving = [t for t in cycw if t not in drop_tokens]
        if not surviving:
            pins.append((w, "v"))  # target reverts to a bare point
            continue
        back = (pos - 1) % len(cycw)
        while cycw[back] in drop_tokens:
            back = (back - 1) % len(cycw)
        pins.append(cycw[back])
    if len(set(pins)) != len(pins):
        raise NotImplementedError("adjacent output legs share a corner slot")

    per_input = []
    for k, vin in enumerate(g2r.inputs):
        edges = g2r.cyc(vin)
        m = len(edges)
        if m == 0:
            per_input.append([("none",)])
            continue
        e_marked = mk2.marked_edge(vin)
        r = [t[0] for t in edges].index(e_marked)
        lin = tuple(edges[r:] + edges[:r])  # marked edge first
        pin = pins[k]
        if pin[1] == "v":
            per_input.append([("point", pin[0], lin)])
            continue
        corners = tuple(c for c in rep_cycle[out1[k]] if c not in drop_tokens)
        assert pin in corners, "output leg corner vanished"
        g0 = corners.index(pin)
        per_input.append([("corners", corners, g0, lin, rest) for rest in _attachments(m, len(corners))])

    new_outs = tuple(pins)
    g1_stripped = _strip(g1, dead1, drop_tokens, new_outs)
    markings = Markings(mk1.marked, mk2.legs, mk1.units)
    total: list[tuple[PropGraph, Scalar]] = []
    for combo in _product(per_input):
        gr = _glue(g1_stripped, g2r, combo)
        total.append((PropGraph(gr.vertices, gr.orientation, gr.inputs, gr.outputs, markings, gr.dim_d), ONE))
    return GraphSum(total)


def _strip(g: PropGraph, dead_vertices: set, drop_tokens: set, new_outputs) -> PropGraph:
    verts = []
    for vid, n, cyc in g.vertices:
        if vid in dead_vertices:
            continue
        verts.append((vid, n, tuple(t for t in cyc if t not in drop_tokens)))
    mk = g.markings
    markings = Markings(mk.marked, (), mk.units) if mk else None
    # Legs and their edges never sit in the orientation word or the inputs.
    return PropGraph(tuple(verts), g.orientation, g.inputs, new_outputs, markings, g.dim_d)


# ---------------------------------------------------------------------------
# Stock graphs.


def identity_graph(dim_d: int = 0) -> PropGraph:
    """One trivial vertex: one input, one output, the composition unit."""
    return graph([("t0", 0, [])], orientation=[], inputs=["t0"], outputs=[("t0", "v")], dim_d=dim_d)


def identity_wires(r: int, dim_d: int = 0) -> PropGraph:
    g = identity_graph(dim_d)
    for _ in range(r - 1):
        g = disjoint_union(g, identity_graph(dim_d))
    return g


def corolla(n: int, dim_d: int = 0) -> PropGraph:
    """One type-n vertex with its n edges feeding n one-edge inputs.

    The orientation is vertex first, then the edges in the cyclic source
    order. corolla(2) is the bracket graph; corolla(3) is the Jacobi
    homotopy vertex.
    """
    assert n >= 2, "a lone type-1 vertex cannot satisfy the fan-in rule"
    es = ["e%d" % i for i in range(n)]
    verts = [("w", n, [(e, OUT) for e in es])]
    for i, e in enumerate(es):
        verts.append(("t%d" % i, 0, [(e, IN)]))
    return graph(verts, orientation=["w"] + es, inputs=["t%d" % i for i in range(n)],
                 outputs=None, dim_d=dim_d)


# ---------------------------------------------------------------------------
# DOT export.


def dot_export(g: PropGraph) -> str:
    """Deterministic DOT text; slot indices ride along as port labels."""
    lines = ["digraph ribbon {"]
    inputs = {v: i for i, v in enumerate(g.inputs)}
    legs = set(g.leg_ids())
    units = set(g.unit_ids())
    marked = {e for _, e in (g.markings.marked if g.markings else ())}
    for vid, n, _ in sorted(g.vertices):
        if vid in legs:
            label = "leg"
        elif vid in units:
            label = "unit"
        elif vid in inputs:
            label = "in%d:type0" % inputs[vid]
        else:
            label = "type%d" % n
        lines.append('  "%s" [label="%s %s"];' % (vid, vid, label))
    for e in g.edge_ids():
        sv, si = g._tok[(e, OUT)]
        tv, ti = g._tok[(e, IN)]
        style = ' style=bold color=red' if e in marked else ""
        lines.append('  "%s" -> "%s" [label="%s" taillabel="%d" headlabel="%d"%s];' % (sv, tv, e, si, ti, style))
    lines.append("}")
    return "\n".join(lines) + "\n"
