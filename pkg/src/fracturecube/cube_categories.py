"""Object-level category of fracture diagrams and its decomposition.

A fracture object over the family indices 1..n is a punctured-cube
diagram whose vertex at S is local for the smallest index of S and
whose edges in the minimal direction are literally localization units.
Such objects are equivalent to single local complexes: the limit
functor and the fracture-diagram functor are mutually inverse up to
quasi-isomorphism, verified here vertex by vertex.

The decomposition combinatorics splits the index poset above a subset
into a gap part between the two minima and an anchored part above the
larger minimum; diagrams push forward along that splitting.
"""

from __future__ import annotations

from dataclasses import dataclass

from .exact_linalg import ExactMatrix, InputError
from .fracture import LocalizationFamily, build_fracture_cube, is_e_local
from .holim import PosetDiagram, homotopy_limit, punctured_restriction
from .posets import FinitePoset, PosetMap, canonical_subset, subset_poset
from .sorted_complex import (
    ComplexMap,
    LocalizationTable,
    SortedComplex,
    SortedMap,
    apply_localization,
    apply_localization_chain_map,
    apply_tables,
    canonical_unit,
    is_quasi_iso,
)


# --- provenance-traced localization ---------------------------------------------

def localize_with_trace(x: SortedComplex, tables):
    """Apply tables while remembering which original summand survives where."""
    trace = {n: tuple(range(len(m.summands))) for n, m in x.modules.items()}
    cur = x
    for t in tables:
        nxt = {}
        for n, m in cur.modules.items():
            kept = [i for i, (s, _) in enumerate(m.summands)
                    if t.apply_sort(s).kind != "Zero"]
            nxt[n] = tuple(trace[n][i] for i in kept)
        cur = apply_localization(cur, t)
        trace = {n: nxt.get(n, ()) for n in cur.modules}
    return cur, trace


def trace_unit(base: SortedComplex, fam: LocalizationFamily, small, large) -> ComplexMap:
    """Canonical map between two subset localizations of one base complex.

    small and large are index subsets with small contained in large; the
    map is the identity on every summand surviving both, which is the
    unit insertion for the extra indices under the outer localizations.
    """
    small = canonical_subset(small)
    large = canonical_subset(large)
    if not set(small) <= set(large):
        raise InputError("unit needs nested index subsets")
    src, tr_s = localize_with_trace(base, fam.tables_for(small))
    tgt, tr_t = localize_with_trace(base, fam.tables_for(large))
    maps = {}
    for n, m in tgt.modules.items():
        src_pos = {orig: i for i, orig in enumerate(tr_s.get(n, ()))}
        blocks = {}
        for j, orig in enumerate(tr_t[n]):
            i = src_pos[orig]
            blocks[(i, j)] = ExactMatrix.identity(src.module(n).rank(i))
        maps[n] = SortedMap(src.module(n), tgt.module(n), blocks)
    return ComplexMap(src, tgt, maps)


def localize_chain_map_tables(f: ComplexMap, tables) -> ComplexMap:
    for t in tables:
        f = apply_localization_chain_map(f, t)
    return f


# --- fracture objects -----------------------------------------------------------

@dataclass
class FractureObject:
    """Punctured-cube diagram subject to locality and unit-edge conditions."""

    diagram: PosetDiagram
    family: LocalizationFamily
    labels: tuple = ()

    def __post_init__(self):
        if not self.labels:
            object.__setattr__(self, "labels", self.family.labels())
        self.labels = canonical_subset(self.labels)
        expect = subset_poset(self.labels, punctured=True)
        if self.diagram.shape.elements != expect.elements:
            raise InputError(
                f"shape is not the punctured subset poset on {self.labels}")

    def vertex(self, s) -> SortedComplex:
        return self.diagram.vertex(canonical_subset(s))


@dataclass(frozen=True)
class ObjectViolation:
    location: str
    message: str


def _is_local(c: SortedComplex, table: LocalizationTable) -> bool:
    return apply_localization(c, table) == c


def validate_fracture_object(g: FractureObject) -> list:
    """Check the locality and unit-edge conditions, peeling minima.

    Returns a list of violations; empty means the object is valid.
    """
    fam = g.family
    out = []
    for s in g.diagram.shape.elements:
        table = fam.table(min(s))
        if not _is_local(g.vertex(s), table):
            out.append(ObjectViolation(f"vertex {s}",
                                       f"not fixed by {table.label()}"))

    def peel(labels):
        if len(labels) <= 1:
            return
        i = labels[0]
        rest = labels[1:]
        table = fam.table(i)
        rest_sets = [s for s in subset_poset(rest, punctured=True).elements]
        for v in rest_sets:
            iv = canonical_subset((i,) + v)
            want = apply_localization(g.vertex(v), table)
            if g.vertex(iv) != want:
                out.append(ObjectViolation(
                    f"vertex {iv}",
                    f"must equal the {table.label()} localization of {v}"))
                continue
            unit = canonical_unit(g.vertex(v), table)
            if g.diagram.hom(v, iv) != unit:
                out.append(ObjectViolation(
                    f"edge {v} -> {iv}", "must be the localization unit"))
        for (v, w) in subset_poset(rest, punctured=True).covering_pairs():
            iv = canonical_subset((i,) + v)
            iw = canonical_subset((i,) + w)
            want = apply_localization_chain_map(g.diagram.hom(v, w), table)
            if g.diagram.hom(iv, iw) != want:
                out.append(ObjectViolation(
                    f"edge {iv} -> {iw}",
                    f"must be the {table.label()} localization of {v} -> {w}"))
        peel(rest)

    peel(g.labels)
    return out


# --- generators (the free data of an object) --------------------------------------

@dataclass
class GeneratorData:
    """One local complex per index and one mixing map per index pair.

    complexes[i] must be fixed by the i-th table; maps[(i, j)] for i < j
    goes from complexes[i] into the i-localization of complexes[j].
    """

    complexes: dict
    maps: dict


def build_from_generators(gen: GeneratorData, fam: LocalizationFamily,
                          labels=None) -> FractureObject:
    labels = canonical_subset(labels if labels is not None else fam.labels())
    for i in labels:
        if i not in gen.complexes:
            raise InputError(f"missing generator complex at index {i}")
        if not _is_local(gen.complexes[i], fam.table(i)):
            raise InputError(f"generator {i} is not {fam.table(i).label()}-local")
    for i in labels:
        for j in labels:
            if i < j:
                f = gen.maps.get((i, j))
                if f is None:
                    raise InputError(f"missing mixing map ({i}, {j})")
                if f.source != gen.complexes[i]:
                    raise InputError(f"mixing map ({i}, {j}) has wrong source")
                if f.target != apply_localization(gen.complexes[j], fam.table(i)):
                    raise InputError(f"mixing map ({i}, {j}) has wrong target")

    shape = subset_poset(labels, punctured=True)
    verts = {}
    for s in shape.elements:
        m = max(s)
        verts[s] = apply_tables(gen.complexes[m],
                                fam.tables_for(tuple(x for x in s if x != m)))
    edges = {}
    for (s, s2) in shape.covering_pairs():
        (j,) = set(s2) - set(s)
        m = max(s)
        if j < m:
            edges[(s, s2)] = trace_unit(
                gen.complexes[m], fam,
                tuple(x for x in s if x != m),
                tuple(x for x in s2 if x != m))
        else:
            f = gen.maps[(m, j)]
            edges[(s, s2)] = localize_chain_map_tables(
                f, fam.tables_for(tuple(x for x in s if x != m)))
    diagram = PosetDiagram(shape, verts, edges, check=True)
    obj = FractureObject(diagram, fam, labels)
    bad = validate_fracture_object(obj)
    if bad:
        raise InputError(f"generators violate the object conditions: "
                         f"{bad[0].location}: {bad[0].message}")
    return obj


# --- the mutually inverse functors -------------------------------------------------

def fracture_limit(g: FractureObject) -> SortedComplex:
    """Homotopy limit of a fracture object; the result is jointly local."""
    hl = homotopy_limit(g.diagram)
    for s in hl.complex.sorts():
        if s.kind == "Z":
            raise InputError("limit of a fracture object exposed a raw Z sort")
    return hl.complex


def fracture_diagram(x: SortedComplex, fam: LocalizationFamily) -> FractureObject:
    """Restrict the inductive localization cube of a local complex."""
    if not is_e_local(x, fam):
        raise InputError("input complex is not local for the family")
    cube = build_fracture_cube(x, fam)
    obj = FractureObject(punctured_restriction(cube), fam)
    bad = validate_fracture_object(obj)
    if bad:
        raise InputError(f"internal error: produced invalid object: {bad[0]}")
    return obj


def roundtrip_check(obj, fam: LocalizationFamily) -> bool:
    """Verify the limit and diagram functors invert each other on an object.

    For a complex, rebuild the diagram and compare its limit with the
    input along the canonical map. For a diagram, take the limit and
    compare the rebuilt diagram vertex by vertex along the localized
    projection legs.
    """
    if isinstance(obj, SortedComplex):
        g = fracture_diagram(obj, fam)
        hl = homotopy_limit(g.diagram)
        legs = {s: trace_unit(obj, fam, (), s) for s in g.diagram.shape.elements}
        eta = hl.cone_map(obj, legs)
        return is_quasi_iso(eta, fam.primes).acyclic
    if isinstance(obj, FractureObject):
        hl = homotopy_limit(obj.diagram)
        limit = hl.complex
        for s in obj.diagram.shape.elements:
            top = max(s)
            comparison = localize_chain_map_tables(
                hl.cone.legs[(top,)], fam.tables_for(s))
            if comparison.target != obj.vertex(s):
                return False
            if not is_quasi_iso(comparison, fam.primes).acyclic:
                return False
        return True
    raise InputError(f"cannot round-trip {type(obj).__name__}")


# --- index combinatorics ------------------------------------------------------------

def _check_containment(s, s2, t):
    s, s2, t = canonical_subset(s), canonical_subset(s2), canonical_subset(t)
    if not s:
        raise InputError("the anchor subset must be nonempty")
    if not (set(s) <= set(s2) <= set(t)):
        raise InputError("need anchor within outer subset within the index set")
    return s, s2, t


def anchored_supersets(s, t) -> FinitePoset:
    """Subsets of t containing s and sharing its minimum, by inclusion."""
    s, _, t = _check_containment(s, s, t)
    free = [x for x in t if x > min(s) and x not in s]
    elems = [canonical_subset(s + u) for u in _all_subsets(free)]
    elems.sort(key=lambda e: (len(e), e))
    index = {e: i for i, e in enumerate(elems)}
    up = [{index[f] for f in elems if set(e) <= set(f)} for e in elems]
    return FinitePoset._trusted(elems, up)


def gap_subsets(s, s2, t) -> FinitePoset:
    """Subsets of the integer gap between the two minima, forced on s2.

    The gap runs from min(s2) inclusive to min(s) exclusive; every
    member must contain the part of s2 lying in the gap.
    """
    s, s2, t = _check_containment(s, s2, t)
    lo, hi = min(s2), min(s)
    interval = [x for x in t if lo <= x < hi]
    forced = tuple(x for x in s2 if lo <= x < hi)
    free = [x for x in interval if x not in forced]
    elems = [canonical_subset(forced + u) for u in _all_subsets(free)]
    elems.sort(key=lambda e: (len(e), e))
    index = {e: i for i, e in enumerate(elems)}
    up = [{index[f] for f in elems if set(e) <= set(f)} for e in elems]
    return FinitePoset._trusted(elems, up)


def _all_subsets(xs):
    out = [()]
    for x in xs:
        out += [u + (x,) for u in out]
    return out


def anchor_split(s, s2, t):
    """Split the outer anchored poset into gap times anchored parts.

    The forward map sends U to its gap part paired with its part at or
    above min(s); union of components inverts it. The image inside the
    product consists of the pairs whose anchored component contains the
    tail of the outer subset, so the inverse is returned on that image
    subposet. The image is the whole product exactly when everything the
    outer subset adds lies inside the gap interval; see
    anchor_split_onto_product.
    """
    s, s2, t = _check_containment(s, s2, t)
    lo, hi = min(s2), min(s)
    outer = anchored_supersets(s2, t)
    prod = gap_subsets(s, s2, t).product(anchored_supersets(s, t))
    tail = set(x for x in s2 if x >= hi)
    image = prod.subposet([(v, w) for (v, w) in prod.elements
                           if tail <= set(w)])

    def split(u):
        return (tuple(x for x in u if lo <= x < hi),
                tuple(x for x in u if x >= hi))

    fwd = PosetMap(outer, prod, {u: split(u) for u in outer.elements})
    inv = PosetMap(image, outer,
                   {(v, w): canonical_subset(v + w) for (v, w) in image.elements})
    return fwd, inv


def anchor_split_onto_product(s, s2, t) -> bool:
    """Whether the splitting hits the whole product poset."""
    s, s2, t = _check_containment(s, s2, t)
    hi = min(s)
    return all(x < hi for x in set(s2) - set(s))


# --- diagram functors on objects -----------------------------------------------------

def diagram_functor(s, s2, x: PosetDiagram, fam: LocalizationFamily) -> PosetDiagram:
    """Push a diagram on the anchored poset of s to the one of s2.

    On a vertex U the value is the gap localization of the value at the
    part of U at or above min(s); output vertices are local for the
    smaller minimum.
    """
    t = fam.labels()
    s, s2, t = _check_containment(s, s2, t)
    table_min = fam.table(min(s))
    for u in x.shape.elements:
        if not _is_local(x.vertex(u), table_min):
            raise InputError(f"input vertex {u} is not local at index {min(s)}")
    lo, hi = min(s2), min(s)
    outer = anchored_supersets(s2, t)
    if x.shape.elements != anchored_supersets(s, t).elements:
        raise InputError("input diagram has the wrong shape")

    def gap(u):
        return tuple(v for v in u if lo <= v < hi)

    def upper(u):
        return tuple(v for v in u if v >= hi)

    verts = {u: apply_tables(x.vertex(upper(u)), fam.tables_for(gap(u)))
             for u in outer.elements}
    edges = {}
    for (u, w) in outer.covering_pairs():
        step = localize_chain_map_tables(x.hom(upper(u), upper(w)),
                                         fam.tables_for(gap(u)))
        widen = trace_unit(x.vertex(upper(w)), fam, gap(u), gap(w))
        edges[(u, w)] = widen.compose(step)
    out = PosetDiagram(outer, verts, edges, check=True)
    table_out = fam.table(min(s2))
    for u in out.shape.elements:
        if not _is_local(out.vertex(u), table_out):
            raise InputError(f"output vertex {u} failed locality at {min(s2)}")
    return out


def anchored_cover_identity(n: int) -> bool:
    """The anchored posets of the two-or-more element sets cover the
    punctured anchored poset of the singleton, compatibly on overlaps."""
    t = tuple(range(1, n + 1))
    one = anchored_supersets((1,), t)
    index = [u for u in one.elements if u != (1,)]
    union = set()
    for s in index:
        union |= set(anchored_supersets(s, t).elements)
    if union != set(index):
        return False
    for s1 in index:
        for s2 in index:
            meet = set(anchored_supersets(s1, t).elements) & \
                set(anchored_supersets(s2, t).elements)
            if meet != set(anchored_supersets(canonical_subset(s1 + s2), t).elements):
                return False
    return True


# --- split and glue -----------------------------------------------------------------

@dataclass
class SplitData:
    top: FractureObject      # the face avoiding the first index
    bottom: PosetDiagram     # the face anchored at the first index
    witness: dict            # vertex U -> identity-shaped comparison map


def split_fracture_object(z: FractureObject) -> SplitData:
    """Cut an object into its first-index face, the rest, and the glue.

    The bottom face consists of the vertices containing the first
    index; away from the bare singleton it is literally the first
    localization of the top face, witnessed by identity maps.
    """
    fam = z.family
    labels = z.labels
    if len(labels) < 2:
        raise InputError("splitting needs at least two indices")
    first = labels[0]
    rest = labels[1:]
    top = FractureObject(
        z.diagram.restrict(subset_poset(rest, punctured=True).elements),
        fam, rest)
    bottom_elems = anchored_supersets((first,), labels).elements
    bottom = z.diagram.restrict(bottom_elems)
    witness = {}
    table = fam.table(first)
    for u in bottom_elems:
        if u == (first,):
            continue
        expect = apply_localization(top.vertex(tuple(x for x in u if x != first)),
                                    table)
        if bottom.vertex(u) != expect:
            raise InputError(f"object is not split-ready at {u}")
        witness[u] = ComplexMap.identity(bottom.vertex(u))
    return SplitData(top, bottom, witness)


def glue_fracture_object(split: SplitData, fam: LocalizationFamily) -> FractureObject:
    """Reassemble an object from a split; inverse to splitting on the nose.

    The witness must consist of identity-shaped isomorphisms so that the
    glued diagram stays strictly functorial; a genuine quasi-isomorphism
    witness would need a replacement step this model does not perform.
    """
    top = split.top
    rest = top.labels
    first_candidates = [i for i in fam.labels() if i not in rest]
    if len(first_candidates) != 1 or min(fam.labels()) not in first_candidates:
        raise InputError("glue expects the top face to omit exactly the "
                         "first family index")
    first = first_candidates[0]
    labels = canonical_subset((first,) + rest)
    table = fam.table(first)
    bad = validate_fracture_object(top)
    if bad:
        raise InputError(f"top face invalid: {bad[0].location}: {bad[0].message}")
    for u, w in split.witness.items():
        expect = apply_localization(
            top.vertex(tuple(x for x in u if x != first)), table)
        if not (w.source == split.bottom.vertex(u) == expect == w.target
                and w == ComplexMap.identity(expect)):
            raise InputError(f"witness at {u} is not an identity-shaped "
                             "isomorphism onto the localized top face")
    for u in split.bottom.shape.elements:
        if u != (first,) and u not in split.witness:
            raise InputError(f"missing witness at {u}")
    shape = subset_poset(labels, punctured=True)
    verts = {}
    edges = {}
    for s in shape.elements:
        if first in s:
            verts[s] = split.bottom.vertex(s)
        else:
            verts[s] = top.vertex(s)
    for (a, b) in shape.covering_pairs():
        if first in a:
            edges[(a, b)] = split.bottom.hom(a, b)
        elif first in b:
            unit = canonical_unit(top.vertex(a), table)
            edges[(a, b)] = ComplexMap(verts[a], verts[b], unit.maps)
        else:
            edges[(a, b)] = top.diagram.hom(a, b)
    diagram = PosetDiagram(shape, verts, edges, check=True)
    obj = FractureObject(diagram, fam, labels)
    bad = validate_fracture_object(obj)
    if bad:
        raise InputError(f"glued object invalid: {bad[0].location}: "
                         f"{bad[0].message}")
    return obj
