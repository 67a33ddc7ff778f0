"""The inductive fracture cube and its exact verification.

The shipped localization family is rationalization first, then one
completion per configured prime, in increasing order. Composites taken
with the larger index applied first vanish on every sort, which is the
orthogonality hypothesis the fracture cube needs; the reverse order
survives (completion then rationalization leaves a Qp line), which is
why the family ordering matters.
"""

from __future__ import annotations

from dataclasses import dataclass

from .exact_linalg import InputError, _is_probable_prime
from .holim import (
    HolimResult,
    PosetDiagram,
    homotopy_limit,
    is_cartesian,
    limit_extended_cube,
    localize_diagram,
    punctured_restriction,
    tfib_direction_cube,
)
from .posets import canonical_subset, subset_poset
from .sorted_complex import (
    LOCALIZE,
    RATIONALIZE,
    ComplexMap,
    LocalizationTable,
    SortedComplex,
    apply_localization,
    apply_tables,
    canonical_unit,
    complete,
    composite_kills_all,
    homology_p_local,
    is_acyclic,
    is_quasi_iso,
    sum_inclusions,
    unit_of_tables,
    validate,
)


@dataclass(frozen=True)
class LocalizationFamily:
    """Ordered family of localization tables plus the joint localization.

    Index 1 is rationalization; index i >= 2 completes at the (i-1)-st
    configured prime. The union localization inverts every prime outside
    the configured set and plays the role of the ambient local category.
    """

    primes: tuple

    def __post_init__(self):
        ps = tuple(self.primes)
        if list(ps) != sorted(set(ps)):
            raise InputError("primes must be strictly increasing and distinct")
        for p in ps:
            if not _is_probable_prime(p):
                raise InputError(f"{p} is not prime")
        for j in range(1, self.size + 1):
            for i in range(1, j):
                if not composite_kills_all(self.table(j), self.table(i), ps):
                    raise InputError(
                        f"family is not orthogonal at pair ({j}, {i})")

    @property
    def size(self) -> int:
        return len(self.primes) + 1

    def labels(self) -> tuple:
        return tuple(range(1, self.size + 1))

    def table(self, i: int) -> LocalizationTable:
        if i == 1:
            return RATIONALIZE
        if 2 <= i <= self.size:
            return complete(self.primes[i - 2])
        raise InputError(f"family index {i} out of range 1..{self.size}")

    def tables_for(self, subset) -> list:
        """Tables for L_S, listed in application order (largest index first)."""
        return [self.table(i) for i in sorted(subset, reverse=True)]

    @property
    def e_table(self) -> LocalizationTable:
        return LOCALIZE

    def localize_subset(self, x: SortedComplex, subset) -> SortedComplex:
        return apply_tables(x, self.tables_for(subset))


def e_localize(x: SortedComplex, fam: LocalizationFamily) -> SortedComplex:
    """Localization at the whole family: invert all primes outside P."""
    return apply_localization(x, fam.e_table)


def is_e_local(x: SortedComplex, fam: LocalizationFamily) -> bool:
    return e_localize(x, fam) == x


def build_fracture_cube(x: SortedComplex, fam: LocalizationFamily) -> PosetDiagram:
    """The inductive cube of localizations of x over the subsets of 1..n.

    Base case is the unit x -> L_1 x; each further stage maps the cube
    already built to its localization at the next smaller index, along
    the units. The vertex at S comes out as the ordered composite
    localization of x at S, which is asserted.
    """
    bad = validate(x, fam.primes)
    if bad:
        raise InputError(f"input complex invalid: {bad[0].message}")
    cube = _build(x, fam, list(fam.labels()))
    for s in cube.shape.elements:
        if cube.vertex(s) != fam.localize_subset(x, s):
            raise InputError(f"vertex identity fails at {s!r}")
    return cube


def _build(x: SortedComplex, fam: LocalizationFamily, labels: list) -> PosetDiagram:
    first = labels[0]
    table = fam.table(first)
    if len(labels) == 1:
        shape = subset_poset((first,), punctured=False)
        unit = canonical_unit(x, table)
        return PosetDiagram(shape, {(): x, (first,): unit.target},
                            {((), (first,)): unit}, check=False)
    sub = _build(x, fam, labels[1:])
    loc = localize_diagram(sub, table)
    shape = subset_poset(labels, punctured=False)
    verts = {}
    edges = {}
    for s in sub.shape.elements:
        s2 = canonical_subset(s + (first,))
        verts[s] = sub.vertex(s)
        verts[s2] = loc.vertex(s)
        edges[(s, s2)] = canonical_unit(sub.vertex(s), table)
    for (a, b) in sub.shape.covering_pairs():
        a2 = canonical_subset(a + (first,))
        b2 = canonical_subset(b + (first,))
        edges[(a, b)] = sub.edges[(a, b)]
        edges[(a2, b2)] = loc.edges[(a, b)]
    return PosetDiagram(shape, verts, edges, check=True)


@dataclass
class ComparisonData:
    """The canonical map from the joint localization into the punctured limit."""

    source: SortedComplex
    limit: SortedComplex
    eta: ComplexMap
    legs: dict  # family index -> ComplexMap into the index's localization

    def leg_compatibility(self, holim_result: HolimResult) -> bool:
        for i, leg in self.legs.items():
            if holim_result.cone.legs[(i,)].compose(self.eta) != leg:
                return False
        return True


def comparison_map(x: SortedComplex, fam: LocalizationFamily):
    """Assemble eta from the localization units through the limit cone."""
    cube = build_fracture_cube(x, fam)
    punct = punctured_restriction(cube)
    hl = homotopy_limit(punct)
    lx = e_localize(x, fam)
    legs = {}
    for s in punct.shape.elements:
        leg = unit_of_tables(lx, fam.tables_for(s))
        if leg.target != punct.vertex(s):
            raise InputError(f"cone leg at {s!r} misses the cube vertex")
        legs[s] = leg
    eta = hl.cone_map(lx, legs)
    data = ComparisonData(lx, hl.complex, eta,
                          {i: legs[(i,)] for i in fam.labels()})
    if not data.leg_compatibility(hl):
        raise InputError("eta does not restrict to the localization units")
    return data, hl


@dataclass
class FractureReport:
    verdict: bool
    checks: tuple  # residue checks from the quasi-isomorphism test
    limit_homology: dict  # degree -> AbelianInvariants of the localized input

    def describe(self) -> list:
        return [c.describe() for c in self.checks]


def verify_fracture(x: SortedComplex, fam: LocalizationFamily) -> FractureReport:
    """Check that the joint localization is the punctured-cube limit.

    The input must be a complex of free raw-Z modules so that the cone
    of the comparison map is P-locally sorted, where the residue
    verifier is complete.
    """
    for s in x.sorts():
        if s.kind != "Z":
            raise InputError("verify_fracture expects raw Z sorts; "
                             f"found {s}")
    data, _ = comparison_map(x, fam)
    rep = is_quasi_iso(data.eta, fam.primes)
    limit_hom = homology_p_local(data.source, fam.primes) if rep.acyclic else {}
    return FractureReport(rep.acyclic, rep.checks, limit_hom)


@dataclass
class CollapseReport:
    """Structural collapse of the localized limit-extended cube.

    cartesian: localization preserves the Cartesian extension.
    vanishing: vertices indexed by sets reaching below the index die.
    edge_equivalences: edges in the index direction become invertible.
    fiber_support: the direction fiber cube is concentrated at the corner.
    conclusion: the corner fiber itself dies, so the limit projects
    isomorphically onto the index's localization.
    """

    index: int
    cartesian: bool
    vanishing: dict
    edge_equivalences: dict
    fiber_support: dict
    conclusion: bool

    @property
    def passed(self) -> bool:
        return (self.cartesian and all(self.vanishing.values())
                and all(self.edge_equivalences.values())
                and all(self.fiber_support.values()) and self.conclusion)


def localization_collapse_check(x: SortedComplex, fam: LocalizationFamily,
                                i: int) -> CollapseReport:
    """Apply one family localization to the limit-extended cube and
    verify the three collapse properties plus the resulting equivalence."""
    if not 1 <= i <= fam.size:
        raise InputError(f"index {i} outside 1..{fam.size}")
    primes = fam.primes
    cube = build_fracture_cube(x, fam)
    punct = punctured_restriction(cube)
    ext = limit_extended_cube(punct)
    loc = localize_diagram(ext, fam.table(i))
    labels = fam.labels()

    cartesian = is_cartesian(loc, primes)
    vanishing = {}
    for s in loc.shape.elements:
        if s and min(s) < i:
            vanishing[s] = is_acyclic(loc.vertex(s), primes).acyclic
    edge_equivalences = {}
    for s in loc.shape.elements:
        if s and i not in s:
            s2 = canonical_subset(s + (i,))
            rep = is_quasi_iso(loc.hom(s, s2), primes)
            edge_equivalences[(s, s2)] = rep.acyclic
    rest = tuple(l for l in labels if l != i)
    fiber_cube = tfib_direction_cube(loc, rest)
    fiber_support = {}
    for s in fiber_cube.shape.elements:
        if s != ():
            fiber_support[s] = is_acyclic(fiber_cube.vertex(s), primes).acyclic
    conclusion = is_acyclic(fiber_cube.vertex(()), primes).acyclic
    return CollapseReport(i, cartesian, vanishing, edge_equivalences,
                          fiber_support, conclusion)


# --- the two styles of two-index pullback squares -----------------------------------

def rational_pair_square(x: SortedComplex, p: int) -> PosetDiagram:
    """The two-element family square at one prime, corner already local.

    Rationalization against p-completion, with the joint localization at
    the corner; Cartesian exactly because the fracture property holds.
    """
    fam = LocalizationFamily((p,))
    return build_fracture_cube(e_localize(x, fam), fam)


def completion_pair_square(x: SortedComplex, p: int, q: int) -> PosetDiagram:
    """The square of two completions at distinct primes.

    Both mixed composites vanish here, so the joint localization
    degenerates to the product of the two completions; the square has
    that product at the corner and the zero complex opposite.
    """
    if p == q:
        raise InputError("need two distinct primes")
    xp = apply_localization(x, complete(p))
    xq = apply_localization(x, complete(q))
    total, _, _, proj_p, proj_q = sum_inclusions(xp, xq)
    shape = subset_poset((1, 2), punctured=False)
    zero = SortedComplex.zero()
    verts = {(): total, (1,): xq, (2,): xp, (1, 2): zero}
    edges = {((), (1,)): proj_q, ((), (2,)): proj_p}
    return PosetDiagram(shape, verts, edges, check=True)
