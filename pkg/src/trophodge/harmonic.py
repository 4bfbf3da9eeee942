"""Exact harmonic superform bases and the Cech dimension oracle.

The harmonic (1,0) space of a curve consists of the edge-constant
Kirchhoff flows that vanish on infinite edges: on an infinite edge a
d''-closed coefficient is constant, regularity at infinity forces it to
vanish near -inf, and square-integrability rules out any other constant.
So the basis is the rational nullspace of the incidence matrix
restricted to finite-edge columns.  The (0,0) space is the constants,
and the Hodge star carries both to the complementary bidegrees: the
(0,1) basis is the starred (1,0) basis and the (1,1) space is spanned
by the Kahler form itself.

cech_cohomology assembles the finite Cech complex of the vertex-star
cover.  For the locally constant sheaf a star section is one real and
an edge overlap is one real.  For the sheaf of closed (1,0) forms a
star section at a vertex of degree >= 2 is a tuple of constants over
the incident edge-germs subject to Kirchhoff's law, a star at a
degree-one vertex admits only zero (regularity at infinity), and an
edge overlap is again one real.  A graph star cover has no triple
overlaps, so the complex stops at C^1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .curve import TropicalCurve, genus, incidence_matrix
from .exact import integerize, nullspace, rank
from .metric import KahlerForm
from .superform import Bidegree, Superform

__all__ = ["HarmonicBasis", "harmonic_basis", "betti", "cech_cohomology"]


@dataclass(frozen=True)
class HarmonicBasis:
    bidegree: Bidegree
    forms: tuple[Superform, ...]
    exact_coefficients: tuple[dict, ...] | None
    provenance: str

    @property
    def dimension(self) -> int:
        return len(self.forms)

    def as_dict(self) -> dict:
        if self.exact_coefficients is None:
            elements = [{"kahler-form": "1"}]
        else:
            elements = [
                {eid: str(c) for eid, c in sorted(coeffs.items())}
                for coeffs in self.exact_coefficients
            ]
        return {
            "bidegree": list(self.bidegree.as_tuple()),
            "dimension": self.dimension,
            "provenance": self.provenance,
            "elements": elements,
        }


def _constant_coefficient_form(curve: TropicalCurve, bidegree, coeffs: dict) -> Superform:
    return Superform.on_curve(curve, bidegree, coeffs)


def _flow_basis(curve: TropicalCurve) -> list[dict]:
    """Integer Kirchhoff flows spanning the cycle space of the finite part."""
    inc = incidence_matrix(curve)
    finite_ids = [e.id for e in curve.finite_edges()]
    finite_cols = [inc.edge_ids.index(eid) for eid in finite_ids]
    restricted = [[Fraction(row[j]) for j in finite_cols] for row in inc.matrix]
    kernel = nullspace(restricted, n_cols=len(finite_ids))
    basis = []
    for vec in kernel:
        ints = integerize(vec)
        basis.append({eid: Fraction(c) for eid, c in zip(finite_ids, ints)})
    return basis


def harmonic_basis(curve: TropicalCurve, g: KahlerForm | None, bidegree) -> HarmonicBasis:
    """Exact basis of the harmonic space of one bidegree.

    g is only consulted for bidegree (1,1), whose single basis element
    is the Kahler form.
    """
    bd = bidegree if isinstance(bidegree, Bidegree) else Bidegree(*bidegree)
    if bd.as_tuple() == (0, 0):
        coeffs = {e.id: Fraction(1) for e in curve.sorted_edges()}
        form = _constant_coefficient_form(curve, bd, coeffs)
        return HarmonicBasis(bd, (form,), (coeffs,), "constants")
    if bd.as_tuple() == (1, 0):
        tables = _flow_basis(curve)
        forms = tuple(_constant_coefficient_form(curve, bd, t) for t in tables)
        return HarmonicBasis(bd, forms, tuple(tables), "incidence-nullspace")
    if bd.as_tuple() == (0, 1):
        # star of the (1,0) basis: f d'x -> f d''x, coefficients unchanged
        tables = _flow_basis(curve)
        forms = tuple(_constant_coefficient_form(curve, bd, t) for t in tables)
        return HarmonicBasis(bd, forms, tuple(tables), "star-dual")
    if g is None:
        raise ValueError("the (1,1) harmonic basis is the Kahler form; pass g")
    form = Superform(Bidegree(1, 1), dict(g.weights))
    return HarmonicBasis(bd, (form,), None, "star-dual")


def betti(curve: TropicalCurve, q: int) -> int:
    """Topological Betti numbers of the underlying connected graph."""
    if q == 0:
        return 1 if curve.is_connected() else _component_count(curve)
    if q == 1:
        return genus(curve) if curve.is_connected() else len(curve.edges) - len(curve.vertices) + _component_count(curve)
    raise ValueError("a graph has cohomology only in degrees 0 and 1")


def _component_count(curve: TropicalCurve) -> int:
    parent = {v: v for v in curve.vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for e in curve.edges:
        a, b = find(e.tail), find(e.head)
        if a != b:
            parent[a] = b
    return len({find(v) for v in curve.vertices})


def cech_cohomology(curve: TropicalCurve, sheaf: str) -> tuple[int, int]:
    """(dim H^0, dim H^1) of the star-cover Cech complex of a sheaf.

    sheaf is "constants" for locally constant functions or "omega1" for
    d''-closed (1,0) forms.
    """
    if sheaf == "constants":
        return _cech_constants(curve)
    if sheaf == "omega1":
        return _cech_omega1(curve)
    raise ValueError(f"unknown sheaf {sheaf!r}")


def _cech_constants(curve: TropicalCurve) -> tuple[int, int]:
    vertices = curve.sorted_vertices()
    v_index = {v: j for j, v in enumerate(vertices)}
    edges = curve.sorted_edges()
    delta = []
    for e in edges:
        row = [Fraction(0)] * len(vertices)
        row[v_index[e.head]] += 1
        row[v_index[e.tail]] -= 1
        delta.append(row)
    r = rank(delta)
    h0 = len(vertices) - r
    h1 = len(edges) - r
    return h0, h1


def _cech_omega1(curve: TropicalCurve) -> tuple[int, int]:
    # C^0 coordinates: a basis of each star's Kirchhoff tuples.  At a
    # vertex of degree d >= 2 with ends (t_1, ..., t_d) the basis is
    # t_i - t_d for i < d; degree-one stars contribute nothing.
    ends_at: dict[str, list] = {}
    for v in curve.sorted_vertices():
        if curve.degree(v) >= 2:
            ends_at[v] = curve.edge_ends_at(v)

    columns = []  # (vertex, local basis index)
    for v, ends in ends_at.items():
        for i in range(len(ends) - 1):
            columns.append((v, i))

    edges = curve.sorted_edges()
    edge_row = {e.id: j for j, e in enumerate(edges)}
    delta = [[Fraction(0)] * len(columns) for _ in edges]

    for col, (v, i) in enumerate(columns):
        ends = ends_at[v]
        d = len(ends)
        # star section with vertex-local end values: +1 on end i, -1 on end d-1
        for end_index, value in ((i, 1), (d - 1, -1)):
            e, side = ends[end_index]
            # restriction to the edge overlap, written in the canonical
            # chart: +value from a head end, -value from a tail end; the
            # Cech sign is + for the head star and - for the tail star,
            # so both contributions enter the edge row as +value and
            # +value respectively.
            row = edge_row[e.id]
            if side == "head":
                delta[row][col] += value
            else:
                delta[row][col] += value

    dim_c0 = len(columns)
    dim_c1 = len(edges)
    r = rank(delta) if columns else 0
    return dim_c0 - r, dim_c1 - r
