"""Build tropical curves, validate them, and read off combinatorial invariants.

A compact connected tropical curve is a finite connected metric graph in
which an edge has infinite length exactly when it ends at a degree-one
vertex.  Each edge carries a canonical chart [-l, 0] (head at 0); an
infinite edge is [-inf, 0] with the leaf at -inf.
"""

import json

from trophodge import curves
from trophodge.curve import genus, incidence_matrix, parse_curve, serialize, validate

# the gallery: genus 0, 0, 1, 2, 3, 1
gallery = {
    "projective line": curves.projective_line(),
    "3-leg star": curves.star(3),
    "triangle": curves.triangle(),
    "theta graph": curves.theta_graph(),
    "K4": curves.k4(),
    "triangle with legs": curves.triangle_with_legs(),
}

print("curve            |V| |E| genus valid")
for name, curve in gallery.items():
    report = validate(curve)
    print(f"{name:18s} {len(curve.vertices):2d} {len(curve.edges):3d} {genus(curve):4d}  {report.passed}")

# The incidence matrix holds the Kirchhoff constraints for edge-constant
# (1,0) coefficients: +1 per head end, -1 per tail end, rows only at
# vertices of degree >= 2.  On the theta graph:
inc = incidence_matrix(curves.theta_graph())
print("\ntheta-graph incidence rows (vertices", inc.vertex_ids, "):")
for v, row in zip(inc.vertex_ids, inc.matrix):
    print(f"  {v}: {row}")

# Parsing normalizes an edge isometric to [-inf, +inf] into two infinite
# edges joined at a fresh degree-two vertex at coordinate 0.
doc = json.dumps(
    {
        "vertices": ["minus", "plus"],
        "edges": [{"id": "axis", "tail": "minus", "head": "plus", "length": "inf"}],
    }
)
tp1 = parse_curve(doc)
print("\nnormalized projective line:")
print(serialize(tp1))
