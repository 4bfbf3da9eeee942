"""Exact harmonic bases and the Cech dimension oracle.

The harmonic (1,0) space consists of edge-constant Kirchhoff flows that
vanish on infinite edges; its dimension is the genus.  Everything here
is exact rational arithmetic: no dimension ever hinges on a floating
point rank decision.  Four independent computations of the dimension
must coincide on every curve.
"""

from trophodge import curves
from trophodge.curve import genus
from trophodge.harmonic import betti, cech_cohomology, harmonic_basis
from trophodge.metric import KahlerForm

gallery = [
    ("projective line", curves.projective_line()),
    ("3-leg star", curves.star(3)),
    ("triangle", curves.triangle()),
    ("theta graph", curves.theta_graph()),
    ("K4", curves.k4()),
    ("triangle with legs", curves.triangle_with_legs()),
]

print("curve               genus betti1 |H(1,0)| cechH0(omega1) cechH1(omega1)")
for name, curve in gallery:
    g = KahlerForm.from_spec(curve, None)
    basis = harmonic_basis(curve, g, (1, 0))
    h0, h1 = cech_cohomology(curve, "omega1")
    print(f"{name:20s} {genus(curve):3d} {betti(curve,1):6d} {basis.dimension:7d} {h0:10d} {h1:14d}")

print("\nexact basis of the theta graph (integer flows, gcd 1):")
for coeffs in harmonic_basis(curves.theta_graph(), None, (1, 0)).exact_coefficients:
    print("  ", {k: str(v) for k, v in coeffs.items()})

# the scalar spaces are one-dimensional: constants and the Kahler form
tri = curves.triangle()
g = KahlerForm.constant(tri, 1.0)
for bidegree in ((0, 0), (0, 1), (1, 1)):
    basis = harmonic_basis(tri, g, bidegree)
    print(f"triangle harmonic {bidegree}: dimension {basis.dimension} ({basis.provenance})")
