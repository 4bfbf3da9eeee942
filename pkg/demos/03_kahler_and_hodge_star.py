"""Kahler weights, tropical integration, the Hodge star and the Laplacian.

A Kahler form is a positive (1,1) weight with finite total mass and, on
infinite edges, a finite second moment.  The Fubini-Study weight
2 e^(2x) / (1 + e^(2x))^2 is the canonical example on the projective
line: total mass 1, second moment pi^2/24 per edge, yet not regular at
infinity (it never becomes identically zero).
"""

import math

import numpy as np

from trophodge import curves
from trophodge.metric import (
    KahlerForm,
    codifferential,
    hodge_star,
    inner_product,
    integrate,
    laplacian,
    validate_kahler,
)
from trophodge.superform import Superform, is_regular
from trophodge.theta import fubini_study_form

tp1 = curves.projective_line()
g = KahlerForm.fubini_study(tp1)
report = validate_kahler(tp1, g)
print("Fubini-Study weight valid:", report.passed)
print("total mass:", report.total_mass, "(expect 1)")
print("second moment per edge:", report.second_moments["left"], "(expect pi^2/24 =", math.pi**2 / 24, ")")

fs = fubini_study_form(tp1)
print("regular at infinity:", is_regular(fs, tp1).passed, "(a Kahler weight never is)")

# the star pairs bidegrees (p,q) <-> (1-p,1-q); twice is (-1)^(p+q)
one = Superform.on_curve(tp1, (0, 0), {"left": 1, "right": 1})
star_one = hodge_star(one, g)
print("star of 1 is the weight itself:", float(star_one.coefficients["left"](-0.0)), "= g(0) =", float(g.weights["left"](0.0)))
print("(1,1) inner product (g,g) equals the mass:", inner_product(star_one, star_one, g))

# the Laplacian by operator composition: on functions -f''/g
tri = curves.triangle()
g1 = KahlerForm.constant(tri, 2.0)
f = Superform.on_curve(tri, (0, 0), {"ab": "x^3", "bc": "x^3", "ca": "x^3"})
xs = np.linspace(-1, 0, 5)
print("Delta(x^3) with g=2:", np.asarray(laplacian(f, g1).coefficients["ab"](xs)), "= -6x/2")

# harmonic forms are killed by d'' and its adjoint simultaneously
theta_curve = curves.theta_graph()
gt = KahlerForm.constant(theta_curve, 1.0)
flow = Superform.on_curve(theta_curve, (1, 0), {"e1": 1, "e2": -1, "e3": 0})
print("codifferential of a flow:", np.asarray(codifferential(flow, gt).coefficients["e1"](xs)))
print("Laplacian of a flow:", np.asarray(laplacian(flow, gt).coefficients["e1"](xs)))
