"""The superform calculus: wedge products, the differentials d'' and d',
regularity, and Stokes' theorem.

A (p,q) superform stores one coefficient per edge in the edge's
canonical chart.  d'' raises q (f -> f' d''x, f d'x -> -f' d'x^d''x) and
d' mirrors it in p.  A form is regular when it is continuous at vertices
(bidegree (0,0)), satisfies Kirchhoff's law (bidegree (1,0)), and is
constant respectively zero near every point at infinity.
"""

import numpy as np

from trophodge import curves
from trophodge.metric import KahlerForm, integrate
from trophodge.superform import Superform, d_first, d_second, is_regular, wedge

theta = curves.theta_graph()
xs = np.linspace(-1.0, 0.0, 5)

# a Kirchhoff flow: end values sum to zero at both vertices
flow = Superform.on_curve(theta, (1, 0), {"e1": 1, "e2": -1, "e3": 0})
print("flow regular:", is_regular(flow, theta).passed)

# d'' of an edge-constant (1,0) form vanishes: it is closed
print("d''(flow) coefficients on e1:", np.asarray(d_second(flow).coefficients["e1"](xs)))

# wedge pairs (1,0) with (0,1) into a (1,1) form; the order flips the sign
a = Superform.on_curve(theta, (1, 0), {"e1": "x", "e2": "1", "e3": "x^2"})
b = Superform.on_curve(theta, (0, 1), {"e1": "1+x", "e2": "x", "e3": "2"})
ab = wedge(a, b)
ba = wedge(b, a)
print("wedge anticommutes:", np.allclose(
    np.asarray(ab.coefficients["e1"](xs)), -np.asarray(ba.coefficients["e1"](xs))
))

# d''d'' = 0 identically
f = Superform.on_curve(theta, (0, 0), {"e1": "x^3", "e2": "exp(x)", "e3": "1"})
print("d''d''(f) vanishes:", np.allclose(np.asarray(d_second(d_second(f)).coefficients["e2"](xs)), 0.0))
print("d'(f) bidegree:", d_first(f).bidegree.as_tuple())

# Stokes: a regular (1,0) form has vanishing total d'' integral.
# End values: heads 1 - 2 + 1 = 0, tails 1 + 0 - 1 = 0.
phi = Superform.on_curve(theta, (1, 0), {"e1": "1", "e2": "2*x^2-2", "e3": "1+2*x"})
assert is_regular(phi, theta).passed
g = KahlerForm.constant(theta, 1.0)
print("Stokes residual:", abs(integrate(theta, d_second(phi))))
