"""Geometry tour: the map family, attractor membership, and contact sets.

The fractal family is generated by the three corner halvings of an
equilateral triangle plus a fourth scaled rotation controlled by a
parameter lambda in (0, 1/2).  For rational lambda everything below is
computed in exact Q[sqrt(3)] arithmetic.
"""

from fractions import Fraction

import agres
from agres.exact import Point, Scalar, point_decimal_str
from agres.geometry import CENTROID, CORNERS, point_in_attractor

ifs = agres.make_ifs("1/4")
print("maps at lambda = 1/4")
for name, f in zip(("F1", "F2", "F3", "F4"), ifs.maps):
    images = ", ".join(str(point_decimal_str(f.apply(c))) for c in CORNERS)
    print(f"  {name}: ratio {f.ratio:.4f}, corner images {images}")

print("\nattractor membership (exact pullback descent)")
probes = [
    ("bottom contact (2*lambda, 0)", Point(Scalar(Fraction(1, 2)), Scalar())),
    ("centroid (fixed point of F4)", CENTROID),
    ("a point in the central hole", Point(Scalar(Fraction(1, 2)),
                                          Scalar.sqrt3_times(Fraction(1, 16)))),
]
for label, p in probes:
    print(f"  {label}: {point_in_attractor(ifs, p)}")

print("\ncell-contact sets: corners plus rotation orbits of a doubling orbit")
for lam in ("1/4", "1/8", "1/7", "3/16"):
    bset = agres.boundary_set(agres.make_ifs(lam))
    params = ", ".join(str(t) for t in bset.parameter_set())
    print(f"  lambda={lam}: {bset.size} points, edge parameters {{{params}}}")

print("\nfast construction equals the defining-union oracle:")
for lam in ("1/4", "1/7"):
    ifs_l = agres.make_ifs(lam)
    fast = agres.boundary_set(ifs_l, "fast")
    oracle = agres.boundary_set(ifs_l, "oracle")
    same = [p.key() for p in fast.points] == [p.key() for p in oracle.points]
    print(f"  lambda={lam}: {same}")

print("\napproximating graphs")
for m in (0, 1, 2, 3):
    g = agres.approximation_graph(ifs, m)
    print(f"  level {m}: {g.vertex_count} vertices, {g.edge_count} edges, "
          f"connected: {g.is_connected()}")

print("\nattractors move Lipschitz-continuously in the parameter:")
for lam2 in ("5/16", "3/8"):
    est, bound = agres.hausdorff_distance(ifs, agres.make_ifs(lam2), depth=8)
    print(f"  distance(AG(1/4), AG({lam2})) ~ {est:.5f} <= bound {bound:.5f} + 2^-7")
