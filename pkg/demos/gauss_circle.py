"""Lattice points in dilated disks, superellipses and squares.

Counts are exact.  The discrepancy envelope exponent sits between Hardy's
1/2 and the 2/3 that decay rate 1/2 gives for the disk; the flat
superellipse allows more, and the square's corners push it to about 1.
"""
from slabdecay import lattice as lt
from slabdecay.surface import make_closed_body

print("N(10) for the unit disk:", lt.count_points(make_closed_body("disk"), 10))

for name, alpha in (("disk", 0.5), ("superellipse", 0.25), ("square", None)):
    prof = lt.discrepancy_profile(make_closed_body(name), lt.default_ks(2))
    line = f"{name:13s} exponent {prof.fitted_exponent:.3f}"
    if alpha is not None:
        line += f"  (predicted <= {lt.predicted_exponent(1, alpha):.3f})"
    print(line)

disk = lt.discrepancy_profile(make_closed_body("disk"), range(10, 5001))
print("disk discrepancy sign changes on 10..5000:", disk.sign_changes())
