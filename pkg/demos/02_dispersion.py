"""Dispersive decay and a Strichartz-norm probe.

sqrt(t) * sup |U_c(t; x, y)| over a box stays bounded; on a fixed box it
actually decays, since local decay is faster than t^(-1/2).

Run:  python3 demos/02_dispersion.py   (about a minute)
"""

from deltawell.estimates import decay_grid, decay_scan, seed_family, strichartz_probe
from deltawell.grid import Grid
from deltawell.spectrum import WellParams

times = [0.1, 0.3, 1.0, 3.0, 10.0, 30.0]
for key in [(1.0, 1.0), (1.0, -2.0)]:
    p = WellParams(*key)
    rep = decay_scan(p, times, decay_grid(p, points=61))
    print(f"(a, alpha) = {key}: constant {rep.constant:.4f}")
    for t, s in zip(rep.t_values, rep.sup_values):
        print(f"    t = {t:6.1f}   sqrt(t) sup|U| = {s:.4f}")

# L^8_t L^4_x norm of exp(-itH) P_c u over a small Gaussian family
p = WellParams(1.0, -2.0)
g = Grid.symmetric(12.0, 480, p.a)
val = strichartz_probe(p, 4.0, 0.5, seed_family(g, p), n_times=8)
print(f"\nStrichartz probe (r=4, q=8, T=0.5) on the seed family: {val:.4f}")
