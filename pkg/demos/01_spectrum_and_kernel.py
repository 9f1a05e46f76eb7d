"""Bound states and the time kernel of the double delta well.

Run:  python3 demos/01_spectrum_and_kernel.py
"""

import numpy as np

from deltawell.propagator import continuous_kernel, free_kernel, full_kernel, oracle_kernel
from deltawell.spectrum import WellParams, eigenvalue_count, eigenvalues

# --- 1. how many bound states? ------------------------------------------------
# Attractive wells (alpha < 0) always bind one even state; an odd state
# appears once a * alpha < -1.
for a, alpha in [(1.0, 1.0), (1.0, -0.5), (1.0, -2.0), (2.0, -0.4)]:
    p = WellParams(a, alpha)
    print(f"a={a:<4} alpha={alpha:<5} count={eigenvalue_count(p)}  energies={eigenvalues(p)}")

# --- 2. the continuous part of the kernel: series vs contour quadrature -------
p = WellParams(1.0, -2.0)
t, x, y = 1.0, 0.5, -0.3
ev = continuous_kernel(p, t, x, y)
ref = oracle_kernel(p, t, x, y)
print(f"\nseries     {ev.value:.12f}  ({ev.terms_used} terms, tail <= {ev.tail_estimate:.1e})")
print(f"quadrature {ref:.12f}")
print(f"free       {free_kernel(t, x, y):.12f}")

# --- 3. full kernel = continuous part + bound-state phases ---------------------
print(f"full       {full_kernel(p, t, x, y):.12f}")

# --- 4. time dependence at the origin -----------------------------------------
print("\n   t      |U_c(t;0,0)|   sqrt(t)|U_c|")
for t in np.geomspace(0.1, 100, 7):
    v = abs(continuous_kernel(p, t, 0.0, 0.0).value)
    print(f"{t:7.2f}   {v:.6f}      {np.sqrt(t) * v:.6f}")
