"""
The shape dynamics are self-contained
=====================================

The eight shape scalars evolve by their own ODE, with no reference to where
the agents are in space. Check it: integrate the full 3-D dynamics from a
random start, extract the shape along the way, and compare against
integrating the shape ODE directly.
"""
import numpy as np

from beaconpursuit import ControlParams, integrate
from beaconpursuit.analysis import compare_representations
from beaconpursuit.config import random_state
from beaconpursuit.rng import Xoshiro256

params = ControlParams.common(mu=1.2, lam=0.4, a=-0.3, a0=0.25)
start = random_state(box=5.0, rng=Xoshiro256(7))
print("start positions:", np.round(start.positions, 3).tolist())

for dt in (4e-2, 2e-2, 1e-2, 1e-3):
    full = integrate(start, params, t_max=10.0, dt=dt)
    report = compare_representations(full, params)
    print(f"dt={dt:<6g} max RMS over the 8 variables: {report.rms_per_shape_variable.max():.3e}")
# the gap shrinks at fourth order until it reaches rounding level
