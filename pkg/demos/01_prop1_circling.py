"""
Circling without a beacon offset
================================

With ``a0 = 0`` the beacon only pulls the agents' attention, never their
bearing. For a negative neighbor offset ``a`` the pair settles into mutual
circling at separation ``rho = 2 lam / ((1 - lam) mu (-a))``, on a circle whose
plane is offset from the beacon along the axis.
"""
import numpy as np

from beaconpursuit import ControlParams, embed_shape, integrate
from beaconpursuit.analysis import detect_circling
from beaconpursuit.config import perturb_state
from beaconpursuit.equilibria import prop1_equilibrium, prop1_separation
from beaconpursuit.rng import Xoshiro256

params = ControlParams.common(mu=2.0, lam=0.5, a=-0.5, a0=0.0)
print("predicted separation:", prop1_separation(params))

# The beacon distance is a free parameter of this family; pick 3.
spec = prop1_equilibrium(params, rho_1b=3.0)
print("equilibrium shape:", spec.shape)

# Start 1% away from the equilibrium and let the closed loop pull it back.
start = perturb_state(embed_shape(spec.shape), 0.01, Xoshiro256(0))
record = integrate(start, params, t_max=200.0, dt=1e-3, sample_every=10)
report = detect_circling(record)

print("terminal separation:", record.shapes[-1, 0])
print("converged:", report.converged)
for i, circle in enumerate(report.circles, start=1):
    print(f"agent {i}: radius {circle.radius:.6f}, centre {np.round(circle.center, 4)}")
# the circle does not pass through the beacon's plane: it is stacked above/below it
print("beacon-to-plane offset:", abs((report.circles[0].center - record.beacon) @ report.circles[0].normal))
