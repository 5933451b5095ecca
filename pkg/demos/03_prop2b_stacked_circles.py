"""
Two stacked circles
===================

For ``a0 < 0 < a`` (and the combined offset negative) the agents can fly
parallel headings on two circles of equal radius stacked along a common
axis through the beacon. The equilibrium is exact but fragile: a 10%
perturbation typically does not come back.
"""
import numpy as np

from beaconpursuit import ControlParams, embed_shape, integrate
from beaconpursuit.analysis import detect_circling
from beaconpursuit.config import perturb_state
from beaconpursuit.equilibria import prop2b_equilibrium
from beaconpursuit.rng import Xoshiro256

params = ControlParams.common(mu=1.0, lam=0.5, a=0.2, a0=-0.5)
spec = prop2b_equilibrium(params)
print(f"predicted: rho_1b = {spec.shape.rho_1b:.6f}, rho = {spec.shape.rho:.6f}, xtilde = {spec.shape.xtilde}")

state = embed_shape(spec.shape)
print("headings (parallel):\n", state.headings)

exact = integrate(state, params, t_max=100.0, dt=1e-3, sample_every=100)
print("max shape drift from the exact start:", np.max(np.abs(exact.shapes - exact.shapes[0])))
report = detect_circling(exact)
print("circle radii:", [round(c.radius, 9) for c in report.circles], " plane separation:", report.plane_separation)

for seed in range(5):
    rec = integrate(perturb_state(state, 0.1, Xoshiro256(seed)), params, 500.0, 1e-3, sample_every=100)
    verdict = detect_circling(rec).converged if rec.completed else False
    print(f"10% perturbation, seed {seed}: converged={verdict}, terminal rho={rec.shapes[-1, 0]:.3f}")
