"""
Which equilibria exist where
============================

Sweep the sign quadrants of the two offsets for three attention weights and
tabulate which closed-form equilibria exist, with the predicted sizes.
These conditions are sufficient, not necessary: other equilibria may exist.
"""
from beaconpursuit.runner import parameter_grid, sweep

grid = parameter_grid(mu=(1.0,), lam=(0.25, 0.5, 0.75), a=(-0.5, 0.5), a0=(-0.5, 0.0, 0.5))
rows = sweep(grid, jobs=1)

print(f"{'lam':>5} {'a':>5} {'a0':>5} | {'prop1':>5} {'prop2a':>6} {'prop2b':>6} | sizes")
for r in rows:
    sizes = []
    if r["prop1"]:
        sizes.append(f"rho={r['prop1_rho']:.3g}")
    if r["prop2a"]:
        sizes.append(f"2a: rho_b={r['prop2a_rho_b']:.3g}")
    if r["prop2b"]:
        sizes.append(f"2b: rho={r['prop2b_rho']:.3g}, rho_b={r['prop2b_rho_b']:.3g}")
    print(f"{r['lambda']:5.2f} {r['a']:5.1f} {r['a0']:5.1f} | {r['prop1']!s:>5} {r['prop2a']!s:>6} "
          f"{r['prop2b']!s:>6} | {'; '.join(sizes) or r['error'] or ''}")
