"""Optimized communication time of the nested repeater chain vs distance.

For each total distance the optimizer picks the nesting level and the two
pulse strengths (generation and swapping) that minimize the average time to
deliver one entangled pair at the target fidelity.  The direct-transmission
baseline e^{L/L_att}/(f eta) is printed alongside; the repeater wins once
the exponential channel loss dominates.
"""

from rnpm.chain import Hardware, key_rate
from rnpm.formulas import DetectorKind, DetectorModel
from rnpm.optimize import SweepSpec, sweep

hardware = Hardware(tau=0.98,
                    detector=DetectorModel(DetectorKind.SINGLE_PHOTON, 0.95))

spec = SweepSpec(
    L_grid_km=tuple(float(L) for L in range(100, 1301, 200)),
    F_targets=(0.9, 0.7),
    hardware=hardware,
)

records = sweep(spec)

header = (f"{'L (km)':>7} {'F_target':>9} {'n':>3} {'beta_g^2':>10} "
          f"{'beta_s^2':>10} {'T (s)':>12} {'direct (s)':>12} {'key rate':>9}")
print(header)
print("-" * len(header))
for r in records:
    if not r.feasible:
        print(f"{r.L_km:7.0f} {r.F_target:9.2f}  infeasible: {r.message}")
        continue
    print(f"{r.L_km:7.0f} {r.F_target:9.2f} {r.n:3d} {r.beta_g_sq:10.3e} "
          f"{r.beta_s_sq:10.3e} {r.T_seconds:12.4e} {r.direct_seconds:12.4e} "
          f"{key_rate(r.F_achieved):9.4f}")

print()
print("The repeater time grows sub-exponentially (more nesting levels as L")
print("grows), while the direct baseline grows as e^{L/L_att}; the crossover")
print("sits at a few hundred kilometers for this hardware.")
