"""Fixed against adaptive relaxation time on u_t = u_xx + u^2.

Runs the p=2 blow-up at N=200 twice, once with tau = 1e-5 and once with
tau proportional to max M, then prints how far each run got, how long it
took, and how close the late profile is to the self-similar shape.

    python demos/blowup_p2.py
"""

from mmrelax.core import TauPolicy
from mmrelax.harness import (get_scenario, nodes_in_peak, run_experiment,
                             self_similarity_deviation)

base = get_scenario("blowup_p2")
runs = {
    "fixed tau=1e-5": run_experiment(base.override(tau=TauPolicy.fixed(1e-5))),
    "adaptive tau": run_experiment(base),
}

for label, r in runs.items():
    print(f"{label}:")
    print(f"  t* estimate  {r.t_end:.10f}")
    print(f"  final u_max  {r.u_max_final:.3e}")
    print(f"  peak nodes   {nodes_in_peak(r.u_final)}")
    print(f"  steps        {r.n_accepted} accepted, "
          f"{len(r.step_history) - r.n_accepted} rejected")
    print(f"  wall clock   {r.wall_clock_seconds:.2f} s")
    for s in r.snapshots:
        if s.decade in (2, 6, 10, 14):
            dev = self_similarity_deviation(s, r.scenario.spec)
            print(f"  u_max=1e{s.decade:<3d} t={s.t:.10f}  "
                  f"profile deviation {dev:.3f}")

fixed, adaptive = runs.values()
print(f"\nadaptive/fixed: u_max x{adaptive.u_max_final / fixed.u_max_final:.3g},"
      f" wall clock x{adaptive.wall_clock_seconds / fixed.wall_clock_seconds:.2f}")
