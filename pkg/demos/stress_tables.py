"""Run both stress tables in memory and print mean decompositions.

Each scenario compares the optimal feedback with adapted TWAP on common
noise. Run with ``python demos/stress_tables.py [n_paths]``.
"""

import sys

from entropy_execution.experiment import STRESS_TABLES, preset
from entropy_execution.simulator import COMPONENTS, AdaptedTWAP, optimal_feedback, simulate_paths

n_paths = int(sys.argv[1]) if len(sys.argv) > 1 else 4096

for table, names in STRESS_TABLES.items():
    print(f"Table {table}")
    print(f"  {'scenario':26s} {'strategy':8s} " + " ".join(f"{c:>12s}" for c in COMPONENTS) + f" {'sd(v_total)':>12s}")
    for name in names:
        cfg = preset(name).sim_config(n_paths=n_paths)
        for strategy in (optimal_feedback(cfg), AdaptedTWAP(cfg.params.horizon)):
            ens = simulate_paths(cfg, strategy)
            means = " ".join(f"{ens.component(c).mean():12.4e}" for c in COMPONENTS)
            print(f"  {name:26s} {ens.strategy:8s} {means} {ens.v_total.std(ddof=1):12.4e}")
    print()
