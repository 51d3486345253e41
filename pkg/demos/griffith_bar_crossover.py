"""Crossover of a stretched brittle bar: elastic branch vs a single crack.

Sweeps the boundary stretch t and minimizes the reduced plate energy at
each value.  The elastic branch costs (4/3) t^2 (lam = mu = 1), a clean
break costs exactly 1, so the minimizer switches at t = sqrt(3)/2.
"""

import numpy as np

from platelab import LameParams, SolverConfig, minimize_limit, stretch_datum


def main():
    p = LameParams(1.0, 1.0, 2)
    cfg = SolverConfig()
    print(f"{'t':>6} {'bulk':>10} {'surface':>8} {'total':>10} "
          f"{'closed form':>12}  state")
    prev_cracked = None
    for t in np.arange(0.5, 1.2001, 0.05):
        s, cracks, e, _ = minimize_limit((128,), (0.0,), (1.0,),
                                         stretch_datum(float(t), 2), p, cfg)
        cracked = bool(np.any(cracks.broken[0]) or cracks.released)
        closed = min((4.0 / 3.0) * t ** 2, 1.0)
        marker = "cracked" if cracked else "elastic"
        if prev_cracked is not None and cracked != prev_cracked:
            marker += "   <-- switch (exact: t = sqrt(3)/2 ~ 0.866)"
        prev_cracked = cracked
        print(f"{t:6.2f} {e.bulk:10.5f} {e.surface:8.3f} {e.total:10.5f} "
              f"{closed:12.5f}  {marker}")


if __name__ == "__main__":
    main()
