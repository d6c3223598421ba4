"""Linear dispersive decay for several time-dependent traps.

Runs the exact linear flow of a Gaussian and fits the slope of
``log ||u(t)||_inf`` against ``log t``.  Free motion decays like
``t**(-1/2)``; the weak trap ``k / (1 + t**2)`` slows this to
``t**(-(1 - lambda)/2)``; the repulsive trap ``sigma = -1`` decays
exponentially, like ``(1 + |sinh t|)**(-1/2)``.

Run with ``python3 demos/decay_rates.py``.
"""
import numpy as np

from hillnls.classical import SigmaModel
from hillnls.diagnostics import build_series, decay_fit
from hillnls.grid import Grid, gaussian
from hillnls.nls import EvolutionConfig, NonlinearitySpec, evolve


def slope(model, times, against="t"):
    grid = Grid(1, 256, 16.0)
    cfg = EvolutionConfig(model, NonlinearitySpec(), grid, gaussian(grid), times[-1], 1.0,
                          diagnostic_times=list(times), method="exact")
    traj = evolve(cfg)
    series = build_series(traj.times, traj.fields, traj.solution, grid, pseudo_energy=False)
    fit = decay_fit(series, traj.solution)
    return fit.slope_vs_t if against == "t" else fit.slope_vs_zeta2


def main():
    late = np.geomspace(1e2, 1e4, 21)
    weak = SigmaModel.inverse_square(0.15)
    rows = [
        ("free, vs t", slope(SigmaModel.zero(), late), -0.5),
        ("0.15/(1+t^2), vs t", slope(weak, late), -(1 - weak.lam) / 2),
        ("sigma = -1, vs 1+|zeta2|", slope(SigmaModel.constant(-1.0), np.linspace(5, 12, 15), "zeta2"), -0.5),
    ]
    for label, got, want in rows:
        print(f"{label:<26}{got:+.4f}  (expected {want:+.4f})")


if __name__ == "__main__":
    main()
