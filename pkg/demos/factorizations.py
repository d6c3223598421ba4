"""Four factorizations of the harmonic propagator, side by side.

Propagates one wave packet under sigma = +1 (a harmonic trap) to several
times, including times past the zeros of zeta1 and zeta2 where some chains
are undefined, and prints the pairwise L2 disagreement of every chain that
is defined there.

Run with ``python3 demos/factorizations.py``.
"""
import math

from hillnls.classical import SigmaModel, solve_fundamental
from hillnls.grid import Grid, gaussian, relative_difference
from hillnls.propagator import FactorizationKind, defined_kinds, propagate


def main():
    sol = solve_fundamental(SigmaModel.constant(1.0), 10.0)
    grid = Grid(1, 1024, 24.0)
    u0 = gaussian(grid, width=0.8, center=1.0, momentum=0.5)
    print(f"{'t':>7}  {'zeta1':>8}  {'zeta2':>8}  chains and max relative difference to MDMDFM")
    for t in (0.5, math.pi / 2, 2.0, math.pi, 4.0, 5.5, 2 * math.pi):
        z1, _, z2, _ = sol(t)
        ref = propagate(sol, t, u0, FactorizationKind.MDMDFM)
        kinds = defined_kinds(sol, t)
        worst = max(relative_difference(propagate(sol, t, u0, k), ref) for k in kinds)
        names = ", ".join(k.name.lower() for k in kinds)
        print(f"{t:7.3f}  {z1:8.4f}  {z2:8.4f}  {names}: {worst:.1e}")
    # after one full period the packet returns up to the sign -1
    back = propagate(sol, 2 * math.pi, u0)
    print(f"period check |U(2 pi) u0 + u0| / |u0| = {relative_difference(back, u0 * -1):.1e}")


if __name__ == "__main__":
    main()
