"""Stability sweep over the attracting-periodic-orbit family at a
lacunary rotation angle.

The invariant-measure distances have closed forms here, so the sweep is
exact and fast.  Row j = 1 is expected to violate the Holder-shape
upper bound fitted on the smallest perturbation: that violation is the
point of the construction (the angle has infinite linear type).
"""

import argparse

from skewstab.arithmetic import lacunary_theta
from skewstab.stability import prop_bahh_system, stability_sweep


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--gamma", type=float, default=3.0)
    ap.add_argument("--gamma-prime", type=float, default=2.5)
    args = ap.parse_args()

    theta = lacunary_theta(3)
    family = [prop_bahh_system(theta, j).pspec for j in (1, 2)]
    table = stability_sweep(family, args.gamma,
                            gamma_prime=args.gamma_prime)

    head = f"{'delta':>12} {'distance':>12} {'lower':>12} {'upper fit':>12}"
    print(head)
    for row in table.rows:
        print(f"{row.delta:>12.3e} {row.distance:>12.3e} "
              f"{row.lower_bound:>12.3e} {row.upper_bound_fit:>12.3e}")
    print(f"\nK = {table.K:.3e}, beta = {table.beta:.3f}")
    print(f"lower bounds hold: {table.lower_ok()}")
    print(f"upper-bound shape holds: {table.upper_ok()} "
          f"(the False row is the rigidity counterexample)")


if __name__ == "__main__":
    main()
