"""Viscosity-convergence study for the regularized linear marcher.

Usage:
    python3 scripts/epsilon_sweep.py [--preset benchmark] [--direction forward]

Solves one linear endpoint problem repeatedly along a decreasing
schedule of artificial-viscosity strengths and prints the successive
differences and observed convergence orders.  First-order decrease of
the differences with epsilon is the expected signature.
"""

import argparse

import numpy as np

from schrobvp.cli import build_scenario
from schrobvp.coefficients import norm_bundle, select_horizon
from schrobvp.presets import load_preset, preset_names
from schrobvp.stepper import LinearProblem, StepperConfig, epsilon_study


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="benchmark", choices=preset_names())
    ap.add_argument("--direction", default="forward", choices=["forward", "backward"])
    ap.add_argument("--epsilons", default="1e-2,1e-3,1e-4,1e-5",
                    help="comma-separated decreasing schedule")
    ap.add_argument("--n-steps", type=int, default=1024)
    args = ap.parse_args()

    sc = build_scenario(load_preset(args.preset))
    horizon = sc.horizon
    if horizon is None:
        probe = np.linspace(0.0, 0.25, 10001)
        bundle = norm_bundle(sc.coeffs, sc.weight.sup_logderiv, probe, sc.grid)
        horizon = select_horizon(bundle).horizon

    schedule = tuple(float(tok) for tok in args.epsilons.split(","))
    datum = sc.f if args.direction == "forward" else sc.g
    problem = LinearProblem(direction=args.direction, coeffs=sc.coeffs,
                            weight=sc.weight, source=None, datum=datum,
                            horizon=horizon)
    cfg = StepperConfig(n_steps=args.n_steps, epsilon_schedule=schedule)
    rep = epsilon_study(problem, cfg)

    print(f"{args.preset} {args.direction}, T={horizon:.6g}, "
          f"{args.n_steps} steps")
    for eps_pair, diff in zip(zip(rep.epsilons, rep.epsilons[1:]), rep.differences):
        print(f"  eps {eps_pair[0]:.0e} -> {eps_pair[1]:.0e}: "
              f"|difference| {diff:.6e}")
    for order in rep.order_estimates:
        print(f"  observed order {order:.3f}")
    print(f"cauchy: {rep.cauchy}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
