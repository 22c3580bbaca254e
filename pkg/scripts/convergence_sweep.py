"""Print value and error estimate against quadrature order for sweepable scenarios.

    python scripts/convergence_sweep.py [--orders 4,8,16,32] [scenario ...]
"""
import argparse

from transgress.harness import get_scenario
from transgress.harness.checks import sweep_quantity
from transgress.quadrature import convergence_sweep

DEFAULT = ["disk_winding_d2", "ball_saddle_pair", "fiber_normalization", "section_properties_ellipsoid",
           "gauss_bonnet"]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("scenarios", nargs="*", default=DEFAULT)
    parser.add_argument("--orders", default="4,8,16,32")
    parser.add_argument("--fd-step", type=float, default=1e-5)
    args = parser.parse_args()
    orders = [int(x) for x in args.orders.split(",")]
    for name in args.scenarios:
        scenario = get_scenario(name)
        print(f"# {name}")
        print(f"{'order':>6} {'value':>22} {'error_estimate':>15}")
        for order, value, err in convergence_sweep(lambda spec: sweep_quantity(scenario, spec, args.fd_step),
                                                   orders, scenario.quadrature):
            print(f"{order:>6} {value:>22.15f} {err:>15.3e}")


if __name__ == "__main__":
    main()
