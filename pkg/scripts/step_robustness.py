"""Run every built-in scenario at several finite-difference steps and tabulate the verdicts."""
import argparse

from transgress.harness.cli import run_all


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", default="1e-4,1e-5,1e-6")
    args = parser.parse_args()
    steps = [float(x) for x in args.steps.split(",")]
    table = {h: {r.scenario: r for r in run_all(step=h)} for h in steps}
    names = sorted(table[steps[0]])
    print(f"{'scenario':<32}" + "".join(f"{h:>10.0e}" for h in steps) + "   worst abs_err")
    for name in names:
        verdicts = "".join(f"{'pass' if table[h][name].passed else 'FAIL':>10}" for h in steps)
        worst = max((c.abs_err for h in steps for c in table[h][name].checks), default=float("nan"))
        print(f"{name:<32}{verdicts}   {worst:.2e}")


if __name__ == "__main__":
    main()
