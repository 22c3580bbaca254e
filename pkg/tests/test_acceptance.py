"""Acceptance criteria at their stated tolerances.

Each test records one PASS/FAIL line, printed as it runs and again in the
terminal summary (see conftest.py).
"""
import json
import os
import subprocess
import sys
import time

import numpy as np

from transgress.exterior import DEFAULT_STEP
from transgress.geometry import ellipsoid, flat_box, sphere_round, torus_flat
from transgress.harness import get_scenario, run_scenario
from transgress.harness.checks import (cube_closedness, cube_transgression, fiber_integral,
                                       frame_change_deviation, special_case_deviations,
                                       verify_section_properties)
from transgress.indices import winding_number
from transgress.quadrature import QuadratureSpec, integrate_over_atlas

CRITERIA_LINES: dict[int, str] = {}
SPEC = QuadratureSpec()
STEP = DEFAULT_STEP


def record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title}: {detail}"
    CRITERIA_LINES[number] = line
    print(line)
    assert ok, line


def test_criterion_01_fibre_normalization():
    errs, times = [], []
    for n in (1, 2, 3):
        start = time.perf_counter()
        value, _ = fiber_integral(n, SPEC, STEP)
        times.append(time.perf_counter() - start)
        errs.append(abs(value - 1))
    ok = max(errs) < 1e-8 and max(times) < 5.0
    record(1, "fibre integral of psi is 1", ok,
           f"max error {max(errs):.2e} (tol 1e-8), slowest {max(times):.2f} s (limit 5 s)")


def test_criterion_02_disk_identity_odd_rank():
    worst, mismatches = 0.0, []
    for d in (-2, -1, 0, 1, 2, 3):
        name = f"disk_winding_{'dm' if d < 0 else 'd'}{abs(d)}"
        scenario = get_scenario(name)
        report = run_scenario(scenario, STEP)
        checks = {c.check_id: c for c in report.checks}
        integral = checks["boundary_integral"].lhs
        index_sum = checks["index_sum"].lhs
        oracle = winding_number(scenario.vector_field(), np.zeros(2), 1.0)
        worst = max(worst, abs(integral - (d - 1)))
        if not (index_sum == oracle == d and abs(index_sum - (1 + integral)) < 1e-6):
            mismatches.append(d)
    ok = worst < 1e-6 and not mismatches
    record(2, "sum of indices = 1 + boundary integral on the disk family", ok,
           f"max |integral - (d-1)| {worst:.2e} (tol 1e-6), mismatched d: {mismatches or 'none'}")


def test_criterion_03_ball_identity_even_rank():
    rows = []
    for name, expected in (("ball_shifted_center", 1), ("ball_shifted_edge", 1), ("ball_saddle_pair", 0)):
        checks = {c.check_id: c for c in run_scenario(get_scenario(name), STEP).checks}
        integral, index_sum = checks["boundary_integral"].lhs, checks["index_sum"].lhs
        rows.append((name, index_sum == expected, abs(index_sum - integral)))
    worst = max(r[2] for r in rows)
    ok = worst < 1e-6 and all(r[1] for r in rows)
    record(3, "sum of indices = boundary integral on the ball family", ok,
           f"max |sum - integral| {worst:.2e} (tol 1e-6), index sums as expected: {all(r[1] for r in rows)}")


def test_criterion_04_pointwise_special_cases():
    devs = special_case_deviations(sphere_round(step=STEP), STEP)
    worst_key = max(devs, key=devs.get)
    ok = max(devs.values()) < 1e-8
    record(4, "outward field gives half the Euler form, tangent fields give 0", ok,
           f"max deviation {devs[worst_key]:.2e} ({worst_key}) over 1000 points (tol 1e-8)")


def section_integrals(geometry: str) -> dict[str, float]:
    report = verify_section_properties(SPEC, STEP, geometry=geometry)
    return {c.check_id: c.lhs for c in report.checks if not c.check_id.endswith("quadrature_resolved")}


def test_criterion_05_section_integrals():
    vals = section_integrals("sphere_round")
    targets = {"infinity_section_TS2": -1.0, "infinity_section_trivial": 0.0, "zero_section_TS2": 1.0}
    worst = max(abs(vals[k] - v) for k, v in targets.items())
    record(5, "infinity section -1 (TS2) and 0 (trivial), zero section +1", worst < 1e-6,
           f"max error {worst:.2e} (tol 1e-6)")


def test_criterion_06_thom_shadow():
    checks = [c for c in run_scenario(get_scenario("thom_shadow"), STEP).checks
              if not c.check_id.endswith("quadrature_resolved")]
    targets = {"infinity_section_TS2": 0.0, "infinity_section_trivial": 0.0, "fiber_TS2": 1.0, "fiber_trivial": 1.0}
    assert {c.check_id for c in checks} == set(targets)
    worst = max(abs(c.lhs - targets[c.check_id]) for c in checks)
    record(6, "psi + half the Euler form: 0 on the infinity section, 1 on a fibre", worst < 1e-6,
           f"max error {worst:.2e} (tol 1e-6)")


def test_criterion_07_closedness_and_transgression():
    spec = QuadratureSpec(order=8)
    ratios = {n: cube_closedness(n, 100, spec, STEP)[0] for n in (1, 2, 3)}
    residuals = []
    for n in (1, 3):
        for rec in cube_transgression(n, 100, spec, STEP):
            residuals.append(abs(rec["boundary"] + rec["euler"]) / rec["tolerance"])
    ok = max(ratios.values()) < 1e-5 and max(residuals) <= 1
    record(7, "closedness and odd-rank transgression on 100 random cubes", ok,
           f"worst |boundary|/scale^(n+1) {max(ratios.values()):.2e} (tol 1e-5); "
           f"worst transgression residual / combined estimate {max(residuals):.2f} (limit 1)")


def test_criterion_08_gauss_bonnet():
    errs = []
    for geom, chi in ((sphere_round(step=STEP), 2), (ellipsoid(1, 1, 1.2, step=STEP), 2), (torus_flat(step=STEP), 0)):
        value, _ = integrate_over_atlas(lambda c, g=geom: g.charts[c].Omega[0, 1] * (0.5 / np.pi), geom, SPEC)
        errs.append(abs(value - chi))
    record(8, "Gauss-Bonnet on sphere, ellipsoid and flat torus", max(errs) < 1e-6,
           f"max error {max(errs):.2e} (tol 1e-6)")


def test_criterion_09_frame_equivariance():
    flat = max(frame_change_deviation(torus_flat(step=STEP), 20), frame_change_deviation(flat_box(3, 3, STEP), 20))
    curved = frame_change_deviation(ellipsoid(1, 1, 1.2, step=STEP), 20)
    ok = flat < 1e-9 and curved < 1e-6
    record(9, "psi invariant under 20 random frame changes", ok,
           f"flat max deviation {flat:.2e} (tol 1e-9), finite-difference connection {curved:.2e} (tol 1e-6)")


def test_criterion_10_connection_independence():
    sphere, ell = section_integrals("sphere_round"), section_integrals("ellipsoid")
    sphere["fiber_integral"] = fiber_integral(2, SPEC, STEP)[0]
    ell["fiber_integral"] = fiber_integral(2, SPEC, STEP, geometry="ellipsoid")[0]
    keys = ("infinity_section_TS2", "zero_section_TS2", "infinity_section_trivial", "fiber_integral")
    same_int = all(round(sphere[k]) == round(ell[k]) for k in keys)
    worst = max(abs(ell[k] - round(sphere[k])) for k in keys)
    ok = same_int and worst < 1e-5
    record(10, "ellipsoid metric reproduces the sphere integers", ok,
           f"max |ellipsoid - sphere integer| {worst:.2e} (tol 1e-5), same integers: {same_int}")


def test_criterion_11_full_suite(tmp_path):
    start = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "transgress.harness.cli", "all", "--out", str(tmp_path)],
                          capture_output=True, text=True, env={**os.environ, "TRANSGRESS_THREADS": "1"},
                          timeout=600)
    elapsed = time.perf_counter() - start
    reports = [json.loads(p.read_text()) for p in tmp_path.glob("*.json")]
    ok = proc.returncode == 0 and elapsed < 300 and reports and all(r["pass"] for r in reports)
    record(11, "`transgress all` single-threaded", ok,
           f"exit {proc.returncode}, {len(reports)} reports, {elapsed:.1f} s (limit 300 s)")
