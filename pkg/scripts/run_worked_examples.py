#!/usr/bin/env python3
"""Solve every shipped demo instance with each applicable method.

Prints one row per (instance, method) with the objective or the failure
mode. Finite instances run the enumeration oracle, both bisection
schemes, and the tail baseline; the Gaussian documents run the conic
solve and the closed-form bisection scheme.
"""

import argparse
import json
from pathlib import Path

from ccpkit import (
    CcpError,
    also_x,
    also_x_elliptical,
    also_x_plus,
    cvar_solution,
    exact_conic_solve,
    exact_solve,
    load_elliptical,
    load_instance,
)


def finite_rows(name, inst):
    methods = (
        ("oracle", lambda: exact_solve(inst).objective),
        ("alsox", lambda: also_x(inst).objective),
        ("alsoxplus", lambda: also_x_plus(inst).objective),
        ("cvar", lambda: cvar_solution(inst).objective),
    )
    for label, run in methods:
        try:
            yield name, label, "%.6g" % run()
        except CcpError as exc:
            yield name, label, type(exc).__name__


def elliptical_rows(name, ec):
    yield name, "conic", "%.6g" % exact_conic_solve(ec)[0]
    try:
        yield name, "alsox", "%.6g" % also_x_elliptical(ec).objective
    except CcpError as exc:
        yield name, "alsox", type(exc).__name__


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--instances-dir",
        default=str(Path(__file__).resolve().parents[1] / "instances"),
    )
    args = parser.parse_args()
    rows = []
    for path in sorted(Path(args.instances_dir).glob("*.json")):
        text = path.read_text()
        if json.loads(text).get("type") == "elliptical_gaussian":
            rows.extend(elliptical_rows(path.stem, load_elliptical(text)))
        else:
            rows.extend(finite_rows(path.stem, load_instance(text)))
    width = max(len(r[0]) for r in rows)
    for name, method, value in rows:
        print(f"{name:<{width}}  {method:<9}  {value}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
