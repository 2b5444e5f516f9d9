#!/usr/bin/env python3
"""Regenerate the shipped demo instances under instances/.

Each document is small enough to read by eye; the frozen optima live in
the test suite (tests/test_instances.py).
"""

import argparse
import json
from pathlib import Path

import numpy as np

from ccpkit import (
    BiAffine,
    BiAffineEquality,
    BinaryTiny,
    Box,
    CcpInstance,
    Covering,
    EllipticalCcp,
    NonNegOrthant,
    Simplex,
    dump_instance,
    elliptical_to_doc,
    std_normal_quantile,
)


def cover_rows(xi):
    xi = np.asarray(xi, dtype=float)
    return BiAffine(-xi[:, None, :], np.full((xi.shape[0], 1), -1.0))


def equiprobable(n, constraints, x_set, cost, epsilon):
    count = constraints.scenario_count
    return CcpInstance(
        n=n,
        scenario_count=count,
        probabilities=np.full(count, 1.0 / count),
        constraints=constraints,
        x_set=x_set,
        cost=np.asarray(cost, dtype=float),
        epsilon=epsilon,
    )


def finite_instances():
    yield "scalar_chain", equiprobable(
        1,
        BiAffine(np.full((3, 1, 1), -1.0), np.array([[-3.0], [-2.0], [-1.0]])),
        NonNegOrthant(1),
        [1.0],
        0.5,
    )
    yield "two_var_cover", equiprobable(
        2,
        cover_rows([[2.0, 3.0], [2.0, 1.0], [1.0, 2.0]]),
        NonNegOrthant(2),
        [1.0, 1.0],
        1.0 / 3.0,
    )
    yield "binary_pair_cover", equiprobable(
        2,
        cover_rows([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]),
        BinaryTiny(2),
        [1.0, 2.0],
        1.0 / 3.0,
    )
    yield "duplicated_row_cover", equiprobable(
        2,
        cover_rows([[1.0, 0.0], [1.0, 1.0], [1.0, 1.0]]),
        NonNegOrthant(2),
        [3.0, 2.0],
        1.0 / 3.0,
    )
    yield "split_direction_rows", equiprobable(
        2,
        BiAffine(
            np.array([[[-1.0, 0.0]], [[0.0, -1.0]], [[1.0, 1.0]]]),
            np.array([[-1.0], [-1.0], [1.0]]),
        ),
        NonNegOrthant(2),
        [1.0, 1.0],
        1.0 / 3.0,
    )
    yield "equality_pair", equiprobable(
        2,
        BiAffineEquality(
            np.array([[2.0, 3.0], [2.0, 1.0], [1.0, 2.0]]), np.ones(3)
        ),
        NonNegOrthant(2),
        [1.0, 1.0],
        1.0 / 3.0,
    )
    mats = np.ones((10, 1, 3))
    for i in range(3):
        row = np.zeros(3)
        row[i] = 1.0
        mats[i, 0] = row
    yield "tight_cover_family", equiprobable(
        3, Covering(mats), NonNegOrthant(3), np.ones(3), 0.25
    )


def elliptical_instances():
    yield "gaussian_plane", EllipticalCcp(
        mu=np.array([2.0, 1.0]),
        sigma=np.eye(2),
        a=np.eye(2),
        a0=np.zeros(2),
        b=np.zeros(2),
        b0=1.0,
        cost=np.array([-1.0, -3.0]),
        epsilon=0.05,
    )
    yield "simplex_portfolio", EllipticalCcp(
        mu=np.array([0.3, 0.3]),
        sigma=np.eye(2),
        a=np.eye(2),
        a0=np.zeros(2),
        b=np.zeros(2),
        b0=0.3 + std_normal_quantile(0.9) * np.sqrt(0.7),
        cost=np.array([1.0, 2.0]),
        epsilon=0.1,
        x_set=Simplex(2, 1.0),
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out-dir",
        default=str(Path(__file__).resolve().parents[1] / "instances"),
    )
    args = parser.parse_args()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, inst in finite_instances():
        path = out_dir / f"{name}.json"
        path.write_text(dump_instance(inst))
        written.append(path)
    for name, ec in elliptical_instances():
        path = out_dir / f"{name}.json"
        path.write_text(json.dumps(elliptical_to_doc(ec), indent=2, sort_keys=True) + "\n")
        written.append(path)
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
