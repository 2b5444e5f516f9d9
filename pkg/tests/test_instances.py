"""Shipped demo documents stay in sync with their frozen optima."""

import json
from pathlib import Path

import numpy as np
import pytest

from ccpkit import exact_conic_solve, exact_solve, load_elliptical, load_instance

INSTANCES = Path(__file__).resolve().parents[1] / "instances"

FROZEN_FINITE = {
    "scalar_chain": 2.0,
    "two_var_cover": 0.5,
    "binary_pair_cover": 1.0,
    "duplicated_row_cover": 2.0,
    "split_direction_rows": 1.0,
    "equality_pair": 0.5,
    "tight_cover_family": 1.0,
}

FROZEN_CONIC = {
    "gaussian_plane": -1.55432057,
    "simplex_portfolio": 2.0 - (1.0 + np.sqrt(0.4)) / 2.0,
}


def test_every_document_is_covered():
    names = {p.stem for p in INSTANCES.glob("*.json")}
    assert names == set(FROZEN_FINITE) | set(FROZEN_CONIC)


@pytest.mark.parametrize("name", sorted(FROZEN_FINITE))
def test_finite_documents(name):
    inst = load_instance((INSTANCES / f"{name}.json").read_text())
    assert exact_solve(inst).objective == pytest.approx(FROZEN_FINITE[name], abs=1e-6)


@pytest.mark.parametrize("name", sorted(FROZEN_CONIC))
def test_elliptical_documents(name):
    text = (INSTANCES / f"{name}.json").read_text()
    assert json.loads(text)["type"] == "elliptical_gaussian"
    ec = load_elliptical(text)
    value, _ = exact_conic_solve(ec)
    assert value == pytest.approx(FROZEN_CONIC[name], abs=1e-5)
