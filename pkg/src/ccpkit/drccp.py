"""Worst-case chance constraints over an inf-Wasserstein ambiguity ball.

Every distribution within transport radius theta of the empirical one
(moving each scenario at most theta in the chosen norm) must satisfy the
chance constraint. Two reductions bring this back to a plain scenario
instance:

  dual   g_k(x) + theta * dual_norm(x-gradient of the scenario row)
         for bi-affine rows, handled by the norm-augmented model;
  shift  move each scenario itself to its worst position, valid when
         the loss is monotone in xi (sup-norm ball, componentwise worst
         case), so only the scenario data changes.

The reduced instance runs through the ordinary solvers unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .alsox import also_x
from .alsoxplus import also_x_plus
from .cvar import cvar_solution
from .errors import ModeMismatch, NormMismatch, ValidationError
from .geometry import flatten_set
from .model import (
    BiAffine,
    BiAffineEquality,
    BinaryTiny,
    Box,
    CcpInstance,
    Covering,
    LInf,
    NonNegOrthant,
    NormAugmented,
    NormSpec,
    SeparableConvexPower,
    Simplex,
    SolveReport,
)
from .subgrad import SgdConfig


@dataclass(frozen=True, eq=False)
class DrccpSpec:
    base: CcpInstance
    theta: float
    norm: NormSpec
    mode: str = "dual"

    def __post_init__(self):
        if not np.isfinite(self.theta) or self.theta < 0.0:
            raise ValidationError("theta: transport radius must be finite and >= 0")
        if self.mode not in ("dual", "shift"):
            raise ValidationError(f"mode: expected 'dual' or 'shift', got {self.mode!r}")
        object.__setattr__(self, "theta", float(self.theta))


def _structurally_nonneg(x_set) -> bool:
    for piece in flatten_set(x_set):
        if isinstance(piece, (NonNegOrthant, Simplex, BinaryTiny)):
            return True
        if isinstance(piece, Box) and np.all(piece.lower >= 0.0):
            return True
    return False


def robustify(spec: DrccpSpec) -> CcpInstance:
    """Rewrite the base instance so nominal feasibility means worst-case
    feasibility over the ambiguity ball."""
    base = spec.base
    model = base.constraints
    theta = spec.theta
    if spec.mode == "dual":
        if isinstance(model, BiAffine):
            new = NormAugmented(model.mats, model.offsets, theta, spec.norm)
        elif isinstance(model, Covering):
            mats = -model.mats
            offsets = -np.ones(model.mats.shape[:2])
            new = NormAugmented(mats, offsets, theta, spec.norm)
        elif isinstance(model, BiAffineEquality):
            mats = np.stack([model.d, -model.d], axis=1)
            offsets = np.stack([model.e, -model.e], axis=1)
            new = NormAugmented(mats, offsets, theta, spec.norm)
        else:
            raise ModeMismatch(
                f"dual reduction needs bi-affine rows, not {type(model).__name__}"
            )
    else:
        if not isinstance(spec.norm, LInf):
            raise NormMismatch("shift reduction needs the sup-norm transport ball")
        if isinstance(model, SeparableConvexPower):
            new = SeparableConvexPower(model.power, model.weights + theta, model.threshold)
        elif isinstance(model, BiAffine):
            if not _structurally_nonneg(base.x_set):
                raise ModeMismatch(
                    "componentwise worst case needs x >= 0 baked into the domain"
                )
            new = BiAffine(model.mats + theta, model.offsets)
        else:
            raise ModeMismatch(
                f"shift reduction undefined for {type(model).__name__}"
            )
    return CcpInstance(
        n=base.n,
        scenario_count=base.scenario_count,
        probabilities=base.probabilities,
        constraints=new,
        x_set=base.x_set,
        cost=base.cost,
        epsilon=base.epsilon,
    )


def worst_case_solve(
    spec: DrccpSpec,
    method: str = "alsox",
    delta1: float = 1e-2,
    delta2: float = 1e-2,
    backend: str = "auto",
    sgd_config: Optional[SgdConfig] = None,
) -> SolveReport:
    robust = robustify(spec)
    if method == "alsox":
        return also_x(robust, delta1=delta1, backend=backend, sgd_config=sgd_config)
    if method == "alsoxplus":
        return also_x_plus(
            robust, delta1=delta1, delta2=delta2, backend=backend, sgd_config=sgd_config
        )
    if method == "cvar":
        return cvar_solution(robust, backend=backend, sgd_config=sgd_config)
    raise ValidationError(f"method: expected alsox/alsoxplus/cvar, got {method!r}")
