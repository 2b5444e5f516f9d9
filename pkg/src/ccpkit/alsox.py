"""Budget bisection that accepts hinge minimizers by their violation mass.

The scheme brackets the optimal cost between the scenario-quantile lower
bound and the value of a chance-feasible incumbent, then repeatedly solves
the hinge lower level at the midpoint budget and keeps the minimizer
whenever its violation probability is within eps (a tie at exactly eps
counts as feasible).

The starting incumbent comes from the tail (cvar) solution, or from the
relax-and-scale point on covering instances where that is cheaper and
carries its own guarantee. An empty tail program does not mean the chance
constraint is empty (equality rows are the standard case), so that
failure triggers a doubling search above the lower bound for a budget
whose hinge minimizer already passes the violation check. The incumbent
is only ever replaced by accepted probe minimizers, so the reported
objective never exceeds the bound provider's value.
"""

from __future__ import annotations

from time import perf_counter
from typing import Optional, Tuple

import numpy as np

from .covering import quantile_lower_bound, relax_and_scale
from .cvar import cvar_solution
from .errors import (
    BadStart,
    Infeasible,
    NoFeasibleT,
    NonFinite,
    UnsupportedSet,
    ValidationError,
)
from .lowerlevel import solve_lower_level
from .model import CcpInstance, Covering, SolveReport, is_feasible, violation_probability
from .subgrad import SgdConfig


def bounds_with_anchor(
    instance: CcpInstance,
    sgd_config: Optional[SgdConfig] = None,
) -> Tuple[float, float, np.ndarray]:
    """(t_low, t_up, incumbent) with the incumbent chance-feasible at cost t_up."""
    t_low = quantile_lower_bound(instance, sgd_config)
    if t_low == np.inf:
        raise NoFeasibleT("a scenario inside the required mass cannot be satisfied")
    anchor = None
    if isinstance(instance.constraints, Covering) and instance.equiprobable:
        try:
            rep = relax_and_scale(instance)
            anchor = (rep.objective, rep.x_star)
        except (Infeasible, ValidationError, UnsupportedSet, NonFinite):
            anchor = None
    if anchor is None:
        try:
            rep = cvar_solution(instance, sgd_config=sgd_config)
            anchor = (rep.objective, rep.x_star)
        except Infeasible:
            anchor = _anchor_by_search(instance, t_low, sgd_config)
    return t_low, float(anchor[0]), anchor[1]


def _anchor_by_search(instance, t_low, sgd_config):
    base = t_low if np.isfinite(t_low) else 0.0
    width = max(1.0, abs(base) / 2.0)
    for _ in range(60):
        t = base + width
        sol = _probe(instance, t, "auto", sgd_config)
        if sol is not None and is_feasible(instance, sol.x):
            return float(instance.cost @ sol.x), sol.x
        width *= 2.0
    raise NoFeasibleT("no budget produced a chance-feasible hinge minimizer")


def _probe(instance, t, backend, sgd_config):
    """Hinge minimizer at budget t, or None when S(t) is empty."""
    try:
        return solve_lower_level(instance, t, None, backend=backend, sgd_config=sgd_config)
    except BadStart:
        return None


def also_x(
    instance: CcpInstance,
    delta1: float = 1e-2,
    backend: str = "auto",
    sgd_config: Optional[SgdConfig] = None,
    max_bisections: int = 200,
) -> SolveReport:
    """Bisect the budget, accepting chance-feasible hinge minimizers."""
    start = perf_counter()
    t_low, t_up, incumbent = bounds_with_anchor(instance, sgd_config)
    lo0, up0 = t_low, t_up
    probes = 0
    if t_low == -np.inf:
        # expand downward until a probe is rejected, then bisect as usual
        width = max(1.0, abs(t_up))
        t_low = t_up - width
        for _ in range(60):
            probes += 1
            sol = _probe(instance, t_low, backend, sgd_config)
            if sol is not None and is_feasible(instance, sol.x):
                t_up, incumbent = t_low, sol.x
                width *= 2.0
                t_low = t_up - width
            else:
                break
        lo0 = t_low
    while t_up - t_low > delta1 and probes < max_bisections:
        probes += 1
        t = 0.5 * (t_low + t_up)
        sol = _probe(instance, t, backend, sgd_config)
        if sol is not None and is_feasible(instance, sol.x):
            t_up, incumbent = t, sol.x
        else:
            t_low = t
    value = float(instance.cost @ incumbent)
    return SolveReport(
        method="alsox",
        t_star=t_up,
        x_star=incumbent,
        objective=value,
        feasible=is_feasible(instance, incumbent),
        violation_prob=violation_probability(instance, incumbent),
        iterations=probes,
        lower_bound_used=lo0,
        upper_bound_used=up0,
        wall_time=perf_counter() - start,
    )
