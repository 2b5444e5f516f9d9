"""Projected subgradient descent for weighted hinge objectives.

Works over S(t) = X intersect {c'x <= t}. Box-like feasible sets get an
exact O(n log n) projection via the KKT multiplier of the budget row;
everything else falls back to Dykstra sweeps.

Step sizes shrink harmonically by default and directions are normalized
once their norm exceeds one, which keeps the scheme scale-free across the
coefficient magnitudes the scenario generators produce. The reported
minimizer is the best iterate seen, not the last one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .errors import BadStart, NoConvergence, NonFinite, UnsupportedSet
from .geometry import dykstra_project, flatten_set
from .model import (
    BiAffine,
    BiAffineEquality,
    Box,
    CcpInstance,
    Covering,
    Halfspaces,
    NonNegOrthant,
    NormAugmented,
    SeparableConvexPower,
    dual_norm,
    dual_norm_subgradient,
)


@dataclass(frozen=True)
class Harmonic:
    scale: float = 1.0

    def step(self, k: int) -> float:
        return self.scale / (k + 1.0)


@dataclass(frozen=True)
class Constant:
    gamma: float

    def step(self, k: int) -> float:
        return self.gamma


StepRule = Union[Harmonic, Constant]


@dataclass(frozen=True)
class SgdConfig:
    max_iter: int = 5000
    step_rule: StepRule = Harmonic()
    stop_tol: float = 1e-10
    stall_window: int = 500


@dataclass(frozen=True, eq=False)
class SgdResult:
    x: np.ndarray
    value: float
    iterations: int
    stalled: bool
    beta: Optional[float] = None


# ---------------------------------------------------------------------------
# losses and subgradients, vectorized over scenarios


def losses_and_grads(instance: CcpInstance, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """g(x, xi^k) and one subgradient per scenario, shapes (N,) and (N, n)."""
    model = instance.constraints
    N = instance.scenario_count
    if isinstance(model, (BiAffine, NormAugmented)):
        rows = model.mats @ x - model.offsets           # (N, I)
        j = np.argmax(rows, axis=1)
        idx = np.arange(N)
        vals = rows[idx, j]
        grads = model.mats[idx, j, :].copy()
        if isinstance(model, NormAugmented) and model.theta > 0.0:
            vals = vals + model.theta * dual_norm(model.norm, x)
            grads += model.theta * dual_norm_subgradient(model.norm, x)[None, :]
        return vals, grads
    if isinstance(model, BiAffineEquality):
        r = model.d @ x - model.e
        return np.abs(r), np.sign(r)[:, None] * model.d
    if isinstance(model, SeparableConvexPower):
        xx = np.maximum(x, 0.0)
        vals = model.weights @ (xx ** model.power) - model.threshold
        grads = model.power * model.weights * (xx ** (model.power - 1.0))[None, :]
        return vals, grads
    if isinstance(model, Covering):
        rows = 1.0 - model.mats @ x
        j = np.argmax(rows, axis=1)
        idx = np.arange(N)
        return rows[idx, j], -model.mats[idx, j, :]
    raise UnsupportedSet(f"no subgradient rule for {type(model).__name__}")


# ---------------------------------------------------------------------------
# projection onto X intersect {c'x <= t}


def _merge_boxes(pieces) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    lo = None
    hi = None
    for p in pieces:
        if isinstance(p, Box):
            plo, phi = p.lower, p.upper
        elif isinstance(p, NonNegOrthant):
            plo = np.zeros(p.dim)
            phi = np.full(p.dim, np.inf)
        else:
            return None
        lo = plo if lo is None else np.maximum(lo, plo)
        hi = phi if hi is None else np.minimum(hi, phi)
    if lo is None or np.any(lo > hi):
        return None
    return lo, hi


def _project_box_cap(lo, hi, c, t, y) -> np.ndarray:
    """Exact projection onto {lo <= x <= hi, c'x <= t} via the cap multiplier.

    phi(lam) = c' clip(y - lam c, lo, hi) is piecewise linear and
    nonincreasing; the multiplier is the exact root of phi(lam) = t,
    found by walking the coordinate breakpoints.
    """
    x = np.clip(y, lo, hi)
    cap = float(c @ x) - t
    if cap <= 1e-13 * (1.0 + abs(t)):
        return x
    # infimum of c'x over the box; 0 * inf corners contribute nothing
    with np.errstate(invalid="ignore"):
        terms = np.where(c > 0, c * lo, np.where(c < 0, c * hi, 0.0))
    cmin = float(np.sum(terms))
    if np.isnan(cmin):
        cmin = -np.inf
    if cmin > t + 1e-9 * (1.0 + abs(t)):
        raise BadStart("budget cap unreachable inside the box")
    with np.errstate(divide="ignore", invalid="ignore"):
        cand = np.concatenate([(y - lo) / c, (y - hi) / c])
    lams = np.unique(cand[np.isfinite(cand) & (cand > 0.0)])
    prev_l, prev_phi = 0.0, cap + t
    for lam in lams:
        val = float(c @ np.clip(y - lam * c, lo, hi))
        if val <= t:
            lam_star = prev_l + (prev_phi - t) * (lam - prev_l) / (prev_phi - val)
            return np.clip(y - lam_star * c, lo, hi)
        prev_l, prev_phi = float(lam), val
    # past the last breakpoint only coordinates with an infinite blocking
    # bound keep moving; the rest sit on the cmin corner
    blocking = np.where(c > 0, lo, np.where(c < 0, hi, 0.0))
    free = (c != 0.0) & ~np.isfinite(blocking)
    slope = float(np.sum(c[free] ** 2))
    if slope <= 0.0:
        # phi is flat at cmin ~ t (within the tolerance checked above)
        return np.clip(y - (prev_l + 1.0) * c, lo, hi)
    lam_star = prev_l + (prev_phi - t) / slope
    return np.clip(y - lam_star * c, lo, hi)


def make_cap_projector(x_set, cost, t: float) -> Callable[[np.ndarray], np.ndarray]:
    """Projection closure for S(t) = X intersect {c'x <= t}."""
    c = np.asarray(cost, dtype=float)
    pieces = flatten_set(x_set)
    merged = _merge_boxes(pieces)
    uncapped = not np.isfinite(t) or float(np.linalg.norm(c)) == 0.0
    if uncapped and t < 0.0:
        def infeasible(_y):
            raise BadStart("budget below the infimum of c'x over X")
        return infeasible
    if merged is not None:
        lo, hi = merged
        if uncapped:
            return lambda y: np.clip(y, lo, hi)
        return lambda y: _project_box_cap(lo, hi, c, t, y)

    sets = pieces if uncapped else pieces + [Halfspaces(c[None, :], np.array([t]))]

    def proj(y: np.ndarray) -> np.ndarray:
        try:
            return dykstra_project(sets, y)
        except NoConvergence as exc:
            # best iterate is still a useful search point mid-run
            return exc.best

    return proj


def feasible_start(x_set, cost, t: float, x0=None) -> np.ndarray:
    """Point of S(t) near x0 (origin by default); BadStart if none is found."""
    c = np.asarray(cost, dtype=float)
    y = np.zeros(c.shape[0]) if x0 is None else np.asarray(x0, dtype=float)
    pieces = flatten_set(x_set)
    merged = _merge_boxes(pieces)
    uncapped = not np.isfinite(t) or float(np.linalg.norm(c)) == 0.0
    if uncapped and t < 0.0:
        raise BadStart("budget below the infimum of c'x over X")
    if merged is not None:
        if uncapped:
            return np.clip(y, merged[0], merged[1])
        return _project_box_cap(merged[0], merged[1], c, t, y)
    sets = pieces if uncapped else pieces + [Halfspaces(c[None, :], np.array([t]))]
    try:
        x = dykstra_project(sets, y)
    except NoConvergence as exc:
        raise BadStart("no feasible start: projection onto S(t) failed") from exc
    if not uncapped and float(c @ x) > t + 1e-6 * (1.0 + abs(t)):
        raise BadStart("no feasible start: budget cap violated after projection")
    return x


# ---------------------------------------------------------------------------
# solvers


def _descend(objective, x0: np.ndarray, proj, cfg: SgdConfig) -> SgdResult:
    """Shared loop: objective(x) -> (value, subgradient)."""
    x = np.asarray(x0, dtype=float).copy()
    best_val, _ = objective(x)
    best_x = x.copy()
    last_improve = 0
    k = 0
    for k in range(cfg.max_iter):
        val, grad = objective(x)
        if not np.isfinite(val):
            raise NonFinite("sgd: objective became non-finite")
        if val < best_val - cfg.stop_tol:
            best_val = val
            best_x = x.copy()
            last_improve = k
        elif val < best_val:
            best_val = val
            best_x = x.copy()
        if k - last_improve >= cfg.stall_window:
            return SgdResult(best_x, float(best_val), k + 1, True)
        nrm = float(np.linalg.norm(grad))
        if nrm > 1.0:
            grad = grad / nrm
        x = proj(x - cfg.step_rule.step(k) * grad)
    return SgdResult(best_x, float(best_val), cfg.max_iter, False)


def _descend_with_polish(objective, x0: np.ndarray, proj, cfg: SgdConfig) -> SgdResult:
    """Main pass plus constant-step restarts from the best iterate.

    Decaying steps crawl along an active budget face; a few short
    constant-step passes recover the tangential motion. Best-iterate
    tracking makes each pass monotone, so the chain can only improve.
    Budgets under 1000 iterations skip the polish (they are deliberate).
    """
    out = _descend(objective, x0, proj, cfg)
    if cfg.max_iter < 1000:
        return out
    best = out
    total = out.iterations
    span = 1.0 + float(np.max(np.abs(best.x))) if best.x.size else 1.0
    pol_iters = max(400, cfg.max_iter // 8)
    pol = SgdConfig(max_iter=pol_iters, stop_tol=cfg.stop_tol,
                    stall_window=min(cfg.stall_window, 150))
    for gamma in (1e-2 * span, 1e-3 * span, 1e-4 * span):
        res = _descend(objective, best.x,
                       proj, SgdConfig(pol.max_iter, Constant(gamma),
                                       pol.stop_tol, pol.stall_window))
        total += res.iterations
        if res.value < best.value:
            best = res
    return SgdResult(best.x, best.value, total, out.stalled, beta=best.beta)


def solve_hinge_sgd(
    instance: CcpInstance,
    t: float,
    z_weights,
    x0,
    cfg: Optional[SgdConfig] = None,
) -> SgdResult:
    """min over S(t) of sum_k p_k z_k (g(x, xi^k))_+ ; best-iterate answer."""
    cfg = cfg or SgdConfig()
    z = np.asarray(z_weights, dtype=float)
    if z.shape != (instance.scenario_count,):
        raise BadStart("z_weights: wrong length")
    w = instance.probabilities * z
    proj = make_cap_projector(instance.x_set, instance.cost, t)
    start = feasible_start(instance.x_set, instance.cost, t, x0)

    def objective(x):
        vals, grads = losses_and_grads(instance, x)
        act = vals > 0.0          # zero subgradient at the hinge kink
        value = float(w[act] @ vals[act]) if np.any(act) else 0.0
        grad = (w[act, None] * grads[act]).sum(axis=0) if np.any(act) else np.zeros_like(x)
        return value, grad

    return _descend_with_polish(objective, start, proj, cfg)


def solve_cvar_lower_sgd(
    instance: CcpInstance,
    t: float,
    x0,
    beta0: Optional[float] = None,
    cfg: Optional[SgdConfig] = None,
) -> SgdResult:
    """min over S(t), beta <= 0 of sum_k p_k max(g_k(x), beta) - (1-eps) beta.

    Joint descent in (x, beta); used as the conditional-value lower bound on
    models with no linear-programming form.
    """
    cfg = cfg or SgdConfig()
    p = instance.probabilities
    eps = instance.epsilon
    proj_x = make_cap_projector(instance.x_set, instance.cost, t)
    x_start = feasible_start(instance.x_set, instance.cost, t, x0)
    losses0, _ = losses_and_grads(instance, x_start)
    beta_start = min(0.0, float(np.min(losses0))) if beta0 is None else min(0.0, float(beta0))

    def objective(xb):
        x, beta = xb[:-1], xb[-1]
        vals, grads = losses_and_grads(instance, x)
        over = vals > beta
        value = float(p[over] @ vals[over] + (1.0 - float(np.sum(p[over]))) * beta
                      - (1.0 - eps) * beta)
        gx = (p[over, None] * grads[over]).sum(axis=0) if np.any(over) else np.zeros_like(x)
        gb = float(np.sum(p[~over])) - (1.0 - eps)
        return value, np.concatenate([gx, [gb]])

    def proj(xb):
        return np.concatenate([proj_x(xb[:-1]), [min(0.0, xb[-1])]])

    out = _descend_with_polish(objective, np.concatenate([x_start, [beta_start]]), proj, cfg)
    return SgdResult(out.x[:-1], out.value, out.iterations, out.stalled, beta=float(out.x[-1]))
