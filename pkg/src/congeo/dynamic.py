"""Time-dependent complementarity functionals over flow trajectories.

For a flow trajectory h(t) with travel cost c(t) (sampled or produced by a
cost model c(h, t)), two quantities are evaluated on the grid:

* ``dynamic_gap`` -- the literal line integral of psi(h, c) against dh,
  i.e. the quadrature of psi(h(t), c(t)) h'(t) dt, with psi either phi/2
  (``half_phi``) or phi^2/2 (``half_phi_squared``).  Its value depends only
  weakly on the interior of monotone trajectories (it is a line integral in
  h), and it is signed for decreasing h, so it is reported, not optimized.

* ``complementarity_merit`` -- the plain time quadrature of psi.  In the
  squared variant this is nonnegative and vanishes exactly when the
  complementarity residual phi(h(t), c(t)) vanishes at every node, so
  ``minimize_dynamic`` drives this one (projected gradient, h >= 0); the
  literal gap of the optimized trajectory is still reported alongside.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .ncp import fb_phi

__all__ = [
    "Trajectory",
    "DynamicConfig",
    "OptimizerSettings",
    "MinimizeResult",
    "dynamic_gap",
    "complementarity_merit",
    "minimize_dynamic",
    "parse_cost_model",
    "VARIANTS",
]

VARIANTS = ("half_phi", "half_phi_squared")


@dataclass(frozen=True)
class Trajectory:
    """Flow samples h >= 0 on a strictly increasing time grid.

    Costs come either as per-node samples ``c`` or as a model ``cost(h, t)``
    evaluated on demand (exactly one of the two must be present).
    """

    grid: np.ndarray
    h: np.ndarray
    c: np.ndarray | None = None
    cost: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        t = np.array(self.grid, dtype=float)
        h = np.array(self.h, dtype=float)
        if t.ndim != 1 or t.shape[0] < 3:
            raise ValueError("trajectory grid needs at least three nodes")
        if np.any(np.diff(t) <= 0):
            raise ValueError("trajectory grid must be strictly increasing")
        if h.shape != t.shape or not np.all(np.isfinite(h)):
            raise ValueError("flows must match the grid and be finite")
        if np.any(h < 0):
            raise ValueError("flows must be nonnegative")
        if (self.c is None) == (self.cost is None):
            raise ValueError("provide exactly one of sampled costs or a cost model")
        t.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "grid", t)
        object.__setattr__(self, "h", h)
        if self.c is not None:
            c = np.array(self.c, dtype=float)
            if c.shape != t.shape or not np.all(np.isfinite(c)):
                raise ValueError("cost samples must match the grid and be finite")
            c.setflags(write=False)
            object.__setattr__(self, "c", c)

    @property
    def n_nodes(self) -> int:
        return self.grid.shape[0]

    def cost_values(self) -> np.ndarray:
        if self.c is not None:
            return self.c
        vals = np.asarray(self.cost(self.h, self.grid), dtype=float)
        if vals.shape != self.grid.shape or not np.all(np.isfinite(vals)):
            raise ValueError("cost model must return finite per-node values")
        return vals

    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.h) >= 0.0))

    def flow_rate(self) -> np.ndarray:
        """h'(t): central differences inside, one-sided at the endpoints."""
        return np.gradient(self.h, self.grid, edge_order=1)


@dataclass(frozen=True)
class OptimizerSettings:
    step: float = 1.0
    max_iter: int = 500
    tol: float = 1e-10
    step_growth: float = 1.5
    max_step: float = 1e8
    fd_step: float = 1e-7

    def __post_init__(self):
        for name in ("step", "max_iter", "tol", "step_growth", "max_step", "fd_step"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class DynamicConfig:
    variant: str = "half_phi_squared"
    pi_offset: float = 0.0  # replaces c by c - pi_offset
    fix_endpoints: bool = False
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")


def _psi(h: np.ndarray, c: np.ndarray, variant: str) -> np.ndarray:
    phi = fb_phi(h, c)
    if variant == "half_phi":
        return 0.5 * phi
    return 0.5 * phi * phi


_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def dynamic_gap(traj: Trajectory, cfg: DynamicConfig | None = None) -> float:
    """Trapezoid value of the literal integral of psi(h, c - pi) h'(t) dt."""
    cfg = cfg or DynamicConfig()
    c = traj.cost_values() - cfg.pi_offset
    integrand = _psi(traj.h, c, cfg.variant) * traj.flow_rate()
    return float(_trapezoid(integrand, traj.grid))


def complementarity_merit(traj: Trajectory, cfg: DynamicConfig | None = None) -> float:
    """Trapezoid value of psi(h, c - pi) dt; in the squared variant this is
    nonnegative and zero exactly when phi vanishes at every node."""
    cfg = cfg or DynamicConfig()
    c = traj.cost_values() - cfg.pi_offset
    return float(_trapezoid(_psi(traj.h, c, cfg.variant), traj.grid))


@dataclass(frozen=True)
class MinimizeResult:
    trajectory: Trajectory
    objective: float  # complementarity merit of the final trajectory
    gap: float  # literal dynamic_gap of the final trajectory
    iterations: int
    converged: bool
    monotone_flow: bool
    objective_history: tuple[float, ...] = field(repr=False, default=())


def minimize_dynamic(
    cost_model: Callable[[np.ndarray, np.ndarray], np.ndarray],
    grid,
    cfg: DynamicConfig | None = None,
    h0=None,
) -> MinimizeResult:
    """Projected gradient descent of the complementarity merit over node flows.

    The flows stay clamped at h >= 0 (endpoints additionally pinned when
    ``fix_endpoints`` is set); gradients are central finite differences of
    the objective.  The objective never increases across accepted steps; if
    the iteration budget runs out the best iterate is returned with
    ``converged=False``.
    """
    cfg = cfg or DynamicConfig()
    opt = cfg.optimizer
    grid = np.asarray(grid, dtype=float)
    if h0 is None:
        h = np.ones_like(grid)
    else:
        h = np.array(h0, dtype=float)
        if h.shape != grid.shape:
            raise ValueError("h0 must match the grid")
    h = np.maximum(h, 0.0)

    def objective(hv: np.ndarray) -> float:
        return complementarity_merit(Trajectory(grid=grid, h=hv, cost=cost_model), cfg)

    def project(hv: np.ndarray) -> np.ndarray:
        out = np.maximum(hv, 0.0)
        if cfg.fix_endpoints:
            out[0], out[-1] = h[0], h[-1]
        return out

    def fd_gradient(hv: np.ndarray) -> np.ndarray:
        g = np.empty_like(hv)
        for k in range(hv.shape[0]):
            d = opt.fd_step * max(1.0, abs(hv[k]))
            hp = hv.copy()
            hp[k] += d
            hm = hv.copy()
            hm[k] = max(hm[k] - d, 0.0)
            span = hp[k] - hm[k]
            g[k] = (objective(hp) - objective(hm)) / span
        return g

    val = objective(h)
    history = [val]
    step = opt.step
    converged = False
    iterations = 0
    endpoints0 = (h[0], h[-1])

    for iterations in range(1, opt.max_iter + 1):
        grad = fd_gradient(h)
        if cfg.fix_endpoints:
            grad[0] = grad[-1] = 0.0
        moved = False
        while step >= 1e-18:
            trial = project(h - step * grad)
            if cfg.fix_endpoints:
                trial[0], trial[-1] = endpoints0
            tval = objective(trial)
            if tval <= val:
                delta = float(np.max(np.abs(trial - h)))
                h, val = trial, tval
                history.append(val)
                moved = True
                step = min(step * opt.step_growth, opt.max_step)
                if delta <= opt.tol:
                    converged = True
                break
            step *= 0.5
        if not moved or converged:
            converged = converged or not moved  # stationary: no descent direction left
            break

    final = Trajectory(grid=grid, h=h, cost=cost_model)
    return MinimizeResult(
        trajectory=final,
        objective=val,
        gap=dynamic_gap(final, cfg),
        iterations=iterations,
        converged=converged,
        monotone_flow=final.monotone(),
        objective_history=tuple(history),
    )


_MODEL_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(([^)]*)\))?\s*$")


def parse_cost_model(spec: str) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Named cost models: ``zero``, ``identity`` (c = h), ``affine(a,b)``
    (c = a*h + b)."""
    m = _MODEL_RE.match(spec)
    if not m:
        raise ValueError(f"malformed cost model: {spec!r}")
    name, argstr = m.group(1), m.group(2)
    args = []
    if argstr is not None and argstr.strip():
        try:
            args = [float(tok) for tok in argstr.split(",")]
        except ValueError:
            raise ValueError(f"non-numeric arguments in cost model: {spec!r}") from None
    if name == "zero":
        if args:
            raise ValueError("cost model 'zero' takes no arguments")
        return lambda h, t: np.zeros_like(np.asarray(h, dtype=float))
    if name == "identity":
        if args:
            raise ValueError("cost model 'identity' takes no arguments")
        return lambda h, t: np.asarray(h, dtype=float).copy()
    if name == "affine":
        if len(args) != 2:
            raise ValueError("cost model 'affine' takes exactly (a, b)")
        a, b = args
        return lambda h, t: a * np.asarray(h, dtype=float) + b
    raise ValueError(f"unknown cost model {name!r}")
