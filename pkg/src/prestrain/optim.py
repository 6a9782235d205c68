"""Limited-memory BFGS with Armijo backtracking."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class OptimizerOptions:
    gtol: float = 1e-9
    max_iters: int = 5000
    memory: int = 10
    c1: float = 1e-4
    max_backtracks: int = 50

    def __post_init__(self):
        if self.gtol < 0 or self.max_iters < 0 or self.memory < 1:
            raise ValueError("invalid optimizer options")


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    iterations: int
    converged: bool
    stalled: bool
    message: str
    history: list = field(default_factory=list)


def _two_loop(g, pairs):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * np.dot(s, q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, _ = pairs[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return -q


def lbfgs(fun_grad, x0, options: OptimizerOptions = OptimizerOptions()) -> OptimizeResult:
    """Minimize ``fun_grad(x) -> (f, g)`` from ``x0``.

    Stops when ``max|g| <= gtol`` or after ``max_iters`` iterations. A line
    search that cannot decrease the objective, even along the steepest
    descent direction, ends the run with ``stalled=True`` and the last
    accepted iterate. ``history`` holds the objective at each accepted
    iterate, so it is non-increasing.
    """
    x = np.array(x0, dtype=float)
    f, g = fun_grad(x)
    history = [float(f)]
    pairs = deque(maxlen=options.memory)
    it = 0
    stalled = False
    msg = "maximum iterations reached"
    while True:
        gn = float(np.max(np.abs(g))) if g.size else 0.0
        if gn <= options.gtol:
            msg = "gradient tolerance reached"
            break
        if it >= options.max_iters:
            break
        d = _two_loop(g, list(pairs))
        slope = float(np.dot(g, d))
        if not slope < 0:
            pairs.clear()
            d = -g
            slope = -float(np.dot(g, g))
        alpha = 1.0 if pairs else min(1.0, 1.0 / max(gn, 1e-300))
        accepted = False
        for _ in range(options.max_backtracks):
            xn = x + alpha * d
            fn, gnew = fun_grad(xn)
            if np.isfinite(fn) and fn <= f + options.c1 * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            if pairs:
                # retry once along steepest descent with fresh memory
                pairs.clear()
                continue
            stalled = True
            msg = "line search stalled"
            break
        s = xn - x
        y = gnew - g
        sy = float(np.dot(s, y))
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            pairs.append((s, y, 1.0 / sy))
        x, f, g = xn, fn, gnew
        history.append(float(f))
        it += 1
    return OptimizeResult(
        x=x,
        fun=float(f),
        grad_norm=float(np.max(np.abs(g))) if g.size else 0.0,
        iterations=it,
        converged=msg == "gradient tolerance reached",
        stalled=stalled,
        message=msg,
        history=history,
    )
