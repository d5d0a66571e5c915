"""Sparse linear DBN structure learning under a smooth acyclicity constraint.

Solves

    min_{W, A}  1/(2R) ||X - XW - YA||_F^2 + lambda_w |W|_1 + lambda_a |A|_1
    s.t.        h(W) = tr(exp(W * W)) - K = 0

with an augmented-Lagrangian outer loop and L-BFGS-B on the inner problem. The
L1 terms are made smooth by writing each matrix as ``pos - neg`` with both parts
bounded below by zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as slin
import scipy.optimize as sopt

from .core import BinaryDbn, DidNotConverge, ShapeMismatch, WeightedDbn
from .design import LaggedDesign

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    lambda_w: float = 0.01
    lambda_a: float = 0.01
    edge_threshold: float = 0.1
    h_tolerance: float = 1e-8
    rho_init: float = 1.0
    rho_max: float = 1e16
    rho_growth: float = 10.0
    max_outer_iters: int = 100
    inner_max_iters: int = 500
    inner_gtol: float = 1e-7
    inner_solver: str = "L-BFGS-B"
    seed: int = 0

    def __post_init__(self):
        for name in ("lambda_w", "lambda_a", "edge_threshold"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("h_tolerance", "rho_init", "rho_max", "inner_gtol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if not self.rho_growth > 1:
            raise ValueError(f"rho_growth must be > 1, got {self.rho_growth}")
        if self.max_outer_iters < 1 or self.inner_max_iters < 1:
            raise ValueError("iteration caps must be >= 1")
        if self.inner_solver != "L-BFGS-B":
            raise ValueError(f"unsupported inner solver {self.inner_solver!r}")

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class OuterStep:
    objective: float
    h: float
    rho: float
    alpha: float
    inner_iters: int


@dataclass(frozen=True)
class SolverTrace:
    steps: tuple[OuterStep, ...] = field(default_factory=tuple)
    converged: bool = False

    @property
    def final_h(self) -> float:
        return self.steps[-1].h if self.steps else float("inf")


def _check_shapes(W, A, design: LaggedDesign):
    k = design.n_sensors
    p = design.lag
    if W.shape != (k, k):
        raise ShapeMismatch(f"W must be {(k, k)}, got {W.shape}")
    if A.shape != (p * k, k):
        raise ShapeMismatch(f"A must be {(p * k, k)}, got {A.shape}")


def _residual(W, A, design: LaggedDesign):
    _check_shapes(W, A, design)
    return design.current - design.current @ W - design.lagged @ A


def sem_loss(W, A, design: LaggedDesign) -> float:
    """Least-squares loss ``1/(2R) ||X - XW - YA||_F^2``."""
    W, A = np.asarray(W, float), np.asarray(A, float)
    resid = _residual(W, A, design)
    return 0.5 / design.n_rows * float(np.sum(resid * resid))


def sem_loss_gradient(W, A, design: LaggedDesign):
    W, A = np.asarray(W, float), np.asarray(A, float)
    resid = _residual(W, A, design)
    r = design.n_rows
    return -design.current.T @ resid / r, -design.lagged.T @ resid / r


def acyclicity(W) -> float:
    """``tr(exp(W * W)) - K``; zero iff the support of W is a DAG.

    Uses scipy's Pade scaling-and-squaring ``expm`` (relative accuracy near machine
    precision for the norms met here).
    """
    W = np.asarray(W, float)
    return float(np.trace(slin.expm(W * W)) - W.shape[0])


def acyclicity_gradient(W) -> np.ndarray:
    W = np.asarray(W, float)
    return slin.expm(W * W).T * W * 2.0


def _acyclicity_with_grad(W):
    E = slin.expm(W * W)
    return float(np.trace(E) - W.shape[0]), E.T * W * 2.0


class AugmentedLagrangian:
    """Inner objective over the split vector ``[W+, W-, A+, A-]`` (all >= 0).

    Gram matrices are cached so each evaluation costs O((pK + K)^2 K) regardless
    of the number of design rows.
    """

    def __init__(self, design: LaggedDesign, lambda_w: float, lambda_a: float):
        self.k = design.n_sensors
        self.p = design.lag
        self.r = design.n_rows
        Z = np.hstack([design.current, design.lagged])
        self._zz = Z.T @ Z / self.r
        self._zx = Z.T @ design.current / self.r
        self._xx = float(np.sum(design.current * design.current)) / self.r
        self.lambda_w = lambda_w
        self.lambda_a = lambda_a
        self.rho = 1.0
        self.alpha = 0.0

    @property
    def n_w(self) -> int:
        return self.k * self.k

    @property
    def n_a(self) -> int:
        return self.p * self.k * self.k

    @property
    def size(self) -> int:
        return 2 * (self.n_w + self.n_a)

    def unpack(self, x: np.ndarray):
        k, nw, na = self.k, self.n_w, self.n_a
        W = (x[:nw] - x[nw:2 * nw]).reshape(k, k)
        A = (x[2 * nw:2 * nw + na] - x[2 * nw + na:]).reshape(self.p * k, k)
        return W, A

    def bounds(self) -> list[tuple[float, float | None]]:
        k = self.k
        w_bounds = [(0.0, 0.0) if i == j else (0.0, None) for i in range(k) for j in range(k)]
        a_bounds = [(0.0, None)] * self.n_a
        return w_bounds * 2 + a_bounds * 2

    def loss(self, W, A):
        B = np.vstack([W, A])
        zzb = self._zz @ B
        value = 0.5 * (self._xx - 2.0 * np.sum(B * self._zx) + np.sum(B * zzb))
        grad = zzb - self._zx
        return value, grad[:self.k], grad[self.k:]

    def __call__(self, x: np.ndarray):
        W, A = self.unpack(x)
        loss, g_w, g_a = self.loss(W, A)
        h, g_h = _acyclicity_with_grad(W)
        value = (loss + 0.5 * self.rho * h * h + self.alpha * h
                 + self.lambda_w * x[:2 * self.n_w].sum()
                 + self.lambda_a * x[2 * self.n_w:].sum())
        g_w = (g_w + (self.rho * h + self.alpha) * g_h).ravel()
        g_a = g_a.ravel()
        grad = np.concatenate([
            g_w + self.lambda_w, -g_w + self.lambda_w,
            g_a + self.lambda_a, -g_a + self.lambda_a,
        ])
        return value, grad


def fit_dbn(design: LaggedDesign, config: SolverConfig = SolverConfig(), sensor_names=()):
    """Fit intra/inter weights by the augmented-Lagrangian method.

    Returns ``(WeightedDbn, SolverTrace)``. Raises ``DidNotConverge`` (carrying the
    trace and the last iterate) when rho passes ``rho_max`` or the outer-iteration
    cap is hit while ``h`` is still above ``h_tolerance``.
    """
    if design.n_rows < 1:
        raise ShapeMismatch("design has no rows")
    obj = AugmentedLagrangian(design, config.lambda_w, config.lambda_a)
    bounds = obj.bounds()
    x = np.zeros(obj.size)
    rho, alpha, h = config.rho_init, 0.0, np.inf
    steps: list[OuterStep] = []
    options = {"maxiter": config.inner_max_iters, "gtol": config.inner_gtol}

    for _ in range(config.max_outer_iters):
        inner_iters = 0
        while True:
            obj.rho, obj.alpha = rho, alpha
            sol = sopt.minimize(obj, x, jac=True, method="L-BFGS-B", bounds=bounds, options=options)
            inner_iters += int(sol.nit)
            x_new = sol.x
            h_new = acyclicity(obj.unpack(x_new)[0])
            if h_new > 0.25 * h and rho < config.rho_max:
                rho *= config.rho_growth
            else:
                break
        x, h = x_new, h_new
        alpha += rho * h
        steps.append(OuterStep(float(sol.fun), float(h), float(rho), float(alpha), inner_iters))
        log.debug("outer %d: h=%.3e rho=%.1e", len(steps), h, rho)
        if h <= config.h_tolerance or rho >= config.rho_max:
            break

    W, A = obj.unpack(x)
    np.fill_diagonal(W, 0.0)
    dbn = WeightedDbn(W, A, design.lag, tuple(sensor_names))
    converged = h <= config.h_tolerance
    trace = SolverTrace(tuple(steps), converged)
    if not converged:
        raise DidNotConverge(f"h={h:.3e} > {config.h_tolerance:g} at rho={rho:.1e}", trace, dbn)
    return dbn, trace


def threshold(dbn: WeightedDbn, edge_threshold: float) -> BinaryDbn:
    """Keep edges with ``|weight| > edge_threshold``; raises if the intra graph is cyclic."""
    if edge_threshold < 0:
        raise ValueError("edge_threshold must be >= 0")
    k = dbn.node_count
    intra = {(int(j), int(i)) for j, i in zip(*np.nonzero(np.abs(dbn.intra) > edge_threshold)) if j != i}
    inter = set()
    for row, i in zip(*np.nonzero(np.abs(dbn.inter) > edge_threshold)):
        ell, j = divmod(int(row), k)
        inter.add((j, ell + 1, int(i)))
    return BinaryDbn(frozenset(intra), frozenset(inter), k, dbn.lag)
