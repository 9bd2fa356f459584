"""
Convex objectives on P_n and the composed inner objectives of the proximal step.

Hypotheses on f (a nonempty set of minimizers, continuity up to the boundary)
are a caller contract; they cannot be verified from oracles.
"""
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import torch

from .defs import (DTYPE, DIST_ZERO_TOL, SMOOTHNESS_DATA_POINTS,
                   SMOOTHNESS_DIFFERENTIABLE, SMOOTHNESS_GENERAL, ContractError)
from .reducible import DiagPD, Normalizer, OrthoFrame, normalizer_from, reconstruct
from .spd import (SpdPoint, TangentVec, distance, euclid_to_riem_grad,
                  log_map)


@dataclass(frozen=True)
class Objective:
    """
    :param dim: int or None (any dimension)
    :param value: SpdPoint -> float
    :param subgrad: SpdPoint -> TangentVec, a Riemannian (sub)gradient; optional
    :param smoothness: one of the SMOOTHNESS_* flags
    """
    dim: Optional[int]
    value: Callable[[SpdPoint], float]
    subgrad: Optional[Callable[[SpdPoint], TangentVec]] = None
    smoothness: int = SMOOTHNESS_GENERAL
    name: str = ""

    def __call__(self, x: SpdPoint) -> float:
        if self.dim is not None and x.dim != self.dim:
            raise ContractError(f"objective {self.name!r} expects dim {self.dim}, got {x.dim}")
        return self.value(x)

    @property
    def differentiable(self) -> bool:
        return self.smoothness == SMOOTHNESS_DIFFERENTIABLE and self.subgrad is not None

    def grad(self, x: SpdPoint) -> TangentVec:
        if self.subgrad is None:
            raise ContractError(f"objective {self.name!r} has no (sub)gradient oracle")
        return self.subgrad(x)


def _check_data(points: Sequence[SpdPoint], weights: Optional[Sequence[float]]):
    if len(points) == 0:
        raise ContractError("at least one data point is required")
    n = points[0].dim
    if any(p.dim != n for p in points):
        raise ContractError("data points must share one dimension")
    if weights is None:
        weights = [1.0] * len(points)
    weights = [float(w) for w in weights]
    if len(weights) != len(points):
        raise ContractError(f"{len(points)} points but {len(weights)} weights")
    if any(not w > 0.0 for w in weights):
        raise ContractError("weights must be positive")
    return list(points), weights, n


def karcher_objective(points: Sequence[SpdPoint],
                      weights: Optional[Sequence[float]] = None) -> Objective:
    """
    Weighted Karcher mean model: f(x) = 1/2 sum_i w_i d^2(x, x_i).
    grad f(x) = -sum_i w_i exp_x^-1(x_i).
    """
    points, weights, n = _check_data(points, weights)

    def value(x: SpdPoint) -> float:
        return 0.5 * sum(w * distance(x, p) ** 2 for p, w in zip(points, weights))

    def subgrad(x: SpdPoint) -> TangentVec:
        g = torch.zeros(n, n, dtype=DTYPE)
        for p, w in zip(points, weights):
            g -= w * log_map(x, p).vec
        return TangentVec(x, g)

    return Objective(n, value, subgrad, SMOOTHNESS_DIFFERENTIABLE, "karcher")


def median_objective(points: Sequence[SpdPoint],
                     weights: Optional[Sequence[float]] = None) -> Objective:
    """
    Weighted geodesic median model: f(x) = sum_i w_i d(x, x_i).
    Terms with d(x, x_i) < 1e-12 contribute zero to the subgradient, which is a
    valid selection from the subdifferential there.
    """
    points, weights, n = _check_data(points, weights)

    def value(x: SpdPoint) -> float:
        return sum(w * distance(x, p) for p, w in zip(points, weights))

    def subgrad(x: SpdPoint) -> TangentVec:
        g = torch.zeros(n, n, dtype=DTYPE)
        for p, w in zip(points, weights):
            d = distance(x, p)
            if d < DIST_ZERO_TOL:
                continue
            g -= (w / d) * log_map(x, p).vec
        return TangentVec(x, g)

    return Objective(n, value, subgrad, SMOOTHNESS_DATA_POINTS, "median")


def trace_objective() -> Objective:
    """f(x) = Tr(x); geodesically convex, Riemannian gradient x^2"""

    def value(x: SpdPoint) -> float:
        return torch.trace(x.mat).item()

    def subgrad(x: SpdPoint) -> TangentVec:
        return euclid_to_riem_grad(x, torch.eye(x.dim, dtype=DTYPE))

    return Objective(None, value, subgrad, SMOOTHNESS_DIFFERENTIABLE, "trace")


@dataclass(frozen=True)
class ProxObjective:
    """a -> f(a) + (beta / 2) d^2(a, a_k)"""
    inner: Objective
    anchor: SpdPoint
    beta: float
    normalizer: Normalizer

    def __call__(self, a: SpdPoint) -> float:
        return prox_value(self, a)

    def grad(self, a: SpdPoint) -> TangentVec:
        """grad f(a) - beta exp_a^-1(a_k); only meaningful for differentiable f"""
        return self.inner.grad(a) - self.beta * log_map(a, self.anchor)


def phi_k(f: Objective, nrm: Normalizer, b: DiagPD, c: OrthoFrame) -> float:
    """phi_k(b, c) = f(T_k^-1(phi(b, c)))"""
    return f(reconstruct(nrm, b, c))


def rho_k(b: DiagPD, c: Optional[OrthoFrame] = None) -> float:
    """rho_k(b, c) = d^2(phi(b, c), I) = sum_i ln^2 b_i, independent of c"""
    if c is not None and c.dim != b.dim:
        raise ContractError(f"dimension mismatch: {b.dim} vs {c.dim}")
    return torch.sum(torch.log(b.values) ** 2).item()


def grad_rho_b(b: DiagPD) -> torch.Tensor:
    """grad_b rho_k = -2 exp_b^-1(e) = 2 b_i ln b_i (a tangent vector of D1 at b)"""
    return 2.0 * b.values * torch.log(b.values)


def prox_value(p: ProxObjective, a: SpdPoint) -> float:
    if p.beta == 0.0:
        return p.inner(a)
    return p.inner(a) + 0.5 * p.beta * distance(a, p.anchor) ** 2


def prox_objective(f: Objective, anchor: SpdPoint, beta: float,
                   nrm: Optional[Normalizer] = None) -> ProxObjective:
    if beta < 0.0:
        raise ContractError("beta must be nonnegative")
    return ProxObjective(f, anchor, float(beta), nrm if nrm is not None else normalizer_from(anchor))

