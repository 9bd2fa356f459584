"""
Reference solutions used to certify the solvers. These only use the geometry
of spd.py and the value/gradient oracles of an Objective; nothing here goes
through the reducible decomposition or the Armijo engine.
"""
import math
from dataclasses import dataclass
from typing import Optional, Sequence
from warnings import warn

import torch
from scipy.optimize import bisect

from .defs import DTYPE, ContractError, SpdError
from .objectives import Objective
from .spd import (SpdPoint, TangentVec, exp_map, geodesic_segment, log_map,
                  riem_norm, sym_fn, distance)
from .utils import as_sym, sym_basis, symmetrize


@dataclass(frozen=True)
class OracleResult:
    point: SpdPoint
    objective: float
    grad_norm: float
    iterations: int
    converged: bool = True


def direct_prox(f: Objective, a_k: SpdPoint, beta: float, tol: float = 1e-9,
                max_iters: int = 5000) -> OracleResult:
    """
    Geodesic gradient descent on a -> f(a) + (beta / 2) d^2(a, a_k) with
    gradient grad f(a) - beta exp_a^-1(a_k) and plain halving backtracking.
    """
    if not f.differentiable:
        raise ContractError("direct_prox needs a differentiable objective")
    if not beta > 0.0:
        raise ContractError("beta must be positive")

    def value(a):
        return f(a) + 0.5 * beta * distance(a, a_k) ** 2

    def grad(a):
        return f.grad(a) - beta * log_map(a, a_k)

    a, fa = a_k, value(a_k)
    t = 1.0 / (1.0 + beta)
    for it in range(max_iters):
        g = grad(a)
        gn = riem_norm(a, g)
        if gn <= tol:
            return OracleResult(a, fa, gn, it)
        t = min(1.0, 2.0 * t)
        while True:
            try:
                cand = exp_map(a, -t * g)
                fc = value(cand)
            except SpdError:
                fc = math.inf
            if fc <= fa - 1e-4 * t * gn ** 2:
                break
            # below rounding in the value, settle for a smaller gradient
            noise = 1e-14 * max(1.0, abs(fa))
            if fc <= fa + noise and riem_norm(cand, grad(cand)) < gn:
                break
            t *= 0.5
            if t < 1e-20:
                warn(f"direct_prox stalled at gradient norm {gn:.3e}")
                return OracleResult(a, fa, gn, it, converged=False)
        a, fa = cand, fc
    gn = riem_norm(a, grad(a))
    converged = gn <= tol
    if not converged:
        warn(f"direct_prox did not converge in {max_iters} iterations (gradient norm {gn:.3e})")
    return OracleResult(a, fa, gn, max_iters, converged)


def two_point_mean(x1: SpdPoint, x2: SpdPoint) -> SpdPoint:
    """Geodesic midpoint; the equal-weight Karcher mean of two points"""
    return geodesic_segment(x1, x2, 0.5)


def commuting_mean(points: Sequence[SpdPoint],
                   weights: Optional[Sequence[float]] = None) -> SpdPoint:
    """
    Karcher mean of a pairwise commuting family: exp(sum w_i log x_i / sum w_i).
    Zero weights are allowed as long as the total is positive.
    """
    if len(points) == 0:
        raise ContractError("at least one point is required")
    weights = [1.0] * len(points) if weights is None else [float(w) for w in weights]
    if len(weights) != len(points) or any(w < 0.0 for w in weights) or sum(weights) <= 0.0:
        raise ContractError("weights must be nonnegative with a positive sum")
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            x, y = points[i].mat, points[j].mat
            scale = max(1.0, torch.linalg.norm(x).item() * torch.linalg.norm(y).item())
            if torch.linalg.norm(x @ y - y @ x).item() > 1e-10 * scale:
                raise ContractError(f"points {i} and {j} do not commute")
    acc = torch.zeros_like(points[0].mat)
    for p, w in zip(points, weights):
        acc += w * p.log
    return SpdPoint(sym_fn(symmetrize(acc / sum(weights)), torch.exp))


def scalar_prox_trace(beta: float) -> float:
    """
    Prox of Tr at anchor I restricted to t I: the root of t + beta ln t = 0 in (0, 1).
    beta = 1 gives the omega constant 0.5671432904...
    """
    if not beta > 0.0:
        raise ContractError("beta must be positive")

    def g(t):
        return t + beta * math.log(t)

    t = bisect(g, 1e-300, 1.0, xtol=1e-16, maxiter=2000)
    for _ in range(3):
        t -= g(t) / (1.0 + beta / t)
    return t


def fd_gradient_check(f: Objective, x: SpdPoint, grad: TangentVec, delta: float = 1e-6,
                      directions: Optional[Sequence[torch.Tensor]] = None) -> float:
    """
    Central differences (f(x + delta E) - f(x - delta E)) / (2 delta) against the
    Euclidean directional derivative Tr(x^-1 g x^-1 E) of the Riemannian gradient g.

    Directions default to the symmetric basis. The error is relative to the norm
    of the analytic vector, or absolute when that norm is below 1e-10.

    :return: float, max error over directions
    """
    if directions is None:
        directions = list(sym_basis(x.dim))
    euclid = symmetrize(x.inv @ grad.vec @ x.inv)
    fd, an = [], []
    for e in directions:
        e = as_sym(e, x.dim)
        e = e / torch.linalg.norm(e)
        fp = f(SpdPoint(x.mat + delta * e))
        fm = f(SpdPoint(x.mat - delta * e))
        fd.append((fp - fm) / (2.0 * delta))
        an.append(torch.sum(euclid * e).item())
    fd = torch.tensor(fd, dtype=DTYPE)
    an = torch.tensor(an, dtype=DTYPE)
    err = (fd - an).abs().max().item()
    scale = torch.linalg.norm(an).item()
    return err if scale < 1e-10 else err / scale
