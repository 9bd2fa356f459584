"""
Nonsmooth iterative scheme with an Armijo-like geodesic line search.

Each iteration estimates the negative derivative by forward differences along
the canonical perturbation directions of the search space, converts it to a Riemannian
direction d = G(x)^-1 s, and takes the geodesic step xi(x, d, t) where t is
grown by upsilon while h(xi) < h(x) - t eta |d|^2 holds and shrunk otherwise.
The loop stops when |h(x) - h(x_aux)| < tau.
"""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, NamedTuple, Optional
from warnings import warn

import torch

from .defs import DTYPE, MAX_GROWTH, T_MIN, ContractError, NumericError, SpdError
from .reducible import (DiagPD, OrthoFrame, SkewTangent, diag_distance,
                        diag_geodesic, diag_norm2, orth_geodesic, orth_norm2)
from .spd import SpdPoint, TangentVec, distance, geodesic, metric_inner
from .utils import skew_basis, sym_basis


@dataclass
class ArmijoParams:
    """
    Line search and stop options of the nonsmooth scheme
    :param delta: float, forward-difference step
    :param eta: float, sufficient decrease constant in (0, 1)
    :param upsilon: float, step growth/shrink factor > 1
    :param tau: float, stop tolerance on |h(x) - h(x_aux)|
    :param max_iters: int
    """

    delta: float = 1e-7    # Far above the smallest representable number; forward
    #  differences cancel catastrophically below ~sqrt(eps)

    eta: float = 0.2
    upsilon: float = 2.0

    tau: float = 1e-8
    max_iters: int = 500

    tau0: Optional[float] = None   # Loose starting tolerance for the inner sweeps,
    kappa: float = 0.5             # reduced by kappa per sweep down to tau

    stop_on_step: bool = False     # Also stop when d(x_aux, x) < tau (D1 and P_n only)

    def validate(self):
        if not self.delta > 0.0:
            raise ValueError("delta must be positive")
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must lie in (0, 1)")
        if not self.upsilon > 1.0:
            raise ValueError("upsilon must be > 1")
        if not self.tau > 0.0:
            raise ValueError("tau must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")
        if self.tau0 is not None and not self.tau0 > 0.0:
            raise ValueError("tau0 must be positive")
        if not 0.0 < self.kappa < 1.0:
            raise ValueError("kappa must lie in (0, 1)")
        return self

    def tau_at(self, j: int) -> float:
        if self.tau0 is None:
            return self.tau
        return max(self.tau, self.tau0 * self.kappa ** j)


class SearchSpace(ABC):
    """
    Everything the engine needs from a manifold: geodesics, the metric norm,
    the conversion from directional partials to a Riemannian direction, and the
    canonical perturbation curves used for finite differences.
    """

    has_distance = True

    @abstractmethod
    def geodesic(self, x, d, t: float): ...

    @abstractmethod
    def norm2(self, x, d) -> float: ...

    @abstractmethod
    def direction(self, x, s: torch.Tensor): ...

    @abstractmethod
    def n_dirs(self, x) -> int: ...

    @abstractmethod
    def perturb(self, x, k: int, delta: float): ...

    def distance(self, x, y) -> float:
        raise NotImplementedError


class DiagSpace(SearchSpace):
    """D1: positive vectors with metric sum (v_i / b_i)^2, perturbed along coordinates"""

    def geodesic(self, x: DiagPD, d: torch.Tensor, t: float) -> DiagPD:
        return diag_geodesic(x, d, t)

    def norm2(self, x: DiagPD, d: torch.Tensor) -> float:
        return diag_norm2(x, d)

    def direction(self, x: DiagPD, s: torch.Tensor) -> torch.Tensor:
        return x.values ** 2 * s

    def n_dirs(self, x: DiagPD) -> int:
        return x.dim

    def perturb(self, x: DiagPD, k: int, delta: float) -> DiagPD:
        vals = x.values.clone()
        vals[k] += delta
        return DiagPD(vals)

    def distance(self, x: DiagPD, y: DiagPD) -> float:
        return diag_distance(x, y)


class OrthSpace(SearchSpace):
    """
    D2: orthogonal frames with the bi-invariant metric. Additive perturbations leave
    the group, so perturbations follow the curves c expm(delta E_k) of the skew basis.
    """

    has_distance = False

    def geodesic(self, x: OrthoFrame, d: SkewTangent, t: float) -> OrthoFrame:
        return orth_geodesic(x, d, t)

    def norm2(self, x: OrthoFrame, d: SkewTangent) -> float:
        return orth_norm2(x, d)

    def direction(self, x: OrthoFrame, s: torch.Tensor) -> SkewTangent:
        basis = skew_basis(x.dim)
        omega = torch.einsum('k,kij->ij', s, basis) if len(basis) else torch.zeros_like(x.mat)
        return SkewTangent(x, omega)

    def n_dirs(self, x: OrthoFrame) -> int:
        return x.dim * (x.dim - 1) // 2

    def perturb(self, x: OrthoFrame, k: int, delta: float) -> OrthoFrame:
        return OrthoFrame(x.mat @ torch.linalg.matrix_exp(delta * skew_basis(x.dim)[k]))


class SpdSpace(SearchSpace):
    """P_n itself, perturbed additively along a Frobenius-orthonormal symmetric basis"""

    def geodesic(self, x: SpdPoint, d: TangentVec, t: float) -> SpdPoint:
        return geodesic(x, d, t)

    def norm2(self, x: SpdPoint, d: TangentVec) -> float:
        return metric_inner(x, d, d)

    def direction(self, x: SpdPoint, s: torch.Tensor) -> TangentVec:
        g = torch.einsum('k,kij->ij', s, sym_basis(x.dim))
        return TangentVec(x, x.mat @ g @ x.mat)

    def n_dirs(self, x: SpdPoint) -> int:
        return x.dim * (x.dim + 1) // 2

    def perturb(self, x: SpdPoint, k: int, delta: float) -> SpdPoint:
        return SpdPoint(x.mat + delta * sym_basis(x.dim)[k])

    def distance(self, x: SpdPoint, y: SpdPoint) -> float:
        return distance(x, y)


class SearchResult(NamedTuple):
    t: float
    point: Any
    value: float
    progress: bool
    capped: bool = False


class EngineResult(NamedTuple):
    x: Any
    value: float
    n_iters: int
    no_progress: bool
    capped: bool = False


def fd_neg_gradient(h: Callable, x, space: SearchSpace, delta: float,
                    hx: Optional[float] = None) -> torch.Tensor:
    """
    Forward-difference estimate s_k = (h(x) - h(x + delta e_k)) / delta of the
    negative derivative. A perturbation that leaves the domain is retried with delta / 10
    up to 3 times.

    :return: torch.Tensor (n_dirs,)
    """
    if not delta > 0.0:
        raise ContractError("delta must be positive")
    if hx is None:
        hx = h(x)
    s = torch.zeros(space.n_dirs(x), dtype=DTYPE)
    for k in range(s.shape[0]):
        step = delta
        for attempt in range(4):
            try:
                hp = h(space.perturb(x, k, step))
            except SpdError:
                hp = math.nan
            if math.isfinite(hp):
                break
            step /= 10.0
        else:
            raise NumericError(f"finite-difference direction {k} left the domain at delta={step * 10.0:.1e}")
        s[k] = (hx - hp) / step
    return s


def armijo_search(h: Callable, x, d, space: SearchSpace, params: ArmijoParams,
                  hx: Optional[float] = None, dnorm2: Optional[float] = None) -> SearchResult:
    """
    Geodesic Armijo-like line search starting from t = 1.
    Forward branch: while the step is accepted, t = upsilon t, then keep the last
    accepted t, i.e. the rejected t / upsilon. Backtracking branch: t = t / upsilon
    until accepted, giving up below T_MIN. A step that leaves the domain counts
    as rejected.
    """
    if hx is None:
        hx = h(x)
    if dnorm2 is None:
        dnorm2 = space.norm2(x, d)
    if not dnorm2 > 0.0:
        raise ContractError("search direction must be nonzero")
    eta, ups = params.eta, params.upsilon

    def attempt(t):
        try:
            p = space.geodesic(x, d, t)
            v = h(p)
        except SpdError:
            return None, math.inf
        return (p, v) if math.isfinite(v) else (None, math.inf)

    def accepted(t, v):
        return v < hx - t * eta * dnorm2

    t = 1.0
    p, v = attempt(t)
    if accepted(t, v):
        for _ in range(MAX_GROWTH):
            t_next = t * ups
            p_next, v_next = attempt(t_next)
            if not accepted(t_next, v_next):
                return SearchResult(t, p, v, True)
            t, p, v = t_next, p_next, v_next
        warn(f"Armijo forward growth reached the cap t={t:.3e}; accepting it")
        return SearchResult(t, p, v, True, capped=True)

    while True:
        t /= ups
        if t < T_MIN:
            return SearchResult(0.0, x, hx, False)
        p, v = attempt(t)
        if accepted(t, v):
            return SearchResult(t, p, v, True)


def minimize(h: Callable, x0, space: SearchSpace, params: ArmijoParams,
             descent: Optional[Callable] = None, tau: Optional[float] = None) -> EngineResult:
    """
    Run the nonsmooth scheme from x0.

    :param descent: optional callable x -> Riemannian descent direction; replaces
                    the finite-difference direction when the gradient is known
    :param tau: overrides params.tau (used by the inner tolerance schedule)
    :return: EngineResult, h nonincreasing along the accepted iterates
    """
    tau = params.tau if tau is None else tau
    x, hx = x0, h(x0)
    capped = False
    n_iters = 0
    while n_iters < params.max_iters:
        if descent is None:
            s = fd_neg_gradient(h, x, space, params.delta, hx)
            d = space.direction(x, s)
        else:
            d = descent(x)
        dn2 = space.norm2(x, d)
        if not dn2 > 0.0:
            return EngineResult(x, hx, n_iters, True, capped)
        res = armijo_search(h, x, d, space, params, hx, dn2)
        if not res.progress:
            return EngineResult(x, hx, n_iters, True, capped)
        assert res.value < hx - res.t * params.eta * dn2, "Armijo certificate violated"
        capped = capped or res.capped
        x_prev, h_prev = x, hx
        x, hx = res.point, res.value
        n_iters += 1
        if abs(h_prev - hx) < tau:
            break
        if params.stop_on_step and space.has_distance and space.distance(x_prev, x) < tau:
            break
    return EngineResult(x, hx, n_iters, False, capped)
