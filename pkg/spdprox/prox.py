"""
Exact and inexact proximal point methods on P_n.

Outer iteration: a_{k+1} ~ argmin_a f(a) + (beta_k / 2) d^2(a, a_k) with
beta_{k+1} = theta1 beta_k and eps_{k+1} = theta2 eps_k.

Inner iteration: the normalizer T_k sends a_k to I, and the subproblem is
solved over phi(b, c) = c diag(b) c^T by alternating a step in b (diagonal
positive definite) and a step in c (orthogonal group), each by the Armijo
scheme of subgrad.py. Starting from (b, c) = (1, I) means u_0 = a_k.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple
from warnings import warn

import torch

from .defs import ContractError
from .objectives import Objective, grad_rho_b, phi_k, prox_objective, rho_k
from .reducible import (DiagPD, Normalizer, OrthoFrame, SkewTangent,
                        diag_distance, normalizer_from, orth_riem_grad,
                        reconstruct)
from .spd import SpdPoint, distance, riem_norm
from .subgrad import ArmijoParams, DiagSpace, OrthSpace, minimize
from .utils import symmetrize


@dataclass
class ProxConfig:
    """
    Proximal point options, see comments
    :param beta0: float, initial regularization weight
    :param theta1: float, beta shrink factor in (0, 1]
    :param theta2: float, eps shrink factor in (0, 1)
    :param eps0: float, initial inexactness (0 = exact method)
    :param mu: float, inexactness constant in (0, 1)
    """

    beta0: float = 1.0
    theta1: float = 1.0
    theta2: float = 0.5
    eps0: float = 0.0
    mu: float = 0.5

    armijo: ArmijoParams = field(default_factory=ArmijoParams)

    outer_tol: float = 1e-8      # stop when beta_k d(a_{k+1}, a_k) <= this
    #  (or |grad f(a_k)| <= this for differentiable f)
    residual_tol: float = 1e-6   # inner stopping surrogate slack

    max_outer: int = 100
    max_inner: int = 50

    analytic_inner: bool = False  # Use gradient-based inner directions when f is differentiable
    record_inner: bool = False    # Keep per-sweep records in the trace

    def validate(self):
        if not self.beta0 > 0.0:
            raise ValueError("beta0 must be positive")
        if not 0.0 < self.theta1 <= 1.0:
            raise ValueError("theta1 must lie in (0, 1]")
        if not 0.0 < self.theta2 < 1.0:
            raise ValueError("theta2 must lie in (0, 1)")
        if not self.eps0 >= 0.0:
            raise ValueError("eps0 must be nonnegative")
        if not 0.0 < self.mu < 1.0:
            raise ValueError("mu must lie in (0, 1)")
        if self.eps0 > 0.0 and not self.theta2 / self.theta1 < 1.0:
            raise ValueError("theta2 / theta1 must be < 1 for the inexact method")
        if not (self.outer_tol > 0.0 and self.residual_tol > 0.0):
            raise ValueError("tolerances must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("max_outer and max_inner must be positive integers")
        self.armijo.validate()
        return self


@dataclass(frozen=True)
class InnerState:
    b: DiagPD
    c: OrthoFrame
    u: SpdPoint
    j: int


@dataclass(frozen=True)
class SweepRecord:
    """One alternating sweep j -> j + 1 of the inner loop"""
    j: int
    value_before: float   # phi_k + beta/2 rho_k at (b_j, c_j)
    value_mid: float      # at (b_{j+1}, c_j)
    value_after: float    # at (b_{j+1}, c_{j+1})
    b_gap: float          # d(b_j, b_{j+1}) = d(u_j, u~_{j+1})
    u_gap: float          # d(u_j, u_{j+1})
    b_fixed: bool
    c_fixed: bool
    state: Optional[InnerState] = None


@dataclass
class InnerReport:
    n_sweeps: int = 0
    converged: bool = False
    warning: bool = False
    residual: float = math.nan
    sweeps: List[SweepRecord] = field(default_factory=list)


@dataclass(frozen=True)
class OuterRecord:
    k: int
    beta: float
    eps: float
    f: float
    step: float        # d(a_k, a_{k-1})
    inner: int
    residual: float
    slack: float       # (mu/2) d^2 - eps/beta
    inexact_ok: bool
    warning: bool


@dataclass
class ProxTrace:
    records: List[OuterRecord] = field(default_factory=list)
    iterates: List[SpdPoint] = field(default_factory=list)
    sweeps: List[List[SweepRecord]] = field(default_factory=list)
    n_warnings: int = 0

    @property
    def total_inner(self) -> int:
        return sum(r.inner for r in self.records)

    @property
    def f_values(self) -> List[float]:
        return [r.f for r in self.records]


def _euclid_grad(f: Objective, u: SpdPoint) -> torch.Tensor:
    """Euclidean gradient u^-1 grad f(u) u^-1"""
    return symmetrize(u.inv @ f.grad(u).vec @ u.inv)


def _b_descent(f: Objective, nrm: Normalizer, beta: float, c: OrthoFrame) -> Callable:
    def descent(b: DiagPD) -> torch.Tensor:
        u = reconstruct(nrm, b, c)
        m = c.mat.T @ nrm.sqrt @ _euclid_grad(f, u) @ nrm.sqrt @ c.mat
        return -(b.values ** 2 * torch.diagonal(m) + 0.5 * beta * grad_rho_b(b))
    return descent


def _c_descent(f: Objective, nrm: Normalizer, b: DiagPD) -> Callable:
    def descent(c: OrthoFrame) -> SkewTangent:
        u = reconstruct(nrm, b, c)
        g = 2.0 * (nrm.sqrt @ _euclid_grad(f, u) @ nrm.sqrt @ c.mat) * b.values
        return SkewTangent(c, -orth_riem_grad(c, g).omega)
    return descent


def b_step(f: Objective, nrm: Normalizer, beta: float, state: InnerState,
           params: ArmijoParams, tau: Optional[float] = None,
           analytic: bool = False) -> Tuple[DiagPD, float, bool]:
    """
    b_{j+1} ~ argmin_b phi_k(b, c_j) + (beta / 2) rho_k(b).

    :return: (b_{j+1}, regularized value there, fixed-point flag)
    """
    c = state.c

    def h(b):
        return phi_k(f, nrm, b, c) + 0.5 * beta * rho_k(b)

    descent = _b_descent(f, nrm, beta, c) if analytic else None
    res = minimize(h, state.b, DiagSpace(), params, descent=descent, tau=tau)
    return res.x, res.value, res.n_iters == 0


def c_step(f: Objective, nrm: Normalizer, beta: float, b: DiagPD, c: OrthoFrame,
           params: ArmijoParams, tau: Optional[float] = None,
           analytic: bool = False) -> Tuple[OrthoFrame, float, bool]:
    """
    c_{j+1} ~ argmin_c phi_k(b_{j+1}, c). The rho_k term does not depend on c and
    only shifts the reported value. Geodesics c expm(t omega) keep det(c).

    :return: (c_{j+1}, regularized value there, fixed-point flag)
    """
    reg = 0.5 * beta * rho_k(b)

    def h(cc):
        return phi_k(f, nrm, b, cc) + reg

    descent = _c_descent(f, nrm, b) if analytic else None
    res = minimize(h, c, OrthSpace(), params, descent=descent, tau=tau)
    return res.x, res.value, res.n_iters == 0


def prox_residual(f: Objective, a_k: SpdPoint, u: SpdPoint, beta: float) -> float:
    """|beta exp_u^-1(a_k) - grad f(u)|_u; zero exactly at the prox point of smooth f"""
    return riem_norm(u, prox_objective(f, a_k, beta).grad(u))


def stopping_surrogate(f: Objective, a_k: SpdPoint, u: SpdPoint, beta: float, eps: float,
                       residual_tol: float, sweep: Optional[SweepRecord] = None) -> bool:
    """
    Measurable stand-in for beta exp_u^-1(a_k) in the eps-subdifferential of f at u.

    Differentiable f: the residual is at most residual_tol + sqrt(2 beta eps).
    Otherwise: the last sweep left b unchanged and did not decrease the
    regularized objective by more than eps + residual_tol, or both blocks
    reported a fixed point.
    """
    if f.differentiable:
        return prox_residual(f, a_k, u, beta) <= residual_tol + math.sqrt(2.0 * beta * eps)
    if sweep is None:
        return False
    if sweep.b_fixed and sweep.c_fixed:
        return True
    b_same = sweep.b_fixed or sweep.b_gap <= max(1e-12, residual_tol)
    return b_same and sweep.value_before - sweep.value_after <= eps + residual_tol


def prox_step(f: Objective, a_k: SpdPoint, beta: float, eps: float,
              config: ProxConfig) -> Tuple[SpdPoint, InnerReport]:
    """
    One proximal step by the alternating inner iteration.
    The regularized objective is nonincreasing over the sweeps; when max_inner
    is reached without the stopping surrogate, the last (best) iterate is
    returned with a warning.
    """
    if f.dim is not None and f.dim != a_k.dim:
        raise ContractError(f"objective dim {f.dim} does not match point dim {a_k.dim}")
    nrm = normalizer_from(a_k)
    n = a_k.dim
    analytic = config.analytic_inner and f.differentiable
    params = config.armijo

    b, c = DiagPD.ones(n), OrthoFrame.eye(n)
    u = a_k
    value = phi_k(f, nrm, b, c)
    report = InnerReport()

    for j in range(config.max_inner):
        tau_j = params.tau_at(j)
        b_new, value_mid, b_fixed = b_step(f, nrm, beta, InnerState(b, c, u, j), params,
                                           tau_j, analytic)
        c_new, value_new, c_fixed = c_step(f, nrm, beta, b_new, c, params, tau_j, analytic)
        u_new = reconstruct(nrm, b_new, c_new)
        assert value_new <= value_mid <= value, "inner sweep increased the objective"

        rec = SweepRecord(j, value, value_mid, value_new,
                          b_gap=diag_distance(b, b_new),
                          u_gap=distance(u, u_new),
                          b_fixed=b_fixed, c_fixed=c_fixed,
                          state=InnerState(b_new, c_new, u_new, j + 1) if config.record_inner else None)
        if config.record_inner:
            report.sweeps.append(rec)
        b, c, u, value = b_new, c_new, u_new, value_new
        report.n_sweeps = j + 1

        if stopping_surrogate(f, a_k, u, beta, eps, config.residual_tol, rec):
            report.converged = True
            break

    if f.differentiable:
        report.residual = prox_residual(f, a_k, u, beta)
    if not report.converged:
        report.warning = True
        warn(f"Inner loop reached max_inner={config.max_inner} without meeting the "
             f"stopping test (residual {report.residual:.3e})")
    if u.near_boundary:
        report.warning = True
        warn("Proximal iterate is numerically close to the boundary of P_n")
    return u, report


def inexact_condition(a_k: SpdPoint, a_next: SpdPoint, beta: float, eps: float,
                      mu: float) -> bool:
    """eps_k / beta_k <= (mu_k / 2) d^2(a_{k+1}, a_k), non-strict"""
    if not mu > 0.0:
        raise ContractError("mu must be positive")
    if eps == 0.0:
        return True
    return eps / beta <= 0.5 * mu * distance(a_k, a_next) ** 2


def iteration_lower_bound(eps0: float, beta0: float, mu: float, omega: float,
                          eps: float) -> int:
    """
    Number of outer iterations needed before d(a_k, a*) <= eps can be
    guaranteed with theta1 = 1 and theta2 = 1 / omega:
    ceil((log(2 eps0 (1 - mu)) - log(beta0 mu eps)) / log(omega)), at least 0.
    """
    if not omega > 1.0:
        raise ContractError("omega must be > 1")
    if not (beta0 > 0.0 and eps > 0.0 and eps0 >= 0.0):
        raise ContractError("beta0 and eps must be positive, eps0 nonnegative")
    if not 0.0 < mu < 1.0:
        raise ContractError("mu must lie in (0, 1)")
    if eps0 == 0.0:
        return 0
    val = (math.log(2.0 * eps0 * (1.0 - mu)) - math.log(beta0 * mu * eps)) / math.log(omega)
    return max(0, math.ceil(val - 1e-12))


def _grad_norm(f: Objective, a: SpdPoint) -> float:
    return riem_norm(a, f.grad(a)) if f.differentiable else math.nan


def ipp_solve(f: Objective, a0: SpdPoint, config: ProxConfig,
              callback: Optional[Callable[[OuterRecord], None]] = None
              ) -> Tuple[SpdPoint, ProxTrace]:
    """
    Inexact proximal point method. Row 0 of the trace is the start point; row
    k >= 1 is the iterate produced with beta_{k-1} and eps_{k-1}.

    :param callback: called with every trace row (used for tensorboard logging)
    """
    config.validate()
    if f.dim is not None and f.dim != a0.dim:
        raise ContractError(f"objective dim {f.dim} does not match point dim {a0.dim}")
    trace = ProxTrace()

    def emit(rec: OuterRecord, a: SpdPoint):
        trace.records.append(rec)
        trace.iterates.append(a)
        if callback is not None:
            callback(rec)

    a = a0
    g0 = _grad_norm(f, a)
    emit(OuterRecord(0, config.beta0, config.eps0, f(a), 0.0, 0, g0, math.nan, True, False), a)
    if f.differentiable and g0 <= config.outer_tol:
        return a, trace

    for k in range(config.max_outer):
        beta = config.beta0 * config.theta1 ** k
        eps = config.eps0 * config.theta2 ** k
        a_next, report = prox_step(f, a, beta, eps, config)
        step = distance(a, a_next)
        ok = inexact_condition(a, a_next, beta, eps, config.mu)
        slack = 0.5 * config.mu * step ** 2 - eps / beta
        if report.warning:
            trace.n_warnings += 1
        if config.record_inner:
            trace.sweeps.append(report.sweeps)
        a = a_next
        emit(OuterRecord(k + 1, beta, eps, f(a), step, report.n_sweeps, report.residual,
                         slack, ok, report.warning), a)
        if beta * step <= config.outer_tol:
            break
        if f.differentiable and _grad_norm(f, a) <= config.outer_tol:
            break
    return a, trace


def epp_solve(f: Objective, a0: SpdPoint, config: ProxConfig,
              callback: Optional[Callable[[OuterRecord], None]] = None
              ) -> Tuple[SpdPoint, ProxTrace]:
    """Exact proximal point method: the inexact method with eps_k = 0"""
    return ipp_solve(f, a0, replace(config, eps0=0.0), callback)
