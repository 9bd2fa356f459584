"""
Geometry of the manifold P_n of symmetric positive definite matrices with the
affine-invariant metric <u, v>_x = Tr(x^-1 u x^-1 v), i.e. the Hessian metric of
the log-barrier -log det. P_n with this metric is a Hadamard manifold, so
geodesics, exp and log maps are global and in closed form.

Matrix functions go through the symmetric eigendecomposition x = w diag(lam) w^T.
"""
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Union

import torch

from .defs import (DTYPE, EPS, BOUNDARY_REL_TOL, ContractError, NumericError,
                   SpdValidationError)
from .utils import as_sym, cond_report, symmetrize

SymMatrix = torch.Tensor


@dataclass(frozen=True)
class EigenPair:
    frame: torch.Tensor   # (n, n) orthogonal, columns are eigenvectors
    values: torch.Tensor  # (n,) sorted descending

    def reconstruct(self) -> torch.Tensor:
        return (self.frame * self.values) @ self.frame.T


def sym_eig(x: SymMatrix) -> EigenPair:
    """
    Symmetric eigendecomposition with eigenvalues sorted descending.

    :param x: torch.Tensor (n, n), symmetric
    :return: EigenPair
    """
    try:
        vals, vecs = torch.linalg.eigh(x)
    except RuntimeError as e:
        raise NumericError(f"eigendecomposition failed ({cond_report(x)})") from e
    if not torch.isfinite(vals).all():
        raise NumericError(f"eigendecomposition failed ({cond_report(x)})")
    return EigenPair(vecs.flip(-1), vals.flip(-1))


def sym_fn(x: SymMatrix, h: Callable[[torch.Tensor], torch.Tensor]) -> SymMatrix:
    """
    Apply a scalar function to a symmetric matrix through its spectrum:
    w h(lam) w^T where x = w lam w^T.

    :param x: torch.Tensor (n, n), symmetric
    :param h: callable acting elementwise on a tensor of eigenvalues
    :return: torch.Tensor (n, n), symmetric
    """
    eig = sym_eig(x)
    return symmetrize((eig.frame * h(eig.values)) @ eig.frame.T)


@dataclass(frozen=True, eq=False)
class SpdPoint:
    """
    A point of P_n. Validated on construction: the input is symmetrized and its
    smallest eigenvalue must exceed n * eps * lambda_max.
    Square roots, inverse and eigendecomposition are memoized per point.
    """
    mat: torch.Tensor

    def __post_init__(self):
        mat = as_sym(self.mat)
        object.__setattr__(self, 'mat', mat)
        eig = sym_eig(mat)
        lam_max = eig.values[0].item()
        lam_min = eig.values[-1].item()
        if not (lam_max > 0.0 and lam_min > self.dim * EPS * lam_max):
            raise SpdValidationError(
                f"matrix is not positive definite (min eigenvalue {lam_min:.6g})",
                min_eig=lam_min)
        object.__setattr__(self, 'eig', eig)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def near_boundary(self) -> bool:
        """True when lambda_min / lambda_max is within 1e3 eps of the boundary"""
        return self.eig.values[-1].item() < BOUNDARY_REL_TOL * self.eig.values[0].item()

    def fn(self, h: Callable[[torch.Tensor], torch.Tensor]) -> SymMatrix:
        lam = self.eig.values.clamp_min(self.dim * EPS * self.eig.values[0])
        return symmetrize((self.eig.frame * h(lam)) @ self.eig.frame.T)

    @cached_property
    def sqrt(self) -> SymMatrix:
        return self.fn(torch.sqrt)

    @cached_property
    def inv_sqrt(self) -> SymMatrix:
        return self.fn(torch.rsqrt)

    @cached_property
    def inv(self) -> SymMatrix:
        return self.fn(torch.reciprocal)

    @cached_property
    def log(self) -> SymMatrix:
        return self.fn(torch.log)

    def allclose(self, other: 'SpdPoint', rtol: float = 1e-9) -> bool:
        scale = torch.linalg.norm(self.mat).item()
        return torch.linalg.norm(self.mat - other.mat).item() <= rtol * scale

    def __repr__(self):
        return f"SpdPoint(dim={self.dim}, mat={self.mat.tolist()})"


@dataclass(frozen=True, eq=False)
class TangentVec:
    base: SpdPoint
    vec: torch.Tensor

    def __post_init__(self):
        object.__setattr__(self, 'vec', as_sym(self.vec, self.base.dim))

    def __add__(self, other: 'TangentVec') -> 'TangentVec':
        _check_base(self.base, other)
        return TangentVec(self.base, self.vec + other.vec)

    def __sub__(self, other: 'TangentVec') -> 'TangentVec':
        _check_base(self.base, other)
        return TangentVec(self.base, self.vec - other.vec)

    def __mul__(self, scalar: float) -> 'TangentVec':
        return TangentVec(self.base, self.vec * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> 'TangentVec':
        return TangentVec(self.base, -self.vec)


def _mat(x: Union[SpdPoint, SymMatrix]) -> torch.Tensor:
    return x.mat if isinstance(x, SpdPoint) else as_sym(x)


def _same_point(a: SpdPoint, b: SpdPoint) -> bool:
    if a is b:
        return True
    return a.dim == b.dim and a.allclose(b, 1e-12)


def _check_base(a: SpdPoint, u: TangentVec):
    if not _same_point(a, u.base):
        raise ContractError("tangent vector is attached to a different base point")


def _check_dims(x: SpdPoint, y: SpdPoint):
    if x.dim != y.dim:
        raise ContractError(f"dimension mismatch: {x.dim} vs {y.dim}")


def _spd_result(mat: torch.Tensor, what: str) -> SpdPoint:
    if not torch.isfinite(mat).all():
        raise NumericError(f"{what} overflowed ({cond_report(mat)})")
    try:
        return SpdPoint(mat)
    except SpdValidationError as e:
        raise NumericError(f"{what} left the representable cone ({cond_report(mat)})") from e


def identity(n: int) -> SpdPoint:
    return SpdPoint(torch.eye(n, dtype=DTYPE))


def random_sym(n: int, generator: Optional[torch.Generator] = None,
               scale: float = 1.0) -> SymMatrix:
    g = torch.randn(n, n, generator=generator, dtype=DTYPE)
    return symmetrize(g) * scale


def random_spd(n: int, generator: Optional[torch.Generator] = None,
               spread: float = 1.0) -> SpdPoint:
    """Random SPD matrix exp(S), S symmetric Gaussian scaled by spread"""
    return SpdPoint(sym_fn(random_sym(n, generator, spread), torch.exp))


def metric_inner(a: SpdPoint, u: TangentVec, v: TangentVec) -> float:
    """<u, v>_a = Tr(a^-1 u a^-1 v)"""
    _check_base(a, u)
    _check_base(a, v)
    return torch.trace(a.inv @ u.vec @ a.inv @ v.vec).item()


def riem_norm(a: SpdPoint, u: TangentVec) -> float:
    return math.sqrt(max(metric_inner(a, u, u), 0.0))


def geodesic(x: SpdPoint, s: TangentVec, t: float) -> SpdPoint:
    """
    gamma(t) = x^1/2 exp(t x^-1/2 s x^-1/2) x^1/2, so gamma(0) = x and gamma'(0) = s.
    """
    _check_base(x, s)
    inner = symmetrize(x.inv_sqrt @ s.vec @ x.inv_sqrt)
    mid = sym_fn(t * inner, torch.exp)
    return _spd_result(x.sqrt @ mid @ x.sqrt, "geodesic")


def _floored(lam: torch.Tensor, n: int) -> torch.Tensor:
    # floor scales with the largest eigenvalue
    return lam.clamp_min(n * EPS * lam.max())


def geodesic_segment(x: SpdPoint, y: SpdPoint, t: float) -> SpdPoint:
    """Minimal geodesic x^1/2 (x^-1/2 y x^-1/2)^t x^1/2 joining x (t=0) to y (t=1)"""
    _check_dims(x, y)
    inner = symmetrize(x.inv_sqrt @ y.mat @ x.inv_sqrt)
    mid = sym_fn(inner, lambda lam: _floored(lam, x.dim) ** t)
    return _spd_result(x.sqrt @ mid @ x.sqrt, "geodesic segment")


def distance(x: SpdPoint, y: SpdPoint) -> float:
    """d(x, y) = sqrt(sum_i ln^2 lam_i(x^-1/2 y x^-1/2))"""
    _check_dims(x, y)
    if x is y:
        return 0.0
    inner = symmetrize(x.inv_sqrt @ y.mat @ x.inv_sqrt)
    try:
        lam = torch.linalg.eigvalsh(inner)
    except RuntimeError as e:
        raise NumericError(f"distance eigensolve failed ({cond_report(inner)})") from e
    lam = _floored(lam, x.dim)
    return torch.linalg.norm(torch.log(lam)).item()


def log_map(x: SpdPoint, y: SpdPoint) -> TangentVec:
    """exp_x^-1(y) = x^1/2 log(x^-1/2 y x^-1/2) x^1/2"""
    _check_dims(x, y)
    if x is y:
        return TangentVec(x, torch.zeros_like(x.mat))
    inner = symmetrize(x.inv_sqrt @ y.mat @ x.inv_sqrt)
    mid = sym_fn(inner, lambda lam: torch.log(_floored(lam, x.dim)))
    return TangentVec(x, x.sqrt @ mid @ x.sqrt)


def exp_map(x: SpdPoint, s: TangentVec) -> SpdPoint:
    return geodesic(x, s, 1.0)


def congruence(p: SpdPoint, y: Union[SpdPoint, SymMatrix]) -> SymMatrix:
    """T_p(y) = p^1/2 y p^1/2, an isometry of P_n"""
    y = _mat(y)
    if y.shape[0] != p.dim:
        raise ContractError(f"dimension mismatch: {p.dim} vs {y.shape[0]}")
    return symmetrize(p.sqrt @ y @ p.sqrt)


def congruence_point(p: SpdPoint, x: SpdPoint) -> SpdPoint:
    return _spd_result(congruence(p, x), "congruence")


def push_tangent(p: SpdPoint, u: TangentVec) -> TangentVec:
    """Differential of T_p: moves u at a to p^1/2 u p^1/2 at T_p(a)"""
    return TangentVec(congruence_point(p, u.base), congruence(p, u.vec))


def euclid_to_riem_grad(x: SpdPoint, s: SymMatrix) -> TangentVec:
    """[G(x)]^-1 s = x s x, the Riemannian counterpart of a Euclidean gradient"""
    s = as_sym(s, x.dim)
    return TangentVec(x, x.mat @ s @ x.mat)


def characteristic_form(x: Union[SpdPoint, SymMatrix], y: Union[SpdPoint, SymMatrix]) -> float:
    """sigma(x, y) = Tr(x y^T); positive on every pair of SPD matrices"""
    x, y = _mat(x), _mat(y)
    if x.shape != y.shape:
        raise ContractError(f"dimension mismatch: {tuple(x.shape)} vs {tuple(y.shape)}")
    return torch.trace(x @ y.T).item()
