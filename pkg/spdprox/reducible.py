"""
Specially-reducible structure of P_n: phi(b, c) = c diag(b) c^T with
b in D1 (diagonal positive definite, stored as a positive vector) and
c in D2 (orthogonal group, bi-invariant metric), together with the
normalizing automorphism T_k(y) = a_k^-1/2 y a_k^-1/2.
"""
from dataclasses import dataclass
from typing import Tuple, Union

import torch

from .defs import (DTYPE, ORTHO_DRIFT_TOL, ORTHO_REJECT_TOL, SKEW_TOL,
                   ContractError, NumericError, SpdValidationError)
from .spd import SpdPoint, SymMatrix, _spd_result
from .utils import cond_report, ortho_drift, polar_factor, skew_part, symmetrize


@dataclass(frozen=True, eq=False)
class DiagPD:
    """Diagonal positive definite matrix, by its diagonal. Order is meaningful."""
    values: torch.Tensor

    def __post_init__(self):
        vals = torch.as_tensor(self.values, dtype=DTYPE).reshape(-1)
        if not torch.isfinite(vals).all() or (vals <= 0.0).any():
            raise SpdValidationError("diagonal entries must be positive",
                                     min_eig=vals.min().item())
        object.__setattr__(self, 'values', vals)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @staticmethod
    def ones(n: int) -> 'DiagPD':
        return DiagPD(torch.ones(n, dtype=DTYPE))


@dataclass(frozen=True, eq=False)
class OrthoFrame:
    """Orthogonal matrix; small drift is repaired through the polar factor"""
    mat: torch.Tensor

    def __post_init__(self):
        mat = torch.as_tensor(self.mat, dtype=DTYPE)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ContractError(f"expected a square frame, got shape {tuple(mat.shape)}")
        drift = ortho_drift(mat)
        if drift > ORTHO_REJECT_TOL:
            raise ContractError(f"matrix is not orthogonal (drift {drift:.3e})")
        if drift > ORTHO_DRIFT_TOL:
            mat = polar_factor(mat)
        object.__setattr__(self, 'mat', mat)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def det(self) -> float:
        return torch.linalg.det(self.mat).item()

    @staticmethod
    def eye(n: int) -> 'OrthoFrame':
        return OrthoFrame(torch.eye(n, dtype=DTYPE))


@dataclass(frozen=True, eq=False)
class SkewTangent:
    """Tangent vector base @ omega at a frame, omega skew-symmetric"""
    base: OrthoFrame
    omega: torch.Tensor

    def __post_init__(self):
        omega = torch.as_tensor(self.omega, dtype=DTYPE)
        if omega.shape != self.base.mat.shape:
            raise ContractError("skew tangent does not match its frame")
        scale = max(1.0, torch.linalg.norm(omega).item())
        if torch.linalg.norm(omega + omega.T).item() > SKEW_TOL * scale:
            raise ContractError("omega is not skew-symmetric")
        object.__setattr__(self, 'omega', skew_part(omega))


@dataclass(frozen=True, eq=False)
class Normalizer:
    """T_k with T_k(anchor) = I; an automorphism and isometry of P_n"""
    anchor: SpdPoint
    inv_sqrt: SymMatrix
    sqrt: SymMatrix

    def apply(self, y: Union[SpdPoint, SymMatrix]) -> SymMatrix:
        y = y.mat if isinstance(y, SpdPoint) else y
        return symmetrize(self.inv_sqrt @ y @ self.inv_sqrt)

    def apply_inv(self, y: Union[SpdPoint, SymMatrix]) -> SymMatrix:
        y = y.mat if isinstance(y, SpdPoint) else y
        return symmetrize(self.sqrt @ y @ self.sqrt)

    def apply_point(self, y: SpdPoint) -> SpdPoint:
        return _spd_result(self.apply(y), "normalizer")

    def apply_inv_point(self, y: SpdPoint) -> SpdPoint:
        return _spd_result(self.apply_inv(y), "normalizer inverse")


def _check_dims(*dims: int):
    if len(set(dims)) != 1:
        raise ContractError(f"dimension mismatch: {dims}")


def phi(b: DiagPD, c: OrthoFrame) -> SpdPoint:
    """phi(b, c) = c diag(b) c^T"""
    _check_dims(b.dim, c.dim)
    return _spd_result((c.mat * b.values) @ c.mat.T, "phi")


def normalizer_from(a_k: SpdPoint) -> Normalizer:
    if a_k.near_boundary:
        raise NumericError(f"anchor is numerically singular ({cond_report(a_k.mat)})")
    return Normalizer(a_k, a_k.inv_sqrt, a_k.sqrt)


def reconstruct(nrm: Normalizer, b: DiagPD, c: OrthoFrame) -> SpdPoint:
    """u = T_k^-1(phi(b, c)) = a_k^1/2 c diag(b) c^T a_k^1/2"""
    _check_dims(nrm.anchor.dim, b.dim, c.dim)
    inner = (c.mat * b.values) @ c.mat.T
    return _spd_result(nrm.apply_inv(inner), "reconstruct")


def decompose(a: SpdPoint) -> Tuple[DiagPD, OrthoFrame]:
    """
    Inverse of phi up to the equivalence it induces. Tie-break: eigenvalues
    descending, and the largest-magnitude entry of each frame column positive.
    """
    frame = a.eig.frame.clone()
    idx = frame.abs().argmax(dim=0)
    signs = torch.sign(frame[idx, torch.arange(a.dim)])
    signs[signs == 0] = 1.0
    frame = frame * signs
    return DiagPD(a.eig.values.clone()), OrthoFrame(frame)


def diag_geodesic(b0: DiagPD, v: torch.Tensor, t: float) -> DiagPD:
    """Component-wise b_i exp(t v_i / b_i)"""
    v = torch.as_tensor(v, dtype=DTYPE).reshape(-1)
    _check_dims(b0.dim, v.shape[0])
    vals = b0.values * torch.exp(t * v / b0.values)
    if not torch.isfinite(vals).all() or (vals <= 0.0).any():
        raise NumericError("diagonal geodesic left the representable cone")
    return DiagPD(vals)


def diag_distance(b1: DiagPD, b2: DiagPD) -> float:
    _check_dims(b1.dim, b2.dim)
    return torch.linalg.norm(torch.log(b2.values / b1.values)).item()


def diag_log(b: DiagPD, b2: DiagPD) -> torch.Tensor:
    """exp_b^-1(b2) on D1: b_i ln(b2_i / b_i)"""
    _check_dims(b.dim, b2.dim)
    return b.values * torch.log(b2.values / b.values)


def diag_norm2(b: DiagPD, v: torch.Tensor) -> float:
    return torch.sum((v / b.values) ** 2).item()


def orth_geodesic(c: OrthoFrame, s: SkewTangent, t: float) -> OrthoFrame:
    """c expm(t omega); stays in the connected component of c"""
    if s.base is not c and not torch.allclose(s.base.mat, c.mat, rtol=0.0, atol=1e-12):
        raise ContractError("skew tangent is attached to a different frame")
    step = torch.linalg.matrix_exp(t * s.omega)
    if not torch.isfinite(step).all():
        raise NumericError("orthogonal geodesic overflowed")
    return OrthoFrame(c.mat @ step)


def orth_riem_grad(c: OrthoFrame, g: torch.Tensor) -> SkewTangent:
    """Projection of Euclidean partials g onto the tangent space: omega = (c^T g - g^T c) / 2"""
    g = torch.as_tensor(g, dtype=DTYPE)
    _check_dims(c.dim, g.shape[0], g.shape[1])
    return SkewTangent(c, skew_part(c.mat.T @ g))


def orth_norm2(c: OrthoFrame, s: SkewTangent) -> float:
    return torch.sum(s.omega ** 2).item()
