"""
Tensor fields: the canonical text format, synthetic generation and trace CSVs.

Text format:
    n m
    grid: H W               (optional, H * W == m)
    m records of n lines with n floats each, row-major
    weights: w1 ... wm      (optional, default all 1)
"""
import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import torch

from .defs import DTYPE, ContractError, FieldParseError, SpdValidationError
from .prox import ProxTrace
from .spd import SpdPoint, TangentVec, exp_map
from .utils import skew_basis, symmetrize

TRACE_COLUMNS = ("k", "beta", "eps", "f", "step", "inner", "residual", "slack",
                 "inexact_ok", "warning")


@dataclass
class TensorField:
    dim: int
    mats: List[SpdPoint]
    weights: List[float] = field(default_factory=list)
    grid: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if not self.weights:
            self.weights = [1.0] * len(self.mats)
        if len(self.weights) != len(self.mats):
            raise ContractError(f"{len(self.mats)} matrices but {len(self.weights)} weights")
        if any(not w > 0.0 for w in self.weights):
            raise ContractError("weights must be positive")
        if any(p.dim != self.dim for p in self.mats):
            raise ContractError(f"all matrices must be {self.dim}x{self.dim}")
        if self.grid is not None and self.grid[0] * self.grid[1] != len(self.mats):
            raise ContractError(f"grid {self.grid} does not hold {len(self.mats)} voxels")

    @property
    def count(self) -> int:
        return len(self.mats)

    def at(self, i: int, j: int) -> SpdPoint:
        return self.mats[i * self.grid[1] + j]


def _floats(tokens: Sequence[str], line: int) -> List[float]:
    try:
        vals = [float(t) for t in tokens]
    except ValueError as e:
        raise FieldParseError(f"bad number ({e})", line) from e
    if not all(math.isfinite(v) for v in vals):
        raise FieldParseError("non-finite number", line)
    return vals


def _ints(tokens: Sequence[str], count: int, line: int, what: str) -> List[int]:
    if len(tokens) != count:
        raise FieldParseError(f"expected {what}", line)
    try:
        vals = [int(t) for t in tokens]
    except ValueError as e:
        raise FieldParseError(f"expected {what}", line) from e
    if any(v < 1 for v in vals):
        raise FieldParseError(f"{what} must be positive", line)
    return vals


def load_field(path: str) -> TensorField:
    """
    Parse and validate a field file. Parse problems raise FieldParseError with
    the 1-based line number, non-SPD records raise SpdValidationError with the
    record index and smallest eigenvalue.
    """
    with open(path, "r") as f:
        lines = [(i + 1, ln.split()) for i, ln in enumerate(f.read().splitlines())]
    lines = [(i, toks) for i, toks in lines if toks]
    if not lines:
        raise FieldParseError("empty file", 1)

    pos = 0
    n, m = _ints(lines[0][1], 2, lines[0][0], "header 'n m'")
    pos += 1
    grid = None
    if pos < len(lines) and lines[pos][1][0] == "grid:":
        grid = tuple(_ints(lines[pos][1][1:], 2, lines[pos][0], "'grid: H W'"))
        if grid[0] * grid[1] != m:
            raise FieldParseError(f"grid {grid[0]}x{grid[1]} does not hold {m} voxels", lines[pos][0])
        pos += 1

    mats = []
    for rec in range(m):
        rows = []
        for _ in range(n):
            if pos >= len(lines):
                raise FieldParseError(f"unexpected end of file in record {rec}",
                                      lines[-1][0] + 1)
            line_no, toks = lines[pos]
            if len(toks) != n:
                raise FieldParseError(f"expected {n} values, got {len(toks)}", line_no)
            rows.append(_floats(toks, line_no))
            pos += 1
        mat = torch.tensor(rows, dtype=DTYPE)
        try:
            mats.append(SpdPoint(mat))
        except SpdValidationError as e:
            raise SpdValidationError(str(e), e.min_eig, index=rec) from e
        except ContractError as e:
            raise SpdValidationError(str(e), index=rec) from e

    weights = []
    if pos < len(lines) and lines[pos][1][0] == "weights:":
        line_no, toks = lines[pos]
        weights = _floats(toks[1:], line_no)
        if len(weights) != m or any(not w > 0.0 for w in weights):
            raise FieldParseError(f"expected {m} positive weights", line_no)
        pos += 1
    if pos < len(lines):
        raise FieldParseError("trailing content", lines[pos][0])
    return TensorField(n, mats, weights, grid)


def save_field(fld: TensorField, path: str):
    """Canonical writer, floats in shortest round-trip form"""
    out = [f"{fld.dim} {fld.count}"]
    if fld.grid is not None:
        out.append(f"grid: {fld.grid[0]} {fld.grid[1]}")
    for p in fld.mats:
        for row in p.mat.tolist():
            out.append(" ".join(repr(float(v)) for v in row))
    if any(w != 1.0 for w in fld.weights):
        out.append("weights: " + " ".join(repr(float(w)) for w in fld.weights))
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(out) + "\n")


def _clean_voxel(n: int, s: float, r: float) -> torch.Tensor:
    """Smooth SPD-valued function of the normalized grid position (s, r)"""
    k = torch.arange(n, dtype=DTYPE)
    lam = torch.exp(0.3 * torch.cos(math.pi * s + k) + 0.15 * torch.sin(math.pi * r - k))
    if n > 1:
        gen = skew_basis(n).sum(dim=0)
        q = torch.linalg.matrix_exp(0.25 * math.pi * (s + r) * gen)
    else:
        q = torch.eye(1, dtype=DTYPE)
    return symmetrize((q * lam) @ q.T)


def gen_synthetic(n: int, grid_dims: Tuple[int, int], noise_scale: float, seed: int,
                  impulse: float = 0.0, impulse_scale: float = 3.0) -> TensorField:
    """
    Synthetic tensor field on an H x W grid.
    Each voxel x of the clean field is moved to exp_x(x^1/2 G x^1/2) with G a random
    symmetric matrix of Frobenius norm noise_scale, so d(clean, noisy) == noise_scale.
    With probability impulse a voxel gets impulse_scale instead (outliers).

    :return: TensorField with grid set; the clean field exactly when both noise levels are 0
    """
    if noise_scale < 0.0 or impulse_scale < 0.0:
        raise ContractError("noise scales must be nonnegative")
    if not 0.0 <= impulse <= 1.0:
        raise ContractError("impulse must be a probability")
    h, w = grid_dims
    gen = torch.Generator().manual_seed(int(seed))
    mats = []
    for i in range(h):
        for j in range(w):
            x = SpdPoint(_clean_voxel(n, i / max(h - 1, 1), j / max(w - 1, 1)))
            g = symmetrize(torch.randn(n, n, generator=gen, dtype=DTYPE))
            hit = torch.rand(1, generator=gen, dtype=DTYPE).item() < impulse
            scale = impulse_scale if hit else noise_scale
            if scale > 0.0:
                g = g * (scale / torch.linalg.norm(g))
                x = exp_map(x, TangentVec(x, x.sqrt @ g @ x.sqrt))
            mats.append(x)
    return TensorField(n, mats, grid=(h, w))


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def write_trace_csv(trace: ProxTrace, path: str):
    with open(path, "w", newline="") as f:
        wr = csv.writer(f, lineterminator="\n")
        wr.writerow(TRACE_COLUMNS)
        for rec in trace.records:
            wr.writerow([_fmt(getattr(rec, col)) for col in TRACE_COLUMNS])
