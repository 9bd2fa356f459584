import torch

# Objective smoothness flags
SMOOTHNESS_DIFFERENTIABLE = 0
SMOOTHNESS_DATA_POINTS = 1   # nonsmooth only at the data points (median)
SMOOTHNESS_GENERAL = 2

DTYPE = torch.float64
EPS = torch.finfo(DTYPE).eps

SYM_REPAIR_TOL = 1e-8        # relative Frobenius asymmetry silently repaired below this
BOUNDARY_REL_TOL = 1e3 * EPS # lambda_min / lambda_max below this -> near_boundary
ORTHO_DRIFT_TOL = 1e-12      # re-orthonormalize frames beyond this drift
ORTHO_REJECT_TOL = 1e-6      # not a frame at all beyond this drift
SKEW_TOL = 1e-12
DIST_ZERO_TOL = 1e-12        # median terms closer than this are skipped
T_MIN = 1e-18                # backtracking underflow
MAX_GROWTH = 64              # forward loop stops at upsilon ** MAX_GROWTH

# CLI exit codes
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SPD = 3
EXIT_WARNING = 4
EXIT_NUMERIC = 5


class SpdError(Exception):
    pass


class ContractError(SpdError, ValueError):
    pass


class SpdValidationError(SpdError, ValueError):
    def __init__(self, msg: str, min_eig: float = float('nan'), index=None):
        if index is not None:
            msg = f"record {index}: {msg}"
        super().__init__(msg)
        self.min_eig = min_eig
        self.index = index


class NumericError(SpdError, ArithmeticError):
    pass


class FieldParseError(SpdError, ValueError):
    def __init__(self, msg: str, line: int):
        super().__init__(f"line {line}: {msg}")
        self.line = line
