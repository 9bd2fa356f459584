from .defs import *
from .spd import (SpdPoint, TangentVec, distance, exp_map, geodesic, geodesic_segment, identity,
                  log_map, random_spd)
from .reducible import DiagPD, Normalizer, OrthoFrame, SkewTangent, decompose, phi, reconstruct
from .objectives import Objective, ProxObjective, karcher_objective, median_objective, trace_objective
from .subgrad import ArmijoParams, DiagSpace, OrthSpace, SpdSpace, minimize
from .prox import ProxConfig, ProxTrace, epp_solve, ipp_solve, prox_step
from .field import TensorField, gen_synthetic, load_field, save_field, write_trace_csv
from .version import __version__
