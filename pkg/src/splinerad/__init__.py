"""Spline-shaped edge-fed microstrip radiator synthesis.

Descriptor geometry, a fast physics proxy, figure-of-merit extraction, the
ramp-penalized design cost, an ordinary-kriging surrogate and a
kriging-assisted particle swarm optimizer.
"""
from ._kernels import BACKEND
from .cost import ProxyObjective, Requirements, Weights, ramp, term_cost, total_cost
from .errors import SplineRadError
from .geometry import (REFERENCE, DescriptorBounds, DescriptorVector, build_layout,
                       mirror_half, total_length, validate_descriptors)
from .metrics import (BandMetrics, extract_bdd, extract_hpbw, extract_pr, extract_sll,
                      metrics_over_band)
from .optimizer import (PsoConfig, RunHistory, SbdConfig, pso_optimize, pso_step,
                        sbd_optimize, time_saving)
from .proxy import (BandResponse, FrequencyGrid, ProxyConfig, SubstrateSpec, calibrate_proxy,
                    compute_pattern, compute_s11, electrical_lengths, evaluate,
                    import_response, microstrip_params)
from .surrogate import KrigingModel, TrainingSet, fit, lhs_sample, predict, update

__version__ = "0.1.0"
