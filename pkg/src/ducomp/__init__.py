"""Compressed-communication distributed optimization under coupled constraints.

Agents on an undirected graph minimize a sum of local costs tied together
by one equality constraint, exchanging quantized differential messages.
The package provides the mixing-matrix toolkit, the quadratic dispatch
problem with an exact oracle, three quantizer families with bit
accounting, the synchronous solver engine, and a sweep harness that emits
CSV traces.
"""

from .compression import (CompressedMessage, CompressorSpec, ScalingSchedule,
                          bits_per_message, q1_compress, q2_compress,
                          q3_compress, reference_update, scaled_diff_encode,
                          scaling_factor)
from .engine import (AgentState, AlgorithmParams, IterationRecord, Trace,
                     default_params, fixed_point_residual, init_state, run,
                     step, validate_params, write_trace_csv)
from .errors import (ConfigurationError, CostModelError, DegenerateProblemError,
                     DivergenceError, DucompError, NumericsError,
                     ParameterError, ShapeError, TopologyError,
                     WeightMatrixError)
from .experiments import ExperimentConfig, SweepResult, load_config, run_study
from .graph import (Topology, ValidationReport, WeightMatrix, build_ring,
                    build_weight_matrix, validate_weights)
from .kernels import active_backend
from .problem import (OptimalSolution, ProblemSpec, QuadraticCost,
                      build_dispatch_instance, constraint_violation,
                      cost_gradient, cost_value, kkt_oracle)

__version__ = "0.1.0"
