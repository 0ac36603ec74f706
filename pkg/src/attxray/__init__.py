"""Attenuated X-ray transforms on simple surfaces with unitary connections.

Numerical tools for the geodesic flow of conformal disk metrics, the
attenuation propagator of a unitary connection, vertical Fourier calculus on
the unit circle bundle, boundary range characterizations of the attenuated
transform on functions, 1-forms and symmetric tensors, and the connection
Hodge theory that enters them.
"""

from .connection import (ExteriorCalculus, GaugeTransformed, MetricConnection,
                         PolynomialConnection, ZeroConnection, connection_from_config,
                         random_gauge, random_polynomial_connection)
from .fiber import FiberCalculus, FiberFunction
from .geometry import (CapMetric, EuclideanMetric, FanGrid, GridMetric, HyperbolicMetric,
                       flow_to_boundary, geodesic_from_boundary, metric_from_config,
                       scattering_relation, simplicity_check)
from .grid import DiskGrid, random_smooth_field
from .hodge import HodgeSolver, IndeterminateDimensionError
from .range_ops import (RangeTestReport, adjoint_duality, factorization_check,
                        range_test_0form, range_test_1form, solve_adjoint0, solve_adjoint1)
from .tensor import (TensorRangeModel, connection_from_h, invariant_witness, reduction_check,
                     tensor_range_test, tensor_transform)
from .transport import (BoundaryFunction, CollarWitnessBasis, ScatteringData, TransportModel,
                        WitnessBasis)

__version__ = "0.1.0"

__all__ = [
    "BoundaryFunction", "CapMetric", "CollarWitnessBasis", "DiskGrid", "EuclideanMetric",
    "ExteriorCalculus", "FanGrid", "FiberCalculus", "FiberFunction", "GaugeTransformed",
    "GridMetric", "HodgeSolver", "HyperbolicMetric", "IndeterminateDimensionError",
    "MetricConnection", "PolynomialConnection", "RangeTestReport", "ScatteringData",
    "TensorRangeModel", "TransportModel", "WitnessBasis", "ZeroConnection",
    "adjoint_duality", "connection_from_config", "connection_from_h", "factorization_check",
    "flow_to_boundary", "geodesic_from_boundary", "invariant_witness", "metric_from_config",
    "random_gauge", "random_polynomial_connection", "random_smooth_field", "range_test_0form",
    "range_test_1form", "reduction_check", "scattering_relation", "simplicity_check",
    "solve_adjoint0", "solve_adjoint1", "tensor_range_test", "tensor_transform",
]
