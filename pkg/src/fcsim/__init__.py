"""Field/circuit coupled DAE simulator.

Modified nodal analysis with generalized inductance-like elements, two
gauged magnetoquasistatic field formulations discretized by the finite
integration technique, topological index classification, and an implicit
Euler integrator with consistent initialization.
"""

from .netlist import NetlistDocument, NetlistError, Waveform, parse_netlist, serialize_netlist
from .topology import classify_index, check_well_posed, incidence_blocks, kernel_projector
from .elements import (
    FluxInductorElement,
    GeneralizedElement,
    LinearInductorElement,
    verify_inductance_like,
)
from .mna import CoupledDaeSystem, assemble
from .solver import (
    SolverConfig,
    TimeSeries,
    consistent_init,
    element_pencil,
    implicit_euler,
    linearize,
    pencil_index,
)
from .formulations import (
    AStarElement,
    TOmegaElement,
    build_astar,
    build_tomega,
    helmholtz_split,
    l_lambda_astar,
    l_lambda_tomega,
    load_field_element,
)

__version__ = "0.1.0"

__all__ = [
    "NetlistDocument",
    "NetlistError",
    "Waveform",
    "parse_netlist",
    "serialize_netlist",
    "classify_index",
    "check_well_posed",
    "incidence_blocks",
    "kernel_projector",
    "GeneralizedElement",
    "LinearInductorElement",
    "FluxInductorElement",
    "verify_inductance_like",
    "CoupledDaeSystem",
    "assemble",
    "SolverConfig",
    "TimeSeries",
    "consistent_init",
    "element_pencil",
    "implicit_euler",
    "linearize",
    "pencil_index",
    "AStarElement",
    "TOmegaElement",
    "build_astar",
    "build_tomega",
    "helmholtz_split",
    "l_lambda_astar",
    "l_lambda_tomega",
    "load_field_element",
    "__version__",
]
