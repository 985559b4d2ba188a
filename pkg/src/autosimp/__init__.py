"""Autonomous topology optimization: prompt -> spec -> solve -> evaluate."""

from .bc import BoundaryConditionWarning, SolverArrays, generate_bc
from .configurator import ConfigureError, configure, regex_fallback
from .controllers import CONTROLLER_KINDS, make_controller
from .evaluator import EvaluationReport, evaluate, make_rerun_hint
from .fem import SingularSystemError, assemble_and_solve
from .frames import decode_frame, encode_frame
from .llm import HttpChatBackend, LlmBackendConfig, MockBackend, make_backend
from .mesh import Mesh, mesh_from_spec
from .orchestrator import RunReport, run_from_spec, run_pipeline, strip_timings
from .solver import (
    BisectionFailedError,
    ControlParams,
    SolveHistory,
    SolveResult,
    STANDARD_TAIL,
    solve,
)
from .spec import (
    ProblemSpec,
    RailEntry,
    SpecParseError,
    SpecRejection,
    deserialize_spec,
    serialize_spec,
    spec_to_dict,
    validate_spec,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryConditionWarning",
    "SolverArrays",
    "generate_bc",
    "ConfigureError",
    "configure",
    "regex_fallback",
    "CONTROLLER_KINDS",
    "make_controller",
    "EvaluationReport",
    "evaluate",
    "make_rerun_hint",
    "SingularSystemError",
    "assemble_and_solve",
    "decode_frame",
    "encode_frame",
    "HttpChatBackend",
    "LlmBackendConfig",
    "MockBackend",
    "make_backend",
    "Mesh",
    "mesh_from_spec",
    "RunReport",
    "run_from_spec",
    "run_pipeline",
    "strip_timings",
    "BisectionFailedError",
    "ControlParams",
    "SolveHistory",
    "SolveResult",
    "STANDARD_TAIL",
    "solve",
    "ProblemSpec",
    "RailEntry",
    "SpecParseError",
    "SpecRejection",
    "deserialize_spec",
    "serialize_spec",
    "spec_to_dict",
    "validate_spec",
    "__version__",
]
