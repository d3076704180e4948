"""Asymptotic density, generic and coarse computability at desk scale."""
from . import constructions, density, eop, generic, machines, partition
from .density import NatSetPrefix, density_profile, prefix_density
from .errors import (
    BudgetExceeded,
    ContradictionError,
    DensityLabError,
    FormatError,
    InsufficientKnowledgeError,
    InvariantViolation,
    NotAFunctionError,
    UndefinedRatioError,
)
from .machines import MachineUniverse, Program, parse_program
from .partition import encode_R, f_enum, r_index

__version__ = "0.1.0"

__all__ = [
    "constructions",
    "density",
    "eop",
    "generic",
    "machines",
    "partition",
    "NatSetPrefix",
    "density_profile",
    "prefix_density",
    "MachineUniverse",
    "Program",
    "parse_program",
    "encode_R",
    "f_enum",
    "r_index",
    "DensityLabError",
    "InsufficientKnowledgeError",
    "UndefinedRatioError",
    "BudgetExceeded",
    "ContradictionError",
    "NotAFunctionError",
    "FormatError",
    "InvariantViolation",
]
