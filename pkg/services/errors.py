# services/errors.py

"""
Exception hierarchy shared by the laboratory services.

Each class carries the process exit code the command line maps it to.
"""


class LabError(Exception):
    """Base class for laboratory errors"""
    exit_code = 2


class ArgumentError(LabError):
    """Malformed or out-of-range input (dimensions, signs, file contents)"""
    exit_code = 1


class StructuralError(LabError):
    """Input violates a structural hypothesis (nondegeneracy, boundedness, admissibility)"""
    exit_code = 1


class ComputationError(LabError):
    """A numerical routine failed to converge or produced unusable output"""
    exit_code = 2


class PropertyViolation(LabError):
    """A checked mathematical property failed beyond its error bars"""
    exit_code = 3
