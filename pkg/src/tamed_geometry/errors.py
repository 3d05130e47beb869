"""Exception types shared across the package."""


class GeometryError(ValueError):
    """Base class for geometric precondition failures."""


class DomainError(GeometryError):
    """Input outside the mathematical domain of an operation."""


class DegeneracyError(GeometryError):
    """An immersion differential lost rank at a sampled point."""


class NotTamedError(GeometryError):
    """A divergent / non-tamed input reached a module that requires tamedness."""


class LevelError(GeometryError):
    """A level parameter c is outside its admissible range."""


class LevelSetError(GeometryError):
    """A requested level set is empty or otherwise unusable."""


class CriticalPointError(GeometryError):
    """The tangential gradient of the extrinsic distance vanished."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ParseError(ValueError):
    """Syntax or name error while parsing an immersion expression."""

    def __init__(self, message, offset):
        super().__init__(f"parse error at offset {offset}: {message}")
        self.offset = offset


class EvaluationError(ValueError):
    """Expression evaluation produced a non-finite value or hit a domain edge."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class SolverError(RuntimeError):
    """An iterative solver failed to bracket or converge."""


class DecompositionError(SolverError):
    """A sparse factorization failed (e.g. singular stiffness matrix)."""


class ConfigError(ValueError):
    """A run configuration failed validation."""
