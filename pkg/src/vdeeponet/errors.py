"""Exception types shared across the package.

Each maps to one failure class of the public contracts; CLI commands translate
them into exit codes (config -> 2, solver/numerical -> 3, I/O -> 4).
"""


class VdonError(Exception):
    """Base class for all package errors."""


class ConfigurationError(VdonError):
    """Invalid run configuration, unbound graph leaf, or layout mismatch."""


class ShapeError(VdonError, ValueError):
    """Tensor/operand shapes are inconsistent."""


class ContractError(VdonError):
    """An internal contract is violated (e.g. non-scalar loss root)."""


class ArgumentError(VdonError, ValueError):
    """A plain argument is out of its documented range."""


class NumericalError(VdonError):
    """Non-finite values or a numerically unusable intermediate."""


class DatasetError(VdonError):
    """Training-set assembly received inconsistent pieces."""


class StateError(VdonError):
    """Operation requires state (e.g. a trained checkpoint) that is absent."""
