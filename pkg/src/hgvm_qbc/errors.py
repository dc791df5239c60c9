"""Exception hierarchy shared by the library and the CLI.

Every exception carries a short machine-readable ``category`` so the command
line front end can map failures onto exit codes without string matching.
"""


class HgvmError(Exception):
    category = "error"


class DomainError(HgvmError, ValueError):
    """An argument lies outside the domain of a closed-form expression."""

    category = "domain"


class ParameterError(HgvmError, ValueError):
    category = "parameter"


class ConfigError(HgvmError):
    """Malformed or inconsistent configuration text."""

    category = "config"

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class SimulationError(HgvmError):
    category = "simulation"


class DCMError(SimulationError):
    category = "dcm"


class ConstraintDriftError(SimulationError):
    category = "constraint-drift"


class NonFiniteStateError(SimulationError):
    category = "non-finite"


class ShootingError(SimulationError):
    """Periodic-orbit search did not converge."""
    category = "shooting"


class SingularClosureError(SimulationError):
    category = "singular-closure"


class ChatterError(SimulationError):
    category = "chatter"


class DesignError(HgvmError):
    category = "design"


class GainUnreachableError(DesignError, DomainError):
    category = "gain-unreachable"


class BelowCriticalValueError(DesignError):
    category = "below-critical-value"


class UnreachableReferenceError(DesignError):
    category = "unreachable-reference"
