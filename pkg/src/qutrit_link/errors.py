"""Exception types shared across the package."""


class ProtocolError(ValueError):
    """A physical or numerical invariant of the protocol does not hold."""


class SolverError(ProtocolError):
    """The receiver pulse could not be designed for the given wavepacket."""


class OracleError(ProtocolError):
    """The exact branch integration drifted outside its tolerance."""


class ConfigError(ValueError):
    """Malformed, incomplete or inconsistent run configuration."""
