"""Exception hierarchy."""


class OzfError(Exception):
    """Base class for all errors raised by this package."""


class PlantError(OzfError):
    """Malformed or unsuitable plant data (instability, poles on the circle)."""


class DegenerateLPError(OzfError):
    """The simplex iteration guard was exceeded."""


class DegenerateMultiplierError(OzfError):
    """A multiplier that certifies nothing (t* <= 0 or M == 0)."""


class ConstructionError(OzfError):
    """An invariant of the destabilizer construction failed numerically."""


class CertificateError(OzfError):
    """A dual or loop certificate is inconsistent."""
