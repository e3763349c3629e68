from .kernels import SeriesCapError


class LaxkitError(Exception):
    pass


class PoleError(LaxkitError, ValueError):
    """An argument sits closer than ``eps_pole`` to a lattice point."""


class SpaceMismatchError(LaxkitError, ValueError):
    pass


class DimensionCapError(LaxkitError, ValueError):
    pass


class HermiticityError(LaxkitError, ValueError):
    def __init__(self, deviation, tol):
        super().__init__(f"operator is not Hermitian: relative deviation {deviation:.3e} > {tol:.1e}")
        self.deviation = deviation
        self.tol = tol


class BackendError(LaxkitError, ValueError):
    """Model and elliptic backend are incompatible."""


class ConfigError(LaxkitError, ValueError):
    pass


__all__ = [
    "LaxkitError",
    "PoleError",
    "SpaceMismatchError",
    "DimensionCapError",
    "HermiticityError",
    "BackendError",
    "ConfigError",
    "SeriesCapError",
]
