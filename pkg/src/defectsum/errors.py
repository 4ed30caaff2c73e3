"""Exception and warning types shared across the package."""


class DefectsumError(Exception):
    """Base class for invalid input and hypothesis violations."""


class EmptyConfig(DefectsumError):
    """Configuration contains no singularities."""


class SeparationViolation(DefectsumError):
    """Two singular supports overlap or touch."""

    def __init__(self, first, second, distance):
        self.first = first
        self.second = second
        self.distance = distance
        super().__init__(
            f"supports {first!r} and {second!r} are not separated "
            f"(gap {distance:.6g} <= 0)"
        )


class UnsupportedPotential(DefectsumError):
    """Potential variant outside the radial point/shell model."""


class DimensionTooLarge(DefectsumError):
    """Restriction dimension exceeds a finite deficiency index."""


class DimensionTooSmall(DefectsumError):
    """Space dimension below the minimum for the requested bound."""


class IntegrationFailure(DefectsumError):
    """Adaptive integrator could not reach the innermost window."""


class NonFiniteCoefficient(DefectsumError):
    """Radial coefficient evaluated to a non-finite value."""


class TruncationTooSmall(DefectsumError):
    """Channel table truncated before the first limit-point entry."""


class ShellIndeterminate(DefectsumError):
    """Shell endpoint classification fell inside the resolution band."""

    def __init__(self, band, message=""):
        self.band = band
        super().__init__(message or f"shell classification indeterminate (band {band:g})")


class IndeterminateClassification(DefectsumError):
    """An endpoint classification was indeterminate where a count was needed."""


class UnboundedRemainder(DefectsumError):
    """Profile unbounded on its localization annulus."""


class RegionsTooClose(DefectsumError):
    """Cutoff region pair closer than the requested transition scale."""


class HardyViolation(DefectsumError):
    """Coupling at or above the Hardy threshold; no sub-unit form bound."""


class InadmissibleExponent(DefectsumError):
    """Integrability exponent outside the admissible range for the dimension."""


class ConfigFormatError(DefectsumError):
    """Malformed or unrecognized configuration data."""


class BorderlineChannelWarning(UserWarning):
    """A channel coupling sits within rounding distance of the threshold."""


class DeclaredEpsilonMismatch(UserWarning):
    """Declared separation hint disagrees with the computed value."""
