"""Exception and warning types shared across the package."""


class PointChannelsError(Exception):
    """Base class for every error raised by this package."""


class ShapeMismatch(PointChannelsError):
    """Input matrices have inconsistent or non-square shapes."""


class NotSelfAdjoint(PointChannelsError):
    """Boundary matrices fail the symmetry relation required for self-adjointness.

    For transfer matrices ``relation_index`` (1, 2 or 3) names the violated
    block relation.
    """

    def __init__(self, message, relation_index=None):
        super().__init__(message)
        self.relation_index = relation_index


class RankDeficient(PointChannelsError):
    """The stacked boundary matrix pair does not have maximal rank."""


class DegenerateSubspace(PointChannelsError):
    """A boundary subspace came out with the wrong dimension or is not Lagrangian."""


class NotConnecting(PointChannelsError):
    """The condition does not couple the two sides, so no transfer matrix exists."""


class NotSimultaneouslyDiagonalizable(PointChannelsError):
    """No common eigenbasis exists within tolerance (or commutators are borderline)."""


class NotReducible(PointChannelsError):
    """The system has a non-normal or non-commuting block; carries a witness."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class OnEssentialSpectrum(PointChannelsError):
    """Spectral parameter lies on [0, infinity) where the resolvent formula fails."""


class NotRegular(PointChannelsError):
    """The resolvent coefficient system is singular at this spectral point."""


class WindowTooCoarse(PointChannelsError):
    """Bound-state scan did not stabilize under grid refinement."""


class ParseError(PointChannelsError):
    """Malformed configuration or serialized object."""


class ToleranceWarning(UserWarning):
    """A check passed or failed within 10x of its tolerance."""
