"""Exception types shared across the pipeline."""


class EvsegError(Exception):
    """Base class for all library errors."""


class EmptySlice(EvsegError):
    """An operation that needs events (or supported pixels) got none."""


class TooFewEvents(EvsegError):
    """A model fit was requested on fewer events than the configured minimum."""


class TooFewTracklets(EvsegError):
    """Clustering was requested with K larger than the number of tracklets."""


class DegenerateCluster(EvsegError):
    """A pairwise cluster operation touched a cluster without a fitted model."""


class GridMismatch(EvsegError):
    """Two rasters that must share a pixel grid have different shapes."""


class InvalidScript(EvsegError):
    """A scene script is malformed or describes an unrenderable scene."""


class Unclassifiable(EvsegError):
    """A sequence falls in a gap between the stratification class ranges."""


class MissingGroundTruth(EvsegError):
    """Evaluation was asked for without usable ground-truth data."""


class InvariantViolation(EvsegError):
    """An internal consistency check failed; maps to CLI exit code 3."""
