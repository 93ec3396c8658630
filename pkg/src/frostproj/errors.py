class FrostprojError(Exception):
    """Base class; every precondition failure maps to CLI exit code 2."""


class ScaleTooCoarse(FrostprojError):
    pass


class RegimeMismatch(FrostprojError):
    pass


class MixedScales(FrostprojError):
    pass


class CertificationFailure(FrostprojError):
    pass


class DegenerateSeries(FrostprojError):
    pass


class ParameterOrder(FrostprojError):
    pass


class UnalignedScale(FrostprojError):
    pass


class TooLarge(FrostprojError):
    pass
