"""Exception types shared across the package."""


class CutVemError(Exception):
    """Base class for all package-specific errors."""


# --- mesh construction and surgery ---

class NonSimplePolygon(CutVemError):
    pass


class NonManifoldEdge(CutVemError):
    pass


class DanglingVertex(UserWarning):
    """A vertex referenced by no face (warning category)."""


class MergeRejected(CutVemError):
    """A face merge was refused. `reason` is one of the REASONS strings."""

    NOT_ADJACENT = "NotAdjacent"
    PINCH_VERTEX = "PinchVertex"
    MULTIPLE_CHAINS = "MultipleChains"
    DOMAIN_MISMATCH = "DomainMismatch"
    REASONS = (NOT_ADJACENT, PINCH_VERTEX, MULTIPLE_CHAINS, DOMAIN_MISMATCH)

    def __init__(self, reason, detail=""):
        assert reason in self.REASONS, reason
        self.reason = reason
        super().__init__(f"{reason}{': ' + detail if detail else ''}")


class IndexOutOfRange(CutVemError, IndexError):
    pass


class ParseError(CutVemError):
    def __init__(self, path, lineno, message):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


# --- embedding / cutting ---

class InvertedTriangle(CutVemError):
    pass


class NotATriangulation(CutVemError):
    """A sign-changing face has an unsupported zero-crossing topology."""


class DegenerateCut(CutVemError):
    pass


class EmptyResult(CutVemError):
    pass


# --- element matrices ---

class SingularG(CutVemError):
    pass


class UnexpectedNullSpace(CutVemError):
    pass


class NegativeJacobian(CutVemError):
    pass


# --- linear algebra ---

class NotConverged(CutVemError):
    pass


class NotSPD(CutVemError):
    pass


class TooManyNullModes(CutVemError):
    pass


# --- solver ---

class NoDirichlet(CutVemError):
    pass


class FemOnPolygon(CutVemError):
    pass


class EarClipFailure(CutVemError):
    pass


class UnknownPreset(CutVemError):
    pass


class ConfigError(CutVemError):
    pass
