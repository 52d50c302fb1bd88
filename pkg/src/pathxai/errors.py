"""Exception hierarchy.

Every input/validation failure derives from :class:`PathXAIError` so the CLI can
map it to exit code 2. :class:`InvariantBreach` is reserved for internal
consistency failures (exit code 3).
"""


class PathXAIError(ValueError):
    """Base class for validation and input errors."""


class InvariantBreach(RuntimeError):
    """An internal invariant did not hold."""


# graph-core
class EmptyNodeSet(PathXAIError):
    pass


class InvalidNodeId(PathXAIError):
    pass


class UnknownEndpoint(PathXAIError):
    pass


class SelfLoop(PathXAIError):
    pass


class DuplicateLink(PathXAIError):
    pass


class SpaceTooLarge(PathXAIError):
    pass


# demo-data
class ParseError(PathXAIError):
    pass


class UnknownTopologyLabel(PathXAIError):
    pass


class OverlappingSets(PathXAIError):
    pass


class EmptySelected(PathXAIError):
    pass


class NoValidPath(PathXAIError):
    pass


# constraint-miner
class NoApplicableRecords(PathXAIError):
    pass


# intent
class IntentSyntaxError(PathXAIError):
    """Raised for malformed intent text; ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class ConflictingEntities(PathXAIError):
    pass


class MissingTemplate(PathXAIError):
    pass


# causal-structure
class TooManyInstances(PathXAIError):
    pass


class TraceMismatch(PathXAIError):
    pass


# executor-explainer
class UnboundEntity(PathXAIError):
    pass


class EmptySolutionSpace(PathXAIError):
    pass


class EmptyTarget(PathXAIError):
    pass


class InvalidPath(PathXAIError):
    pass
