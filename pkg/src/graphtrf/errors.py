"""Exception hierarchy shared across the package."""


class GraphTrfError(Exception):
    """Base class for all package errors."""


class ConfigError(GraphTrfError, ValueError):
    pass


class GenerationExhausted(GraphTrfError):
    """No valid graph was produced within the attempt budget."""


class InvalidNode(GraphTrfError, ValueError):
    pass


class CycleDetected(GraphTrfError):
    pass


class Unreachable(GraphTrfError):
    pass


class NotBipartite(GraphTrfError, ValueError):
    pass


class SearchBudgetExceeded(GraphTrfError):
    """Backtracking search gave up before reaching a verdict."""


class UnsupportedCombination(GraphTrfError, ValueError):
    """The requested representation has no template for this task/graph."""


class RendererMissing(GraphTrfError):
    pass


class RenderFailed(GraphTrfError):
    def __init__(self, message: str, stderr: str = ""):
        super().__init__(message)
        self.stderr = stderr


class EmptyRuns(GraphTrfError, ValueError):
    pass


class EmptyRecords(GraphTrfError, ValueError):
    pass


class ZeroAccuracy(GraphTrfError, ValueError):
    """The log-accuracy objective is undefined at zero accuracy."""


class ProfileMissing(GraphTrfError, KeyError):
    pass


class ClientError(GraphTrfError):
    """Base for failures talking to a chat endpoint."""


class AuthError(ClientError):
    pass


class RateLimited(ClientError):
    pass


class Transport(ClientError):
    pass


class MalformedResponse(ClientError):
    pass


class ProbeError(GraphTrfError):
    """A client or render failure annotated with its probe coordinates."""

    def __init__(self, question_id: str, trf: str, run_idx: int, cause: BaseException):
        super().__init__(f"probe failed at question={question_id} trf={trf} run={run_idx}: {cause}")
        self.question_id = question_id
        self.trf = trf
        self.run_idx = run_idx
        self.cause = cause


class DimensionMismatch(GraphTrfError, ValueError):
    pass


class Degenerate(GraphTrfError):
    """Training made no progress on a dataset with a single label pattern."""


class IncompleteJournal(GraphTrfError):
    pass
