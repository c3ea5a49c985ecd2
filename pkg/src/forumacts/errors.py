class ForumActsError(Exception):
    """Base class for all errors raised by forumacts."""


class ParameterError(ForumActsError, ValueError):
    pass


class ConfigurationError(ForumActsError):
    pass


class CorpusFormatError(ForumActsError):
    """A corpus record could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CorpusValidationError(ForumActsError):
    pass


class StateCollapseError(ForumActsError):
    """Raised when EM leaves fewer than two occupied states."""


class ExperimentError(ForumActsError):
    pass
