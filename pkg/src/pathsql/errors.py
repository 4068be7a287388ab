"""Exception hierarchy shared across the package."""


class PathsqlError(Exception):
    """Base class for all package errors."""


class DdlError(PathsqlError):
    """DDL syntax or structural error, carrying source position."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", col {column}" if column is not None else "") + ")"
        super().__init__(message + loc)


class ModelError(PathsqlError):
    """Database-model construction or reference error."""


class RetrievalEmptyError(PathsqlError):
    """The retrieval phase selected no tables for a question."""

    def __init__(self, question_text):
        self.question_text = question_text
        super().__init__(f"retrieval empty for question: {question_text!r}")


class Infeasible(PathsqlError):
    """No walk satisfying the constraints exists within the length bound."""

    def __init__(self, max_len_tried):
        self.max_len_tried = max_len_tried
        super().__init__(f"no feasible walk within max_len={max_len_tried}")


class LlmError(PathsqlError):
    """LLM transport, scripting, or exhaustion failure."""

    def __init__(self, message, prompt_digest=None):
        self.prompt_digest = prompt_digest
        if prompt_digest:
            message = f"{message} [prompt digest {prompt_digest}]"
        super().__init__(message)


class ExtractionError(PathsqlError):
    """No SQL could be extracted from an LLM completion."""

    def __init__(self, raw_text):
        self.raw_text = raw_text
        super().__init__(f"no SQL found in completion: {raw_text[:200]!r}")


class PhaseError(PathsqlError):
    """A pipeline phase failed; wraps the underlying error with phase context."""

    def __init__(self, phase, cause, partial=None):
        self.phase = phase
        self.cause = cause
        self.partial = partial
        super().__init__(f"phase {phase} failed: {cause}")
