"""Exception hierarchy shared across the package."""


class VistrError(Exception):
    """Base class for all package errors."""


class ParseError(VistrError):
    """A cell failed to parse; carries 1-based row and column."""

    def __init__(self, row, col, message=""):
        self.row = row
        self.col = col
        super().__init__(message or f"cannot parse cell at row {row}, column {col}")


class SchemaError(VistrError):
    """Table-level structural problem (duplicate timestamps, too few rows, ...)."""


class RenderError(VistrError):
    """Facet cannot be rendered with the requested chart type."""


class EmptySketchError(VistrError):
    """Sketch or image contains no ink."""


class UnknownTrendError(VistrError):
    """No token of the phrase maps into the trend vocabulary."""

    def __init__(self, phrase, suggestions=()):
        self.phrase = phrase
        self.suggestions = list(suggestions)
        hint = f"; did you mean: {', '.join(self.suggestions)}" if self.suggestions else ""
        super().__init__(f"unknown trend phrase: {phrase!r}{hint}")


class AmbiguousTrendError(VistrError):
    """Phrase maps to more than one trend category."""

    def __init__(self, phrase, categories):
        self.phrase = phrase
        self.categories = list(categories)
        super().__init__(f"ambiguous trend phrase {phrase!r}: matches {self.categories}")


class LabelError(VistrError):
    """A retrieval-evaluation row is missing its category label."""


class DivergenceError(VistrError):
    """Training loss became non-finite."""

    def __init__(self, epoch):
        self.epoch = epoch
        super().__init__(f"non-finite loss at epoch {epoch}")


class StoreError(VistrError):
    """Vector store misuse (duplicate ids, mixed tables, ...)."""


class FormatError(VistrError):
    """Persisted store is corrupt or has an incompatible version."""


class EmptyResult(VistrError):
    """A query matched nothing (empty index or empty filter result)."""


class NoMatchError(VistrError):
    """Query execution found no matching reference."""


class UnsupportedQueryError(VistrError):
    """Utterance does not match any supported query form."""

    def __init__(self, text, supported):
        self.text = text
        self.supported = list(supported)
        super().__init__(
            f"unsupported query: {text!r}; supported forms: " + "; ".join(self.supported)
        )


class VariableError(VistrError):
    """Unknown variable name."""


class PeriodError(VistrError):
    """Time period could not be parsed."""
