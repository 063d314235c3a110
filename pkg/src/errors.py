"""Exception hierarchy for the toolkit. Validation problems are returned as data; these are raised."""


class ScivarError(Exception):
    """Base class for every error the toolkit raises on purpose."""


class ParseError(ScivarError):
    def __init__(self, message: str, *, line: int | None = None, document: str | None = None):
        where = []
        if document is not None:
            where.append(f"document {document}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.document = document


class RecordError(ScivarError):
    def __init__(self, message: str, *, index: int):
        super().__init__(f"record {index}: {message}")
        self.index = index


class AmbiguousOverlapError(ScivarError):
    def __init__(self, doc_ids: list[str]):
        super().__init__(f"ambiguous overlap between documents: {', '.join(doc_ids)}")
        self.doc_ids = doc_ids


class UndefinedScoreError(ScivarError):
    pass


class DimensionMismatchError(ScivarError):
    pass


class ConfigError(ScivarError):
    pass


class MissingDataError(ScivarError):
    pass


class PlotError(ScivarError):
    pass
