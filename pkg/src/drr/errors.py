"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class DrrError(Exception):
    """Base class for all pipeline errors."""


class DatasetError(DrrError):
    pass


class MalformedLine(DatasetError):
    def __init__(self, path: str, line_number: int, reason: str):
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}:{line_number}: {reason}")


class DuplicateId(DatasetError):
    def __init__(self, item_id: str):
        self.item_id = item_id
        super().__init__(f"duplicate item id: {item_id!r}")


class GoldIndexOutOfRange(DatasetError):
    def __init__(self, item_id: str, gold_index: int, n_choices: int):
        self.item_id = item_id
        super().__init__(
            f"item {item_id!r}: answer_index {gold_index} out of range for {n_choices} choices"
        )


class ContextLengthMismatch(DrrError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"expected {expected} context pairs for this turn, got {got}")


class UnparseableAnswer(DrrError):
    def __init__(self, raw: str):
        self.raw = raw
        super().__init__(f"no valid answer found in response: {raw[:200]!r}")


class RemoteError(DrrError):
    def __init__(self, status: int | None, body: str):
        self.status = status
        self.body = body
        super().__init__(f"remote call failed (status={status}): {body[:300]}")


class FixtureMissing(DrrError):
    def __init__(self, item_id: str, turn: int):
        super().__init__(f"no fixture response for id={item_id!r} turn={turn}")


class EmptyCorpus(DrrError):
    pass


class FileFormatError(DrrError):
    pass


class VersionMismatch(DrrError):
    pass


class MissingGold(DrrError):
    def __init__(self, item_id: str):
        super().__init__(f"outcome id {item_id!r} not present in gold dataset")
