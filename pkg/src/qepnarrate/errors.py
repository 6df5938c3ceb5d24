"""Exception hierarchy shared by every module.

Each class carries the process exit code the CLI maps it to
(1 runtime error, 3 malformed input file).
"""


class QepNarrateError(Exception):
    exit_code = 1


# --- operator store -------------------------------------------------------

class StoreError(QepNarrateError):
    pass


class DuplicateOperator(StoreError):
    pass


class MissingMandatoryAttribute(StoreError):
    pass


class DanglingTarget(StoreError):
    pass


class NotFound(StoreError):
    pass


class UnknownSource(StoreError):
    pass


class UnknownAttribute(StoreError):
    pass


class InvariantViolation(StoreError):
    pass


class IoFailure(StoreError):
    pass


class CorruptStore(StoreError):
    exit_code = 3


# --- POOL language --------------------------------------------------------

class PoolError(QepNarrateError):
    pass


class LexError(PoolError):
    exit_code = 3

    def __init__(self, position, snippet, message="illegal input"):
        super().__init__(f"{message} at {position}: {snippet!r}")
        self.position = position
        self.snippet = snippet


class ParseError(PoolError):
    exit_code = 3

    def __init__(self, expected, found, position):
        super().__init__(f"expected {expected}, found {found!r} at {position}")
        self.expected = expected
        self.found = found
        self.position = position


class AmbiguousSubSelect(PoolError):
    pass


class UnknownOperatorInCompose(PoolError):
    pass


class NotAuxiliaryCriticalPair(PoolError):
    pass


# --- plans ----------------------------------------------------------------

class PlanError(QepNarrateError):
    exit_code = 3


class MalformedDocument(PlanError):
    pass


class MissingField(PlanError):
    def __init__(self, field):
        super().__init__(f"missing field {field!r}")
        self.field = field


class EmptySchema(QepNarrateError):
    pass


# --- translation ----------------------------------------------------------

class UnknownOperator(QepNarrateError):
    def __init__(self, node_type):
        super().__init__(f"no catalog operator for node type {node_type!r}")
        self.node_type = node_type


class UnboundTag(QepNarrateError):
    def __init__(self, tag):
        super().__init__(f"tag {tag} has no binding")
        self.tag = tag
