"""Exception classes. Each carries the CLI exit code it maps to."""


class QSplitError(Exception):
    exit_code = 1


class InvalidMatrix(QSplitError, ValueError):
    exit_code = 2


class InvalidArg(QSplitError, ValueError):
    exit_code = 2


class DimMismatch(QSplitError, ValueError):
    exit_code = 2


class NotHermitian(QSplitError, ValueError):
    exit_code = 4


class NotPSD(QSplitError, ValueError):
    exit_code = 4


class NonUnimodularQ(QSplitError, ValueError):
    exit_code = 3


class QNotCommutingWithOperators(QSplitError):
    exit_code = 1


class NotQCommuting(QSplitError):
    exit_code = 1


class NotAContraction(QSplitError):
    exit_code = 4


class NotCNU(QSplitError):
    exit_code = 4


class NotDoublyCommuting(QSplitError):
    exit_code = 5


class UnsupportedSignature(QSplitError, ValueError):
    exit_code = 2


class InternalError(QSplitError, RuntimeError):
    exit_code = 1
